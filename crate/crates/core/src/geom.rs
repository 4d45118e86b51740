//! Models of the hyperbolic plane and hyperbolic space: Poincaré disk and
//! ball, upper half-plane and half-space, the transforms between them, and
//! the conformal data that enter every tension computation.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::BidiskGrid;
use crate::grid::{AngularScheme, Derivs};

/// Largest Euclidean norm used inside closed-form distances. Points closer to
/// the sphere are pulled back to this radius so that `1 - |w|^2` stays
/// representable.
pub const NORM_CLAMP: f64 = 1.0 - 1e-14;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Boundary defining function `1 - |zeta|^2` of a disk factor.
#[inline]
pub fn rho(zeta: [f64; 2]) -> f64 {
    1.0 - zeta[0] * zeta[0] - zeta[1] * zeta[1]
}

/// Cayley chart of the disk onto the right half-plane `{x > 0}`, anchored at
/// the boundary point `e^{i anchor}`: `H = (1 - zeta e^{-i a}) / (1 + zeta e^{-i a})`.
/// The anchor goes to the origin, the center to `(1, 0)`, and the ray toward
/// the anchor to the positive `x` axis. Returns `(x, y)`.
pub fn disk_to_halfplane(zeta: [f64; 2], anchor: f64) -> Result<[f64; 2]> {
    let (s, c) = anchor.sin_cos();
    // q = zeta * e^{-i anchor}
    let q = [zeta[0] * c + zeta[1] * s, zeta[1] * c - zeta[0] * s];
    let den = (1.0 + q[0]).powi(2) + q[1] * q[1];
    if den < 1e-300 {
        return Err(Error::AntipodalSingularity(zeta));
    }
    // (1 - q)(1 + conj q) / |1 + q|^2
    let re = 1.0 - q[0] * q[0] - q[1] * q[1];
    let im = -2.0 * q[1];
    Ok([re / den, im / den])
}

/// Inverse of [`disk_to_halfplane`]; `zeta = e^{i a} (1 - H) / (1 + H)`.
pub fn halfplane_to_disk(h: [f64; 2], anchor: f64) -> [f64; 2] {
    let den = (1.0 + h[0]).powi(2) + h[1] * h[1];
    let re = (1.0 - h[0] * h[0] - h[1] * h[1]) / den;
    let im = -2.0 * h[1] / den;
    let (s, c) = anchor.sin_cos();
    [re * c - im * s, re * s + im * c]
}

/// Hyperbolic distance in the Poincaré ball (curvature -1).
pub fn hyperbolic_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    let na = norm_sq(a);
    let nb = norm_sq(b);
    for n in [na, nb] {
        if n >= 1.0 {
            return Err(Error::OnBoundary { norm: n.sqrt() });
        }
    }
    Ok(ball_distance_unchecked(a, b))
}

/// [`hyperbolic_distance`] without the domain check; norms are clamped to
/// [`NORM_CLAMP`].
pub fn ball_distance_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let floor = 1.0 - NORM_CLAMP * NORM_CLAMP;
    let da = (1.0 - norm_sq(a)).max(floor);
    let db = (1.0 - norm_sq(b)).max(floor);
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    2.0 * (diff / (da * db)).sqrt().asinh()
}

/// Hyperbolic distance in the upper half-space model (height first).
pub fn halfspace_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a[0] <= 0.0 {
        return Err(Error::NonpositiveHeight(a[0]));
    }
    if b[0] <= 0.0 {
        return Err(Error::NonpositiveHeight(b[0]));
    }
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(2.0 * (diff.sqrt() / (2.0 * (a[0] * b[0]).sqrt())).asinh())
}

/// Gradient of the log conformal factor `log(2 / (1 - |w|^2))` of the ball.
pub fn ball_log_factor_gradient(w: &[f64], out: &mut [f64]) {
    let s = 2.0 / (1.0 - norm_sq(w));
    for (o, x) in out.iter_mut().zip(w) {
        *o = s * x;
    }
}

/// Hessian of the ball log conformal factor, row-major `dim x dim`:
/// `2 I / (1 - |w|^2) + 4 w w^T / (1 - |w|^2)^2`.
pub fn ball_log_factor_hessian(w: &[f64], out: &mut [f64]) {
    let d = w.len();
    let q = 1.0 / (1.0 - norm_sq(w));
    for i in 0..d {
        for j in 0..d {
            let diag = if i == j { 2.0 * q } else { 0.0 };
            out[i * d + j] = diag + 4.0 * q * q * w[i] * w[j];
        }
    }
}

/// Christoffel symbols `Gamma^k_ij` of a conformally flat metric `e^{2 psi}`
/// given the gradient of `psi`; stored at `k * d * d + i * d + j`.
pub fn conformal_christoffel(grad_psi: &[f64]) -> Vec<f64> {
    let d = grad_psi.len();
    let mut out = vec![0.0; d * d * d];
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut v = 0.0;
                if i == k {
                    v += grad_psi[j];
                }
                if j == k {
                    v += grad_psi[i];
                }
                if i == j {
                    v -= grad_psi[k];
                }
                out[k * d * d + i * d + j] = v;
            }
        }
    }
    out
}

/// Upper half-space chart of the ball obtained by inversion in the sphere of
/// radius `sqrt 2` about a boundary pole `P`, followed by an orthonormal frame
/// whose first axis is `-P` (the height).
///
/// `-P` maps to the chart origin, the ball center to height 1, and the
/// sphere minus the pole to `{u0 = 0}`. The map is an isometry of the
/// hyperbolic metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceChart {
    pole: Vec<f64>,
    /// Rows: height axis `-P`, then tangential axes spanning `P^perp`.
    frame: Vec<Vec<f64>>,
}

impl HalfSpaceChart {
    /// The first tangential axis is `J P = (-P_1, P_0, 0, ...)` when that is
    /// nonzero, so that for planar targets a disk chart anchored at angle `a`
    /// and a target chart with pole `-e^{ia}` agree on the identity map.
    pub fn new(pole: &[f64]) -> Result<Self> {
        let d = pole.len();
        if d < 2 {
            return Err(Error::ShapeMismatch(format!("target dimension {d} < 2")));
        }
        let n = norm_sq(pole).sqrt();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidGrid(format!("chart pole has norm {n}, expected 1")));
        }
        let p: Vec<f64> = pole.iter().map(|x| x / n).collect();
        let mut frame: Vec<Vec<f64>> = vec![p.iter().map(|x| -x).collect()];
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        let mut jp = vec![0.0; d];
        jp[0] = -p[1];
        jp[1] = p[0];
        candidates.push(jp);
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            candidates.push(e);
        }
        for mut c in candidates {
            if frame.len() == d {
                break;
            }
            for f in &frame {
                let proj = dot(&c, f);
                for (ci, fi) in c.iter_mut().zip(f) {
                    *ci -= proj * fi;
                }
            }
            let cn = norm_sq(&c).sqrt();
            if cn > 1e-8 {
                c.iter_mut().for_each(|x| *x /= cn);
                frame.push(c);
            }
        }
        Ok(Self { pole: p, frame })
    }

    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    pub fn dim(&self) -> usize {
        self.pole.len()
    }

    fn invert(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let d2: f64 = w.iter().zip(&self.pole).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < 1e-300 {
            return Err(Error::PoleSingularity);
        }
        for ((o, a), b) in out.iter_mut().zip(w).zip(&self.pole) {
            *o = b + 2.0 * (a - b) / d2;
        }
        Ok(())
    }

    /// Frame rows applied to a vector (the linear part after inversion).
    pub(crate) fn frame_apply(&self, v: &[f64]) -> Vec<f64> {
        self.frame.iter().map(|f| dot(f, v)).collect()
    }

    /// Ball coordinates to chart coordinates `(u0, u1, ..., un)`.
    pub fn to_chart(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; w.len()];
        self.to_chart_into(w, &mut out)?;
        Ok(out)
    }

    pub fn to_chart_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let mut inv = [0.0; crate::MAX_TARGET_DIM];
        let inv = &mut inv[..w.len()];
        self.invert(w, inv)?;
        for (o, f) in out.iter_mut().zip(&self.frame) {
            *o = dot(f, inv);
        }
        Ok(())
    }

    /// Chart coordinates back to the ball (inversion is an involution).
    pub fn from_chart(&self, u: &[f64]) -> Result<Vec<f64>> {
        let d = u.len();
        let mut v = vec![0.0; d];
        for (ui, f) in u.iter().zip(&self.frame) {
            for (vk, fk) in v.iter_mut().zip(f) {
                *vk += ui * fk;
            }
        }
        let mut out = vec![0.0; d];
        self.invert(&v, &mut out)?;
        Ok(out)
    }

    /// Push a chart tangent vector at chart point `u` forward to ball
    /// coordinates.
    pub fn push_to_ball(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let d = u.len();
        let mut x = vec![0.0; d];
        let mut dv = vec![0.0; d];
        for ((ui, vi), f) in u.iter().zip(v).zip(&self.frame) {
            for k in 0..d {
                x[k] += ui * f[k];
                dv[k] += vi * f[k];
            }
        }
        let diff: Vec<f64> = x.iter().zip(&self.pole).map(|(a, b)| a - b).collect();
        let d2 = norm_sq(&diff);
        let proj = dot(&diff, &dv);
        dv.iter()
            .zip(&diff)
            .map(|(a, b)| 2.0 / d2 * (a - 2.0 * proj * b / d2))
            .collect()
    }
}

/// Ball isometry sending the origin to `a` (`|a| < 1`):
/// `x -> ((1 + 2<a,x> + |x|^2) a + (1 - |a|^2) x) / (1 + 2<a,x> + |a|^2 |x|^2)`.
pub fn mobius_translate(a: &[f64], x: &[f64]) -> Vec<f64> {
    let (ax, a2, x2) = (dot(a, x), norm_sq(a), norm_sq(x));
    let den = 1.0 + 2.0 * ax + a2 * x2;
    a.iter()
        .zip(x)
        .map(|(ai, xi)| ((1.0 + 2.0 * ax + x2) * ai + (1.0 - a2) * xi) / den)
        .collect()
}

/// Hyperbolic norm of a target tangent vector in the ball at `w`.
#[inline]
pub fn ball_vector_norm(w: &[f64], v: &[f64]) -> f64 {
    2.0 * norm_sq(v).sqrt() / (1.0 - norm_sq(w))
}


/// Laplace-Beltrami operator of the product of Poincaré metrics applied to a
/// scalar bidisk field: `sum_l (1 - |zeta_l|^2)^2 / 4 * Laplacian_l f`.
/// Entries on the topological boundary are zero.
pub fn laplace_beltrami(grid: &BidiskGrid, f: &[f64]) -> Result<Vec<f64>> {
    laplace_beltrami_with(grid, f, AngularScheme::Spectral)
}

/// [`laplace_beltrami`] with an explicit angular differentiation scheme.
pub fn laplace_beltrami_with(
    grid: &BidiskGrid,
    f: &[f64],
    scheme: AngularScheme,
) -> Result<Vec<f64>> {
    if f.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "scalar field has {} entries, grid has {}",
            f.len(),
            grid.len()
        )));
    }
    let (g1, g2) = (&grid.first, &grid.second);
    let n1 = g1.len();
    let n2 = g2.len();
    let mut out = vec![0.0; f.len()];
    // Second factor: contiguous rows.
    out.par_chunks_mut(n2)
        .zip(f.par_chunks(n2))
        .enumerate()
        .for_each_init(
            || (g2.differ(scheme), Derivs::zeros(n2)),
            |(differ, d), (p1, (o, row))| {
                if g1.is_boundary(p1) {
                    return;
                }
                differ.apply(row, d);
                for (p2, v) in o.iter_mut().enumerate() {
                    if g2.is_boundary(p2) {
                        continue;
                    }
                    let i2 = p2 % g2.nr();
                    *v = g2.conformal_weight(i2) * d.laplacian(p2, g2.radius(i2));
                }
            },
        );
    // First factor: strided columns.
    let cols: Vec<(usize, Vec<f64>)> = (0..n2)
        .into_par_iter()
        .filter(|&p2| !g2.is_boundary(p2))
        .map_init(
            || (g1.differ(scheme), Derivs::zeros(n1)),
            |(differ, d), p2| {
                let col: Vec<f64> = (0..n1).map(|p1| f[p1 * n2 + p2]).collect();
                differ.apply(&col, d);
                let lap = (0..n1)
                    .map(|p1| {
                        if g1.is_boundary(p1) {
                            0.0
                        } else {
                            let i1 = p1 % g1.nr();
                            g1.conformal_weight(i1) * d.laplacian(p1, g1.radius(i1))
                        }
                    })
                    .collect();
                (p2, lap)
            },
        )
        .collect();
    for (p2, lap) in cols {
        for (p1, v) in lap.into_iter().enumerate() {
            out[p1 * n2 + p2] += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_translation_is_an_isometry() {
        let a = [0.3, -0.2, 0.1];
        let (x, y) = ([0.5, 0.1, -0.4], [-0.2, 0.6, 0.3]);
        let (tx, ty) = (mobius_translate(&a, &x), mobius_translate(&a, &y));
        let d0 = hyperbolic_distance(&x, &y).unwrap();
        assert!((hyperbolic_distance(&tx, &ty).unwrap() - d0).abs() < 1e-13);
        assert_eq!(mobius_translate(&a, &[0.0; 3]), a.to_vec());
    }
    use crate::grid::DiskGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ball(rng: &mut ChaCha8Rng, d: usize, rmax: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if norm_sq(&v) < rmax * rmax {
                return v;
            }
        }
    }

    #[test]
    fn halfplane_chart_normalization() {
        let h = disk_to_halfplane([0.0, 0.0], 0.0).unwrap();
        assert_eq!(h, [1.0, 0.0]);
        let a = 0.7_f64;
        let h = disk_to_halfplane([a.cos(), a.sin()], a).unwrap();
        assert!(h[0].abs() < 1e-15 && h[1].abs() < 1e-15);
        assert!(matches!(
            disk_to_halfplane([-1.0, 0.0], 0.0),
            Err(Error::AntipodalSingularity(_))
        ));
        // boundary circle lands on x = 0
        let h = disk_to_halfplane([0.3_f64.cos(), 0.3_f64.sin()], 1.1).unwrap();
        assert!(h[0].abs() < 1e-15);
        // rays toward the anchor stay on y = 0 with x = (1 - r) / (1 + r)
        let h = disk_to_halfplane([0.5 * a.cos(), 0.5 * a.sin()], a).unwrap();
        assert!((h[0] - 1.0 / 3.0).abs() < 1e-15 && h[1].abs() < 1e-15);
    }

    #[test]
    fn halfplane_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let z = random_ball(&mut rng, 2, 0.999);
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            let h = disk_to_halfplane([z[0], z[1]], a).unwrap();
            assert!(h[0] > 0.0);
            let back = halfplane_to_disk(h, a);
            assert!((back[0] - z[0]).abs() < 1e-12 && (back[1] - z[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_distance_examples() {
        assert_eq!(hyperbolic_distance(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        let d = hyperbolic_distance(&[0.0, 0.0, 0.0], &[0.5, 0.0, 0.0]).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-14);
        assert!(hyperbolic_distance(&[1.0, 0.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn distance_is_symmetric_and_triangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = random_ball(&mut rng, 3, 0.99);
            let b = random_ball(&mut rng, 3, 0.99);
            let c = random_ball(&mut rng, 3, 0.99);
            let ab = hyperbolic_distance(&a, &b).unwrap();
            assert_eq!(ab, hyperbolic_distance(&b, &a).unwrap());
            let ac = hyperbolic_distance(&a, &c).unwrap();
            let cb = hyperbolic_distance(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-12);
        }
    }

    #[test]
    fn halfspace_chart_normalization_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..5 {
            let mut pole = random_ball(&mut rng, d, 1.0);
            let n = norm_sq(&pole).sqrt();
            pole.iter_mut().for_each(|x| *x /= n);
            let chart = HalfSpaceChart::new(&pole).unwrap();
            let anti: Vec<f64> = pole.iter().map(|x| -x).collect();
            let o = chart.to_chart(&anti).unwrap();
            assert!(o.iter().all(|x| x.abs() < 1e-15));
            let c = chart.to_chart(&vec![0.0; d]).unwrap();
            assert!((c[0] - 1.0).abs() < 1e-15);
            assert!(c[1..].iter().all(|x| x.abs() < 1e-15));
            assert!(matches!(chart.to_chart(&pole), Err(Error::PoleSingularity)));
            for _ in 0..100 {
                let w = random_ball(&mut rng, d, 0.999);
                let u = chart.to_chart(&w).unwrap();
                assert!(u[0] > 0.0);
                let back = chart.from_chart(&u).unwrap();
                for (a, b) in back.iter().zip(&w) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn halfspace_chart_is_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let chart = HalfSpaceChart::new(&[0.6, -0.8, 0.0]).unwrap();
        for _ in 0..100 {
            let a = random_ball(&mut rng, 3, 0.95);
            let b = random_ball(&mut rng, 3, 0.95);
            let d0 = hyperbolic_distance(&a, &b).unwrap();
            let d1 = halfspace_distance(&chart.to_chart(&a).unwrap(), &chart.to_chart(&b).unwrap())
                .unwrap();
            assert!((d0 - d1).abs() < 1e-10, "{d0} vs {d1}");
        }
    }

    #[test]
    fn planar_identity_matches_between_charts() {
        let a = 1.3_f64;
        let chart = HalfSpaceChart::new(&[-a.cos(), -a.sin()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let z = random_ball(&mut rng, 2, 0.99);
            let h = disk_to_halfplane([z[0], z[1]], a).unwrap();
            let u = chart.to_chart(&z).unwrap();
            assert!((u[0] - h[0]).abs() < 1e-12 && (u[1] - h[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn pushforward_preserves_hyperbolic_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let chart = HalfSpaceChart::new(&[0.0, 0.0, 1.0]).unwrap();
        for _ in 0..100 {
            let w = random_ball(&mut rng, 3, 0.9);
            let u = chart.to_chart(&w).unwrap();
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let pushed = chart.push_to_ball(&u, &v);
            let lhs = ball_vector_norm(&w, &pushed);
            let rhs = norm_sq(&v).sqrt() / u[0];
            assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0));
        }
    }

    #[test]
    fn christoffel_symbols_agree_with_metric_derivatives() {
        // For e^{2 psi} delta: Gamma^k_ij = 1/2 g^{kl}(d_i g_jl + d_j g_il - d_l g_ij).
        let w = [0.2, -0.3, 0.4];
        let mut grad = [0.0; 3];
        ball_log_factor_gradient(&w, &mut grad);
        let gamma = conformal_christoffel(&grad);
        let metric = |p: &[f64; 3]| 4.0 / (1.0 - norm_sq(p)).powi(2);
        let h = 1e-6;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let dm = |l: usize| {
                        let mut a = w;
                        let mut b = w;
                        a[l] += h;
                        b[l] -= h;
                        (metric(&a) - metric(&b)) / (2.0 * h)
                    };
                    let mut v = 0.0;
                    if j == k {
                        v += dm(i);
                    }
                    if i == k {
                        v += dm(j);
                    }
                    if i == j {
                        v -= dm(k);
                    }
                    v *= 0.5 / metric(&w);
                    assert!((v - gamma[k * 9 + i * 3 + j]).abs() < 1e-6);
                }
            }
        }
    }

    fn bidisk(n: usize) -> BidiskGrid {
        BidiskGrid::square(DiskGrid::new(n, n, 0.5).unwrap())
    }

    fn sample(g: &BidiskGrid, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> Vec<f64> {
        (0..g.len())
            .map(|p| {
                let (p1, p2) = g.split(p);
                let (i1, j1) = g.first.split(p1);
                let (i2, j2) = g.second.split(p2);
                f(g.first.zeta(i1, j1), g.second.zeta(i2, j2))
            })
            .collect()
    }

    #[test]
    fn laplace_beltrami_of_constant_vanishes() {
        let g = bidisk(8);
        let lap = laplace_beltrami(&g, &vec![3.5; g.len()]).unwrap();
        assert!(lap.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rho_product_is_superharmonic() {
        let g = bidisk(12);
        let f = sample(&g, |a, b| rho(a) * rho(b));
        let lap = laplace_beltrami(&g, &f).unwrap();
        for p in g.interior() {
            assert!(lap[p] <= 1e-12, "{}", lap[p]);
        }
    }

    #[test]
    fn laplace_beltrami_converges_on_a_quadratic() {
        // f = x1^2 + x1 y1: Laplacian 2, weight (1 - r1^2)^2 / 4.
        let err = |n: usize| {
            let g = bidisk(n);
            let f = sample(&g, |a, _| a[0] * a[0] + a[0] * a[1]);
            let lap = laplace_beltrami(&g, &f).unwrap();
            g.interior()
                .map(|p| {
                    let (p1, _) = g.split(p);
                    let exact = 2.0 * g.first.conformal_weight(p1 % n);
                    (lap[p] - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(12), err(24));
        assert!((e1 / e2).log2() >= 1.8, "{e1} {e2}");
    }

    #[test]
    fn rejects_mismatched_scalar_field() {
        let g = bidisk(6);
        assert!(laplace_beltrami(&g, &[0.0; 3]).is_err());
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho([0.0, 0.0]), 1.0);
        assert_eq!(rho([1.0, 0.0]), 0.0);
        assert!((rho([0.6, 0.0]) - 0.64).abs() < 1e-15);
    }
}
