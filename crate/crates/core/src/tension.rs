//! Tension fields of maps into hyperbolic space.
//!
//! Two target coordinate systems are supported. Ball coordinates are global
//! and drive the solvers; half-space charts are local and are where all
//! boundary asymptotics are phrased. Both use the Christoffel symbols of a
//! conformally flat metric, see [`crate::geom::conformal_christoffel`].
//!
//! On a disk factor the hyperbolic Laplacian is `w(r) = (1 - r^2)^2 / 4`
//! times the Euclidean one, so the tension of a map from the bidisk is
//! `w1 T1 + w2 T2` where `T_l` is the tension computed with the flat metric
//! on factor `l` ("Euclidean-reduced" tension).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{BidiskGrid, MapField1, MapField2};
use crate::geom::{self, HalfSpaceChart};
use crate::grid::{AngularScheme, Derivs, DiskGrid};
use crate::MAX_TARGET_DIM;

/// Below this gap `1 - |u|` a node's tension is evaluated through a
/// half-space chart centered on it.
pub const CHART_SWITCH_GAP: f64 = 1e-12;

/// Derivative data of a map at one point of a product of half-spaces.
#[derive(Clone, Debug, PartialEq)]
pub struct MapJet {
    /// Target value in half-space coordinates `(u0, u1, ..., un)`.
    pub value: Vec<f64>,
    pub factors: Vec<FactorJet>,
}

/// Derivatives along the `m + 1` coordinates `(x, y^1, ..., y^m)` of one
/// factor.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorJet {
    /// `grad[a][k] = d u^k / d x^a`.
    pub grad: Vec<Vec<f64>>,
    /// `hessian[a][b][k]`.
    pub hessian: Vec<Vec<Vec<f64>>>,
}

impl FactorJet {
    pub fn zeros(coords: usize, dim: usize) -> Self {
        Self {
            grad: vec![vec![0.0; dim]; coords],
            hessian: vec![vec![vec![0.0; dim]; coords]; coords],
        }
    }

    fn laplacian(&self, k: usize) -> f64 {
        (0..self.grad.len()).map(|a| self.hessian[a][a][k]).sum()
    }

    fn dot(&self, k: usize, l: usize) -> f64 {
        self.grad.iter().map(|g| g[k] * g[l]).sum()
    }
}

/// Tension vector in the coordinates it was computed in, with its
/// hyperbolic norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TensionVector {
    pub components: Vec<f64>,
    pub norm: f64,
}

/// Hyperbolic length of a half-space tangent vector at height `u0`.
pub fn tension_norm(tau: &[f64], u0: f64) -> Result<f64> {
    if u0 <= 0.0 {
        return Err(Error::NonpositiveHeight(u0));
    }
    Ok(geom::norm_sq(tau).sqrt() / u0)
}

fn check_jet(jet: &MapJet, m: &[usize]) -> Result<()> {
    let dim = jet.value.len();
    if jet.factors.len() != m.len() {
        return Err(Error::ShapeMismatch(format!(
            "jet has {} factors, expected {}",
            jet.factors.len(),
            m.len()
        )));
    }
    for (f, &ml) in jet.factors.iter().zip(m) {
        let c = ml + 1;
        let ok = f.grad.len() == c
            && f.grad.iter().all(|g| g.len() == dim)
            && f.hessian.len() == c
            && f.hessian.iter().all(|h| h.len() == c && h.iter().all(|v| v.len() == dim));
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "factor jet does not match a {c}-dimensional half-space with {dim} target components"
            )));
        }
    }
    if jet.value[0] <= 0.0 {
        return Err(Error::NonpositiveHeight(jet.value[0]));
    }
    Ok(())
}

/// Tension of a map from `H^{m1+1} x H^{m2+1}` into `H^{n+1}`, all in upper
/// half-space coordinates, at a point with factor heights `x`.
///
/// Normal component:
/// `tau0 = sum_l x_l^2 (Lap u0 - (m_l - 1)/x_l d_x u0 - (|grad u0|^2 - sum_i |grad ui|^2) / u0)`;
/// tangential: `taui = sum_l x_l^2 (Lap ui - (m_l - 1)/x_l d_x ui - 2 <grad u0, grad ui> / u0)`.
pub fn tension_product_halfspace(jet: &MapJet, m: [usize; 2], x: [f64; 2]) -> Result<TensionVector> {
    check_jet(jet, &m)?;
    for &h in &x {
        if h <= 0.0 {
            return Err(Error::NonpositiveHeight(h));
        }
    }
    let dim = jet.value.len();
    let u0 = jet.value[0];
    let mut tau = vec![0.0; dim];
    for (l, f) in jet.factors.iter().enumerate() {
        let xl = x[l];
        let drift = (m[l] as f64 - 1.0) / xl;
        let w = xl * xl;
        let g00 = f.dot(0, 0);
        let tangential: f64 = (1..dim).map(|i| f.dot(i, i)).sum();
        tau[0] += w * (f.laplacian(0) - drift * f.grad[0][0] - (g00 - tangential) / u0);
        for (i, t) in tau.iter_mut().enumerate().skip(1) {
            *t += w * (f.laplacian(i) - drift * f.grad[0][i] - 2.0 * f.dot(0, i) / u0);
        }
    }
    let norm = tension_norm(&tau, u0)?;
    Ok(TensionVector {
        components: tau,
        norm,
    })
}

/// The bidisk case `m1 = m2 = 1` written out on its own: no first-order
/// drift terms and two-dimensional factor gradients.
pub fn tension_bidisk_halfspace(jet: &MapJet, x: [f64; 2]) -> Result<TensionVector> {
    check_jet(jet, &[1, 1])?;
    for &h in &x {
        if h <= 0.0 {
            return Err(Error::NonpositiveHeight(h));
        }
    }
    let u = &jet.value;
    let dim = u.len();
    let mut tau = vec![0.0; dim];
    for (f, xl) in jet.factors.iter().zip(x) {
        let w = xl * xl;
        let (gx, gy) = (&f.grad[0], &f.grad[1]);
        let lap = |k: usize| f.hessian[0][0][k] + f.hessian[1][1][k];
        let mut e = gx[0] * gx[0] + gy[0] * gy[0];
        for i in 1..dim {
            e -= gx[i] * gx[i] + gy[i] * gy[i];
        }
        tau[0] += w * (lap(0) - e / u[0]);
        for i in 1..dim {
            tau[i] += w * (lap(i) - 2.0 * (gx[0] * gx[i] + gy[0] * gy[i]) / u[0]);
        }
    }
    let norm = tension_norm(&tau, u[0])?;
    Ok(TensionVector {
        components: tau,
        norm,
    })
}

/// Per-factor first derivatives along an orthonormal frame `(d_r, d_theta / r)`
/// and the Euclidean Laplacian, for each target component.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PolarJet {
    pub dr: [f64; MAX_TARGET_DIM],
    pub dt: [f64; MAX_TARGET_DIM],
    pub lap: [f64; MAX_TARGET_DIM],
}

impl Default for PolarJet {
    fn default() -> Self {
        Self {
            dr: [0.0; MAX_TARGET_DIM],
            dt: [0.0; MAX_TARGET_DIM],
            lap: [0.0; MAX_TARGET_DIM],
        }
    }
}

impl PolarJet {
    #[inline]
    pub fn from_derivs(d: &[Derivs], p: usize, r: f64) -> Self {
        let mut j = Self::default();
        for (k, dk) in d.iter().enumerate() {
            j.dr[k] = dk.fr[p];
            j.dt[k] = dk.ft[p] / r;
            j.lap[k] = dk.laplacian(p, r);
        }
        j
    }
}

/// Euclidean-reduced tension in ball coordinates, accumulated into `out`
/// with weight `w`.
#[inline]
pub(crate) fn ball_factor_tension(u: &[f64], g: &[f64], jet: &PolarJet, w: f64, out: &mut [f64]) {
    let d = u.len();
    let (dr, dt) = (&jet.dr[..d], &jet.dt[..d]);
    let rg = geom::dot(dr, g);
    let tg = geom::dot(dt, g);
    let e = geom::norm_sq(dr) + geom::norm_sq(dt);
    for k in 0..d {
        out[k] += w * (jet.lap[k] + 2.0 * (dr[k] * rg + dt[k] * tg) - e * g[k]);
    }
}

/// Tension at a node whose value is within [`CHART_SWITCH_GAP`] of the
/// sphere: the jets are transferred exactly (chain rule through the chart)
/// into a half-space chart centered on the value, the half-space formula is
/// applied there, and the result is pushed back to ball coordinates.
pub(crate) fn chart_tension(u: &[f64], jets: &[(PolarJet, f64)]) -> Result<Vec<f64>> {
    let d = u.len();
    let n = geom::norm_sq(u).sqrt();
    let pole: Vec<f64> = u.iter().map(|x| -x / n).collect();
    let chart = HalfSpaceChart::new(&pole)?;
    let c = chart.to_chart(u)?;
    // Jacobian of the inversion at u: (2/|e|^2)(v - 2 e (e.v)/|e|^2), e = u - P.
    let e: Vec<f64> = u.iter().zip(&pole).map(|(a, b)| a - b).collect();
    let e2 = geom::norm_sq(&e);
    let dinv = |v: &[f64]| -> Vec<f64> {
        let ev = geom::dot(&e, v);
        v.iter().zip(&e).map(|(vi, ei)| 2.0 / e2 * (vi - 2.0 * ei * ev / e2)).collect()
    };
    let d2inv = |v: &[f64]| -> Vec<f64> {
        let ev = geom::dot(&e, v);
        let vv = geom::norm_sq(v);
        v.iter()
            .zip(&e)
            .map(|(vi, ei)| {
                -8.0 * vi * ev / (e2 * e2) - 4.0 * ei * vv / (e2 * e2) + 16.0 * ei * ev * ev / (e2 * e2 * e2)
            })
            .collect()
    };
    let frame = |v: &[f64]| chart.frame_apply(v);
    let mut tau = vec![0.0; d];
    for (jet, w) in jets {
        let mut dr_c = frame(&dinv(&jet.dr[..d]));
        let mut dt_c = frame(&dinv(&jet.dt[..d]));
        let lap_lin = dinv(&jet.lap[..d]);
        let q1 = d2inv(&jet.dr[..d]);
        let q2 = d2inv(&jet.dt[..d]);
        let lap_ball: Vec<f64> = (0..d).map(|k| lap_lin[k] + q1[k] + q2[k]).collect();
        let lap_c = frame(&lap_ball);
        let (dr_c, dt_c) = (&mut dr_c, &mut dt_c);
        let c0 = c[0];
        let e = geom::norm_sq(dr_c) + geom::norm_sq(dt_c);
        for k in 0..d {
            let mixed = dr_c[k] * dr_c[0] + dt_c[k] * dt_c[0];
            let mut t = lap_c[k] - 2.0 * mixed / c0;
            if k == 0 {
                t += e / c0;
            }
            tau[k] += w * t;
        }
    }
    Ok(chart.push_to_ball(&c, &tau))
}

/// Tension field sampled on a grid: ball-coordinate vectors (zero on the
/// boundary) and their hyperbolic norms.
#[derive(Clone, Debug, PartialEq)]
pub struct TensionField {
    pub dim: usize,
    pub vectors: Vec<f64>,
    pub norms: Vec<f64>,
}

impl TensionField {
    /// Largest norm over all nodes (boundary entries are zero).
    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    #[inline]
    pub fn at(&self, p: usize) -> &[f64] {
        &self.vectors[p * self.dim..(p + 1) * self.dim]
    }
}

/// Polar derivatives of every component of a single-disk field.
pub(crate) fn component_derivs(grid: &DiskGrid, dim: usize, values: &[f64], scheme: AngularScheme) -> Vec<Derivs> {
    let mut differ = grid.differ(scheme);
    let n = grid.len();
    (0..dim)
        .map(|c| {
            let f: Vec<f64> = (0..n).map(|p| values[p * dim + c]).collect();
            let mut d = Derivs::zeros(n);
            differ.apply(&f, &mut d);
            d
        })
        .collect()
}

/// Euclidean-reduced tension `T(u)` of a single-disk field at interior nodes
/// (zero on the boundary ring). Hyperbolic tension is `w(r) T(u)`.
pub fn euclidean_tension_disk(u: &MapField1) -> Result<Vec<f64>> {
    u.check_interior()?;
    let g = &u.grid;
    let dim = u.dim;
    let derivs = component_derivs(g, dim, &u.values, AngularScheme::Spectral);
    let mut out = vec![0.0; u.values.len()];
    let mut grad = [0.0; MAX_TARGET_DIM];
    for p in 0..g.len() {
        if g.is_boundary(p) {
            continue;
        }
        let r = g.radius(p % g.nr());
        let v = u.at(p);
        let jet = PolarJet::from_derivs(&derivs, p, r);
        let o = &mut out[p * dim..(p + 1) * dim];
        if 1.0 - geom::norm_sq(v).sqrt() < CHART_SWITCH_GAP {
            o.copy_from_slice(&chart_tension(v, &[(jet, 1.0)])?);
        } else {
            geom::ball_log_factor_gradient(v, &mut grad[..dim]);
            ball_factor_tension(v, &grad[..dim], &jet, 1.0, o);
        }
    }
    Ok(out)
}

/// Hyperbolic tension of a map from one Poincaré disk into the ball.
pub fn tension_disk(u: &MapField1) -> Result<TensionField> {
    let mut vectors = euclidean_tension_disk(u)?;
    let g = &u.grid;
    let dim = u.dim;
    let mut norms = vec![0.0; g.len()];
    for p in 0..g.len() {
        if g.is_boundary(p) {
            continue;
        }
        let w = g.conformal_weight(p % g.nr());
        let t = &mut vectors[p * dim..(p + 1) * dim];
        t.iter_mut().for_each(|x| *x *= w);
        norms[p] = geom::ball_vector_norm(u.at(p), t);
    }
    Ok(TensionField { dim, vectors, norms })
}

/// Hyperbolic tension of a map from the bidisk into the ball.
///
/// Memory: the factor-one derivatives of every component are held at once
/// (three arrays per component); factor-two derivatives are computed one row
/// at a time.
pub fn tension_bidisk(u: &MapField2) -> Result<TensionField> {
    tension_bidisk_impl(u, None)
}

/// Tension together with the hyperbolic energy density
/// `sum_lambda w_lambda |d_lambda u|^2_h` at every node (zero on the
/// topological boundary).
pub fn tension_and_energy_bidisk(u: &MapField2) -> Result<(TensionField, Vec<f64>)> {
    let mut energy = vec![0.0; u.grid.len()];
    let t = tension_bidisk_impl(u, Some(&mut energy))?;
    Ok((t, energy))
}

fn tension_bidisk_impl(u: &MapField2, energy: Option<&mut Vec<f64>>) -> Result<TensionField> {
    u.check_interior()?;
    let grid = &u.grid;
    let dim = u.dim;
    let first = first_factor_jets(grid, dim, &u.values);
    let n2 = grid.second.len();
    let g1 = &grid.first;
    let g2 = &grid.second;
    let mut vectors = vec![0.0; u.values.len()];
    let mut norms = vec![0.0; grid.len()];
    let failure: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    let mut scratch_energy = Vec::new();
    let want_energy = energy.is_some();
    let energy = match energy {
        Some(e) => e,
        None => &mut scratch_energy,
    };
    if !want_energy {
        energy.resize(grid.len(), 0.0);
    }
    vectors
        .par_chunks_mut(n2 * dim)
        .zip(norms.par_chunks_mut(n2))
        .zip(energy.par_chunks_mut(n2))
        .enumerate()
        .for_each_init(
            || (g2.differ(AngularScheme::Spectral), Vec::new(), Vec::new()),
            |(differ, row_derivs, scratch), (p1, ((vrow, nrow), erow))| {
                if g1.is_boundary(p1) {
                    return;
                }
                let i1 = p1 % g1.nr();
                let w1 = g1.conformal_weight(i1);
                let base = p1 * n2 * dim;
                let row = &u.values[base..base + n2 * dim];
                row_component_derivs(g2, dim, row, differ, row_derivs, scratch);
                let mut grad = [0.0; MAX_TARGET_DIM];
                for p2 in 0..n2 {
                    if g2.is_boundary(p2) {
                        continue;
                    }
                    let i2 = p2 % g2.nr();
                    let w2 = g2.conformal_weight(i2);
                    let p = p1 * n2 + p2;
                    let v = u.at(p);
                    let j1 = first.jet(p, dim);
                    let j2 = PolarJet::from_derivs(row_derivs, p2, g2.radius(i2));
                    let o = &mut vrow[p2 * dim..(p2 + 1) * dim];
                    if 1.0 - geom::norm_sq(v).sqrt() < CHART_SWITCH_GAP {
                        match chart_tension(v, &[(j1, w1), (j2, w2)]) {
                            Ok(t) => o.copy_from_slice(&t),
                            Err(e) => {
                                failure.lock().unwrap().get_or_insert(e);
                                return;
                            }
                        }
                    } else {
                        geom::ball_log_factor_gradient(v, &mut grad[..dim]);
                        ball_factor_tension(v, &grad[..dim], &j1, w1, o);
                        ball_factor_tension(v, &grad[..dim], &j2, w2, o);
                    }
                    nrow[p2] = geom::ball_vector_norm(v, o);
                    if want_energy {
                        let gap = 1.0 - geom::norm_sq(v);
                        let jets = w1 * (geom::norm_sq(&j1.dr[..dim]) + geom::norm_sq(&j1.dt[..dim]))
                            + w2 * (geom::norm_sq(&j2.dr[..dim]) + geom::norm_sq(&j2.dt[..dim]));
                        erow[p2] = 4.0 * jets / (gap * gap);
                    }
                }
            },
        );
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(TensionField { dim, vectors, norms })
}

/// Factor-one polar jets of every component, stored as `(dr, dt, lap)`
/// triples per node and component.
pub(crate) struct FirstFactorJets {
    data: Vec<f64>,
}

impl FirstFactorJets {
    #[inline]
    pub fn jet(&self, p: usize, dim: usize) -> PolarJet {
        let mut j = PolarJet::default();
        let base = p * dim * 3;
        for k in 0..dim {
            j.dr[k] = self.data[base + 3 * k];
            j.dt[k] = self.data[base + 3 * k + 1];
            j.lap[k] = self.data[base + 3 * k + 2];
        }
        j
    }
}

pub(crate) fn first_factor_jets(grid: &BidiskGrid, dim: usize, values: &[f64]) -> FirstFactorJets {
    let g1 = &grid.first;
    let n1 = g1.len();
    let n2 = grid.second.len();
    let cols: Vec<Vec<f64>> = (0..n2)
        .into_par_iter()
        .map_init(
            || (g1.differ(AngularScheme::Spectral), Derivs::zeros(n1), vec![0.0; n1]),
            |(differ, d, col), p2| {
                let mut out = vec![0.0; n1 * dim * 3];
                for k in 0..dim {
                    for p1 in 0..n1 {
                        col[p1] = values[(p1 * n2 + p2) * dim + k];
                    }
                    differ.apply(col, d);
                    for p1 in 0..n1 {
                        if g1.is_boundary(p1) {
                            continue;
                        }
                        let r = g1.radius(p1 % g1.nr());
                        let o = p1 * dim * 3 + 3 * k;
                        out[o] = d.fr[p1];
                        out[o + 1] = d.ft[p1] / r;
                        out[o + 2] = d.laplacian(p1, r);
                    }
                }
                out
            },
        )
        .collect();
    let mut data = vec![0.0; grid.len() * dim * 3];
    for (p2, col) in cols.into_iter().enumerate() {
        for p1 in 0..n1 {
            let dst = (p1 * n2 + p2) * dim * 3;
            data[dst..dst + dim * 3].copy_from_slice(&col[p1 * dim * 3..(p1 + 1) * dim * 3]);
        }
    }
    FirstFactorJets { data }
}

pub(crate) fn row_component_derivs(
    g: &DiskGrid,
    dim: usize,
    row: &[f64],
    differ: &mut crate::grid::Differ<'_>,
    out: &mut Vec<Derivs>,
    scratch: &mut Vec<f64>,
) {
    let n = g.len();
    out.resize_with(dim, || Derivs::zeros(n));
    scratch.resize(n, 0.0);
    for (k, d) in out.iter_mut().enumerate() {
        for p in 0..n {
            scratch[p] = row[p * dim + k];
        }
        differ.apply(scratch, d);
    }
}

/// Linearization of the single-disk tension at `base` applied to a
/// coordinate perturbation `sigma` (same layout as `base.values`):
///
/// `P sigma = w [Lap sigma + 2 Gamma(du, d sigma) + (dGamma . sigma)(du, du)]`
///
/// in ball coordinates. Boundary entries are zero.
pub fn linearized_tension(base: &MapField1, sigma: &[f64]) -> Result<Vec<f64>> {
    if sigma.len() != base.values.len() {
        return Err(Error::ShapeMismatch(format!(
            "section has {} entries, base map has {}",
            sigma.len(),
            base.values.len()
        )));
    }
    base.check_interior()?;
    let g = &base.grid;
    let dim = base.dim;
    let bd = component_derivs(g, dim, &base.values, AngularScheme::Spectral);
    let sd = component_derivs(g, dim, sigma, AngularScheme::Spectral);
    let mut out = vec![0.0; sigma.len()];
    for p in 0..g.len() {
        if g.is_boundary(p) {
            continue;
        }
        let i = p % g.nr();
        let r = g.radius(i);
        let ju = PolarJet::from_derivs(&bd, p, r);
        let js = PolarJet::from_derivs(&sd, p, r);
        let o = &mut out[p * dim..(p + 1) * dim];
        linearized_pointwise(base.at(p), &sigma[p * dim..(p + 1) * dim], &ju, &js, o);
        let w = g.conformal_weight(i);
        o.iter_mut().for_each(|x| *x *= w);
    }
    Ok(out)
}

/// Derivative of [`ball_factor_tension`] (unit weight) in the direction of
/// `s` with polar jet `js`.
#[inline]
pub(crate) fn linearized_pointwise(u: &[f64], s: &[f64], ju: &PolarJet, js: &PolarJet, out: &mut [f64]) {
    let d = u.len();
    let mut g = [0.0; MAX_TARGET_DIM];
    let mut h = [0.0; MAX_TARGET_DIM * MAX_TARGET_DIM];
    geom::ball_log_factor_gradient(u, &mut g[..d]);
    geom::ball_log_factor_hessian(u, &mut h[..d * d]);
    let mut hs = [0.0; MAX_TARGET_DIM];
    for a in 0..d {
        hs[a] = (0..d).map(|b| h[a * d + b] * s[b]).sum();
    }
    let g = &g[..d];
    let hs = &hs[..d];
    for (du, ds) in [(&ju.dr[..d], &js.dr[..d]), (&ju.dt[..d], &js.dt[..d])] {
        let dug = geom::dot(du, g);
        let dsg = geom::dot(ds, g);
        let duh = geom::dot(du, hs);
        let dud = geom::dot(du, ds);
        let e = geom::norm_sq(du);
        for k in 0..d {
            out[k] += 2.0 * du[k] * duh - e * hs[k] + 2.0 * (du[k] * dsg + ds[k] * dug - dud * g[k]);
        }
    }
    for k in 0..d {
        out[k] += js.lap[k];
    }
}

/// Closed-form corner limit of the normal tension along the ray
/// `t -> (t g1, y1, t g2, y2)` for a map with `u0 ~ a1 x1 + a2 x2` and
/// `e_l = m_l a_l^2`. Returns `(term_sum, closed_form)`.
pub fn corner_limit_expression(a: [f64; 2], gamma: [f64; 2], m: [u32; 2]) -> (f64, f64) {
    let s = a[0] * gamma[0] + a[1] * gamma[1];
    let mut sum = 0.0;
    for l in 0..2 {
        let ml = m[l] as f64;
        let e = ml * a[l] * a[l];
        sum -= (ml - 1.0) * gamma[l] / s * a[l] + gamma[l] * gamma[l] / (s * s) * (a[l] * a[l] - e);
    }
    let closed = (2.0 - m[0] as f64 - m[1] as f64) * a[0] * a[1] * gamma[0] * gamma[1] / (s * s);
    (sum, closed)
}

/// One term `coeff * x^a * y^b` of a section component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub a: f64,
    pub b: u32,
}

/// Section of the model bundle with polynomial-like components in `(x, y)`.
pub type SymbolicSection = Vec<Vec<Monomial>>;

fn push_term(out: &mut Vec<Monomial>, t: Monomial) {
    if t.coeff == 0.0 {
        return;
    }
    if let Some(m) = out.iter_mut().find(|m| m.a == t.a && m.b == t.b) {
        m.coeff += t.coeff;
    } else {
        out.push(t);
    }
}

/// `-(x d_x)(x d_x - 3) - x^2 d_y^2` applied to one monomial.
fn model_diagonal(m: Monomial, out: &mut Vec<Monomial>) {
    push_term(out, Monomial {
        coeff: -m.a * (m.a - 3.0) * m.coeff,
        ..m
    });
    if m.b >= 2 {
        push_term(out, Monomial {
            coeff: -(m.b as f64) * (m.b as f64 - 1.0) * m.coeff,
            a: m.a + 2.0,
            b: m.b - 2,
        });
    }
}

/// `x d_y` applied to one monomial, scaled by `c`.
fn model_coupling(m: Monomial, c: f64, out: &mut Vec<Monomial>) {
    if m.b >= 1 {
        push_term(out, Monomial {
            coeff: c * m.b as f64 * m.coeff,
            a: m.a + 1.0,
            b: m.b - 1,
        });
    }
}

/// Exact action of the linearization at the totally geodesic model map
/// `(x, y) -> (x, y, 0, ..., 0)` on sections with monomial components.
/// Zero coefficients are dropped from the result.
pub fn model_operator_symbolic(sigma: &SymbolicSection) -> SymbolicSection {
    let dim = sigma.len();
    let mut out: SymbolicSection = vec![Vec::new(); dim];
    for (k, comp) in sigma.iter().enumerate() {
        for &m in comp {
            model_diagonal(m, &mut out[k]);
        }
    }
    if dim >= 2 {
        for &m in &sigma[1] {
            model_coupling(m, -2.0, &mut out[0]);
        }
        for &m in &sigma[0] {
            model_coupling(m, 2.0, &mut out[1]);
        }
    }
    for comp in &mut out {
        comp.retain(|m| m.coeff.abs() > 0.0);
    }
    out
}

/// Evaluate a symbolic section component at a point.
pub fn eval_monomials(terms: &[Monomial], x: f64, y: f64) -> f64 {
    terms.iter().map(|m| m.coeff * x.powf(m.a) * y.powi(m.b as i32)).sum()
}

/// Uniform rectangular grid in the half-plane `x > 0`; node `(ix, iy)` at
/// index `iy * nx + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfPlaneGrid {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl HalfPlaneGrid {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        for (axis, n) in [("x", nx), ("y", ny)] {
            if n < crate::grid::MIN_NODES {
                return Err(Error::GridTooCoarse {
                    axis,
                    nodes: n,
                    min: crate::grid::MIN_NODES,
                });
            }
        }
        if x.0 <= 0.0 || x.1 <= x.0 || y.1 <= y.0 {
            return Err(Error::InvalidGrid(format!("bad half-plane box {x:?} x {y:?}")));
        }
        let lin = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
        };
        Ok(Self {
            x: lin(x, nx),
            y: lin(y, ny),
        })
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        for &y in &self.y {
            for &x in &self.x {
                v.push(f(x, y));
            }
        }
        v
    }
}

/// The model operator by centered second-order differences on a half-plane
/// grid; edge nodes are left at zero.
pub fn model_operator_grid(grid: &HalfPlaneGrid, sigma: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let (nx, ny) = (grid.x.len(), grid.y.len());
    if sigma.iter().any(|c| c.len() != nx * ny) {
        return Err(Error::ShapeMismatch("section does not match the half-plane grid".into()));
    }
    let hx = grid.x[1] - grid.x[0];
    let hy = grid.y[1] - grid.y[0];
    let at = |c: &Vec<f64>, ix: usize, iy: usize| c[iy * nx + ix];
    let mut out = vec![vec![0.0; nx * ny]; sigma.len()];
    for iy in 1..ny - 1 {
        for ix in 1..nx - 1 {
            let x = grid.x[ix];
            let p = iy * nx + ix;
            let dy = |c: &Vec<f64>| (at(c, ix, iy + 1) - at(c, ix, iy - 1)) / (2.0 * hy);
            for (k, c) in sigma.iter().enumerate() {
                let fx = (at(c, ix + 1, iy) - at(c, ix - 1, iy)) / (2.0 * hx);
                let fxx = (at(c, ix + 1, iy) - 2.0 * at(c, ix, iy) + at(c, ix - 1, iy)) / (hx * hx);
                let fyy = (at(c, ix, iy + 1) - 2.0 * at(c, ix, iy) + at(c, ix, iy - 1)) / (hy * hy);
                // (x d_x)(x d_x - 3) f = x^2 f_xx - 2 x f_x
                let mut v = -(x * x * fxx - 2.0 * x * fx) - x * x * fyy;
                if k == 0 && sigma.len() > 1 {
                    v -= 2.0 * x * dy(&sigma[1]);
                } else if k == 1 {
                    v += 2.0 * x * dy(&sigma[0]);
                }
                out[k][p] = v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_jet(rng: &mut ChaCha8Rng, m: [usize; 2], dim: usize) -> MapJet {
        let mut value: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        value[0] = rng.gen_range(0.2..2.0);
        let factors = m
            .iter()
            .map(|&ml| {
                let c = ml + 1;
                let mut f = FactorJet::zeros(c, dim);
                for a in 0..c {
                    for k in 0..dim {
                        f.grad[a][k] = rng.gen_range(-1.0..1.0);
                    }
                    for b in a..c {
                        for k in 0..dim {
                            let v = rng.gen_range(-1.0..1.0);
                            f.hessian[a][b][k] = v;
                            f.hessian[b][a][k] = v;
                        }
                    }
                }
                f
            })
            .collect();
        MapJet { value, factors }
    }

    #[test]
    fn specialized_bidisk_formula_matches_general() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dim = rng.gen_range(2..5);
            let jet = random_jet(&mut rng, [1, 1], dim);
            let x = [rng.gen_range(0.01..2.0), rng.gen_range(0.01..2.0)];
            let a = tension_product_halfspace(&jet, [1, 1], x).unwrap();
            let b = tension_bidisk_halfspace(&jet, x).unwrap();
            for (p, q) in a.components.iter().zip(&b.components) {
                assert!((p - q).abs() <= 1e-14 * p.abs().max(1.0));
            }
        }
    }

    #[test]
    fn totally_geodesic_and_constant_jets_have_zero_tension() {
        // u(x, y) = (x, y, 0) in the first factor, constant in the second.
        let mut f1 = FactorJet::zeros(2, 3);
        f1.grad[0][0] = 1.0;
        f1.grad[1][1] = 1.0;
        let x1 = 0.7;
        let jet = MapJet {
            value: vec![x1, -0.3, 0.0],
            factors: vec![f1, FactorJet::zeros(2, 3)],
        };
        let t = tension_product_halfspace(&jet, [1, 1], [x1, 0.4]).unwrap();
        assert!(t.norm < 1e-15);
        let constant = MapJet {
            value: vec![0.5, 0.1, 0.2],
            factors: vec![FactorJet::zeros(3, 3), FactorJet::zeros(2, 3)],
        };
        let t = tension_product_halfspace(&constant, [2, 1], [0.3, 0.4]).unwrap();
        assert_eq!(t.norm, 0.0);
    }

    #[test]
    fn halfspace_evaluator_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut jet = random_jet(&mut rng, [1, 1], 2);
        assert!(matches!(
            tension_product_halfspace(&jet, [2, 1], [0.1, 0.1]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            tension_product_halfspace(&jet, [1, 1], [0.0, 0.1]),
            Err(Error::NonpositiveHeight(_))
        ));
        jet.value[0] = -0.1;
        assert!(tension_bidisk_halfspace(&jet, [0.1, 0.1]).is_err());
    }

    #[test]
    fn tension_norm_examples() {
        assert_eq!(tension_norm(&[0.0, 0.0], 0.3).unwrap(), 0.0);
        assert!((tension_norm(&[0.3, 0.0, 0.0], 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert!(tension_norm(&[1.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn corner_limit_examples() {
        let (s, c) = corner_limit_expression([1.0, 1.0], [1.0, 1.0], [2, 1]);
        assert!((s + 0.25).abs() < 1e-15 && (c + 0.25).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let a = [rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0)];
            let g = [rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0)];
            let m = [rng.gen_range(1..4), rng.gen_range(1..4)];
            let (s, c) = corner_limit_expression(a, g, m);
            assert!((s - c).abs() < 1e-12);
            let (_, swapped) = corner_limit_expression([a[1], a[0]], [g[1], g[0]], [m[1], m[0]]);
            assert!((c - swapped).abs() < 1e-15);
            if m == [1, 1] {
                assert!(s.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_operator_indicial_roots() {
        let x_pow = |s: f64| -> SymbolicSection {
            vec![vec![Monomial { coeff: 1.0, a: s, b: 0 }], vec![], vec![]]
        };
        assert!(model_operator_symbolic(&x_pow(0.0)).iter().all(|c| c.is_empty()));
        assert!(model_operator_symbolic(&x_pow(3.0)).iter().all(|c| c.is_empty()));
        let out = model_operator_symbolic(&x_pow(1.0));
        assert_eq!(out[0], vec![Monomial { coeff: 2.0, a: 1.0, b: 0 }]);
        assert!(out[1].is_empty());
    }

    #[test]
    fn model_operator_grid_matches_symbolic() {
        let sigma: SymbolicSection = vec![
            vec![Monomial { coeff: 1.0, a: 2.0, b: 2 }],
            vec![Monomial { coeff: -0.5, a: 1.0, b: 3 }],
            vec![Monomial { coeff: 1.0, a: 0.5, b: 1 }],
        ];
        let exact = model_operator_symbolic(&sigma);
        let err = |n: usize| {
            let grid = HalfPlaneGrid::new((0.5, 1.5), (-0.5, 0.5), n, n).unwrap();
            let s: Vec<Vec<f64>> = sigma.iter().map(|c| grid.sample(|x, y| eval_monomials(c, x, y))).collect();
            let out = model_operator_grid(&grid, &s).unwrap();
            let mut worst: f64 = 0.0;
            for iy in 1..n - 1 {
                for ix in 1..n - 1 {
                    let (x, y) = (grid.x[ix], grid.y[iy]);
                    for k in 0..3 {
                        worst = worst.max((out[k][iy * n + ix] - eval_monomials(&exact[k], x, y)).abs());
                    }
                }
            }
            worst
        };
        let (e1, e2) = (err(17), err(33));
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
    }

    fn disk_field(n: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> MapField1 {
        graded_field(n, 0.5, f)
    }

    fn graded_field(n: usize, grading: f64, f: impl Fn(f64, f64) -> [f64; 2]) -> MapField1 {
        let g = DiskGrid::new(n, n, grading).unwrap();
        MapField1::from_fn(g, 2, |z| f(z[0], z[1]).to_vec()).unwrap()
    }

    fn interior_max(t: &TensionField, g: &DiskGrid) -> f64 {
        (0..g.len()).filter(|&p| !g.is_boundary(p)).map(|p| t.norms[p]).fold(0.0, f64::max)
    }

    #[test]
    fn holomorphic_disk_maps_have_vanishing_tension() {
        for k in 1..=3 {
            let err = |n: usize| {
                let u = disk_field(n, |x, y| {
                    let (r, t) = ((x * x + y * y).sqrt(), y.atan2(x));
                    let rk = r.powi(k);
                    [rk * (k as f64 * t).cos(), rk * (k as f64 * t).sin()]
                });
                interior_max(&tension_disk(&u).unwrap(), &u.grid)
            };
            let (e1, e2) = (err(16), err(32));
            assert!(e2 < e1 && ((e1 / e2).log2() > 1.8 || e2 < 1e-11), "k={k}: {e1} {e2}");
        }
    }

    #[test]
    fn euclidean_linear_map_is_not_harmonic() {
        // u = (x/2, y/4): analytic Euclidean-reduced tension is
        // 2 du_a (du_a . g) - |du|^2 g with g = 2u / (1 - |u|^2).
        let u = graded_field(24, 0.0, |x, y| [0.5 * x, 0.25 * y]);
        let t = euclidean_tension_disk(&u).unwrap();
        let g = &u.grid;
        let p = g.idx(10, 3);
        let [x, y] = g.zeta(10, 3);
        let w = [0.5 * x, 0.25 * y];
        let q = 2.0 / (1.0 - w[0] * w[0] - w[1] * w[1]);
        let gg = [q * w[0], q * w[1]];
        // columns of du: d_x u = (1/2, 0), d_y u = (0, 1/4)
        let e = 0.25 + 0.0625;
        let exact = [
            2.0 * 0.5 * (0.5 * gg[0]) - e * gg[0],
            2.0 * 0.25 * (0.25 * gg[1]) - e * gg[1],
        ];
        assert!((t[2 * p] - exact[0]).abs() < 1e-10);
        assert!((t[2 * p + 1] - exact[1]).abs() < 1e-10);
        assert!(exact[0].abs() > 1e-2);
    }

    #[test]
    fn constant_map_has_zero_tension() {
        let u = disk_field(10, |_, _| [0.3, -0.2]);
        assert!(tension_disk(&u).unwrap().max_norm() <= 1e-14);
    }

    #[test]
    fn boundary_contact_is_rejected() {
        let u = disk_field(10, |_, _| [1.0, 0.0]);
        assert!(matches!(tension_disk(&u), Err(Error::BoundaryContact { .. })));
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let base = disk_field(16, |x, y| [0.6 * x - 0.1 * y * y, 0.5 * y + 0.2 * x * y]);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = base.grid.clone();
        let mut sigma = vec![0.0; base.values.len()];
        for p in 0..g.len() {
            if !g.is_boundary(p) {
                sigma[2 * p] = rng.gen_range(-1.0..1.0) * g.rho(p % g.nr());
                sigma[2 * p + 1] = rng.gen_range(-1.0..1.0) * g.rho(p % g.nr());
            }
        }
        let lin = linearized_tension(&base, &sigma).unwrap();
        let t0 = tension_disk(&base).unwrap().vectors;
        let scale = lin.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut errs = Vec::new();
        for eps in [1e-3, 1e-4, 1e-5] {
            let mut moved = base.clone();
            for (v, s) in moved.values.iter_mut().zip(&sigma) {
                *v += eps * s;
            }
            let t1 = tension_disk(&moved).unwrap().vectors;
            let e = t1
                .iter()
                .zip(&t0)
                .zip(&lin)
                .map(|((a, b), l)| ((a - b) / eps - l).abs())
                .fold(0.0, f64::max);
            errs.push(e / scale);
        }
        let slope = (errs[0] / errs[2]).log10() / 2.0;
        assert!(slope >= 0.9, "{errs:?}");
        // linearity
        let doubled: Vec<f64> = sigma.iter().map(|s| 2.5 * s).collect();
        let lin2 = linearized_tension(&base, &doubled).unwrap();
        for (a, b) in lin.iter().zip(&lin2) {
            assert!((2.5 * a - b).abs() < 1e-12 * scale.max(1.0));
        }
        assert!(linearized_tension(&base, &[0.0; 3]).is_err());
    }

    #[test]
    fn chart_fallback_agrees_with_ball_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..50 {
            let dim = 3;
            let mut u = [0.0; 3];
            for v in &mut u {
                *v = rng.gen_range(-0.5..0.5);
            }
            let mut jets = Vec::new();
            for _ in 0..2 {
                let mut j = PolarJet::default();
                for k in 0..dim {
                    j.dr[k] = rng.gen_range(-1.0..1.0);
                    j.dt[k] = rng.gen_range(-1.0..1.0);
                    j.lap[k] = rng.gen_range(-1.0..1.0);
                }
                jets.push((j, rng.gen_range(0.1..1.0)));
            }
            let via_chart = chart_tension(&u, &jets).unwrap();
            let mut g = [0.0; 3];
            geom::ball_log_factor_gradient(&u, &mut g);
            let mut direct = [0.0; 3];
            for (j, w) in &jets {
                ball_factor_tension(&u, &g, j, *w, &mut direct);
            }
            for (a, b) in via_chart.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} {b}");
            }
        }
    }
}
