//! Approximate solution on the bidisk: harmonic extensions on the two
//! boundary faces, the corner blowup gluing, and tension decay fits.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{self, CornerFamily, CornerMap};
use crate::error::{Error, Result};
use crate::field::{BidiskGrid, MapField1, MapField2};
use crate::fit::{self, DecayFit};
use crate::geom::{self, HalfSpaceChart};
use crate::grid::{DiskGrid, PolarSolver, PolarWork};
use crate::litam::{self, ExpansionData, SolveReport, SolverOptions};

/// Order-5 smoothstep `6s^5 - 15s^4 + 10s^3` clamped to `[0, 1]`.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - s * (15.0 - 6.0 * s))
}

/// Cutoff pair on the blowup angle `theta = arctan(x2 / x1)`: `chi1 = 1`
/// below `start`, `chi2 = 1` above `end`, `chi1 + chi2 = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub start: f64,
    pub end: f64,
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self {
            start: FRAC_PI_2 / 4.0,
            end: 3.0 * FRAC_PI_2 / 4.0,
        }
    }
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.start && self.start < self.end && self.end < FRAC_PI_2) {
            return Err(Error::Config(format!(
                "cutoff transition [{}, {}] must lie strictly inside (0, pi/2)",
                self.start, self.end
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn chi2(&self, theta: f64) -> f64 {
        smoothstep((theta - self.start) / (self.end - self.start))
    }

    #[inline]
    pub fn chi1(&self, theta: f64) -> f64 {
        1.0 - self.chi2(theta)
    }
}

/// Remainder merge on the real blowup of the corner; zero at the corner.
pub fn blowup_glue(r1: f64, r2: f64, spec: &CutoffSpec, x1: f64, x2: f64) -> f64 {
    if x1 == 0.0 && x2 == 0.0 {
        return 0.0;
    }
    let theta = x2.atan2(x1);
    let c2 = spec.chi2(theta);
    (1.0 - c2) * r1 + c2 * r2
}

/// Harmonic extensions of the corner datum across both boundary faces.
///
/// `family_a[j2]` lives on the first disk and extends `phi(., theta2_j2)`;
/// `family_b[j1]` lives on the second disk and extends `phi(theta1_j1, .)`.
#[derive(Clone, Debug)]
pub struct TopBoundaryData {
    pub grid: BidiskGrid,
    pub corner: Arc<dyn CornerMap>,
    pub family_a: Vec<MapField1>,
    pub family_b: Vec<MapField1>,
    pub reports_a: Vec<SolveReport>,
    pub reports_b: Vec<SolveReport>,
    /// Largest consecutive-slice difference in each family.
    pub max_first_difference: [f64; 2],
    /// Largest second difference across slices in each family.
    pub max_second_difference: [f64; 2],
}

/// Warm-started sweeps run in this many independent chunks; fixed so the
/// result does not depend on the worker count.
const FAMILY_CHUNKS: usize = 8;

fn solve_face_family(
    phi: &Arc<dyn CornerMap>,
    factor: usize,
    grid: &DiskGrid,
    ts: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<MapField1>, Vec<SolveReport>)> {
    let family = CornerFamily {
        map: phi.clone(),
        factor,
    };
    let chunk = ts.len().div_ceil(FAMILY_CHUNKS).max(1);
    let parts: Vec<Result<litam::FamilySolution>> = ts
        .par_chunks(chunk)
        .map(|c| litam::solve_family(&family, c, grid, opts))
        .collect();
    let mut fields = Vec::with_capacity(ts.len());
    let mut reports = Vec::with_capacity(ts.len());
    for part in parts {
        let part = part?;
        fields.extend(part.fields);
        reports.extend(part.reports);
    }
    Ok((fields, reports))
}

pub fn initial_extension(phi: Arc<dyn CornerMap>, grid: &BidiskGrid, opts: &SolverOptions) -> Result<TopBoundaryData> {
    let nd = boundary::nondegeneracy_report(phi.as_ref(), 64, boundary::DEFAULT_MARGIN)?;
    if !nd.pass {
        return Err(Error::DegenerateDatum(format!(
            "factor differentials drop to ({:.3e}, {:.3e}) below margin {:.0e}",
            nd.min_d1, nd.min_d2, nd.margin
        )));
    }
    let (a, b) = rayon::join(
        || solve_face_family(&phi, 0, &grid.first, grid.second.thetas(), opts),
        || solve_face_family(&phi, 1, &grid.second, grid.first.thetas(), opts),
    );
    let (family_a, reports_a) = a?;
    let (family_b, reports_b) = b?;
    let maxv = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    let (fa, sa) = litam::family_differences(&family_a);
    let (fb, sb) = litam::family_differences(&family_b);
    Ok(TopBoundaryData {
        grid: grid.clone(),
        corner: phi,
        family_a,
        family_b,
        reports_a,
        reports_b,
        max_first_difference: [maxv(fa), maxv(fb)],
        max_second_difference: [maxv(sa), maxv(sb)],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlueOptions {
    pub cutoff: CutoffSpec,
    /// Chart height beyond which the corner construction is switched off;
    /// it is fully on below half this height in both factors.
    pub corner_height: f64,
    /// Near-boundary layers used by the expansion fits.
    pub window: usize,
}

impl Default for GlueOptions {
    fn default() -> Self {
        Self {
            cutoff: CutoffSpec::default(),
            corner_height: 0.25,
            window: litam::DEFAULT_WINDOW,
        }
    }
}

/// Glued map with the construction diagnostics.
#[derive(Clone, Debug)]
pub struct ApproximateMap {
    pub v: MapField2,
    pub expansions_a: Vec<ExpansionData>,
    pub expansions_b: Vec<ExpansionData>,
    /// Largest discrete second difference of the first-order coefficients
    /// across the family parameter, per family.
    pub psi_roughness: [f64; 2],
    pub options: GlueOptions,
}

/// Componentwise discrete harmonic extension, one disk slice at a time:
/// `out[p_other][p * dim + c]` extends `data(p_other, j)` from the circle.
fn slice_extensions(
    grid: &DiskGrid,
    others: usize,
    dim: usize,
    data: impl Fn(usize, usize) -> Vec<f64> + Sync,
) -> Vec<Vec<f64>> {
    let solver = PolarSolver::laplacian(grid);
    let ib = grid.boundary_index();
    (0..others)
        .into_par_iter()
        .map_init(PolarWork::default, |work, q| {
            let mut out = vec![0.0; grid.len() * dim];
            let ring: Vec<Vec<f64>> = (0..grid.ntheta()).map(|j| data(q, j)).collect();
            let mut f = vec![0.0; grid.len()];
            for c in 0..dim {
                f.iter_mut().for_each(|v| *v = 0.0);
                for (j, v) in ring.iter().enumerate() {
                    f[grid.idx(ib, j)] = v[c];
                }
                solver.solve_in_place(&mut f, work);
                for p in 0..grid.len() {
                    out[p * dim + c] = f[p];
                }
            }
            out
        })
        .collect()
}

/// Weight of the corner construction as a function of one chart height.
#[inline]
fn corner_profile(x: f64, height: f64) -> f64 {
    1.0 - smoothstep((x / height - 0.5) * 2.0)
}

fn roughness(exps: &[ExpansionData]) -> f64 {
    let mut worst: f64 = 0.0;
    for w in exps.windows(3) {
        for j in 0..w[0].psi1.len() {
            for k in 0..w[0].dim {
                worst = worst.max((w[2].psi1[j][k] - 2.0 * w[1].psi1[j][k] + w[0].psi1[j][k]).abs());
            }
        }
    }
    worst
}

/// Assemble the approximate map from solved face families.
pub fn assemble(top: &TopBoundaryData, opts: &GlueOptions) -> Result<ApproximateMap> {
    opts.cutoff.validate()?;
    if !(opts.corner_height > 0.0 && opts.corner_height <= 1.0) {
        return Err(Error::Config(format!(
            "corner height {} outside (0, 1]",
            opts.corner_height
        )));
    }
    let grid = &top.grid;
    let (g1, g2) = (&grid.first, &grid.second);
    let dim = top.corner.dim();
    let expansions_a: Vec<ExpansionData> = top
        .family_a
        .par_iter()
        .map(|u| litam::extract_expansion(u, opts.window))
        .collect::<Result<_>>()?;
    let expansions_b: Vec<ExpansionData> = top
        .family_b
        .par_iter()
        .map(|u| litam::extract_expansion(u, opts.window))
        .collect::<Result<_>>()?;

    // Far field: each face extended harmonically across the other factor.
    let far_a = slice_extensions(g2, g1.len(), dim, |p1, j2| top.family_a[j2].at(p1).to_vec());
    let far_b = slice_extensions(g1, g2.len(), dim, |p2, j1| top.family_b[j1].at(p2).to_vec());

    let charts: Vec<HalfSpaceChart> = (0..g1.ntheta() * g2.ntheta())
        .map(|q| {
            let (j1, j2) = (q / g2.ntheta(), q % g2.ntheta());
            let c = top.family_a[j2].at(g1.idx(g1.boundary_index(), j1));
            let pole: Vec<f64> = c.iter().map(|v| -v).collect();
            HalfSpaceChart::new(&pole)
        })
        .collect::<Result<_>>()?;

    let mut v = MapField2::zeros(grid.clone(), dim)?;
    let n2 = g2.len();
    let failure: std::sync::Mutex<Option<Error>> = std::sync::Mutex::new(None);
    v.values.par_chunks_mut(n2 * dim).enumerate().for_each(|(p1, row)| {
        let (i1, j1) = g1.split(p1);
        for p2 in 0..n2 {
            let (i2, j2) = g2.split(p2);
            let out = &mut row[p2 * dim..(p2 + 1) * dim];
            if g2.is_boundary(p2) {
                out.copy_from_slice(top.family_a[j2].at(p1));
                continue;
            }
            if g1.is_boundary(p1) {
                out.copy_from_slice(top.family_b[j1].at(p2));
                continue;
            }
            let (rho1, rho2) = (g1.rho(i1), g2.rho(i2));
            let wa = opts.cutoff.chi1(FRAC_PI_2 * rho2 / (rho1 + rho2));
            let fa = &far_a[p1][p2 * dim..(p2 + 1) * dim];
            let fb = &far_b[p2][p1 * dim..(p1 + 1) * dim];
            for c in 0..dim {
                out[c] = wa * fa[c] + (1.0 - wa) * fb[c];
            }
            let (x1, x2) = (g1.chart_height(i1), g2.chart_height(i2));
            let eta = corner_profile(x1, opts.corner_height) * corner_profile(x2, opts.corner_height);
            if eta == 0.0 {
                continue;
            }
            let chart = &charts[j1 * g2.ntheta() + j2];
            let corner = (|| -> Result<Vec<f64>> {
                let ea = &expansions_a[j2];
                let eb = &expansions_b[j1];
                let ca = chart.to_chart(top.family_a[j2].at(p1))?;
                let cb = chart.to_chart(top.family_b[j1].at(p2))?;
                let mut chart_value = vec![0.0; dim];
                for k in 0..dim {
                    let e1 = x1 * ea.psi1[j1][k] + x1 * x1 * ea.psi2[j1][k];
                    let e2 = x2 * eb.psi1[j2][k] + x2 * x2 * eb.psi2[j2][k];
                    chart_value[k] = e1 + e2 + blowup_glue(ca[k] - e1, cb[k] - e2, &opts.cutoff, x1, x2);
                }
                if chart_value[0] <= 0.0 {
                    return Err(Error::DegenerateDatum(format!(
                        "corner construction leaves the half-space at heights ({x1:.3e}, {x2:.3e})"
                    )));
                }
                chart.from_chart(&chart_value)
            })();
            match corner {
                Ok(vc) => {
                    for c in 0..dim {
                        out[c] = eta * vc[c] + (1.0 - eta) * out[c];
                    }
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    v.check_interior()?;
    Ok(ApproximateMap {
        psi_roughness: [roughness(&expansions_a), roughness(&expansions_b)],
        v,
        expansions_a,
        expansions_b,
        options: opts.clone(),
    })
}

/// Initial extension followed by assembly.
pub fn build_approximate_map(
    phi: Arc<dyn CornerMap>,
    grid: &BidiskGrid,
    solver: &SolverOptions,
    opts: &GlueOptions,
) -> Result<(TopBoundaryData, ApproximateMap)> {
    let top = initial_extension(phi, grid, solver)?;
    let map = assemble(&top, opts)?;
    Ok((top, map))
}

/// Different admissible interior fill: `v` displaced by a smooth bump that
/// vanishes on the boundary faces, in a seeded random direction. Values stay
/// inside the ball by capping the displacement at half the gap to the
/// sphere.
pub fn perturb_interior(v: &MapField2, seed: u64, amplitude: f64) -> MapField2 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: Vec<f64> = (0..v.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = geom::norm_sq(&dir).sqrt().max(1e-12);
    let dir: Vec<f64> = dir.iter().map(|d| d / n).collect();
    let mut out = v.clone();
    let grid = v.grid.clone();
    for p in grid.interior() {
        let (p1, p2) = grid.split(p);
        let (r1, r2) = (grid.first.radius(p1 % grid.first.nr()), grid.second.radius(p2 % grid.second.nr()));
        let bump = (1.0 - r1 * r1) * (1.0 - r2 * r2);
        let x = out.at_mut(p);
        let gap = 1.0 - geom::norm_sq(x).sqrt();
        let step = (amplitude * bump).min(0.5 * gap);
        for (xi, d) in x.iter_mut().zip(&dir) {
            *xi += step * d;
        }
    }
    out
}

/// How nodal values enter a corner decay fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// One sample per radial pair: the largest value over all boundary
    /// angles, matching a sup-norm decay bound.
    #[default]
    Envelope,
    /// Every node is a sample.
    Pooled,
}

/// Near-corner node selection for decay fits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CornerSubgrid {
    /// Upper bound on both boundary defining functions `1 - |z|^2`.
    pub rho_max: f64,
    /// Values at or below this are treated as numerical zero.
    pub floor: f64,
    pub sampling: Sampling,
}

impl Default for CornerSubgrid {
    fn default() -> Self {
        Self {
            rho_max: 0.3,
            floor: 1e-12,
            sampling: Sampling::Envelope,
        }
    }
}

/// `(rho1, rho2, q)` samples from interior nodes of the near-corner subgrid.
pub fn corner_samples(values: &[f64], grid: &BidiskGrid, sub: &CornerSubgrid) -> Vec<(f64, f64, f64)> {
    let (g1, g2) = (&grid.first, &grid.second);
    let near1: Vec<usize> = (0..g1.nr() - 1).filter(|&i| g1.rho(i) <= sub.rho_max).collect();
    let near2: Vec<usize> = (0..g2.nr() - 1).filter(|&i| g2.rho(i) <= sub.rho_max).collect();
    let mut out = Vec::new();
    for &i1 in &near1 {
        for &i2 in &near2 {
            let (r1, r2) = (g1.rho(i1), g2.rho(i2));
            let mut peak: f64 = 0.0;
            for j1 in 0..g1.ntheta() {
                for j2 in 0..g2.ntheta() {
                    let q = values[grid.idx(g1.idx(i1, j1), g2.idx(i2, j2))];
                    match sub.sampling {
                        Sampling::Envelope => peak = peak.max(q),
                        Sampling::Pooled => out.push((r1, r2, q)),
                    }
                }
            }
            if sub.sampling == Sampling::Envelope {
                out.push((r1, r2, peak));
            }
        }
    }
    out
}

/// Two-variable log-log fit of a nodal quantity against `rho1`, `rho2`.
pub fn decay_fit(values: &[f64], grid: &BidiskGrid, sub: &CornerSubgrid) -> Result<DecayFit> {
    if values.len() != grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for {} nodes",
            values.len(),
            grid.len()
        )));
    }
    fit::power_law_fit(&corner_samples(values, grid, sub), sub.floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::PhaseMap;
    use crate::tension;

    fn small_grid(n: usize) -> BidiskGrid {
        BidiskGrid::square(DiskGrid::new(n, n, 0.8).unwrap())
    }

    #[test]
    fn cutoffs_partition_unity() {
        let s = CutoffSpec::default();
        for k in 0..=1000 {
            let t = FRAC_PI_2 * k as f64 / 1000.0;
            assert!((s.chi1(t) + s.chi2(t) - 1.0).abs() <= 1e-14);
        }
        assert_eq!(s.chi1(0.1), 1.0);
        assert_eq!(s.chi2(1.5), 1.0);
        assert!(CutoffSpec { start: 1.0, end: 0.5 }.validate().is_err());
    }

    #[test]
    fn blowup_glue_branches() {
        let s = CutoffSpec::default();
        assert_eq!(blowup_glue(3.0, 5.0, &s, 1.0, 0.01), 3.0);
        assert_eq!(blowup_glue(3.0, 5.0, &s, 0.0, 0.2), 5.0);
        assert_eq!(blowup_glue(3.0, 5.0, &s, 0.0, 0.0), 0.0);
        let mid = blowup_glue(3.0, 5.0, &s, 1.0, 1.0);
        assert!((mid - 4.0).abs() < 1e-12);
    }

    #[test]
    fn angle_sum_faces_are_rotated_identities() {
        let g = small_grid(16);
        let phi: Arc<dyn CornerMap> = Arc::new(PhaseMap::angle_sum(2));
        let top = initial_extension(phi, &g, &SolverOptions::default()).unwrap();
        for (j2, u) in top.family_a.iter().enumerate() {
            let t2 = g.second.theta(j2);
            let (s, c) = t2.sin_cos();
            for p in 0..g.first.len() {
                let (i, j) = g.first.split(p);
                let z = g.first.zeta(i, j);
                let w = [c * z[0] - s * z[1], s * z[0] + c * z[1]];
                let got = u.at(p);
                assert!((got[0] - w[0]).abs() < 1e-4 && (got[1] - w[1]).abs() < 1e-4, "{got:?} {w:?}");
            }
        }
        assert!(top.max_first_difference[0] > 0.0);
    }

    #[test]
    fn glued_map_matches_faces_and_is_proper_only_at_the_corner() {
        let g = small_grid(16);
        let phi: Arc<dyn CornerMap> = Arc::new(PhaseMap::generic(3, 0.6, 0.3));
        let (top, map) = build_approximate_map(phi.clone(), &g, &SolverOptions::default(), &GlueOptions::default()).unwrap();
        let v = &map.v;
        for p in 0..g.len() {
            let (p1, p2) = g.split(p);
            let (i1, j1) = g.first.split(p1);
            let (i2, j2) = g.second.split(p2);
            if g.first.is_boundary(p1) && g.second.is_boundary(p2) {
                assert_eq!(v.at(p), phi.eval([g.first.theta(j1), g.second.theta(j2)]).as_slice());
                let _ = i2;
            } else if g.second.is_boundary(p2) {
                assert_eq!(v.at(p), top.family_a[j2].at(p1));
            } else if g.first.is_boundary(p1) {
                assert_eq!(v.at(p), top.family_b[j1].at(p2));
                let _ = i1;
            } else {
                assert!(1.0 - geom::norm_sq(v.at(p)).sqrt() > 0.0);
            }
        }
        // faces are individually harmonic to solver tolerance
        for u in &top.family_a {
            assert!(tension::tension_disk(u).unwrap().max_norm() <= 2e-8);
        }
    }

    #[test]
    fn decay_fit_requires_samples() {
        let g = small_grid(16);
        let vals = vec![1.0; g.len()];
        let sub = CornerSubgrid { rho_max: 1e-9, floor: 0.0, sampling: Sampling::Pooled };
        assert!(matches!(decay_fit(&vals, &g, &sub), Err(Error::InsufficientSamples { .. })));
        assert!(decay_fit(&vals[1..], &g, &sub).is_err());
    }

    #[test]
    fn perturbed_fill_keeps_faces() {
        let g = small_grid(16);
        let v = MapField2::from_fn(g.clone(), 2, |a, b, o| {
            o[0] = a[0] * b[0] - a[1] * b[1];
            o[1] = a[0] * b[1] + a[1] * b[0];
        })
        .unwrap();
        let w = perturb_interior(&v, 7, 0.2);
        w.check_interior().unwrap();
        for p in 0..g.len() {
            if g.is_boundary(p) {
                assert_eq!(v.at(p), w.at(p));
            }
        }
        assert!(w.sup_distance(&v).unwrap() > 0.01);
        assert_eq!(w, perturb_interior(&v, 7, 0.2));
    }
}
