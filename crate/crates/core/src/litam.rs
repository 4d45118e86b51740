//! Proper harmonic extension of a boundary loop `phi: S^1 -> S^n` to a map
//! from the Poincaré disk into the ball, plus family sweeps and the
//! near-boundary expansion of the solution in half-space charts.

use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::{self, LoopFamily, LoopMap};
use crate::error::{Error, Result};
use crate::field::MapField1;
use crate::geom::{self, HalfSpaceChart};
use crate::grid::{AngularScheme, DiskGrid, PolarSolver, PolarWork};
use crate::linalg;
use crate::tension::{self, PolarJet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Newton iterations before giving up.
    pub max_iterations: usize,
    /// Target for the largest interior hyperbolic tension norm.
    pub tolerance: f64,
    /// Krylov restart length and per-step iteration cap.
    pub gmres_restart: usize,
    pub gmres_max_iterations: usize,
    /// Relative accuracy of each inner linear solve.
    pub forcing: f64,
    /// Smallest accepted Newton step fraction before the pseudo-time
    /// fallback takes over.
    pub min_step: f64,
    /// Pseudo-time step and step budget for the heat-flow fallback.
    pub pseudo_dt: f64,
    pub pseudo_steps: usize,
    /// Weight of the boundary-layer constraint `u0 = sqrt(e) x` on the first
    /// interior ring, scaled by the inverse squared radial spacing there
    /// (0 disables).
    pub ghost_weight: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 40,
            tolerance: 1e-8,
            gmres_restart: 40,
            gmres_max_iterations: 400,
            forcing: 1e-4,
            min_step: 1.0 / 64.0,
            pseudo_dt: 0.5,
            pseudo_steps: 200,
            ghost_weight: 0.0,
        }
    }
}

/// Convergence record of a single solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub newton_steps: usize,
    pub krylov_iterations: usize,
    pub pseudo_steps: usize,
    /// Max interior hyperbolic tension after each outer iteration.
    pub history: Vec<f64>,
    /// Set when iteration stopped at the rounding floor within 100x of the
    /// tolerance instead of reaching it.
    pub stagnated: bool,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Boundary values of `phi` on the grid's circle, node-major.
pub fn boundary_samples(phi: &dyn LoopMap, grid: &DiskGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.ntheta() * phi.dim());
    for j in 0..grid.ntheta() {
        out.extend(phi.eval(grid.theta(j)));
    }
    out
}

fn check_loop(phi: &dyn LoopMap, grid: &DiskGrid) -> Result<()> {
    let samples = (4 * grid.ntheta()).max(64);
    let speed = boundary::loop_min_speed(phi, samples)?;
    if speed <= boundary::DEFAULT_MARGIN {
        return Err(Error::DegenerateDatum(format!(
            "boundary loop speed drops to {speed:.3e} (margin {:.0e})",
            boundary::DEFAULT_MARGIN
        )));
    }
    Ok(())
}

/// Componentwise discrete harmonic extension of the boundary ring of `u`,
/// pulled inside the ball where rounding would put it on or outside the
/// sphere.
pub fn harmonic_initial_guess(u: &mut MapField1) {
    let g = u.grid.clone();
    let solver = PolarSolver::laplacian(&g);
    let mut work = PolarWork::default();
    for c in 0..u.dim {
        let mut f = u.component(c);
        for p in 0..g.len() {
            if !g.is_boundary(p) {
                f[p] = 0.0;
            }
        }
        solver.solve_in_place(&mut f, &mut work);
        u.set_component(c, &f);
    }
    confine(u);
}

/// Scale interior values so that `|u| <= (1 + r) / 2` at radius `r`.
fn confine(u: &mut MapField1) {
    let g = u.grid.clone();
    for p in 0..g.len() {
        if g.is_boundary(p) {
            continue;
        }
        let cap = 0.5 * (1.0 + g.radius(p % g.nr()));
        let v = u.at_mut(p);
        let n = geom::norm_sq(v).sqrt();
        if n > cap {
            v.iter_mut().for_each(|x| *x *= cap / n);
        }
    }
}

/// Max interior hyperbolic tension norm and the Euclidean-reduced residual.
fn residual(u: &MapField1) -> Result<(Vec<f64>, f64)> {
    let r = tension::euclidean_tension_disk(u)?;
    let g = &u.grid;
    let mut worst: f64 = 0.0;
    for p in 0..g.len() {
        if g.is_boundary(p) {
            continue;
        }
        let w = g.conformal_weight(p % g.nr());
        let t = &r[p * u.dim..(p + 1) * u.dim];
        let h = w * geom::ball_vector_norm(u.at(p), t);
        worst = worst.max(h);
    }
    Ok((r, worst))
}

/// Ghost-constraint target on the first interior ring: the chart point
/// `(sqrt(e) x, 0, ..., 0)` mapped back to the ball.
fn ghost_targets(phi: &dyn LoopMap, grid: &DiskGrid) -> Result<Vec<Vec<f64>>> {
    let i = grid.nr() - 2;
    let x = grid.chart_height(i);
    (0..grid.ntheta())
        .map(|j| {
            let th = grid.theta(j);
            let v = phi.eval(th);
            let a = phi.energy(th)?.sqrt();
            let pole: Vec<f64> = v.iter().map(|c| -c).collect();
            let chart = HalfSpaceChart::new(&pole)?;
            let mut c = vec![0.0; v.len()];
            c[0] = a * x;
            chart.from_chart(&c)
        })
        .collect()
}

struct Problem<'a> {
    grid: &'a DiskGrid,
    dim: usize,
    laplace: PolarSolver,
    ghost: Option<(f64, Vec<Vec<f64>>)>,
}

impl Problem<'_> {
    fn full_residual(&self, u: &MapField1) -> Result<(Vec<f64>, f64)> {
        let (mut r, worst) = residual(u)?;
        if let Some((kappa, targets)) = &self.ghost {
            let i = self.grid.nr() - 2;
            for (j, t) in targets.iter().enumerate() {
                let p = self.grid.idx(i, j);
                for c in 0..self.dim {
                    r[p * self.dim + c] += kappa * (t[c] - u.values[p * self.dim + c]);
                }
            }
        }
        Ok((r, worst))
    }

    fn jacobian(&self, u: &MapField1, du: &[crate::grid::Derivs], v: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let dim = self.dim;
        let dv = tension::component_derivs(g, dim, v, AngularScheme::Spectral);
        let mut out = vec![0.0; v.len()];
        for p in 0..g.len() {
            if g.is_boundary(p) {
                continue;
            }
            let r = g.radius(p % g.nr());
            let ju = PolarJet::from_derivs(du, p, r);
            let jv = PolarJet::from_derivs(&dv, p, r);
            tension::linearized_pointwise(
                u.at(p),
                &v[p * dim..(p + 1) * dim],
                &ju,
                &jv,
                &mut out[p * dim..(p + 1) * dim],
            );
        }
        if let Some((kappa, _)) = &self.ghost {
            let i = g.nr() - 2;
            for j in 0..g.ntheta() {
                let p = g.idx(i, j);
                for c in 0..dim {
                    out[p * dim + c] -= kappa * v[p * dim + c];
                }
            }
        }
        out
    }

    /// Inverse Laplacian, componentwise, with zero boundary values.
    fn precondition(&self, r: &[f64], work: &mut PolarWork) -> Vec<f64> {
        let g = self.grid;
        let dim = self.dim;
        let mut out = vec![0.0; r.len()];
        let mut f = vec![0.0; g.len()];
        for c in 0..dim {
            for p in 0..g.len() {
                f[p] = if g.is_boundary(p) { 0.0 } else { r[p * dim + c] };
            }
            self.laplace.solve_in_place(&mut f, work);
            for p in 0..g.len() {
                out[p * dim + c] = -f[p];
            }
        }
        out
    }
}

/// Solve for the proper harmonic extension starting from `u`, whose
/// boundary ring must already hold the Dirichlet data. The boundary ring is
/// never modified.
pub fn solve_from(
    u: &mut MapField1,
    phi: Option<&dyn LoopMap>,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if opts.tolerance <= 0.0 {
        return Err(Error::Config("solver tolerance must be positive".into()));
    }
    let grid = u.grid.clone();
    let dim = u.dim;
    let ghost = match (phi, opts.ghost_weight > 0.0) {
        (Some(phi), true) => {
            let i = grid.nr() - 2;
            let h = grid.radius(i + 1) - grid.radius(i);
            let kappa = opts.ghost_weight / (h * h);
            Some((kappa, ghost_targets(phi, &grid)?))
        }
        _ => None,
    };
    let problem = Problem {
        grid: &grid,
        dim,
        laplace: PolarSolver::laplacian(&grid),
        ghost,
    };
    let mut work = PolarWork::default();
    let mut report = SolveReport::default();
    let (mut r, mut worst) = problem.full_residual(u)?;
    report.history.push(worst);
    let mut merit = linalg::norm(&r);
    while worst > opts.tolerance {
        if report.newton_steps >= opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations: report.newton_steps,
                residual: worst,
                history: report.history,
            });
        }
        report.newton_steps += 1;
        let du = tension::component_derivs(&grid, dim, &u.values, AngularScheme::Spectral);
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (y, stats) = linalg::gmres(
            |v| {
                let z = problem.precondition(v, &mut work);
                Ok(problem.jacobian(u, &du, &z))
            },
            &rhs,
            opts.gmres_restart,
            opts.gmres_max_iterations,
            opts.forcing,
        )?;
        report.krylov_iterations += stats.iterations;
        let delta = problem.precondition(&y, &mut work);
        // Backtracking on the residual norm, keeping values in the ball.
        let mut step = 1.0;
        let mut accepted = None;
        while step >= opts.min_step {
            let mut trial = u.clone();
            linalg::axpy(step, &delta, &mut trial.values);
            if trial.check_interior().is_ok() {
                if let Ok((tr, tw)) = problem.full_residual(&trial) {
                    let tm = linalg::norm(&tr);
                    if tm < (1.0 - 1e-4 * step) * merit {
                        accepted = Some((trial, tr, tw, tm));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, tr, tw, tm)) => {
                *u = trial;
                r = tr;
                worst = tw;
                merit = tm;
            }
            None => {
                let steps = pseudo_time(u, &problem, opts, &mut work)?;
                report.pseudo_steps += steps;
                let (tr, tw) = problem.full_residual(u)?;
                merit = linalg::norm(&tr);
                r = tr;
                worst = tw;
            }
        }
        report.history.push(worst);
        let h = &report.history;
        if h.len() >= 4 && worst <= 100.0 * opts.tolerance && h[h.len() - 4] <= 1.5 * worst {
            report.stagnated = true;
            break;
        }
    }
    Ok(report)
}

/// Semi-implicit harmonic-map heat flow: `(I - dt w L) delta = dt w T(u)`.
fn pseudo_time(
    u: &mut MapField1,
    problem: &Problem<'_>,
    opts: &SolverOptions,
    work: &mut PolarWork,
) -> Result<usize> {
    let g = problem.grid;
    let dim = problem.dim;
    let mut dt = opts.pseudo_dt;
    let mut solver = PolarSolver::implicit_heat(g, dt);
    let mut f = vec![0.0; g.len()];
    let (_, mut last) = problem.full_residual(u)?;
    for step in 0..opts.pseudo_steps {
        let (r, _) = problem.full_residual(u)?;
        let mut next = u.clone();
        for c in 0..dim {
            for p in 0..g.len() {
                f[p] = if g.is_boundary(p) {
                    0.0
                } else {
                    dt * g.conformal_weight(p % g.nr()) * r[p * dim + c]
                };
            }
            solver.solve_in_place(&mut f, work);
            for p in 0..g.len() {
                if !g.is_boundary(p) {
                    next.values[p * dim + c] += f[p];
                }
            }
        }
        match next.check_interior().and_then(|_| problem.full_residual(&next)) {
            Ok((_, w)) if w.is_finite() => {
                *u = next;
                if w < 0.5 * last || w <= opts.tolerance {
                    return Ok(step + 1);
                }
                last = last.min(w);
            }
            _ => {
                dt *= 0.5;
                solver = PolarSolver::implicit_heat(g, dt);
            }
        }
    }
    Ok(opts.pseudo_steps)
}

/// Proper harmonic extension of `phi` on `grid` (target `B^{phi.dim()}`).
pub fn solve_extension(phi: &dyn LoopMap, grid: &DiskGrid, opts: &SolverOptions) -> Result<MapField1> {
    solve_extension_with_report(phi, grid, opts).map(|(u, _)| u)
}

pub fn solve_extension_with_report(
    phi: &dyn LoopMap,
    grid: &DiskGrid,
    opts: &SolverOptions,
) -> Result<(MapField1, SolveReport)> {
    check_loop(phi, grid)?;
    let mut u = MapField1::zeros(grid.clone(), phi.dim())?;
    write_boundary(&mut u, &boundary_samples(phi, grid));
    harmonic_initial_guess(&mut u);
    let report = solve_from(&mut u, Some(phi), opts)?;
    Ok((u, report))
}

fn write_boundary(u: &mut MapField1, samples: &[f64]) {
    let g = u.grid.clone();
    let dim = u.dim;
    let i = g.boundary_index();
    for j in 0..g.ntheta() {
        let p = g.idx(i, j);
        u.at_mut(p).copy_from_slice(&samples[j * dim..(j + 1) * dim]);
    }
}

/// Solutions along a loop family with smoothness diagnostics in the
/// parameter.
#[derive(Clone, Debug)]
pub struct FamilySolution {
    pub ts: Vec<f64>,
    pub fields: Vec<MapField1>,
    pub reports: Vec<SolveReport>,
    /// Sup-norm of consecutive differences `u_{k+1} - u_k` (ball coordinates).
    pub first_differences: Vec<f64>,
    /// Sup-norm of `u_{k+1} - 2 u_k + u_{k-1}`.
    pub second_differences: Vec<f64>,
}

/// Solve each slice of `family` at the parameters `ts`, warm-starting from
/// the previous slice plus the harmonic extension of the boundary change.
pub fn solve_family(
    family: &dyn LoopFamily,
    ts: &[f64],
    grid: &DiskGrid,
    opts: &SolverOptions,
) -> Result<FamilySolution> {
    let mut fields: Vec<MapField1> = Vec::with_capacity(ts.len());
    let mut reports = Vec::with_capacity(ts.len());
    for &t in ts {
        let slice = family.slice(t);
        let tag = |e: Error| Error::FamilySlice { t, source: Box::new(e) };
        check_loop(slice.as_ref(), grid).map_err(tag)?;
        let samples = boundary_samples(slice.as_ref(), grid);
        let mut u = match fields.last() {
            Some(prev) => warm_start(prev, &samples),
            None => {
                let mut u = MapField1::zeros(grid.clone(), slice.dim()).map_err(tag)?;
                write_boundary(&mut u, &samples);
                harmonic_initial_guess(&mut u);
                u
            }
        };
        let report = solve_from(&mut u, Some(slice.as_ref()), opts).map_err(tag)?;
        fields.push(u);
        reports.push(report);
    }
    let (first_differences, second_differences) = family_differences(&fields);
    Ok(FamilySolution {
        ts: ts.to_vec(),
        fields,
        reports,
        first_differences,
        second_differences,
    })
}

/// Sup-norms of first and second differences between consecutive fields.
pub fn family_differences(fields: &[MapField1]) -> (Vec<f64>, Vec<f64>) {
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let first = fields.windows(2).map(|w| sup(&w[1].values, &w[0].values)).collect();
    let second = fields
        .windows(3)
        .map(|w| {
            w[0].values
                .iter()
                .zip(&w[1].values)
                .zip(&w[2].values)
                .map(|((a, b), c)| (c - 2.0 * b + a).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    (first, second)
}

/// Previous solution corrected by the harmonic extension of the change in
/// boundary data.
pub fn warm_start(prev: &MapField1, samples: &[f64]) -> MapField1 {
    let g = prev.grid.clone();
    let dim = prev.dim;
    let mut delta = MapField1 {
        grid: g.clone(),
        dim,
        values: vec![0.0; prev.values.len()],
    };
    let i = g.boundary_index();
    for j in 0..g.ntheta() {
        let p = g.idx(i, j);
        for c in 0..dim {
            delta.values[p * dim + c] = samples[j * dim + c] - prev.values[p * dim + c];
        }
    }
    harmonic_delta(&mut delta);
    let mut u = prev.clone();
    linalg::axpy(1.0, &delta.values, &mut u.values);
    write_boundary(&mut u, samples);
    confine(&mut u);
    u
}

fn harmonic_delta(d: &mut MapField1) {
    let g = d.grid.clone();
    let solver = PolarSolver::laplacian(&g);
    let mut work = PolarWork::default();
    for c in 0..d.dim {
        let mut f = d.component(c);
        solver.solve_in_place(&mut f, &mut work);
        d.set_component(c, &f);
    }
}

/// Number of near-boundary layers used by the chart fits.
pub const DEFAULT_WINDOW: usize = 6;

/// Near-boundary expansion `u = psi1 x + psi2 x^2 + R(x)` of each component
/// in the half-space chart at every boundary angle of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionData {
    pub dim: usize,
    pub angles: Vec<f64>,
    /// Chart height of each radial node on a ray (decreasing to 0).
    pub heights: Vec<f64>,
    /// `psi1[j][k]`, `psi2[j][k]`.
    pub psi1: Vec<Vec<f64>>,
    pub psi2: Vec<Vec<f64>>,
    /// `remainder[j][i * dim + k]` at radial node `i`.
    pub remainder: Vec<Vec<f64>>,
    /// Root-mean-square fit residual per angle.
    pub fit_residual: Vec<f64>,
    pub window: usize,
}

/// Chart values of `u` along the ray at angular index `j`, using the domain
/// chart anchored at the ray and the target chart with pole `-u(boundary)`.
pub fn ray_chart_values(u: &MapField1, j: usize) -> Result<Vec<Vec<f64>>> {
    let g = &u.grid;
    let boundary = u.at(g.idx(g.boundary_index(), j));
    let pole: Vec<f64> = boundary.iter().map(|c| -c).collect();
    let chart = HalfSpaceChart::new(&pole)?;
    (0..g.nr())
        .map(|i| {
            if i == g.boundary_index() {
                Ok(vec![0.0; u.dim])
            } else {
                chart.to_chart(u.at(g.idx(i, j)))
            }
        })
        .collect()
}

pub fn extract_expansion(u: &MapField1, window: usize) -> Result<ExpansionData> {
    let g = &u.grid;
    if window < 4 {
        return Err(Error::IllConditionedFit(format!(
            "fit window spans {window} layers, need at least 4"
        )));
    }
    if window > g.nr() - 1 {
        return Err(Error::InsufficientSamples {
            have: g.nr() - 1,
            need: window,
        });
    }
    let nr = g.nr();
    let heights: Vec<f64> = (0..nr).map(|i| g.chart_height(i)).collect();
    let layers: Vec<usize> = (nr - 1 - window..nr - 1).collect();
    let rows: Vec<Vec<f64>> = layers.iter().map(|&i| vec![heights[i], heights[i] * heights[i]]).collect();
    let mut out = ExpansionData {
        dim: u.dim,
        angles: g.thetas().to_vec(),
        heights: heights.clone(),
        psi1: Vec::new(),
        psi2: Vec::new(),
        remainder: Vec::new(),
        fit_residual: Vec::new(),
        window,
    };
    for j in 0..g.ntheta() {
        let vals = ray_chart_values(u, j)?;
        let mut p1 = vec![0.0; u.dim];
        let mut p2 = vec![0.0; u.dim];
        let mut ss = 0.0;
        for k in 0..u.dim {
            let b: Vec<f64> = layers.iter().map(|&i| vals[i][k]).collect();
            let (c, r) = linalg::least_squares(&rows, &b)?;
            p1[k] = c[0];
            p2[k] = c[1];
            ss += linalg::dot(&r, &r);
        }
        let mut rem = vec![0.0; nr * u.dim];
        for i in 0..nr {
            let x = heights[i];
            for k in 0..u.dim {
                rem[i * u.dim + k] = vals[i][k] - p1[k] * x - p2[k] * x * x;
            }
        }
        out.psi1.push(p1);
        out.psi2.push(p2);
        out.remainder.push(rem);
        out.fit_residual.push((ss / (window * u.dim) as f64).sqrt());
    }
    Ok(out)
}

/// Per-angle comparison of the fitted chart slopes with the boundary
/// energy: `d u0 / dx = sqrt(e(phi))` and `d ui / dx = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalDerivativeReport {
    pub angles: Vec<f64>,
    pub normal_slope: Vec<f64>,
    pub expected: Vec<f64>,
    /// Largest `|d ui / dx|` per angle.
    pub tangential_slope: Vec<f64>,
    pub max_relative_deviation: f64,
    pub max_tangential: f64,
}

pub fn normal_derivative_check(u: &MapField1, phi: &dyn LoopMap, window: usize) -> Result<NormalDerivativeReport> {
    let exp = extract_expansion(u, window)?;
    let mut rep = NormalDerivativeReport {
        angles: exp.angles.clone(),
        normal_slope: Vec::new(),
        expected: Vec::new(),
        tangential_slope: Vec::new(),
        max_relative_deviation: 0.0,
        max_tangential: 0.0,
    };
    for (j, th) in exp.angles.iter().enumerate() {
        let a = phi.energy(*th)?.sqrt();
        let s = exp.psi1[j][0];
        let t = exp.psi1[j][1..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        rep.max_relative_deviation = rep.max_relative_deviation.max((s - a).abs() / a);
        rep.max_tangential = rep.max_tangential.max(t);
        rep.normal_slope.push(s);
        rep.expected.push(a);
        rep.tangential_slope.push(t);
    }
    Ok(rep)
}

/// Angles of a uniform sweep over the circle.
pub fn uniform_angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Convenience: a shared loop from a closure-free corner slice.
pub fn loop_of(map: Arc<dyn boundary::CornerMap>, factor: usize, fixed: f64) -> Arc<dyn LoopMap> {
    Arc::new(boundary::CornerSlice { map, factor, fixed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{CornerMap, PhaseMap, RotationFamily};

    fn degree_loop(k: i32, dim: usize) -> Arc<dyn LoopMap> {
        loop_of(Arc::new(PhaseMap::degree(k, 0, dim)), 0, 0.0)
    }

    fn generic_loop(dim: usize) -> Arc<dyn LoopMap> {
        loop_of(Arc::new(PhaseMap::generic(dim, 0.8, 0.4)), 0, 0.7)
    }

    #[test]
    fn identity_extension_is_recovered() {
        let g = DiskGrid::new(32, 32, 0.8).unwrap();
        let u = solve_extension(degree_loop(1, 2).as_ref(), &g, &SolverOptions::default()).unwrap();
        let exact = MapField1::from_fn(g.clone(), 2, |z| z.to_vec()).unwrap();
        let err = u.values.iter().zip(&exact.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn generic_loop_converges_and_stays_proper() {
        let g = DiskGrid::new(24, 32, 0.8).unwrap();
        let phi = generic_loop(3);
        let (u, rep) = solve_extension_with_report(phi.as_ref(), &g, &SolverOptions::default()).unwrap();
        assert!(rep.final_residual() <= 1e-8 && !rep.stagnated, "{rep:?}");
        u.check_interior().unwrap();
        // boundary ring untouched
        let b = boundary_samples(phi.as_ref(), &g);
        for j in 0..g.ntheta() {
            assert_eq!(u.at(g.idx(g.nr() - 1, j)), &b[j * 3..(j + 1) * 3]);
        }
        // re-solving from the solution makes no further progress
        let mut again = u.clone();
        let rep2 = solve_from(&mut again, Some(phi.as_ref()), &SolverOptions::default()).unwrap();
        assert!(rep2.newton_steps <= 1);
    }

    #[test]
    fn constant_loop_is_rejected() {
        let g = DiskGrid::new(16, 16, 0.8).unwrap();
        let phi = loop_of(Arc::new(PhaseMap::first_only(2)), 1, 0.0);
        assert!(matches!(
            solve_extension(phi.as_ref(), &g, &SolverOptions::default()),
            Err(Error::DegenerateDatum(_))
        ));
    }

    #[test]
    fn half_sphere_data_stays_in_the_half_ball() {
        // Loop in the closed upper half of S^2 (third coordinate >= 0).
        let map = PhaseMap {
            dim: 3,
            degree: [1, 0],
            azimuth: Vec::new(),
            lift: vec![
                crate::boundary::TrigTerm { amp: 0.3, p: 0, q: 0, phase: std::f64::consts::FRAC_PI_2 },
                crate::boundary::TrigTerm { amp: 0.2, p: 2, q: 0, phase: 0.0 },
            ],
            name: "cap".into(),
        };
        let phi = loop_of(Arc::new(map), 0, 0.0);
        let g = DiskGrid::new(20, 24, 0.8).unwrap();
        let u = solve_extension(phi.as_ref(), &g, &SolverOptions::default()).unwrap();
        for p in 0..g.len() {
            assert!(u.at(p)[2] >= -1e-12);
        }
    }

    #[test]
    fn expansion_and_normal_check_share_slopes() {
        let g = DiskGrid::new(32, 32, 0.8).unwrap();
        let phi = degree_loop(2, 2);
        let u = solve_extension(phi.as_ref(), &g, &SolverOptions::default()).unwrap();
        let exp = extract_expansion(&u, DEFAULT_WINDOW).unwrap();
        let rep = normal_derivative_check(&u, phi.as_ref(), DEFAULT_WINDOW).unwrap();
        for j in 0..g.ntheta() {
            assert!((exp.psi1[j][0] - rep.normal_slope[j]).abs() < 1e-6);
        }
        assert!(rep.max_relative_deviation < 0.05, "{}", rep.max_relative_deviation);
        assert!(extract_expansion(&u, 3).is_err());
    }

    #[test]
    fn rotation_family_has_rotated_solutions() {
        let g = DiskGrid::new(16, 16, 0.8).unwrap();
        let fam = RotationFamily { base: degree_loop(1, 2) };
        let ts = [0.0, 0.05, 0.1];
        let sol = solve_family(&fam, &ts, &g, &SolverOptions::default()).unwrap();
        assert_eq!(sol.fields.len(), 3);
        // rotation of the identity by 0.05 moves points by at most 0.05
        for d in &sol.first_differences {
            assert!(*d <= 0.05 + 1e-3 && *d > 0.04, "{d}");
        }
        let still = RotationFamily { base: degree_loop(1, 2) };
        let sol = solve_family(&still, &[0.2, 0.2], &g, &SolverOptions::default()).unwrap();
        assert!(sol.first_differences[0] < 1e-12);
        let _ = PhaseMap::angle_sum(2).dim();
    }
}
