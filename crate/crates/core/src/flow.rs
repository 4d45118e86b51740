//! Harmonic map heat flow `du/dt = tau(u)` on the bidisk with Dirichlet data
//! on the topological boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BidiskGrid, MapField2};
use crate::fit::{self, DecayFit, RateFit};
use crate::glue::{self, CornerSubgrid};
use crate::grid::{DiskGrid, PolarSolver, PolarWork};
use crate::tension::{self, TensionField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepScheme {
    /// `(I - dt w1 L1)(I - dt w2 L2) delta = dt tau(u)`: the principal part
    /// treated implicitly, one factor at a time.
    #[default]
    SemiImplicit,
    /// `delta = dt tau(u)`; needs `dt` below the stencil stability limit.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    pub scheme: StepScheme,
    /// Initial time step. For the explicit scheme it is capped by the
    /// stability estimate `cfl * min(h^2 / w)`.
    pub dt: f64,
    /// Growth factor applied after each accepted step and the step cap;
    /// `dt_growth = 1` gives a fixed step.
    pub dt_growth: f64,
    pub dt_max: f64,
    pub dt_min: f64,
    pub cfl: f64,
    /// Stop once sup |du/dt| (hyperbolic) drops to this value.
    pub tolerance: f64,
    pub max_time: f64,
    pub max_steps: usize,
    /// Record a monitor sample every this many steps.
    pub monitor_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            scheme: StepScheme::SemiImplicit,
            dt: 0.25,
            dt_growth: 1.0,
            dt_max: 4.0,
            dt_min: 1e-6,
            cfl: 0.2,
            tolerance: 1e-6,
            max_time: 1000.0,
            max_steps: 5000,
            monitor_every: 1,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.tolerance > 0.0) {
            return bad("flow tolerance must be positive");
        }
        if !(self.dt >= 0.0 && self.dt_min > 0.0 && self.dt_max >= self.dt_min) {
            return bad("flow time steps must satisfy 0 < dt_min <= dt_max and dt >= 0");
        }
        if !(self.dt_growth >= 1.0) {
            return bad("dt growth factor must be at least 1");
        }
        if self.monitor_every == 0 {
            return bad("monitor cadence must be at least 1");
        }
        Ok(())
    }
}

/// One flow iterate. `velocity` is `tau(u)` at the current state in ball
/// coordinates, which is `du/dt` of the continuous flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub u: MapField2,
    pub velocity: TensionField,
    pub energy: Vec<f64>,
    pub step: usize,
}

impl FlowState {
    pub fn new(u: MapField2) -> Result<Self> {
        let (velocity, energy) = tension::tension_and_energy_bidisk(&u)?;
        Ok(Self {
            t: 0.0,
            u,
            velocity,
            energy,
            step: 0,
        })
    }

    /// Sup of the hyperbolic norm of `du/dt`.
    pub fn speed(&self) -> f64 {
        self.velocity.max_norm()
    }
}

/// Explicit-scheme step bound `cfl * min(h^2 / w)` over both factors.
pub fn explicit_dt_limit(grid: &BidiskGrid, cfl: f64) -> f64 {
    let one = |g: &DiskGrid| {
        let mut best = f64::INFINITY;
        for i in 0..g.nr() - 1 {
            let hr = g.radius(i + 1) - g.radius(i);
            let ht = g.radius(i) * std::f64::consts::TAU / g.ntheta() as f64;
            let h = hr.min(ht);
            best = best.min(h * h / g.conformal_weight(i));
        }
        best
    };
    cfl * one(&grid.first).min(one(&grid.second))
}

/// Implicit factor solves for the semi-implicit scheme.
struct Implicit {
    dt: f64,
    first: PolarSolver,
    second: PolarSolver,
}

impl Implicit {
    fn new(grid: &BidiskGrid, dt: f64) -> Self {
        Self {
            dt,
            first: PolarSolver::implicit_heat(&grid.first, dt),
            second: PolarSolver::implicit_heat(&grid.second, dt),
        }
    }

    /// Apply `(I - dt w2 L2)^{-1}` then `(I - dt w1 L1)^{-1}` to `rhs` with
    /// homogeneous data on the boundary faces.
    fn solve(&self, grid: &BidiskGrid, dim: usize, rhs: &mut [f64]) {
        let (g1, g2) = (&grid.first, &grid.second);
        let (n1, n2) = (g1.len(), g2.len());
        rhs.par_chunks_mut(n2 * dim).enumerate().for_each_init(
            || (PolarWork::default(), vec![0.0; n2]),
            |(work, f), (p1, row)| {
                if g1.is_boundary(p1) {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    return;
                }
                for c in 0..dim {
                    for p2 in 0..n2 {
                        f[p2] = if g2.is_boundary(p2) { 0.0 } else { row[p2 * dim + c] };
                    }
                    self.second.solve_in_place(f, work);
                    for p2 in 0..n2 {
                        row[p2 * dim + c] = f[p2];
                    }
                }
            },
        );
        // Columns along the first factor, transposed for contiguous access.
        let mut cols = vec![0.0; rhs.len()];
        cols.par_chunks_mut(n1 * dim).enumerate().for_each_init(
            || (PolarWork::default(), vec![0.0; n1]),
            |(work, f), (p2, col)| {
                if g2.is_boundary(p2) {
                    return;
                }
                for c in 0..dim {
                    for p1 in 0..n1 {
                        f[p1] = if g1.is_boundary(p1) {
                            0.0
                        } else {
                            rhs[(p1 * n2 + p2) * dim + c]
                        };
                    }
                    self.first.solve_in_place(f, work);
                    for p1 in 0..n1 {
                        col[p1 * dim + c] = f[p1];
                    }
                }
            },
        );
        rhs.par_chunks_mut(n2 * dim).enumerate().for_each(|(p1, row)| {
            for p2 in 0..n2 {
                for c in 0..dim {
                    row[p2 * dim + c] = cols[(p2 * n1 + p1) * dim + c];
                }
            }
        });
    }
}

/// Add `delta` to the interior of `u`, halving the increment at any node
/// where it would reach the sphere.
fn apply_increment(u: &mut MapField2, delta: &[f64]) {
    let grid = u.grid.clone();
    let dim = u.dim;
    let n2 = grid.second.len();
    u.values.par_chunks_mut(n2 * dim).enumerate().for_each(|(p1, row)| {
        if grid.first.is_boundary(p1) {
            return;
        }
        for p2 in 0..n2 {
            if grid.second.is_boundary(p2) {
                continue;
            }
            let x = &mut row[p2 * dim..(p2 + 1) * dim];
            let d = &delta[(p1 * n2 + p2) * dim..(p1 * n2 + p2 + 1) * dim];
            let mut s = 1.0;
            loop {
                let n: f64 = x.iter().zip(d).map(|(a, b)| (a + s * b) * (a + s * b)).sum::<f64>().sqrt();
                if n < 1.0 {
                    break;
                }
                s *= 0.5;
                if s < 1e-12 {
                    s = 0.0;
                    break;
                }
            }
            for (a, b) in x.iter_mut().zip(d) {
                *a += s * b;
            }
        }
    });
}

/// Advance one step of size `dt`. Boundary faces are untouched.
pub fn step(s: &FlowState, dt: f64, scheme: StepScheme) -> Result<FlowState> {
    if dt < 0.0 {
        return Err(Error::Config("time step must be non-negative".into()));
    }
    if dt == 0.0 {
        return Ok(s.clone());
    }
    let mut work = Implicit::new(&s.u.grid, dt);
    step_with(s, &mut work, scheme)
}

fn step_with(s: &FlowState, imp: &mut Implicit, scheme: StepScheme) -> Result<FlowState> {
    let dt = imp.dt;
    let mut delta: Vec<f64> = s.velocity.vectors.iter().map(|v| v * dt).collect();
    if scheme == StepScheme::SemiImplicit {
        imp.solve(&s.u.grid, s.u.dim, &mut delta);
    }
    let mut u = s.u.clone();
    apply_increment(&mut u, &delta);
    let (velocity, energy) = tension::tension_and_energy_bidisk(&u)?;
    let before = s.speed();
    let after = velocity.max_norm();
    if !after.is_finite() || after > 10.0 * before {
        return Err(Error::Instability {
            step: s.step + 1,
            before,
            after,
        });
    }
    Ok(FlowState {
        t: s.t + dt,
        u,
        velocity,
        energy,
        step: s.step + 1,
    })
}

/// One monitor sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub sup_velocity: f64,
    pub sup_energy: f64,
    pub sup_distance: f64,
    pub mean_distance: f64,
    pub hartman_violations: usize,
}

/// Scalar flow histories, one entry per monitor sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorSeries {
    pub records: Vec<MonitorRecord>,
}

impl MonitorSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn sup_velocity(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.sup_velocity).collect()
    }

    /// Build a series from bare `(t, sup |du/dt|)` pairs.
    pub fn from_velocity(series: &[(f64, f64)]) -> Self {
        let mut out = Self::default();
        for (k, &(t, v)) in series.iter().enumerate() {
            out.push(k, t, 0.0, v, 0.0, 0.0, 0.0);
        }
        out
    }

    fn push(&mut self, step: usize, t: f64, dt: f64, v: f64, e: f64, dmax: f64, dmean: f64) {
        let prev = self.records.last();
        let bump = prev.is_some_and(|p| v > p.sup_velocity) as usize;
        let hartman_violations = prev.map_or(0, |p| p.hartman_violations) + bump;
        self.records.push(MonitorRecord {
            step,
            t,
            dt,
            sup_velocity: v,
            sup_energy: e,
            sup_distance: dmax,
            mean_distance: dmean,
            hartman_violations,
        });
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r)?);
            s.push('\n');
        }
        Ok(s)
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { records })
    }
}

fn distance_stats(a: &MapField2, b: &MapField2) -> Result<(f64, f64)> {
    let d = a.distance_field(b)?;
    let grid = &a.grid;
    let (sum, max, n) = grid
        .interior()
        .map(|p| d[p])
        .fold((0.0, 0.0f64, 0usize), |(s, m, n), x| (s + x, m.max(x), n + 1));
    Ok((max, if n > 0 { sum / n as f64 } else { 0.0 }))
}

/// Outcome of a flow run.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub state: FlowState,
    pub monitors: MonitorSeries,
    pub converged: bool,
    /// Steps retried with a halved time step after an instability.
    pub retries: usize,
}

/// Flow from `v` until sup |du/dt| falls below the tolerance. Steps that
/// trip the instability guard are retried with half the step; running out
/// of time or steps returns [`Error::NonConvergence`].
pub fn run(v: MapField2, opts: &FlowOptions) -> Result<FlowResult> {
    run_observed(v, opts, |_, _| {})
}

/// As [`run`], calling `observe` with every monitor sample as it is
/// recorded and the state it describes.
pub fn run_observed(
    v: MapField2,
    opts: &FlowOptions,
    mut observe: impl FnMut(&MonitorRecord, &FlowState),
) -> Result<FlowResult> {
    opts.validate()?;
    let initial = v.clone();
    let mut state = FlowState::new(v)?;
    let mut dt = opts.dt;
    if opts.scheme == StepScheme::Explicit {
        dt = dt.min(explicit_dt_limit(&state.u.grid, opts.cfl));
    }
    let dt_cap = match opts.scheme {
        StepScheme::Explicit => dt,
        StepScheme::SemiImplicit => opts.dt_max,
    };
    let mut monitors = MonitorSeries::default();
    let record = |m: &mut MonitorSeries, s: &FlowState, dt: f64| -> Result<()> {
        let (dmax, dmean) = distance_stats(&s.u, &initial)?;
        let e = s.energy.iter().copied().fold(0.0, f64::max);
        m.push(s.step, s.t, dt, s.speed(), e, dmax, dmean);
        Ok(())
    };
    record(&mut monitors, &state, 0.0)?;
    observe(monitors.records.last().unwrap(), &state);
    let mut retries = 0;
    let mut imp = Implicit::new(&state.u.grid, dt.max(opts.dt_min));
    while state.speed() > opts.tolerance {
        if state.step >= opts.max_steps || state.t >= opts.max_time || dt == 0.0 {
            let history = monitors.sup_velocity();
            return Err(Error::NonConvergence {
                iterations: state.step,
                residual: state.speed(),
                history,
            });
        }
        if (imp.dt - dt).abs() > 0.0 {
            imp = Implicit::new(&state.u.grid, dt);
        }
        match step_with(&state, &mut imp, opts.scheme) {
            Ok(next) => {
                state = next;
                if state.step % opts.monitor_every == 0 || state.speed() <= opts.tolerance {
                    record(&mut monitors, &state, dt)?;
                    observe(monitors.records.last().unwrap(), &state);
                }
                dt = (dt * opts.dt_growth).min(dt_cap);
            }
            Err(Error::Instability { .. }) if dt * 0.5 >= opts.dt_min => {
                dt *= 0.5;
                retries += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FlowResult {
        state,
        monitors,
        converged: true,
        retries,
    })
}

/// Exponential fit of sup |du/dt| over the monitor tail, skipping the
/// first `skip_fraction` of the samples as transient.
pub fn fit_rate(monitors: &MonitorSeries, skip_fraction: f64) -> Result<RateFit> {
    let n = monitors.len();
    let start = ((n as f64) * skip_fraction.clamp(0.0, 0.95)).floor() as usize;
    let tail: Vec<(f64, f64)> = monitors.records[start..].iter().map(|r| (r.t, r.sup_velocity)).collect();
    fit::exponential_fit(&tail, 20)
}

/// Distance between the flow limit and the approximate solution.
#[derive(Clone, Debug)]
pub struct LimitComparison {
    pub distance: Vec<f64>,
    /// Corner decay fit of the distance; `None` when it could not be
    /// formed (too few near-corner samples).
    pub fit: Option<DecayFit>,
    /// Largest distance over interior nodes adjacent to a boundary face.
    pub boundary_adjacent_max: f64,
    pub sup: f64,
}

pub fn compare_limit(u: &MapField2, v: &MapField2, sub: &CornerSubgrid) -> Result<LimitComparison> {
    let distance = u.distance_field(v)?;
    let grid = &u.grid;
    let (a1, a2) = (grid.first.nr() - 2, grid.second.nr() - 2);
    let mut adjacent: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for p in grid.interior() {
        let (p1, p2) = grid.split(p);
        sup = sup.max(distance[p]);
        if p1 % grid.first.nr() == a1 || p2 % grid.second.nr() == a2 {
            adjacent = adjacent.max(distance[p]);
        }
    }
    let fit = match glue::decay_fit(&distance, grid, sub) {
        Ok(f) => Some(f),
        Err(Error::InsufficientSamples { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(LimitComparison {
        distance,
        fit,
        boundary_adjacent_max: adjacent,
        sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DiskGrid;

    fn zw(grid: &BidiskGrid) -> MapField2 {
        MapField2::from_fn(grid.clone(), 2, |a, b, o| {
            o[0] = a[0] * b[0] - a[1] * b[1];
            o[1] = a[0] * b[1] + a[1] * b[0];
        })
        .unwrap()
    }

    fn grid(n: usize) -> BidiskGrid {
        BidiskGrid::square(DiskGrid::new(n, n, 0.8).unwrap())
    }

    #[test]
    fn zero_step_and_dirichlet_faces() {
        let g = grid(16);
        let v = glue::perturb_interior(&zw(&g), 3, 0.2);
        let s = FlowState::new(v.clone()).unwrap();
        let same = step(&s, 0.0, StepScheme::SemiImplicit).unwrap();
        assert_eq!(same.u, s.u);
        for scheme in [StepScheme::SemiImplicit, StepScheme::Explicit] {
            let dt = match scheme {
                StepScheme::Explicit => explicit_dt_limit(&g, 0.2),
                StepScheme::SemiImplicit => 0.5,
            };
            let next = step(&s, dt, scheme).unwrap();
            for p in 0..g.len() {
                if g.is_boundary(p) {
                    assert_eq!(next.u.at(p), v.at(p));
                }
            }
            next.u.check_interior().unwrap();
            assert!(next.speed() < s.speed(), "{scheme:?}");
        }
    }

    #[test]
    fn harmonic_start_barely_moves() {
        let g = grid(16);
        let v = zw(&g);
        let s = FlowState::new(v.clone()).unwrap();
        let dt = 0.1;
        let next = step(&s, dt, StepScheme::SemiImplicit).unwrap();
        let moved = next.u.values.iter().zip(&v.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let resid = s.velocity.vectors.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(moved <= dt * resid * 1.0001, "{moved} {resid}");
    }

    #[test]
    fn perturbed_fill_flows_back() {
        let g = grid(16);
        let v = glue::perturb_interior(&zw(&g), 11, 0.3);
        let opts = FlowOptions {
            dt: 0.5,
            tolerance: 1e-7,
            ..FlowOptions::default()
        };
        let res = run(v, &opts).unwrap();
        assert!(res.converged && res.state.speed() <= 1e-7);
        let rate = fit_rate(&res.monitors, 0.2);
        if let Ok(r) = rate {
            assert!(r.rate > 0.0);
        }
        // idempotence: flowing the limit again changes nothing
        let again = run(res.state.u.clone(), &opts).unwrap();
        assert_eq!(again.state.step, 0);
        let direct = run(zw(&g), &opts).unwrap();
        assert!(direct.state.u.sup_distance(&res.state.u).unwrap() < 1e-5);
    }

    #[test]
    fn monitors_round_trip_and_count_violations() {
        let m = MonitorSeries::from_velocity(&[(0.0, 1.0), (1.0, 2.0), (2.0, 0.5), (3.0, 0.5)]);
        assert_eq!(m.records.last().unwrap().hartman_violations, 1);
        let text = m.to_json_lines().unwrap();
        assert_eq!(MonitorSeries::from_json_lines(&text).unwrap(), m);
        let synthetic: Vec<_> = (0..30).map(|i| (i as f64, 3.0 * (-0.7 * i as f64).exp())).collect();
        let r = fit_rate(&MonitorSeries::from_velocity(&synthetic), 0.0).unwrap();
        assert!((r.rate - 0.7).abs() < 1e-10 && (r.constant - 3.0).abs() < 1e-9);
    }

    #[test]
    fn bad_options_are_rejected() {
        let g = grid(16);
        let opts = FlowOptions {
            tolerance: 0.0,
            ..FlowOptions::default()
        };
        assert!(matches!(run(zw(&g), &opts), Err(Error::Config(_))));
        let s = FlowState::new(zw(&g)).unwrap();
        assert!(step(&s, -1.0, StepScheme::Explicit).is_err());
    }

    #[test]
    fn limit_comparison_of_identical_maps_is_zero() {
        let g = grid(16);
        let v = zw(&g);
        let c = compare_limit(&v, &v, &CornerSubgrid::default()).unwrap();
        assert_eq!(c.sup, 0.0);
        assert_eq!(c.boundary_adjacent_max, 0.0);
        assert!(c.fit.map_or(true, |f| f.degenerate));
    }
}
