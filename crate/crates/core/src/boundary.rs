//! Dirichlet data on the distinguished boundary: corner maps
//! `phi: T^2 -> S^n`, boundary loops `S^1 -> S^n`, and loop families, with
//! their factorwise differentials and energy densities.

use std::f64::consts::TAU;
use std::fmt::Debug;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, HalfSpaceChart};

/// Highest derivative order (per angle) any map must provide.
pub const MAX_ORDER: usize = 4;

/// Default lower bound on `|d_l phi|` for a datum to count as nondegenerate.
pub const DEFAULT_MARGIN: f64 = 1e-3;

/// Smooth map from the torus `(theta1, theta2)` to the unit sphere in
/// `R^{dim}`.
pub trait CornerMap: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, t: [f64; 2]) -> Vec<f64>;

    /// Mixed partial `d^{k1+k2} phi / d theta1^{k1} d theta2^{k2}`, each
    /// order at most [`MAX_ORDER`].
    fn partial(&self, t: [f64; 2], order: [usize; 2]) -> Result<Vec<f64>>;

    /// Short human-readable description for run metadata.
    fn describe(&self) -> String;
}

/// Smooth map from the circle to the unit sphere.
pub trait LoopMap: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn eval(&self, theta: f64) -> Vec<f64>;

    fn derivative(&self, theta: f64, order: usize) -> Result<Vec<f64>>;

    /// Energy density `|phi'|^2` for the round metric.
    fn energy(&self, theta: f64) -> Result<f64> {
        Ok(geom::norm_sq(&self.derivative(theta, 1)?))
    }
}

/// A smooth one-parameter family of boundary loops.
pub trait LoopFamily: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn slice(&self, t: f64) -> Arc<dyn LoopMap>;
}

// ---------------------------------------------------------------------------
// Truncated bivariate Taylor arithmetic used to differentiate the analytic
// families exactly.

const NCOEF: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

fn slot(i: usize, j: usize) -> usize {
    // total degree d = i + j, ordered by degree then by j
    let d = i + j;
    d * (d + 1) / 2 + j
}

/// Normalized Taylor coefficients `c[i, j] = f^{(i, j)} / (i! j!)`.
#[derive(Clone, Copy, Debug)]
struct Taylor([f64; NCOEF]);

impl Taylor {
    fn constant(c: f64) -> Self {
        let mut t = [0.0; NCOEF];
        t[0] = c;
        Taylor(t)
    }

    /// `a * theta1 + b * theta2 + c` expanded at `t`.
    fn affine(a: f64, b: f64, value: f64) -> Self {
        let mut t = Self::constant(value);
        t.0[slot(1, 0)] = a;
        t.0[slot(0, 1)] = b;
        t
    }

    fn add(&self, o: &Self) -> Self {
        let mut t = *self;
        for (a, b) in t.0.iter_mut().zip(&o.0) {
            *a += b;
        }
        t
    }

    fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        t.0.iter_mut().for_each(|a| *a *= s);
        t
    }

    fn mul(&self, o: &Self) -> Self {
        let mut out = [0.0; NCOEF];
        for d1 in 0..=MAX_ORDER {
            for j1 in 0..=d1 {
                let a = self.0[slot(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=MAX_ORDER - d1 {
                    for j2 in 0..=d2 {
                        let i = d1 - j1 + d2 - j2;
                        out[slot(i, j1 + j2)] += a * o.0[slot(d2 - j2, j2)];
                    }
                }
            }
        }
        Taylor(out)
    }

    /// `(sin f, cos f)`.
    fn sin_cos(&self) -> (Self, Self) {
        let (s0, c0) = self.0[0].sin_cos();
        let mut h = *self;
        h.0[0] = 0.0;
        let h2 = h.mul(&h);
        let h3 = h2.mul(&h);
        let h4 = h3.mul(&h);
        let sin_h = h.add(&h3.scale(-1.0 / 6.0));
        let cos_h = Self::constant(1.0).add(&h2.scale(-0.5)).add(&h4.scale(1.0 / 24.0));
        (
            sin_h.scale(c0).add(&cos_h.scale(s0)),
            cos_h.scale(c0).add(&sin_h.scale(-s0)),
        )
    }

    fn derivative(&self, order: [usize; 2]) -> f64 {
        let fact = |n: usize| (1..=n).product::<usize>() as f64;
        self.0[slot(order[0], order[1])] * fact(order[0]) * fact(order[1])
    }
}

/// One term `amp * sin(p theta1 + q theta2 + phase)` of a phase function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub p: i32,
    pub q: i32,
    pub phase: f64,
}

impl TrigTerm {
    fn taylor(&self, t: [f64; 2]) -> Taylor {
        let arg = Taylor::affine(
            self.p as f64,
            self.q as f64,
            self.p as f64 * t[0] + self.q as f64 * t[1] + self.phase,
        );
        arg.sin_cos().0.scale(self.amp)
    }
}

/// Corner map `(cos A cos L, sin A cos L, sin L, 0, ...)` with azimuth
/// `A = k1 theta1 + k2 theta2 + sum(terms)` and latitude `L = sum(lift)`.
/// Every named family is an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMap {
    pub dim: usize,
    pub degree: [i32; 2],
    pub azimuth: Vec<TrigTerm>,
    pub lift: Vec<TrigTerm>,
    pub name: String,
}

impl PhaseMap {
    /// `phi = e^{i (theta1 + theta2)}` in the equatorial circle.
    pub fn angle_sum(dim: usize) -> Self {
        Self::degree(1, 1, dim)
    }

    /// `phi = e^{i (k theta1 + l theta2)}`.
    pub fn degree(k: i32, l: i32, dim: usize) -> Self {
        Self {
            dim,
            degree: [k, l],
            azimuth: Vec::new(),
            lift: Vec::new(),
            name: format!("degree({k},{l})"),
        }
    }

    /// Non-monomial datum with nonvanishing factorwise differentials:
    /// `A = theta1 + theta2 + eps (0.5 sin theta1 + 0.3 sin(theta2 + 1) + 0.2 sin(theta1 - theta2))`,
    /// lifted off the equator by `L = lift sin(theta1) cos(theta2)` when `dim >= 3`.
    pub fn generic(dim: usize, eps: f64, lift: f64) -> Self {
        let azimuth = vec![
            TrigTerm { amp: 0.5 * eps, p: 1, q: 0, phase: 0.0 },
            TrigTerm { amp: 0.3 * eps, p: 0, q: 1, phase: 1.0 },
            TrigTerm { amp: 0.2 * eps, p: 1, q: -1, phase: 0.0 },
        ];
        // sin t1 cos t2 = (sin(t1 + t2) + sin(t1 - t2)) / 2
        let lift_terms = if dim >= 3 && lift != 0.0 {
            vec![
                TrigTerm { amp: 0.5 * lift, p: 1, q: 1, phase: 0.0 },
                TrigTerm { amp: 0.5 * lift, p: 1, q: -1, phase: 0.0 },
            ]
        } else {
            Vec::new()
        };
        Self {
            dim,
            degree: [1, 1],
            azimuth,
            lift: lift_terms,
            name: format!("generic(eps={eps},lift={lift})"),
        }
    }

    /// Depends on `theta1` only; fails the nondegeneracy check.
    pub fn first_only(dim: usize) -> Self {
        Self {
            name: "first-only".into(),
            ..Self::degree(1, 0, dim)
        }
    }

    fn taylor(&self, t: [f64; 2]) -> Vec<Taylor> {
        let [k1, k2] = self.degree;
        let mut a = Taylor::affine(k1 as f64, k2 as f64, k1 as f64 * t[0] + k2 as f64 * t[1]);
        for term in &self.azimuth {
            a = a.add(&term.taylor(t));
        }
        let (sa, ca) = a.sin_cos();
        let mut out = vec![Taylor::constant(0.0); self.dim];
        if self.lift.is_empty() {
            out[0] = ca;
            out[1] = sa;
        } else {
            let mut l = Taylor::constant(0.0);
            for term in &self.lift {
                l = l.add(&term.taylor(t));
            }
            let (sl, cl) = l.sin_cos();
            out[0] = ca.mul(&cl);
            out[1] = sa.mul(&cl);
            out[2] = sl;
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 || (!self.lift.is_empty() && self.dim < 3) {
            return Err(Error::ShapeMismatch(format!(
                "phase map needs dim >= {} (got {})",
                if self.lift.is_empty() { 2 } else { 3 },
                self.dim
            )));
        }
        Ok(())
    }
}

impl CornerMap for PhaseMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: [f64; 2]) -> Vec<f64> {
        self.taylor(t).iter().map(|c| c.0[0]).collect()
    }

    fn partial(&self, t: [f64; 2], order: [usize; 2]) -> Result<Vec<f64>> {
        self.validate()?;
        if order[0] + order[1] > MAX_ORDER {
            return Err(Error::DerivativeUnavailable(format!(
                "total order {} exceeds {MAX_ORDER}",
                order[0] + order[1]
            )));
        }
        Ok(self.taylor(t).iter().map(|c| c.derivative(order)).collect())
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Corner map given by samples on a uniform torus grid, differentiated by
/// trigonometric interpolation. Sample `(j1, j2)` sits at
/// `(2 pi j1 / n1, 2 pi j2 / n2)`.
#[derive(Clone, Debug)]
pub struct SampledCornerMap {
    n: [usize; 2],
    dim: usize,
    samples: Vec<f64>,
    /// Fourier coefficients per component, `k1`-major.
    coeffs: Vec<Vec<Complex64>>,
    name: String,
}

impl SampledCornerMap {
    /// `samples` are `n1 * n2` unit vectors of length `dim`, `theta1`-major.
    pub fn new(n: [usize; 2], dim: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != n[0] * n[1] * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} sample values for a {}x{} grid of {dim}-vectors",
                samples.len(),
                n[0],
                n[1]
            )));
        }
        if dim < 2 || n[0] < 4 || n[1] < 4 {
            return Err(Error::ShapeMismatch("sampled corner map too small".into()));
        }
        for (i, v) in samples.chunks(dim).enumerate() {
            let norm = geom::norm_sq(v).sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::DegenerateDatum(format!(
                    "sample {i} has norm {norm}, expected a unit vector"
                )));
            }
        }
        let mut planner = rustfft::FftPlanner::new();
        let f1 = planner.plan_fft_forward(n[0]);
        let f2 = planner.plan_fft_forward(n[1]);
        let coeffs = (0..dim)
            .map(|c| {
                let mut a: Vec<Complex64> = (0..n[0] * n[1])
                    .map(|p| Complex64::new(samples[p * dim + c], 0.0))
                    .collect();
                for row in a.chunks_mut(n[1]) {
                    f2.process(row);
                }
                let mut col = vec![Complex64::new(0.0, 0.0); n[0]];
                for j in 0..n[1] {
                    for i in 0..n[0] {
                        col[i] = a[i * n[1] + j];
                    }
                    f1.process(&mut col);
                    for i in 0..n[0] {
                        a[i * n[1] + j] = col[i] / (n[0] * n[1]) as f64;
                    }
                }
                a
            })
            .collect();
        Ok(Self {
            n,
            dim,
            samples,
            coeffs,
            name: format!("samples({}x{})", n[0], n[1]),
        })
    }

    /// Sample an arbitrary corner map on an `n1 x n2` grid.
    pub fn from_map(map: &dyn CornerMap, n: [usize; 2]) -> Result<Self> {
        let mut samples = Vec::with_capacity(n[0] * n[1] * map.dim());
        for j1 in 0..n[0] {
            for j2 in 0..n[1] {
                let t = [TAU * j1 as f64 / n[0] as f64, TAU * j2 as f64 / n[1] as f64];
                let v = map.eval(t);
                let norm = geom::norm_sq(&v).sqrt();
                samples.extend(v.iter().map(|x| x / norm));
            }
        }
        Self::new(n, map.dim(), samples)
    }

    pub fn shape(&self) -> [usize; 2] {
        self.n
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    fn wavenumber(j: usize, n: usize) -> f64 {
        if 2 * j < n {
            j as f64
        } else if 2 * j == n {
            // Nyquist: the real interpolant uses cos(n t / 2), whose odd
            // derivatives vanish at the nodes; drop it for derivatives.
            0.0
        } else {
            j as f64 - n as f64
        }
    }

    fn evaluate(&self, t: [f64; 2], order: [usize; 2]) -> Vec<f64> {
        let [n1, n2] = self.n;
        let nyq = |j: usize, n: usize| 2 * j == n;
        let mut out = vec![0.0; self.dim];
        for j1 in 0..n1 {
            let k1 = Self::wavenumber(j1, n1);
            let k1_full = if nyq(j1, n1) { n1 as f64 / 2.0 } else { k1 };
            for j2 in 0..n2 {
                let k2 = Self::wavenumber(j2, n2);
                let k2_full = if nyq(j2, n2) { n2 as f64 / 2.0 } else { k2 };
                let nyquist = nyq(j1, n1) || nyq(j2, n2);
                if nyquist && order != [0, 0] {
                    continue;
                }
                let arg = k1_full * t[0] + k2_full * t[1];
                let mut phase = Complex64::new(arg.cos(), arg.sin());
                for _ in 0..order[0] {
                    phase *= Complex64::new(0.0, k1);
                }
                for _ in 0..order[1] {
                    phase *= Complex64::new(0.0, k2);
                }
                if nyquist {
                    phase = Complex64::new(arg.cos(), 0.0);
                }
                for (c, o) in self.coeffs.iter().zip(out.iter_mut()) {
                    *o += (c[j1 * n2 + j2] * phase).re;
                }
            }
        }
        out
    }
}

impl CornerMap for SampledCornerMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: [f64; 2]) -> Vec<f64> {
        let dj = [t[0] / TAU * self.n[0] as f64, t[1] / TAU * self.n[1] as f64];
        if dj.iter().all(|x| (x - x.round()).abs() < 1e-12) {
            let j1 = (dj[0].round() as i64).rem_euclid(self.n[0] as i64) as usize;
            let j2 = (dj[1].round() as i64).rem_euclid(self.n[1] as i64) as usize;
            let p = j1 * self.n[1] + j2;
            return self.samples[p * self.dim..(p + 1) * self.dim].to_vec();
        }
        let v = self.evaluate(t, [0, 0]);
        let n = geom::norm_sq(&v).sqrt();
        v.iter().map(|x| x / n).collect()
    }

    fn partial(&self, t: [f64; 2], order: [usize; 2]) -> Result<Vec<f64>> {
        for (axis, (&k, &n)) in order.iter().zip(&self.n).enumerate() {
            if k > MAX_ORDER {
                return Err(Error::DerivativeUnavailable(format!("order {k} exceeds {MAX_ORDER}")));
            }
            let need = 16 * k;
            if k > 0 && n < need {
                return Err(Error::DerivativeUnavailable(format!(
                    "order-{k} derivative along angle {} needs at least {need} samples, have {n}",
                    axis + 1
                )));
            }
        }
        if order == [0, 0] {
            return Ok(self.eval(t));
        }
        Ok(self.evaluate(t, order))
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Restriction of a corner map to one circle factor with the other angle
/// held fixed: `factor = 0` varies `theta1`.
#[derive(Clone, Debug)]
pub struct CornerSlice {
    pub map: Arc<dyn CornerMap>,
    pub factor: usize,
    pub fixed: f64,
}

impl CornerSlice {
    fn point(&self, theta: f64) -> [f64; 2] {
        if self.factor == 0 {
            [theta, self.fixed]
        } else {
            [self.fixed, theta]
        }
    }
}

impl LoopMap for CornerSlice {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn eval(&self, theta: f64) -> Vec<f64> {
        self.map.eval(self.point(theta))
    }

    fn derivative(&self, theta: f64, order: usize) -> Result<Vec<f64>> {
        let o = if self.factor == 0 { [order, 0] } else { [0, order] };
        self.map.partial(self.point(theta), o)
    }
}

/// Family of slices of a corner map, parameterized by the held angle.
#[derive(Clone, Debug)]
pub struct CornerFamily {
    pub map: Arc<dyn CornerMap>,
    pub factor: usize,
}

impl LoopFamily for CornerFamily {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn slice(&self, t: f64) -> Arc<dyn LoopMap> {
        Arc::new(CornerSlice {
            map: self.map.clone(),
            factor: self.factor,
            fixed: t,
        })
    }
}

/// Loop `theta -> phi(theta + t)`: rotating the parameter circle.
#[derive(Clone, Debug)]
pub struct ShiftedLoop {
    pub base: Arc<dyn LoopMap>,
    pub shift: f64,
}

impl LoopMap for ShiftedLoop {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn eval(&self, theta: f64) -> Vec<f64> {
        self.base.eval(theta + self.shift)
    }

    fn derivative(&self, theta: f64, order: usize) -> Result<Vec<f64>> {
        self.base.derivative(theta + self.shift, order)
    }
}

/// `t -> (theta -> base(theta + t))`.
#[derive(Clone, Debug)]
pub struct RotationFamily {
    pub base: Arc<dyn LoopMap>,
}

impl LoopFamily for RotationFamily {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn slice(&self, t: f64) -> Arc<dyn LoopMap> {
        Arc::new(ShiftedLoop {
            base: self.base.clone(),
            shift: t,
        })
    }
}

/// Equatorial loop `e^{i k theta}` tilted off the equator by latitude
/// `t sin(2 theta)`; at `t = 0` it is the degree-`k` circle map.
#[derive(Clone, Debug)]
pub struct TiltFamily {
    pub k: i32,
    pub dim: usize,
}

impl LoopFamily for TiltFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn slice(&self, t: f64) -> Arc<dyn LoopMap> {
        let map = PhaseMap {
            dim: self.dim,
            degree: [self.k, 0],
            azimuth: Vec::new(),
            lift: if t == 0.0 {
                Vec::new()
            } else {
                vec![TrigTerm { amp: t, p: 2, q: 0, phase: 0.0 }]
            },
            name: format!("tilt(k={},t={t})", self.k),
        };
        Arc::new(CornerSlice {
            map: Arc::new(map),
            factor: 0,
            fixed: 0.0,
        })
    }
}

/// `(d1 phi, d2 phi)` at a torus point.
pub fn factor_differentials(phi: &dyn CornerMap, t: [f64; 2]) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((phi.partial(t, [1, 0])?, phi.partial(t, [0, 1])?))
}

/// Factorwise energy densities for the round metric on each circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySplit {
    pub e1: f64,
    pub e2: f64,
    pub e: f64,
}

pub fn energy_split(phi: &dyn CornerMap, t: [f64; 2]) -> Result<EnergySplit> {
    let (d1, d2) = factor_differentials(phi, t)?;
    let e1 = geom::norm_sq(&d1);
    let e2 = geom::norm_sq(&d2);
    Ok(EnergySplit { e1, e2, e: e1 + e2 })
}

/// Factorwise energies computed through half-space charts: each circle in a
/// half-plane chart anchored at its own angle, the target in the chart with
/// pole `-phi(t)`. With these anchors the chart Jacobians cancel and the
/// result agrees with [`energy_split`].
pub fn chart_energy_split(phi: &dyn CornerMap, t: [f64; 2]) -> Result<EnergySplit> {
    let value = phi.eval(t);
    let pole: Vec<f64> = value.iter().map(|x| -x).collect();
    let chart = HalfSpaceChart::new(&pole)?;
    let at = chart.to_chart(&value)?;
    let (d1, d2) = factor_differentials(phi, t)?;
    let mut e = [0.0; 2];
    for (l, d) in [d1, d2].iter().enumerate() {
        // Boundary parameter of the domain chart: y = -tan((theta - a) / 2),
        // so d theta / dy = -2 at the anchor.
        let scaled: Vec<f64> = d.iter().map(|x| -2.0 * x).collect();
        // Pull back through the involutive target chart.
        let dc = chart_differential(&chart, &value, &scaled);
        debug_assert!(at.iter().all(|x| x.abs() < 1e-9));
        e[l] = geom::norm_sq(&dc);
    }
    Ok(EnergySplit {
        e1: e[0],
        e2: e[1],
        e: e[0] + e[1],
    })
}

/// Differential of the ball-to-chart map at `w` applied to `v`.
fn chart_differential(chart: &HalfSpaceChart, w: &[f64], v: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = w.iter().zip(chart.pole()).map(|(a, b)| a - b).collect();
    let e2 = geom::norm_sq(&e);
    let ev = geom::dot(&e, v);
    let dinv: Vec<f64> = v.iter().zip(&e).map(|(vi, ei)| 2.0 / e2 * (vi - 2.0 * ei * ev / e2)).collect();
    chart.frame_apply(&dinv)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub min_d1: f64,
    pub min_d2: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Minima of `|d1 phi|` and `|d2 phi|` over a `resolution x resolution`
/// torus grid; passes when both exceed `margin`.
pub fn nondegeneracy_report(phi: &dyn CornerMap, resolution: usize, margin: f64) -> Result<NondegeneracyReport> {
    if resolution < 16 {
        return Err(Error::InvalidGrid(format!(
            "nondegeneracy scan needs at least 16 samples per angle, got {resolution}"
        )));
    }
    let mut min = [f64::INFINITY; 2];
    for j1 in 0..resolution {
        for j2 in 0..resolution {
            let t = [TAU * j1 as f64 / resolution as f64, TAU * j2 as f64 / resolution as f64];
            let (d1, d2) = factor_differentials(phi, t)?;
            min[0] = min[0].min(geom::norm_sq(&d1).sqrt());
            min[1] = min[1].min(geom::norm_sq(&d2).sqrt());
        }
    }
    Ok(NondegeneracyReport {
        min_d1: min[0],
        min_d2: min[1],
        margin,
        pass: min[0] > margin && min[1] > margin,
    })
}

/// `(a1, a2) = (sqrt e1, sqrt e2)`: the normal slopes of the extension at the
/// corner in matched half-space charts.
pub fn corner_coefficients(phi: &dyn CornerMap, t: [f64; 2]) -> Result<[f64; 2]> {
    let s = energy_split(phi, t)?;
    for (l, e) in [s.e1, s.e2].iter().enumerate() {
        if *e <= 1e-24 {
            return Err(Error::DegenerateDatum(format!(
                "factor {} differential vanishes at {t:?}",
                l + 1
            )));
        }
    }
    Ok([s.e1.sqrt(), s.e2.sqrt()])
}

/// Smallest `|phi'|` of a loop over `samples` uniform angles.
pub fn loop_min_speed(phi: &dyn LoopMap, samples: usize) -> Result<f64> {
    let mut m = f64::INFINITY;
    for j in 0..samples {
        let d = phi.derivative(TAU * j as f64 / samples as f64, 1)?;
        m = m.min(geom::norm_sq(&d).sqrt());
    }
    Ok(m)
}
