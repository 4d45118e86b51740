//! Polar discretization of a single Poincaré disk factor.
//!
//! Radial nodes are images of a uniform, half-offset computational
//! coordinate `s_i = (i + 1/2) / (nr - 1/2)` under the odd grading map
//! `r(s) = (1 - g) s + g sin(pi s / 2)`, so the last node sits exactly on
//! the unit circle and there is no node at the origin. Reflection across the
//! origin maps radial index `i` at angle `theta` to index `i` at
//! `theta + pi`, which is how stencils reach "negative" radii.
//!
//! Node index within a factor is `j * nr + i` (angle outermost).

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Minimum nodes per axis accepted by every grid-based operator.
pub const MIN_NODES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AngularScheme {
    /// Exact differentiation of the trigonometric interpolant on each ring.
    Spectral,
    /// Three-point centered differences (local support).
    Centered,
}

#[derive(Clone)]
pub struct DiskGrid {
    nr: usize,
    ntheta: usize,
    grading: f64,
    ds: f64,
    r: Vec<f64>,
    dr_ds: Vec<f64>,
    d2r_ds2: Vec<f64>,
    theta: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DiskGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiskGrid")
            .field("nr", &self.nr)
            .field("ntheta", &self.ntheta)
            .field("grading", &self.grading)
            .finish()
    }
}

impl PartialEq for DiskGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nr == other.nr && self.ntheta == other.ntheta && self.grading == other.grading
    }
}

impl DiskGrid {
    /// `grading` in `[0, 1)`: 0 is uniform in `r`; larger values cluster
    /// nodes toward the circle (end spacing shrinks by `1 - grading`).
    pub fn new(nr: usize, ntheta: usize, grading: f64) -> Result<Self> {
        if nr < MIN_NODES {
            return Err(Error::GridTooCoarse {
                axis: "radial",
                nodes: nr,
                min: MIN_NODES,
            });
        }
        if ntheta < MIN_NODES {
            return Err(Error::GridTooCoarse {
                axis: "angular",
                nodes: ntheta,
                min: MIN_NODES,
            });
        }
        if ntheta % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "angular node count must be even for the reflection across the center, got {ntheta}"
            )));
        }
        if !(0.0..1.0).contains(&grading) {
            return Err(Error::InvalidGrid(format!("grading {grading} outside [0, 1)")));
        }
        let ds = 1.0 / (nr as f64 - 0.5);
        let mut r = Vec::with_capacity(nr);
        let mut dr_ds = Vec::with_capacity(nr);
        let mut d2r_ds2 = Vec::with_capacity(nr);
        for i in 0..nr {
            let s = (i as f64 + 0.5) * ds;
            let (map, d1, d2) = radial_map(s, grading);
            r.push(map);
            dr_ds.push(d1);
            d2r_ds2.push(d2);
        }
        // Exact unit circle for the boundary row.
        r[nr - 1] = 1.0;
        let theta = (0..ntheta)
            .map(|j| 2.0 * PI * j as f64 / ntheta as f64)
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(ntheta);
        let inv = planner.plan_fft_inverse(ntheta);
        Ok(Self {
            nr,
            ntheta,
            grading,
            ds,
            r,
            dr_ds,
            d2r_ds2,
            theta,
            fwd,
            inv,
        })
    }

    pub fn uniform(nr: usize, ntheta: usize) -> Result<Self> {
        Self::new(nr, ntheta, 0.0)
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Total node count (including the boundary ring).
    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nr + i
    }

    /// Inverse of [`DiskGrid::idx`]: `(radial, angular)`.
    #[inline]
    pub fn split(&self, p: usize) -> (usize, usize) {
        (p % self.nr, p / self.nr)
    }

    #[inline]
    pub fn radius(&self, i: usize) -> f64 {
        self.r[i]
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        self.theta[j]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    #[inline]
    pub fn is_boundary(&self, p: usize) -> bool {
        p % self.nr == self.nr - 1
    }

    #[inline]
    pub fn boundary_index(&self) -> usize {
        self.nr - 1
    }

    /// Euclidean position of a node.
    pub fn zeta(&self, i: usize, j: usize) -> [f64; 2] {
        let (s, c) = self.theta[j].sin_cos();
        [self.r[i] * c, self.r[i] * s]
    }

    /// Inverse squared conformal factor `(1 - r^2)^2 / 4` of the Poincaré
    /// metric: the hyperbolic Laplacian is this weight times the Euclidean one.
    #[inline]
    pub fn conformal_weight(&self, i: usize) -> f64 {
        let rho = 1.0 - self.r[i] * self.r[i];
        0.25 * rho * rho
    }

    /// Boundary defining function `1 - r^2` at radial index `i`.
    #[inline]
    pub fn rho(&self, i: usize) -> f64 {
        1.0 - self.r[i] * self.r[i]
    }

    /// Height of radial node `i` in the half-plane chart anchored at its own
    /// boundary angle: nodes on a ray map to `y = 0`.
    #[inline]
    pub fn chart_height(&self, i: usize) -> f64 {
        (1.0 - self.r[i]) / (1.0 + self.r[i])
    }

    /// Angular index of the reflected node across the center.
    #[inline]
    pub fn antipodal(&self, j: usize) -> usize {
        (j + self.ntheta / 2) % self.ntheta
    }

    /// Smallest Euclidean node spacing (used by explicit stability bounds).
    pub fn min_spacing(&self) -> f64 {
        let dr = (1..self.nr)
            .map(|i| self.r[i] - self.r[i - 1])
            .fold(f64::INFINITY, f64::min)
            .min(2.0 * self.r[0]);
        let dtheta = 2.0 * PI / self.ntheta as f64;
        dr.min(self.r[0] * dtheta)
    }

    pub fn differ(&self, scheme: AngularScheme) -> Differ<'_> {
        Differ {
            grid: self,
            scheme,
            ring: vec![Complex64::new(0.0, 0.0); self.ntheta],
            scratch: vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()],
            fs: vec![0.0; self.nr * self.ntheta],
            fss: vec![0.0; self.nr * self.ntheta],
        }
    }

    #[inline]
    fn value_at(&self, f: &[f64], i: isize, j: usize) -> f64 {
        if i >= 0 {
            f[self.idx(i as usize, j)]
        } else {
            f[self.idx((-i - 1) as usize, self.antipodal(j))]
        }
    }
}

fn radial_map(s: f64, g: f64) -> (f64, f64, f64) {
    let h = 0.5 * PI;
    let (sn, cs) = (h * s).sin_cos();
    (
        (1.0 - g) * s + g * sn,
        (1.0 - g) + g * h * cs,
        -g * h * h * sn,
    )
}

/// First and second derivatives in polar coordinates at every interior node.
/// Boundary-ring entries are left at zero.
#[derive(Clone, Debug, Default)]
pub struct Derivs {
    pub fr: Vec<f64>,
    pub frr: Vec<f64>,
    pub ft: Vec<f64>,
    pub ftt: Vec<f64>,
}

impl Derivs {
    pub fn zeros(n: usize) -> Self {
        Self {
            fr: vec![0.0; n],
            frr: vec![0.0; n],
            ft: vec![0.0; n],
            ftt: vec![0.0; n],
        }
    }

    /// Euclidean Laplacian `f_rr + f_r / r + f_tt / r^2` at node `p`.
    #[inline]
    pub fn laplacian(&self, p: usize, r: f64) -> f64 {
        self.frr[p] + self.fr[p] / r + self.ftt[p] / (r * r)
    }
}

/// Stencil evaluator bound to a grid; owns FFT scratch so it can be reused
/// across many slices.
pub struct Differ<'g> {
    grid: &'g DiskGrid,
    scheme: AngularScheme,
    ring: Vec<Complex64>,
    scratch: Vec<Complex64>,
    fs: Vec<f64>,
    fss: Vec<f64>,
}

impl Differ<'_> {
    pub fn grid(&self) -> &DiskGrid {
        self.grid
    }

    /// Radial derivatives are fourth-order centered in the computational
    /// coordinate (second-order on the ring next to the circle); angular
    /// derivatives follow `scheme`.
    pub fn apply(&mut self, f: &[f64], out: &mut Derivs) {
        let g = self.grid;
        let (nr, nt) = (g.nr, g.ntheta);
        debug_assert_eq!(f.len(), nr * nt);
        for v in [&mut out.fr, &mut out.frr, &mut out.ft, &mut out.ftt] {
            v.resize(nr * nt, 0.0);
        }
        let ds = g.ds;
        for j in 0..nt {
            for i in 0..nr - 1 {
                let ii = i as isize;
                let (fs, fss) = if i + 2 < nr {
                    let m2 = g.value_at(f, ii - 2, j);
                    let m1 = g.value_at(f, ii - 1, j);
                    let c = g.value_at(f, ii, j);
                    let p1 = g.value_at(f, ii + 1, j);
                    let p2 = g.value_at(f, ii + 2, j);
                    (
                        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * ds),
                        (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * ds * ds),
                    )
                } else {
                    let m1 = g.value_at(f, ii - 1, j);
                    let c = g.value_at(f, ii, j);
                    let p1 = g.value_at(f, ii + 1, j);
                    ((p1 - m1) / (2.0 * ds), (p1 - 2.0 * c + m1) / (ds * ds))
                };
                let p = g.idx(i, j);
                self.fs[p] = fs;
                self.fss[p] = fss;
            }
        }
        for j in 0..nt {
            for i in 0..nr - 1 {
                let p = g.idx(i, j);
                let d1 = g.dr_ds[i];
                let fr = self.fs[p] / d1;
                out.fr[p] = fr;
                out.frr[p] = (self.fss[p] - g.d2r_ds2[i] * fr) / (d1 * d1);
            }
            let p = g.idx(nr - 1, j);
            out.fr[p] = 0.0;
            out.frr[p] = 0.0;
        }
        match self.scheme {
            AngularScheme::Spectral => self.angular_spectral(f, out),
            AngularScheme::Centered => self.angular_centered(f, out),
        }
    }

    fn angular_centered(&mut self, f: &[f64], out: &mut Derivs) {
        let g = self.grid;
        let (nr, nt) = (g.nr, g.ntheta);
        let dt = 2.0 * PI / nt as f64;
        for j in 0..nt {
            let jp = (j + 1) % nt;
            let jm = (j + nt - 1) % nt;
            for i in 0..nr {
                let p = g.idx(i, j);
                if i == nr - 1 {
                    out.ft[p] = 0.0;
                    out.ftt[p] = 0.0;
                    continue;
                }
                let (a, b, c) = (f[g.idx(i, jm)], f[p], f[g.idx(i, jp)]);
                out.ft[p] = (c - a) / (2.0 * dt);
                out.ftt[p] = (c - 2.0 * b + a) / (dt * dt);
            }
        }
    }

    fn angular_spectral(&mut self, f: &[f64], out: &mut Derivs) {
        let g = self.grid;
        let (nr, nt) = (g.nr, g.ntheta);
        let half = nt / 2;
        let norm = 1.0 / nt as f64;
        for i in 0..nr {
            if i == nr - 1 {
                for j in 0..nt {
                    let p = g.idx(i, j);
                    out.ft[p] = 0.0;
                    out.ftt[p] = 0.0;
                }
                continue;
            }
            // Shifting by one ring value keeps constant rings exactly zero.
            let shift = f[g.idx(i, 0)];
            for j in 0..nt {
                self.ring[j] = Complex64::new(f[g.idx(i, j)] - shift, 0.0);
            }
            g.fwd.process_with_scratch(&mut self.ring, &mut self.scratch);
            // Pack first derivative into the real part and second into the
            // imaginary part: both spectra are Hermitian.
            for (j, c) in self.ring.iter_mut().enumerate() {
                let (d1, k2) = if j < half {
                    (j as f64, (j * j) as f64)
                } else if j == half {
                    (0.0, (half * half) as f64)
                } else {
                    let k = j as f64 - nt as f64;
                    (k, k * k)
                };
                let v = *c;
                let first = Complex64::new(-d1 * v.im, d1 * v.re);
                let second = -k2 * v;
                *c = first + Complex64::new(-second.im, second.re);
            }
            g.inv.process_with_scratch(&mut self.ring, &mut self.scratch);
            for j in 0..nt {
                let p = g.idx(i, j);
                out.ft[p] = self.ring[j].re * norm;
                out.ftt[p] = self.ring[j].im * norm;
            }
        }
    }
}

/// Direct solver for `alpha(r) f - beta(r) L f = g` on one disk with Dirichlet
/// data on the circle, where `L` is the Euclidean Laplacian discretized with
/// three-point radial differences and exact angular Fourier modes. Each
/// Fourier mode decouples into a tridiagonal radial system.
#[derive(Clone)]
pub struct PolarSolver {
    grid: DiskGrid,
    beta: Vec<f64>,
    cp: Vec<f64>,
    // Per angular mode: Thomas factors (modified diagonal, multipliers).
    modes: Vec<ModeFactor>,
}

#[derive(Clone, Debug)]
struct ModeFactor {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl PolarSolver {
    pub fn new(grid: &DiskGrid, alpha: &[f64], beta: &[f64]) -> Self {
        let nr = grid.nr;
        let nt = grid.ntheta;
        let m = nr - 1;
        assert!(alpha.len() >= m && beta.len() >= m);
        let ds = grid.ds;
        let mut cm = vec![0.0; m];
        let mut c0 = vec![0.0; m];
        let mut cp = vec![0.0; m];
        for i in 0..m {
            let d1 = grid.dr_ds[i];
            let d2 = grid.d2r_ds2[i];
            let q = 1.0 / (d1 * grid.r[i]) - d2 / (d1 * d1 * d1);
            let a = 1.0 / (d1 * d1 * ds * ds);
            cm[i] = a - q / (2.0 * ds);
            c0[i] = -2.0 * a;
            cp[i] = a + q / (2.0 * ds);
        }
        let half = nt / 2;
        let modes = (0..nt)
            .map(|j| {
                let k = if j <= half { j as f64 } else { j as f64 - nt as f64 };
                let parity = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let mut lower = vec![0.0; m];
                let mut diag = vec![0.0; m];
                let mut upper = vec![0.0; m];
                for i in 0..m {
                    let r = grid.r[i];
                    let mut center = c0[i] - k * k / (r * r);
                    if i == 0 {
                        center += parity * cm[0];
                    } else {
                        lower[i] = -beta[i] * cm[i];
                    }
                    diag[i] = alpha[i] - beta[i] * center;
                    if i + 1 < m {
                        upper[i] = -beta[i] * cp[i];
                    }
                }
                // Thomas forward elimination, stored in place.
                for i in 1..m {
                    let w = lower[i] / diag[i - 1];
                    lower[i] = w;
                    diag[i] -= w * upper[i - 1];
                }
                ModeFactor { lower, diag, upper }
            })
            .collect();
        Self {
            grid: grid.clone(),
            beta: beta[..m].to_vec(),
            cp,
            modes,
        }
    }

    /// Pure Laplacian `-L f = g` (sign chosen so the operator is positive).
    pub fn laplacian(grid: &DiskGrid) -> Self {
        let m = grid.nr;
        Self::new(grid, &vec![0.0; m], &vec![1.0; m])
    }

    /// `f - dt * w(r) L f = g` with the hyperbolic conformal weight `w`.
    pub fn implicit_heat(grid: &DiskGrid, dt: f64) -> Self {
        let alpha = vec![1.0; grid.nr];
        let beta: Vec<f64> = (0..grid.nr).map(|i| dt * grid.conformal_weight(i)).collect();
        Self::new(grid, &alpha, &beta)
    }

    pub fn grid(&self) -> &DiskGrid {
        &self.grid
    }

    /// On entry interior entries of `f` hold the right-hand side and the
    /// boundary ring holds Dirichlet values; on exit the interior holds the
    /// solution.
    pub fn solve_in_place(&self, f: &mut [f64], work: &mut PolarWork) {
        let g = &self.grid;
        let (nr, nt) = (g.nr, g.ntheta);
        let m = nr - 1;
        work.ensure(g);
        // Move Dirichlet data to the right-hand side.
        for j in 0..nt {
            let b = f[g.idx(nr - 1, j)];
            if b != 0.0 {
                let p = g.idx(m - 1, j);
                f[p] += self.beta[m - 1] * self.cp[m - 1] * b;
            }
        }
        let spec = &mut work.spec;
        for i in 0..m {
            for j in 0..nt {
                work.ring[j] = Complex64::new(f[g.idx(i, j)], 0.0);
            }
            g.fwd.process_with_scratch(&mut work.ring, &mut work.scratch);
            for j in 0..nt {
                spec[j * m + i] = work.ring[j];
            }
        }
        for (j, mode) in self.modes.iter().enumerate() {
            let x = &mut spec[j * m..(j + 1) * m];
            for i in 1..m {
                let l = mode.lower[i];
                let prev = x[i - 1];
                x[i] -= prev * l;
            }
            x[m - 1] /= mode.diag[m - 1];
            for i in (0..m - 1).rev() {
                let next = x[i + 1];
                x[i] = (x[i] - next * mode.upper[i]) / mode.diag[i];
            }
        }
        let norm = 1.0 / nt as f64;
        for i in 0..m {
            for j in 0..nt {
                work.ring[j] = spec[j * m + i];
            }
            g.inv.process_with_scratch(&mut work.ring, &mut work.scratch);
            for j in 0..nt {
                f[g.idx(i, j)] = work.ring[j].re * norm;
            }
        }
    }
}

/// Scratch space for [`PolarSolver::solve_in_place`].
#[derive(Default)]
pub struct PolarWork {
    ring: Vec<Complex64>,
    scratch: Vec<Complex64>,
    spec: Vec<Complex64>,
}

impl PolarWork {
    fn ensure(&mut self, g: &DiskGrid) {
        let zero = Complex64::new(0.0, 0.0);
        self.ring.resize(g.ntheta, zero);
        let s = g.fwd.get_inplace_scratch_len().max(g.inv.get_inplace_scratch_len());
        self.scratch.resize(s, zero);
        self.spec.resize((g.nr - 1) * g.ntheta, zero);
    }
}

/// The discrete operator inverted by [`PolarSolver`], applied explicitly
/// (interior nodes only; used by tests and residual checks).
pub fn apply_polar_operator(grid: &DiskGrid, alpha: &[f64], beta: &[f64], f: &[f64]) -> Vec<f64> {
    let (nr, nt) = (grid.nr, grid.ntheta);
    let ds = grid.ds;
    let mut out = vec![0.0; f.len()];
    // The angular part is applied spectrally to match the solver.
    let mut d = Derivs::zeros(f.len());
    grid.differ(AngularScheme::Spectral).apply(f, &mut d);
    for j in 0..nt {
        for i in 0..nr - 1 {
            let d1 = grid.dr_ds[i];
            let d2 = grid.d2r_ds2[i];
            let r = grid.r[i];
            let m1 = grid.value_at(f, i as isize - 1, j);
            let c = f[grid.idx(i, j)];
            let p1 = f[grid.idx(i + 1, j)];
            let fs = (p1 - m1) / (2.0 * ds);
            let fss = (p1 - 2.0 * c + m1) / (ds * ds);
            let lap_r = fss / (d1 * d1) + fs * (1.0 / (d1 * r) - d2 / (d1 * d1 * d1));
            let p = grid.idx(i, j);
            out[p] = alpha[i] * c - beta[i] * (lap_r + d.ftt[p] / (r * r));
        }
    }
    out
}
