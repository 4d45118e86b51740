//! Run orchestration: configuration, the four stages, and artifacts.
//!
//! Stages run in the fixed order extend, glue, flow, verify. Every file is
//! written under the output directory and listed with its SHA-256 in
//! `manifest.json`. Nothing time-dependent is recorded, so the same
//! configuration and seed reproduce every byte.
//!
//! # Torus sample files
//!
//! Corner data may be given as a text file of samples on the torus:
//!
//! ```text
//! # lines starting with '#' and blank lines are ignored
//! cornerflow-torus-samples 1
//! <n1> <n2> <dim>
//! <dim floats>      (one line per sample, n1 * n2 lines)
//! ```
//!
//! Line `j1 * n2 + j2` (counting sample lines from zero) holds
//! `phi(2 pi j1 / n1, 2 pi j2 / n2)`. Each sample must be a unit vector to
//! within `1e-10`, and both `n1` and `n2` must be at least 64 so that
//! derivatives up to fourth order are resolved. Floats are parsed with
//! Rust's `f64` parser; [`write_torus_samples`] prints the shortest
//! representation that parses back to the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::{self, CornerMap, PhaseMap, SampledCornerMap};
use crate::error::{Error, Result};
use crate::field::{BidiskGrid, MapField2};
use crate::fit::DecayFit;
use crate::flow::{self, FlowOptions, MonitorSeries};
use crate::geom;
use crate::glue::{self, ApproximateMap, CornerSubgrid, GlueOptions, TopBoundaryData};
use crate::grid::DiskGrid;
use crate::litam::SolverOptions;
use crate::snapshot::{self, GridSnapshot};
use crate::tension;
use crate::verify::{self, CheckReport};

/// Smallest factor grid accepted by a run.
pub const MIN_RUN_NODES: usize = 16;
/// Smallest torus sample count per axis accepted from a file.
pub const MIN_FILE_SAMPLES: usize = 64;
const SAMPLE_MAGIC: &str = "cornerflow-torus-samples";

/// Corner datum selection. `n` is the target's boundary-sphere dimension,
/// so values live in `R^{n+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CornerSpec {
    AngleSum { n: usize },
    Degree { n: usize, k: i32, l: i32 },
    Generic { n: usize, eps: f64, lift: f64 },
    Samples { path: PathBuf },
}

impl Default for CornerSpec {
    fn default() -> Self {
        Self::AngleSum { n: 1 }
    }
}

impl CornerSpec {
    pub fn build(&self) -> Result<Arc<dyn CornerMap>> {
        let dim = |n: usize| {
            if n == 0 || n + 1 > crate::MAX_TARGET_DIM {
                Err(Error::Config(format!("n = {n} outside 1..={}", crate::MAX_TARGET_DIM - 1)))
            } else {
                Ok(n + 1)
            }
        };
        Ok(match self {
            Self::AngleSum { n } => Arc::new(PhaseMap::angle_sum(dim(*n)?)),
            Self::Degree { n, k, l } => Arc::new(PhaseMap::degree(*k, *l, dim(*n)?)),
            Self::Generic { n, eps, lift } => Arc::new(PhaseMap::generic(dim(*n)?, *eps, *lift)),
            Self::Samples { path } => Arc::new(read_torus_samples(path)?),
        })
    }
}

/// Both factors use square `n x n` polar grids with a shared grading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n1: usize,
    pub n2: usize,
    pub grading: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n1: 32,
            n2: 32,
            grading: 0.8,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<BidiskGrid> {
        for (axis, n) in [("first", self.n1), ("second", self.n2)] {
            if n < MIN_RUN_NODES {
                return Err(Error::Config(format!(
                    "{axis} factor grid {n} is below the minimum of {MIN_RUN_NODES} nodes per axis"
                )));
            }
        }
        let g = |n| DiskGrid::new(n, n, self.grading).map_err(|e| Error::Config(e.to_string()));
        Ok(BidiskGrid::new(g(self.n1)?, g(self.n2)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowStageConfig {
    #[serde(flatten)]
    pub options: FlowOptions,
    /// Write the flow state every this many steps (0 disables).
    pub snapshot_every: usize,
    /// Amplitude of a seeded interior perturbation of the glued map before
    /// the flow starts (0 keeps the glued fill).
    pub perturb_amplitude: f64,
}

impl Default for FlowStageConfig {
    fn default() -> Self {
        Self {
            options: FlowOptions::default(),
            snapshot_every: 0,
            perturb_amplitude: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub decay: CornerSubgrid,
    pub holomorphic_sizes: Vec<usize>,
    pub superharmonic_exponents: Vec<f64>,
    pub distance_floor: f64,
    pub dimension_trials: usize,
    pub rayleigh_samples: usize,
    /// Leading fraction of the monitor series treated as transient.
    pub skip_fraction: f64,
    pub min_rate: f64,
    pub min_rate_r2: f64,
    pub oracle_tolerance: f64,
    /// Checks whose failure makes the run fail. Names without a report in
    /// a given run (such as the oracle for non-oracle data) are skipped.
    pub required: Vec<String>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            decay: CornerSubgrid::default(),
            holomorphic_sizes: vec![16, 32],
            superharmonic_exponents: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            distance_floor: 1e-12,
            dimension_trials: 1000,
            rayleigh_samples: 4,
            skip_fraction: 0.2,
            min_rate: 0.1,
            min_rate_r2: 0.95,
            oracle_tolerance: 1e-2,
            required: [
                "flow_converged",
                "flow_rate",
                "hartman_monotonicity",
                "individual_harmonicity",
                "corner_fidelity",
                "distance_subharmonicity",
                "superharmonicity",
                "indicial_roots",
                "dimension_restriction",
                "rayleigh_bound",
                "holomorphic_harmonicity",
                "oracle_distance",
            ]
            .map(String::from)
            .to_vec(),
        }
    }
}

/// Everything a run needs. Parsed from TOML; every section is optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corner: CornerSpec,
    pub grid: GridConfig,
    pub solver: SolverOptions,
    pub glue: GlueOptions,
    pub flow: FlowStageConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("cornerflow-out"),
            corner: CornerSpec::default(),
            grid: GridConfig::default(),
            solver: SolverOptions::default(),
            glue: GlueOptions::default(),
            flow: FlowStageConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that can be checked without solving.
    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        if let CornerSpec::Samples { path } = &self.corner {
            if !path.is_file() {
                return Err(Error::Config(format!("sample file {} does not exist", path.display())));
            }
        }
        self.corner.build().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })?;
        if self.solver.tolerance <= 0.0 || self.solver.max_iterations == 0 {
            return Err(Error::Config("solver tolerance and iteration cap must be positive".into()));
        }
        self.glue.cutoff.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.flow.options.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.verify.holomorphic_sizes.iter().any(|&n| n < MIN_RUN_NODES) {
            return Err(Error::Config("holomorphic check grids need at least 16 nodes".into()));
        }
        Ok(())
    }
}

/// Parse a torus sample file (format in the module documentation).
pub fn parse_torus_samples(text: &str) -> Result<SampledCornerMap> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let bad = |m: String| Error::Config(format!("torus sample file: {m}"));
    let magic = lines.next().ok_or_else(|| bad("empty file".into()))?;
    match magic.split_whitespace().collect::<Vec<_>>().as_slice() {
        [SAMPLE_MAGIC, "1"] => {}
        _ => return Err(bad(format!("expected '{SAMPLE_MAGIC} 1', found '{magic}'"))),
    }
    let shape: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing shape line".into()))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| bad(format!("shape entry '{t}': {e}"))))
        .collect::<Result<_>>()?;
    let [n1, n2, dim] = shape[..] else {
        return Err(bad("shape line must hold n1 n2 dim".into()));
    };
    if n1 < MIN_FILE_SAMPLES || n2 < MIN_FILE_SAMPLES {
        return Err(bad(format!("{n1}x{n2} samples; need at least {MIN_FILE_SAMPLES} per axis")));
    }
    let mut values = Vec::with_capacity(n1 * n2 * dim);
    for (i, line) in lines.enumerate() {
        let before = values.len();
        for t in line.split_whitespace() {
            values.push(f64::from_str(t).map_err(|e| bad(format!("sample {i}: '{t}': {e}")))?);
        }
        if values.len() - before != dim {
            return Err(bad(format!("sample {i} has {} entries, expected {dim}", values.len() - before)));
        }
    }
    if values.len() != n1 * n2 * dim {
        return Err(bad(format!("{} samples, expected {}", values.len() / dim.max(1), n1 * n2)));
    }
    SampledCornerMap::new([n1, n2], dim, values)
}

pub fn read_torus_samples(path: &Path) -> Result<SampledCornerMap> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_torus_samples(&text)
}

/// Sample `phi` on an `n1 x n2` torus grid in the file format.
pub fn write_torus_samples(phi: &dyn CornerMap, n1: usize, n2: usize) -> String {
    let mut s = format!("{SAMPLE_MAGIC} 1\n{n1} {n2} {}\n", phi.dim());
    for j1 in 0..n1 {
        for j2 in 0..n2 {
            let t = [
                std::f64::consts::TAU * j1 as f64 / n1 as f64,
                std::f64::consts::TAU * j2 as f64 / n2 as f64,
            ];
            let v = phi.eval(t);
            let row: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Extend,
    Glue,
    Flow,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Extend, Stage::Glue, Stage::Flow, Stage::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Extend => "extend",
            Stage::Glue => "glue",
            Stage::Flow => "flow",
            Stage::Verify => "verify",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage '{s}' (expected extend, glue, flow or verify)")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Writes files under one root and remembers their checksums.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// `rel` uses `/` separators.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        self.entries.retain(|e| e.path != rel);
        self.entries.push(ManifestEntry {
            path: rel.into(),
            bytes: bytes.len() as u64,
            sha256: snapshot::sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    pub fn write_snapshot(&mut self, rel: &str, snap: &GridSnapshot) -> Result<()> {
        self.write(rel, &snap.to_bytes()?)
    }

    /// Writes `manifest.json` (sorted by path) and returns its entries.
    pub fn finish(mut self) -> Result<Vec<ManifestEntry>> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let entries = self.entries.clone();
        self.write_json("manifest.json", &entries)?;
        Ok(entries)
    }
}

/// Re-hash every manifest entry; returns the paths that no longer match.
pub fn verify_manifest(root: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(root.join("manifest.json"))?;
    let entries: Vec<ManifestEntry> = serde_json::from_str(&text)?;
    let mut bad = Vec::new();
    for e in entries {
        match std::fs::read(root.join(&e.path)) {
            Ok(b) if snapshot::sha256_hex(&b) == e.sha256 => {}
            _ => bad.push(e.path),
        }
    }
    Ok(bad)
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub last_stage: Stage,
    pub reports: Vec<CheckReport>,
    /// Required checks that ran and failed.
    pub failed: Vec<String>,
    pub manifest: Vec<ManifestEntry>,
}

impl PipelineOutcome {
    pub fn success(&self) -> bool {
        self.failed.is_empty()
    }
}

#[derive(Serialize)]
struct FamilySummary {
    slices: usize,
    max_newton_steps: usize,
    total_krylov_iterations: usize,
    max_final_residual: f64,
    stagnated: usize,
    max_first_difference: f64,
    max_second_difference: f64,
}

fn family_summary(top: &TopBoundaryData, which: usize) -> FamilySummary {
    let reports = if which == 0 { &top.reports_a } else { &top.reports_b };
    FamilySummary {
        slices: reports.len(),
        max_newton_steps: reports.iter().map(|r| r.newton_steps).max().unwrap_or(0),
        total_krylov_iterations: reports.iter().map(|r| r.krylov_iterations).sum(),
        max_final_residual: reports.iter().map(|r| r.final_residual()).fold(0.0, f64::max),
        stagnated: reports.iter().filter(|r| r.stagnated).count(),
        max_first_difference: top.max_first_difference[which],
        max_second_difference: top.max_second_difference[which],
    }
}

fn extend_stage(cfg: &RunConfig, phi: Arc<dyn CornerMap>, grid: &BidiskGrid, w: &mut ArtifactWriter) -> Result<TopBoundaryData> {
    let nd = boundary::nondegeneracy_report(phi.as_ref(), 64, boundary::DEFAULT_MARGIN)?;
    let top = glue::initial_extension(phi.clone(), grid, &cfg.solver)?;
    for (label, fam) in [("face1", &top.family_a), ("face2", &top.family_b)] {
        for (j, f) in fam.iter().enumerate() {
            let snap = GridSnapshot::from_disk(f)
                .with_metadata("datum", phi.describe())
                .with_metadata("slice", j.to_string());
            w.write_snapshot(&format!("extend/{label}/slice_{j:04}.snap"), &snap)?;
        }
    }
    let mut summary = BTreeMap::new();
    summary.insert("face1", serde_json::to_value(family_summary(&top, 0))?);
    summary.insert("face2", serde_json::to_value(family_summary(&top, 1))?);
    summary.insert("nondegeneracy", serde_json::to_value(nd)?);
    w.write_json("extend/summary.json", &summary)?;
    Ok(top)
}

fn glue_stage(cfg: &RunConfig, top: &TopBoundaryData, w: &mut ArtifactWriter) -> Result<ApproximateMap> {
    let approx = glue::assemble(top, &cfg.glue)?;
    let grid = &approx.v.grid;
    let tau = tension::tension_bidisk(&approx.v)?;
    w.write_snapshot("glue/glued.snap", &GridSnapshot::from_bidisk(&approx.v))?;
    w.write_snapshot(
        "glue/tension_norm.snap",
        &GridSnapshot::from_bidisk_values(grid, 1, tau.norms.clone()).with_metadata("quantity", "hyperbolic tension norm"),
    )?;
    let samples = glue::corner_samples(&tau.norms, grid, &cfg.verify.decay);
    let mut csv = String::from("rho1,rho2,tension\n");
    for (a, b, q) in &samples {
        let _ = writeln!(csv, "{a:?},{b:?},{q:?}");
    }
    w.write("glue/decay_samples.csv", csv.as_bytes())?;
    let fit = glue::decay_fit(&tau.norms, grid, &cfg.verify.decay);
    w.write_json("glue/decay_fit.json", &decay_json(&fit))?;
    let summary = serde_json::json!({
        "max_tension": tau.max_norm(),
        "psi_roughness": approx.psi_roughness,
    });
    w.write_json("glue/summary.json", &summary)?;
    Ok(approx)
}

fn decay_json(fit: &Result<DecayFit>) -> serde_json::Value {
    match fit {
        Ok(f) => serde_json::to_value(f).unwrap_or_default(),
        Err(e) => serde_json::json!({ "error": e.to_string() }),
    }
}

/// Decay fit of the tension norm of a stored bidisk map, or of a stored
/// scalar field used as is.
pub fn fit_decay_snapshot(path: &Path, sub: &CornerSubgrid) -> Result<DecayFit> {
    let snap = snapshot::load_snapshot(path)?;
    if snap.header.components == 1 {
        let [a, b] = snap.header.grids.as_slice() else {
            return Err(Error::ShapeMismatch("scalar decay data must live on the bidisk".into()));
        };
        let grid = BidiskGrid::new(a.build()?, b.build()?);
        glue::decay_fit(&snap.values, &grid, sub)
    } else {
        let u = snap.to_bidisk()?;
        let tau = tension::tension_bidisk(&u)?;
        glue::decay_fit(&tau.norms, &u.grid, sub)
    }
}

struct FlowOutput {
    u: MapField2,
    monitors: MonitorSeries,
    converged: bool,
}

fn flow_stage(cfg: &RunConfig, v: &MapField2, w: &mut ArtifactWriter) -> Result<FlowOutput> {
    let start = if cfg.flow.perturb_amplitude > 0.0 {
        glue::perturb_interior(v, cfg.seed, cfg.flow.perturb_amplitude)
    } else {
        v.clone()
    };
    let every = cfg.flow.snapshot_every;
    let mut periodic = Vec::new();
    let result = flow::run_observed(start, &cfg.flow.options, |rec, state| {
        if every > 0 && rec.step % every == 0 {
            periodic.push((rec.step, GridSnapshot::from_bidisk(&state.u)));
        }
    })?;
    for (step, snap) in periodic {
        w.write_snapshot(&format!("flow/snapshots/step_{step:06}.snap"), &snap.with_metadata("step", step.to_string()))?;
    }
    w.write("flow/monitors.jsonl", result.monitors.to_json_lines()?.as_bytes())?;
    w.write_snapshot("flow/final.snap", &GridSnapshot::from_bidisk(&result.state.u))?;
    let rate = flow::fit_rate(&result.monitors, cfg.verify.skip_fraction);
    let cmp = flow::compare_limit(&result.state.u, v, &cfg.verify.decay)?;
    let summary = serde_json::json!({
        "converged": result.converged,
        "steps": result.state.step,
        "time": result.state.t,
        "retries": result.retries,
        "final_speed": result.state.speed(),
        "rate_fit": match &rate { Ok(r) => serde_json::to_value(r)?, Err(e) => serde_json::json!({"error": e.to_string()}) },
        "distance_to_glued": {
            "sup": cmp.sup,
            "boundary_adjacent_max": cmp.boundary_adjacent_max,
            "decay_fit": cmp.fit,
        },
    });
    w.write_json("flow/summary.json", &summary)?;
    Ok(FlowOutput {
        u: result.state.u,
        monitors: result.monitors,
        converged: result.converged,
    })
}

/// The limit composed with a ball isometry is again harmonic, so its
/// distance to the limit must be subharmonic.
fn translated(u: &MapField2) -> MapField2 {
    let mut a = vec![0.0; u.dim];
    a[0] = 0.3;
    a[1] = -0.2;
    let mut out = u.clone();
    for p in 0..u.grid.len() {
        let t = geom::mobius_translate(&a, u.at(p));
        out.at_mut(p).copy_from_slice(&t);
    }
    out
}

fn oracle_report(cfg: &RunConfig, u: &MapField2) -> Result<Option<CheckReport>> {
    if !matches!(cfg.corner, CornerSpec::AngleSum { .. }) {
        return Ok(None);
    }
    let oracle = MapField2::from_fn(u.grid.clone(), u.dim, |a, b, o| {
        o.iter_mut().for_each(|x| *x = 0.0);
        o[0] = a[0] * b[0] - a[1] * b[1];
        o[1] = a[0] * b[1] + a[1] * b[0];
    })?;
    let d = u.sup_distance(&oracle)?;
    let mut r = CheckReport::new("oracle_distance");
    r.tolerance("sup_distance", cfg.verify.oracle_tolerance);
    r.measure("sup_distance", d);
    r.pass = d <= cfg.verify.oracle_tolerance;
    Ok(Some(r))
}

fn flow_reports(cfg: &RunConfig, out: &FlowOutput) -> Vec<CheckReport> {
    let mut conv = CheckReport::new("flow_converged");
    conv.tolerance("stop_speed", cfg.flow.options.tolerance);
    if let Some(last) = out.monitors.records.last() {
        conv.measure("final_speed", last.sup_velocity);
        conv.measure("time", last.t);
    }
    conv.pass = out.converged;
    let mut rate = CheckReport::new("flow_rate");
    rate.tolerance("min_rate", cfg.verify.min_rate);
    rate.tolerance("min_r_squared", cfg.verify.min_rate_r2);
    match flow::fit_rate(&out.monitors, cfg.verify.skip_fraction) {
        Ok(f) => {
            rate.measure("rate", f.rate);
            rate.measure("r_squared", f.r_squared);
            rate.pass = f.rate > cfg.verify.min_rate && f.r_squared >= cfg.verify.min_rate_r2;
        }
        Err(e) => rate.note(e.to_string()),
    }
    vec![
        conv,
        rate,
        verify::hartman_monotonicity_check(&out.monitors, cfg.verify.skip_fraction),
    ]
}

fn verify_stage(
    cfg: &RunConfig,
    phi: &dyn CornerMap,
    grid: &BidiskGrid,
    out: &FlowOutput,
    w: &mut ArtifactWriter,
) -> Result<Vec<CheckReport>> {
    let vc = &cfg.verify;
    let mut reports = flow_reports(cfg, out);
    reports.push(verify::individual_harmonicity_check(&out.u, cfg.solver.tolerance)?);
    reports.push(verify::corner_fidelity_check(&out.u, phi));
    reports.push(verify::distance_subharmonicity_check(&out.u, &translated(&out.u), vc.distance_floor)?);
    if let Some(r) = oracle_report(cfg, &out.u)? {
        reports.push(r);
    }
    reports.push(verify::superharmonicity_check(&vc.superharmonic_exponents, grid)?);
    reports.push(verify::indicial_root_check());
    reports.push(verify::dimension_restriction_check(vc.dimension_trials, cfg.seed));
    reports.push(verify::rayleigh_bound_check(grid, vc.rayleigh_samples, cfg.seed)?);
    let mut holo = CheckReport::new("holomorphic_harmonicity");
    holo.pass = true;
    for (k, l) in [(1, 1), (2, 1), (2, 3)] {
        let r = verify::holomorphic_harmonicity_check(k, l, &vc.holomorphic_sizes, cfg.grid.grading)?;
        for (key, v) in &r.measured {
            holo.measure(format!("k{k}l{l}_{key}"), *v);
        }
        holo.tolerances.extend(r.tolerances.clone());
        holo.pass &= r.pass;
    }
    reports.push(holo);
    for r in &reports {
        w.write_json(&format!("verify/{}.json", r.name), r)?;
    }
    w.write("verify/summary.txt", verify::summary_table(&reports).as_bytes())?;
    Ok(reports)
}

/// Run the stages up to and including `last`. Configuration problems are
/// reported before anything is written; later failures carry the stage
/// name.
pub fn run_pipeline(cfg: &RunConfig, last: Stage) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let phi = cfg.corner.build()?;
    let grid = cfg.grid.build()?;
    let mut w = ArtifactWriter::new(&cfg.out)?;
    w.write("config.toml", cfg.to_toml()?.as_bytes())?;

    let top = extend_stage(cfg, phi.clone(), &grid, &mut w).map_err(|e| e.at_stage("extend"))?;
    let mut reports = Vec::new();
    if last >= Stage::Glue {
        let approx = glue_stage(cfg, &top, &mut w).map_err(|e| e.at_stage("glue"))?;
        drop(top);
        if last >= Stage::Flow {
            let out = flow_stage(cfg, &approx.v, &mut w).map_err(|e| e.at_stage("flow"))?;
            drop(approx);
            if last >= Stage::Verify {
                reports = verify_stage(cfg, phi.as_ref(), &grid, &out, &mut w).map_err(|e| e.at_stage("verify"))?;
            } else {
                reports = flow_reports(cfg, &out);
            }
        }
    }
    let failed = reports
        .iter()
        .filter(|r| !r.pass && cfg.verify.required.iter().any(|n| n == &r.name))
        .map(|r| r.name.clone())
        .collect();
    Ok(PipelineOutcome {
        last_stage: last,
        reports,
        failed,
        manifest: w.finish()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.corner = CornerSpec::Generic { n: 2, eps: 0.3, lift: 0.4 };
        cfg.flow.options.dt = 0.5;
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        let partial = RunConfig::from_toml("seed = 3\n[corner]\nfamily = \"degree\"\nn = 1\nk = 2\nl = 1\n").unwrap();
        assert_eq!(partial.seed, 3);
        assert_eq!(partial.grid, GridConfig::default());
        assert!(matches!(RunConfig::from_toml("[grid]\nsize = 3\n"), Err(Error::Config(_))));
        assert!(RunConfig::from_toml("[flow]\nbogus = 1\n").is_err());
        let flow = RunConfig::from_toml("[flow]\ndt = 0.5\nsnapshot_every = 3\n").unwrap().flow;
        assert_eq!((flow.options.dt, flow.snapshot_every), (0.5, 3));
    }

    #[test]
    fn coarse_grids_are_rejected_without_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.out = dir.path().join("run");
        cfg.grid.n1 = 8;
        assert!(matches!(run_pipeline(&cfg, Stage::Verify), Err(Error::Config(_))));
        assert!(!cfg.out.exists());
    }

    #[test]
    fn torus_samples_round_trip() {
        let phi = PhaseMap::generic(3, 0.3, 0.4);
        let text = write_torus_samples(&phi, 64, 64);
        let back = parse_torus_samples(&text).unwrap();
        assert_eq!(back.samples(), parse_torus_samples(&text).unwrap().samples());
        let t = [std::f64::consts::TAU * 5.0 / 64.0, std::f64::consts::TAU * 9.0 / 64.0];
        assert_eq!(back.eval(t), phi.eval(t));
        let small = write_torus_samples(&phi, 16, 64);
        assert!(matches!(parse_torus_samples(&small), Err(Error::Config(_))));
        let short = text.lines().take(100).collect::<Vec<_>>().join("\n");
        assert!(parse_torus_samples(&short).is_err());
    }

    #[test]
    fn stage_names_parse() {
        assert_eq!("glue".parse::<Stage>().unwrap(), Stage::Glue);
        assert!("polish".parse::<Stage>().is_err());
        assert!(Stage::Extend < Stage::Verify);
    }

    #[test]
    fn manifest_detects_edits() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write("a/x.txt", b"one").unwrap();
        w.write("b.txt", b"two").unwrap();
        let m = w.finish().unwrap();
        assert_eq!(m.iter().map(|e| e.path.as_str()).collect::<Vec<_>>(), ["a/x.txt", "b.txt"]);
        assert!(verify_manifest(dir.path()).unwrap().is_empty());
        std::fs::write(dir.path().join("b.txt"), b"changed").unwrap();
        assert_eq!(verify_manifest(dir.path()).unwrap(), ["b.txt"]);
    }
}
