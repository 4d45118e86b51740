//! Argument handling for the `cornerflow` binary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cornerflow::glue::{CornerSubgrid, Sampling};
use cornerflow::pipeline::{self, RunConfig, Stage};
use cornerflow::Error;

/// Exit status when a required check fails.
pub const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for unusable configuration or arguments.
pub const EXIT_CONFIG: u8 = 2;
/// Exit status when a stage errors out.
pub const EXIT_STAGE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cornerflow", version, about = "Harmonic maps from the bidisk with corner Dirichlet data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the single-disk extensions along both boundary faces.
    Extend(RunArgs),
    /// Extend, then assemble the approximate map and fit its tension decay.
    Glue(RunArgs),
    /// Extend, glue, then run the heat flow to convergence.
    Flow(RunArgs),
    /// All stages followed by every check.
    Verify(RunArgs),
    /// All stages, or those up to `--stage`.
    Pipeline(PipelineArgs),
    /// Corner power-law fit of a stored field (tension norm for maps).
    FitDecay(FitDecayArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration; defaults apply to anything omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Factor grid sizes as N1xN2; each disk uses an N x N polar grid.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    /// Stopping tolerance of the command's own stage: the disk solver for
    /// extend and glue, the flow speed otherwise.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Last stage to run: extend, glue, flow or verify.
    #[arg(long, default_value = "verify")]
    pub stage: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SamplingArg {
    Envelope,
    Pooled,
}

#[derive(Debug, Args)]
pub struct FitDecayArgs {
    /// Snapshot of a bidisk map or of a scalar bidisk field.
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub rho_max: f64,
    #[arg(long, value_enum, default_value = "envelope")]
    pub sampling: SamplingArg,
    /// Also write the fit to DIR/decay_fit.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `N1xN2`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected N1xN2, got '{s}'"))?;
    let n = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((n(a)?, n(b)?))
}

/// Merge the configuration file with command-line overrides.
pub fn resolve_config(args: &RunArgs, stage: Stage) -> Result<RunConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some((a, b)) = args.grid {
        cfg.grid.n1 = a;
        cfg.grid.n2 = b;
    }
    if let Some(t) = args.tol {
        match stage {
            Stage::Extend | Stage::Glue => cfg.solver.tolerance = t,
            Stage::Flow | Stage::Verify => cfg.flow.options.tolerance = t,
        }
    }
    Ok(cfg)
}

fn exit_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_STAGE,
    }
}

fn run_stages(args: &RunArgs, stage: Stage) -> Result<u8, Error> {
    let cfg = resolve_config(args, stage)?;
    let outcome = pipeline::run_pipeline(&cfg, stage)?;
    if !outcome.reports.is_empty() {
        print!("{}", cornerflow::verify::summary_table(&outcome.reports));
    }
    println!("{} artifacts in {}", outcome.manifest.len(), cfg.out.display());
    if outcome.success() {
        Ok(0)
    } else {
        eprintln!("required checks failed: {}", outcome.failed.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}

fn fit_decay(args: &FitDecayArgs) -> Result<u8, Error> {
    let sub = CornerSubgrid {
        rho_max: args.rho_max,
        sampling: match args.sampling {
            SamplingArg::Envelope => Sampling::Envelope,
            SamplingArg::Pooled => Sampling::Pooled,
        },
        ..CornerSubgrid::default()
    };
    let fit = pipeline::fit_decay_snapshot(&args.snapshot, &sub)?;
    let text = serde_json::to_string_pretty(&fit)?;
    println!("{text}");
    if let Some(dir) = &args.out {
        let mut w = pipeline::ArtifactWriter::new(dir)?;
        w.write("decay_fit.json", format!("{text}\n").as_bytes())?;
        w.finish()?;
    }
    Ok(0)
}

/// Size rayon's global pool from `CORNERFLOW_WORKERS` when set.
pub fn configure_workers() -> Result<(), Error> {
    if let Ok(v) = std::env::var("CORNERFLOW_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("CORNERFLOW_WORKERS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config("CORNERFLOW_WORKERS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> ExitCode {
    let result = configure_workers().and_then(|()| match &cli.command {
        Command::Extend(a) => run_stages(a, Stage::Extend),
        Command::Glue(a) => run_stages(a, Stage::Glue),
        Command::Flow(a) => run_stages(a, Stage::Flow),
        Command::Verify(a) => run_stages(a, Stage::Verify),
        Command::Pipeline(p) => p.stage.parse().and_then(|s| run_stages(&p.run, s)),
        Command::FitDecay(a) => fit_decay(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_flag_parses() {
        assert_eq!(parse_grid("32x48"), Ok((32, 48)));
        assert_eq!(parse_grid("16X16"), Ok((16, 16)));
        assert!(parse_grid("32").is_err() && parse_grid("ax3").is_err());
    }

    #[test]
    fn tolerance_targets_the_stage() {
        let cli = Cli::try_parse_from(["cornerflow", "extend", "--tol", "1e-9", "--grid", "20x24", "--seed", "4"]).unwrap();
        let Command::Extend(a) = cli.command else { panic!() };
        let cfg = resolve_config(&a, Stage::Extend).unwrap();
        assert_eq!((cfg.solver.tolerance, cfg.grid.n1, cfg.grid.n2, cfg.seed), (1e-9, 20, 24, 4));
        let cfg = resolve_config(&a, Stage::Flow).unwrap();
        assert_eq!(cfg.flow.options.tolerance, 1e-9);
        assert_eq!(cfg.solver.tolerance, RunConfig::default().solver.tolerance);
    }

    #[test]
    fn stage_flag_is_pipeline_only() {
        assert!(Cli::try_parse_from(["cornerflow", "pipeline", "--stage", "glue"]).is_ok());
        assert!(Cli::try_parse_from(["cornerflow", "glue", "--stage", "glue"]).is_err());
    }
}
