use cornerflow::pipeline::{run_pipeline, verify_manifest, CornerSpec, RunConfig, Stage};
use cornerflow::snapshot::load_snapshot;

fn small_config(out: std::path::PathBuf) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.out = out;
    cfg.seed = 11;
    cfg.grid.n1 = 16;
    cfg.grid.n2 = 16;
    cfg.verify.dimension_trials = 200;
    cfg.verify.rayleigh_samples = 1;
    cfg
}

#[test]
fn angle_sum_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_pipeline(&small_config(dir.path().join("a")), Stage::Verify).unwrap();
    let b = run_pipeline(&small_config(dir.path().join("b")), Stage::Verify).unwrap();
    print!("{}", cornerflow::verify::summary_table(&a.reports));
    assert!(a.success(), "failed: {:?}", a.failed);
    // Only the recorded output directory differs between the two runs.
    let strip = |m: &[cornerflow::pipeline::ManifestEntry]| m.iter().filter(|e| e.path != "config.toml").cloned().collect::<Vec<_>>();
    assert_eq!(strip(&a.manifest), strip(&b.manifest));
    let monitors = |d: &str| std::fs::read(dir.path().join(d).join("flow/monitors.jsonl")).unwrap();
    assert_eq!(monitors("a"), monitors("b"));
    assert!(verify_manifest(&dir.path().join("a")).unwrap().is_empty());
    let glued = load_snapshot(&dir.path().join("a/glue/glued.snap")).unwrap().to_bidisk().unwrap();
    assert_eq!(glued.grid.first.nr(), 16);
    let oracle = a.reports.iter().find(|r| r.name == "oracle_distance").unwrap();
    assert!(oracle.measured["sup_distance"] <= 1e-2);
}

#[test]
fn partial_runs_stop_at_the_requested_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path().join("run"));
    cfg.corner = CornerSpec::Generic { n: 2, eps: 0.3, lift: 0.4 };
    let out = run_pipeline(&cfg, Stage::Glue).unwrap();
    assert!(out.reports.is_empty() && out.success());
    let paths: Vec<_> = out.manifest.iter().map(|e| e.path.as_str()).collect();
    assert!(paths.contains(&"glue/decay_fit.json") && paths.contains(&"extend/face2/slice_0015.snap"));
    assert!(!paths.iter().any(|p| p.starts_with("flow/")));
}

#[test]
fn degenerate_datum_is_tagged_with_its_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path().join("run"));
    cfg.corner = CornerSpec::Degree { n: 1, k: 1, l: 0 };
    let err = run_pipeline(&cfg, Stage::Extend).unwrap_err();
    assert!(err.to_string().starts_with("extend: degenerate boundary datum"), "{err}");
}
