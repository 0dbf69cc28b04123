use std::path::Path;
use std::process::Command;

use goldbev_cli::{Pipeline, PipelineConfig, Stage, StoreError};
use goldbev_core::sensors::Stream;
use goldbev_core::BevGridSpec;

fn small() -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.grid = BevGridSpec::new(21.0, 300).unwrap();
    c.synth.aerial.size_px = 600;
    c.synth.world.extent_m = 200.0;
    c.synth.world.counts.buildings = 12;
    c.synth.world.counts.vehicles = 10;
    c.synth.world.counts.vrus = 10;
    c.synth.drive.duration_s = 12.0;
    c.split.min_segment_len = 3;
    c.split.guard_gap_m = 4.0;
    c
}

fn mtime(p: &Path) -> std::time::SystemTime {
    std::fs::metadata(p).unwrap().modified().unwrap()
}

#[test]
fn stages_chain_and_rerun_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small(), dir.path(), Some(1)).unwrap();
    let first = p.run_through(Stage::Report).unwrap();
    assert!(first.iter().all(|o| !o.reused));
    assert_eq!(first.len(), Stage::ALL.len());
    let record = p.layout.dir(Stage::Report).join("stage.json");
    let before = mtime(&record);

    let again = Pipeline::new(small(), dir.path(), Some(1)).unwrap();
    let second = again.run_through(Stage::Report).unwrap();
    assert!(second.iter().all(|o| o.reused));
    assert_eq!(mtime(&record), before);
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), Stage::ALL.len());

    let report = std::fs::read_to_string(p.layout.dir(Stage::Report).join("report.md")).unwrap();
    assert!(report.contains(&p.layout.config_hash));
    assert!(report.contains("| cone_visible |"));
}

#[test]
fn eval_only_change_reuses_upstream_stages() {
    let dir = tempfile::tempdir().unwrap();
    let a = Pipeline::new(small(), dir.path(), Some(1)).unwrap();
    a.run_through(Stage::Split).unwrap();
    let mut cfg = small();
    cfg.eval.min_returns = 5;
    let b = Pipeline::new(cfg, dir.path(), Some(1)).unwrap();
    for s in [Stage::Synth, Stage::Align, Stage::Rasterize, Stage::Fuse, Stage::Split] {
        assert_eq!(a.layout.key(s), b.layout.key(s), "{}", s.name());
        assert!(b.layout.is_done(s));
    }
    assert_ne!(a.layout.key(Stage::Eval), b.layout.key(Stage::Eval));
    assert!(!b.run(Stage::Eval).unwrap().reused);
}

#[test]
fn missing_upstream_is_reported_and_nothing_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(small(), dir.path(), Some(1)).unwrap();
    let err = p.run(Stage::Align).unwrap_err();
    match err.downcast_ref::<StoreError>() {
        Some(StoreError::MissingUpstream { stage, upstream, .. }) => {
            assert_eq!((*stage, *upstream), ("align", "synth"));
        }
        other => panic!("unexpected error {other:?}"),
    }
    let left = std::fs::read_dir(dir.path()).map(|d| d.count()).unwrap_or(0);
    assert_eq!(left, 0);
}

#[test]
fn zero_offset_tolerance_aligns_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.align.max_offset_us = 0;
    let p = Pipeline::new(cfg, dir.path(), Some(1)).unwrap();
    p.run_through(Stage::Align).unwrap();
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.layout.dir(Stage::Align).join("stage.json")).unwrap()).unwrap();
    assert_eq!(record["summary"]["aligned"], 0);
    assert_eq!(record["summary"]["discards_by_reason"]["temporal"], record["summary"]["anchors"]);
}

#[test]
fn clock_offset_enters_matching_and_align_key_only() {
    let dir = tempfile::tempdir().unwrap();
    let base = Pipeline::new(small(), dir.path(), Some(1)).unwrap();
    base.run_through(Stage::Align).unwrap();
    let mut cfg = small();
    cfg.clock.offset_us.insert(Stream::LidarB, 3_600_000_000);
    let skewed = Pipeline::new(cfg, dir.path(), Some(1)).unwrap();
    assert_eq!(skewed.layout.dir(Stage::Synth), base.layout.dir(Stage::Synth));
    assert_ne!(skewed.layout.dir(Stage::Align), base.layout.dir(Stage::Align));
    skewed.run_through(Stage::Align).unwrap();
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(skewed.layout.dir(Stage::Align).join("stage.json")).unwrap()).unwrap();
    assert_eq!(record["summary"]["aligned"], 0);
    assert_eq!(record["summary"]["discards_by_reason"]["temporal"], record["summary"]["anchors"]);
}

#[test]
fn invalid_config_is_rejected_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small();
    cfg.fusion.tau_c = 1.5;
    cfg.split.fractions = [0.5, 0.5, 0.5];
    let err = Pipeline::new(cfg, dir.path(), Some(1)).err().unwrap().to_string();
    assert!(err.contains("tau_c") && err.contains("fractions"), "{err}");
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn binary_runs_stages_from_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("goldbev.toml");
    std::fs::write(&cfg_path, toml::to_string(&small()).unwrap()).unwrap();
    let out = dir.path().join("out");
    let bin = env!("CARGO_BIN_EXE_goldbev");
    let run = |args: &[&str]| {
        Command::new(bin)
            .args(["--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .args(args)
            .env("GOLDBEV_THREADS", "1")
            .output()
            .unwrap()
    };
    let fail = run(&["align"]);
    assert!(!fail.status.success());
    assert!(String::from_utf8_lossy(&fail.stderr).contains("synth"));

    let ok = run(&["run", "--stage", "align"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("synth") && stdout.contains("done"), "{stdout}");
    let again = run(&["synth"]);
    assert!(String::from_utf8_lossy(&again.stdout).contains("reused"));

    let seeded = run(&["--seed", "99", "synth"]);
    assert!(String::from_utf8_lossy(&seeded.stdout).contains("done"));
    assert_eq!(std::fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("synth-")).count(), 2);

    let bad = run(&["run", "--stage", "nope"]);
    assert!(!bad.status.success());
}
