use std::fs;
use std::path::Path;

use jcwave::cli::{self, exit_code, render_plot, resolve, Mode, Overrides, RunConfig};
use jcwave::io::{read_columns, read_trajectory_binary};
use jcwave::trajectories::Protocol;
use jcwave::{Error, SystemParams};

fn small_config(mode: Mode) -> RunConfig {
    let mut c = RunConfig::new(mode, SystemParams { n_max: 4, ..SystemParams::default() });
    c.tau.start = -0.5;
    c.tau.end = 0.5;
    c.tau.step = 0.05;
    c
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn correlate_run_writes_reproducible_artifacts() {
    let mut c = small_config(Mode::Correlate);
    c.plot = true;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let out = cli::run(&c, a.path(), "corr").unwrap();
    cli::run(&c, b.path(), "corr").unwrap();
    assert!(out.artifacts.iter().any(|p| p.extension().is_some_and(|e| e == "svg")));
    assert_eq!(snapshot(a.path()), snapshot(b.path()));

    let (header, cols) = read_columns(fs::File::open(a.path().join("corr.csv")).unwrap()).unwrap();
    assert_eq!(header, ["tau", "h"]);
    assert_eq!(cols[0].len(), 21);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("corr.json")).unwrap()).unwrap();
    assert_eq!(json["kind"], "correlation");
    assert!(json["params"]["g"].is_number());
}

#[test]
fn trajectory_replays_from_its_seed() {
    let mut c = small_config(Mode::Trajectory);
    c.protocol = Some(Protocol::Fixed { duration: 2.0 });
    c.seed = 42;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cli::run(&c, a.path(), "tr").unwrap();
    cli::run(&c, b.path(), "tr").unwrap();
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
    let rec = read_trajectory_binary(fs::File::open(a.path().join("tr.bin")).unwrap()).unwrap();
    assert_eq!(rec.seed, 42);
    assert_eq!(rec.params, c.params);

    c.seed = 43;
    let d = tempfile::tempdir().unwrap();
    cli::run(&c, d.path(), "tr").unwrap();
    assert_ne!(fs::read(a.path().join("tr.bin")).unwrap(), fs::read(d.path().join("tr.bin")).unwrap());
}

#[test]
fn render_plot_is_deterministic() {
    let c = small_config(Mode::Correlate);
    let dir = tempfile::tempdir().unwrap();
    cli::run(&c, dir.path(), "c").unwrap();
    let src = dir.path().join("c.csv");
    render_plot(&src, &dir.path().join("one.svg")).unwrap();
    render_plot(&src, &dir.path().join("two.svg")).unwrap();
    let one = fs::read(dir.path().join("one.svg")).unwrap();
    assert!(one.starts_with(b"<svg") || one.starts_with(b"<?xml"));
    assert_eq!(one, fs::read(dir.path().join("two.svg")).unwrap());
}

#[test]
fn config_round_trips_through_toml() {
    let (c, stem) = resolve(&Overrides { preset: Some("fig9b".into()), ..Default::default() }).unwrap();
    assert_eq!(stem, "fig9b");
    let again = RunConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(again.params, c.params);
    let (_, stem) = resolve(&Overrides { preset: Some("fig2".into()), mode: Some("wigner".into()), ..Default::default() }).unwrap();
    assert_eq!(stem, "fig2_wigner");
}

#[test]
fn invalid_input_maps_to_usage_errors() {
    let bad_theta = resolve(&Overrides { preset: Some("fig2b".into()), theta: Some("3.2".into()), ..Default::default() }).unwrap_err();
    assert_eq!(exit_code(&bad_theta), 2);
    let unknown = RunConfig::from_toml("mode = \"steady\"\nwobble = 1\n").unwrap_err();
    assert!(matches!(unknown, Error::Config(_)));
    assert!(resolve(&Overrides { preset: Some("nope".into()), ..Default::default() }).is_err());
    let both = resolve(&Overrides { preset: Some("fig2".into()), config: Some(String::new()), ..Default::default() }).unwrap_err();
    assert_eq!(exit_code(&both), 2);
}
