//! Run configuration, figure presets and artifact-producing dispatch for the
//! `jcwave` binary.

pub mod plot;

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::hilbert::{resonance_detuning, Branch, SystemParams};
use crate::io::{self, Envelope};
use crate::liouville::{self, tau_grid, CorrelationSeries, Correlator, GridSpec};
use crate::trajectories::{self, AccumulatorSpec, Protocol, TrajectoryEngine, DEFAULT_CHUNK};
use crate::two_state::{self, TwoStateParams};

pub use plot::render_plot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Steady,
    Correlate,
    G2,
    Trajectory,
    Ensemble,
    Scan,
    Wigner,
    Bounds,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Steady => "steady",
            Mode::Correlate => "correlate",
            Mode::G2 => "g2",
            Mode::Trajectory => "trajectory",
            Mode::Ensemble => "ensemble",
            Mode::Scan => "scan",
            Mode::Wigner => "wigner",
            Mode::Bounds => "bounds",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(json!(s)).map_err(|_| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Regression,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for TauSpec {
    fn default() -> Self {
        Self { start: -4.0, end: 4.0, step: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccumulateOptions {
    pub window: f64,
    pub burn_in: f64,
    /// Length of each trajectory.
    pub duration: f64,
}

impl Default for AccumulateOptions {
    fn default() -> Self {
        Self { window: 4.0, burn_in: 10.0, duration: 400.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerOptions {
    pub half_width: f64,
    pub points: usize,
    /// Conditioned state of trajectory 0 at this time; steady state if absent.
    #[serde(default)]
    pub time: Option<f64>,
}

impl Default for WignerOptions {
    fn default() -> Self {
        Self { half_width: 2.0, points: 81, time: None }
    }
}

fn default_dt() -> f64 {
    1e-4
}

fn default_n_traj() -> usize {
    64
}

fn default_decimation() -> usize {
    10
}

/// Everything a run needs. All rates and detunings in units of κ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub tau: TauSpec,
    #[serde(default)]
    pub method: CorrelationMethod,
    /// Trajectory protocol; a fixed run of 25 κ⁻¹ if absent.
    #[serde(default)]
    pub protocol: Option<Protocol>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    #[serde(default)]
    pub accumulate: AccumulateOptions,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub wigner: WignerOptions,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub plot: bool,
}

impl RunConfig {
    pub fn new(mode: Mode, params: SystemParams) -> Self {
        Self {
            mode,
            params,
            seed: 0,
            dt: default_dt(),
            tau: TauSpec::default(),
            method: CorrelationMethod::default(),
            protocol: None,
            n_traj: default_n_traj(),
            decimation: default_decimation(),
            accumulate: AccumulateOptions::default(),
            sweep: None,
            wigner: WignerOptions::default(),
            format: Format::default(),
            plot: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter { field: "dt", value: self.dt, reason: "must be positive" });
        }
        if !(self.tau.step > 0.0 && self.tau.end >= self.tau.start) {
            return Err(Error::Config("tau grid needs step > 0 and end ≥ start".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter { field: "n_traj", value: 0.0, reason: "must be at least 1" });
        }
        if self.decimation == 0 {
            return Err(Error::InvalidParameter { field: "decimation", value: 0.0, reason: "must be at least 1" });
        }
        Ok(())
    }

    fn protocol(&self) -> Protocol {
        self.protocol.unwrap_or(Protocol::Fixed { duration: 25.0 })
    }
}

pub const PRESETS: [&str; 15] = [
    "fig2", "fig2a", "fig2b", "fig3", "fig3a", "fig3b", "fig4", "fig5", "fig6", "fig7", "fig8a", "fig8b", "fig9a", "fig9b", "fig9c",
];

/// Figure parameter sets. `fig2`/`fig3` are the steady-state views of the
/// correlation presets.
pub fn preset(name: &str) -> Result<RunConfig> {
    let base = SystemParams::default();
    let g = base.g;
    let zero_size = 2e-3;
    let cfg = |mode, params: SystemParams| RunConfig::new(mode, params);
    let c = match name {
        "fig2" => cfg(Mode::Steady, base),
        "fig2a" => cfg(Mode::Correlate, base.with_theta(0.0)),
        "fig2b" => cfg(Mode::Correlate, base.with_theta(PI / 2.0)),
        "fig3" => cfg(Mode::Steady, SystemParams { gamma: zero_size, ..base }),
        "fig3a" => cfg(Mode::Correlate, SystemParams { gamma: zero_size, ..base }.with_theta(0.0)),
        "fig3b" => cfg(Mode::Correlate, SystemParams { gamma: zero_size, ..base }.with_theta(PI / 2.0)),
        "fig4" | "fig5" | "fig6" | "fig7" | "fig8a" | "fig8b" => {
            let (theta, duration) = match name {
                "fig4" => (0.0, 25.0),
                "fig5" => (PI / 4.0, 25.0),
                "fig6" => (PI / 2.0, 25.0),
                "fig7" => (3.0 * PI / 4.0, 25.0),
                "fig8a" => (PI / 4.0, 50.0),
                _ => (PI / 2.0, 50.0),
            };
            let mut c = cfg(Mode::Scan, SystemParams { r: 0.5, ..base }.with_theta(theta));
            c.protocol = Some(Protocol::Scan { from: 1.10 * g, to: 0.66 * g, duration });
            c
        }
        "fig9a" | "fig9b" | "fig9c" => {
            let ratio = match name {
                "fig9a" => 0.01,
                "fig9b" => 0.04,
                _ => 0.05,
            };
            let mut params = SystemParams { eps: ratio * g, gamma: zero_size, ..base };
            params.delta_omega = resonance_detuning(2, Branch::U, true, &params)?;
            cfg(Mode::Correlate, params.with_theta(3.0 * PI / 4.0))
        }
        _ => return Err(Error::Config(format!("unknown preset `{name}`; expected one of {}", PRESETS.join(", ")))),
    };
    Ok(c)
}

/// Angles such as `pi/2`, `3pi/4`, `0.5pi` or plain radians.
pub fn parse_angle(s: &str) -> Result<f64> {
    let t = s.trim().replace(' ', "").replace('π', "pi");
    let bad = || Error::Config(format!("cannot parse angle `{s}`"));
    if let Some(idx) = t.find("pi") {
        let (coef, rest) = (&t[..idx], &t[idx + 2..]);
        let coef = match coef.trim_end_matches('*') {
            "" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let denom = match rest {
            "" => 1.0,
            r => r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        return Ok(coef * PI / denom);
    }
    t.parse().map_err(|_| bad())
}

/// Detunings such as `g`, `-g`, `0.711g` or plain κ units.
pub fn parse_detuning(s: &str, g: f64) -> Result<f64> {
    let t = s.trim().replace(' ', "");
    let bad = || Error::Config(format!("cannot parse detuning `{s}`"));
    if let Some(c) = t.strip_suffix('g') {
        let c = match c.trim_end_matches('*') {
            "" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        return Ok(c * g);
    }
    t.parse().map_err(|_| bad())
}

/// Command-line layer applied on top of a preset or config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub preset: Option<String>,
    /// TOML text of a config file.
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub n_traj: Option<usize>,
    pub format: Option<String>,
    pub plot: bool,
    pub theta: Option<String>,
    pub delta_omega: Option<String>,
}

/// Builds the effective config (preset, then config file, then flags) and
/// the artifact stem.
pub fn resolve(o: &Overrides) -> Result<(RunConfig, String)> {
    let mode = o.mode.as_deref().map(str::parse::<Mode>).transpose()?;
    let mut default_mode = None;
    let mut c = match (&o.config, &o.preset) {
        (Some(_), Some(_)) => return Err(Error::Config("--config and --preset are mutually exclusive".into())),
        (Some(text), None) => {
            let c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
            c
        }
        (None, Some(name)) => {
            let c = preset(name)?;
            default_mode = Some(c.mode);
            c
        }
        (None, None) => RunConfig::new(mode.ok_or_else(|| Error::Config("a mode, --preset or --config is required".into()))?, SystemParams::default()),
    };
    if let Some(m) = mode {
        c.mode = m;
    }
    if let Some(seed) = o.seed {
        c.seed = seed;
    }
    if let Some(dt) = o.dt {
        c.dt = dt;
    }
    if let Some(n) = o.n_traj {
        c.n_traj = n;
    }
    if let Some(f) = &o.format {
        c.format = serde_json::from_value(json!(f)).map_err(|_| Error::Config(format!("unknown format `{f}`; expected csv or json")))?;
    }
    c.plot |= o.plot;
    if let Some(t) = &o.theta {
        c.params.theta = parse_angle(t)?;
    }
    if let Some(d) = &o.delta_omega {
        c.params.delta_omega = parse_detuning(d, c.params.g)?;
    }
    c.validate()?;
    let stem = match &o.preset {
        Some(name) if default_mode == Some(c.mode) => name.clone(),
        Some(name) => format!("{name}_{}", c.mode.as_str()),
        None => c.mode.as_str().to_string(),
    };
    Ok((c, stem))
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Unsupported(_) | Error::Artifact(_) | Error::ExcitationOutOfRange { .. } => 2,
        Error::ZeroStarts | Error::EmptySeries => 4,
        _ => 3,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::ExcitationOutOfRange { .. } => "excitation_out_of_range",
        Error::Unsupported(_) => "unsupported",
        Error::NormalizationUndefined { .. } => "normalization_undefined",
        Error::StepTooLarge(_) => "step_too_large",
        Error::IntegrationFault { .. } => "integration_fault",
        Error::Linalg(_) => "linalg",
        Error::ZeroStarts => "zero_starts",
        Error::WindowClipped { .. } => "window_clipped",
        Error::EmptySeries => "empty_series",
        Error::Config(_) => "config",
        Error::Artifact(_) => "artifact",
        Error::Io(_) => "io",
    }
}

/// Machine-readable failure report.
pub fn error_json(e: &Error) -> serde_json::Value {
    let mut v = json!({ "error": error_kind(e), "message": e.to_string(), "exit_code": exit_code(e) });
    if let Error::NormalizationUndefined { tau, numerator, .. } = e {
        v["tau"] = json!(tau);
        v["numerator"] = json!(numerator);
    }
    v
}

/// Files written by a run and a short JSON summary.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub artifacts: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

struct Sink<'a> {
    dir: &'a Path,
    stem: &'a str,
    config: &'a RunConfig,
    written: Vec<PathBuf>,
    plottable: Vec<PathBuf>,
}

impl Sink<'_> {
    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}{suffix}", self.stem))
    }

    fn file(&mut self, suffix: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let p = self.path(suffix);
        let f = BufWriter::new(File::create(&p)?);
        self.written.push(p.clone());
        Ok((p, f))
    }

    fn envelope<T: Serialize>(&self, kind: &str, data: T) -> Envelope<T> {
        let mut e = Envelope::new(kind, data);
        e.params = Some(self.config.params);
        e.config = serde_json::to_value(self.config).ok();
        if matches!(self.config.mode, Mode::Trajectory | Mode::Ensemble | Mode::Scan) || self.config.wigner.time.is_some() {
            e.seed = Some(self.config.seed);
            e.dt = Some(self.config.dt);
        }
        e
    }

    fn json<T: Serialize>(&mut self, suffix: &str, kind: &str, method: Option<&str>, data: T) -> Result<()> {
        let mut e = self.envelope(kind, data);
        e.method = method.map(String::from);
        let text = e.to_json()?;
        let p = self.path(suffix);
        fs::write(&p, text + "\n")?;
        self.written.push(p);
        Ok(())
    }

    fn series(&mut self, suffix: &str, s: &CorrelationSeries, extra: serde_json::Value) -> Result<()> {
        let method = serde_json::to_value(s.method)?.as_str().map(String::from);
        match self.config.format {
            Format::Csv => {
                let (p, f) = self.file(&format!("{suffix}.csv"))?;
                io::write_correlation_csv(f, s)?;
                self.plottable.push(p);
                self.json(&format!("{suffix}.json"), "correlation", method.as_deref(), extra)
            }
            Format::Json => self.json(&format!("{suffix}.json"), "correlation", method.as_deref(), json!({ "series": s, "summary": extra })),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Artifact(e.to_string())
    }
}

/// Executes `config`, writing artifacts named `<stem>*` into `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path, stem: &str) -> Result<RunOutput> {
    config.validate()?;
    if let Some(w) = config.params.strong_coupling_warning() {
        log::warn!("{w}");
    }
    fs::create_dir_all(out_dir)?;
    let mut sink = Sink { dir: out_dir, stem, config, written: Vec::new(), plottable: Vec::new() };
    let p = &config.params;
    let summary = match config.mode {
        Mode::Steady => run_steady(&mut sink)?,
        Mode::Correlate => {
            let tau = tau_grid(config.tau.start, config.tau.end, config.tau.step);
            let s = match config.method {
                CorrelationMethod::Regression => Correlator::new(p)?.h(p.theta, &tau)?,
                CorrelationMethod::Analytic => {
                    let mut s = two_state::analytic_series(&tau, &TwoStateParams::from_system(p)?);
                    s.theta = Some(p.theta);
                    s
                }
            };
            let summary = json!({
                "h0": s.nearest(0.0).map(|x| x.1),
                "time_asymmetry": s.time_asymmetry(),
                "points": s.len(),
            });
            sink.series("", &s, summary.clone())?;
            summary
        }
        Mode::G2 => {
            let tau: Vec<f64> = tau_grid(config.tau.start.max(0.0), config.tau.end, config.tau.step);
            let s = Correlator::new(p)?.g2(&tau)?;
            let summary = json!({ "g2_0": s.nearest(0.0).map(|x| x.1), "points": s.len() });
            sink.series("", &s, summary.clone())?;
            summary
        }
        Mode::Trajectory | Mode::Scan => run_trajectory_mode(&mut sink)?,
        Mode::Ensemble => run_ensemble(&mut sink)?,
        Mode::Wigner => run_wigner(&mut sink)?,
        Mode::Bounds => {
            let tau = tau_grid(config.tau.start, config.tau.end, config.tau.step);
            let s = Correlator::new(p)?.h(p.theta, &tau)?;
            let report = two_state::classical_bounds_report(&s)?;
            let summary = json!({
                "zero_delay_violated": report.zero_delay_violated,
                "delay_violated": report.delay_violated(),
                "negatives_covered": report.negatives_covered(&s),
                "report": report,
            });
            sink.series("_h", &s, json!({ "points": s.len() }))?;
            sink.json("_bounds.json", "bounds", Some("regression"), &summary)?;
            summary
        }
    };
    if config.plot {
        for src in sink.plottable.clone() {
            let svg = src.with_extension("svg");
            render_plot(&src, &svg)?;
            sink.written.push(svg);
        }
    }
    Ok(RunOutput { artifacts: sink.written, summary })
}

fn run_steady(sink: &mut Sink<'_>) -> Result<serde_json::Value> {
    let config = sink.config;
    let p = &config.params;
    let c = Correlator::new(p)?;
    let a = c.mean_field();
    let mut summary = json!({
        "photon_number": c.photon_number(),
        "mean_field": [a.re, a.im],
        "quadrature": c.mean_quadrature(p.theta),
        "atom_excitation": c.atom_excitation(),
        "unique": c.steady().unique,
        "residual": c.steady().residual,
    });
    if let Some(sw) = config.sweep {
        if sw.points < 2 {
            return Err(Error::InvalidParameter { field: "sweep.points", value: sw.points as f64, reason: "need at least 2" });
        }
        let det: Vec<f64> = (0..sw.points).map(|k| sw.from + (sw.to - sw.from) * k as f64 / (sw.points - 1) as f64).collect();
        let n = det.iter().map(|&d| liouville::steady_photon_number(&p.with_delta_omega(d))).collect::<Result<Vec<_>>>()?;
        let (lo, hi) = if sw.from < sw.to { (sw.from, sw.to) } else { (sw.to, sw.from) };
        let (peak, peak_n) = liouville::locate_photon_peak(p, lo, hi, sw.points, 1e-6)?;
        summary["sweep_peak"] = json!({ "delta_omega": peak, "delta_omega_over_g": peak / p.g, "photon_number": peak_n });
        let (path, f) = sink.file("_sweep.csv")?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["delta_omega", "n_ss"]).map_err(|e| Error::Artifact(e.to_string()))?;
        for (d, n) in det.iter().zip(&n) {
            w.serialize((d, n)).map_err(|e| Error::Artifact(e.to_string()))?;
        }
        w.flush()?;
        sink.plottable.push(path);
    }
    sink.json(".json", "steady", Some("steady_state"), &summary)?;
    Ok(summary)
}

fn run_trajectory_mode(sink: &mut Sink<'_>) -> Result<serde_json::Value> {
    let config = sink.config;
    let protocol = match (config.mode, config.protocol()) {
        (Mode::Scan, p @ Protocol::Scan { .. }) => p,
        (Mode::Scan, _) => return Err(Error::Config("scan mode needs a `protocol` of kind \"scan\"".into())),
        (_, p) => p,
    };
    let engine = TrajectoryEngine::new(&config.params, protocol, config.dt)?;
    let rec = engine.run_record(config.seed, 0, config.decimation)?;
    let summary = json!({
        "samples": rec.t.len(),
        "apd": rec.count(trajectories::JumpKind::Apd),
        "spontaneous": rec.count(trajectories::JumpKind::Spontaneous),
        "protocol": protocol,
    });
    match config.format {
        Format::Csv => {
            let (p, f) = sink.file(".csv")?;
            io::write_trajectory_csv(f, &rec)?;
            sink.plottable.push(p);
            let (_, f) = sink.file("_events.csv")?;
            io::write_events_csv(f, &rec.events)?;
            let (_, f) = sink.file(".bin")?;
            io::write_trajectory_binary(f, &rec)?;
            sink.json(".json", "trajectory", Some("trajectory"), &summary)?;
        }
        Format::Json => sink.json(".json", "trajectory", Some("trajectory"), json!({ "record": rec, "summary": summary }))?,
    }
    Ok(summary)
}

fn run_ensemble(sink: &mut Sink<'_>) -> Result<serde_json::Value> {
    let config = sink.config;
    let p = &config.params;
    let acc_opts = config.accumulate;
    let engine = TrajectoryEngine::new(p, Protocol::Fixed { duration: acc_opts.duration }, config.dt)?;
    let spec = AccumulatorSpec { window: acc_opts.window, burn_in: acc_opts.burn_in, dt: config.dt, theta: p.theta, n_steps: engine.n_steps() };
    let (acc, _) = trajectories::ensemble_accumulate(&engine, spec, config.seed, config.n_traj, DEFAULT_CHUNK)?;
    if acc.n_starts() == 0 {
        return Err(Error::ZeroStarts);
    }
    let c = Correlator::new(p)?;
    let est = acc.finish(c.mean_quadrature(p.theta), trajectories::signal_gain(p))?;
    let lag_step = config.tau.step.max(config.dt);
    let tau = tau_grid(-acc_opts.window, acc_opts.window, lag_step);
    let s = est.series(&tau)?;
    let reg = c.h(p.theta, &s.tau)?;
    let summary = json!({
        "n_starts": est.n_starts,
        "noise_floor": est.noise_floor,
        "max_abs_diff_regression": s.max_abs_diff(&reg.values),
        "n_traj": config.n_traj,
    });
    sink.series("", &s, summary.clone())?;
    sink.series("_regression", &reg, json!({ "points": reg.len() }))?;
    Ok(summary)
}

fn run_wigner(sink: &mut Sink<'_>) -> Result<serde_json::Value> {
    let config = sink.config;
    let p = &config.params;
    let rho = match config.wigner.time {
        None => liouville::steady_state(&liouville::build_liouvillian(p))?.rho,
        Some(t) => {
            let protocol = config.protocol();
            let engine = TrajectoryEngine::new(p, protocol, config.dt)?;
            let ens = trajectories::ensemble_snapshots(&engine, config.seed, 1, &[t], 1)?;
            ens.states.into_iter().next().ok_or(Error::EmptySeries)?
        }
    };
    let spec = GridSpec::square(config.wigner.half_width, config.wigner.points);
    let grid = liouville::wigner(&liouville::partial_trace_atom(&rho), spec)?;
    let summary = json!({ "min": grid.min(), "max": grid.max(), "captured_mass": grid.captured_mass });
    match config.format {
        Format::Csv => {
            let (path, f) = sink.file(".csv")?;
            io::write_wigner_csv(f, &grid)?;
            sink.plottable.push(path);
            sink.json(".json", "wigner", Some("wigner"), &summary)?;
        }
        Format::Json => sink.json(".json", "wigner", Some("wigner"), json!({ "grid": grid, "summary": summary }))?,
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_and_detunings_parse() {
        assert!((parse_angle("pi/2").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((parse_angle("3pi/4").unwrap() - 0.75 * PI).abs() < 1e-15);
        assert!((parse_angle("0.3").unwrap() - 0.3).abs() < 1e-15);
        assert!(parse_angle("pie").is_err());
        assert_eq!(parse_detuning("g", 200.0).unwrap(), 200.0);
        assert_eq!(parse_detuning("-g", 200.0).unwrap(), -200.0);
        assert!((parse_detuning("0.711g", 200.0).unwrap() - 142.2).abs() < 1e-12);
        assert_eq!(parse_detuning("150", 200.0).unwrap(), 150.0);
    }

    #[test]
    fn presets_follow_the_captions() {
        let c = preset("fig9a").unwrap();
        assert!((c.params.eps / c.params.g - 0.01).abs() < 1e-15);
        let c = preset("fig4").unwrap();
        match c.protocol.unwrap() {
            Protocol::Scan { from, to, duration } => {
                assert!((from / c.params.g - 1.10).abs() < 1e-12 && (to / c.params.g - 0.66).abs() < 1e-12);
                assert_eq!(duration, 25.0);
            }
            p => panic!("{p:?}"),
        }
        assert_eq!(c.params.r, 0.5);
        let c = preset("fig8b").unwrap();
        assert_eq!(c.protocol.unwrap().duration(), 50.0);
        assert!((c.params.theta - PI / 2.0).abs() < 1e-15);
        let c = preset("fig3b").unwrap();
        assert_eq!(c.params.gamma, 2e-3);
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(matches!(preset("fig10"), Err(Error::Config(_))));
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_theta() {
        let ok = RunConfig::from_toml("mode = \"steady\"\n[params]\ng = 200.0\n").unwrap();
        assert_eq!(ok.params.g, 200.0);
        assert!(matches!(RunConfig::from_toml("mode = \"steady\"\ncolour = 1\n"), Err(Error::Config(_))));
        let e = RunConfig::from_toml("mode = \"steady\"\n[params]\ntheta = 3.2\n").unwrap_err();
        assert_eq!(exit_code(&e), 2);
        let round = RunConfig::from_toml(&preset("fig4").unwrap().to_toml().unwrap()).unwrap();
        assert_eq!(round, preset("fig4").unwrap());
    }

    #[test]
    fn flags_override_the_preset() {
        let o = Overrides {
            mode: Some("correlate".into()),
            preset: Some("fig3b".into()),
            theta: Some("pi/2".into()),
            delta_omega: Some("g".into()),
            seed: Some(9),
            ..Overrides::default()
        };
        let (c, stem) = resolve(&o).unwrap();
        assert_eq!(stem, "fig3b");
        let (_, stem) = resolve(&Overrides { mode: Some("wigner".into()), ..o.clone() }).unwrap();
        assert_eq!(stem, "fig3b_wigner");
        assert_eq!((c.mode, c.seed, c.params.delta_omega, c.params.gamma), (Mode::Correlate, 9, 200.0, 2e-3));
        let bad = Overrides { mode: Some("steady".into()), theta: Some("3.2".into()), ..Overrides::default() };
        assert_eq!(exit_code(&resolve(&bad).unwrap_err()), 2);
        assert!(resolve(&Overrides::default()).is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::ZeroStarts), 4);
        assert_eq!(exit_code(&Error::Linalg("x".into())), 3);
        assert_eq!(error_json(&Error::Config("bad".into()))["exit_code"], 2);
    }
}
