use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use jcwave::cli::{self, Overrides};
use jcwave::Error;

/// Driven dissipative Jaynes-Cummings oscillator: steady states, h(τ) and
/// g²(τ), wave-particle correlator trajectories and Wigner functions.
#[derive(Parser, Debug)]
#[command(name = "jcwave", version)]
struct Args {
    /// steady | correlate | g2 | trajectory | ensemble | scan | wigner | bounds
    mode: Option<String>,
    /// TOML run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// fig2, fig2a, fig2b, fig3, fig3a, fig3b, fig4 … fig7, fig8a, fig8b, fig9a, fig9b, fig9c
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long)]
    n_traj: Option<usize>,
    /// csv | json
    #[arg(long)]
    format: Option<String>,
    /// Also write SVG plots
    #[arg(long)]
    plot: bool,
    /// LO phase, e.g. `pi/2`
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Drive detuning, e.g. `g`, `0.711g`, `-g` or κ units
    #[arg(long, allow_hyphen_values = true)]
    delta_omega: Option<String>,
    /// Render an existing CSV artifact to SVG next to it and exit
    #[arg(long)]
    render: Option<PathBuf>,
}

fn execute(args: Args) -> Result<serde_json::Value, Error> {
    if let Some(src) = args.render {
        let dst = src.with_extension("svg");
        cli::render_plot(&src, &dst)?;
        return Ok(serde_json::json!({ "artifacts": [dst] }));
    }
    let config = args
        .config
        .map(|p| std::fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))))
        .transpose()?;
    let o = Overrides {
        mode: args.mode,
        preset: args.preset,
        config,
        seed: args.seed,
        dt: args.dt,
        n_traj: args.n_traj,
        format: args.format,
        plot: args.plot,
        theta: args.theta,
        delta_omega: args.delta_omega,
    };
    let (config, stem) = cli::resolve(&o)?;
    let out = cli::run(&config, &args.out_dir, &stem)?;
    Ok(serde_json::json!({ "artifacts": out.artifacts, "summary": out.summary }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Args::parse()) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", cli::error_json(&e));
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
