//! `h_θ(τ)` reconstructed from clicks and photocurrent, as an experiment would.

use std::f64::consts::FRAC_PI_2;

use jcwave::liouville::{tau_grid, Correlator};
use jcwave::trajectories::{ensemble_accumulate, signal_gain, AccumulatorSpec, Protocol, TrajectoryEngine};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams { theta: FRAC_PI_2, ..SystemParams::default() };
    let dt = 2e-4;
    let engine = TrajectoryEngine::new(&p, Protocol::Fixed { duration: 100.0 }, dt)?;
    let spec = AccumulatorSpec { window: 4.0, burn_in: 10.0, dt, theta: p.theta, n_steps: engine.n_steps() };
    let (acc, _) = ensemble_accumulate(&engine, spec, 3, 8, 1)?;
    let c = Correlator::new(&p)?;
    let est = acc.finish(c.mean_quadrature(p.theta), signal_gain(&p))?;
    println!("{} starts, noise floor {:.2}", est.n_starts, est.noise_floor);
    let tau = tau_grid(-2.0, 2.0, 0.5);
    let traj = est.series(&tau)?;
    let reg = c.h(p.theta, &tau)?;
    for ((t, a), b) in tau.iter().zip(&traj.values).zip(&reg.values) {
        println!("{t:+.1}  trajectories {a:+.3}  regression {b:+.3}");
    }
    Ok(())
}
