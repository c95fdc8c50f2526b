//! Averaged trajectories against master-equation propagation.

use jcwave::liouville::{build_liouvillian, DensityMatrix, Propagator};
use jcwave::trajectories::{ensemble_snapshots, Protocol, TrajectoryEngine};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams { theta: std::f64::consts::FRAC_PI_2, ..SystemParams::default() };
    let engine = TrajectoryEngine::new(&p, Protocol::Fixed { duration: 2.0 }, 1e-4)?;
    let ens = ensemble_snapshots(&engine, 9, 200, &[0.5, 1.0, 2.0], 50)?;
    let prop = Propagator::new(&build_liouvillian(&p))?;
    for (t, rho) in ens.times.iter().zip(&ens.states) {
        let d = rho.trace_distance(&prop.propagate(&DensityMatrix::ground(&p), *t)?)?;
        println!("t = {t}: trace distance {d:.4} over {} trajectories", ens.n_traj);
    }
    Ok(())
}
