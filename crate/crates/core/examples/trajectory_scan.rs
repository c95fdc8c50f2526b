//! One conditioned trajectory while the drive detuning is swept.

use jcwave::cli::preset;
use jcwave::trajectories::{JumpKind, TrajectoryEngine};

fn main() -> jcwave::Result<()> {
    let cfg = preset("fig4")?;
    let engine = TrajectoryEngine::new(&cfg.params, cfg.protocol.unwrap(), 1e-4)?;
    let rec = engine.run_record(1, 0, 100)?;
    println!("{} samples, {} APD clicks, {} spontaneous", rec.t.len(), rec.count(JumpKind::Apd), rec.count(JumpKind::Spontaneous));
    for i in (0..rec.t.len()).step_by(rec.t.len() / 20) {
        println!("t = {:6.2}  dw/g = {:.3}  n = {:.3}  A = {:+.3}", rec.t[i], rec.delta_omega[i] / cfg.params.g, rec.n_cond[i], rec.a_cond[i]);
    }
    Ok(())
}
