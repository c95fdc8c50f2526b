use jcwave::hilbert::{resonance_detuning, Branch};
use jcwave::liouville::{tau_grid, Correlator};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let base = SystemParams::default();
    for (name, dw) in [("one-photon", base.g), ("two-photon", resonance_detuning(2, Branch::U, true, &base)?)] {
        let s = Correlator::new(&base.with_delta_omega(dw))?.g2(&tau_grid(0.0, 0.02, 0.005))?;
        println!("{name}: g2 = {:?}", s.values.iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>());
    }
    Ok(())
}
