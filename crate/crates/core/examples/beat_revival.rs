use jcwave::hilbert::{resonance_detuning, Branch};
use jcwave::trajectories::{beat_revival_detector, compare_gains, isolated_events, BeatSeries, BeatSpec, Protocol, TrajectoryEngine};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let base = SystemParams::default();
    let p = base.with_delta_omega(resonance_detuning(2, Branch::U, true, &base)?);
    let rec = TrajectoryEngine::new(&p, Protocol::Fixed { duration: 40.0 }, 1e-4)?.run_record(5, 0, 2)?;
    let spec = BeatSpec { window: 0.1, band_lo: 1.5 * p.g, band_hi: 2.5 * p.g, series: BeatSeries::Quadrature };
    let reports = isolated_events(&rec, spec.window, 1.0)
        .iter()
        .map(|e| beat_revival_detector(&rec, e, &spec))
        .collect::<jcwave::Result<Vec<_>>>()?;
    let cmp = compare_gains(&reports)?;
    println!("{cmp:#?}");
    Ok(())
}
