use jcwave::liouville::{tau_grid, Correlator};
use jcwave::two_state::classical_bounds_report;
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams { theta: std::f64::consts::FRAC_PI_2, ..SystemParams::default() };
    let s = Correlator::new(&p)?.h(p.theta, &tau_grid(-2.0, 2.0, 0.01))?;
    let r = classical_bounds_report(&s)?;
    println!("h(0) = {:.4}, zero-delay bound violated: {}", r.h0, r.zero_delay_violated);
    for iv in r.delay_violations.iter().take(5) {
        println!("violation on [{:+.2}, {:+.2}], worst margin {:.3}", iv.start, iv.end, iv.worst_margin);
    }
    println!("negatives covered: {}", r.negatives_covered(&s));
    Ok(())
}
