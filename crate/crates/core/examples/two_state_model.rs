use jcwave::liouville::{tau_grid, Correlator};
use jcwave::two_state::{analytic_series, TwoStateParams};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams { gamma: 2e-3, theta: std::f64::consts::FRAC_PI_2, ..SystemParams::default() };
    let ts = TwoStateParams::from_system(&p)?;
    println!("Y = {:.2}, ringing frequency {:.3}", ts.y(), ts.ringing_frequency().unwrap_or(0.0));
    let tau = tau_grid(0.0, 1.0, 0.1);
    let ana = analytic_series(&tau, &ts);
    let num = Correlator::new(&p)?.h(p.theta, &tau)?;
    for ((t, a), b) in tau.iter().zip(&ana.values).zip(&num.values) {
        println!("{t:.1} analytic {a:+.4} full {b:+.4}");
    }
    Ok(())
}
