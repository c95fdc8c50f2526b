//! Wave-particle correlation `h_θ(τ)` by quantum regression.

use std::f64::consts::FRAC_PI_2;

use jcwave::liouville::{tau_grid, Correlator};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams { r: 0.5, theta: FRAC_PI_2, ..SystemParams::default() };
    let c = Correlator::new(&p)?;
    println!("<a+a> = {:.4}, <A> = {:.4}", c.photon_number(), c.mean_quadrature(p.theta));
    let s = c.h(p.theta, &tau_grid(-0.1, 0.1, 0.005))?;
    for (t, h) in s.tau.iter().zip(&s.values) {
        println!("{t:+.3} {h:+.4}");
    }
    println!("time asymmetry {:.4}", s.time_asymmetry().unwrap_or(f64::NAN));
    Ok(())
}
