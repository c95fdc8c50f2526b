//! Steady-state photon number across the vacuum Rabi doublet.

use jcwave::liouville::{locate_photon_peak, steady_photon_number};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams::default();
    for k in 0..=12 {
        let dw = p.g * (0.6 + 0.05 * k as f64);
        println!("dw/g = {:.2}  <a+a> = {:.4}", dw / p.g, steady_photon_number(&p.with_delta_omega(dw))?);
    }
    let (dw, n) = locate_photon_peak(&p, 0.66 * p.g, 0.76 * p.g, 21, 1e-6)?;
    println!("two-photon peak at dw/g = {:.5}, <a+a> = {n:.4}", dw / p.g);
    Ok(())
}
