//! Cavity Wigner function of the steady state.

use jcwave::liouville::{build_liouvillian, partial_trace_atom, steady_state, wigner, GridSpec};
use jcwave::SystemParams;

fn main() -> jcwave::Result<()> {
    let p = SystemParams::default();
    let rho = steady_state(&build_liouvillian(&p))?.rho;
    let w = wigner(&partial_trace_atom(&rho), GridSpec::square(2.0, 41))?;
    println!("W in [{:.4}, {:.4}]", w.min(), w.max());
    for iy in (0..41).step_by(5) {
        let row: String = (0..41).step_by(2).map(|ix| if w.at(ix, iy) > 0.5 * w.max() { '#' } else if w.at(ix, iy) > 0.05 { '+' } else { '.' }).collect();
        println!("{row}");
    }
    Ok(())
}
