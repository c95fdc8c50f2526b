//! Cavity Wigner function `W(x + iy)` normalized to `∫W dx dy = 1`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{atom_block, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::ZERO;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { x_min: -half_width, x_max: half_width, nx: n, y_min: -half_width, y_max: half_width, ny: n }
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn ys(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.ny)
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(Error::Unsupported("Wigner grid needs at least 2×2 points and positive extent".into()));
        }
        Ok(())
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `values[iy][ix]`
    pub values: Vec<Vec<f64>>,
    /// `Σ W Δx Δy` over the grid.
    pub captured_mass: f64,
}

impl WignerGrid {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy][ix]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Reduced cavity state `Σ_s ⟨s|ρ|s⟩` of a composite density matrix.
pub fn partial_trace_atom(rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    let n_max = d / 2 - 1;
    let m = rho.matrix();
    let out = &atom_block(m, n_max, 0, 0) + &atom_block(m, n_max, 1, 1);
    DensityMatrix::from_matrix(out)
}

/// Wigner function of a single-mode density matrix by the Laguerre
/// recursion over Fock coherences.
pub fn wigner(rho_cavity: &DensityMatrix, spec: GridSpec) -> Result<WignerGrid> {
    spec.validate()?;
    let rho = rho_cavity.matrix();
    let m = rho.nrows();
    let xs = spec.xs();
    let ys = spec.ys();
    let mut values = vec![vec![0.0; spec.nx]; spec.ny];
    let mut list = vec![ZERO; m];
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            values[iy][ix] = 2.0 * laguerre_sum(rho, C64::new(x, y), &mut list);
        }
    }
    let dx = (spec.x_max - spec.x_min) / (spec.nx - 1) as f64;
    let dy = (spec.y_max - spec.y_min) / (spec.ny - 1) as f64;
    let captured_mass = values.iter().flatten().sum::<f64>() * dx * dy;
    if (captured_mass - 1.0).abs() > 2e-3 {
        log::warn!("Wigner grid captures a mass of {captured_mass:.4}; the state may extend beyond the grid");
    }
    Ok(WignerGrid { spec, x: xs, y: ys, values, captured_mass })
}

fn laguerre_sum(rho: &Array2<C64>, alpha: C64, list: &mut [C64]) -> f64 {
    let m = rho.nrows();
    list[0] = C64::new((-2.0 * alpha.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut w = rho[[0, 0]].re * list[0].re;
    for n in 1..m {
        list[n] = list[n - 1] * alpha * 2.0 / (n as f64).sqrt();
        w += 2.0 * (rho[[0, n]] * list[n]).re;
    }
    for k in 1..m {
        let sk = (k as f64).sqrt();
        let mut temp = list[k];
        list[k] = (alpha.conj() * 2.0 * temp - list[k - 1] * sk) / sk;
        w += (rho[[k, k]] * list[k]).re;
        for n in k + 1..m {
            let next = (alpha * 2.0 * list[n - 1] - temp * sk) / (n as f64).sqrt();
            temp = list[n];
            list[n] = next;
            w += 2.0 * (rho[[k, n]] * list[n]).re;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use std::f64::consts::PI;

    fn fock(n: usize, dim: usize) -> DensityMatrix {
        let mut psi = Array1::zeros(dim);
        psi[n] = C64::new(1.0, 0.0);
        DensityMatrix::pure(&psi)
    }

    fn coherent(beta: C64, dim: usize) -> DensityMatrix {
        let mut psi = Array1::<C64>::zeros(dim);
        let mut c = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            psi[n] = c;
            c = c * beta / ((n + 1) as f64).sqrt();
        }
        DensityMatrix::pure(&psi)
    }

    #[test]
    fn vacuum_peak_value() {
        let w = wigner(&fock(0, 4), GridSpec::square(1.0, 3)).unwrap();
        assert!((w.at(1, 1) - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn single_photon_is_negative_at_origin() {
        let w = wigner(&fock(1, 4), GridSpec::square(1.0, 3)).unwrap();
        assert!((w.at(1, 1) + 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_is_displaced_gaussian() {
        let beta = C64::new(0.8, -0.5);
        let w = wigner(&coherent(beta, 20), GridSpec::square(3.0, 121)).unwrap();
        assert!((w.captured_mass - 1.0).abs() < 2e-3);
        let (mut best, mut at) = (f64::NEG_INFINITY, (0.0, 0.0));
        for (iy, row) in w.values.iter().enumerate() {
            for (ix, &v) in row.iter().enumerate() {
                if v > best {
                    best = v;
                    at = (w.x[ix], w.y[iy]);
                }
            }
        }
        assert!((at.0 - beta.re).abs() <= 0.05 + 1e-12 && (at.1 - beta.im).abs() <= 0.05 + 1e-12, "{at:?}");
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let d = 8;
        let psi = Array1::from_shape_fn(d, |k| C64::new(1.0 + k as f64, 0.5 * k as f64));
        let nrm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let rho = DensityMatrix::pure(&psi.mapv(|z| z / nrm));
        let red = partial_trace_atom(&rho);
        assert_eq!(red.dim(), 4);
        assert!((red.trace().re - 1.0).abs() < 1e-12);
        assert!(red.min_eigenvalue().unwrap() > -1e-12);
    }
}
