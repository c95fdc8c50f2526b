//! Truncated atom ⊗ field Hilbert space, bare operators, the driven
//! Jaynes–Cummings Hamiltonian and the dressed-state ladder.
//!
//! Basis ordering is atom-major: index `atom * (n_max + 1) + n` with the
//! lower atomic state `|−⟩` (atom = 0) before `|+⟩` (atom = 1) and photon
//! numbers ascending. All rates are in units of κ, times in units of κ⁻¹
//! and ħ = 1. Dynamics are written in the frame rotating at the drive
//! frequency.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};

/// Physical rates and drive settings of the driven, damped JC oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Dipole coupling strength.
    pub g: f64,
    /// Cavity field decay rate; the photon loss rate is `2κ`.
    pub kappa: f64,
    /// Spontaneous emission rate of the two-state atom.
    pub gamma: f64,
    /// Coherent drive amplitude.
    pub eps: f64,
    /// Drive–cavity detuning `ω_d − ω_0`.
    pub delta_omega: f64,
    /// Local-oscillator phase, `0 ≤ θ < π`.
    pub theta: f64,
    /// Fraction of the output flux sent to the APD.
    pub r: f64,
    /// Highest retained Fock state.
    pub n_max: usize,
    /// Homodyne detection bandwidth `τ_d⁻¹`.
    pub tau_d_inv: f64,
}

impl Default for SystemParams {
    /// The strong-coupling operating point used throughout: g/κ = 200,
    /// ε/g = 0.05, γ = 2κ, tuned to the upper vacuum Rabi resonance.
    fn default() -> Self {
        Self {
            g: 200.0,
            kappa: 1.0,
            gamma: 2.0,
            eps: 10.0,
            delta_omega: 200.0,
            theta: 0.0,
            r: 0.5,
            n_max: 12,
            tau_d_inv: 1000.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg: [(&'static str, f64); 5] = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eps", self.eps),
            ("tau_d_inv", self.tau_d_inv),
        ];
        for (field, value) in nonneg {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    field,
                    value,
                    reason: "must be finite and non-negative",
                });
            }
        }
        if !self.delta_omega.is_finite() {
            return Err(Error::InvalidParameter {
                field: "delta_omega",
                value: self.delta_omega,
                reason: "must be finite",
            });
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidParameter {
                field: "r",
                value: self.r,
                reason: "must lie in [0, 1]",
            });
        }
        if !(self.theta >= 0.0 && self.theta < PI) {
            return Err(Error::InvalidParameter {
                field: "theta",
                value: self.theta,
                reason: "must lie in [0, π)",
            });
        }
        if self.n_max < 1 {
            return Err(Error::InvalidParameter {
                field: "n_max",
                value: self.n_max as f64,
                reason: "must be at least 1",
            });
        }
        Ok(())
    }

    /// Warning text when the strong-coupling condition g ≫ (2κ, γ) is not
    /// met by at least a factor of ten.
    pub fn strong_coupling_warning(&self) -> Option<String> {
        let margin = 10.0;
        if self.g < margin * 2.0 * self.kappa || self.g < margin * self.gamma {
            Some(format!(
                "g = {} is not ≫ (2κ = {}, γ = {})",
                self.g,
                2.0 * self.kappa,
                self.gamma
            ))
        } else {
            None
        }
    }

    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn with_delta_omega(&self, delta_omega: f64) -> Self {
        Self { delta_omega, ..*self }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }
}

/// Composite basis index for `|atom⟩|n⟩`, atom 0 = `|−⟩`, atom 1 = `|+⟩`.
#[inline]
pub fn basis_index(n_max: usize, atom: usize, n: usize) -> usize {
    atom * (n_max + 1) + n
}

/// Dense operator on the truncated atom ⊗ field space.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    n_max: usize,
    m: Array2<C64>,
}

impl QOperator {
    pub fn from_matrix(n_max: usize, m: Array2<C64>) -> Self {
        assert_eq!(m.dim(), (2 * (n_max + 1), 2 * (n_max + 1)), "operator shape");
        Self { n_max, m }
    }

    pub fn zeros(n_max: usize) -> Self {
        let d = 2 * (n_max + 1);
        Self { n_max, m: Array2::zeros((d, d)) }
    }

    pub fn identity(n_max: usize) -> Self {
        Self { n_max, m: linalg::identity(2 * (n_max + 1)) }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.m
    }

    pub fn dagger(&self) -> Self {
        Self { n_max: self.n_max, m: linalg::dagger(&self.m.view()) }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { n_max: self.n_max, m: self.m.mapv(|x| x * z) }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.m.view()) <= tol
    }

    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        self.m.dot(psi)
    }

    /// `⟨ψ|O|ψ⟩` for a normalized `ψ`.
    pub fn expectation(&self, psi: &Array1<C64>) -> C64 {
        psi.iter().zip(self.m.dot(psi).iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }
}

impl Add for &QOperator {
    type Output = QOperator;
    fn add(self, rhs: &QOperator) -> QOperator {
        QOperator { n_max: self.n_max, m: &self.m + &rhs.m }
    }
}

impl Sub for &QOperator {
    type Output = QOperator;
    fn sub(self, rhs: &QOperator) -> QOperator {
        QOperator { n_max: self.n_max, m: &self.m - &rhs.m }
    }
}

impl Mul for &QOperator {
    type Output = QOperator;
    fn mul(self, rhs: &QOperator) -> QOperator {
        QOperator { n_max: self.n_max, m: self.m.dot(&rhs.m) }
    }
}

/// Bare ladder operators of the field and the two-state atom.
#[derive(Clone, Debug)]
pub struct Operators {
    pub a: QOperator,
    pub a_dagger: QOperator,
    pub sigma_minus: QOperator,
    pub sigma_plus: QOperator,
}

impl Operators {
    pub fn n_max(&self) -> usize {
        self.a.n_max()
    }

    /// `a†a`
    pub fn photon_number(&self) -> QOperator {
        &self.a_dagger * &self.a
    }

    /// `σ₊σ₋`
    pub fn atom_excitation(&self) -> QOperator {
        &self.sigma_plus * &self.sigma_minus
    }

    /// `σ₊σ₋ + a†a`, the operator multiplying `−Δω` in the rotating frame.
    pub fn excitation_number(&self) -> QOperator {
        &self.photon_number() + &self.atom_excitation()
    }
}

pub fn build_operators(params: &SystemParams) -> Operators {
    let n_max = params.n_max;
    let d = params.dim();
    let mut a = Array2::<C64>::zeros((d, d));
    let mut sm = Array2::<C64>::zeros((d, d));
    for atom in 0..2 {
        for n in 1..=n_max {
            a[[basis_index(n_max, atom, n - 1), basis_index(n_max, atom, n)]] =
                C64::new((n as f64).sqrt(), 0.0);
        }
    }
    for n in 0..=n_max {
        sm[[basis_index(n_max, 0, n), basis_index(n_max, 1, n)]] = ONE;
    }
    let a = QOperator::from_matrix(n_max, a);
    let sigma_minus = QOperator::from_matrix(n_max, sm);
    Operators {
        a_dagger: a.dagger(),
        sigma_plus: sigma_minus.dagger(),
        a,
        sigma_minus,
    }
}

/// `H = −Δω(σ₊σ₋ + a†a) + g(aσ₊ + a†σ₋) + ε(a + a†)`.
pub fn build_jc_hamiltonian(params: &SystemParams) -> QOperator {
    let ops = build_operators(params);
    jc_hamiltonian_from(&ops, params)
}

pub(crate) fn jc_hamiltonian_from(ops: &Operators, params: &SystemParams) -> QOperator {
    let detuning = ops.excitation_number().scale(C64::new(-params.delta_omega, 0.0));
    let coupling = (&(&ops.a * &ops.sigma_plus) + &(&ops.a_dagger * &ops.sigma_minus))
        .scale(C64::new(params.g, 0.0));
    let drive = (&ops.a + &ops.a_dagger).scale(C64::new(params.eps, 0.0));
    &(&detuning + &coupling) + &drive
}

/// `A_θ = (a e^{−iθ} + a† e^{iθ}) / 2`.
pub fn quadrature_operator(theta: f64, params: &SystemParams) -> QOperator {
    let ops = build_operators(params);
    quadrature_from(&ops, theta)
}

pub(crate) fn quadrature_from(ops: &Operators, theta: f64) -> QOperator {
    let ph = C64::from_polar(0.5, -theta);
    &ops.a.scale(ph) + &ops.a_dagger.scale(ph.conj())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `|n,L⟩`, energy `nω − √n g`.
    L,
    /// `|n,U⟩`, energy `nω + √n g`.
    U,
}

impl Branch {
    /// +1 for U, −1 for L.
    pub fn sign(self) -> f64 {
        match self {
            Branch::U => 1.0,
            Branch::L => -1.0,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::L => f.write_str("L"),
            Branch::U => f.write_str("U"),
        }
    }
}

/// An excited eigenstate of the undriven JC Hamiltonian.
#[derive(Clone, Debug)]
pub struct DressedState {
    pub n: usize,
    pub branch: Branch,
    pub vector: Array1<C64>,
    /// Eigenvalue of the undriven Hamiltonian in the frame rotating at the
    /// drive: `−nΔω ± √n g`.
    pub energy: f64,
}

impl DressedState {
    /// Lab-frame energy `nω ± √n g` for a mode frequency `omega`.
    pub fn lab_energy(&self, omega: f64, g: f64) -> f64 {
        self.n as f64 * omega + self.branch.sign() * (self.n as f64).sqrt() * g
    }
}

/// `|G⟩ = |−⟩|0⟩`.
pub fn ground_state(params: &SystemParams) -> Array1<C64> {
    let mut v = Array1::zeros(params.dim());
    v[0] = ONE;
    v
}

pub fn dressed_state(n: usize, branch: Branch, params: &SystemParams) -> Result<DressedState> {
    if n < 1 || n > params.n_max {
        return Err(Error::ExcitationOutOfRange { n, n_max: params.n_max });
    }
    let mut v = Array1::from_elem(params.dim(), ZERO);
    let h = 1.0 / SQRT_2;
    v[basis_index(params.n_max, 1, n - 1)] = C64::new(h, 0.0);
    v[basis_index(params.n_max, 0, n)] = C64::new(branch.sign() * h, 0.0);
    let nf = n as f64;
    Ok(DressedState {
        n,
        branch,
        vector: v,
        energy: -nf * params.delta_omega + branch.sign() * nf.sqrt() * params.g,
    })
}

/// Drive detuning exciting the n-photon resonance on the given branch:
/// `±g/√n`, or for `n = 2` with `corrected` the drive-dressed value
/// `±(g/√2)[1 + 2(ε/g)²]`.
pub fn resonance_detuning(n: usize, branch: Branch, corrected: bool, params: &SystemParams) -> Result<f64> {
    if n < 1 {
        return Err(Error::ExcitationOutOfRange { n, n_max: params.n_max });
    }
    let s = branch.sign();
    if !corrected {
        return Ok(s * params.g / (n as f64).sqrt());
    }
    if n != 2 {
        return Err(Error::Unsupported(format!(
            "drive-dressing correction is only available for the two-photon resonance (n = {n})"
        )));
    }
    if params.g == 0.0 {
        return Err(Error::Unsupported("corrected resonance needs g > 0".into()));
    }
    let ratio = params.eps / params.g;
    Ok(s * params.g / SQRT_2 * (1.0 + 2.0 * ratio * ratio))
}

/// Detuning of the next rung when the n-photon resonance is driven:
/// `E_{n+1} − E_n − ω_d = ∓[(n+1)/√n − √(n+1)] g`.
pub fn next_step_detuning(n: usize, branch: Branch, params: &SystemParams) -> Result<f64> {
    if n < 1 {
        return Err(Error::ExcitationOutOfRange { n, n_max: params.n_max });
    }
    let nf = n as f64;
    Ok(-branch.sign() * ((nf + 1.0) / nf.sqrt() - (nf + 1.0).sqrt()) * params.g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::EigValsh;
    use ndarray_linalg::UPLO;

    fn p(n_max: usize) -> SystemParams {
        SystemParams { n_max, ..SystemParams::default() }
    }

    #[test]
    fn lowering_operator_on_single_photon() {
        let params = p(1);
        let ops = build_operators(&params);
        let mut psi = Array1::zeros(4);
        psi[basis_index(1, 0, 1)] = ONE;
        let out = ops.a.apply(&psi);
        assert_eq!(out[basis_index(1, 0, 0)], ONE);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn sigma_minus_lowers_the_atom() {
        let params = p(3);
        let ops = build_operators(&params);
        let mut psi = Array1::zeros(params.dim());
        psi[basis_index(3, 1, 2)] = ONE;
        let out = ops.sigma_minus.apply(&psi);
        assert_eq!(out[basis_index(3, 0, 2)], ONE);
        assert_eq!(ops.sigma_minus.apply(&out).iter().map(|z| z.norm()).sum::<f64>(), 0.0);
    }

    #[test]
    fn canonical_commutator_holds_below_truncation() {
        let params = p(12);
        let ops = build_operators(&params);
        let c = ops.a.commutator(&ops.a_dagger);
        for atom in 0..2 {
            for n in 0..=12 {
                let i = basis_index(12, atom, n);
                let expected = if n < 12 { 1.0 } else { -12.0 };
                assert!((c.matrix()[[i, i]] - C64::new(expected, 0.0)).norm() < 1e-12, "n = {n}");
            }
        }
    }

    #[test]
    fn dimension_at_twelve_photons() {
        assert_eq!(p(12).dim(), 26);
        assert_eq!(build_jc_hamiltonian(&p(12)).dim(), 26);
    }

    #[test]
    fn undriven_spectrum_is_the_sqrt_n_ladder() {
        let params = SystemParams { eps: 0.0, delta_omega: 0.0, n_max: 6, ..SystemParams::default() };
        let h = build_jc_hamiltonian(&params);
        let mut vals = h.matrix().eigvalsh(UPLO::Lower).unwrap().to_vec();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for n in 1..6 {
            let target = params.g * (n as f64).sqrt();
            assert!(vals.iter().any(|v| (v - target).abs() < 1e-9));
            assert!(vals.iter().any(|v| (v + target).abs() < 1e-9));
        }
        let gs = ground_state(&params);
        assert!(h.expectation(&gs).norm() < 1e-14);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_deterministic() {
        let params = SystemParams::default();
        let h1 = build_jc_hamiltonian(&params);
        let h2 = build_jc_hamiltonian(&params);
        assert!(h1.is_hermitian(1e-12));
        assert_eq!(h1, h2);
    }

    #[test]
    fn dressed_state_coefficients_and_splittings() {
        let params = p(4);
        let l1 = dressed_state(1, Branch::L, &params).unwrap();
        assert!((l1.vector[basis_index(4, 1, 0)].re - 1.0 / SQRT_2).abs() < 1e-15);
        assert!((l1.vector[basis_index(4, 0, 1)].re + 1.0 / SQRT_2).abs() < 1e-15);
        let u1 = dressed_state(1, Branch::U, &params).unwrap();
        let u2 = dressed_state(2, Branch::U, &params).unwrap();
        let omega = 1.0e4;
        let g = params.g;
        assert!((u1.lab_energy(omega, g) - l1.lab_energy(omega, g) - 2.0 * g).abs() < 1e-9);
        let step = u2.lab_energy(omega, g) - u1.lab_energy(omega, g) - omega;
        assert!((step - (SQRT_2 - 1.0) * g).abs() < 1e-9);
        assert!(matches!(dressed_state(5, Branch::U, &params), Err(Error::ExcitationOutOfRange { .. })));
        assert!(dressed_state(0, Branch::U, &params).is_err());
    }

    #[test]
    fn quadrature_is_hermitian_and_reduces_to_x() {
        let params = p(5);
        let ops = build_operators(&params);
        assert!(quadrature_operator(PI / 4.0, &params).is_hermitian(1e-12));
        let x = (&ops.a + &ops.a_dagger).scale(C64::new(0.5, 0.0));
        assert_eq!(quadrature_operator(0.0, &params), x);
    }

    #[test]
    fn resonance_helpers() {
        let params = SystemParams::default();
        assert_eq!(resonance_detuning(1, Branch::U, false, &params).unwrap(), params.g);
        assert_eq!(resonance_detuning(1, Branch::L, false, &params).unwrap(), -params.g);
        assert!((resonance_detuning(4, Branch::U, false, &params).unwrap() - params.g / 2.0).abs() < 1e-12);
        let c = resonance_detuning(2, Branch::U, true, &params).unwrap() / params.g;
        assert!((c - 1.005 / SQRT_2).abs() < 1e-12);
        assert!((c - 0.71064).abs() < 5e-6);
        assert!(matches!(resonance_detuning(3, Branch::U, true, &params), Err(Error::Unsupported(_))));
        let s1 = next_step_detuning(1, Branch::U, &params).unwrap();
        assert!((s1.abs() - (2.0 - SQRT_2) * params.g).abs() < 1e-9);
        assert_eq!(next_step_detuning(1, Branch::L, &params).unwrap(), -s1);
        let mags: Vec<f64> = (1..=10).map(|n| next_step_detuning(n, Branch::U, &params).unwrap().abs()).collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut params = SystemParams::default();
        assert!(params.validate().is_ok());
        params.theta = 3.2;
        assert!(params.validate().is_err());
        params.theta = 0.0;
        params.r = 1.5;
        assert!(params.validate().is_err());
        params.r = 0.5;
        params.gamma = -1.0;
        assert!(params.validate().is_err());
        params.gamma = 2.0;
        params.n_max = 0;
        assert!(params.validate().is_err());
        assert!(SystemParams::default().strong_coupling_warning().is_none());
        let weak = SystemParams { g: 5.0, ..SystemParams::default() };
        assert!(weak.strong_coupling_warning().is_some());
    }
}
