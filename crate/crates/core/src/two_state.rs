//! Two-state approximation on the vacuum Rabi resonance `|Δω| = g`.
//!
//! The drive couples `|G⟩` to a single dressed state `|1,U⟩` (or `|1,L⟩`).
//! With `ℓ₋ = |G⟩⟨1|` the field maps to `a → ℓ₋/√2` and the atom to
//! `σ₋ → ±ℓ₋/√2`, so both decay channels feed one collapse of total rate
//! `γ̄ = κ + γ/2`.

use std::f64::consts::SQRT_2;

use ndarray::{array, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Branch, SystemParams};
use crate::linalg::{self, kron, ONE, ZERO};
use crate::liouville::{CorrelationKind, CorrelationSeries, Method};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStateParams {
    pub eps: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub branch: Branch,
}

impl TwoStateParams {
    pub fn new(eps: f64, kappa: f64, gamma: f64, branch: Branch) -> Result<Self> {
        let p = Self { eps, kappa, gamma, branch };
        p.validate()?;
        Ok(p)
    }

    /// Takes `ε, κ, γ` from a full parameter set; the branch follows the
    /// sign of the detuning.
    pub fn from_system(params: &SystemParams) -> Result<Self> {
        let branch = if params.delta_omega >= 0.0 { Branch::U } else { Branch::L };
        Self::new(params.eps, params.kappa, params.gamma, branch)
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("eps", self.eps), ("kappa", self.kappa), ("gamma", self.gamma)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter { field, value, reason: "must be finite and non-negative" });
            }
        }
        if self.gamma_bar() <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "gamma_bar",
                value: self.gamma_bar(),
                reason: "κ + γ/2 must be positive",
            });
        }
        Ok(())
    }

    /// `γ̄ = γ/2 + κ`
    pub fn gamma_bar(&self) -> f64 {
        0.5 * self.gamma + self.kappa
    }

    /// `Y = 2ε/γ̄`
    pub fn y(&self) -> f64 {
        2.0 * self.eps / self.gamma_bar()
    }

    /// `δ = (γ̄/4)√(1 − 8Y²)`, imaginary above the ringing threshold.
    pub fn delta(&self) -> C64 {
        let disc = 1.0 - 8.0 * self.y().powi(2);
        if disc.abs() < 1e-12 {
            return ZERO;
        }
        C64::new(disc, 0.0).sqrt() * (self.gamma_bar() / 4.0)
    }

    /// True when `8Y² > 1` and the correlation rings.
    pub fn is_oscillatory(&self) -> bool {
        8.0 * self.y().powi(2) > 1.0
    }

    /// Angular frequency `(γ̄/4)√(8Y² − 1)` of the damped ringing.
    pub fn ringing_frequency(&self) -> Option<f64> {
        self.is_oscillatory().then(|| self.delta().im.abs())
    }
}

/// `H = (ε/√2)(ℓ₊ + ℓ₋) − (i/2)γ̄ ℓ₊ℓ₋` on `{|G⟩, |1⟩}`.
pub fn effective_hamiltonian(p: &TwoStateParams) -> Array2<C64> {
    let w = C64::new(p.eps / SQRT_2, 0.0);
    array![[ZERO, w], [w, C64::new(0.0, -0.5 * p.gamma_bar())]]
}

/// Coefficients `(c_a, c_σ)` of `a → c_a ℓ₋` and `σ₋ → c_σ ℓ₋`.
pub fn operator_mapping(branch: Branch) -> (f64, f64) {
    (1.0 / SQRT_2, branch.sign() / SQRT_2)
}

/// Cavity-output and spontaneous-emission rates `κ⟨ℓ₊ℓ₋⟩` and
/// `(γ/2)⟨ℓ₊ℓ₋⟩` for an excited-state population.
pub fn channel_rates(p: &TwoStateParams, excited: f64) -> (f64, f64) {
    (p.kappa * excited, 0.5 * p.gamma * excited)
}

/// Closed-form `h_{π/2}(|τ|)` on the vacuum Rabi resonance. No dependence
/// on `g`.
pub fn analytic_h(tau_abs: f64, p: &TwoStateParams) -> f64 {
    let t = tau_abs.abs();
    let gb = p.gamma_bar();
    let y2 = p.y().powi(2);
    let delta = p.delta();
    let envelope = (-0.75 * gb * t).exp();
    let bracket = if delta == ZERO {
        C64::new(1.0 + 0.25 * gb * (1.0 - 2.0 * y2) * t, 0.0)
    } else {
        (delta * t).cosh() + (delta * t).sinh() / delta * (0.25 * gb * (1.0 - 2.0 * y2))
    };
    1.0 - envelope * bracket.re
}

pub fn analytic_series(tau: &[f64], p: &TwoStateParams) -> CorrelationSeries {
    CorrelationSeries {
        kind: CorrelationKind::H,
        method: Method::Analytic,
        theta: Some(std::f64::consts::FRAC_PI_2),
        tau: tau.to_vec(),
        values: tau.iter().map(|&t| analytic_h(t, p)).collect(),
        std_err: None,
        params: None,
    }
}

fn liouvillian(p: &TwoStateParams) -> Array2<C64> {
    let eye = linalg::identity(2);
    let h = array![[ZERO, C64::new(p.eps / SQRT_2, 0.0)], [C64::new(p.eps / SQRT_2, 0.0), ZERO]];
    let lm = array![[ZERO, ONE], [ZERO, ZERO]];
    let lp = linalg::dagger(&lm.view());
    let n = lp.dot(&lm);
    let gb = C64::new(p.gamma_bar(), 0.0);
    let mut l = (kron(&eye.view(), &h.view()) - kron(&h.t(), &eye.view())) * C64::new(0.0, -1.0);
    l = l + kron(&lp.t(), &lm.view()) * gb;
    l = l - (kron(&eye.view(), &n.view()) + kron(&n.t(), &eye.view())) * (gb * 0.5);
    l
}

fn steady(l: &Array2<C64>) -> Result<Array2<C64>> {
    use ndarray_linalg::Solve;
    let mut a = l.clone();
    a.row_mut(0).fill(ZERO);
    a[[0, 0]] = ONE;
    a[[0, 3]] = ONE;
    let b = array![ONE, ZERO, ZERO, ZERO];
    let x = a.solve(&b)?;
    Ok(linalg::unvectorize(x.as_slice().unwrap(), 2))
}

/// Steady-state population of the excited dressed state.
pub fn steady_excited_population(p: &TwoStateParams) -> Result<f64> {
    Ok(steady(&liouvillian(p))?[[1, 1]].re)
}

/// Regression evaluation of the normal-ordered `h_θ(τ)` inside the
/// two-level manifold, independent of the closed form.
pub fn two_state_h_regression(p: &TwoStateParams, theta: f64, tau: &[f64]) -> Result<CorrelationSeries> {
    p.validate()?;
    let l = liouvillian(p);
    let rho = steady(&l)?;
    let (ca, _) = operator_mapping(p.branch);
    let lm: Array2<C64> = array![[ZERO, ONE], [ZERO, ZERO]];
    let a = lm.mapv(|z| z * ca);
    let ad = linalg::dagger(&a.view());
    let n_op = ad.dot(&a);
    let phase = C64::from_polar(1.0, -theta);
    let after = a.dot(&rho).dot(&ad);
    let before = a.dot(&rho);
    let mean_a = linalg::trace(&a.dot(&rho).view());
    let n_ss = linalg::trace(&n_op.dot(&rho).view()).re;
    let mean = (mean_a * phase).re;
    let numerator = tau
        .iter()
        .map(|&t| {
            let (obs, x) = if t >= 0.0 { (&a, &after) } else { (&n_op, &before) };
            let e = linalg::expm(&l.mapv(|z| z * t.abs()).view())?;
            let y: Array1<C64> = e.dot(&linalg::vectorize(&x.view()));
            let yt = linalg::unvectorize(y.as_slice().unwrap(), 2);
            Ok((linalg::trace(&obs.dot(&yt).view()) * phase).re)
        })
        .collect::<Result<Vec<f64>>>()?;
    let denom = n_ss * mean;
    if denom.abs() <= 1e-14 {
        return Err(Error::NormalizationUndefined { what: "<A_theta>_ss", value: mean, tau: tau.to_vec(), numerator });
    }
    Ok(CorrelationSeries {
        kind: CorrelationKind::H,
        method: Method::Regression,
        theta: Some(theta),
        tau: tau.to_vec(),
        values: numerator.iter().map(|v| v / denom).collect(),
        std_err: None,
        params: None,
    })
}

/// A contiguous run of grid points violating a classical bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationInterval {
    pub start: f64,
    pub end: f64,
    pub worst_tau: f64,
    /// Most negative margin in the run; negative means violated.
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Grid point used as zero delay.
    pub tau0: f64,
    /// False when the grid has no exact `τ = 0` and the nearest point was used.
    pub tau0_on_grid: bool,
    pub h0: f64,
    /// Margin of `0 ≤ h(0) − 1 ≤ 1`.
    pub zero_delay_margin: f64,
    pub zero_delay_violated: bool,
    /// Runs where `|h(τ) − 1| ≤ |h(0) − 1| ≤ 1` fails.
    pub delay_violations: Vec<ViolationInterval>,
    /// Runs where `h(τ) < 0`.
    pub negative_intervals: Vec<ViolationInterval>,
}

impl BoundReport {
    pub fn delay_violated(&self) -> bool {
        !self.delay_violations.is_empty()
    }

    /// True when every grid point with `h < 0` lies inside a reported
    /// delay-bound violation.
    pub fn negatives_covered(&self, series: &CorrelationSeries) -> bool {
        series.tau.iter().zip(&series.values).filter(|(_, &h)| h < 0.0).all(|(&t, _)| {
            self.delay_violations.iter().any(|iv| t >= iv.start && t <= iv.end)
        })
    }
}

fn runs(tau: &[f64], margin: &[f64]) -> Vec<ViolationInterval> {
    let mut out = Vec::new();
    let mut cur: Option<ViolationInterval> = None;
    for (&t, &m) in tau.iter().zip(margin) {
        if m < 0.0 {
            match cur.as_mut() {
                Some(iv) => {
                    iv.end = t;
                    if m < iv.worst_margin {
                        iv.worst_margin = m;
                        iv.worst_tau = t;
                    }
                }
                None => cur = Some(ViolationInterval { start: t, end: t, worst_tau: t, worst_margin: m }),
            }
        } else if let Some(iv) = cur.take() {
            out.push(iv);
        }
    }
    out.extend(cur);
    out
}

/// Classical-field bounds on an intensity-field correlation series.
pub fn classical_bounds_report(series: &CorrelationSeries) -> Result<BoundReport> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let (tau0, h0) = series.nearest(0.0).unwrap();
    let tau0_on_grid = tau0 == 0.0;
    if !tau0_on_grid {
        log::warn!("no τ = 0 grid point; using τ = {tau0}");
    }
    let x0 = h0 - 1.0;
    let zero_delay_margin = x0.min(1.0 - x0);
    let cap = x0.abs();
    let delay_margin: Vec<f64> = series
        .values
        .iter()
        .map(|h| (cap - (h - 1.0).abs()).min(1.0 - cap))
        .collect();
    let neg: Vec<f64> = series.values.clone();
    Ok(BoundReport {
        tau0,
        tau0_on_grid,
        h0,
        zero_delay_margin,
        zero_delay_violated: zero_delay_margin < 0.0,
        delay_violations: runs(&series.tau, &delay_margin),
        negative_intervals: runs(&series.tau, &neg),
    })
}
