//! Two-time correlations by the quantum regression formula.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{liouvillian_from, steady_state, ExpectationSeries, Propagator, SteadyState};
use crate::error::{Error, Result};
use crate::hilbert::{build_operators, Operators, SystemParams};

const NORM_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Regression,
    Trajectory,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    /// Intensity-field correlation `h_θ(τ)`.
    H,
    /// Intensity-intensity correlation `g²(τ)`.
    G2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub kind: CorrelationKind,
    pub method: Method,
    pub theta: Option<f64>,
    pub tau: Vec<f64>,
    pub values: Vec<f64>,
    /// Per-point standard error, for estimates from sampled records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_err: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SystemParams>,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Value at the grid point closest to `tau`, with that grid point.
    pub fn nearest(&self, tau: f64) -> Option<(f64, f64)> {
        self.tau
            .iter()
            .zip(self.values.iter())
            .min_by(|a, b| (a.0 - tau).abs().partial_cmp(&(b.0 - tau).abs()).unwrap())
            .map(|(&t, &v)| (t, v))
    }

    /// `max |h(τ) − h(−τ)|` over grid points whose mirror image is also on
    /// the grid (within `1e−9`).
    pub fn time_asymmetry(&self) -> Option<f64> {
        let mut worst: Option<f64> = None;
        for (i, &t) in self.tau.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            if let Some(j) = self.tau.iter().position(|&u| (u + t).abs() < 1e-9) {
                let d = (self.values[i] - self.values[j]).abs();
                worst = Some(worst.map_or(d, |w: f64| w.max(d)));
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Uniform grid from `start` to `end` inclusive with spacing close to `step`.
pub fn tau_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    let n = ((end - start) / step).round() as usize;
    (0..=n).map(|k| start + (end - start) * k as f64 / n.max(1) as f64).collect()
}

/// Steady state and diagonalized Liouvillian shared by repeated correlation
/// queries at one parameter point.
pub struct Correlator {
    params: SystemParams,
    ops: Operators,
    propagator: Propagator,
    steady: SteadyState,
    n_ss: f64,
    a_ss: C64,
}

impl Correlator {
    pub fn new(params: &SystemParams) -> Result<Self> {
        params.validate()?;
        let ops = build_operators(params);
        let l = liouvillian_from(&ops, params);
        let steady = steady_state(&l)?;
        let propagator = Propagator::new(&l)?;
        let n_ss = steady.rho.expectation(&ops.photon_number()).re;
        let a_ss = steady.rho.expectation(&ops.a);
        Ok(Self { params: *params, ops, propagator, steady, n_ss, a_ss })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn steady(&self) -> &SteadyState {
        &self.steady
    }

    /// `⟨a†a⟩_ss`
    pub fn photon_number(&self) -> f64 {
        self.n_ss
    }

    /// `⟨a⟩_ss`
    pub fn mean_field(&self) -> C64 {
        self.a_ss
    }

    /// `⟨A_θ⟩_ss = Re[⟨a⟩_ss e^{−iθ}]`
    pub fn mean_quadrature(&self, theta: f64) -> f64 {
        (self.a_ss * C64::from_polar(1.0, -theta)).re
    }

    /// `⟨σ₊σ₋⟩_ss`
    pub fn atom_excitation(&self) -> f64 {
        self.steady.rho.expectation(&self.ops.atom_excitation()).re
    }

    fn branches(&self) -> (ExpectationSeries, ExpectationSeries) {
        let rho = self.steady.rho.matrix();
        let a = self.ops.a.matrix();
        let ad = self.ops.a_dagger.matrix();
        let after: Array2<C64> = a.dot(rho).dot(ad);
        let before: Array2<C64> = a.dot(rho);
        let n_op = self.ops.photon_number().into_matrix();
        (
            self.propagator.expectation_series(a, &after.view()),
            self.propagator.expectation_series(&n_op, &before.view()),
        )
    }

    /// Unnormalized numerator of `h_θ(τ)` on both sides of `τ = 0`.
    pub fn h_numerator(&self, theta: f64, tau: &[f64]) -> Result<Vec<f64>> {
        let (pos, neg) = self.branches();
        let phase = C64::from_polar(1.0, -theta);
        tau.iter()
            .map(|&t| {
                let z = if t >= 0.0 { pos.at(t)? } else { neg.at(-t)? };
                Ok((z * phase).re)
            })
            .collect()
    }

    pub fn h(&self, theta: f64, tau: &[f64]) -> Result<CorrelationSeries> {
        let numerator = self.h_numerator(theta, tau)?;
        let mean = self.mean_quadrature(theta);
        if mean.abs() <= NORM_FLOOR {
            return Err(Error::NormalizationUndefined {
                what: "<A_theta>_ss",
                value: mean,
                tau: tau.to_vec(),
                numerator,
            });
        }
        if self.n_ss <= NORM_FLOOR {
            return Err(Error::NormalizationUndefined {
                what: "<a^dagger a>_ss",
                value: self.n_ss,
                tau: tau.to_vec(),
                numerator,
            });
        }
        let denom = self.n_ss * mean;
        Ok(CorrelationSeries {
            kind: CorrelationKind::H,
            method: Method::Regression,
            theta: Some(theta),
            tau: tau.to_vec(),
            values: numerator.iter().map(|v| v / denom).collect(),
            std_err: None,
            params: Some(self.params),
        })
    }

    pub fn g2(&self, tau: &[f64]) -> Result<CorrelationSeries> {
        let rho = self.steady.rho.matrix();
        let after: Array2<C64> = self.ops.a.matrix().dot(rho).dot(self.ops.a_dagger.matrix());
        let series = self
            .propagator
            .expectation_series(&self.ops.photon_number().into_matrix(), &after.view());
        let numerator: Vec<f64> = tau.iter().map(|&t| Ok(series.at(t.abs())?.re)).collect::<Result<_>>()?;
        if self.n_ss <= NORM_FLOOR {
            return Err(Error::NormalizationUndefined {
                what: "<a^dagger a>_ss",
                value: self.n_ss,
                tau: tau.to_vec(),
                numerator,
            });
        }
        let denom = self.n_ss * self.n_ss;
        Ok(CorrelationSeries {
            kind: CorrelationKind::G2,
            method: Method::Regression,
            theta: None,
            tau: tau.to_vec(),
            values: numerator.iter().map(|v| v / denom).collect(),
            std_err: None,
            params: Some(self.params),
        })
    }
}

/// `h_θ(τ)` from the steady state of `params`; negative delays use the
/// `tr[a†a e^{ℒ|τ|}(aρ)]` ordering.
pub fn correlation_h(theta: f64, tau: &[f64], params: &SystemParams) -> Result<CorrelationSeries> {
    Correlator::new(params)?.h(theta, tau)
}

pub fn correlation_g2(tau: &[f64], params: &SystemParams) -> Result<CorrelationSeries> {
    Correlator::new(params)?.g2(tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small() -> SystemParams {
        SystemParams { n_max: 5, g: 20.0, eps: 1.0, delta_omega: 20.0, ..SystemParams::default() }
    }

    #[test]
    fn branches_meet_at_zero_delay() {
        let c = Correlator::new(&small()).unwrap();
        let v = c.h_numerator(PI / 4.0, &[-1e-12, 0.0]).unwrap();
        assert!((v[0] - v[1]).abs() < 1e-9 * v[1].abs().max(1e-6));
    }

    #[test]
    fn large_delay_factorizes() {
        let c = Correlator::new(&small()).unwrap();
        let h = c.h(0.3, &[-20.0, 20.0]).unwrap();
        for v in &h.values {
            assert!((v - 1.0).abs() < 1e-3);
        }
        let g2 = c.g2(&[20.0]).unwrap();
        assert!((g2.values[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn undriven_system_has_undefined_normalization() {
        let p = SystemParams { eps: 0.0, ..small() };
        match correlation_h(0.0, &[0.0, 1.0], &p) {
            Err(Error::NormalizationUndefined { numerator, tau, .. }) => {
                assert_eq!(numerator.len(), 2);
                assert_eq!(tau, vec![0.0, 1.0]);
            }
            other => panic!("expected NormalizationUndefined, got {other:?}"),
        }
        assert!(matches!(correlation_g2(&[0.0], &p), Err(Error::NormalizationUndefined { .. })));
    }

    #[test]
    fn asymmetry_metric_pairs_mirror_points() {
        let s = CorrelationSeries {
            kind: CorrelationKind::H,
            method: Method::Analytic,
            theta: None,
            tau: vec![-1.0, -0.5, 0.0, 0.5, 1.0, 2.0],
            values: vec![1.0, 2.0, 0.0, 2.5, 0.7, 9.0],
            std_err: None,
            params: None,
        };
        assert!((s.time_asymmetry().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(tau_grid(-1.0, 1.0, 0.5), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }
}
