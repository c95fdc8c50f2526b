//! Single-pole photocurrent filter `dI = −τ_d⁻¹(I dt − dq)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotocurrentFilter {
    pub value: f64,
    pub tau_d_inv: f64,
}

impl PhotocurrentFilter {
    pub fn new(tau_d_inv: f64) -> Self {
        Self { value: 0.0, tau_d_inv }
    }

    /// `I ← I + τ_d⁻¹(dq − I dt)`; callers check `dt·τ_d⁻¹ < 1` once.
    #[inline]
    pub fn step(&mut self, dq: f64, dt: f64) -> f64 {
        self.value += self.tau_d_inv * (dq - self.value * dt);
        self.value
    }
}

pub fn filter_step(f: PhotocurrentFilter, dq: f64, dt: f64) -> Result<PhotocurrentFilter> {
    if !(dt * f.tau_d_inv < 1.0) {
        return Err(Error::StepTooLarge(format!("dt·τ_d⁻¹ = {} must stay below 1", dt * f.tau_d_inv)));
    }
    let mut out = f;
    out.step(dq, dt);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn step_response_settles_on_the_input_rate() {
        let mut f = PhotocurrentFilter::new(50.0);
        let dt = 1e-3;
        for _ in 0..2000 {
            f = filter_step(f, 3.0 * dt, dt).unwrap();
        }
        assert!((f.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn free_decay_rate() {
        let dt = 1e-4;
        let mut f = PhotocurrentFilter { value: 1.0, tau_d_inv: 100.0 };
        let n = 100;
        for _ in 0..n {
            f.step(0.0, dt);
        }
        let expected = (-100.0 * dt * n as f64).exp();
        assert!((f.value / expected - 1.0).abs() < 0.01);
    }

    #[test]
    fn rejects_unstable_step() {
        assert!(filter_step(PhotocurrentFilter::new(1000.0), 0.0, 1e-3).is_err());
    }

    #[test]
    fn white_noise_variance() {
        let dt: f64 = 1e-4;
        let tdi = 200.0;
        let mut f = PhotocurrentFilter::new(tdi);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut s1, mut s2) = (0.0, 0.0);
        let n = 1_000_000;
        for _ in 0..n {
            let dq: f64 = StandardNormal.sample(&mut rng);
            let v = f.step(dq * dt.sqrt(), dt);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        // discrete single pole: a²/(1 − (1−a)²)/dt with a = τ_d⁻¹ dt
        let a = tdi * dt;
        let exact = a * a / (1.0 - (1.0 - a).powi(2)) / dt;
        assert!((var / exact - 1.0).abs() < 0.05);
        assert!((var / (tdi / 2.0) - 1.0).abs() < 0.05);
    }
}
