//! Photocurrent averages conditioned on APD "starts".

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::run::{Observer, StepSample};
use super::state::{ConditionedState, JumpEvent, JumpKind};
use crate::error::{Error, Result};
use crate::liouville::{CorrelationKind, CorrelationSeries, Method};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccumulatorSpec {
    /// Half-width `T_w` of the lag window.
    pub window: f64,
    /// Starts before this time are ignored.
    pub burn_in: f64,
    pub dt: f64,
    pub theta: f64,
    /// Steps in the run, so that only starts with a complete window count.
    pub n_steps: u64,
}

/// Running sums of the photocurrent `I_θ` and of `⟨A_θ⟩_REC` at lags
/// `τ = j·dt`, `|j| ≤ K`, around every APD click.
#[derive(Clone, Debug)]
pub struct StartConditionedAccumulator {
    spec: AccumulatorSpec,
    k: usize,
    ring_i: Vec<f64>,
    ring_filled: usize,
    ring_pos: usize,
    last_step: u64,
    pending: VecDeque<u64>,
    sum_i: Vec<f64>,
    sumsq_i: Vec<f64>,
    sum_a: Vec<f64>,
    sumsq_a: Vec<f64>,
    n_starts: u64,
}

impl StartConditionedAccumulator {
    pub fn new(spec: AccumulatorSpec) -> Result<Self> {
        if !(spec.window > 0.0 && spec.dt > 0.0) {
            return Err(Error::InvalidParameter { field: "window", value: spec.window, reason: "window and dt must be positive" });
        }
        let k = (spec.window / spec.dt).round() as usize;
        Ok(Self {
            spec,
            k,
            ring_i: vec![0.0; k + 1],
            ring_filled: 0,
            ring_pos: 0,
            last_step: 0,
            pending: VecDeque::new(),
            sum_i: vec![0.0; 2 * k + 1],
            sumsq_i: vec![0.0; 2 * k + 1],
            sum_a: vec![0.0; k + 1],
            sumsq_a: vec![0.0; k + 1],
            n_starts: 0,
        })
    }

    pub fn spec(&self) -> &AccumulatorSpec {
        &self.spec
    }

    /// Completed starts `N_s`.
    pub fn n_starts(&self) -> u64 {
        self.n_starts
    }

    /// Lags per side.
    pub fn half_len(&self) -> usize {
        self.k
    }

    pub fn lags(&self) -> Vec<f64> {
        (0..=2 * self.k).map(|i| (i as f64 - self.k as f64) * self.spec.dt).collect()
    }

    fn ring_at(&self, back: usize) -> f64 {
        let cap = self.k + 1;
        self.ring_i[(self.ring_pos + cap - 1 - back) % cap]
    }

    /// Adds another accumulator built with the same spec.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.k != other.k || self.spec.dt != other.spec.dt || self.spec.theta != other.spec.theta {
            return Err(Error::Unsupported("merging accumulators with different lag grids".into()));
        }
        for (a, b) in self.sum_i.iter_mut().zip(&other.sum_i) {
            *a += b;
        }
        for (a, b) in self.sumsq_i.iter_mut().zip(&other.sumsq_i) {
            *a += b;
        }
        for (a, b) in self.sum_a.iter_mut().zip(&other.sum_a) {
            *a += b;
        }
        for (a, b) in self.sumsq_a.iter_mut().zip(&other.sumsq_a) {
            *a += b;
        }
        self.n_starts += other.n_starts;
        Ok(())
    }

    /// Clears the per-run state (ring buffer and pending starts) while
    /// keeping the sums, so one accumulator can follow many trajectories.
    pub fn reset_run(&mut self) {
        self.ring_filled = 0;
        self.ring_pos = 0;
        self.last_step = 0;
        self.pending.clear();
    }

    /// Normalizes by the steady photocurrent `gain·⟨A_θ⟩_ss`.
    pub fn finish(&self, mean_quadrature_ss: f64, gain: f64) -> Result<StartEstimate> {
        if self.n_starts == 0 {
            return Err(Error::ZeroStarts);
        }
        let norm = gain * mean_quadrature_ss;
        if norm.abs() <= 1e-12 {
            return Err(Error::NormalizationUndefined {
                what: "steady photocurrent",
                value: norm,
                tau: self.lags(),
                numerator: self.sum_i.iter().map(|s| s / self.n_starts as f64).collect(),
            });
        }
        let n = self.n_starts as f64;
        let stats = |sum: &[f64], sumsq: &[f64], scale: f64| -> (Vec<f64>, Vec<f64>) {
            sum.iter()
                .zip(sumsq)
                .map(|(s, q)| {
                    let mean = s / n;
                    let var = if n > 1.0 { ((q / n - mean * mean) * n / (n - 1.0)).max(0.0) } else { f64::NAN };
                    (mean / scale, (var / n).sqrt() / scale.abs())
                })
                .unzip()
        };
        let (h, std_err) = stats(&self.sum_i, &self.sumsq_i, norm);
        let (h_cond, std_err_cond) = stats(&self.sum_a, &self.sumsq_a, mean_quadrature_ss);
        let noise_floor = (std_err.iter().map(|s| s * s).sum::<f64>() / std_err.len() as f64).sqrt();
        Ok(StartEstimate {
            dt: self.spec.dt,
            theta: self.spec.theta,
            k: self.k,
            h,
            std_err,
            h_cond,
            std_err_cond,
            n_starts: self.n_starts,
            noise_floor,
        })
    }
}

impl Observer for StartConditionedAccumulator {
    fn begin(&mut self) {
        self.reset_run();
    }

    fn step(&mut self, s: &StepSample<'_>) {
        let cap = self.k + 1;
        self.ring_i[self.ring_pos] = s.i_theta;
        self.ring_pos = (self.ring_pos + 1) % cap;
        self.ring_filled = (self.ring_filled + 1).min(cap);
        self.last_step = s.step;
        let a = s.state.quadrature(self.spec.theta);
        let mut completed = 0;
        for &start in self.pending.iter() {
            let j = (s.step - start) as usize;
            let i = self.k + j;
            self.sum_i[i] += s.i_theta;
            self.sumsq_i[i] += s.i_theta * s.i_theta;
            self.sum_a[j] += a;
            self.sumsq_a[j] += a * a;
            if j == self.k {
                completed += 1;
            }
        }
        for _ in 0..completed {
            self.pending.pop_front();
            self.n_starts += 1;
        }
    }

    fn jump(&mut self, event: &JumpEvent, state: &ConditionedState) {
        if event.kind != JumpKind::Apd || self.k == 0 {
            return;
        }
        let step = self.last_step;
        let t = step as f64 * self.spec.dt;
        if t - self.spec.window < self.spec.burn_in - 1e-12
            || self.ring_filled < self.k + 1
            || step + self.k as u64 > self.spec.n_steps
        {
            return;
        }
        for back in 0..=self.k {
            let v = self.ring_at(back);
            let i = self.k - back;
            self.sum_i[i] += v;
            self.sumsq_i[i] += v * v;
        }
        let a = state.quadrature(self.spec.theta);
        self.sum_a[0] += a;
        self.sumsq_a[0] += a * a;
        self.pending.push_back(step);
    }
}

/// Start-conditioned estimate of `h_θ(τ)` on the full lag grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StartEstimate {
    pub dt: f64,
    pub theta: f64,
    k: usize,
    /// Photocurrent estimate at lags `−K..=K`.
    pub h: Vec<f64>,
    pub std_err: Vec<f64>,
    /// `⟨A_θ⟩_REC` estimate at lags `0..=K`.
    pub h_cond: Vec<f64>,
    pub std_err_cond: Vec<f64>,
    pub n_starts: u64,
    /// RMS over lags of the per-lag standard error of `h`.
    pub noise_floor: f64,
}

impl StartEstimate {
    pub fn lags(&self) -> Vec<f64> {
        (0..=2 * self.k).map(|i| (i as f64 - self.k as f64) * self.dt).collect()
    }

    fn index(&self, tau: f64) -> Option<usize> {
        let j = (tau / self.dt).round();
        (j.abs() <= self.k as f64).then(|| (j as i64 + self.k as i64) as usize)
    }

    /// Photocurrent estimate sampled at the lag nearest to each `tau`.
    pub fn series(&self, tau: &[f64]) -> Result<CorrelationSeries> {
        let idx = tau
            .iter()
            .map(|&t| {
                self.index(t).ok_or(Error::WindowClipped {
                    start: t,
                    end: t,
                    record_start: -(self.k as f64) * self.dt,
                    record_end: self.k as f64 * self.dt,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CorrelationSeries {
            kind: CorrelationKind::H,
            method: Method::Trajectory,
            theta: Some(self.theta),
            tau: idx.iter().map(|&i| (i as f64 - self.k as f64) * self.dt).collect(),
            values: idx.iter().map(|&i| self.h[i]).collect(),
            std_err: Some(idx.iter().map(|&i| self.std_err[i]).collect()),
            params: None,
        })
    }

    /// `⟨A_θ⟩_REC` estimate at non-negative lags.
    pub fn conditioned_series(&self, tau: &[f64]) -> Result<CorrelationSeries> {
        let idx = tau
            .iter()
            .map(|&t| match self.index(t) {
                Some(i) if i >= self.k => Ok(i - self.k),
                _ => Err(Error::Unsupported(format!("conditioned estimate needs 0 ≤ τ ≤ T_w, got {t}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CorrelationSeries {
            kind: CorrelationKind::H,
            method: Method::Trajectory,
            theta: Some(self.theta),
            tau: idx.iter().map(|&j| j as f64 * self.dt).collect(),
            values: idx.iter().map(|&j| self.h_cond[j]).collect(),
            std_err: Some(idx.iter().map(|&j| self.std_err_cond[j]).collect()),
            params: None,
        })
    }
}
