//! Fixed-detuning and detuning-scan trajectory runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::filter::PhotocurrentFilter;
use super::state::{check_dt, maybe_jump, sse_step_shifted, ConditionedState, JumpEvent, JumpKind, StepKernel};
use crate::error::{Error, Result};
use crate::hilbert::SystemParams;

/// Spacing of the cached propagators along a detuning scan.
pub const SCAN_GRID_SPACING: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Protocol {
    /// Constant `Δω` taken from the parameters.
    Fixed { duration: f64 },
    /// `Δω` swept linearly from `from` to `to` (absolute, units of κ).
    Scan { from: f64, to: f64, duration: f64 },
}

impl Protocol {
    pub fn duration(&self) -> f64 {
        match *self {
            Protocol::Fixed { duration } | Protocol::Scan { duration, .. } => duration,
        }
    }

    pub fn detuning_at(&self, t: f64, params: &SystemParams) -> f64 {
        match *self {
            Protocol::Fixed { .. } => params.delta_omega,
            Protocol::Scan { from, to, duration } => from + (to - from) * (t / duration),
        }
    }

    /// Time at which a scan passes `delta_omega`.
    pub fn time_of_detuning(&self, delta_omega: f64) -> Option<f64> {
        match *self {
            Protocol::Fixed { .. } => None,
            Protocol::Scan { from, to, duration } => {
                let s = (delta_omega - from) / (to - from);
                (0.0..=1.0).contains(&s).then_some(s * duration)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub dt: f64,
    pub seed: u64,
    /// ChaCha stream; ensembles use the trajectory index.
    #[serde(default)]
    pub stream: u64,
    /// Record every `decimation`-th step.
    pub decimation: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { dt: 1e-4, seed: 0, stream: 0, decimation: 10 }
    }
}

/// Quantities visible to an observer after each step.
pub struct StepSample<'a> {
    pub step: u64,
    pub t: f64,
    pub delta_omega: f64,
    pub state: &'a ConditionedState,
    pub dq: f64,
    pub i_theta: f64,
}

pub trait Observer {
    /// Called before the initial sample of each run.
    fn begin(&mut self) {}
    /// Called with the initial state (`step = 0`) and after every step.
    fn step(&mut self, sample: &StepSample<'_>);
    /// Called right after a collapse, with the collapsed state.
    fn jump(&mut self, _event: &JumpEvent, _state: &ConditionedState) {}
}

impl Observer for () {
    fn step(&mut self, _sample: &StepSample<'_>) {}
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn begin(&mut self) {
        self.0.begin();
        self.1.begin();
    }
    fn step(&mut self, sample: &StepSample<'_>) {
        self.0.step(sample);
        self.1.step(sample);
    }
    fn jump(&mut self, event: &JumpEvent, state: &ConditionedState) {
        self.0.jump(event, state);
        self.1.jump(event, state);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub steps: u64,
    pub apd: u64,
    pub spontaneous: u64,
}

enum Kernels {
    Fixed(StepKernel),
    Grid { origin: f64, list: Vec<StepKernel> },
}

/// Prebuilt propagators for one parameter set, protocol and step size,
/// shared by every trajectory of an ensemble.
pub struct TrajectoryEngine {
    params: SystemParams,
    protocol: Protocol,
    dt: f64,
    n_steps: u64,
    kernels: Kernels,
}

impl TrajectoryEngine {
    pub fn new(params: &SystemParams, protocol: Protocol, dt: f64) -> Result<Self> {
        params.validate()?;
        check_dt(params, dt)?;
        let duration = protocol.duration();
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidParameter { field: "duration", value: duration, reason: "must be positive" });
        }
        let kernels = match protocol {
            Protocol::Fixed { .. } => Kernels::Fixed(StepKernel::new(params, dt)?),
            Protocol::Scan { from, to, .. } => {
                let lo = from.min(to);
                let hi = from.max(to);
                let n = ((hi - lo) / SCAN_GRID_SPACING).ceil() as usize + 1;
                let list = (0..n)
                    .map(|k| StepKernel::new(&params.with_delta_omega(lo + k as f64 * SCAN_GRID_SPACING), dt))
                    .collect::<Result<Vec<_>>>()?;
                Kernels::Grid { origin: lo, list }
            }
        };
        Ok(Self {
            params: *params,
            protocol,
            dt,
            n_steps: (duration / dt).round() as u64,
            kernels,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    fn select(&self, delta_omega: f64) -> (&StepKernel, f64) {
        match &self.kernels {
            Kernels::Fixed(k) => (k, 0.0),
            Kernels::Grid { origin, list } => {
                let idx = ((delta_omega - origin) / SCAN_GRID_SPACING).round().clamp(0.0, (list.len() - 1) as f64) as usize;
                let k = &list[idx];
                (k, delta_omega - k.delta_omega())
            }
        }
    }

    pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    /// Runs one trajectory from `|G⟩`, feeding every step to `observer`.
    pub fn run_observed<O: Observer>(&self, seed: u64, stream: u64, observer: &mut O) -> Result<RunStats> {
        let mut rng = Self::rng(seed, stream);
        let mut state = ConditionedState::ground(&self.params);
        let mut filter = PhotocurrentFilter::new(self.params.tau_d_inv);
        let mut stats = RunStats::default();
        observer.begin();
        observer.step(&StepSample {
            step: 0,
            t: 0.0,
            delta_omega: self.protocol.detuning_at(0.0, &self.params),
            state: &state,
            dq: 0.0,
            i_theta: 0.0,
        });
        for k in 0..self.n_steps {
            let t = k as f64 * self.dt;
            let dw = self.protocol.detuning_at(t, &self.params);
            let (kernel, shift) = self.select(dw);
            for ev in maybe_jump(&mut state, kernel, t, dw, &mut rng)? {
                match ev.kind {
                    JumpKind::Apd => stats.apd += 1,
                    JumpKind::Spontaneous => stats.spontaneous += 1,
                }
                observer.jump(&ev, &state);
            }
            let dq = sse_step_shifted(&mut state, kernel, shift, t, &mut rng)?;
            let i_theta = filter.step(dq, self.dt);
            observer.step(&StepSample {
                step: k + 1,
                t: (k + 1) as f64 * self.dt,
                delta_omega: dw,
                state: &state,
                dq,
                i_theta,
            });
        }
        stats.steps = self.n_steps;
        Ok(stats)
    }

    pub fn run_record(&self, seed: u64, stream: u64, decimation: usize) -> Result<TrajectoryRecord> {
        let mut rec = Recorder::new(decimation.max(1), self.params.theta);
        self.run_observed(seed, stream, &mut rec)?;
        Ok(TrajectoryRecord {
            params: self.params,
            protocol: self.protocol,
            seed,
            stream,
            dt: self.dt,
            decimation: decimation.max(1),
            t: rec.t,
            delta_omega: rec.delta_omega,
            n_cond: rec.n_cond,
            a_cond: rec.a_cond,
            i_theta: rec.i_theta,
            events: rec.events,
        })
    }
}

/// Time series of one conditioned run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: SystemParams,
    pub protocol: Protocol,
    pub seed: u64,
    pub stream: u64,
    pub dt: f64,
    pub decimation: usize,
    pub t: Vec<f64>,
    pub delta_omega: Vec<f64>,
    /// `⟨a†a⟩_REC`
    pub n_cond: Vec<f64>,
    /// `⟨A_θ⟩_REC`
    pub a_cond: Vec<f64>,
    /// Filtered photocurrent `I_θ`.
    pub i_theta: Vec<f64>,
    pub events: Vec<JumpEvent>,
}

impl TrajectoryRecord {
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.decimation as f64
    }

    pub fn count(&self, kind: JumpKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Index range of samples with `start ≤ t < end`.
    pub fn window(&self, start: f64, end: f64) -> Result<std::ops::Range<usize>> {
        let (first, last) = match (self.t.first(), self.t.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::EmptySeries),
        };
        let h = 1e-9 * self.sample_interval();
        if start < first - h || end > last + h {
            return Err(Error::WindowClipped { start, end, record_start: first, record_end: last });
        }
        let i0 = self.t.partition_point(|&t| t < start - h);
        let i1 = self.t.partition_point(|&t| t < end - h);
        Ok(i0..i1)
    }
}

struct Recorder {
    decimation: usize,
    theta: f64,
    t: Vec<f64>,
    delta_omega: Vec<f64>,
    n_cond: Vec<f64>,
    a_cond: Vec<f64>,
    i_theta: Vec<f64>,
    events: Vec<JumpEvent>,
}

impl Recorder {
    fn new(decimation: usize, theta: f64) -> Self {
        Self {
            decimation,
            theta,
            t: Vec::new(),
            delta_omega: Vec::new(),
            n_cond: Vec::new(),
            a_cond: Vec::new(),
            i_theta: Vec::new(),
            events: Vec::new(),
        }
    }
}

impl Observer for Recorder {
    fn step(&mut self, s: &StepSample<'_>) {
        if s.step.is_multiple_of(self.decimation as u64) {
            self.t.push(s.t);
            self.delta_omega.push(s.delta_omega);
            self.n_cond.push(s.state.photon_number());
            self.a_cond.push(s.state.quadrature(self.theta));
            self.i_theta.push(s.i_theta);
        }
    }

    fn jump(&mut self, event: &JumpEvent, _state: &ConditionedState) {
        self.events.push(*event);
    }
}

/// One trajectory from `|G⟩` under `protocol`.
pub fn run_trajectory(params: &SystemParams, protocol: Protocol, opts: &RunOptions) -> Result<TrajectoryRecord> {
    TrajectoryEngine::new(params, protocol, opts.dt)?.run_record(opts.seed, opts.stream, opts.decimation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemParams {
        SystemParams { n_max: 4, g: 20.0, eps: 2.0, delta_omega: 20.0, tau_d_inv: 100.0, ..SystemParams::default() }
    }

    #[test]
    fn replay_is_bit_exact() {
        let p = small();
        let o = RunOptions { dt: 1e-3, seed: 11, stream: 2, decimation: 5 };
        let a = run_trajectory(&p, Protocol::Fixed { duration: 5.0 }, &o).unwrap();
        let b = run_trajectory(&p, Protocol::Fixed { duration: 5.0 }, &o).unwrap();
        assert_eq!(a, b);
        let c = run_trajectory(&p, Protocol::Fixed { duration: 5.0 }, &RunOptions { stream: 3, ..o }).unwrap();
        assert_ne!(a.n_cond, c.n_cond);
        assert_eq!(a.t.len(), 1001);
    }

    #[test]
    fn undriven_run_has_no_jumps() {
        let p = SystemParams { eps: 0.0, ..small() };
        let r = run_trajectory(&p, Protocol::Fixed { duration: 20.0 }, &RunOptions { dt: 1e-3, ..Default::default() }).unwrap();
        assert!(r.events.is_empty());
        assert!(r.n_cond.iter().all(|&n| n == 0.0));
    }

    #[test]
    fn direct_detection_has_pure_noise_photocurrent() {
        let p = SystemParams { r: 1.0, ..small() };
        let r = run_trajectory(&p, Protocol::Fixed { duration: 20.0 }, &RunOptions { dt: 1e-3, ..Default::default() }).unwrap();
        assert!(r.count(JumpKind::Apd) > 0);
        // without the diffusive term the no-jump evolution is deterministic
        let q = run_trajectory(&p, Protocol::Fixed { duration: 20.0 }, &RunOptions { dt: 1e-3, seed: 5, ..Default::default() }).unwrap();
        let first = |r: &TrajectoryRecord| r.events.first().map(|e| e.time).unwrap_or(20.0);
        let until = first(&r).min(first(&q));
        for k in 0..r.t.len() {
            if r.t[k] >= until {
                break;
            }
            assert_eq!(r.n_cond[k], q.n_cond[k]);
        }
    }

    #[test]
    fn scan_follows_the_detuning_ramp() {
        let p = small();
        let proto = Protocol::Scan { from: 22.0, to: 14.0, duration: 2.0 };
        let r = run_trajectory(&p, proto, &RunOptions { dt: 1e-3, decimation: 100, ..Default::default() }).unwrap();
        assert_eq!(r.delta_omega[0], 22.0);
        assert!((r.delta_omega.last().unwrap() - 14.0).abs() < 0.01);
        assert!((proto.time_of_detuning(18.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_bounds() {
        let p = small();
        let r = run_trajectory(&p, Protocol::Fixed { duration: 1.0 }, &RunOptions { dt: 1e-3, decimation: 10, ..Default::default() }).unwrap();
        assert_eq!(r.window(0.2, 0.3).unwrap().len(), 10);
        assert!(matches!(r.window(0.9, 1.2), Err(Error::WindowClipped { .. })));
    }
}
