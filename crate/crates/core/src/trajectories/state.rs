//! Conditioned pure state, the diffusive SSE step and the two collapse
//! channels.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, basis_index, build_operators, SystemParams};
use crate::linalg::{self, ZERO};
use crate::liouville::DensityMatrix;

/// Largest `g·dt` that still resolves the `2g` beat.
pub const MAX_G_DT: f64 = 0.05;
/// Largest total jump probability per step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;
const NORM_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpKind {
    /// Photon counted by the APD: `ψ → aψ`.
    Apd,
    /// Spontaneous emission out the side of the cavity: `ψ → σ₋ψ`.
    Spontaneous,
}

impl JumpKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JumpKind::Apd => "apd",
            JumpKind::Spontaneous => "spontaneous",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub kind: JumpKind,
    pub delta_omega: f64,
}

/// Photocurrent per unit `⟨A_θ⟩`: `√(8κ(1−r))`.
pub fn signal_gain(params: &SystemParams) -> f64 {
    (8.0 * params.kappa * (1.0 - params.r)).sqrt()
}

/// Per-step constants: the no-jump propagator `exp(−iH_eff dt)` and the
/// measurement couplings.
#[derive(Clone, Debug)]
pub struct StepKernel {
    n_max: usize,
    dim: usize,
    dt: f64,
    delta_omega: f64,
    u: Vec<C64>,
    sqrt_n: Vec<f64>,
    diffusion: C64,
    signal_gain: f64,
    apd_rate: f64,
    spont_rate: f64,
    theta: f64,
}

impl StepKernel {
    pub fn new(params: &SystemParams, dt: f64) -> Result<Self> {
        params.validate()?;
        check_dt(params, dt)?;
        let ops = build_operators(params);
        let h = hilbert::jc_hamiltonian_from(&ops, params);
        let damping = (&ops.photon_number().scale(C64::new(params.kappa, 0.0))
            + &ops.atom_excitation().scale(C64::new(0.5 * params.gamma, 0.0)))
            .scale(C64::new(0.0, -1.0));
        let h_eff = &h + &damping;
        let gen = h_eff.matrix().mapv(|z| z * C64::new(0.0, -dt));
        let u = linalg::expm(&gen.view())?;
        let dim = params.dim();
        let mut flat = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                flat.push(u[[i, j]]);
            }
        }
        let transmit = params.kappa * (1.0 - params.r);
        Ok(Self {
            n_max: params.n_max,
            dim,
            dt,
            delta_omega: params.delta_omega,
            u: flat,
            sqrt_n: (0..=params.n_max).map(|n| (n as f64).sqrt()).collect(),
            diffusion: C64::from_polar((2.0 * transmit).sqrt(), -params.theta),
            signal_gain: signal_gain(params),
            apd_rate: 2.0 * params.kappa * params.r,
            spont_rate: params.gamma,
            theta: params.theta,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn delta_omega(&self) -> f64 {
        self.delta_omega
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `√(8κ(1−r))`, the gain from `⟨A_θ⟩` to the mean photocurrent.
    pub fn signal_gain(&self) -> f64 {
        self.signal_gain
    }

    /// Excitation number `n + atom` of each basis index.
    fn excitation(&self, idx: usize) -> usize {
        let f = self.n_max + 1;
        idx / f + idx % f
    }
}

pub(crate) fn check_dt(params: &SystemParams, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter { field: "dt", value: dt, reason: "must be positive" });
    }
    if params.g * dt > MAX_G_DT {
        return Err(Error::StepTooLarge(format!(
            "g·dt = {} exceeds {MAX_G_DT}; the 2g beat is under-resolved",
            params.g * dt
        )));
    }
    if params.tau_d_inv * dt >= 1.0 {
        return Err(Error::StepTooLarge(format!(
            "dt·τ_d⁻¹ = {} must stay below 1 for the photocurrent filter",
            params.tau_d_inv * dt
        )));
    }
    Ok(())
}

/// Normalized conditioned state with cached expectations.
#[derive(Clone, Debug)]
pub struct ConditionedState {
    n_max: usize,
    psi: Vec<C64>,
    scratch: Vec<C64>,
    phases: Vec<C64>,
    photon_number: f64,
    atom_excitation: f64,
    field: C64,
}

impl ConditionedState {
    pub fn new(psi: &Array1<C64>, n_max: usize) -> Result<Self> {
        if psi.len() != 2 * (n_max + 1) {
            return Err(Error::Unsupported(format!("state of length {} for n_max = {n_max}", psi.len())));
        }
        let mut s = Self {
            n_max,
            psi: psi.to_vec(),
            scratch: vec![ZERO; psi.len()],
            phases: vec![ZERO; n_max + 2],
            photon_number: 0.0,
            atom_excitation: 0.0,
            field: ZERO,
        };
        s.normalize(0.0)?;
        Ok(s)
    }

    pub fn ground(params: &SystemParams) -> Self {
        Self::new(&hilbert::ground_state(params), params.n_max).unwrap()
    }

    pub fn vector(&self) -> Array1<C64> {
        Array1::from(self.psi.clone())
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.psi
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.vector())
    }

    /// `⟨a†a⟩_REC`
    pub fn photon_number(&self) -> f64 {
        self.photon_number
    }

    /// `⟨σ₊σ₋⟩_REC`
    pub fn atom_excitation(&self) -> f64 {
        self.atom_excitation
    }

    /// `⟨a⟩_REC`
    pub fn field(&self) -> C64 {
        self.field
    }

    /// `⟨A_θ⟩_REC = Re[⟨a⟩ e^{−iθ}]`
    pub fn quadrature(&self, theta: f64) -> f64 {
        (self.field * C64::from_polar(1.0, -theta)).re
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum()
    }

    fn normalize(&mut self, t: f64) -> Result<()> {
        let nrm = self.norm_sqr();
        if !(nrm > NORM_FLOOR) || !nrm.is_finite() {
            return Err(Error::IntegrationFault { t, reason: format!("state norm² = {nrm:e}") });
        }
        let s = 1.0 / nrm.sqrt();
        for z in self.psi.iter_mut() {
            *z *= s;
        }
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        let f = self.n_max + 1;
        let mut n = 0.0;
        let mut field = ZERO;
        for atom in 0..2 {
            let block = &self.psi[atom * f..(atom + 1) * f];
            for k in 1..f {
                let kf = k as f64;
                n += kf * block[k].norm_sqr();
                field += block[k - 1].conj() * block[k] * kf.sqrt();
            }
        }
        self.photon_number = n;
        self.atom_excitation = self.psi[f..].iter().map(|z| z.norm_sqr()).sum();
        self.field = field;
    }

    fn apply_lowering(&mut self) {
        let f = self.n_max + 1;
        for atom in 0..2 {
            let base = atom * f;
            for k in 1..f {
                self.scratch[base + k - 1] = self.psi[base + k] * (k as f64).sqrt();
            }
            self.scratch[base + f - 1] = ZERO;
        }
        std::mem::swap(&mut self.psi, &mut self.scratch);
    }

    fn apply_sigma_minus(&mut self) {
        let f = self.n_max + 1;
        for k in 0..f {
            self.scratch[basis_index(self.n_max, 0, k)] = self.psi[basis_index(self.n_max, 1, k)];
            self.scratch[basis_index(self.n_max, 1, k)] = ZERO;
        }
        std::mem::swap(&mut self.psi, &mut self.scratch);
    }
}

/// One exponential Euler–Maruyama step of the un-normalized SSE followed
/// by renormalization. Returns the homodyne increment
/// `dq = √(8κ(1−r))⟨A_θ⟩dt + dW`.
pub fn sse_step<R: Rng + ?Sized>(state: &mut ConditionedState, kernel: &StepKernel, t: f64, rng: &mut R) -> Result<f64> {
    sse_step_shifted(state, kernel, 0.0, t, rng)
}

/// As [`sse_step`] for a detuning `kernel.delta_omega() + shift`, applying
/// the excitation-number phase `exp(iδN dt/2)` on either side of the cached
/// propagator.
pub fn sse_step_shifted<R: Rng + ?Sized>(
    state: &mut ConditionedState,
    kernel: &StepKernel,
    shift: f64,
    t: f64,
    rng: &mut R,
) -> Result<f64> {
    let dt = kernel.dt;
    let z: f64 = rng.sample(StandardNormal);
    let dw = z * dt.sqrt();
    let dxi = kernel.signal_gain * state.quadrature(kernel.theta) * dt + dw;
    let d = kernel.dim;
    let f = kernel.n_max + 1;

    let use_shift = shift != 0.0;
    if use_shift {
        let w = C64::from_polar(1.0, 0.5 * shift * dt);
        let mut acc = C64::new(1.0, 0.0);
        for p in state.phases.iter_mut() {
            *p = acc;
            acc *= w;
        }
        for i in 0..d {
            state.psi[i] *= state.phases[kernel.excitation(i)];
        }
    }

    let coef = kernel.diffusion * dxi;
    for i in 0..d {
        let row = &kernel.u[i * d..(i + 1) * d];
        let mut acc = ZERO;
        for (u, p) in row.iter().zip(state.psi.iter()) {
            acc += u * p;
        }
        state.scratch[i] = acc;
    }
    if coef != ZERO {
        for atom in 0..2 {
            let base = atom * f;
            for k in 1..f {
                state.scratch[base + k - 1] += coef * kernel.sqrt_n[k] * state.psi[base + k];
            }
        }
    }
    std::mem::swap(&mut state.psi, &mut state.scratch);
    if use_shift {
        for i in 0..d {
            state.psi[i] *= state.phases[kernel.excitation(i)];
        }
    }
    state.normalize(t + dt)?;
    Ok(dxi)
}

/// Tests both collapse channels with independent uniform draws. Both
/// firing in one step is applied in random order, with the second event
/// stamped half a step later.
pub fn maybe_jump<R: Rng + ?Sized>(
    state: &mut ConditionedState,
    kernel: &StepKernel,
    t: f64,
    delta_omega: f64,
    rng: &mut R,
) -> Result<Vec<JumpEvent>> {
    let dt = kernel.dt;
    let p_apd = kernel.apd_rate * state.photon_number * dt;
    let p_sp = kernel.spont_rate * state.atom_excitation * dt;
    if p_apd + p_sp > MAX_JUMP_PROBABILITY {
        return Err(Error::StepTooLarge(format!(
            "jump probability {} per step exceeds {MAX_JUMP_PROBABILITY} at t = {t}",
            p_apd + p_sp
        )));
    }
    let u_apd: f64 = rng.random();
    let u_sp: f64 = rng.random();
    let fire_apd = u_apd < p_apd;
    let fire_sp = u_sp < p_sp;
    let mut order: Vec<JumpKind> = Vec::with_capacity(2);
    match (fire_apd, fire_sp) {
        (false, false) => return Ok(Vec::new()),
        (true, false) => order.push(JumpKind::Apd),
        (false, true) => order.push(JumpKind::Spontaneous),
        (true, true) => {
            log::warn!("both collapse channels fired at t = {t}");
            if rng.random::<bool>() {
                order.extend([JumpKind::Apd, JumpKind::Spontaneous]);
            } else {
                order.extend([JumpKind::Spontaneous, JumpKind::Apd]);
            }
        }
    }
    let mut events = Vec::with_capacity(order.len());
    for (k, kind) in order.into_iter().enumerate() {
        let saved = state.psi.clone();
        match kind {
            JumpKind::Apd => state.apply_lowering(),
            JumpKind::Spontaneous => state.apply_sigma_minus(),
        }
        if state.norm_sqr() <= NORM_FLOOR {
            log::warn!("dropping {} collapse of a state it annihilates at t = {t}", kind.as_str());
            state.psi = saved;
            continue;
        }
        state.normalize(t)?;
        events.push(JumpEvent { time: t + 0.5 * dt * k as f64, kind, delta_omega });
    }
    Ok(events)
}

/// Expectation of a collapse applied to an explicit state vector, for tests
/// and diagnostics.
pub fn collapse(psi: &Array1<C64>, kind: JumpKind, params: &SystemParams) -> Result<Array1<C64>> {
    let mut s = ConditionedState::new(psi, params.n_max)?;
    match kind {
        JumpKind::Apd => s.apply_lowering(),
        JumpKind::Spontaneous => s.apply_sigma_minus(),
    }
    s.normalize(0.0)?;
    Ok(s.vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{dressed_state, Branch};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn small() -> SystemParams {
        SystemParams { n_max: 4, g: 20.0, eps: 2.0, delta_omega: 20.0, tau_d_inv: 100.0, ..SystemParams::default() }
    }

    #[test]
    fn step_guards() {
        let p = SystemParams::default();
        assert!(matches!(StepKernel::new(&p, 1e-3), Err(Error::StepTooLarge(_))));
        assert!(StepKernel::new(&p, 1e-4).is_ok());
        let fast = SystemParams { tau_d_inv: 2e4, ..p };
        assert!(matches!(StepKernel::new(&fast, 1e-4), Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn norm_is_restored_every_step() {
        let p = small();
        let k = StepKernel::new(&p, 1e-3).unwrap();
        let mut s = ConditionedState::ground(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..5000 {
            maybe_jump(&mut s, &k, i as f64 * 1e-3, p.delta_omega, &mut rng).unwrap();
            sse_step(&mut s, &k, i as f64 * 1e-3, &mut rng).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn undriven_ground_state_is_dark() {
        let p = SystemParams { eps: 0.0, ..small() };
        let k = StepKernel::new(&p, 1e-3).unwrap();
        let mut s = ConditionedState::ground(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut sum = 0.0;
        let n = 20000;
        for i in 0..n {
            assert!(maybe_jump(&mut s, &k, i as f64, 0.0, &mut rng).unwrap().is_empty());
            sum += sse_step(&mut s, &k, 0.0, &mut rng).unwrap();
        }
        assert!((s.vector()[0].norm() - 1.0).abs() < 1e-12);
        let se = (n as f64 * 1e-3).sqrt();
        assert!(sum.abs() < 4.0 * se);
    }

    #[test]
    fn apd_collapse_of_upper_dressed_state() {
        let p = small();
        let u1 = dressed_state(1, Branch::U, &p).unwrap();
        let out = collapse(&u1.vector, JumpKind::Apd, &p).unwrap();
        // a(|+,0⟩ + |−,1⟩)/√2 = |−,0⟩/√2
        assert!((out[0].re - 1.0).abs() < 1e-12);
        let u2 = dressed_state(2, Branch::U, &p).unwrap();
        let out = collapse(&u2.vector, JumpKind::Apd, &p).unwrap();
        // a(|+,1⟩ + |−,2⟩)/√2 ∝ |+,0⟩ + √2|−,1⟩
        let s3 = 3f64.sqrt();
        assert!((out[basis_index(4, 1, 0)].re - 1.0 / s3).abs() < 1e-12);
        assert!((out[basis_index(4, 0, 1)].re - SQRT_2 / s3).abs() < 1e-12);
        let out = collapse(&u2.vector, JumpKind::Spontaneous, &p).unwrap();
        assert!((out[basis_index(4, 0, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn direct_detection_has_no_signal_term() {
        let p = SystemParams { r: 1.0, ..small() };
        let k = StepKernel::new(&p, 1e-3).unwrap();
        assert_eq!(k.signal_gain(), 0.0);
        assert_eq!(k.diffusion, ZERO);
    }

    fn shifted_deviation(shift: f64) -> f64 {
        let p = small();
        let dt = 1e-3;
        let base = StepKernel::new(&p, dt).unwrap();
        let moved = StepKernel::new(&p.with_delta_omega(p.delta_omega + shift), dt).unwrap();
        let mut a = ConditionedState::ground(&p);
        let mut b = a.clone();
        let mut ra = ChaCha8Rng::seed_from_u64(1);
        let mut rb = ChaCha8Rng::seed_from_u64(1);
        for i in 0..2000 {
            sse_step_shifted(&mut a, &base, shift, i as f64 * dt, &mut ra).unwrap();
            sse_step(&mut b, &moved, i as f64 * dt, &mut rb).unwrap();
        }
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn shifted_step_matches_rebuilt_kernel() {
        let d1 = shifted_deviation(0.02);
        let d2 = shifted_deviation(0.01);
        assert!(d1 < 1e-4, "{d1}");
        assert!((d1 / d2 - 2.0).abs() < 0.3, "{d1} {d2}");
    }

    #[test]
    fn wiener_increment_moments() {
        let p = SystemParams { eps: 0.0, ..small() };
        let dt = 1e-3;
        let k = StepKernel::new(&p, dt).unwrap();
        let mut s = ConditionedState::ground(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let dw = sse_step(&mut s, &k, 0.0, &mut rng).unwrap();
            m1 += dw;
            m2 += dw * dw;
        }
        let mean = m1 / n as f64;
        let var = m2 / n as f64 - mean * mean;
        assert!(mean.abs() < 3.0 * (dt / n as f64).sqrt());
        assert!((var / dt - 1.0).abs() < 0.02);
    }
}
