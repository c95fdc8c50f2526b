//! Lindblad superoperator, steady state and density-matrix propagation.
//!
//! ```text
//! ℒρ = −i[H, ρ] + κ(2aρa† − a†aρ − ρa†a) + (γ/2)(2σ₋ρσ₊ − σ₊σ₋ρ − ρσ₊σ₋)
//! ```
//!
//! Density matrices are vectorized by stacking columns, so a superoperator
//! acts on `vec(ρ)` of length `D²` with `D = 2(n_max + 1)`.

pub mod correlation;
pub mod wigner;

use ndarray::{s, Array1, Array2, ArrayView2};
use ndarray_linalg::{Eig, Factorize, Inverse, Solve, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{self, build_operators, Operators, QOperator, SystemParams};
use crate::linalg::{self, kron, ONE, ZERO};

pub use correlation::{correlation_g2, correlation_h, tau_grid, CorrelationKind, CorrelationSeries, Correlator, Method};
pub use wigner::{partial_trace_atom, wigner, GridSpec, WignerGrid};

/// Dense `D² × D²` generator acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    m: Array2<C64>,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, m: Array2<C64>) -> Self {
        assert_eq!(m.dim(), (dim * dim, dim * dim), "superoperator shape");
        Self { dim, m }
    }

    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn apply(&self, rho: &ArrayView2<C64>) -> Array2<C64> {
        let v = self.m.dot(&linalg::vectorize(rho));
        linalg::unvectorize(v.as_slice().unwrap(), self.dim)
    }

    /// Largest `|Σ_i (ℒ)_{(i,i),k}|` over columns: zero for a trace-preserving
    /// generator.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim;
        (0..d * d)
            .map(|k| (0..d).map(|i| self.m[[i + i * d, k]]).sum::<C64>().norm())
            .fold(0.0, f64::max)
    }
}

/// `D ⊗ D` superoperator for `ρ ↦ AρB`.
fn sandwich(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    kron(&b.t(), &a.view())
}

fn dissipator(c: &QOperator, rate: f64, d: usize) -> Array2<C64> {
    let eye = linalg::identity(d);
    let cd = c.dagger();
    let cdc = (&cd * c).into_matrix();
    let jump = sandwich(c.matrix(), cd.matrix());
    let left = sandwich(&cdc, &eye);
    let right = sandwich(&eye, &cdc);
    (jump * C64::new(2.0 * rate, 0.0)) - (left + right) * C64::new(rate, 0.0)
}

pub fn build_liouvillian(params: &SystemParams) -> Superoperator {
    let ops = build_operators(params);
    liouvillian_from(&ops, params)
}

pub(crate) fn liouvillian_from(ops: &Operators, params: &SystemParams) -> Superoperator {
    let d = params.dim();
    let eye = linalg::identity(d);
    let h = hilbert::jc_hamiltonian_from(ops, params).into_matrix();
    let mut m = (sandwich(&h, &eye) - sandwich(&eye, &h)) * C64::new(0.0, -1.0);
    if params.kappa > 0.0 {
        m = m + dissipator(&ops.a, params.kappa, d);
    }
    if params.gamma > 0.0 {
        m = m + dissipator(&ops.sigma_minus, 0.5 * params.gamma, d);
    }
    Superoperator { dim: d, m }
}

/// A density matrix on the truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: Array2<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(m: Array2<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "density matrix must be square");
        Self { m }
    }

    pub fn pure(psi: &Array1<C64>) -> Self {
        let d = psi.len();
        Self { m: Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj()) }
    }

    pub fn ground(params: &SystemParams) -> Self {
        Self::pure(&hilbert::ground_state(params))
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.m.view())
    }

    /// `tr(Oρ)`
    pub fn expectation(&self, op: &QOperator) -> C64 {
        let o = op.matrix();
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += o[[i, k]] * self.m[[k, i]];
            }
        }
        acc
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.m.view())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(&self.m.view())?[0])
    }

    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        linalg::trace_distance(&self.m.view(), &other.m.view())
    }

    /// Hermitian part rescaled to unit trace.
    pub fn normalized(&self) -> Self {
        let h = linalg::hermitize(&self.m.view());
        let tr = linalg::trace(&h.view()).re;
        Self { m: h.mapv(|z| z / tr) }
    }

    /// Checks Hermiticity and unit trace within `1e−10` and the eigenvalue
    /// floor `−1e−8`.
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > 1e-10 {
            return Err(Error::Linalg(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-10 {
            return Err(Error::Linalg(format!("density matrix trace {tr}")));
        }
        let lo = self.min_eigenvalue()?;
        if lo < -1e-8 {
            return Err(Error::Linalg(format!("density matrix eigenvalue {lo:e} below floor")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// False when the null space of ℒ has dimension > 1; `rho` is then the
    /// normalized projection of the maximally mixed state onto it.
    pub unique: bool,
    /// `‖ℒ vec(ρ)‖₂` after normalization.
    pub residual: f64,
}

fn solve_with_trace_row(l: &Superoperator, row: usize) -> Result<Array1<C64>> {
    let d = l.dim;
    let mut a = l.m.clone();
    a.row_mut(row).fill(ZERO);
    for i in 0..d {
        a[[row, i + i * d]] = ONE;
    }
    let mut b = Array1::zeros(d * d);
    b[row] = ONE;
    let lu = a.factorize()?;
    let mut x = lu.solve(&b)?;
    // one step of iterative refinement
    let r = &b - &a.dot(&x);
    x = x + lu.solve(&r)?;
    Ok(x)
}

fn residual(l: &Superoperator, rho: &DensityMatrix) -> f64 {
    let v = l.m.dot(&linalg::vectorize(&rho.m.view()));
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Null-space solve of `ℒρ = 0` with the trace condition substituted for
/// one equation. Multistability is detected by repeating the solve with a
/// different substituted row and confirmed with an SVD.
pub fn steady_state(l: &Superoperator) -> Result<SteadyState> {
    let d = l.dim;
    let first = solve_with_trace_row(l, 0);
    let second = solve_with_trace_row(l, d * d - 1);
    if let (Ok(x0), Ok(x1)) = (&first, &second) {
        let r0 = DensityMatrix::from_matrix(linalg::unvectorize(x0.as_slice().unwrap(), d)).normalized();
        let r1 = DensityMatrix::from_matrix(linalg::unvectorize(x1.as_slice().unwrap(), d)).normalized();
        let res = residual(l, &r0);
        if r0.trace_distance(&r1)? < 1e-7 && res < 1e-8 {
            return Ok(SteadyState { rho: r0, unique: true, residual: res });
        }
    }
    nullspace_steady_state(l)
}

fn nullspace_steady_state(l: &Superoperator) -> Result<SteadyState> {
    let d = l.dim;
    let (_, sigma, vt) = l.m.svd(false, true)?;
    let vt = vt.ok_or_else(|| Error::Linalg("SVD returned no right vectors".into()))?;
    let smax = sigma[0];
    let null: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] <= 1e-9 * smax.max(1.0)).collect();
    if null.is_empty() {
        return Err(Error::Linalg(format!(
            "Liouvillian has no null vector (smallest singular value {:e})",
            sigma[sigma.len() - 1]
        )));
    }
    let mixed = linalg::vectorize(&linalg::identity(d).mapv(|z| z / d as f64).view());
    let mut proj = Array1::<C64>::zeros(d * d);
    for &k in &null {
        let v = vt.row(k).mapv(|z| z.conj());
        let overlap: C64 = v.iter().zip(mixed.iter()).map(|(a, b)| a.conj() * b).sum();
        proj = proj + v.mapv(|z| z * overlap);
    }
    if null.len() == 1 && proj.iter().all(|z| z.norm() < 1e-14) {
        proj = vt.row(null[0]).mapv(|z| z.conj());
    }
    let rho = DensityMatrix::from_matrix(linalg::unvectorize(proj.as_slice().unwrap(), d)).normalized();
    let unique = null.len() == 1;
    if !unique {
        log::warn!("steady state is not unique: null space of dimension {}", null.len());
    }
    let res = residual(l, &rho);
    Ok(SteadyState { rho, unique, residual: res })
}

enum PropagatorKind {
    Eigen {
        vals: Array1<C64>,
        vecs: Array2<C64>,
        inv: Array2<C64>,
    },
    Pade,
}

/// `e^{ℒτ}` by exact diagonalization of ℒ, with a Padé exponential used
/// when the eigenbasis is too ill-conditioned.
pub struct Propagator {
    l: Superoperator,
    kind: PropagatorKind,
}

impl Propagator {
    pub fn new(l: &Superoperator) -> Result<Self> {
        match Self::eigen(l) {
            Ok(kind) => Ok(Self { l: l.clone(), kind }),
            Err(e) => {
                log::warn!("Liouvillian diagonalization rejected ({e}); using Padé exponential");
                Ok(Self { l: l.clone(), kind: PropagatorKind::Pade })
            }
        }
    }

    /// Forces the scaling-and-squaring path.
    pub fn pade(l: &Superoperator) -> Self {
        Self { l: l.clone(), kind: PropagatorKind::Pade }
    }

    fn eigen(l: &Superoperator) -> Result<PropagatorKind> {
        let (vals, vecs) = l.m.eig()?;
        let inv = vecs.inv()?;
        let scale = linalg::max_abs(&l.m.view()).max(1.0);
        let lv = l.m.dot(&vecs);
        let mut worst = 0.0_f64;
        for ((i, j), z) in lv.indexed_iter() {
            worst = worst.max((z - vecs[[i, j]] * vals[j]).norm());
        }
        if worst > 1e-9 * scale {
            return Err(Error::Linalg(format!("eigen residual {worst:e}")));
        }
        let id_defect = {
            let p = inv.dot(&vecs);
            let mut w = 0.0_f64;
            for ((i, j), z) in p.indexed_iter() {
                w = w.max((z - if i == j { ONE } else { ZERO }).norm());
            }
            w
        };
        if id_defect > 1e-7 {
            return Err(Error::Linalg(format!("eigenbasis ill-conditioned (V⁻¹V defect {id_defect:e})")));
        }
        Ok(PropagatorKind::Eigen { vals, vecs, inv })
    }

    pub fn is_eigen(&self) -> bool {
        matches!(self.kind, PropagatorKind::Eigen { .. })
    }

    pub fn superoperator(&self) -> &Superoperator {
        &self.l
    }

    /// Eigenvalues of ℒ when the diagonalization path is active.
    pub fn eigenvalues(&self) -> Option<&Array1<C64>> {
        match &self.kind {
            PropagatorKind::Eigen { vals, .. } => Some(vals),
            PropagatorKind::Pade => None,
        }
    }

    fn check_tau(tau: f64) -> Result<()> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "tau",
                value: tau,
                reason: "propagation time must be finite and non-negative",
            });
        }
        Ok(())
    }

    /// `e^{ℒτ} v` for a vectorized operator `v`.
    pub fn propagate_vec(&self, v: &Array1<C64>, tau: f64) -> Result<Array1<C64>> {
        Self::check_tau(tau)?;
        match &self.kind {
            PropagatorKind::Eigen { vals, vecs, inv } => {
                let c = inv.dot(v);
                let w: Array1<C64> = c.iter().zip(vals.iter()).map(|(c, l)| c * (l * tau).exp()).collect();
                Ok(vecs.dot(&w))
            }
            PropagatorKind::Pade => {
                let e = linalg::expm(&self.l.m.mapv(|z| z * tau).view())?;
                Ok(e.dot(v))
            }
        }
    }

    /// Applies `e^{ℒτ}` to an arbitrary operator (not necessarily a state).
    pub fn propagate_operator(&self, x: &ArrayView2<C64>, tau: f64) -> Result<Array2<C64>> {
        let v = self.propagate_vec(&linalg::vectorize(x), tau)?;
        Ok(linalg::unvectorize(v.as_slice().unwrap(), self.l.dim))
    }

    pub fn propagate(&self, rho: &DensityMatrix, tau: f64) -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_matrix(self.propagate_operator(&rho.m.view(), tau)?))
    }

    /// Precomputes `τ ↦ tr[O e^{ℒτ}(X)]` for repeated evaluation.
    pub fn expectation_series(&self, observable: &Array2<C64>, x: &ArrayView2<C64>) -> ExpectationSeries {
        let d = self.l.dim;
        let o = linalg::vectorize(&observable.t());
        match &self.kind {
            PropagatorKind::Eigen { vals, vecs, inv } => {
                let c = inv.dot(&linalg::vectorize(x));
                let ov = o.dot(vecs);
                let weights: Array1<C64> = ov.iter().zip(c.iter()).map(|(a, b)| a * b).collect();
                ExpectationSeries::Modes { rates: vals.clone(), weights }
            }
            PropagatorKind::Pade => ExpectationSeries::Direct {
                l: self.l.m.clone(),
                o,
                x: linalg::vectorize(x),
                d,
            },
        }
    }
}

/// Evaluator for `tr[O e^{ℒτ}(X)]`.
pub enum ExpectationSeries {
    Modes { rates: Array1<C64>, weights: Array1<C64> },
    Direct { l: Array2<C64>, o: Array1<C64>, x: Array1<C64>, d: usize },
}

impl ExpectationSeries {
    pub fn at(&self, tau: f64) -> Result<C64> {
        Propagator::check_tau(tau)?;
        match self {
            ExpectationSeries::Modes { rates, weights } => {
                Ok(rates.iter().zip(weights.iter()).map(|(l, w)| w * (l * tau).exp()).sum())
            }
            ExpectationSeries::Direct { l, o, x, .. } => {
                let e = linalg::expm(&l.mapv(|z| z * tau).view())?;
                Ok(o.dot(&e.dot(x)))
            }
        }
    }
}

/// Steady-state `⟨a†a⟩` as a function of drive detuning.
pub fn steady_photon_number(params: &SystemParams) -> Result<f64> {
    let ops = build_operators(params);
    let ss = steady_state(&liouvillian_from(&ops, params))?;
    Ok(ss.rho.expectation(&ops.photon_number()).re)
}

/// Locates the maximum of `⟨a†a⟩_ss(Δω)` on `[lo, hi]`: a uniform scan with
/// `n_grid` points followed by golden-section refinement to `tol`.
pub fn locate_photon_peak(params: &SystemParams, lo: f64, hi: f64, n_grid: usize, tol: f64) -> Result<(f64, f64)> {
    if !(hi > lo) || n_grid < 3 {
        return Err(Error::Unsupported("peak search needs hi > lo and at least 3 grid points".into()));
    }
    let f = |dw: f64| steady_photon_number(&params.with_delta_omega(dw));
    let step = (hi - lo) / (n_grid - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for k in 0..n_grid {
        let x = lo + step * k as f64;
        let y = f(x)?;
        if y > best.1 {
            best = (x, y);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Slices the `(atom, atom')` block of a composite-space matrix.
pub(crate) fn atom_block(m: &Array2<C64>, n_max: usize, s: usize, t: usize) -> ArrayView2<'_, C64> {
    let f = n_max + 1;
    m.slice(s![s * f..(s + 1) * f, t * f..(t + 1) * f])
}
