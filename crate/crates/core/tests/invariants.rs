use std::f64::consts::PI;

use jcwave::hilbert::{build_jc_hamiltonian, dressed_state, Branch};
use jcwave::liouville::{build_liouvillian, steady_state, Correlator, DensityMatrix, Propagator};
use jcwave::trajectories::{filter_step, Observer, PhotocurrentFilter, Protocol, StepSample, TrajectoryEngine};
use jcwave::SystemParams;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn small() -> impl Strategy<Value = SystemParams> {
    (1.0..40.0f64, 0.0..4.0f64, 0.1..5.0f64, -60.0..60.0f64, 0.0..PI, 0.0..1.0f64, 2usize..5).prop_map(
        |(g, gamma, eps, delta_omega, theta, r, n_max)| SystemParams {
            g,
            gamma,
            eps,
            delta_omega,
            theta,
            r,
            n_max,
            tau_d_inv: 5.0 * g,
            ..SystemParams::default()
        },
    )
}

struct Norm(f64);

impl Observer for Norm {
    fn step(&mut self, s: &StepSample<'_>) {
        self.0 = self.0.max((s.state.norm_sqr() - 1.0).abs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn liouvillian_preserves_trace(p in small()) {
        prop_assert!(build_liouvillian(&p).trace_defect() < 1e-10);
    }

    #[test]
    fn steady_state_is_a_density_matrix(p in small()) {
        let ss = steady_state(&build_liouvillian(&p)).unwrap();
        prop_assert!(ss.rho.hermiticity_defect() < 1e-10);
        prop_assert!((ss.rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(ss.rho.min_eigenvalue().unwrap() > -1e-9);
        prop_assert!(ss.residual < 1e-9);
    }

    #[test]
    fn propagation_keeps_trace_and_hermiticity(p in small(), t in 0.0..3.0f64) {
        let rho = Propagator::new(&build_liouvillian(&p)).unwrap().propagate(&DensityMatrix::ground(&p), t).unwrap();
        prop_assert!(rho.hermiticity_defect() < 1e-9);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-9);
    }

    #[test]
    fn h_is_real_and_finite(p in small(), theta in 0.0..PI) {
        let c = Correlator::new(&p).unwrap();
        if c.mean_quadrature(theta).abs() > 1e-3 {
            let s = c.h(theta, &[-0.5, 0.0, 0.5]).unwrap();
            prop_assert!(s.values.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn trajectory_norm_is_conserved(p in small(), seed in 0u64..1000) {
        let e = TrajectoryEngine::new(&p, Protocol::Fixed { duration: 0.5 }, 1e-3).unwrap();
        let mut n = Norm(0.0);
        e.run_observed(seed, 0, &mut n).unwrap();
        prop_assert!(n.0 < 1e-10);
    }

    #[test]
    fn filter_is_bounded(inputs in proptest::collection::vec(-1.0..1.0f64, 1..400), rate in 1.0..900.0f64) {
        let dt = 1e-3;
        let mut f = PhotocurrentFilter::new(rate);
        for dq in inputs {
            f = filter_step(f, dq * dt, dt).unwrap();
            prop_assert!(f.value.abs() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn dressed_states_are_orthonormal_eigenstates() {
    let p = SystemParams { n_max: 6, delta_omega: 0.0, eps: 0.0, ..SystemParams::default() };
    let h = build_jc_hamiltonian(&p);
    let states: Vec<_> = (1..=6).flat_map(|n| [Branch::U, Branch::L].map(|b| dressed_state(n, b, &p).unwrap())).collect();
    for (i, a) in states.iter().enumerate() {
        let resid = &h.apply(&a.vector) - &a.vector.mapv(|z| z * a.energy);
        assert!(resid.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-9);
        for (j, b) in states.iter().enumerate() {
            let ip: C64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x.conj() * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((ip.norm() - want).abs() < 1e-12);
        }
    }
    assert!(dressed_state(7, Branch::U, &p).is_err());
}
