//! Small dense complex helpers shared by the operator, superoperator and
//! trajectory code. Vectorization is column-stacking throughout:
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{EigValsh, Inverse, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::<C64>::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        for ((k, l), &y) in b.indexed_iter() {
            out[[i * br + k, j * bc + l]] = x * y;
        }
    }
    out
}

/// Column-stacked vectorization.
pub fn vectorize(m: &ArrayView2<C64>) -> Array1<C64> {
    let (r, c) = m.dim();
    let mut v = Array1::zeros(r * c);
    for j in 0..c {
        for i in 0..r {
            v[i + j * r] = m[[i, j]];
        }
    }
    v
}

pub fn unvectorize(v: &[C64], dim: usize) -> Array2<C64> {
    assert_eq!(v.len(), dim * dim, "unvectorize: length mismatch");
    Array2::from_shape_fn((dim, dim), |(i, j)| v[i + j * dim])
}

pub fn dagger(m: &ArrayView2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &ArrayView2<C64>) -> C64 {
    m.diag().sum()
}

pub fn norm1(m: &ArrayView2<C64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &ArrayView2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermiticity, relative to `max(1, max|m_ij|)`.
pub fn hermiticity_defect(m: &ArrayView2<C64>) -> f64 {
    let scale = max_abs(m).max(1.0);
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst / scale
}

pub fn hermitize(m: &ArrayView2<C64>) -> Array2<C64> {
    (m.to_owned() + dagger(m)).mapv(|z| z * 0.5)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &ArrayView2<C64>) -> Result<Vec<f64>> {
    let h = hermitize(m);
    let vals = h.eigvalsh(UPLO::Lower)?;
    Ok(vals.to_vec())
}

/// Trace distance `½‖ρ − σ‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Result<f64> {
    let d = a.to_owned() - b;
    Ok(0.5 * eigvalsh(&d.view())?.iter().map(|x| x.abs()).sum::<f64>())
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Linalg("expm of a non-square matrix".into()));
    }
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::Linalg("expm of a non-finite matrix".into()));
    }
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / 2f64.powi(s));
    let eye = identity(n);
    let b = PADE13;
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let c = |k: usize| C64::new(b[k], 0.0);
    let inner_u = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let u = a.dot(&(a6.dot(&inner_u) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &eye * c(1)));
    let inner_v = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = a6.dot(&inner_v) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &eye * c(0);

    let denom = (&v - &u).inv()?;
    let mut r = denom.dot(&(&v + &u));
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn expm_of_diagonal_matches_scalar_exponentials() {
        let d = array![[C64::new(-3.0, 40.0), ZERO], [ZERO, C64::new(0.5, -7.0)]];
        let e = expm(&d.view()).unwrap();
        assert!((e[[0, 0]] - d[[0, 0]].exp()).norm() < 1e-12 * d[[0, 0]].exp().norm().max(1.0));
        assert!((e[[1, 1]] - d[[1, 1]].exp()).norm() < 1e-12);
        assert!(e[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-i t σx) = cos t − i sin t σx
        let t = 37.3_f64;
        let gen = array![[ZERO, C64::new(0.0, -t)], [C64::new(0.0, -t), ZERO]];
        let e = expm(&gen.view()).unwrap();
        assert!((e[[0, 0]] - C64::new(t.cos(), 0.0)).norm() < 1e-11);
        assert!((e[[0, 1]] - C64::new(0.0, -t.sin())).norm() < 1e-11);
    }

    #[test]
    fn kron_and_vectorization_identity() {
        let a = array![[C64::new(1.0, 2.0), C64::new(0.0, 1.0)], [C64::new(3.0, 0.0), C64::new(-1.0, 0.5)]];
        let x = array![[C64::new(0.2, 0.0), C64::new(1.0, -1.0)], [C64::new(0.0, 2.0), C64::new(4.0, 0.0)]];
        let b = array![[C64::new(0.0, 1.0), C64::new(2.0, 0.0)], [C64::new(1.0, 1.0), C64::new(0.0, 0.0)]];
        let lhs = vectorize(&a.dot(&x).dot(&b).view());
        let rhs = kron(&b.t(), &a.view()).dot(&vectorize(&x.view()));
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            assert!((l - r).norm() < 1e-12);
        }
        let back = unvectorize(lhs.as_slice().unwrap(), 2);
        assert!((back - a.dot(&x).dot(&b)).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let p = array![[ONE, ZERO], [ZERO, ZERO]];
        let q = array![[ZERO, ZERO], [ZERO, ONE]];
        assert!((trace_distance(&p.view(), &q.view()).unwrap() - 1.0).abs() < 1e-12);
    }
}
