//! Dense complex linear algebra for operators on finite-dimensional
//! representations: Hermitian eigendecompositions, Schatten norms,
//! von Neumann entropy, partial traces and seeded random matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::{EIG_CLIP, STATE_TOL};

/// Dense complex square matrix; the operator type used throughout.
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

pub fn cr(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Hermitian eigendecomposition. The input is assumed self-adjoint; only its
/// Hermitian part enters the decomposition.
pub fn eigh(m: &CMat) -> (DVector<f64>, CMat) {
    let herm = (m + m.adjoint()).scale(0.5);
    let se = SymmetricEigen::new(herm);
    (se.eigenvalues, se.eigenvectors)
}

pub fn singular_values(m: &CMat) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Schatten p-norm from singular values; `p = f64::INFINITY` gives the
/// operator norm. Rejects p < 1.
pub fn schatten_norm(m: &CMat, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let sv = singular_values(m);
    if p.is_infinite() {
        return Ok(sv.iter().cloned().fold(0.0, f64::max));
    }
    if p == 1.0 {
        return Ok(sv.iter().sum());
    }
    if p == 2.0 {
        return Ok(sv.iter().map(|s| s * s).sum::<f64>().sqrt());
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Frobenius (Hilbert-Schmidt) inner product Tr[a† b].
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Max absolute entry; the cheap sup-distance used in residual checks.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Von Neumann entropy -Tr[rho log rho] in nats.
///
/// Requires a Hermitian PSD input with unit trace up to [`STATE_TOL`];
/// eigenvalues below [`EIG_CLIP`] are treated as exact zeros.
pub fn von_neumann_entropy(rho: &CMat) -> Result<f64> {
    let herm_dev = max_abs(&(rho - rho.adjoint()));
    if herm_dev > STATE_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "not Hermitian, deviation {herm_dev:.3e}"
        )));
    }
    let tr = trace(rho).re;
    if (tr - 1.0).abs() > STATE_TOL {
        return Err(Error::NotDensityMatrix(format!("trace {tr} != 1")));
    }
    let (vals, _) = eigh(rho);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -STATE_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {min:.3e}"
        )));
    }
    Ok(entropy_of_spectrum(vals.iter().cloned()))
}

/// -sum p log p with the 0 log 0 := 0 convention and clipping at [`EIG_CLIP`].
pub fn entropy_of_spectrum(vals: impl Iterator<Item = f64>) -> f64 {
    vals.filter(|&p| p > EIG_CLIP).map(|p| -p * p.ln()).sum()
}

/// Applies a scalar function to a Hermitian matrix through its spectrum.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let d = CMat::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| cr(f(x))),
    ));
    &vecs * d * vecs.adjoint()
}

/// Partial trace over the first tensor leg of an operator on
/// C^{d1} (x) C^{d2}; the result acts on the second leg.
pub fn partial_trace_first(m: &CMat, d1: usize, d2: usize) -> CMat {
    debug_assert_eq!(m.nrows(), d1 * d2);
    let mut out = CMat::zeros(d2, d2);
    for a in 0..d2 {
        for b in 0..d2 {
            let mut s = C_ZERO;
            for j in 0..d1 {
                s += m[(j * d2 + a, j * d2 + b)];
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// Partial trace over the second tensor leg; the result acts on the first.
pub fn partial_trace_second(m: &CMat, d1: usize, d2: usize) -> CMat {
    debug_assert_eq!(m.nrows(), d1 * d2);
    let mut out = CMat::zeros(d1, d1);
    for a in 0..d1 {
        for b in 0..d1 {
            let mut s = C_ZERO;
            for j in 0..d2 {
                s += m[(a * d2 + j, b * d2 + j)];
            }
            out[(a, b)] = s;
        }
    }
    out
}

/// Complex Ginibre matrix with iid standard complex Gaussian entries.
pub fn random_ginibre(dim: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// GUE-like random Hermitian matrix, normalized to operator norm <= ~1 scale.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(dim, rng);
    (&g + g.adjoint()).scale(0.5 / (dim as f64).sqrt())
}

/// Haar-random unit vector.
pub fn random_unit_vector(dim: usize, rng: &mut impl Rng) -> CVec {
    let mut v = CVec::from_fn(dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let n = v.norm();
    v /= cr(n);
    v
}

/// Random density matrix G G† / Tr[G G†] with Ginibre G.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> CMat {
    let g = random_ginibre(dim, rng);
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    m.scale(1.0 / t)
}

pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schatten_identity() {
        // ||1||_p = d^{1/p}
        for d in [2usize, 5] {
            let id = identity(d);
            for p in [1.0, 2.0, 3.5, f64::INFINITY] {
                let expect = if p.is_infinite() { 1.0 } else { (d as f64).powf(1.0 / p) };
                assert!((schatten_norm(&id, p).unwrap() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schatten_rank_one_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_unit_vector(4, &mut rng);
        let p = projector(&v);
        assert!((schatten_norm(&p, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((schatten_norm(&p, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schatten_rejects_small_p() {
        let id = identity(2);
        assert!(matches!(schatten_norm(&id, 0.5), Err(Error::InvalidExponent(_))));
    }

    #[test]
    fn schatten_triangle_and_hoelder() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = random_ginibre(5, &mut rng);
            let b = random_ginibre(5, &mut rng);
            for p in [1.0, 2.0, f64::INFINITY] {
                let lhs = schatten_norm(&(&a + &b), p).unwrap();
                let rhs = schatten_norm(&a, p).unwrap() + schatten_norm(&b, p).unwrap();
                assert!(lhs <= rhs + 1e-12);
            }
            let lhs = schatten_norm(&(&a * &b), 1.0).unwrap();
            let rhs = schatten_norm(&a, 2.0).unwrap() * schatten_norm(&b, 2.0).unwrap();
            assert!(lhs <= rhs + 1e-12);
        }
    }

    #[test]
    fn schatten_monotone_in_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_ginibre(4, &mut rng);
            let n_inf = schatten_norm(&a, f64::INFINITY).unwrap();
            let n2 = schatten_norm(&a, 2.0).unwrap();
            let n1 = schatten_norm(&a, 1.0).unwrap();
            assert!(n_inf <= n2 + 1e-12 && n2 <= n1 + 1e-12);
        }
    }

    #[test]
    fn entropy_pure_and_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_unit_vector(3, &mut rng);
        let pure = projector(&v);
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-10);

        let d = 7usize;
        let mixed = identity(d).scale(1.0 / d as f64);
        assert!((von_neumann_entropy(&mixed).unwrap() - (d as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_three_quarters() {
        let rho = CMat::from_diagonal(&DVector::from_vec(vec![cr(0.75), cr(0.25)]));
        let expect = -(0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((von_neumann_entropy(&rho).unwrap() - expect).abs() < 1e-13);
    }

    #[test]
    fn entropy_rejects_bad_states() {
        let not_unit = identity(2);
        assert!(von_neumann_entropy(&not_unit).is_err());
        let neg = CMat::from_diagonal(&DVector::from_vec(vec![cr(1.5), cr(-0.5)]));
        assert!(von_neumann_entropy(&neg).is_err());
    }

    #[test]
    fn partial_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_ginibre(2, &mut rng);
        let b = random_ginibre(3, &mut rng);
        let kron = a.kronecker(&b);
        let tb = trace(&b);
        let ta = trace(&a);
        assert!(max_abs(&(partial_trace_second(&kron, 2, 3) - &a * tb)) < 1e-12);
        assert!(max_abs(&(partial_trace_first(&kron, 2, 3) - &b * ta)) < 1e-12);
    }

    #[test]
    fn hermitian_function_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = random_hermitian(4, &mut rng);
        let sq = hermitian_function(&h, |x| x * x);
        assert!(max_abs(&(&sq - &h * &h)) < 1e-12);
    }
}
