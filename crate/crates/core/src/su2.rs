//! Irreducible SU(2) representations: spin matrices, rotations, coherent
//! states, the invariant transpose and the Casimir acting on operators.
//!
//! Basis convention: rows and columns are ordered by descending magnetic
//! index m = J, J-1, ..., -J, so `S_z` is `diag(J, ..., -J)`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{cr, eigh, CMat, CVec, C_ZERO};

/// Spin operators of the spin-J irreducible representation.
#[derive(Debug, Clone)]
pub struct IrrepOps {
    pub j: HalfInt,
    pub sz: CMat,
    pub splus: CMat,
    pub sminus: CMat,
}

impl IrrepOps {
    pub fn sx(&self) -> CMat {
        (&self.splus + &self.sminus).scale(0.5)
    }

    pub fn sy(&self) -> CMat {
        (&self.splus - &self.sminus) * Complex64::new(0.0, -0.5)
    }

    /// S_x^2 + S_y^2 + S_z^2; equals J(J+1) times the identity.
    pub fn casimir(&self) -> CMat {
        &self.sz * &self.sz
            + (&self.splus * &self.sminus + &self.sminus * &self.splus).scale(0.5)
    }

    /// omega . S for a direction vector omega.
    pub fn dot(&self, omega: [f64; 3]) -> CMat {
        self.sx().scale(omega[0]) + self.sy().scale(omega[1]) + self.sz.scale(omega[2])
    }
}

/// Builds S_z and the ladder operators S_± with
/// S_± |m> = sqrt((J∓m)(J±m+1)) |m±1>.
pub fn spin_operators(j: HalfInt) -> IrrepOps {
    let dim = j.dim();
    let mut sz = CMat::zeros(dim, dim);
    let mut sp = CMat::zeros(dim, dim);
    let mut sm = CMat::zeros(dim, dim);
    let jv = j.value();
    for (row, m) in j.magnetic_indices().enumerate() {
        let mv = m.value();
        sz[(row, row)] = cr(mv);
        // S_+ |m> lands one row up (larger m), S_- one row down.
        if row > 0 {
            sp[(row - 1, row)] = cr(((jv - mv) * (jv + mv + 1.0)).sqrt());
        }
        if row + 1 < dim {
            sm[(row + 1, row)] = cr(((jv + mv) * (jv - mv + 1.0)).sqrt());
        }
    }
    IrrepOps { j, sz, splus: sp, sminus: sm }
}

/// Rotation engine for one representation, caching the eigendecomposition
/// of S_y so that R(phi, theta) and coherent vectors cost O(dim^2) each.
#[derive(Debug, Clone)]
pub struct Rotor {
    pub j: HalfInt,
    sy_vals: DVector<f64>,
    sy_vecs: CMat,
}

impl Rotor {
    pub fn new(j: HalfInt) -> Self {
        let ops = spin_operators(j);
        let (vals, vecs) = eigh(&ops.sy());
        Rotor { j, sy_vals: vals, sy_vecs: vecs }
    }

    fn exp_theta(&self, theta: f64) -> CMat {
        let d = CMat::from_diagonal(&DVector::from_iterator(
            self.sy_vals.len(),
            self.sy_vals.iter().map(|&l| Complex64::new(0.0, -theta * l).exp()),
        ));
        &self.sy_vecs * d * self.sy_vecs.adjoint()
    }

    /// R(phi, theta) = exp(-i phi S_z) exp(-i theta S_y).
    pub fn rotation(&self, phi: f64, theta: f64) -> CMat {
        let mut r = self.exp_theta(theta);
        for (row, m) in self.j.magnetic_indices().enumerate() {
            let ph = Complex64::new(0.0, -phi * m.value()).exp();
            for c in 0..r.ncols() {
                r[(row, c)] *= ph;
            }
        }
        r
    }

    /// Coherent vector |omega; i> = R(phi, theta) |i> where (theta, phi) are
    /// the spherical coordinates of the direction `omega`.
    pub fn coherent(&self, theta: f64, phi: f64, i: HalfInt) -> Result<CVec> {
        if !self.j.admits(i) {
            return Err(Error::IndexOutOfRange { j: self.j, i });
        }
        let col = self.j.index_of(i);
        let start = self.sy_vecs.row(col).adjoint(); // V† e_col as a column
        let mut v = CVec::zeros(self.j.dim());
        for k in 0..v.len() {
            let mut acc = C_ZERO;
            for l in 0..v.len() {
                acc += self.sy_vecs[(k, l)]
                    * Complex64::new(0.0, -theta * self.sy_vals[l]).exp()
                    * start[l];
            }
            v[k] = acc;
        }
        for (row, m) in self.j.magnetic_indices().enumerate() {
            v[row] *= Complex64::new(0.0, -phi * m.value()).exp();
        }
        Ok(v)
    }
}

/// One-shot Wigner rotation matrix; use [`Rotor`] for repeated calls.
pub fn wigner_rotation(j: HalfInt, phi: f64, theta: f64) -> CMat {
    Rotor::new(j).rotation(phi, theta)
}

/// Spherical angles (theta, phi) of a unit vector, rejecting vectors whose
/// norm deviates from 1 by more than 1e-12.
pub fn unit_vector_angles(omega: [f64; 3]) -> Result<(f64, f64)> {
    let n = (omega[0] * omega[0] + omega[1] * omega[1] + omega[2] * omega[2]).sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitVector(format!("{omega:?}")));
    }
    let theta = omega[2].clamp(-1.0, 1.0).acos();
    let phi = omega[1].atan2(omega[0]);
    Ok((theta, phi))
}

/// Coherent vector |omega; i> in the spin-J representation.
pub fn coherent_vector(j: HalfInt, omega: [f64; 3], i: HalfInt) -> Result<CVec> {
    let (theta, phi) = unit_vector_angles(omega)?;
    Rotor::new(j).coherent(theta, phi, i)
}

/// The real signed exchange matrix V with V|m> = (-1)^{J-m} |-m>, i.e. the
/// linear part of the invariant anti-unitary.
pub fn conjugation_matrix(j: HalfInt) -> CMat {
    let dim = j.dim();
    let mut v = CMat::zeros(dim, dim);
    for c in 0..dim {
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        v[(dim - 1 - c, c)] = cr(sign);
    }
    v
}

/// Transpose with respect to the invariant bilinear form,
/// rho^beta = U rho† U^{-1} with the anti-unitary U. In matrix terms this is
/// V rho^T V^T with V the signed exchange matrix.
pub fn beta_transpose(rho: &CMat, j: HalfInt) -> Result<CMat> {
    if rho.nrows() != j.dim() || rho.ncols() != j.dim() {
        return Err(Error::DimensionMismatch { expected: j.dim(), found: rho.nrows() });
    }
    let v = conjugation_matrix(j);
    Ok(&v * rho.transpose() * v.transpose())
}

/// The Casimir acting on operators by iterated commutators, evaluated in the
/// ladder form 2J(J+1) rho - 2 S_z rho S_z - S_+ rho S_- - S_- rho S_+.
pub fn casimir_superop(rho: &CMat, j: HalfInt) -> Result<CMat> {
    if rho.nrows() != j.dim() || rho.ncols() != j.dim() {
        return Err(Error::DimensionMismatch { expected: j.dim(), found: rho.nrows() });
    }
    let ops = spin_operators(j);
    let jj = j.value() * (j.value() + 1.0);
    Ok(rho.scale(2.0 * jj)
        - (&ops.sz * rho * &ops.sz).scale(2.0)
        - &ops.splus * rho * &ops.sminus
        - &ops.sminus * rho * &ops.splus)
}

/// Same Casimir through the defining double-commutator sum; kept as an
/// independent route for tests.
pub fn casimir_superop_commutators(rho: &CMat, j: HalfInt) -> Result<CMat> {
    if rho.nrows() != j.dim() {
        return Err(Error::DimensionMismatch { expected: j.dim(), found: rho.nrows() });
    }
    let ops = spin_operators(j);
    let mut out = CMat::zeros(j.dim(), j.dim());
    for s in [ops.sx(), ops.sy(), ops.sz.clone()] {
        let inner = &s * rho - rho * &s;
        out += &s * &inner - &inner * &s;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, identity, max_abs, random_ginibre, schatten_norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn all_j_up_to(max_twice: i64) -> impl Iterator<Item = HalfInt> {
        (0..=max_twice).map(HalfInt::from_twice)
    }

    #[test]
    fn spin_half_matrices() {
        let ops = spin_operators(HalfInt::HALF);
        assert!((ops.sz[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((ops.sz[(1, 1)].re + 0.5).abs() < 1e-15);
        // S_+ maps |-1/2> to |1/2> with coefficient 1.
        assert!((ops.splus[(0, 1)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spin_zero_is_trivial() {
        let ops = spin_operators(HalfInt::ZERO);
        assert_eq!(ops.sz.nrows(), 1);
        assert!(max_abs(&ops.sz) == 0.0 && max_abs(&ops.splus) == 0.0);
    }

    #[test]
    fn spin_one_ladder_and_casimir() {
        let ops = spin_operators(HalfInt::ONE);
        let s2 = 2f64.sqrt();
        assert!((ops.splus[(0, 1)].re - s2).abs() < 1e-15);
        assert!((ops.splus[(1, 2)].re - s2).abs() < 1e-15);
        let dev = &ops.casimir() - identity(3).scale(2.0);
        assert!(max_abs(&dev) < 1e-13);
    }

    #[test]
    fn commutation_relations() {
        for j in all_j_up_to(10) {
            let ops = spin_operators(j);
            let c1 = commutator(&ops.sz, &ops.splus) - &ops.splus;
            let c2 = commutator(&ops.sz, &ops.sminus) + &ops.sminus;
            let c3 = commutator(&ops.splus, &ops.sminus) - ops.sz.scale(2.0);
            assert!(max_abs(&c1) < 1e-13, "J={j}");
            assert!(max_abs(&c2) < 1e-13, "J={j}");
            assert!(max_abs(&c3) < 1e-13, "J={j}");
            let jj = j.value() * (j.value() + 1.0);
            assert!(max_abs(&(ops.casimir() - identity(j.dim()).scale(jj))) < 1e-12);
        }
    }

    #[test]
    fn rotation_identity_and_frozen_half() {
        let r0 = wigner_rotation(HalfInt::HALF, 0.0, 0.0);
        assert!(max_abs(&(r0 - identity(2))) < 1e-13);

        let r = wigner_rotation(HalfInt::HALF, 0.0, FRAC_PI_2);
        let c = (PI / 4.0).cos();
        let s = (PI / 4.0).sin();
        let expect = CMat::from_row_slice(2, 2, &[cr(c), cr(-s), cr(s), cr(c)]);
        assert!(max_abs(&(r - expect)) < 1e-13);
    }

    #[test]
    fn rotation_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for j in all_j_up_to(10) {
            let rotor = Rotor::new(j);
            for _ in 0..5 {
                let phi = rng.gen_range(0.0..2.0 * PI);
                let theta = rng.gen_range(0.0..PI);
                let r = rotor.rotation(phi, theta);
                assert!(max_abs(&(&r * r.adjoint() - identity(j.dim()))) < 1e-12);
            }
        }
    }

    #[test]
    fn coherent_north_pole_and_equator() {
        let j = HalfInt::from_int(2);
        let v = coherent_vector(j, [0.0, 0.0, 1.0], j).unwrap();
        let mut expect = CVec::zeros(5);
        expect[0] = cr(1.0);
        assert!((&v - expect).norm() < 1e-12);

        let v = coherent_vector(HalfInt::HALF, [1.0, 0.0, 0.0], HalfInt::HALF).unwrap();
        let c = (PI / 4.0).cos();
        let s = (PI / 4.0).sin();
        assert!((v[0] - cr(c)).norm() < 1e-13 && (v[1] - cr(s)).norm() < 1e-13);
    }

    #[test]
    fn coherent_is_eigenvector() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for j in [HalfInt::HALF, HalfInt::ONE, HalfInt::from_twice(5)] {
            let ops = spin_operators(j);
            let rotor = Rotor::new(j);
            for _ in 0..4 {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi = rng.gen_range(0.0..2.0 * PI);
                let st = (1.0 - z * z).sqrt();
                let omega = [st * phi.cos(), st * phi.sin(), z];
                for i in j.magnetic_indices() {
                    let v = rotor.coherent(z.acos(), phi, i).unwrap();
                    assert!((v.norm() - 1.0).abs() < 1e-12);
                    let resid = ops.dot(omega) * &v - v.scale(i.value());
                    assert!(resid.norm() < 1e-11, "J={j} i={i}");
                }
            }
        }
    }

    #[test]
    fn coherent_rejects_non_unit() {
        let r = coherent_vector(HalfInt::HALF, [0.0, 0.0, 1.1], HalfInt::HALF);
        assert!(matches!(r, Err(Error::NotUnitVector(_))));
    }

    #[test]
    fn beta_identity_and_sz() {
        let j = HalfInt::HALF;
        let id = identity(2);
        assert!(max_abs(&(beta_transpose(&id, j).unwrap() - id)) < 1e-15);
        let ops = spin_operators(j);
        let b = beta_transpose(&ops.sz, j).unwrap();
        assert!(max_abs(&(b + &ops.sz)) < 1e-15);
    }

    #[test]
    fn beta_negates_all_spins() {
        for j in all_j_up_to(6) {
            let ops = spin_operators(j);
            for s in [ops.sx(), ops.sy(), ops.sz.clone()] {
                let b = beta_transpose(&s, j).unwrap();
                assert!(max_abs(&(b + &s)) < 1e-12, "J={j}");
            }
        }
    }

    #[test]
    fn beta_antihomomorphism_and_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for j in [HalfInt::ONE, HalfInt::from_twice(3)] {
            for _ in 0..5 {
                let a = random_ginibre(j.dim(), &mut rng);
                let b = random_ginibre(j.dim(), &mut rng);
                let lhs = beta_transpose(&(&a * &b), j).unwrap();
                let rhs =
                    beta_transpose(&b, j).unwrap() * beta_transpose(&a, j).unwrap();
                assert!(max_abs(&(lhs - rhs)) < 1e-11);
                let back = beta_transpose(&beta_transpose(&a, j).unwrap(), j).unwrap();
                assert!(max_abs(&(back - a)) < 1e-12);
            }
        }
    }

    #[test]
    fn beta_dimension_check() {
        let r = beta_transpose(&identity(3), HalfInt::HALF);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn casimir_superop_basics() {
        for j in all_j_up_to(6) {
            let q_id = casimir_superop(&identity(j.dim()), j).unwrap();
            assert!(max_abs(&q_id) < 1e-12);
            let ops = spin_operators(j);
            let q_sz = casimir_superop(&ops.sz, j).unwrap();
            assert!(max_abs(&(q_sz - ops.sz.scale(2.0))) < 1e-12, "J={j}");
        }
    }

    #[test]
    fn casimir_superop_two_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for j in all_j_up_to(8) {
            let rho = random_ginibre(j.dim(), &mut rng);
            let a = casimir_superop(&rho, j).unwrap();
            let b = casimir_superop_commutators(&rho, j).unwrap();
            assert!(max_abs(&(a - b)) < 1e-11, "J={j}");
        }
    }

    #[test]
    fn casimir_superop_bound_and_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for j in all_j_up_to(10).skip(1) {
            for _ in 0..4 {
                let rho = random_ginibre(j.dim(), &mut rng);
                let q = casimir_superop(&rho, j).unwrap();
                for p in [1.0, 2.0, f64::INFINITY] {
                    let lhs = schatten_norm(&q, p).unwrap();
                    let rhs = 16.0 * j.value() * j.value() * schatten_norm(&rho, p).unwrap();
                    assert!(lhs <= rhs + 1e-10, "J={j} p={p}");
                }
                let quad = crate::linalg::hs_inner(&rho, &q).re;
                assert!(quad >= -1e-10);
            }
        }
    }
}
