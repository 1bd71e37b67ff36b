//! Clebsch-Gordan coefficients and equivariant isometric embeddings.
//!
//! The table for a triple (J, K, M) holds the coefficients C^{M,m}_{J,j;K,m-j}
//! of the embedding H_M -> H_J (x) H_K. The top row (m = M) is produced by the
//! raising-annihilation recursion, lower rows by applying the total lowering
//! operator and renormalizing exactly; this avoids factorial overflow and is
//! accurate in double precision for J, K up to ~50.
//!
//! Sign convention: C^{M,M}_{J,J;K,M-J} > 0.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{cr, CMat};

/// Cached Clebsch-Gordan coefficients for one (J, K, M) triple.
#[derive(Debug, Clone)]
pub struct CGTable {
    pub j: HalfInt,
    pub k: HalfInt,
    pub m_total: HalfInt,
    /// rows[r][c] = C^{M,m}_{J,j;K,m-j} with m the r-th index of H_M in
    /// descending order and j the c-th admissible first-slot index,
    /// also descending.
    rows: Vec<Vec<f64>>,
}

impl CGTable {
    /// Descending list of admissible first-slot indices j for a given m:
    /// max(-J, m-K) >= ... they run from min(J, m+K) down to max(-J, m-K).
    pub fn j_range(&self, m: HalfInt) -> Vec<HalfInt> {
        j_range(self.j, self.k, m)
    }

    /// C^{M,m}_{J,j;K,m-j}; zero when out of range.
    pub fn coeff(&self, m: HalfInt, j: HalfInt) -> f64 {
        if !self.m_total.admits(m) || !self.j.admits(j) || !self.k.admits(m - j) {
            return 0.0;
        }
        let r = self.m_total.index_of(m);
        let hi = std::cmp::min(self.j.twice(), (m + self.k).twice());
        let c = ((hi - j.twice()) / 2) as usize;
        self.rows[r][c]
    }

    pub fn row(&self, m: HalfInt) -> &[f64] {
        &self.rows[self.m_total.index_of(m)]
    }
}

fn j_range(j: HalfInt, k: HalfInt, m: HalfInt) -> Vec<HalfInt> {
    let hi = std::cmp::min(j.twice(), (m + k).twice());
    let lo = std::cmp::max(-j.twice(), (m - k).twice());
    let mut out = Vec::new();
    let mut t = hi;
    while t >= lo {
        out.push(HalfInt::from_twice(t));
        t -= 2;
    }
    out
}

/// Computes the Clebsch-Gordan table for (J, K, M).
pub fn cg_table(j: HalfInt, k: HalfInt, m_total: HalfInt) -> Result<CGTable> {
    if !j.triangle(k, m_total) {
        return Err(Error::TriangleRule { j, k, m: m_total });
    }
    let jv = j.value();
    let kv = k.value();
    let mv = m_total.value();

    // Top row m = M: the state is annihilated by the total raising operator,
    // which gives c_j in terms of c_{j+1}, scanning j downward from J.
    let top_js = j_range(j, k, m_total);
    let mut top = vec![0.0f64; top_js.len()];
    top[0] = 1.0;
    for c in 1..top_js.len() {
        let jj = top_js[c].value(); // current j; previous is j+1
        // coefficient of |j+1>|M-j> in S_+^tot (sum over the row) must vanish:
        // c_j sqrt((J-j)(J+j+1)) + c_{j+1} sqrt((K-M+j+1)(K+M-j)) = 0
        let num = (kv - mv + jj + 1.0) * (kv + mv - jj);
        let den = (jv - jj) * (jv + jj + 1.0);
        top[c] = -top[c - 1] * (num / den).sqrt();
    }
    let norm = top.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut top {
        *x /= norm;
    }
    // Convention: the j = J entry (index 0) is positive, which `top[0] = 1`
    // already guarantees after normalization.

    // Lower rows by applying S_-^tot = S_- (x) 1 + 1 (x) S_- and dividing by
    // sqrt((M+m)(M-m+1)).
    let mut rows = vec![top];
    let mut m = m_total;
    while m > -m_total {
        let prev = rows.last().unwrap();
        let prev_js = j_range(j, k, m);
        let next_m = m - HalfInt::ONE;
        let next_js = j_range(j, k, next_m);
        let mut next = vec![0.0f64; next_js.len()];
        let lower_norm = ((mv + m.value()) * (mv - m.value() + 1.0)).sqrt();
        for (c, &cj) in prev.iter().enumerate() {
            if cj == 0.0 {
                continue;
            }
            let jj = prev_js[c];
            let jjv = jj.value();
            let m2v = (m - jj).value();
            // S_- on the first slot: |j>|m-j> -> |j-1>|m-j>
            let a = ((jjv + jv) * (jv - jjv + 1.0)).sqrt();
            if a != 0.0 {
                if let Some(pos) = next_js.iter().position(|&x| x == jj - HalfInt::ONE) {
                    next[pos] += cj * a / lower_norm;
                }
            }
            // S_- on the second slot: |j>|m-j> -> |j>|m-j-1>
            let b = ((m2v + kv) * (kv - m2v + 1.0)).sqrt();
            if b != 0.0 {
                if let Some(pos) = next_js.iter().position(|&x| x == jj) {
                    next[pos] += cj * b / lower_norm;
                }
            }
        }
        rows.push(next);
        m = next_m;
    }

    Ok(CGTable { j, k, m_total, rows })
}

/// The equivariant isometric embedding H_M -> H_J (x) H_K as a
/// (2J+1)(2K+1) x (2M+1) matrix. Tensor rows are ordered with the H_J index
/// major and the H_K index minor, both descending.
pub fn embedding_isometry(j: HalfInt, k: HalfInt, m_total: HalfInt) -> Result<CMat> {
    let table = cg_table(j, k, m_total)?;
    let dj = j.dim();
    let dk = k.dim();
    let mut iso = CMat::zeros(dj * dk, m_total.dim());
    for (col, m) in m_total.magnetic_indices().enumerate() {
        for jj in table.j_range(m) {
            let c = table.coeff(m, jj);
            let row = j.index_of(jj) * dk + k.index_of(m - jj);
            iso[(row, col)] = cr(c);
        }
    }
    Ok(iso)
}

/// P^M = iota iota†, the orthogonal projection onto the M-summand of
/// H_J (x) H_K.
pub fn coupling_projection(j: HalfInt, k: HalfInt, m_total: HalfInt) -> Result<CMat> {
    let iso = embedding_isometry(j, k, m_total)?;
    Ok(&iso * iso.adjoint())
}

/// Report of the top-row tail bound: c_l = C^{M,M}_{J,M-K+l;K,K-l} must decay
/// geometrically with ratio eps = (J-M+K)(J+M-K+1)/(-J+M+K+1), and c_0 must
/// dominate: 1 - |c_0|^2 <= eps.
#[derive(Debug, Clone)]
pub struct CgTailReport {
    pub eps: f64,
    pub coefficients: Vec<f64>,
    pub geometric_ok: bool,
    pub head_ok: bool,
    pub worst_slack: f64,
}

pub fn cg_tail_bound_check(j: HalfInt, k: HalfInt, m_total: HalfInt) -> Result<CgTailReport> {
    let table = cg_table(j, k, m_total)?;
    let jv = j.value();
    let kv = k.value();
    let mv = m_total.value();
    let eps = (jv - mv + kv) * (jv + mv - kv + 1.0) / (-jv + mv + kv + 1.0);

    let l_max = (j + k - m_total).twice() / 2;
    let cs: Vec<f64> = (0..=l_max)
        .map(|l| {
            let jj = m_total - k + HalfInt::from_int(l);
            table.coeff(m_total, jj)
        })
        .collect();

    let slack = 1e-12;
    let mut geometric_ok = true;
    let mut worst = f64::NEG_INFINITY;
    let c0sq = cs[0] * cs[0];
    for (l, c) in cs.iter().enumerate() {
        let bound = eps.powi(l as i32) * c0sq;
        let gap = c * c - bound;
        worst = worst.max(gap);
        if gap > slack {
            geometric_ok = false;
        }
    }
    let head_gap = (1.0 - c0sq) - eps;
    worst = worst.max(head_gap);
    let head_ok = 1.0 - c0sq >= -slack && head_gap <= slack;
    Ok(CgTailReport { eps, coefficients: cs, geometric_ok, head_ok, worst_slack: worst })
}

type CacheKey = (i64, i64, i64);

/// Process-wide cache of embedding isometries; tables are immutable after
/// construction so sharing clones is safe.
static EMBEDDING_CACHE: Mutex<Option<HashMap<CacheKey, CMat>>> = Mutex::new(None);

/// Cached variant of [`embedding_isometry`].
pub fn cached_embedding(j: HalfInt, k: HalfInt, m_total: HalfInt) -> Result<CMat> {
    let key = (j.twice(), k.twice(), m_total.twice());
    {
        let guard = EMBEDDING_CACHE.lock().unwrap();
        if let Some(map) = guard.as_ref() {
            if let Some(m) = map.get(&key) {
                return Ok(m.clone());
            }
        }
    }
    let iso = embedding_isometry(j, k, m_total)?;
    let mut guard = EMBEDDING_CACHE.lock().unwrap();
    guard.get_or_insert_with(HashMap::new).insert(key, iso.clone());
    Ok(iso)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, identity, max_abs};
    use crate::su2::{spin_operators, Rotor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn h(t: i64) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn stretched_coefficient_is_one() {
        let t = cg_table(h(1), h(1), h(2)).unwrap();
        assert!((t.coeff(h(2), h(1)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_row_signs() {
        let t = cg_table(h(1), h(1), h(0)).unwrap();
        let r = 0.5f64.sqrt();
        assert!((t.coeff(h(0), h(1)) - r).abs() < 1e-14);
        assert!((t.coeff(h(0), h(-1)) + r).abs() < 1e-14);
    }

    #[test]
    fn rows_are_unit_vectors() {
        for (j, k) in [(h(2), h(2)), (h(3), h(4)), (h(1), h(6))] {
            let mut m = j + k;
            while m >= (j - k).abs() {
                let t = cg_table(j, k, m).unwrap();
                for mm in m.magnetic_indices() {
                    let s: f64 = t.row(mm).iter().map(|c| c * c).sum();
                    assert!((s - 1.0).abs() < 1e-12, "(J,K,M,m)=({j},{k},{m},{mm})");
                }
                m = m - HalfInt::ONE;
            }
        }
    }

    #[test]
    fn rows_orthogonal_across_m_total() {
        // (1,1,1) m=1 row is a unit vector orthogonal to the (1,1,2) m=1 row.
        let t1 = cg_table(h(2), h(2), h(2)).unwrap();
        let t2 = cg_table(h(2), h(2), h(4)).unwrap();
        let m = h(2);
        let dot: f64 = t1
            .j_range(m)
            .iter()
            .map(|&jj| t1.coeff(m, jj) * t2.coeff(m, jj))
            .sum();
        assert!(dot.abs() < 1e-13);
        let n1: f64 = t1.row(m).iter().map(|c| c * c).sum();
        assert!((n1 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_violation_rejected() {
        assert!(matches!(
            cg_table(h(1), h(1), h(4)),
            Err(Error::TriangleRule { .. })
        ));
        assert!(matches!(
            cg_table(h(1), h(1), h(1)),
            Err(Error::TriangleRule { .. })
        ));
    }

    #[test]
    fn embeddings_are_isometries_and_complete() {
        for (j, k) in [(h(1), h(1)), (h(2), h(4)), (h(3), h(3))] {
            let dj = j.dim() * k.dim();
            let mut sum_p = CMat::zeros(dj, dj);
            let mut m = (j - k).abs();
            while m <= j + k {
                let iso = embedding_isometry(j, k, m).unwrap();
                let gram = iso.adjoint() * &iso;
                assert!(max_abs(&(gram - identity(m.dim()))) < 1e-12);
                sum_p += &iso * iso.adjoint();
                m = m + HalfInt::ONE;
            }
            assert!(max_abs(&(sum_p - identity(dj))) < 1e-11, "(J,K)=({j},{k})");
        }
    }

    #[test]
    fn stretched_embedding_is_product_state() {
        let (j, k) = (h(1), h(3));
        let m = j + k;
        let iso = embedding_isometry(j, k, m).unwrap();
        // iota |K+J> = |J> (x) |K>, the first tensor basis vector.
        assert!((iso[(0, 0)].re - 1.0).abs() < 1e-14);
        let col_norm: f64 = iso.column(0).iter().map(|z| z.norm_sqr()).sum();
        assert!((col_norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singlet_embedding_half_half() {
        let iso = embedding_isometry(h(1), h(1), h(0)).unwrap();
        let r = 0.5f64.sqrt();
        // (|1/2,-1/2> - |-1/2,1/2>)/sqrt(2) in (J-major, descending) order.
        assert!((iso[(1, 0)].re - r).abs() < 1e-14);
        assert!((iso[(2, 0)].re + r).abs() < 1e-14);
        assert!(iso[(0, 0)].norm() < 1e-15 && iso[(3, 0)].norm() < 1e-15);
    }

    #[test]
    fn embedding_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (j, k, m) in [(h(1), h(1), h(2)), (h(2), h(4), h(4)), (h(1), h(3), h(2))] {
            let iso = embedding_isometry(j, k, m).unwrap();
            let rj = Rotor::new(j);
            let rk = Rotor::new(k);
            let rm = Rotor::new(m);
            for _ in 0..20 {
                let phi = rng.gen_range(0.0..2.0 * PI);
                let theta = rng.gen_range(0.0..PI);
                let big = rj.rotation(phi, theta).kronecker(&rk.rotation(phi, theta));
                let resid = &big * &iso - &iso * rm.rotation(phi, theta);
                assert!(max_abs(&resid) < 1e-10, "(J,K,M)=({j},{k},{m})");
            }
        }
    }

    /// Independent oracle: diagonalize the total-spin Casimir restricted to
    /// each total-m eigenspace of H_J (x) H_K and compare the eigenvector of
    /// eigenvalue M(M+1) with the CG row, after fixing the sign convention.
    #[test]
    fn casimir_diagonalization_oracle() {
        for (j, k) in [(h(1), h(1)), (h(2), h(2)), (h(1), h(4)), (h(3), h(2))] {
            let oj = spin_operators(j);
            let ok = spin_operators(k);
            let (dj, dk) = (j.dim(), k.dim());
            let idj = identity(dj);
            let idk = identity(dk);
            let tot =
                |a: &CMat, b: &CMat| a.kronecker(&idk) + idj.kronecker(b);
            let sx = tot(&oj.sx(), &ok.sx());
            let sy = tot(&oj.sy(), &ok.sy());
            let sz = tot(&oj.sz, &ok.sz);
            let cas = &sx * &sx + &sy * &sy + &sz * &sz;

            let mut m_tot = (j - k).abs();
            while m_tot <= j + k {
                let table = cg_table(j, k, m_tot).unwrap();
                for m in m_tot.magnetic_indices() {
                    // Basis of the total-m eigenspace, ordered like j_range.
                    let js = table.j_range(m);
                    let n = js.len();
                    let mut block = CMat::zeros(n, n);
                    let rows: Vec<usize> = js
                        .iter()
                        .map(|&jj| j.index_of(jj) * dk + k.index_of(m - jj))
                        .collect();
                    for (a, &ra) in rows.iter().enumerate() {
                        for (b, &rb) in rows.iter().enumerate() {
                            block[(a, b)] = cas[(ra, rb)];
                        }
                    }
                    let (vals, vecs) = eigh(&block);
                    let target = m_tot.value() * (m_tot.value() + 1.0);
                    let idx = (0..n)
                        .min_by(|&a, &b| {
                            (vals[a] - target)
                                .abs()
                                .partial_cmp(&(vals[b] - target).abs())
                                .unwrap()
                        })
                        .unwrap();
                    assert!((vals[idx] - target).abs() < 1e-9);
                    // Strip the arbitrary eigenvector phase before comparing.
                    let raw: Vec<_> = (0..n).map(|r| vecs[(r, idx)]).collect();
                    let lead = raw
                        .iter()
                        .cloned()
                        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
                        .unwrap();
                    let phase = lead / lead.norm();
                    let mut v: Vec<f64> = raw.iter().map(|z| (z * phase.conj()).re).collect();
                    // Fix the overall sign by aligning with the table row.
                    let row = table.row(m);
                    let dot: f64 = v.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
                    if dot < 0.0 {
                        for x in &mut v {
                            *x = -*x;
                        }
                    }
                    for (a, &c) in row.iter().enumerate() {
                        assert!(
                            (v[a] - c).abs() < 1e-10,
                            "(J,K,M,m)=({j},{k},{m_tot},{m})"
                        );
                    }
                }
                m_tot = m_tot + HalfInt::ONE;
            }
        }
    }

    #[test]
    fn tail_bound_examples() {
        // Stretched case: eps = 0, single coefficient 1.
        let r = cg_tail_bound_check(h(1), h(1), h(2)).unwrap();
        assert!(r.eps.abs() < 1e-15);
        assert_eq!(r.coefficients.len(), 1);
        assert!((r.coefficients[0].abs() - 1.0).abs() < 1e-14);
        assert!(r.geometric_ok && r.head_ok);

        // (1/2,1/2,0): eps = 1 and 1 - |c_0|^2 = 1/2.
        let r = cg_tail_bound_check(h(1), h(1), h(0)).unwrap();
        assert!((r.eps - 1.0).abs() < 1e-15);
        assert!((r.coefficients[0].powi(2) - 0.5).abs() < 1e-13);
        assert!(r.geometric_ok && r.head_ok);
    }

    #[test]
    fn tail_bound_sweep() {
        for jt in 0..=8i64 {
            for kt in 0..=8i64 {
                let (j, k) = (h(jt), h(kt));
                let mut m = (j - k).abs();
                while m <= j + k {
                    let r = cg_tail_bound_check(j, k, m).unwrap();
                    assert!(r.geometric_ok && r.head_ok, "(J,K,M)=({j},{k},{m})");
                    m = m + HalfInt::ONE;
                }
            }
        }
    }
}
