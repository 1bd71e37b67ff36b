//! Equivariant quantum channels between irreducible representations.
//!
//! For fixed input spin J and output spin K these channels form a simplex
//! whose vertices are labelled by the total spin M of the coupling,
//! M in {|K-J|, ..., K+J}. A vertex can be evaluated by three equivalent
//! routes; the projection route is the reference implementation and the two
//! embedding routes are kept as permanent regression oracles.

use crate::clebsch::cached_embedding;
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{
    cr, eigh, identity, max_abs, partial_trace_first, partial_trace_second, CMat, C_ZERO,
};
use crate::su2::beta_transpose;

/// Evaluation route for a channel vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexFormula {
    /// (2J+1)/(2M+1) Tr_J[ P^M_{J,K} (rho^beta (x) 1_K) ]
    Projection,
    /// (2J+1)/(2K+1) q^K_{J,M} (rho (x) 1_M) iota^K_{J,M}
    EmbeddingUp,
    /// Tr_M[ iota^J_{K,M} rho q^J_{K,M} ]
    EmbeddingDown,
}

fn check_triple(j: HalfInt, k: HalfInt, m: HalfInt) -> Result<()> {
    if j.triangle(k, m) {
        Ok(())
    } else {
        Err(Error::TriangleRule { j, k, m })
    }
}

/// Multiplies P by (rho (x) 1_k) without materializing the Kronecker factor.
fn mul_rho_kron_id(p: &CMat, rho: &CMat, dk: usize) -> CMat {
    let n = p.nrows();
    let dj = rho.nrows();
    debug_assert_eq!(n, dj * dk);
    let mut out = CMat::zeros(n, n);
    for row in 0..n {
        for jc in 0..dj {
            for kc in 0..dk {
                let col = jc * dk + kc;
                let mut acc = C_ZERO;
                for jm in 0..dj {
                    acc += p[(row, jm * dk + kc)] * rho[(jm, jc)];
                }
                out[(row, col)] = acc;
            }
        }
    }
    out
}

/// Applies the vertex channel with total spin M by the chosen formula.
pub fn channel_vertex_apply(
    j: HalfInt,
    k: HalfInt,
    m: HalfInt,
    rho: &CMat,
    formula: VertexFormula,
) -> Result<CMat> {
    check_triple(j, k, m)?;
    if rho.nrows() != j.dim() || rho.ncols() != j.dim() {
        return Err(Error::DimensionMismatch { expected: j.dim(), found: rho.nrows() });
    }
    match formula {
        VertexFormula::Projection => {
            let iota = cached_embedding(j, k, m)?;
            let p = &iota * iota.adjoint();
            let rb = beta_transpose(rho, j)?;
            let x = mul_rho_kron_id(&p, &rb, k.dim());
            let scale = j.dim() as f64 / m.dim() as f64;
            Ok(partial_trace_first(&x, j.dim(), k.dim()).scale(scale))
        }
        VertexFormula::EmbeddingUp => {
            // iota^K_{J,M} : H_K -> H_J (x) H_M
            let iota = cached_embedding(j, m, k)?;
            let (dj, dm, dk) = (j.dim(), m.dim(), k.dim());
            // y = (rho (x) 1_M) iota, exploiting the Kronecker structure.
            let mut y = CMat::zeros(dj * dm, dk);
            for col in 0..dk {
                for jr in 0..dj {
                    for mr in 0..dm {
                        let mut acc = C_ZERO;
                        for jc in 0..dj {
                            acc += rho[(jr, jc)] * iota[(jc * dm + mr, col)];
                        }
                        y[(jr * dm + mr, col)] = acc;
                    }
                }
            }
            let scale = j.dim() as f64 / k.dim() as f64;
            Ok((iota.adjoint() * y).scale(scale))
        }
        VertexFormula::EmbeddingDown => {
            // iota^J_{K,M} : H_J -> H_K (x) H_M
            let iota = cached_embedding(k, m, j)?;
            let x = &iota * rho * iota.adjoint();
            Ok(partial_trace_second(&x, k.dim(), m.dim()))
        }
    }
}

/// Vertex labels M in ascending order for a (J, K) pair.
pub fn vertex_labels(j: HalfInt, k: HalfInt) -> Vec<HalfInt> {
    let mut out = Vec::new();
    let mut m = (k - j).abs();
    while m <= k + j {
        out.push(m);
        m = m + HalfInt::ONE;
    }
    out
}

/// An equivariant channel as a convex mixture of the simplex vertices,
/// with per-vertex embeddings cached at construction.
#[derive(Debug, Clone)]
pub struct Channel {
    pub j: HalfInt,
    pub k: HalfInt,
    ms: Vec<HalfInt>,
    weights: Vec<f64>,
    projections: Vec<CMat>,
}

impl Channel {
    /// Builds a mixture from weights listed in ascending M order over the
    /// full vertex range.
    pub fn new(j: HalfInt, k: HalfInt, weights: &[f64]) -> Result<Self> {
        let ms = vertex_labels(j, k);
        if weights.len() != ms.len() {
            return Err(Error::InvalidWeights(format!(
                "expected {} weights for (J,K)=({j},{k}), got {}",
                ms.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < -1e-12) {
            return Err(Error::InvalidWeights("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        let mut projections = Vec::with_capacity(ms.len());
        for &m in &ms {
            let iota = cached_embedding(j, k, m)?;
            projections.push(&iota * iota.adjoint());
        }
        Ok(Channel { j, k, ms, weights: weights.to_vec(), projections })
    }

    /// The vertex channel with total spin M.
    pub fn vertex(j: HalfInt, k: HalfInt, m: HalfInt) -> Result<Self> {
        check_triple(j, k, m)?;
        let ms = vertex_labels(j, k);
        let weights: Vec<f64> = ms.iter().map(|&x| if x == m { 1.0 } else { 0.0 }).collect();
        Channel::new(j, k, &weights)
    }

    /// Vertex labelled by the offset i with M = K + i, i in {-J, ..., J}.
    pub fn vertex_by_offset(j: HalfInt, k: HalfInt, i: HalfInt) -> Result<Self> {
        Channel::vertex(j, k, k + i)
    }

    pub fn vertex_ms(&self) -> &[HalfInt] {
        &self.ms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Offset view of the vertex labels: i = M - K.
    pub fn offsets(&self) -> Vec<HalfInt> {
        self.ms.iter().map(|&m| m - self.k).collect()
    }

    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.j.dim() || rho.ncols() != self.j.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.j.dim(),
                found: rho.nrows(),
            });
        }
        let rb = beta_transpose(rho, self.j)?;
        let (dj, dk) = (self.j.dim(), self.k.dim());
        let mut out = CMat::zeros(dk, dk);
        for ((&m, &w), p) in self.ms.iter().zip(&self.weights).zip(&self.projections) {
            if w == 0.0 {
                continue;
            }
            let x = mul_rho_kron_id(p, &rb, dk);
            let scale = w * dj as f64 / m.dim() as f64;
            out += partial_trace_first(&x, dj, dk).scale(scale);
        }
        Ok(out)
    }
}

/// Adjoint of the vertex channel: (Phi^M_{J,K})* = (2J+1)/(2K+1) Phi^M_{K,J},
/// mapping operators on H_K back to H_J.
pub fn channel_vertex_adjoint_apply(
    j: HalfInt,
    k: HalfInt,
    m: HalfInt,
    sigma: &CMat,
) -> Result<CMat> {
    check_triple(j, k, m)?;
    let out = channel_vertex_apply(k, j, m, sigma, VertexFormula::Projection)?;
    Ok(out.scale(j.dim() as f64 / k.dim() as f64))
}

/// Choi matrix on H_K (x) H_J*: C = sum_{ab} Phi(E_ab) (x) E_ab, so that
/// Phi(rho) = Tr_2[ C (1 (x) rho^t) ].
pub fn choi_matrix(channel: &Channel) -> Result<CMat> {
    let (dj, dk) = (channel.j.dim(), channel.k.dim());
    let mut c = CMat::zeros(dk * dj, dk * dj);
    for a in 0..dj {
        for b in 0..dj {
            let mut e = CMat::zeros(dj, dj);
            e[(a, b)] = cr(1.0);
            let img = channel.apply(&e)?;
            for r in 0..dk {
                for s in 0..dk {
                    c[(r * dj + a, s * dj + b)] += img[(r, s)];
                }
            }
        }
    }
    Ok(c)
}

/// Reconstructs the channel action from a Choi matrix.
pub fn apply_from_choi(c: &CMat, dj: usize, dk: usize, rho: &CMat) -> CMat {
    let rt = rho.transpose();
    let x = c * identity(dk).kronecker(&rt);
    partial_trace_second(&x, dk, dj)
}

/// Complete-positivity / trace-preservation / equivariance certificate of a
/// channel through its Choi matrix.
#[derive(Debug, Clone)]
pub struct ChoiReport {
    pub min_eigenvalue: f64,
    pub trace: f64,
    pub trace_expected: f64,
    /// sup-residual of `Tr_K[C]` against the identity on the dual input leg.
    pub partial_trace_residual: f64,
    /// max commutator residual with R_K (x) conj(R_J) over sampled rotations.
    pub equivariance_residual: f64,
    /// Numerical rank (eigenvalues above 1e-9).
    pub rank: usize,
    /// For a vertex: residual of C (2M+1)/(2J+1) being idempotent.
    pub projection_residual: Option<f64>,
    /// sup-residual of the Choi reconstruction against direct application.
    pub reconstruction_residual: f64,
}

impl ChoiReport {
    pub fn is_cptp(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
            && (self.trace - self.trace_expected).abs() <= tol.max(1e-9)
            && self.partial_trace_residual <= tol.max(1e-9)
    }
}

pub fn choi_checks(channel: &Channel, seed: u64) -> Result<ChoiReport> {
    use rand::{Rng, SeedableRng};
    let (j, k) = (channel.j, channel.k);
    let (dj, dk) = (j.dim(), k.dim());
    let c = choi_matrix(channel)?;
    let (vals, _) = eigh(&c);
    let min_eigenvalue = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let rank = vals.iter().filter(|&&v| v > 1e-9).count();
    let trace = vals.iter().sum::<f64>();

    let pt = partial_trace_first(&c, dk, dj);
    let partial_trace_residual = max_abs(&(pt - identity(dj)));

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rot_j = crate::su2::Rotor::new(j);
    let rot_k = crate::su2::Rotor::new(k);
    let mut equivariance_residual = 0.0f64;
    for _ in 0..6 {
        let phi = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        let theta = rng.gen_range(0.0..std::f64::consts::PI);
        let rj = rot_j.rotation(phi, theta).map(|z| z.conj());
        let rk = rot_k.rotation(phi, theta);
        let u = rk.kronecker(&rj);
        equivariance_residual = equivariance_residual.max(max_abs(&(&u * &c - &c * &u)));
    }

    // Projection property only meaningful for a single vertex.
    let projection_residual = channel
        .weights
        .iter()
        .zip(channel.ms.iter())
        .find(|(&w, _)| (w - 1.0).abs() < 1e-14)
        .map(|(_, &m)| {
            let p = c.scale(m.dim() as f64 / dj as f64);
            max_abs(&(&p * &p - &p))
        });

    let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b9);
    let rho = crate::linalg::random_ginibre(dj, &mut rng2);
    let direct = channel.apply(&rho)?;
    let via_choi = apply_from_choi(&c, dj, dk, &rho);
    let reconstruction_residual = max_abs(&(direct - via_choi));

    Ok(ChoiReport {
        min_eigenvalue,
        trace,
        trace_expected: dj as f64,
        partial_trace_residual,
        equivariance_residual,
        rank,
        projection_residual,
        reconstruction_residual,
    })
}

/// Closed-form p -> p norm of an equivariant channel together with the
/// empirical estimate from optimizing over structured and random inputs.
#[derive(Debug, Clone)]
pub struct PpNormReport {
    pub p: f64,
    pub closed_form: f64,
    pub estimate: f64,
}

pub fn channel_pp_norm(channel: &Channel, p: f64, seed: u64) -> Result<PpNormReport> {
    use rand::SeedableRng;
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let (j, k) = (channel.j, channel.k);
    let ratio = j.dim() as f64 / k.dim() as f64;
    let closed_form = ratio.powf(1.0 - 1.0 / p);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut estimate = 0.0f64;
    let mut candidates: Vec<CMat> = vec![identity(j.dim())];
    // Coherent projector and spin eigenprojectors.
    let north = crate::su2::coherent_vector(j, [0.0, 0.0, 1.0], j).unwrap();
    candidates.push(crate::linalg::projector(&north));
    for idx in 0..j.dim() {
        let mut e = CMat::zeros(j.dim(), j.dim());
        e[(idx, idx)] = cr(1.0);
        candidates.push(e);
    }
    for _ in 0..8 {
        candidates.push(crate::linalg::random_ginibre(j.dim(), &mut rng));
        candidates.push(crate::linalg::random_hermitian(j.dim(), &mut rng));
    }
    for rho in &candidates {
        let denom = crate::linalg::schatten_norm(rho, p)?;
        if denom < 1e-14 {
            continue;
        }
        let out = channel.apply(rho)?;
        let num = crate::linalg::schatten_norm(&out, p)?;
        estimate = estimate.max(num / denom);
    }
    Ok(PpNormReport { p, closed_form, estimate })
}

/// Scalar offset view: for M = K + i returns i as a half-integer.
pub fn offset_of(m: HalfInt, k: HalfInt) -> HalfInt {
    m - k
}
