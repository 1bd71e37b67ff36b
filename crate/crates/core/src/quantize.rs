//! Coherent-state quantization: the maps `Op` and `Hus`, off-diagonal
//! Husimi functions, the Berezin transform with its closed-form spectrum,
//! and the Stratonovich-Weyl correspondence.
//!
//! `Op` integrates a function against coherent projectors over a quadrature
//! grid; `Hus` evaluates matrix elements on the grid and projects back onto
//! harmonics. Both are exact for band-limited inputs because every integrand
//! is a spherical polynomial of known degree.

use num_complex::Complex64;

use crate::clebsch::cg_table;
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{cr, hs_inner, CMat};
use crate::sphere::{analysis, make_grid, synthesis, SphereFunction, SphereGrid};
use crate::su2::Rotor;

/// Quantization engine for one representation; caches the rotation
/// eigensystem so coherent vectors cost O(dim^2) per node.
#[derive(Debug, Clone)]
pub struct Quantizer {
    pub j: HalfInt,
    rotor: Rotor,
}

impl Quantizer {
    pub fn new(j: HalfInt) -> Self {
        Quantizer { j, rotor: Rotor::new(j) }
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    fn check_index(&self, i: HalfInt) -> Result<()> {
        if self.j.admits(i) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { j: self.j, i })
        }
    }

    fn check_dim(&self, rho: &CMat) -> Result<()> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            Err(Error::DimensionMismatch { expected: self.dim(), found: rho.nrows() })
        } else {
            Ok(())
        }
    }

    /// Op^i_J(f) = (2J+1) ∫ f(ω) |ω;i><ω;i| dω on a caller-supplied grid.
    pub fn op_on_grid(&self, i: HalfInt, f: &SphereFunction, grid: &SphereGrid) -> Result<CMat> {
        self.check_index(i)?;
        grid.require_degree(self.j.twice() as usize + f.lmax())?;
        let values = synthesis(f, grid);
        Ok(self.op_from_values(i, &values, grid))
    }

    /// Same quadrature, but from raw grid values; the caller is responsible
    /// for the grid resolving the values' band.
    pub fn op_from_values(&self, i: HalfInt, values: &[Complex64], grid: &SphereGrid) -> CMat {
        let d = self.dim();
        let scale = d as f64;
        let mut acc = CMat::zeros(d, d);
        for (node, fv) in grid.nodes().iter().zip(values) {
            let v = self.rotor.coherent(node.theta, node.phi, i).unwrap();
            let w = fv * cr(scale * node.weight);
            for r in 0..d {
                let vr = v[r] * w;
                for c in 0..d {
                    acc[(r, c)] += vr * v[c].conj();
                }
            }
        }
        acc
    }

    /// Op^i_J(f) on an internally built grid of exactly sufficient degree.
    pub fn op(&self, i: HalfInt, f: &SphereFunction) -> Result<CMat> {
        let grid = make_grid(self.j.twice() as usize + f.lmax());
        self.op_on_grid(i, f, &grid)
    }

    /// Grid values of Hus^i_J(rho)(ω) = <ω;i| rho |ω;i>.
    pub fn husimi_values(
        &self,
        i: HalfInt,
        rho: &CMat,
        grid: &SphereGrid,
    ) -> Result<Vec<Complex64>> {
        self.check_index(i)?;
        self.check_dim(rho)?;
        Ok(grid
            .nodes()
            .iter()
            .map(|node| {
                let v = self.rotor.coherent(node.theta, node.phi, i).unwrap();
                v.dotc(&(rho * &v))
            })
            .collect())
    }

    /// Hus^i_J(rho) projected onto harmonics up to `lout`; the result is
    /// supported on bands <= 2J.
    pub fn husimi(&self, i: HalfInt, rho: &CMat, lout: usize) -> Result<SphereFunction> {
        let band = self.j.twice() as usize;
        if lout < band {
            return Err(Error::InvalidArgument(format!(
                "husimi band limit {lout} below 2J = {band}"
            )));
        }
        let grid = make_grid(band + lout);
        let values = self.husimi_values(i, rho, &grid)?;
        Ok(analysis(&values, lout, &grid))
    }

    /// Off-diagonal Husimi values <ω;a| rho |ω;b> in the fixed z-y phase
    /// convention.
    pub fn husimi_offdiag_values(
        &self,
        a: HalfInt,
        b: HalfInt,
        rho: &CMat,
        grid: &SphereGrid,
    ) -> Result<Vec<Complex64>> {
        self.husimi_offdiag_values_gauged(a, b, rho, grid, 0.0)
    }

    /// Off-diagonal Husimi with a perturbed phase convention: each coherent
    /// vector |ω;i> picks up the extra phase exp(-i chi i). Individual values
    /// depend on `chi`; absolute values and matched products do not.
    pub fn husimi_offdiag_values_gauged(
        &self,
        a: HalfInt,
        b: HalfInt,
        rho: &CMat,
        grid: &SphereGrid,
        chi: f64,
    ) -> Result<Vec<Complex64>> {
        self.check_index(a)?;
        self.check_index(b)?;
        self.check_dim(rho)?;
        let gauge = Complex64::new(0.0, chi * (a.value() - b.value())).exp();
        Ok(grid
            .nodes()
            .iter()
            .map(|node| {
                let va = self.rotor.coherent(node.theta, node.phi, a).unwrap();
                let vb = self.rotor.coherent(node.theta, node.phi, b).unwrap();
                va.dotc(&(rho * &vb)) * gauge
            })
            .collect())
    }
}

/// Closed-form spectrum of the Berezin transform Hus_J Op_J: the band-l
/// eigenvalue is (2J)!(2J+1)! / ((2J-l)!(2J+l+1)!), computed in log space.
#[derive(Debug, Clone)]
pub struct BerezinSpectrum {
    pub j: HalfInt,
    pub eigenvalues: Vec<f64>,
}

impl BerezinSpectrum {
    /// Eigenvalue on band l; zero above 2J.
    pub fn eigenvalue(&self, l: usize) -> f64 {
        self.eigenvalues.get(l).copied().unwrap_or(0.0)
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

pub fn berezin_spectrum(j: HalfInt) -> BerezinSpectrum {
    let two_j = j.twice() as usize;
    let base = ln_factorial(two_j) + ln_factorial(two_j + 1);
    let eigenvalues = (0..=two_j)
        .map(|l| (base - ln_factorial(two_j - l) - ln_factorial(two_j + l + 1)).exp())
        .collect();
    BerezinSpectrum { j, eigenvalues }
}

/// Applies the Berezin transform spectrally to a function: multiplies band l
/// by the closed-form eigenvalue (zero above 2J).
pub fn berezin_apply(f: &SphereFunction, spectrum: &BerezinSpectrum) -> SphereFunction {
    let mut out = f.clone();
    for l in 0..=f.lmax() {
        let b = cr(spectrum.eigenvalue(l));
        for m in -(l as i64)..=(l as i64) {
            let v = out.get(l, m) * b;
            out.set(l, m, v);
        }
    }
    out
}

/// Hilbert-Schmidt-orthonormal tensor-operator basis of B(H_J), organized by
/// the band decomposition: T^l_m = sum_m1 C^{l,m}_{J,m1;J,m-m1} W(|m1>, |m-m1>)
/// with W(|a>, |b>) = (-1)^{J-b} |a><-b| the equivariant identification of
/// H_J (x) H_J with B(H_J).
#[derive(Debug, Clone)]
pub struct IsotypicBasis {
    pub j: HalfInt,
    /// ops[l][l + m] is T^l_m.
    ops: Vec<Vec<CMat>>,
}

impl IsotypicBasis {
    pub fn new(j: HalfInt) -> Self {
        let d = j.dim();
        let two_j = j.twice() as usize;
        let mut ops = Vec::with_capacity(two_j + 1);
        for l in 0..=two_j {
            let lh = HalfInt::from_int(l as i64);
            let table = cg_table(j, j, lh).expect("l <= 2J always couples");
            let mut per_m = Vec::with_capacity(2 * l + 1);
            for m in (-(l as i64))..=(l as i64) {
                let mh = HalfInt::from_int(m);
                let mut t = CMat::zeros(d, d);
                for m1 in table.j_range(mh) {
                    let m2 = mh - m1;
                    let c = table.coeff(mh, m1);
                    if c == 0.0 {
                        continue;
                    }
                    let sign = if (j - m2).twice() % 4 == 0 { 1.0 } else { -1.0 };
                    t[(j.index_of(m1), j.index_of(-m2))] += cr(c * sign);
                }
                per_m.push(t);
            }
            ops.push(per_m);
        }
        IsotypicBasis { j, ops }
    }

    pub fn band_limit(&self) -> usize {
        self.j.twice() as usize
    }

    pub fn op(&self, l: usize, m: i64) -> &CMat {
        &self.ops[l][(l as i64 + m) as usize]
    }

    /// Projection of rho onto the band-l component.
    pub fn project(&self, l: usize, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(rho.nrows(), rho.ncols());
        for m in -(l as i64)..=(l as i64) {
            let t = self.op(l, m);
            out += t * hs_inner(t, rho);
        }
        out
    }

    /// Applies a spectral multiplier g(l) over the band decomposition.
    pub fn apply_spectral(&self, rho: &CMat, g: impl Fn(usize) -> f64) -> CMat {
        let mut out = CMat::zeros(rho.nrows(), rho.ncols());
        for l in 0..=self.band_limit() {
            out += self.project(l, rho).scale(g(l));
        }
        out
    }

    /// The Casimir power Q^s rho (eigenvalue (l(l+1))^s per band).
    pub fn casimir_power(&self, rho: &CMat, s: f64) -> CMat {
        self.apply_spectral(rho, |l| {
            if l == 0 {
                0.0
            } else {
                ((l as f64) * (l as f64 + 1.0)).powf(s)
            }
        })
    }

    /// The Husimi image of T^l_m is h_l Y_{lm}; returns h_l, computed from
    /// the Clebsch-Gordan table alone.
    pub fn husimi_scalar(&self, l: usize) -> f64 {
        let lh = HalfInt::from_int(l as i64);
        let table = cg_table(self.j, self.j, lh).unwrap();
        let c = table.coeff(HalfInt::ZERO, self.j);
        let sign = if self.j.twice() % 2 == 0 { 1.0 } else { -1.0 };
        sign * c / (2.0 * l as f64 + 1.0).sqrt()
    }

    /// Wigner-Eckart construction of Op_J(Y_{lm}) = (2J+1) h_l T^l_m, an
    /// independent oracle for the quadrature route.
    pub fn op_of_harmonic(&self, l: usize, m: i64) -> CMat {
        let h = self.husimi_scalar(l);
        self.op(l, m).scale((self.j.dim() as f64) * h)
    }
}

/// One evaluated inequality.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// For bounds with an unspecified universal constant: lhs/rhs, the
    /// smallest constant making the bound hold.
    pub measured_c: Option<f64>,
}

impl BoundRow {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// Report of the approximate-inversion inequalities at one (J, s).
#[derive(Debug, Clone)]
pub struct InversionReport {
    pub j: HalfInt,
    pub s: f64,
    pub rows: Vec<BoundRow>,
}

impl InversionReport {
    pub fn all_hold(&self, slack: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.measured_c.is_some() || r.holds(slack))
    }

    pub fn max_measured_c(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| r.measured_c)
            .fold(0.0, f64::max)
    }
}

/// Evaluates the Berezin-transform inversion bounds on a band-limited
/// function `f` and on a seeded random operator:
///
/// - `||(1 - Hus Op) f||_2 <= (2J+1)^{-s} ||(-Δ)^s f||_2` and the operator
///   counterpart with the Casimir,
/// - the refined versions with the Δ/(2J+1) (resp. Q/(2J+1)) correction and
///   exponent 1+s,
/// - the p-norm versions against (1-4Δ)f (resp. (1+4Q)rho) for p in
///   {1, 2, ∞}, reported with their measured constants.
pub fn berezin_inversion_check(
    j: HalfInt,
    f: &SphereFunction,
    s: f64,
    seed: u64,
) -> Result<InversionReport> {
    use crate::sphere::{laplacian, lp_norm, minus_laplacian_power};
    use rand::SeedableRng;

    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s = {s} outside [0,1]")));
    }
    let q = Quantizer::new(j);
    let two_j = j.twice() as usize;
    let two_j_plus_1 = j.dim() as f64;
    let mut rows = Vec::new();

    // Function side: Hus Op f through quadrature.
    let op_f = q.op(j, f)?;
    let hus_op_f = q.husimi(j, &op_f, f.lmax().max(two_j))?;
    let resid = &f.padded(hus_op_f.lmax()) - &hus_op_f;
    let norm_grid = make_grid(2 * resid.lmax() + 2);

    let lhs = resid.l2_norm_coeffs();
    let rhs = minus_laplacian_power(f, s).l2_norm_coeffs() / two_j_plus_1.powf(s);
    rows.push(BoundRow { label: format!("fn L2 s={s}"), lhs, rhs, measured_c: None });

    // Refined: (1 - Hus Op + Δ/(2J+1)) f.
    let refined = &resid + &(&laplacian(f).padded(resid.lmax()) * cr(1.0 / two_j_plus_1));
    let lhs = refined.l2_norm_coeffs();
    let rhs = minus_laplacian_power(f, 1.0 + s).l2_norm_coeffs() / two_j_plus_1.powf(1.0 + s);
    rows.push(BoundRow { label: format!("fn L2 1+s={}", 1.0 + s), lhs, rhs, measured_c: None });

    // p-norm rows with measured constant.
    let one_minus_4lap = {
        let mut g = f.clone();
        for l in 0..=f.lmax() {
            let factor = cr(1.0 + 4.0 * (l as f64) * (l as f64 + 1.0));
            for m in -(l as i64)..=(l as i64) {
                let v = g.get(l, m) * factor;
                g.set(l, m, v);
            }
        }
        g
    };
    for p in [1.0, 2.0, f64::INFINITY] {
        let lhs = lp_norm(&resid, p, &norm_grid)?;
        let rhs = lp_norm(&one_minus_4lap, p, &norm_grid)? / two_j_plus_1;
        rows.push(BoundRow {
            label: format!("fn Lp p={p}"),
            lhs,
            rhs,
            measured_c: Some(if rhs > 0.0 { lhs / rhs } else { 0.0 }),
        });
    }

    // Operator side on a seeded random operator.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let rho = crate::linalg::random_ginibre(j.dim(), &mut rng);
    let basis = IsotypicBasis::new(j);
    let hus_rho = q.husimi(j, &rho, two_j)?;
    let op_hus_rho = q.op(j, &hus_rho)?;
    let resid_op = &rho - &op_hus_rho;

    let lhs = crate::linalg::schatten_norm(&resid_op, 2.0)?;
    let rhs = crate::linalg::schatten_norm(&basis.casimir_power(&rho, s), 2.0)?
        / two_j_plus_1.powf(s);
    rows.push(BoundRow { label: format!("op L2 s={s}"), lhs, rhs, measured_c: None });

    let q_rho = basis.casimir_power(&rho, 1.0);
    let refined_op = &resid_op - &q_rho.scale(1.0 / two_j_plus_1);
    let lhs = crate::linalg::schatten_norm(&refined_op, 2.0)?;
    let rhs = crate::linalg::schatten_norm(&basis.casimir_power(&rho, 1.0 + s), 2.0)?
        / two_j_plus_1.powf(1.0 + s);
    rows.push(BoundRow { label: format!("op L2 1+s={}", 1.0 + s), lhs, rhs, measured_c: None });

    let one_plus_4q = &rho + &q_rho.scale(4.0);
    for p in [1.0, 2.0, f64::INFINITY] {
        let lhs = crate::linalg::schatten_norm(&resid_op, p)?;
        let rhs = crate::linalg::schatten_norm(&one_plus_4q, p)? / two_j_plus_1;
        rows.push(BoundRow {
            label: format!("op Lp p={p}"),
            lhs,
            rhs,
            measured_c: Some(if rhs > 0.0 { lhs / rhs } else { 0.0 }),
        });
    }

    Ok(InversionReport { j, s, rows })
}

/// The Stratonovich-Weyl pair built spectrally from the Berezin eigenvalues:
/// symbol = Hus (Op Hus)^{-1/2}, quantizer = (Op Hus)^{-1/2} Op. The symbol
/// is an isometry onto bands <= 2J and the quantizer is its left inverse.
pub struct StratonovichWeyl {
    quantizer: Quantizer,
    basis: IsotypicBasis,
    spectrum: BerezinSpectrum,
}

impl StratonovichWeyl {
    pub fn new(j: HalfInt) -> Self {
        StratonovichWeyl {
            quantizer: Quantizer::new(j),
            basis: IsotypicBasis::new(j),
            spectrum: berezin_spectrum(j),
        }
    }

    pub fn symbol(&self, rho: &CMat) -> Result<SphereFunction> {
        let two_j = self.quantizer.j.twice() as usize;
        let scaled = self
            .basis
            .apply_spectral(rho, |l| 1.0 / self.spectrum.eigenvalue(l).sqrt());
        self.quantizer.husimi(self.quantizer.j, &scaled, two_j)
    }

    pub fn quantize(&self, f: &SphereFunction) -> Result<CMat> {
        let op_f = self.quantizer.op(self.quantizer.j, f)?;
        Ok(self
            .basis
            .apply_spectral(&op_f, |l| 1.0 / self.spectrum.eigenvalue(l).sqrt()))
    }
}
