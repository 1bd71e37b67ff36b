//! Band-limited functions on the unit sphere.
//!
//! All integrals use the normalized area element (total mass 1) and the
//! harmonics are orthonormal for it, so `Y_00 = 1` and Parseval reads
//! `||f||_2^2 = sum |f_lm|^2`. Coefficients are stored flat, index
//! `l^2 + l + m`.
//!
//! Quadrature is a tensor Gauss-Legendre (in cos theta) times uniform-phi
//! grid; it integrates every spherical polynomial of degree up to
//! `min(2 n_theta - 1, n_phi - 1)` exactly. Derivative operators act on
//! coefficients through the angular-momentum ladder, which keeps the band
//! limit exact and avoids the coordinate singularity at the poles.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cr, C_ZERO};

/// Band-limited function as complex spherical-harmonic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereFunction {
    lmax: usize,
    coeffs: Vec<Complex64>,
}

impl SphereFunction {
    pub fn zero(lmax: usize) -> Self {
        SphereFunction { lmax, coeffs: vec![C_ZERO; (lmax + 1) * (lmax + 1)] }
    }

    pub fn from_coeffs(lmax: usize, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), (lmax + 1) * (lmax + 1));
        SphereFunction { lmax, coeffs }
    }

    pub fn constant(value: f64) -> Self {
        let mut f = SphereFunction::zero(0);
        f.coeffs[0] = cr(value);
        f
    }

    /// omega_z = cos(theta) = Y_10 / sqrt(3).
    pub fn coord_z() -> Self {
        let mut f = SphereFunction::zero(1);
        f.set(1, 0, cr(1.0 / 3f64.sqrt()));
        f
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn idx(l: usize, m: i64) -> usize {
        l * l + (l as i64 + m) as usize
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        if l > self.lmax || m.unsigned_abs() as usize > l {
            C_ZERO
        } else {
            self.coeffs[Self::idx(l, m)]
        }
    }

    pub fn set(&mut self, l: usize, m: i64, v: Complex64) {
        self.coeffs[Self::idx(l, m)] = v;
    }

    /// Reinterprets the function at a larger band limit.
    pub fn padded(&self, lmax: usize) -> SphereFunction {
        assert!(lmax >= self.lmax);
        let mut out = SphereFunction::zero(lmax);
        for l in 0..=self.lmax {
            for m in -(l as i64)..=(l as i64) {
                out.set(l, m, self.get(l, m));
            }
        }
        out
    }

    /// Discards coefficients above `lmax` (Legendre projection onto the
    /// first `lmax+1` bands).
    pub fn truncated(&self, lmax: usize) -> SphereFunction {
        let mut out = SphereFunction::zero(lmax);
        for l in 0..=lmax.min(self.lmax) {
            for m in -(l as i64)..=(l as i64) {
                out.set(l, m, self.get(l, m));
            }
        }
        out
    }

    /// Coefficient-side L2 norm (Parseval).
    pub fn l2_norm_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        for l in 0..=self.lmax {
            for m in 0..=(l as i64) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                let dev = self.get(l, -m) - self.get(l, m).conj() * sign;
                if dev.norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Add<&SphereFunction> for &SphereFunction {
    type Output = SphereFunction;
    fn add(self, rhs: &SphereFunction) -> SphereFunction {
        let lmax = self.lmax.max(rhs.lmax);
        let mut out = self.padded(lmax);
        for l in 0..=rhs.lmax {
            for m in -(l as i64)..=(l as i64) {
                let v = out.get(l, m) + rhs.get(l, m);
                out.set(l, m, v);
            }
        }
        out
    }
}

impl std::ops::Sub<&SphereFunction> for &SphereFunction {
    type Output = SphereFunction;
    fn sub(self, rhs: &SphereFunction) -> SphereFunction {
        let lmax = self.lmax.max(rhs.lmax);
        let mut out = self.padded(lmax);
        for l in 0..=rhs.lmax {
            for m in -(l as i64)..=(l as i64) {
                let v = out.get(l, m) - rhs.get(l, m);
                out.set(l, m, v);
            }
        }
        out
    }
}

impl std::ops::Mul<Complex64> for &SphereFunction {
    type Output = SphereFunction;
    fn mul(self, rhs: Complex64) -> SphereFunction {
        SphereFunction {
            lmax: self.lmax,
            coeffs: self.coeffs.iter().map(|c| c * rhs).collect(),
        }
    }
}

/// One quadrature node.
#[derive(Debug, Clone, Copy)]
pub struct GridNode {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

impl GridNode {
    pub fn omega(&self) -> [f64; 3] {
        let st = self.theta.sin();
        [st * self.phi.cos(), st * self.phi.sin(), self.theta.cos()]
    }
}

/// Product quadrature grid with positive weights summing to 1.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub degree_exact: usize,
    nodes: Vec<GridNode>,
}

impl SphereGrid {
    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn require_degree(&self, need: usize) -> Result<()> {
        if self.degree_exact < need {
            Err(Error::InsufficientGrid { need, have: self.degree_exact })
        } else {
            Ok(())
        }
    }

    /// Integrates grid values against the normalized measure.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        self.nodes
            .iter()
            .zip(values)
            .map(|(n, v)| v * cr(n.weight))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by the three-term recurrence.
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / deriv;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let deriv = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * deriv * deriv);
    }
    (xs, ws)
}

/// Builds a grid that integrates spherical polynomials of degree
/// `degree_needed` exactly: n_theta = ceil((degree+1)/2) + 1 Gauss nodes and
/// n_phi = degree + 2 uniform angles.
pub fn make_grid(degree_needed: usize) -> SphereGrid {
    let n_theta = (degree_needed + 1).div_ceil(2) + 1;
    let n_phi = degree_needed + 2;
    let (xs, ws) = gauss_legendre(n_theta);
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    for (x, w) in xs.iter().zip(ws.iter()) {
        let theta = x.clamp(-1.0, 1.0).acos();
        // GL weights sum to 2 over cos θ; the normalized measure splits that
        // factor together with the phi average.
        let weight = w / (2.0 * n_phi as f64);
        for b in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * b as f64 / n_phi as f64;
            nodes.push(GridNode { theta, phi, weight });
        }
    }
    let degree_exact = (2 * n_theta - 1).min(n_phi - 1);
    SphereGrid { n_theta, n_phi, degree_exact, nodes }
}

/// Orthonormal (normalized-measure) spherical harmonics at one point, for all
/// l <= lmax and |m| <= l, returned in coefficient layout.
pub fn harmonics_at(lmax: usize, theta: f64, phi: f64) -> Vec<Complex64> {
    let x = theta.cos();
    let s = theta.sin();
    let mut out = vec![C_ZERO; (lmax + 1) * (lmax + 1)];
    // pbar[l] holds the geodesy-normalized associated Legendre values for the
    // current m; multiplied by sqrt(4 pi) they match our normalization.
    let sqrt4pi = (4.0 * std::f64::consts::PI).sqrt();
    let mut pmm = 1.0 / sqrt4pi * sqrt4pi; // \bar P_00 * sqrt(4pi) = 1
    for m in 0..=lmax {
        let mf = m as f64;
        if m > 0 {
            pmm *= -(((2.0 * mf + 1.0) / (2.0 * mf)).sqrt()) * s;
        }
        let mut plm_prev = 0.0f64;
        let mut plm = pmm;
        for l in m..=lmax {
            let lf = l as f64;
            if l > m {
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                let next = a * (x * plm - b * plm_prev);
                plm_prev = plm;
                plm = next;
            }
            let e = Complex64::new(0.0, mf * phi).exp();
            let val = plm * e;
            out[SphereFunction::idx(l, m as i64)] = val;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out[SphereFunction::idx(l, -(m as i64))] = val.conj() * sign;
            }
        }
    }
    out
}

/// Evaluates `f` on the grid.
pub fn synthesis(f: &SphereFunction, grid: &SphereGrid) -> Vec<Complex64> {
    grid.nodes()
        .iter()
        .map(|n| {
            let ylm = harmonics_at(f.lmax, n.theta, n.phi);
            f.coeffs
                .iter()
                .zip(ylm.iter())
                .map(|(c, y)| c * y)
                .sum()
        })
        .collect()
}

/// Evaluates `f` at a single point.
pub fn evaluate_at(f: &SphereFunction, theta: f64, phi: f64) -> Complex64 {
    let ylm = harmonics_at(f.lmax, theta, phi);
    f.coeffs.iter().zip(ylm.iter()).map(|(c, y)| c * y).sum()
}

/// Projects grid values onto harmonics up to `lmax`. Exact when the grid
/// resolves degree `lmax + band(values)`.
pub fn analysis(values: &[Complex64], lmax: usize, grid: &SphereGrid) -> SphereFunction {
    let mut coeffs = vec![C_ZERO; (lmax + 1) * (lmax + 1)];
    for (node, v) in grid.nodes().iter().zip(values) {
        let ylm = harmonics_at(lmax, node.theta, node.phi);
        let wv = v * cr(node.weight);
        for (c, y) in coeffs.iter_mut().zip(ylm.iter()) {
            *c += y.conj() * wv;
        }
    }
    SphereFunction { lmax, coeffs }
}

/// Multiplies each band by -l(l+1).
pub fn laplacian(f: &SphereFunction) -> SphereFunction {
    let mut out = f.clone();
    for l in 0..=f.lmax {
        let factor = cr(-(l as f64) * (l as f64 + 1.0));
        for m in -(l as i64)..=(l as i64) {
            let v = out.get(l, m) * factor;
            out.set(l, m, v);
        }
    }
    out
}

/// Spectral power of -Delta: multiplies band l by (l(l+1))^s.
pub fn minus_laplacian_power(f: &SphereFunction, s: f64) -> SphereFunction {
    let mut out = f.clone();
    for l in 0..=f.lmax {
        let ll = (l as f64) * (l as f64 + 1.0);
        let factor = cr(if l == 0 { 0.0 } else { ll.powf(s) });
        for m in -(l as i64)..=(l as i64) {
            let v = out.get(l, m) * factor;
            out.set(l, m, v);
        }
    }
    out
}

/// The three angular-momentum derivative components (L_x f, L_y f, L_z f),
/// computed exactly on coefficients via the ladder action.
pub fn angular_momentum(f: &SphereFunction) -> [SphereFunction; 3] {
    let lmax = f.lmax;
    let mut lp = SphereFunction::zero(lmax);
    let mut lm = SphereFunction::zero(lmax);
    let mut lz = SphereFunction::zero(lmax);
    for l in 0..=lmax {
        let lf = l as f64;
        for m in -(l as i64)..=(l as i64) {
            let c = f.get(l, m);
            if c == C_ZERO {
                continue;
            }
            let mf = m as f64;
            lz.set(l, m, c * cr(mf));
            if m < l as i64 {
                let amp = ((lf - mf) * (lf + mf + 1.0)).sqrt();
                let prev = lp.get(l, m + 1);
                lp.set(l, m + 1, prev + c * cr(amp));
            }
            if m > -(l as i64) {
                let amp = ((lf + mf) * (lf - mf + 1.0)).sqrt();
                let prev = lm.get(l, m - 1);
                lm.set(l, m - 1, prev + c * cr(amp));
            }
        }
    }
    let half = cr(0.5);
    let mhalf_i = Complex64::new(0.0, -0.5);
    let lx = SphereFunction {
        lmax,
        coeffs: lp.coeffs.iter().zip(lm.coeffs.iter()).map(|(p, m)| (p + m) * half).collect(),
    };
    let ly = SphereFunction {
        lmax,
        coeffs: lp
            .coeffs
            .iter()
            .zip(lm.coeffs.iter())
            .map(|(p, m)| (p - m) * mhalf_i)
            .collect(),
    };
    [lx, ly, lz]
}

/// Pointwise grad f . grad g on the grid, via
/// (Delta(fg) - f Delta g - g Delta f) / 2.
pub fn grad_dot(f: &SphereFunction, g: &SphereFunction, grid: &SphereGrid) -> Result<Vec<Complex64>> {
    grid.require_degree(2 * (f.lmax + g.lmax))?;
    let fv = synthesis(f, grid);
    let gv = synthesis(g, grid);
    let prod: Vec<Complex64> = fv.iter().zip(gv.iter()).map(|(a, b)| a * b).collect();
    let fg = analysis(&prod, f.lmax + g.lmax, grid);
    let lap_fg = synthesis(&laplacian(&fg), grid);
    let lap_f = synthesis(&laplacian(f), grid);
    let lap_g = synthesis(&laplacian(g), grid);
    Ok((0..grid.len())
        .map(|k| (lap_fg[k] - fv[k] * lap_g[k] - gv[k] * lap_f[k]) * cr(0.5))
        .collect())
}

/// Pointwise Poisson bracket {f, g} on the grid, assembled from rotational
/// derivatives: {f, g} = -sum_{ijk} eps_{ijk} omega_i (L_j f)(L_k g). This
/// form never touches the polar coordinate singularity.
pub fn poisson_bracket(
    f: &SphereFunction,
    g: &SphereFunction,
    grid: &SphereGrid,
) -> Result<Vec<Complex64>> {
    grid.require_degree(2 * (f.lmax + g.lmax + 1))?;
    let lf = angular_momentum(f).map(|c| synthesis(&c, grid));
    let lg = angular_momentum(g).map(|c| synthesis(&c, grid));
    const EPS: [(usize, usize, usize, f64); 6] = [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (1, 0, 2, -1.0),
        (2, 1, 0, -1.0),
    ];
    Ok(grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, node)| {
            let omega = node.omega();
            let mut acc = C_ZERO;
            for &(i, j, l, sign) in EPS.iter() {
                acc -= cr(sign * omega[i]) * lf[j][k] * lg[l][k];
            }
            acc
        })
        .collect())
}

/// L^p norm of grid values; p = infinity gives the grid max.
pub fn lp_norm_values(values: &[Complex64], p: f64, grid: &SphereGrid) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let s: f64 = grid
        .nodes()
        .iter()
        .zip(values)
        .map(|(n, v)| n.weight * v.norm().powf(p))
        .sum();
    Ok(s.powf(1.0 / p))
}

pub fn lp_norm(f: &SphereFunction, p: f64, grid: &SphereGrid) -> Result<f64> {
    lp_norm_values(&synthesis(f, grid), p, grid)
}

/// Sobolev norm with derivative magnitudes generated by words in the
/// rotational derivatives: |D^n f|^2 = sum over words w of length n of
/// |L_w f|^2. For n = 1 this is exactly |grad f|^2.
pub fn sobolev_norm(f: &SphereFunction, k: usize, p: f64, grid: &SphereGrid) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if k > 4 {
        return Err(Error::InvalidArgument(format!("Sobolev order {k} > 4")));
    }
    // Level n holds all words of length n applied to f.
    let mut level: Vec<SphereFunction> = vec![f.clone()];
    let mut magnitudes: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for _n in 0..=k {
        let parts: Vec<Vec<Complex64>> = level.iter().map(|h| synthesis(h, grid)).collect();
        let mag: Vec<f64> = (0..grid.len())
            .map(|idx| parts.iter().map(|p| p[idx].norm_sqr()).sum::<f64>().sqrt())
            .collect();
        magnitudes.push(mag);
        if _n < k {
            let mut next = Vec::with_capacity(level.len() * 3);
            for h in &level {
                let [a, b, c] = angular_momentum(h);
                next.push(a);
                next.push(b);
                next.push(c);
            }
            level = next;
        }
    }
    if p.is_infinite() {
        let mut best = 0.0f64;
        for mag in &magnitudes {
            best = best.max(mag.iter().cloned().fold(0.0, f64::max));
        }
        return Ok(best);
    }
    let mut total = 0.0;
    for mag in &magnitudes {
        total += grid
            .nodes()
            .iter()
            .zip(mag)
            .map(|(n, v)| n.weight * v.powf(p))
            .sum::<f64>();
    }
    Ok(total.powf(1.0 / p))
}

/// Hoelder seminorm approximated by the max over grid point pairs; a
/// certified lower bound for the true seminorm.
pub fn holder_seminorm(f: &SphereFunction, alpha: f64, grid: &SphereGrid) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("Hoelder exponent {alpha}")));
    }
    let values = synthesis(f, grid);
    let pts: Vec<[f64; 3]> = grid.nodes().iter().map(|n| n.omega()).collect();
    let mut best = 0.0f64;
    for a in 0..pts.len() {
        for b in (a + 1)..pts.len() {
            let dx = pts[a][0] - pts[b][0];
            let dy = pts[a][1] - pts[b][1];
            let dz = pts[a][2] - pts[b][2];
            let dist = (dx * dx + dy * dy + dz * dz).sqrt();
            if dist < 1e-14 {
                continue;
            }
            let dv = (values[a] - values[b]).norm();
            best = best.max(dv / dist.powf(alpha));
        }
    }
    Ok(best)
}

/// Result of a pointwise composition phi(f) re-expanded at band `lout`.
#[derive(Debug, Clone)]
pub struct Composed {
    pub function: SphereFunction,
    /// sup-residual of the band-limited result against phi(f) on a finer
    /// grid; reports how much aliasing the truncation introduced.
    pub aliasing_sup: f64,
}

/// Pointwise composition phi ∘ f projected to band `lout`.
pub fn compose(
    phi: impl Fn(f64) -> f64,
    f: &SphereFunction,
    grid: &SphereGrid,
    lout: usize,
) -> Result<Composed> {
    grid.require_degree(f.lmax + lout)?;
    let fv = synthesis(f, grid);
    let mut applied = Vec::with_capacity(fv.len());
    for v in &fv {
        if v.im.abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "compose expects a real-valued function".into(),
            ));
        }
        let y = phi(v.re);
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "phi not defined at f = {}",
                v.re
            )));
        }
        applied.push(cr(y));
    }
    let function = analysis(&applied, lout, grid);

    // Measure aliasing on a finer grid.
    let fine = make_grid(2 * (lout + f.lmax) + 8);
    let fv_fine = synthesis(f, &fine);
    let gv_fine = synthesis(&function, &fine);
    let mut sup = 0.0f64;
    for (a, b) in fv_fine.iter().zip(gv_fine.iter()) {
        let y = phi(a.re);
        if y.is_finite() {
            sup = sup.max((b - cr(y)).norm());
        }
    }
    Ok(Composed { function, aliasing_sup: sup })
}

/// Rotates a function by the z-y rotation R(phi, theta):
/// (R f)(omega) = f(R^{-1} omega). Exact on coefficients through Wigner
/// matrices per band.
pub fn rotate_function(f: &SphereFunction, phi: f64, theta: f64) -> SphereFunction {
    use crate::halfint::HalfInt;
    let mut out = SphereFunction::zero(f.lmax);
    for l in 0..=f.lmax {
        let d = crate::su2::wigner_rotation(HalfInt::from_int(l as i64), phi, theta);
        // Basis order in `d` is descending m; coefficients ascending. Map
        // row/col r = l - m.
        for m_out in -(l as i64)..=(l as i64) {
            let mut acc = C_ZERO;
            for m_in in -(l as i64)..=(l as i64) {
                let r = (l as i64 - m_out) as usize;
                let c = (l as i64 - m_in) as usize;
                acc += d[(r, c)] * f.get(l, m_in);
            }
            out.set(l, m_out, acc);
        }
    }
    out
}

/// Applies the 3D rotation Rz(phi) Ry(theta) to a vector.
pub fn rotate_vector(omega: [f64; 3], phi: f64, theta: f64) -> [f64; 3] {
    let (ct, st) = (theta.cos(), theta.sin());
    let (cp, sp) = (phi.cos(), phi.sin());
    let after_y = [ct * omega[0] + st * omega[2], omega[1], -st * omega[0] + ct * omega[2]];
    [
        cp * after_y[0] - sp * after_y[1],
        sp * after_y[0] + cp * after_y[1],
        after_y[2],
    ]
}

/// Band-limited random real function with iid Gaussian coefficients.
pub fn random_real_function(lmax: usize, rng: &mut impl rand::Rng) -> SphereFunction {
    use rand_distr::StandardNormal;
    let mut f = SphereFunction::zero(lmax);
    for l in 0..=lmax {
        let x: f64 = rng.sample(StandardNormal);
        f.set(l, 0, cr(x));
        for m in 1..=(l as i64) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) * cr(0.5f64.sqrt());
            f.set(l, m, z);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            f.set(l, -m, z.conj() * cr(sign));
        }
    }
    f
}
