//! Quantitative residuals of the large-spin approximation theorems:
//! product expansions of quantized functions, semiclassical trace formulas,
//! Berezin-Lieb sandwiches, channel approximation bounds with their explicit
//! constants, entropy expansions, and log-log rate fitting for sweeps.

use num_complex::Complex64;
use std::sync::Arc;

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::linalg::{cr, eigh, schatten_norm, von_neumann_entropy, CMat};
use crate::quantize::{berezin_spectrum, BoundRow, Quantizer};
use crate::sphere::{
    analysis, grad_dot, laplacian, lp_norm_values, make_grid, poisson_bracket, sobolev_norm,
    synthesis, SphereFunction,
};

/// Scalar test function plus the metadata the error bounds need. The harness
/// never differentiates symbolically; callers supply `sup |phi''|` over the
/// relevant interval and Hoelder data when known.
#[derive(Clone)]
pub struct PhiSpec {
    pub name: String,
    pub func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// sup of |phi''| over the interval the test exercises.
    pub second_derivative_sup: Option<f64>,
    pub convex: bool,
    /// (alpha, seminorm) Hoelder data on the relevant interval.
    pub holder: Option<(f64, f64)>,
}

impl std::fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PhiSpec({})", self.name)
    }
}

impl PhiSpec {
    pub fn new(name: &str, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PhiSpec {
            name: name.into(),
            func: Arc::new(func),
            second_derivative_sup: None,
            convex: false,
            holder: None,
        }
    }

    pub fn square() -> Self {
        PhiSpec {
            name: "square".into(),
            func: Arc::new(|x| x * x),
            second_derivative_sup: Some(2.0),
            convex: true,
            holder: None,
        }
    }

    /// exp on an interval bounded above by `hi`.
    pub fn exp_on(hi: f64) -> Self {
        PhiSpec {
            name: "exp".into(),
            func: Arc::new(f64::exp),
            second_derivative_sup: Some(hi.exp()),
            convex: true,
            holder: None,
        }
    }

    /// x log x on [0, 1] (second derivative 1/x is unbounded there).
    pub fn x_log_x() -> Self {
        PhiSpec {
            name: "xlogx".into(),
            func: Arc::new(|x: f64| if x > 0.0 { x * x.ln() } else { 0.0 }),
            second_derivative_sup: None,
            convex: true,
            holder: None,
        }
    }

    /// `-|x|^alpha`: convex on `[0, inf)` with Hoelder-alpha seminorm 1 on `[0,1]`.
    pub fn abs_alpha(alpha: f64) -> Self {
        PhiSpec {
            name: format!("abs_alpha({alpha})"),
            func: Arc::new(move |x: f64| -x.abs().powf(alpha)),
            second_derivative_sup: None,
            convex: true,
            holder: Some((alpha, 1.0)),
        }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        PhiSpec {
            name: format!("affine({a},{b})"),
            func: Arc::new(move |x| a * x + b),
            second_derivative_sup: Some(0.0),
            convex: true,
            holder: Some((1.0, a.abs())),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.func)(x)
    }

    /// Discrete midpoint-convexity check over `[lo, hi]`.
    pub fn check_convex_on(&self, lo: f64, hi: f64) -> bool {
        if hi <= lo {
            return true;
        }
        let n = 41;
        let scale = (1.0f64).max(self.eval(lo).abs()).max(self.eval(hi).abs());
        for k in 1..(n - 1) {
            let x0 = lo + (hi - lo) * (k - 1) as f64 / (n - 1) as f64;
            let x1 = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let x2 = lo + (hi - lo) * (k + 1) as f64 / (n - 1) as f64;
            if self.eval(x1) > 0.5 * (self.eval(x0) + self.eval(x2)) + 1e-10 * scale {
                return false;
            }
        }
        true
    }
}

fn check_exponents(p: f64, p1: f64, p2: f64) -> Result<()> {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    if [p, p1, p2].iter().any(|x| x.is_nan() || *x < 1.0) {
        return Err(Error::InvalidExponent(p.min(p1).min(p2)));
    }
    if (inv(p) - inv(p1) - inv(p2)).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "exponent mismatch: 1/{p} != 1/{p1} + 1/{p2}"
        )));
    }
    Ok(())
}

/// Residuals of the product expansion theorems for one (J, f, g, exponents).
#[derive(Debug, Clone)]
pub struct ProductReport {
    pub j: HalfInt,
    pub rows: Vec<BoundRow>,
    /// First-order commutator residual ||[Op f, Op g] - 2i/(2J+1) Op({f,g})||_1 / (2J+1).
    pub commutator_residual: f64,
}

/// Evaluates the multiplicativity residuals:
/// (a) ||Hus(Op f Op g) - fg||_p,
/// (b) (2J+1)^{-1/p} ||Op f Op g - Op(fg)||_p,
/// (c) the symmetrized product residual in trace norm with Hoelder reference,
/// (d) the second-order Husimi expansion residual in L1,
/// (e) the second-order operator expansion residual in trace norm,
/// each against its reference scale (Sobolev/Hoelder norms of f and g and
/// the predicted power of 2J+1), reported with the measured constant.
pub fn product_residuals(
    j: HalfInt,
    f: &SphereFunction,
    g: &SphereFunction,
    p: f64,
    p1: f64,
    p2: f64,
    holder_data: Option<((f64, f64), (f64, f64))>,
) -> Result<ProductReport> {
    check_exponents(p, p1, p2)?;
    let q = Quantizer::new(j);
    let d = j.dim() as f64;
    let two_j = j.twice() as usize;
    let lf = f.lmax();
    let lg = g.lmax();
    let lfg = lf + lg;

    let op_f = q.op(j, f)?;
    let op_g = q.op(j, g)?;
    let prod = &op_f * &op_g;

    // Shared evaluation grid that resolves every function in play.
    let band = lfg.max(two_j) + 2;
    let grid = make_grid(2 * band + 4);
    let fv = synthesis(f, &grid);
    let gv = synthesis(g, &grid);
    let fgv: Vec<Complex64> = fv.iter().zip(gv.iter()).map(|(a, b)| a * b).collect();
    let fg = analysis(&fgv, lfg, &grid);

    let sob_f = sobolev_norm(f, 2, p1, &grid)?;
    let sob_g = sobolev_norm(g, 2, p2, &grid)?;
    let sob_ref = sob_f * sob_g / d;

    let mut rows = Vec::new();

    // (a) Husimi of the product against fg.
    let hus_prod = q.husimi(j, &prod, two_j)?;
    let hus_vals = synthesis(&hus_prod, &grid);
    let diff: Vec<Complex64> = hus_vals.iter().zip(fgv.iter()).map(|(a, b)| a - b).collect();
    let lhs = lp_norm_values(&diff, p, &grid)?;
    rows.push(BoundRow {
        label: "husimi-product".into(),
        lhs,
        rhs: sob_ref,
        measured_c: Some(if sob_ref > 0.0 { lhs / sob_ref } else { 0.0 }),
    });

    // (b) Operator product against Op(fg).
    let op_fg = q.op(j, &fg)?;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let lhs = schatten_norm(&(&prod - &op_fg), p)? / d.powf(inv_p);
    rows.push(BoundRow {
        label: "op-product".into(),
        lhs,
        rhs: sob_ref,
        measured_c: Some(if sob_ref > 0.0 { lhs / sob_ref } else { 0.0 }),
    });

    // (c) Symmetrized product in trace norm against the Hoelder reference.
    let sym = (&op_f * &op_g + &op_g * &op_f).scale(0.5);
    let lhs = schatten_norm(&(&sym - &op_fg), 1.0)? / d;
    let rhs = holder_data
        .map(|((a, na), (b, nb))| na * nb / d.powf((a + b) / 2.0))
        .unwrap_or(f64::NAN);
    rows.push(BoundRow {
        label: "symmetrized-product".into(),
        lhs,
        rhs,
        measured_c: if rhs.is_finite() && rhs > 0.0 {
            Some(lhs / rhs)
        } else {
            None
        },
    });

    // Second-order data: i{f,g} - grad f . grad g (+ Delta(fg)).
    let bracket = poisson_bracket(f, g, &grid)?;
    let gdot = grad_dot(f, g, &grid)?;
    let lap_fg_vals = synthesis(&laplacian(&fg), &grid);
    let i = Complex64::new(0.0, 1.0);
    let corr_vals: Vec<Complex64> = (0..grid.len())
        .map(|k| (i * bracket[k] - gdot[k]) * cr(1.0 / d))
        .collect();
    let sob4_f = sobolev_norm(f, 4, 2.0, &grid)?;
    let sob4_g = sobolev_norm(g, 4, 2.0, &grid)?;
    let second_ref = sob4_f * sob4_g / (d * d);

    // (d) Husimi second order: residual against fg + (i{f,g} - grad + Delta(fg))/(2J+1).
    let target_vals: Vec<Complex64> = (0..grid.len())
        .map(|k| fgv[k] + corr_vals[k] + lap_fg_vals[k] * cr(1.0 / d))
        .collect();
    let diff2: Vec<Complex64> = hus_vals
        .iter()
        .zip(target_vals.iter())
        .map(|(a, b)| a - b)
        .collect();
    let lhs = lp_norm_values(&diff2, 1.0, &grid)?;
    rows.push(BoundRow {
        label: "husimi-second-order".into(),
        lhs,
        rhs: second_ref,
        measured_c: Some(if second_ref > 0.0 { lhs / second_ref } else { 0.0 }),
    });

    // (e) Operator second order: Op f Op g - Op(fg + (i{f,g} - grad)/(2J+1)).
    let corrected = analysis(
        &target_vals
            .iter()
            .enumerate()
            .map(|(k, v)| v - lap_fg_vals[k] * cr(1.0 / d))
            .collect::<Vec<_>>(),
        lfg + 2,
        &grid,
    );
    let op_corr = q.op(j, &corrected)?;
    let lhs = schatten_norm(&(&prod - &op_corr), 1.0)? / d;
    rows.push(BoundRow {
        label: "op-second-order".into(),
        lhs,
        rhs: second_ref,
        measured_c: Some(if second_ref > 0.0 { lhs / second_ref } else { 0.0 }),
    });

    // Commutator against the Poisson bracket.
    let bracket_fn = analysis(&bracket, lfg + 2, &grid);
    let op_bracket = q.op(j, &bracket_fn)?;
    let comm = &op_f * &op_g - &op_g * &op_f;
    let two_i_over = Complex64::new(0.0, 2.0 / d);
    let commutator_residual = schatten_norm(&(comm - op_bracket * two_i_over), 1.0)? / d;

    Ok(ProductReport { j, rows, commutator_residual })
}

/// Classical side of the trace formula: ∫ phi(f) dω by oversampled
/// quadrature (spectrally accurate for smooth phi of a band-limited f).
pub fn classical_integral(phi: &PhiSpec, f: &SphereFunction) -> Result<f64> {
    let grid = make_grid(4 * f.lmax() + 96);
    let values = synthesis(f, &grid);
    let mut acc = 0.0;
    for (node, v) in grid.nodes().iter().zip(values.iter()) {
        if v.im.abs() > 1e-9 {
            return Err(Error::InvalidArgument("phi of a complex-valued function".into()));
        }
        let y = phi.eval(v.re);
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("phi undefined at {}", v.re)));
        }
        acc += node.weight * y;
    }
    Ok(acc)
}

/// Trace-formula report at one (J, phi, f).
#[derive(Debug, Clone)]
pub struct TraceFormulaReport {
    pub j: HalfInt,
    pub trace_average: f64,
    pub classical: f64,
    /// classical - trace_average; non-negative for convex phi.
    pub error: f64,
    /// Explicit second-derivative bound, when phi supplies it.
    pub dd_bound: Option<f64>,
    /// Measured constant of the convex-Hoelder bound, when applicable.
    pub holder_measured_c: Option<f64>,
}

/// Evaluates (2J+1)^{-1} Tr[phi(Op_J f)] against ∫ phi(f) dω.
pub fn trace_of_function(j: HalfInt, phi: &PhiSpec, f: &SphereFunction) -> Result<TraceFormulaReport> {
    let q = Quantizer::new(j);
    let op_f = q.op(j, f)?;
    let (vals, _) = eigh(&op_f);
    let mut trace_average = 0.0;
    for &x in vals.iter() {
        let y = phi.eval(x);
        if !y.is_finite() {
            return Err(Error::InvalidArgument(format!("phi undefined at eigenvalue {x}")));
        }
        trace_average += y;
    }
    trace_average /= j.dim() as f64;
    let classical = classical_integral(phi, f)?;
    let error = classical - trace_average;

    let dd_bound = phi.second_derivative_sup.map(|dd| {
        let grad_sq: f64 = (0..=f.lmax())
            .map(|l| {
                (l as f64) * (l as f64 + 1.0)
                    * (-(l as i64)..=(l as i64))
                        .map(|m| f.get(l, m).norm_sqr())
                        .sum::<f64>()
            })
            .sum();
        dd * grad_sq / j.dim() as f64
    });

    let holder_measured_c = match (phi.convex, phi.holder) {
        (true, Some((alpha, seminorm))) if seminorm > 0.0 => {
            // (1 - 4 Delta) f in L1.
            let grid = make_grid(2 * f.lmax() + 4);
            let mut g = f.clone();
            for l in 0..=f.lmax() {
                let factor = cr(1.0 + 4.0 * (l as f64) * (l as f64 + 1.0));
                for m in -(l as i64)..=(l as i64) {
                    let v = g.get(l, m) * factor;
                    g.set(l, m, v);
                }
            }
            let l1 = lp_norm_values(&synthesis(&g, &grid), 1.0, &grid)?;
            let reference = seminorm * l1.powf(alpha) / (j.dim() as f64).powf(alpha);
            Some(if reference > 0.0 { error.abs() / reference } else { 0.0 })
        }
        _ => None,
    };

    Ok(TraceFormulaReport { j, trace_average, classical, error, dd_bound, holder_measured_c })
}

/// Input to the Berezin-Lieb sandwich: either a self-adjoint operator or an
/// upper symbol (a real band-limited function).
pub enum SymbolInput<'a> {
    Operator(&'a CMat),
    UpperSymbol(&'a SphereFunction),
}

/// The Berezin-Lieb triple (∫phi(lower symbol), normalized trace of phi(rho),
/// ∫phi(upper symbol)) for convex phi; the sandwich ordering is the caller's
/// assertion.
pub fn berezin_lieb_gap(
    j: HalfInt,
    phi: &PhiSpec,
    input: SymbolInput<'_>,
) -> Result<(f64, f64, f64)> {
    let q = Quantizer::new(j);
    let two_j = j.twice() as usize;
    let spectrum = berezin_spectrum(j);

    let (rho, upper): (CMat, SphereFunction) = match input {
        SymbolInput::UpperSymbol(f) => {
            if f.lmax() > two_j {
                return Err(Error::InvalidArgument(
                    "upper symbol band exceeds 2J; no operator pins it down".into(),
                ));
            }
            (q.op(j, f)?, f.clone())
        }
        SymbolInput::Operator(rho) => {
            if crate::linalg::max_abs(&(rho - rho.adjoint())) > 1e-10 {
                return Err(Error::InvalidArgument(
                    "Berezin-Lieb needs a self-adjoint operator".into(),
                ));
            }
            let hus = q.husimi(j, rho, two_j)?;
            let mut upper = hus.clone();
            for l in 0..=two_j {
                let factor = cr(1.0 / spectrum.eigenvalue(l));
                for m in -(l as i64)..=(l as i64) {
                    let v = upper.get(l, m) * factor;
                    upper.set(l, m, v);
                }
            }
            (rho.clone(), upper)
        }
    };
    let lower = q.husimi(j, &rho, two_j)?;

    // Convexity must hold on the union of the achieved ranges.
    let grid = make_grid(4 * two_j.max(upper.lmax()) + 32);
    let lower_vals = synthesis(&lower, &grid);
    let upper_vals = synthesis(&upper, &grid);
    let (vals, _) = eigh(&rho);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in lower_vals.iter().chain(upper_vals.iter()) {
        lo = lo.min(v.re);
        hi = hi.max(v.re);
    }
    for &v in vals.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !phi.check_convex_on(lo, hi) {
        return Err(Error::InvalidArgument(format!(
            "phi '{}' fails the midpoint convexity test on [{lo}, {hi}]",
            phi.name
        )));
    }

    let lower_int: f64 = grid
        .nodes()
        .iter()
        .zip(lower_vals.iter())
        .map(|(n, v)| n.weight * phi.eval(v.re))
        .sum();
    let upper_int: f64 = grid
        .nodes()
        .iter()
        .zip(upper_vals.iter())
        .map(|(n, v)| n.weight * phi.eval(v.re))
        .sum();
    let middle = vals.iter().map(|&x| phi.eval(x)).sum::<f64>() / j.dim() as f64;
    Ok((lower_int, middle, upper_int))
}

/// Which channel a sweep entry exercises: one vertex (by offset i, M = K+i)
/// or a mixture over all vertices.
#[derive(Debug, Clone)]
pub enum ChannelSpec {
    VertexOffset(HalfInt),
    Mixture(Vec<f64>),
}

fn build_channel(j: HalfInt, k: HalfInt, spec: &ChannelSpec) -> Result<Channel> {
    match spec {
        ChannelSpec::VertexOffset(i) => Channel::vertex_by_offset(j, k, *i),
        ChannelSpec::Mixture(w) => Channel::new(j, k, w),
    }
}

/// Generalized Husimi symbol matching a channel spec: Hus^{-i} for the
/// vertex with M = K+i, or the weighted mixture of those symbols.
pub fn husimi_for_spec(
    qj: &Quantizer,
    k: HalfInt,
    spec: &ChannelSpec,
    rho: &CMat,
    lout: usize,
) -> Result<SphereFunction> {
    match spec {
        ChannelSpec::VertexOffset(i) => qj.husimi(-*i, rho, lout),
        ChannelSpec::Mixture(w) => {
            let labels = crate::channels::vertex_labels(qj.j, k);
            if labels.len() != w.len() {
                return Err(Error::InvalidWeights("weight count".into()));
            }
            let mut acc = SphereFunction::zero(lout);
            for (&m, &wm) in labels.iter().zip(w.iter()) {
                if wm == 0.0 {
                    continue;
                }
                let i = m - k;
                acc = &acc + &(&qj.husimi(-i, rho, lout)? * cr(wm));
            }
            Ok(acc)
        }
    }
}

/// Channel-approximation residual report: the operator-level and
/// Husimi-level left sides with their explicit-constant right sides.
#[derive(Debug, Clone)]
pub struct ChannelResidualReport {
    pub j: HalfInt,
    pub k: HalfInt,
    pub p: f64,
    /// Operator-level approximation row (constant 12 vertex / 6 mixture).
    pub op_row: BoundRow,
    /// Husimi-level approximation row (constant 2 vertex / 1 mixture).
    pub hus_row: BoundRow,
}

/// Evaluates the channel approximation bounds for a vertex (explicit
/// constants 12 and 2) or a mixture with K >= 2J (constants 6 and 1).
pub fn channel_residuals(
    j: HalfInt,
    k: HalfInt,
    spec: &ChannelSpec,
    rho: &CMat,
    p: f64,
) -> Result<ChannelResidualReport> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if let ChannelSpec::Mixture(_) = spec {
        if k.twice() < 2 * j.twice() {
            return Err(Error::InvalidArgument(
                "mixture bounds require K >= 2J".into(),
            ));
        }
    }
    let channel = build_channel(j, k, spec)?;
    let qj = Quantizer::new(j);
    let qk = Quantizer::new(k);
    let (dj, dk) = (j.dim() as f64, k.dim() as f64);
    let ratio = dk / dj;
    let two_j = j.twice() as usize;
    let two_k = k.twice() as usize;
    let rho_p = schatten_norm(rho, p)?;

    let out = channel.apply(rho)?.scale(ratio);
    let sym = husimi_for_spec(&qj, k, spec, rho, two_j)?;
    let op_sym = qk.op(k, &sym)?;
    let lhs_op = schatten_norm(&(&out - &op_sym), p)?
        / if p.is_infinite() { 1.0 } else { ratio.powf(1.0 / p) };

    let (c_op, c_hus, eps_op, eps_hus) = match spec {
        ChannelSpec::VertexOffset(i) => {
            let (jv, iv, kv) = (j.value(), i.value(), k.value());
            let denom = 2.0 * kv - jv + iv + 1.0;
            (
                12.0,
                2.0,
                (jv - iv) * (jv + iv + 1.0) / denom,
                (jv + iv) * (jv - iv + 1.0) / denom,
            )
        }
        ChannelSpec::Mixture(_) => {
            let e = dj * dj / dk;
            (6.0, 1.0, e, e)
        }
    };

    let op_row = BoundRow {
        label: format!("channel-op p={p}"),
        lhs: lhs_op,
        rhs: c_op * eps_op * rho_p,
        measured_c: None,
    };

    // Husimi level: function p-norms on a grid resolving band 2K.
    let hus_out = qk.husimi(k, &channel.apply(rho)?, two_k)?;
    let grid = make_grid(2 * two_k.max(two_j) + 4);
    let lhs_vals: Vec<Complex64> = {
        let a = synthesis(&hus_out, &grid);
        let b = synthesis(&sym, &grid);
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x * cr(ratio) - y)
            .collect()
    };
    let lhs_hus = lp_norm_values(&lhs_vals, p, &grid)?
        * if p.is_infinite() { 1.0 } else { dj.powf(1.0 / p) };
    let hus_row = BoundRow {
        label: format!("channel-husimi p={p}"),
        lhs: lhs_hus,
        rhs: c_hus * eps_hus * rho_p,
        measured_c: None,
    };

    Ok(ChannelResidualReport { j, k, p, op_row, hus_row })
}

/// Trace-formula report for a channel output.
#[derive(Debug, Clone)]
pub struct ChannelTraceReport {
    pub j: HalfInt,
    pub k: HalfInt,
    pub trace_side: f64,
    pub classical_side: f64,
    /// trace_side - classical_side.
    pub error: f64,
    /// Second-derivative bound (constant 10 vertex / 4 mixture), when
    /// phi supplies phi''.
    pub dd_bound: Option<f64>,
    /// Measured constant of the convex-Hoelder variant, when applicable.
    pub holder_measured_c: Option<f64>,
}

/// Evaluates the channel trace formula
/// (2K+1)^{-1} Tr[phi((2K+1)/(2J+1) Phi(rho))] = ∫ phi(symbol) dω + error.
pub fn channel_trace_residuals(
    j: HalfInt,
    k: HalfInt,
    spec: &ChannelSpec,
    phi: &PhiSpec,
    rho: &CMat,
) -> Result<ChannelTraceReport> {
    if let ChannelSpec::Mixture(_) = spec {
        if k.twice() < 2 * j.twice() {
            return Err(Error::InvalidArgument(
                "mixture bounds require K >= 2J".into(),
            ));
        }
    }
    let channel = build_channel(j, k, spec)?;
    let qj = Quantizer::new(j);
    let (dj, dk) = (j.dim() as f64, k.dim() as f64);
    let two_j = j.twice() as usize;

    let out = channel.apply(rho)?.scale(dk / dj);
    let (vals, _) = eigh(&out);
    let mut trace_side = 0.0;
    for &x in vals.iter() {
        // Outputs of density matrices live in [0, 1]; clamp rounding dust.
        trace_side += phi.eval(x.clamp(0.0, 1.0));
    }
    trace_side /= dk;

    let sym = husimi_for_spec(&qj, k, spec, rho, two_j)?;
    let grid = make_grid(4 * two_j + 96);
    let sym_vals = synthesis(&sym, &grid);
    let classical_side: f64 = grid
        .nodes()
        .iter()
        .zip(sym_vals.iter())
        .map(|(n, v)| n.weight * phi.eval(v.re.clamp(0.0, 1.0)))
        .sum();
    let error = trace_side - classical_side;

    let shape = match spec {
        ChannelSpec::VertexOffset(i) => {
            let (jv, iv, kv) = (j.value(), i.value(), k.value());
            (10.0, (jv - iv.abs() + 1.0) / (2.0 * kv - jv + iv + 1.0))
        }
        ChannelSpec::Mixture(_) => (4.0, dj / dk),
    };
    let dd_bound = phi.second_derivative_sup.map(|dd| shape.0 * dd * shape.1);
    let holder_measured_c = match (phi.convex, phi.holder) {
        (true, Some((alpha, seminorm))) if seminorm > 0.0 => {
            Some(error.abs() / (seminorm * shape.1.powf(alpha)))
        }
        _ => None,
    };

    Ok(ChannelTraceReport {
        j,
        k,
        trace_side,
        classical_side,
        error,
        dd_bound,
        holder_measured_c,
    })
}

/// Entropy-expansion report for a channel output.
#[derive(Debug, Clone)]
pub struct EntropyExpansionReport {
    pub j: HalfInt,
    pub k: HalfInt,
    pub output_entropy: f64,
    /// log((2K+1)/(2J+1)) - (2J+1) ∫ h log h with h the generalized symbol.
    pub principal: f64,
    pub error: f64,
    /// |error| / (log(2K+1) * shape), the measured constant of the error
    /// envelope; `shape` is (2J+1)(J-|i|+1)/(2K-J+i+1) for a vertex and
    /// (2J+1)^2/(2K+1) for a mixture.
    pub measured_c: f64,
}

pub fn entropy_expansion(
    j: HalfInt,
    k: HalfInt,
    spec: &ChannelSpec,
    rho: &CMat,
) -> Result<EntropyExpansionReport> {
    if k.twice() < 2 {
        return Err(Error::InvalidArgument("entropy expansion needs K >= 1".into()));
    }
    if let ChannelSpec::Mixture(_) = spec {
        if k.twice() < 2 * j.twice() {
            return Err(Error::InvalidArgument(
                "mixture bounds require K >= 2J".into(),
            ));
        }
    }
    let channel = build_channel(j, k, spec)?;
    let qj = Quantizer::new(j);
    let (dj, dk) = (j.dim() as f64, k.dim() as f64);
    let two_j = j.twice() as usize;

    let out = channel.apply(rho)?;
    let output_entropy = von_neumann_entropy(&out)?;

    let sym = husimi_for_spec(&qj, k, spec, rho, two_j)?;
    let grid = make_grid(4 * two_j + 96);
    let sym_vals = synthesis(&sym, &grid);
    let classical: f64 = grid
        .nodes()
        .iter()
        .zip(sym_vals.iter())
        .map(|(n, v)| {
            let x = v.re.max(0.0);
            n.weight * if x > 0.0 { x * x.ln() } else { 0.0 }
        })
        .sum();
    let principal = (dk / dj).ln() - dj * classical;
    let error = output_entropy - principal;

    let shape = match spec {
        ChannelSpec::VertexOffset(i) => {
            let (jv, iv, kv) = (j.value(), i.value(), k.value());
            dj * (jv - iv.abs() + 1.0) / (2.0 * kv - jv + iv + 1.0)
        }
        ChannelSpec::Mixture(_) => dj * dj / dk,
    };
    let measured_c = error.abs() / (dk.ln() * shape);

    Ok(EntropyExpansionReport { j, k, output_entropy, principal, error, measured_c })
}

/// Least-squares fit of log(err) against log(x).
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn rate_fit(xs: &[f64], errs: &[f64]) -> Result<RateFit> {
    if xs.len() != errs.len() || xs.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "rate fit needs >= 4 matched points, got {}",
            xs.len().min(errs.len())
        )));
    }
    if xs.iter().any(|&x| x <= 0.0) || errs.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidArgument(
            "rate fit needs positive abscissas and errors".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx < 1e-14 {
        return Err(Error::InvalidArgument("degenerate abscissas".into()));
    }
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot < 1e-14 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared })
}
