//! Sweep configuration and the built-in registry of test functions.

use serde::Deserialize;

use spinsemi_core::semiclassics::PhiSpec;
use spinsemi_core::sphere::{random_real_function, rotate_function, SphereFunction};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(default)]
    pub inversion: Option<InversionCfg>,
    #[serde(default)]
    pub products: Option<ProductsCfg>,
    #[serde(default)]
    pub traces: Option<TracesCfg>,
    #[serde(default)]
    pub channels: Option<ChannelsCfg>,
    #[serde(default)]
    pub entropy: Option<EntropyCfg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionCfg {
    pub j_twice: Vec<i64>,
    pub s_values: Vec<f64>,
    /// Names from the function registry.
    pub functions: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductsCfg {
    pub j_twice: Vec<i64>,
    pub cases: Vec<ProductCase>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductCase {
    pub f: String,
    pub g: String,
    pub p: String,
    pub p1: String,
    pub p2: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracesCfg {
    pub j_twice: Vec<i64>,
    pub cases: Vec<TraceCase>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceCase {
    pub phi: String,
    pub f: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelsCfg {
    pub sweeps: Vec<ChannelSweep>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSweep {
    pub j_twice: i64,
    pub k_twice_min: i64,
    pub k_twice_max: i64,
    #[serde(default = "default_step")]
    pub k_twice_step: i64,
    pub p: Vec<String>,
    pub n_states: usize,
    /// Number of random mixtures per (J, K) in addition to all vertices.
    #[serde(default)]
    pub mixtures: usize,
    /// Test functions for the trace-formula part of the sweep.
    #[serde(default)]
    pub phis: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyCfg {
    pub j_twice: i64,
    pub i_twice: i64,
    pub k_twice_min: i64,
    pub k_twice_max: i64,
    #[serde(default = "default_step")]
    pub k_twice_step: i64,
}

fn default_step() -> i64 {
    2
}

impl Config {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("config parse error: {e}")))
    }
}

pub const DEFAULT_CONFIG: &str = include_str!("../resources/default.json");

/// Resolves a registry name to a band-limited function. Supported:
/// `omega_z`, `omega_x`, `band_random(L, seed)`.
pub fn function_by_name(name: &str) -> Result<SphereFunction, CliError> {
    let name = name.trim();
    match name {
        "omega_z" => Ok(SphereFunction::coord_z()),
        "omega_x" => Ok(rotate_function(
            &SphereFunction::coord_z(),
            0.0,
            std::f64::consts::FRAC_PI_2,
        )),
        _ => {
            if let Some((band, seed)) = parse_band_args(name, "band_random(")? {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                Ok(random_real_function(band, &mut rng))
            } else if let Some((band, seed)) = parse_band_args(name, "band_random_positive(")? {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let base = random_real_function(band, &mut rng);
                // Shift so the function is strictly positive; the minimum is
                // taken on a fine grid.
                let grid = spinsemi_core::sphere::make_grid(4 * band + 64);
                let vals = spinsemi_core::sphere::synthesis(&base, &grid);
                let min = vals.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
                Ok(&base - &SphereFunction::constant(min - 0.2))
            } else {
                Err(CliError::Usage(format!("unknown function '{name}'")))
            }
        }
    }
}

fn parse_band_args(name: &str, prefix: &str) -> Result<Option<(usize, u64)>, CliError> {
    let Some(args) = name.strip_prefix(prefix).and_then(|rest| rest.strip_suffix(')')) else {
        return Ok(None);
    };
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("'{name}' needs (L, seed)")));
    }
    let band: usize = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad band in '{name}'")))?;
    let seed: u64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad seed in '{name}'")))?;
    Ok(Some((band, seed)))
}

/// Resolves a registry name to a scalar test function with metadata fitted
/// to the value interval [lo, hi]. Supported: `square`, `exp`, `xlogx`,
/// `abs_alpha(a)` (the convex variant -|x|^a).
pub fn phi_by_name(name: &str, lo: f64, hi: f64) -> Result<PhiSpec, CliError> {
    let name = name.trim();
    match name {
        "square" => Ok(PhiSpec::square()),
        "exp" => Ok(PhiSpec::exp_on(hi.max(lo))),
        "xlogx" => Ok(PhiSpec::x_log_x()),
        _ => {
            if let Some(arg) = name
                .strip_prefix("abs_alpha(")
                .and_then(|rest| rest.strip_suffix(')'))
            {
                let alpha: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad exponent in '{name}'")))?;
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(CliError::Usage(format!(
                        "abs_alpha exponent must be in (0, 1], got {alpha}"
                    )));
                }
                Ok(PhiSpec::abs_alpha(alpha))
            } else {
                Err(CliError::Usage(format!("unknown phi '{name}'")))
            }
        }
    }
}

/// Parses a Schatten/L^p exponent: "1", "2", "inf".
pub fn exponent_by_name(name: &str) -> Result<f64, CliError> {
    match name.trim() {
        "inf" | "oo" | "infinity" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|p| *p >= 1.0)
            .ok_or_else(|| CliError::Usage(format!("bad exponent '{name}'"))),
    }
}
