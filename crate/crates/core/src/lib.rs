//! Spin coherent-state quantization on the sphere and SU(2)-equivariant
//! quantum channels between irreducible representations.
//!
//! The crate is organized bottom-up:
//!
//! - [`halfint`]: exact half-integer spin labels,
//! - [`linalg`]: dense complex operators, Schatten norms, entropy,
//! - [`su2`]: spin matrices, rotations, coherent states, the invariant
//!   transpose and the Casimir acting on operators,
//! - [`clebsch`]: Clebsch-Gordan tables and equivariant embeddings,
//! - [`sphere`]: band-limited functions on S² over Gauss-Legendre grids,
//! - [`quantize`]: the maps `Op`/`Hus`, the Berezin transform and the
//!   Stratonovich-Weyl correspondence,
//! - [`channels`]: equivariant channel vertices, mixtures and Choi matrices,
//! - [`semiclassics`]: quantitative residuals of the large-spin
//!   approximation theorems,
//! - [`entropy_opt`]: minimal output entropy search.

pub mod channels;
pub mod clebsch;
pub mod entropy_opt;
mod error;
pub mod halfint;
pub mod linalg;
pub mod quantize;
pub mod semiclassics;
pub mod sphere;
pub mod su2;

pub use error::Error;
pub use halfint::HalfInt;
pub use linalg::CMat;

/// Eigenvalues with absolute value below this are treated as zero when
/// evaluating `x log x` through the spectrum.
pub const EIG_CLIP: f64 = 1e-12;

/// Validation tolerance for density-matrix preconditions (PSD, unit trace).
pub const STATE_TOL: f64 = 1e-10;
