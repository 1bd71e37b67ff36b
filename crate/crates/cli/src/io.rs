//! On-disk formats for operators and band-limited functions, plus the
//! fixed-precision number formatting shared by all reports.

use serde::{Deserialize, Serialize};

use spinsemi_core::linalg::CMat;
use spinsemi_core::sphere::SphereFunction;

use crate::CliError;

/// 17 significant digits, scientific, locale independent.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Serialize, Deserialize)]
pub struct OperatorFile {
    pub dim: usize,
    /// Row-major [re, im] pairs.
    pub entries: Vec<[f64; 2]>,
}

impl OperatorFile {
    pub fn from_matrix(m: &CMat) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                entries.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        OperatorFile { dim, entries }
    }

    pub fn to_matrix(&self) -> Result<CMat, CliError> {
        if self.entries.len() != self.dim * self.dim {
            return Err(CliError::Usage(format!(
                "operator file: {} entries for dim {}",
                self.entries.len(),
                self.dim
            )));
        }
        let mut m = CMat::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                let [re, im] = self.entries[r * self.dim + c];
                m[(r, c)] = num_complex_new(re, im);
            }
        }
        Ok(m)
    }
}

fn num_complex_new(re: f64, im: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(re, im)
}

#[derive(Serialize, Deserialize)]
pub struct FunctionFile {
    #[serde(rename = "Lmax")]
    pub lmax: usize,
    /// Entries [l, m, re, im].
    pub coeffs: Vec<(usize, i64, f64, f64)>,
}

impl FunctionFile {
    pub fn from_function(f: &SphereFunction) -> Self {
        let mut coeffs = Vec::new();
        for l in 0..=f.lmax() {
            for m in -(l as i64)..=(l as i64) {
                let v = f.get(l, m);
                coeffs.push((l, m, v.re, v.im));
            }
        }
        FunctionFile { lmax: f.lmax(), coeffs }
    }

    pub fn to_function(&self) -> Result<SphereFunction, CliError> {
        let mut f = SphereFunction::zero(self.lmax);
        for &(l, m, re, im) in &self.coeffs {
            if l > self.lmax || m.unsigned_abs() as usize > l {
                return Err(CliError::Usage(format!(
                    "function file: coefficient ({l},{m}) outside Lmax {}",
                    self.lmax
                )));
            }
            f.set(l, m, num_complex_new(re, im));
        }
        Ok(f)
    }
}

pub fn read_operator(path: &std::path::Path) -> Result<CMat, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: OperatorFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad operator file {}: {e}", path.display())))?;
    file.to_matrix()
}

pub fn write_operator(path: &std::path::Path, m: &CMat) -> Result<(), CliError> {
    let file = OperatorFile::from_matrix(m);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::Usage(format!("serialize: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}
