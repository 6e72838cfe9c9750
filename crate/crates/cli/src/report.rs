//! Output directory, summaries and traces.

use std::fs;
use std::path::{Path, PathBuf};

use qma_core::solver::TraceRow;
use qma_core::torus::{Form2Field, ScalarField};
use serde_json::{json, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Conventions embedded in every summary so outputs are self-describing.
pub fn conventions() -> Value {
    json!({
        "coordinates": "real t_0..t_{4n-1} of period 1; z^j = t_j + i t_{2n+j}; samples row-major, t_{4n-1} fastest",
        "j_action": "J dz^{2i} = -conj(dz^{2i+1}), J dz^{2i+1} = conj(dz^{2i}); J-real forms satisfy M^T a M = conj(a)",
        "pfaffian": "alpha^n = n! Pf(alpha) dz^0 ^ ... ^ dz^{2n-1}; the standard form has Pf = 1",
        "star": "a (2n-2,0)-form Phi is stored as sigma = *Phi / (n-1)!, so Omega_0^{n-1} = (n-1)! *Omega_h means sigma = Omega_h",
        "equation": "log Pf(Omega_h + (S_1(ddJ u) Omega - ddJ u)/(n-1)) - log Pf(Omega) = f + b, sup u = 0",
        "laplacian": "S_1(ddJ u) = (1/4) sum_d d^2 u / dt_d^2",
        "dump": "QMA1 magic, u32 dimension count, u32 sizes, f64 values, all little-endian; form fields append [2n, 2n, 2]",
    })
}

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn summary(&self, body: Value) -> Result<(), CliError> {
        let path = self.path("summary.json");
        let mut text = serde_json::to_string_pretty(&body).map_err(|e| CliError::io(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn trace(&self, rows: &[TraceRow]) -> Result<(), CliError> {
        let path = self.path("trace.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        if rows.is_empty() {
            w.write_record(["t", "iter", "residual_sup", "cone_margin", "b", "damping", "krylov_iters"])
                .map_err(|e| CliError::io(&path, e))?;
        }
        for row in rows {
            w.serialize(row).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn scalar(&self, name: &str, field: &ScalarField) -> Result<(), CliError> {
        let path = self.path(name);
        field.write_dump(&path).map_err(|e| CliError::io(&path, e))
    }

    pub fn forms(&self, name: &str, field: &Form2Field) -> Result<(), CliError> {
        let path = self.path(name);
        field.write_dump(&path).map_err(|e| CliError::io(&path, e))
    }

    pub fn csv_rows(&self, name: &str, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        w.write_record(header).map_err(|e| CliError::io(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }
}
