//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use qma_core::solver::SolverOptions;
use qma_core::torus::{Form2Field, ScalarField, TorusGrid, TrigKind, TrigPoly, TrigTerm};
use qma_core::{QForm2, QmaError};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::Mode;

pub const DEFAULT_CASES: usize = 1000;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub omega_h: Option<FormSpec>,
    #[serde(default)]
    pub omega_0: Option<FormSpec>,
    #[serde(default)]
    pub f: Option<FieldSpec>,
    /// Manufactured solution for `mms` runs.
    #[serde(default)]
    pub u_star: Option<FieldSpec>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Cases per identity and dimension in `identities` runs.
    #[serde(default)]
    pub cases: Option<usize>,
}

/// Either all `4n` sizes or `[dimension, size]` pairs for the active dimensions.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GridSpec {
    Sizes(Vec<usize>),
    Active { active: Vec<(usize, usize)> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FormSpec {
    /// Constant diagonal form with these quaternionic eigenvalues.
    Eigenvalues(Vec<f64>),
    Dump(PathBuf),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Terms(Vec<TermSpec>),
    Dump(PathBuf),
}

/// Wavevectors shorter than `4n` are padded with zeros.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub k: Vec<i64>,
    #[serde(default)]
    pub kind: TrigKind,
}

/// Which side of the balanced reduction the reference form came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSource {
    OmegaH,
    OmegaZero,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut config: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    config.rebase(base);
    Ok(config)
}

fn config_err(e: QmaError) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    /// Resolves relative dump and output paths against the config file's directory.
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for entry in [&mut self.omega_h, &mut self.omega_0].into_iter().flatten() {
            if let FormSpec::Dump(p) = entry {
                fix(p);
            }
        }
        for entry in [&mut self.f, &mut self.u_star].into_iter().flatten() {
            if let FieldSpec::Dump(p) = entry {
                fix(p);
            }
        }
        if let Some(out) = &mut self.out {
            fix(out);
        }
    }

    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        if let Some(m) = self.mode {
            if m != mode {
                return Err(CliError::Config(format!("config is for mode {m:?}, command line asked for {mode:?}")));
            }
        }
        self.solver.validate().map_err(config_err)?;
        if mode == Mode::Identities {
            if self.cases == Some(0) {
                return bad("cases must be at least 1");
            }
            return Ok(());
        }
        match self.n {
            None => return bad("n is required"),
            Some(n) if n < 2 => return bad("n must be at least 2"),
            _ => {}
        }
        if self.grid.is_none() {
            return bad("grid is required");
        }
        match (&self.omega_h, &self.omega_0) {
            (Some(_), Some(_)) | (None, None) => return bad("give exactly one of omega_h and omega_0"),
            _ => {}
        }
        match mode {
            Mode::Reduce if self.omega_0.is_none() => bad("reduce needs omega_0"),
            Mode::Mms if self.u_star.is_none() => bad("mms needs u_star"),
            Mode::Mms if self.f.is_some() => bad("mms derives f from u_star; remove f"),
            Mode::Solve | Mode::Reduce if self.f.is_none() => bad("f is required"),
            _ => Ok(()),
        }
    }

    pub fn n(&self) -> usize {
        self.n.expect("validated")
    }

    pub fn grid(&self) -> Result<TorusGrid, CliError> {
        let n = self.n();
        match self.grid.as_ref().expect("validated") {
            GridSpec::Sizes(sizes) => TorusGrid::new(n, sizes.clone()),
            GridSpec::Active { active } => TorusGrid::with_active(n, active),
        }
        .map_err(config_err)
    }

    /// The reference form field and the side it was given on.
    pub fn form(&self, grid: &TorusGrid) -> Result<(Form2Field, FormSource), CliError> {
        let (entry, source) = match (&self.omega_h, &self.omega_0) {
            (Some(s), None) => (s, FormSource::OmegaH),
            (None, Some(s)) => (s, FormSource::OmegaZero),
            _ => unreachable!("validated"),
        };
        let field = match entry {
            FormSpec::Eigenvalues(mu) => {
                if mu.len() != grid.n() {
                    return Err(CliError::Config(format!("{} eigenvalues given for n = {}", mu.len(), grid.n())));
                }
                Form2Field::constant(grid, &QForm2::diagonal(mu))
            }
            FormSpec::Dump(path) => {
                let field = Form2Field::read_dump(path).map_err(|e| input_err(path, e))?;
                if field.grid() != grid {
                    return Err(CliError::Config(format!("{}: dump grid differs from the config grid", path.display())));
                }
                field
            }
        };
        for form in field.values() {
            form.ensure_j_real().map_err(config_err)?;
        }
        field.ensure_positive(0.0).map_err(config_err)?;
        Ok((field, source))
    }

    pub fn f(&self, grid: &TorusGrid) -> Result<ScalarField, CliError> {
        scalar(self.f.as_ref().expect("validated"), grid)
    }

    pub fn u_star(&self, grid: &TorusGrid) -> Result<ScalarField, CliError> {
        scalar(self.u_star.as_ref().expect("validated"), grid)
    }
}

fn input_err(path: &Path, e: QmaError) -> CliError {
    match e {
        QmaError::Io(msg) => CliError::Io { path: path.to_path_buf(), message: msg },
        other => CliError::Config(format!("{}: {other}", path.display())),
    }
}

fn scalar(entry: &FieldSpec, grid: &TorusGrid) -> Result<ScalarField, CliError> {
    match entry {
        FieldSpec::Terms(terms) => {
            let dims = grid.sizes().len();
            let mut resolved = Vec::with_capacity(terms.len());
            for (idx, term) in terms.iter().enumerate() {
                if term.k.len() > dims {
                    return Err(CliError::Config(format!("term {idx}: wavevector longer than {dims}")));
                }
                let mut k = term.k.clone();
                k.resize(dims, 0);
                resolved.push(TrigTerm { coeff: term.coeff, k, kind: term.kind });
            }
            TrigPoly::new(resolved).sample(grid).map_err(config_err)
        }
        FieldSpec::Dump(path) => {
            let field = ScalarField::read_dump(path).map_err(|e| input_err(path, e))?;
            if field.grid() != grid {
                return Err(CliError::Config(format!("{}: dump grid differs from the config grid", path.display())));
            }
            if field.values().iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config(format!("{}: non-finite samples", path.display())));
            }
            Ok(field)
        }
    }
}
