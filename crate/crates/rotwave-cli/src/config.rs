//! Run configuration: TOML file, then `--override key=value`, then `--seed` and `--out`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rotwave::coeffs::SystemCoefficients;
use rotwave::discretize::DriftScheme;
use rotwave::freeze::FreezeConfig;
use rotwave::linalg::{self, from_real_rows, from_rows, CMat};
use rotwave::qcgl::{diffusion_cmat, system_coefficients, LinearReaction, Nonlinearity, QcglParams};
use rotwave::spectra::ArnoldiConfig;
use rotwave::C64;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub model: ModelConfig,
    pub check: CheckConfig,
    pub dispersion: DispersionConfig,
    pub freeze: FreezeConfig,
    pub eigs: EigsConfig,
    pub decay: DecayConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Cubic-quintic Ginzburg-Landau in real two-component form.
    Qcgl,
    /// A = I, f(u) = -u on two components.
    Identity,
    /// A and Df(v_inf) given directly; analytical commands only.
    Matrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
    /// Row-major [re, im] entries, used when kind = "matrix".
    #[serde(rename = "A")]
    pub a: Vec<Vec<C64>>,
    #[serde(rename = "Dfinf")]
    pub dfinf: Vec<Vec<C64>>,
    /// Velocity matrix for the analytical commands; its size sets d.
    #[serde(rename = "S")]
    pub s: Vec<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let p = QcglParams::default();
        Self {
            kind: ModelKind::Qcgl,
            alpha: p.alpha,
            beta: p.beta,
            gamma: p.gamma,
            delta: p.delta,
            a: Vec::new(),
            dfinf: Vec::new(),
            s: vec![vec![0.0, 0.6888, -0.0043], vec![-0.6888, 0.0, -0.0043], vec![0.0043, 0.0043, 0.0]],
        }
    }
}

/// The reaction term together with its diffusion matrix.
pub struct Model {
    pub kind: ModelKind,
    pub params: QcglParams,
    linear: LinearReaction,
    a: CMat,
    dfinf: CMat,
}

impl Model {
    pub fn nonlinearity(&self) -> CliResult<&dyn Nonlinearity> {
        match self.kind {
            ModelKind::Qcgl => Ok(&self.params),
            ModelKind::Identity => Ok(&self.linear),
            ModelKind::Matrix => Err(CliError::Validation("model.kind = \"matrix\" has no nonlinearity to simulate".into())),
        }
    }

    pub fn diffusion(&self) -> CMat {
        match self.kind {
            ModelKind::Qcgl => diffusion_cmat(&self.params),
            _ => self.a.clone(),
        }
    }

    pub fn coefficients(&self, s: Vec<Vec<f64>>) -> CliResult<SystemCoefficients> {
        match self.kind {
            ModelKind::Qcgl => Ok(system_coefficients(&self.params, s)?),
            _ => Ok(SystemCoefficients::new(self.a.clone(), s, self.dfinf.clone())?),
        }
    }
}

impl ModelConfig {
    pub fn model(&self) -> CliResult<Model> {
        let params = QcglParams { alpha: self.alpha, beta: self.beta, gamma: self.gamma, delta: self.delta };
        let linear = LinearReaction { m: 2, b: vec![-1.0, 0.0, 0.0, -1.0] };
        let (a, dfinf) = match self.kind {
            ModelKind::Qcgl => {
                params.validate()?;
                (diffusion_cmat(&params), CMat::zeros(0, 0))
            }
            ModelKind::Identity => (linalg::identity(2), from_real_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]])),
            ModelKind::Matrix => {
                let m = self.a.len();
                let square = |x: &Vec<Vec<C64>>| x.len() == m && x.iter().all(|r| r.len() == m);
                if m == 0 || !square(&self.a) || !square(&self.dfinf) {
                    return Err(CliError::Validation("model.A and model.Dfinf must be square of equal size".into()));
                }
                (from_rows(&self.a), from_rows(&self.dfinf))
            }
        };
        Ok(Model { kind: self.kind, params, linear, a, dfinf })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub p: Vec<f64>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { p: vec![2.0, 3.0, 4.0, 5.0, 6.0] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    /// Curves are drawn for every n with |n_l| <= n_max.
    pub n_max: i64,
    pub eta_points: usize,
    /// The eta grid reaches down to this real part.
    pub re_min: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self { n_max: 5, eta_points: 400, re_min: -8.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigsConfig {
    /// Profile written by `freeze`; defaults to <out>/profile.
    pub profile: Option<PathBuf>,
    /// Freeze summary holding the velocities; defaults to <out>/freeze.json.
    pub state: Option<PathBuf>,
    pub target: C64,
    pub k: usize,
    pub subspace: usize,
    pub max_restarts: usize,
    pub ritz_tol: f64,
    pub residual_tol: f64,
    pub drift: DriftScheme,
    /// Matching tolerances; by default 0.05 at h = 32/127, scaled with h.
    pub tol_point: Option<f64>,
    pub tol_ess: Option<f64>,
    pub write_vectors: bool,
}

impl Default for EigsConfig {
    fn default() -> Self {
        let a = ArnoldiConfig::default();
        Self {
            profile: None,
            state: None,
            target: C64::new(0.1, 0.0),
            k: 16,
            subspace: a.subspace,
            max_restarts: a.max_restarts,
            ritz_tol: a.ritz_tol,
            residual_tol: a.residual_tol,
            drift: DriftScheme::Centered,
            tol_point: None,
            tol_ess: None,
            write_vectors: true,
        }
    }
}

impl EigsConfig {
    pub fn arnoldi(&self, seed: u64) -> ArnoldiConfig {
        ArnoldiConfig {
            k: self.k,
            subspace: self.subspace,
            max_restarts: self.max_restarts,
            ritz_tol: self.ritz_tol,
            residual_tol: self.residual_tol,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Field to fit; defaults to <out>/profile.
    pub field: Option<PathBuf>,
    pub window: [f64; 2],
    /// Eigenvalue whose bounds are compared against the fit.
    pub lambda: C64,
    /// Fixed p for the bounds; by default the bounds uniform over the admissible range.
    pub p: Option<f64>,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self { field: None, window: [6.0, 14.0], lambda: C64::new(0.0, 0.0), p: None }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let d = self.model.s.len();
        if d < 2 || self.model.s.iter().any(|r| r.len() != d) {
            return Err(CliError::Validation(format!("model.S must be square with d >= 2, got {d} rows")));
        }
        if self.check.p.iter().any(|&p| !(p > 1.0)) {
            return Err(CliError::Validation("check.p entries must exceed 1".into()));
        }
        if self.dispersion.n_max < 0 || self.dispersion.eta_points < 2 {
            return Err(CliError::Validation("dispersion.n_max >= 0 and dispersion.eta_points >= 2".into()));
        }
        self.freeze.validate()?;
        if self.eigs.k == 0 || !(self.eigs.residual_tol > 0.0) || !(self.eigs.ritz_tol > 0.0) {
            return Err(CliError::Validation("eigs.k, eigs.residual_tol and eigs.ritz_tol must be positive".into()));
        }
        let [lo, hi] = self.decay.window;
        if !(lo >= 0.0 && hi > lo) {
            return Err(CliError::Validation(format!("decay.window [{lo}, {hi}]")));
        }
        if self.decay.p.is_some_and(|p| !(p > 1.0)) {
            return Err(CliError::Validation("decay.p must exceed 1".into()));
        }
        self.model.model()?;
        Ok(())
    }

    pub fn path_or(&self, given: &Option<PathBuf>, name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out.join(name))
    }
}

/// Sets `key.path = value` in `table`; the value is read as TOML, falling back to a string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> CliResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override '{spec}' is not key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed one key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!("override key '{key}'")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let next = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = next
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("override '{key}': '{p}' is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>, out: Option<&Path>) -> CliResult<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
            text.parse::<toml::Table>().map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Validation(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o.to_path_buf();
    }
    if cfg.out.as_os_str().is_empty() {
        cfg.out = PathBuf::from("out");
    }
    cfg.validate()?;
    Ok(cfg)
}
