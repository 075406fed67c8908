//! Run configuration: one TOML document per experiment, flat keys.
//!
//! `seed`, `output_dir` and `experiment` are accepted at the top level of any
//! document; everything else must belong to the chosen experiment.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use stratflow_core::nonlinear::SimConfig;
use stratflow_core::PhysicalParams;

use crate::CliError;

pub const ENHANCED_CONDITION: &str = "max{nu,kappa}/min{nu,kappa} < 4*beta - 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LinearMode,
    LinearField,
    Eigen,
    Toy,
    Nonlinear,
    Fit,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Self::LinearMode => "linear-mode",
            Self::LinearField => "linear-field",
            Self::Eigen => "eigen",
            Self::Toy => "toy",
            Self::Nonlinear => "nonlinear",
            Self::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    LinearMode(LinearModeConfig),
    LinearField(LinearFieldConfig),
    Eigen(EigenConfig),
    Toy(ToyConfig),
    Nonlinear(NonlinearConfig),
    Fit(FitConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub parameters: Parameters,
    pub output_dir: PathBuf,
    pub seed: u64,
}

fn zero() -> f64 {
    0.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_slack() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearModeConfig {
    pub beta: f64,
    #[serde(default = "zero")]
    pub nu: f64,
    #[serde(default = "zero")]
    pub kappa: f64,
    #[serde(default)]
    pub k: i64,
    #[serde(default)]
    pub eta: f64,
    pub t_end: f64,
    #[serde(default = "LinearModeConfig::default_samples")]
    pub samples: usize,
    #[serde(default = "LinearModeConfig::default_omega0")]
    pub omega0: [f64; 2],
    #[serde(default = "LinearModeConfig::default_theta0")]
    pub theta0: [f64; 2],
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// When positive, ignore `k`, `eta` and the initial data and check this
    /// many seeded random modes (k in 1..=8, eta in [-50, 50], unit norm).
    #[serde(default)]
    pub random_modes: usize,
    /// Bound on `p|Ω|/(|Σ(0)|+|kΘ(0)|)` for the κ = 0 check; finite margin suffices if absent.
    #[serde(default)]
    pub nondiffusive_bound: Option<f64>,
}

impl LinearModeConfig {
    fn default_samples() -> usize {
        1001
    }
    fn default_omega0() -> [f64; 2] {
        [0.0, 0.0]
    }
    fn default_theta0() -> [f64; 2] {
        [1.0, 0.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearFieldConfig {
    pub beta: f64,
    pub nu: f64,
    pub kappa: f64,
    pub k_max: usize,
    pub j_max: usize,
    pub eta_spacing: f64,
    pub amplitude: f64,
    pub width: f64,
    pub t_end: f64,
    pub samples: usize,
    pub tol: f64,
    pub fit_window: [f64; 2],
    pub rate_tolerance: f64,
}

impl Default for LinearFieldConfig {
    fn default() -> Self {
        Self {
            beta: 2.0,
            nu: 0.0,
            kappa: 0.0,
            k_max: 128,
            j_max: 256,
            eta_spacing: 0.1,
            amplitude: 1.0,
            width: 1.0,
            t_end: 100.0,
            samples: 201,
            tol: 1e-10,
            fit_window: [10.0, 100.0],
            rate_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Couette,
    Rest,
    Linear,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenConfig {
    pub profile: ProfileKind,
    pub beta_sq: f64,
    pub k: i64,
    pub n_grid: usize,
    /// Channel `[y0, y1]`; profile-specific default when absent.
    pub y_range: Option<[f64; 2]>,
    pub slope: f64,
    pub thickness: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self {
            profile: ProfileKind::Couette,
            beta_sq: 0.3,
            k: 1,
            n_grid: 256,
            y_range: None,
            slope: 1.0,
            thickness: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyConfig {
    pub eps: f64,
    pub ratios: Vec<f64>,
    pub time_scale: f64,
    pub delta: f64,
    pub tol: f64,
    pub cascade_eta: Vec<f64>,
    pub cascade_tolerance: f64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            ratios: vec![16.0, 32.0, 64.0, 128.0],
            time_scale: 0.5,
            delta: 1.0,
            tol: 1e-10,
            cascade_eta: vec![64.0, 256.0, 1024.0],
            cascade_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearConfig {
    pub nx: usize,
    pub ny: usize,
    pub ly: f64,
    pub beta: f64,
    pub nu: f64,
    pub kappa: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dealias_fraction: f64,
    pub remesh_threshold: f64,
    pub nonlinear: bool,
    pub eps: f64,
    pub blob_width: f64,
    pub output_every: usize,
    pub snapshot_every: Option<usize>,
    pub images: bool,
    pub means_tolerance: f64,
    pub energy_tolerance: f64,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 256,
            ly: 4.0 * PI,
            beta: 2.0,
            nu: 0.0,
            kappa: 0.0,
            dt: 0.05,
            t_end: 50.0,
            dealias_fraction: 2.0 / 3.0,
            remesh_threshold: f64::INFINITY,
            nonlinear: true,
            eps: 1e-2,
            blob_width: 1.0,
            output_every: 10,
            snapshot_every: None,
            images: true,
            means_tolerance: 1e-9,
            energy_tolerance: 1e-6,
        }
    }
}

impl NonlinearConfig {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            nx: self.nx,
            ny: self.ny,
            ly: self.ly,
            params: PhysicalParams {
                beta: self.beta,
                nu: self.nu,
                kappa: self.kappa,
            },
            dt: self.dt,
            t_end: self.t_end,
            dealias_fraction: self.dealias_fraction,
            remesh_threshold: self.remesh_threshold,
            nonlinear: self.nonlinear,
            eps: self.eps,
            blob_width: self.blob_width,
            output_every: self.output_every,
            snapshot_every: self.snapshot_every,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// CSV with columns `t,value,label`.
    pub input: PathBuf,
    pub label: String,
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default = "FitConfig::default_tolerance")]
    pub tolerance: f64,
}

impl FitConfig {
    fn default_tolerance() -> f64 {
        0.1
    }
}

fn invalid(key: &str, constraint: &str) -> CliError {
    CliError::Config(format!("{key}: {constraint}"))
}

fn check_params(beta: f64, nu: f64, kappa: f64) -> Result<PhysicalParams, CliError> {
    PhysicalParams::new(beta, nu, kappa).map_err(|e| CliError::Config(e.to_string()))
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, "must be > 0"))
    }
}

impl LinearModeConfig {
    pub fn validate(&self) -> Result<PhysicalParams, CliError> {
        let params = check_params(self.beta, self.nu, self.kappa)?;
        if params.nu > 0.0 && params.kappa > 0.0 && !params.enhanced_ok() {
            return Err(CliError::Config(format!(
                "nu, kappa: enhanced dissipation requires {ENHANCED_CONDITION} (got ratio {} with 4*beta - 1 = {})",
                params.nu.max(params.kappa) / params.nu.min(params.kappa),
                4.0 * params.beta - 1.0
            )));
        }
        if params.is_inviscid() && params.c_beta().is_none() {
            return Err(invalid(
                "beta",
                "the inviscid energy bound needs beta > 1/2",
            ));
        }
        positive("t_end", self.t_end)?;
        positive("tol", self.tol)?;
        if !(self.slack >= 0.0) {
            return Err(invalid("slack", "must be >= 0"));
        }
        if self.samples < 2 {
            return Err(invalid("samples", "must be >= 2"));
        }
        if self.random_modes == 0 && self.k == 0 {
            return Err(invalid("k", "must be nonzero"));
        }
        if !self.eta.is_finite() {
            return Err(invalid("eta", "must be finite"));
        }
        Ok(params)
    }
}

impl LinearFieldConfig {
    pub fn validate(&self) -> Result<PhysicalParams, CliError> {
        let params = check_params(self.beta, self.nu, self.kappa)?;
        positive("eta_spacing", self.eta_spacing)?;
        positive("width", self.width)?;
        positive("t_end", self.t_end)?;
        positive("tol", self.tol)?;
        if self.samples < 2 {
            return Err(invalid("samples", "must be >= 2"));
        }
        let [lo, hi] = self.fit_window;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid("fit_window", "must satisfy 0 < t_lo < t_hi"));
        }
        Ok(params)
    }
}

impl EigenConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(invalid("k", "must be nonzero"));
        }
        if self.n_grid < 64 {
            return Err(invalid("n_grid", "must be >= 64"));
        }
        if !self.beta_sq.is_finite() {
            return Err(invalid("beta_sq", "must be finite"));
        }
        if let Some([a, b]) = self.y_range {
            if !(b > a) {
                return Err(invalid("y_range", "must satisfy y0 < y1"));
            }
        }
        positive("thickness", self.thickness)?;
        Ok(())
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("eps", self.eps)?;
        positive("time_scale", self.time_scale)?;
        positive("delta", self.delta)?;
        positive("tol", self.tol)?;
        if self.ratios.len() < 2 || self.ratios.iter().any(|r| !(*r >= 4.0)) {
            return Err(invalid("ratios", "need at least two values, each >= 4"));
        }
        if self.cascade_eta.iter().any(|e| !(*e >= 1.0)) {
            return Err(invalid("cascade_eta", "values must be >= 1"));
        }
        Ok(())
    }
}

impl NonlinearConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_params(self.beta, self.nu, self.kappa)?;
        self.sim_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.t_lo > 0.0 && self.t_hi > self.t_lo) {
            return Err(invalid("t_lo, t_hi", "must satisfy 0 < t_lo < t_hi"));
        }
        positive("tolerance", self.tolerance)
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn override_value(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn typed<T: DeserializeOwned>(table: toml::Table) -> Result<T, CliError> {
    T::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(e.to_string().trim().to_string()))
}

/// Parses and validates a configuration document for `experiment`.
///
/// `overrides` are `key=value` pairs applied on top of the document; `seed`
/// and `output_dir`, when given, take precedence over both.
pub fn parse_config(
    experiment: Experiment,
    text: &str,
    overrides: &[(String, String)],
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
) -> Result<RunConfig, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
    for (k, v) in overrides {
        table.insert(k.clone(), override_value(v));
    }
    if let Some(v) = table.remove("experiment") {
        let named: Experiment = v
            .try_into()
            .map_err(|_| invalid("experiment", "unknown experiment name"))?;
        if named != experiment {
            return Err(invalid(
                "experiment",
                &format!(
                    "document is for `{}`, not `{}`",
                    named.name(),
                    experiment.name()
                ),
            ));
        }
    }
    let doc_seed = match table.remove("seed") {
        None => 0,
        Some(toml::Value::Integer(s)) if s >= 0 => s as u64,
        Some(_) => return Err(invalid("seed", "must be a non-negative integer")),
    };
    let doc_out = match table.remove("output_dir") {
        None => None,
        Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => return Err(invalid("output_dir", "must be a string")),
    };
    let parameters = match experiment {
        Experiment::LinearMode => {
            let c: LinearModeConfig = typed(table)?;
            c.validate()?;
            Parameters::LinearMode(c)
        }
        Experiment::LinearField => {
            let c: LinearFieldConfig = typed(table)?;
            c.validate()?;
            Parameters::LinearField(c)
        }
        Experiment::Eigen => {
            let c: EigenConfig = typed(table)?;
            c.validate()?;
            Parameters::Eigen(c)
        }
        Experiment::Toy => {
            let c: ToyConfig = typed(table)?;
            c.validate()?;
            Parameters::Toy(c)
        }
        Experiment::Nonlinear => {
            let c: NonlinearConfig = typed(table)?;
            c.validate()?;
            Parameters::Nonlinear(c)
        }
        Experiment::Fit => {
            let c: FitConfig = typed(table)?;
            c.validate()?;
            Parameters::Fit(c)
        }
    };
    Ok(RunConfig {
        experiment,
        parameters,
        output_dir: output_dir
            .or(doc_out)
            .unwrap_or_else(|| PathBuf::from("out")),
        seed: seed.unwrap_or(doc_seed),
    })
}
