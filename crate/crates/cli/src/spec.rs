//! Experiment specification files and their resolution into toolkit objects.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bigmarket::arbitrage::NaOptions;
use bigmarket::market::{ExpectationBackend, MarketModel, DEFAULT_STATE_CAP};
use bigmarket::optimizer::{ConvergenceOptions, OptimizerOptions};
use bigmarket::pricing::PriceOptions;
use bigmarket::utility::{Claim, GrowthConstants, Utility};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    /// Model JSON, relative to the spec file.
    pub model_file: PathBuf,
    pub utility: UtilitySpec,
    pub claim: ClaimSpec,
    pub x: f64,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub warm_start: Option<bool>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Output directory, relative to the spec file.
    #[serde(default)]
    pub outputs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub constants: Option<GrowthConstants>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimSpec {
    pub kind: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    Exact {
        #[serde(default = "default_cap")]
        cap: usize,
    },
    #[serde(alias = "mc")]
    MonteCarlo {
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_cap() -> usize {
    DEFAULT_STATE_CAP
}

fn default_samples() -> usize {
    100_000
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Exact { cap: DEFAULT_STATE_CAP }
    }
}

/// Tolerance keys understood in the `tolerances` map.
pub const TOLERANCE_KEYS: &[&str] =
    &["optimizer_tol", "max_iter", "strategy_tol", "price_gap", "wealth_tol", "residual_tol"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub optimizer: OptimizerOptions,
    pub strategy_tol: f64,
    pub price_gap: f64,
    pub wealth_tol: f64,
    pub residual_tol: f64,
}

impl Tolerances {
    fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, CliError> {
        if let Some(k) = map.keys().find(|k| !TOLERANCE_KEYS.contains(&k.as_str())) {
            return Err(CliError::input(format!(
                "cli::spec: unknown tolerance {k:?}; expected one of {TOLERANCE_KEYS:?}"
            )));
        }
        let get = |k: &str, d: f64| map.get(k).copied().unwrap_or(d);
        let mut optimizer = OptimizerOptions::default();
        optimizer.tol = get("optimizer_tol", optimizer.tol);
        optimizer.max_iter = get("max_iter", optimizer.max_iter as f64) as usize;
        Ok(Self {
            optimizer,
            strategy_tol: get("strategy_tol", 1e-4),
            price_gap: get("price_gap", 1e-5),
            wealth_tol: get("wealth_tol", 1e-8),
            residual_tol: get("residual_tol", 1e-6),
        })
    }

    pub fn price_options(&self) -> PriceOptions {
        PriceOptions { wealth_tol: self.wealth_tol, residual_tol: self.residual_tol, optimizer: self.optimizer }
    }
}

/// A spec with every reference resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub spec: ExperimentSpec,
    pub model: MarketModel,
    pub model_path: PathBuf,
    pub utility: Utility,
    pub claim: Claim,
    pub backend: ExpectationBackend,
    pub tolerances: Tolerances,
    pub convergence: ConvergenceOptions,
    pub na: NaOptions,
    pub out_dir: PathBuf,
}

/// Command-line overrides applied on top of the spec.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub backend: Option<String>,
}

impl Experiment {
    pub fn load(spec_path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(spec_path)
            .map_err(|e| CliError::input(format!("cli::spec: cannot read {}: {e}", spec_path.display())))?;
        let spec: ExperimentSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("cli::spec: {}: {e}", spec_path.display())))?;
        let base = spec_path.parent().unwrap_or(Path::new("."));
        Self::resolve(spec, base, overrides)
    }

    pub fn resolve(spec: ExperimentSpec, base: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let model_path = base.join(&spec.model_file);
        if !model_path.is_file() {
            return Err(CliError::input(format!("cli::spec: model file {} does not exist", model_path.display())));
        }
        let model = bigmarket::io::load_model(&model_path)?;
        let n_max = model.n_max();
        if spec.n_grid.is_empty()
            || spec.n_grid.windows(2).any(|w| w[1] <= w[0])
            || spec.n_grid[0] == 0
            || spec.n_grid[spec.n_grid.len() - 1] > n_max
        {
            return Err(CliError::input(format!(
                "cli::spec: n_grid {:?} must be strictly increasing within 1..={n_max}",
                spec.n_grid
            )));
        }
        if !spec.x.is_finite() {
            return Err(CliError::input("cli::spec: x must be finite"));
        }
        let utility = build_utility(&spec.utility)?;
        let claim = build_claim(&spec.claim, &model)?;
        let tolerances = Tolerances::from_map(&spec.tolerances)?;

        let seed = overrides.seed.or(spec.seed).unwrap_or(0);
        let mut backend_spec = spec.backend.clone();
        match overrides.backend.as_deref() {
            None => {}
            Some("exact") => {
                if !matches!(backend_spec, BackendSpec::Exact { .. }) {
                    backend_spec = BackendSpec::default();
                }
            }
            Some("mc") => {
                if !matches!(backend_spec, BackendSpec::MonteCarlo { .. }) {
                    backend_spec = BackendSpec::MonteCarlo { samples: default_samples(), seed };
                }
            }
            Some(other) => {
                return Err(CliError::input(format!("cli::spec: unknown backend {other:?}; use exact or mc")))
            }
        }
        let backend = match backend_spec {
            BackendSpec::Exact { cap } => ExpectationBackend::Exact { cap },
            BackendSpec::MonteCarlo { samples, seed: s } => {
                ExpectationBackend::MonteCarlo { samples, seed: overrides.seed.unwrap_or(s) }
            }
        };

        let convergence = ConvergenceOptions {
            optimizer: tolerances.optimizer,
            warm_start: spec.warm_start.unwrap_or(true),
            strategy_tol: tolerances.strategy_tol,
        };
        let na = NaOptions { seed, ..NaOptions::default() };
        let out_dir = match (&overrides.out, &spec.outputs) {
            (Some(o), _) => o.clone(),
            (None, Some(o)) => base.join(o),
            (None, None) => base.join("out"),
        };
        let name = spec
            .name
            .clone()
            .unwrap_or_else(|| model_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        Ok(Self { name, spec, model, model_path, utility, claim, backend, tolerances, convergence, na, out_dir })
    }
}

fn param_f64(params: &BTreeMap<String, serde_json::Value>, key: &str, what: &str) -> Result<f64, CliError> {
    match params.get(key) {
        Some(serde_json::Value::Number(n)) => Ok(n.as_f64().unwrap_or(f64::NAN)),
        Some(serde_json::Value::String(s)) => s
            .trim()
            .parse()
            .map_err(|_| CliError::input(format!("cli::spec: {what} parameter {key} = {s:?} is not a number"))),
        _ => Err(CliError::input(format!("cli::spec: {what} needs numeric parameter {key:?}"))),
    }
}

fn param_vec(params: &BTreeMap<String, serde_json::Value>, key: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let Some(serde_json::Value::Array(items)) = params.get(key) else {
        return Err(CliError::input(format!("cli::spec: {what} needs array parameter {key:?}")));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut one = BTreeMap::new();
            one.insert(key.to_string(), v.clone());
            param_f64(&one, key, what)
                .map_err(|_| CliError::input(format!("cli::spec: {what} {key}[{i}] is not a number")))
        })
        .collect()
}

pub fn build_utility(spec: &UtilitySpec) -> Result<Utility, CliError> {
    let u = match spec.family.as_str() {
        "two_sided_power" => {
            let a = param_f64(&spec.params, "a", "two_sided_power")?;
            let beta = param_f64(&spec.params, "beta", "two_sided_power")?;
            Utility::two_sided_power_at(a, beta, spec.x0)?
        }
        "user_table" => {
            let xs = param_vec(&spec.params, "xs", "user_table")?;
            let ys = param_vec(&spec.params, "ys", "user_table")?;
            Utility::table(xs, ys)?.normalize(spec.x0)?
        }
        other => {
            return Err(CliError::input(format!(
                "cli::spec: unknown utility family {other:?}; expected two_sided_power or user_table"
            )))
        }
    };
    Ok(match spec.constants {
        Some(c) => u.with_constants(c),
        None => u,
    })
}

pub fn build_claim(spec: &ClaimSpec, model: &MarketModel) -> Result<Claim, CliError> {
    let p = &spec.params;
    let k = spec.kind.as_str();
    let claim = match k {
        "constant" => Claim::constant(param_f64(p, "value", k)?),
        "call_on_factor" => {
            let factor = param_f64(p, "factor", k)?;
            if !(factor >= 1.0 && factor.fract() == 0.0) {
                return Err(CliError::input(format!(
                    "cli::spec: call_on_factor factor {factor} must be a positive integer"
                )));
            }
            Claim::call_on_factor(factor as usize, param_f64(p, "strike", k)?)
        }
        "basket_call" => Claim::basket_call(param_vec(p, "weights", k)?, param_f64(p, "strike", k)?),
        "affine" => Claim::affine(model, param_f64(p, "c", k)?, param_vec(p, "g", k)?)?,
        "table" => {
            let depends_on = param_f64(p, "depends_on", k)?;
            Claim::table(model, depends_on as usize, param_vec(p, "values", k)?)?
        }
        other => {
            return Err(CliError::input(format!(
            "cli::spec: unknown claim kind {other:?}; expected constant, call_on_factor, basket_call, affine or table"
        )))
        }
    };
    Ok(claim)
}
