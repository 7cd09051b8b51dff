//! The truncated market: source laws, drift, loadings, strategies and the
//! expectation backends every other module evaluates through.

mod diagnostics;
mod expectation;
mod factor;
mod model;

pub use diagnostics::{
    moment_ratio, moment_ratio_at, random_unit, second_moment_bound_check, validate_model, BoundCheck,
    FactorDiagnostics, ValidationReport,
};
pub use expectation::{expect, ExpectationBackend, ScenarioSet, DEFAULT_STATE_CAP, MC_BLOCK};
pub use factor::{FactorDistribution, MOMENT_TOL, PROB_SUM_TOL};
pub use model::{DriftVector, Loadings, MarketModel, Strategy};
