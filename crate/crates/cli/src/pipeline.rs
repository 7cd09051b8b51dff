//! The experiment pipeline: validate → no-arbitrage constants → martingale
//! certificates → strategy bound → convergence study → prices.

use std::collections::BTreeMap;

use bigmarket::arbitrage::{emm_segment, na_constant_large, segment_constants, NAConstants, SegmentConstant};
use bigmarket::market::{validate_model, ExpectationBackend, ValidationReport, DEFAULT_STATE_CAP};
use bigmarket::optimizer::{convergence_run, strategy_bound, ConvergenceReport, StrategyBound};
use bigmarket::pricing::{price_convergence, PriceConvergence};
use bigmarket::utility::{check_growth, check_shape, Claim, GrowthReport, ShapeReport};
use serde::Serialize;

use crate::error::CliError;
use crate::spec::Experiment;

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub model: ValidationReport,
    pub growth: Option<GrowthReport>,
    pub shape: ShapeReport,
    pub claim_sup: f64,
    pub passed: bool,
}

pub fn validate(exp: &Experiment) -> Result<ValidationSummary, CliError> {
    let model = validate_model(&exp.model);
    let growth = exp.utility.constants().map(|c| check_growth(&exp.utility, c));
    let shape = check_shape(&exp.utility, 1000, exp.na.seed);
    let cap = match exp.backend {
        ExpectationBackend::Exact { cap } => cap,
        ExpectationBackend::MonteCarlo { .. } => DEFAULT_STATE_CAP,
    };
    let claim_sup = exp.claim.check(&exp.model, cap)?;
    let growth_ok = growth.map_or(true, |g| g.lower_growth_ok && g.loss_growth_ok && g.constants_ok);
    let passed = model.passed() && growth_ok && shape.concave_ok && shape.increasing_ok && shape.normalized_ok;
    Ok(ValidationSummary { model, growth, shape, claim_sup, passed })
}

/// Turns a failed validation into an input error naming every failure.
pub fn require_valid(v: &ValidationSummary) -> Result<(), CliError> {
    if v.passed {
        return Ok(());
    }
    let mut msgs: Vec<String> = v.model.failures.iter().map(|f| format!("market::validate_model: {f}")).collect();
    if let Some(g) = &v.growth {
        if !(g.lower_growth_ok && g.loss_growth_ok && g.constants_ok) {
            msgs.push(format!(
                "utility::check_growth: growth constants fail on the grid (worst violations {:.3e}, {:.3e})",
                g.worst_lower, g.worst_loss
            ));
        }
    }
    if !(v.shape.concave_ok && v.shape.increasing_ok && v.shape.normalized_ok) {
        msgs.push(format!("utility::check_shape: {:?}", v.shape));
    }
    Err(CliError::input(msgs.join("\n")))
}

#[derive(Debug, Clone, Serialize)]
pub struct NaSummary {
    pub constants: NAConstants,
    pub segments: Vec<SegmentConstant>,
}

pub fn na(exp: &Experiment) -> Result<NaSummary, CliError> {
    let segments = segment_constants(&exp.model, &exp.na)?;
    let per_segment: BTreeMap<usize, f64> = segments.iter().map(|c| (c.n, c.alpha)).collect();
    let large = na_constant_large(&exp.model, &per_segment, &exp.na)?;
    let constants =
        NAConstants { per_segment, alpha_large: large.alpha_large, n_alpha: large.n_alpha, alpha_bar: large.alpha_bar };
    Ok(NaSummary { constants, segments })
}

#[derive(Debug, Clone, Serialize)]
pub struct EmmSummary {
    pub n: usize,
    pub physical: bool,
    pub min_weight: f64,
    pub max_density_ratio: f64,
}

/// Martingale certificates on the grid segments whose states fit the cap.
pub fn emm(exp: &Experiment) -> Result<Vec<EmmSummary>, CliError> {
    exp.spec
        .n_grid
        .iter()
        .map(|&n| {
            let c = emm_segment(&exp.model, n, exp.na.cap)?;
            Ok(EmmSummary { n, physical: c.physical, min_weight: c.min_weight, max_density_ratio: c.max_density_ratio })
        })
        .collect()
}

pub fn bound(exp: &Experiment, na: &NAConstants) -> Result<StrategyBound, CliError> {
    Ok(strategy_bound(&exp.model, &exp.utility, na, &exp.backend, exp.spec.x, &exp.claim)?)
}

/// Ball radius for the price search: the largest bound over the wealth
/// levels and claims the bisection visits first.
pub fn price_radius(exp: &Experiment, na: &NAConstants, claim_sup: f64) -> Result<f64, CliError> {
    let x = exp.spec.x;
    let reach = 2.0 * claim_sup.max(1.0);
    let zero = Claim::constant(0.0);
    let mut m: f64 = 0.0;
    for (wealth, claim) in [(x, &exp.claim), (x + reach, &exp.claim), (x, &zero)] {
        m = m.max(strategy_bound(&exp.model, &exp.utility, na, &exp.backend, wealth, claim)?.m);
    }
    Ok(m)
}

pub fn convergence(exp: &Experiment, bound: &StrategyBound) -> Result<ConvergenceReport, CliError> {
    Ok(convergence_run(
        &exp.model,
        &exp.utility,
        &exp.backend,
        exp.spec.x,
        &exp.claim,
        &exp.spec.n_grid,
        bound.m,
        &exp.convergence,
    )?)
}

pub fn prices(exp: &Experiment, radius: f64) -> Result<PriceConvergence, CliError> {
    Ok(price_convergence(
        &exp.model,
        &exp.utility,
        &exp.backend,
        exp.spec.x,
        &exp.claim,
        &exp.spec.n_grid,
        radius,
        exp.tolerances.price_gap,
        &exp.tolerances.price_options(),
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdicts {
    pub validation: bool,
    pub emm_feasible: bool,
    pub monotone: bool,
    pub converged: bool,
    pub prices: bool,
    pub all: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    pub model_file: String,
    pub backend: ExpectationBackend,
    pub x: f64,
    pub n_grid: Vec<usize>,
    pub validation: ValidationSummary,
    pub na: NaSummary,
    pub emm: Vec<EmmSummary>,
    pub bound: StrategyBound,
    pub price_radius: f64,
    pub convergence: ConvergenceReport,
    pub prices: PriceConvergence,
    pub verdicts: Verdicts,
}

/// Runs every stage. Input problems surface as errors; numerical verdicts
/// are recorded in [`Report::verdicts`].
pub fn run(exp: &Experiment) -> Result<Report, CliError> {
    let validation = validate(exp)?;
    require_valid(&validation)?;
    let na = na(exp)?;
    let emm = emm(exp)?;
    let bound = bound(exp, &na.constants)?;
    let price_radius = price_radius(exp, &na.constants, validation.claim_sup)?;
    let convergence = convergence(exp, &bound)?;
    let prices = prices(exp, price_radius)?;
    let verdicts = Verdicts {
        validation: validation.passed,
        emm_feasible: emm.iter().all(|e| e.min_weight > 0.0),
        monotone: convergence.monotone_ok,
        converged: convergence.converged_ok,
        prices: prices.verdict,
        all: validation.passed
            && emm.iter().all(|e| e.min_weight > 0.0)
            && convergence.monotone_ok
            && convergence.converged_ok
            && prices.verdict,
    };
    Ok(Report {
        name: exp.name.clone(),
        model_file: exp.spec.model_file.display().to_string(),
        backend: exp.backend,
        x: exp.spec.x,
        n_grid: exp.spec.n_grid.clone(),
        validation,
        na,
        emm,
        bound,
        price_radius,
        convergence,
        prices,
        verdicts,
    })
}
