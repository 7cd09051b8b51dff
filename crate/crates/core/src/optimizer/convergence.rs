use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel, Strategy};
use crate::utility::{Claim, Utility};

use super::segment::{OptimizationResult, OptimizerOptions, SegmentObjective};

/// Slack allowed in the monotonicity of `u_n`.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// `ĥ_k = (1/k) Σ_{j≤k} h*_j`, zero-padded to the longest support.
pub fn cesaro(results: &[OptimizationResult]) -> Vec<Strategy> {
    let width = results.iter().map(|r| r.h_star.len()).max().unwrap_or(0);
    let mut sum = vec![0.0; width];
    results
        .iter()
        .enumerate()
        .map(|(k, r)| {
            for (s, v) in sum.iter_mut().zip(r.h_star.iter()) {
                *s += v;
            }
            let scale = 1.0 / (k + 1) as f64;
            Strategy::new(sum.iter().map(|s| s * scale).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceOptions {
    pub optimizer: OptimizerOptions,
    /// Warm-start each segment from the previous optimizer (sequential);
    /// otherwise every segment starts at zero and runs in parallel.
    pub warm_start: bool,
    /// Required final Cesàro distance for strictly concave utilities.
    pub strategy_tol: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self { optimizer: OptimizerOptions::default(), warm_start: true, strategy_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_grid: Vec<usize>,
    pub u_seq: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub h_norms: Vec<f64>,
    pub u_ref: f64,
    pub h_ref: Strategy,
    pub cesaro_dist: Vec<f64>,
    pub monotone_ok: bool,
    pub converged_ok: bool,
    pub results: Vec<OptimizationResult>,
}

/// Solves every segment on `n_grid` and the reference segment `n_max`, and
/// forms Cesàro averages along the grid.
#[allow(clippy::too_many_arguments)]
pub fn convergence_run(
    model: &MarketModel,
    u: &Utility,
    backend: &ExpectationBackend,
    x: f64,
    claim: &Claim,
    n_grid: &[usize],
    radius: f64,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::model("convergence_run", "n_grid must be nonempty and strictly increasing"));
    }
    let n_max = model.n_max();
    if n_grid[0] == 0 || n_grid[n_grid.len() - 1] > n_max {
        return Err(Error::model("convergence_run", format!("n_grid must lie in 1..={n_max}")));
    }
    let mut all: Vec<usize> = n_grid.to_vec();
    if all.last() != Some(&n_max) {
        all.push(n_max);
    }

    let solve = |n: usize, start: Option<&Strategy>| -> Result<OptimizationResult> {
        SegmentObjective::new(model, u, backend, n, claim)?.maximize(x, radius, start, &opts.optimizer)
    };
    let mut results: Vec<OptimizationResult> = if opts.warm_start {
        let mut out: Vec<OptimizationResult> = Vec::with_capacity(all.len());
        for &n in &all {
            let r = solve(n, out.last().map(|r| &r.h_star))?;
            out.push(r);
        }
        out
    } else {
        all.par_iter().map(|&n| solve(n, None)).collect::<Result<_>>()?
    };

    let reference = if all.len() > n_grid.len() { results.pop().unwrap() } else { results.last().unwrap().clone() };
    let averages = cesaro(&results);
    let cesaro_dist: Vec<f64> = averages.iter().map(|a| a.distance(&reference.h_star)).collect();
    let u_seq: Vec<f64> = results.iter().map(|r| r.value).collect();
    let monotone_ok = u_seq.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK)
        && reference.value >= u_seq[u_seq.len() - 1] - MONOTONE_SLACK;
    let value_ok = reference.value - u_seq[u_seq.len() - 1] <= 10.0 * opts.optimizer.tol;
    let strategy_ok = !u.is_strictly_concave() || cesaro_dist[cesaro_dist.len() - 1] <= opts.strategy_tol;

    Ok(ConvergenceReport {
        n_grid: n_grid.to_vec(),
        grad_norms: results.iter().map(|r| r.grad_norm).collect(),
        h_norms: results.iter().map(|r| r.h_star.norm()).collect(),
        u_seq,
        u_ref: reference.value,
        h_ref: reference.h_star.clone(),
        cesaro_dist,
        monotone_ok,
        converged_ok: value_ok && strategy_ok,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::FactorDistribution;

    fn result(h: Vec<f64>) -> OptimizationResult {
        OptimizationResult {
            n: h.len(),
            h_star: Strategy::new(h),
            value: 0.0,
            grad_norm: 0.0,
            iterations: 0,
            active_bound: false,
            converged: true,
        }
    }

    #[test]
    fn cesaro_examples() {
        let same = cesaro(&[result(vec![1.0, 2.0]), result(vec![1.0, 2.0])]);
        assert_eq!(same[1].coords(), &[1.0, 2.0]);
        let cancel = cesaro(&[result(vec![1.0]), result(vec![-1.0])]);
        assert_eq!(cancel[1].coords(), &[0.0]);
        let basis = cesaro(&[result(vec![1.0]), result(vec![0.0, 1.0]), result(vec![0.0, 0.0, 1.0])]);
        for v in basis[2].iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(basis[0].len(), 3);
    }

    #[test]
    fn irrelevant_sources_add_nothing() {
        let m = MarketModel::iid(FactorDistribution::rademacher(), vec![0.3, 0.0, 0.0]).unwrap();
        let u = Utility::two_sided_power(0.5, 2.0).unwrap();
        let r = convergence_run(
            &m,
            &u,
            &ExpectationBackend::exact(),
            0.0,
            &Claim::call_on_factor(1, 0.0),
            &[1, 2],
            100.0,
            &Default::default(),
        )
        .unwrap();
        assert!(r.monotone_ok && r.converged_ok);
        assert!((r.u_seq[1] - r.u_seq[0]).abs() < 1e-12);
        assert!((r.u_ref - r.u_seq[0]).abs() < 1e-12);
    }

    #[test]
    fn drift_on_second_source_raises_value() {
        let m = MarketModel::iid(FactorDistribution::rademacher(), vec![0.0, 0.4]).unwrap();
        let u = Utility::two_sided_power(0.5, 2.0).unwrap();
        let warm = convergence_run(
            &m,
            &u,
            &ExpectationBackend::exact(),
            0.0,
            &Claim::constant(0.0),
            &[1, 2],
            100.0,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(warm.u_seq[0], 0.0);
        assert!(warm.u_seq[1] > 1e-3);
        let cold_opts = ConvergenceOptions { warm_start: false, ..Default::default() };
        let cold = convergence_run(
            &m,
            &u,
            &ExpectationBackend::exact(),
            0.0,
            &Claim::constant(0.0),
            &[1, 2],
            100.0,
            &cold_opts,
        )
        .unwrap();
        assert!((cold.u_ref - warm.u_ref).abs() < 1e-12);
        assert!(cold.h_ref.distance(&warm.h_ref) < 1e-6);
    }

    #[test]
    fn rejects_bad_grids() {
        let m = MarketModel::iid(FactorDistribution::rademacher(), vec![0.0; 2]).unwrap();
        let u = Utility::two_sided_power(0.5, 2.0).unwrap();
        let b = ExpectationBackend::exact();
        let c = Claim::constant(0.0);
        for grid in [&[][..], &[2, 1], &[0, 1], &[1, 3]] {
            assert!(convergence_run(&m, &u, &b, 0.0, &c, grid, 1.0, &Default::default()).is_err());
        }
    }
}
