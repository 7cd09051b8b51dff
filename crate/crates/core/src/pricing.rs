//! Reservation (utility-indifference) prices per segment: the `p` solving
//! `u_n(G, x + p) = u_n(0, x)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel, Strategy};
use crate::optimizer::{OptimizerOptions, SegmentObjective};
use crate::utility::{Claim, Utility};

/// Largest upper bracket tried before giving up.
pub const MAX_BRACKET: f64 = (1u64 << 60) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceOptions {
    /// Bisection stops once the bracket is this narrow.
    pub wealth_tol: f64,
    /// Allowed `|residual| / max(1, |u_n(0, x)|)`.
    pub residual_tol: f64,
    pub optimizer: OptimizerOptions,
}

impl Default for PriceOptions {
    fn default() -> Self {
        Self { wealth_tol: 1e-8, residual_tol: 1e-6, optimizer: OptimizerOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceResult {
    pub n: usize,
    /// True for the `n_max` reference solve.
    pub reference: bool,
    pub p: f64,
    pub bracket: (f64, f64),
    /// `u_n(G, x + p) − u_n(0, x)`.
    pub residual: f64,
    /// `u_n(0, x)`.
    pub u_zero: f64,
    pub iterations: usize,
    pub residual_ok: bool,
}

/// Bracketing bisection on `p ↦ u_n(G, x + p) − u_n(0, x)`, each evaluation
/// a full segment solve warm-started from the previous one. Evaluations are
/// checked to be non-decreasing in `p`.
#[allow(clippy::too_many_arguments)]
pub fn reservation_price(
    model: &MarketModel,
    u: &Utility,
    backend: &ExpectationBackend,
    n: usize,
    x: f64,
    claim: &Claim,
    radius: f64,
    opts: &PriceOptions,
) -> Result<PriceResult> {
    let sup_g = match backend {
        ExpectationBackend::Exact { cap } => claim.check(model, *cap)?,
        ExpectationBackend::MonteCarlo { .. } => claim.check(model, crate::market::DEFAULT_STATE_CAP)?,
    };
    let free = SegmentObjective::new(model, u, backend, n, &Claim::constant(0.0))?;
    let target = free.maximize(x, radius, None, &opts.optimizer)?.value;

    let hedged = SegmentObjective::new(model, u, backend, n, claim)?;
    let mut start: Option<Strategy> = None;
    let mut evals: Vec<(f64, f64)> = Vec::new();
    let mut gap = |p: f64, start: &mut Option<Strategy>| -> Result<f64> {
        let r = hedged.maximize(x + p, radius, start.as_ref(), &opts.optimizer)?;
        *start = Some(r.h_star);
        let d = r.value - target;
        evals.push((p, d));
        Ok(d)
    };

    let mut lo = 0.0;
    let mut f_lo = gap(lo, &mut start)?;
    let mut hi = sup_g.max(1.0);
    let mut f_hi = gap(hi, &mut start)?;
    while f_hi < 0.0 {
        if hi >= MAX_BRACKET {
            return Err(Error::BracketOverflow { hi });
        }
        lo = hi;
        f_lo = f_hi;
        hi *= 2.0;
        f_hi = gap(hi, &mut start)?;
    }

    let mut iterations = 0;
    let (p, residual) = if f_lo >= 0.0 {
        // G ≥ 0 forces f(0) ≤ 0, so this is the zero-price boundary case
        (lo, f_lo)
    } else {
        let (mut best_p, mut best_f) = if f_hi.abs() < f_lo.abs() { (hi, f_hi) } else { (lo, f_lo) };
        while hi - lo > opts.wealth_tol {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = gap(mid, &mut start)?;
            if f_mid.abs() <= best_f.abs() {
                best_p = mid;
                best_f = f_mid;
            }
            if f_mid == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if f_mid < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (best_p, best_f)
    };

    check_monotone(&mut evals, target)?;
    Ok(PriceResult {
        n,
        reference: false,
        p,
        bracket: (lo, hi),
        residual,
        u_zero: target,
        iterations,
        residual_ok: residual.abs() <= opts.residual_tol * target.abs().max(1.0),
    })
}

fn check_monotone(evals: &mut [(f64, f64)], target: f64) -> Result<()> {
    evals.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in evals.windows(2) {
        let ((p_lo, d_lo), (p_hi, d_hi)) = (w[0], w[1]);
        if p_hi > p_lo && d_hi < d_lo - 1e-12 * (1.0 + target.abs()) {
            return Err(Error::NonMonotone { p_lo, u_lo: d_lo + target, p_hi, u_hi: d_hi + target });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceConvergence {
    pub results: Vec<PriceResult>,
    pub reference: PriceResult,
    /// `|p_n − p_ref|` along the grid.
    pub gaps: Vec<f64>,
    /// Gaps non-increasing (slack `1e-6`) over the last half of the grid.
    pub tail_monotone_ok: bool,
    pub final_gap_ok: bool,
    pub residuals_ok: bool,
    pub verdict: bool,
}

/// Prices on every grid segment (in parallel) and at `n_max`.
#[allow(clippy::too_many_arguments)]
pub fn price_convergence(
    model: &MarketModel,
    u: &Utility,
    backend: &ExpectationBackend,
    x: f64,
    claim: &Claim,
    n_grid: &[usize],
    radius: f64,
    gap_tol: f64,
    opts: &PriceOptions,
) -> Result<PriceConvergence> {
    let n_max = model.n_max();
    if n_grid.is_empty()
        || n_grid.windows(2).any(|w| w[1] <= w[0])
        || n_grid[0] == 0
        || n_grid[n_grid.len() - 1] > n_max
    {
        return Err(Error::model(
            "price_convergence",
            format!("n_grid must be strictly increasing within 1..={n_max}"),
        ));
    }
    let mut all = n_grid.to_vec();
    if all.last() != Some(&n_max) {
        all.push(n_max);
    }
    let mut results: Vec<PriceResult> = all
        .par_iter()
        .map(|&n| reservation_price(model, u, backend, n, x, claim, radius, opts))
        .collect::<Result<_>>()?;
    let mut reference = if all.len() > n_grid.len() { results.pop().unwrap() } else { results.last().unwrap().clone() };
    reference.reference = true;

    let gaps: Vec<f64> = results.iter().map(|r| (r.p - reference.p).abs()).collect();
    let tail = &gaps[gaps.len() - gaps.len().div_ceil(2)..];
    let tail_monotone_ok = tail.windows(2).all(|w| w[1] <= w[0] + 1e-6);
    let final_gap_ok = gaps[gaps.len() - 1] <= gap_tol;
    let residuals_ok = results.iter().all(|r| r.residual_ok) && reference.residual_ok;
    Ok(PriceConvergence {
        verdict: tail_monotone_ok && final_gap_ok && residuals_ok,
        results,
        reference,
        gaps,
        tail_monotone_ok,
        final_gap_ok,
        residuals_ok,
    })
}
