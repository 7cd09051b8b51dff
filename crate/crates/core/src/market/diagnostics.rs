use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::factor::{MOMENT_TOL, PROB_SUM_TOL};
use crate::market::{ExpectationBackend, MarketModel, Strategy};
use crate::numeric::norm;

/// Moment and support diagnostics for one source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorDiagnostics {
    /// 1-based source index.
    pub index: usize,
    pub prob_sum: f64,
    pub mean: f64,
    pub variance: f64,
    pub third_abs_moment: f64,
    pub prob_above_drift: f64,
    pub prob_below_drift: f64,
}

/// Outcome of [`validate_model`]. Failures are reported, never raised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub factors: Vec<FactorDiagnostics>,
    /// Zero mean and unit variance for every source.
    pub moments_ok: bool,
    /// `b ∈ ℓ₂`: finite drift norm including the declared tail.
    pub drift_ok: bool,
    pub drift_norm: f64,
    /// Two-sided support around the drift for every source.
    pub two_sided_ok: bool,
    /// `sup_i E|ε_i|³` over the truncation is finite.
    pub third_moment_ok: bool,
    pub sup_third_moment: f64,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the moment, drift, two-sided support and third-moment conditions.
pub fn validate_model(model: &MarketModel) -> ValidationReport {
    let mut failures = Vec::new();
    let factors: Vec<FactorDiagnostics> = model
        .factors()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let b = model.b(i);
            FactorDiagnostics {
                index: i + 1,
                prob_sum: f.prob_sum(),
                mean: f.mean(),
                variance: f.second_moment(),
                third_abs_moment: f.abs_moment(3.0),
                prob_above_drift: f.prob_above(b),
                prob_below_drift: f.prob_below(b),
            }
        })
        .collect();

    let mut moments_ok = true;
    let mut two_sided_ok = true;
    for d in &factors {
        if (d.prob_sum - 1.0).abs() > PROB_SUM_TOL {
            moments_ok = false;
            failures.push(format!("moments: factor {} probabilities sum to {}", d.index, d.prob_sum));
        }
        if d.mean.abs() > MOMENT_TOL {
            moments_ok = false;
            failures.push(format!("moments: factor {} has mean {:.6e}", d.index, d.mean));
        }
        if (d.variance - 1.0).abs() > MOMENT_TOL {
            moments_ok = false;
            failures.push(format!("moments: factor {} has E eps^2 = {:.12}", d.index, d.variance));
        }
        if !(d.prob_above_drift > 0.0 && d.prob_below_drift > 0.0) {
            two_sided_ok = false;
            failures.push(format!(
                "two-sided support: factor {} has P(eps > b) = {} and P(eps < b) = {}",
                d.index, d.prob_above_drift, d.prob_below_drift
            ));
        }
    }
    let drift_norm = model.drift().norm();
    let drift_ok = drift_norm.is_finite();
    if !drift_ok {
        failures.push("drift: drift norm is not finite".into());
    }
    let sup_third_moment = factors.iter().map(|d| d.third_abs_moment).fold(0.0, f64::max);
    let third_moment_ok = sup_third_moment.is_finite();
    if !third_moment_ok {
        failures.push("third moment: sup E|eps|^3 is not finite".into());
    }
    ValidationReport {
        factors,
        moments_ok,
        drift_ok,
        drift_norm,
        two_sided_ok,
        third_moment_ok,
        sup_third_moment,
        failures,
    }
}

/// Second-moment bound `E⟨h, ε−b⟩² ≤ (1 + ‖b‖²)‖h‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Evaluates both sides of the second-moment bound with exact enumeration
/// over the support of `h`. The right side uses the full drift norm,
/// declared tail included.
pub fn second_moment_bound_check(model: &MarketModel, h: &Strategy) -> Result<BoundCheck> {
    let k = h.support_len();
    let scen = ExpectationBackend::exact().scenarios(model, k)?;
    let lhs = scen.expect(|e| {
        let v: f64 = (0..k).map(|i| h[i] * (e[i] - model.b(i))).sum();
        v * v
    });
    let h_sq: f64 = h.iter().map(|v| v * v).sum();
    let rhs = (1.0 + model.drift().norm_sq()) * h_sq;
    Ok(BoundCheck { lhs, rhs, ok: lhs <= rhs + 1e-9 })
}

/// `E|⟨h, ε−b⟩|^γ / (‖h‖^γ (1 + ‖b‖^γ))` for one strategy, exact.
pub fn moment_ratio_at(model: &MarketModel, gamma: f64, h: &Strategy) -> Result<f64> {
    if !(gamma >= 2.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let k = h.support_len();
    let scen = ExpectationBackend::exact().scenarios(model, k)?;
    let moment = scen.expect(|e| (0..k).map(|i| h[i] * (e[i] - model.b(i))).sum::<f64>().abs().powf(gamma));
    let b = model.drift().norm();
    Ok(moment / (h.norm().powf(gamma) * (1.0 + b.powf(gamma))))
}

/// Largest ratio over `trials` seeded random unit strategies on all `n_max`
/// sources: an empirical lower estimate of the best moment constant.
pub fn moment_ratio(model: &MarketModel, gamma: f64, trials: usize, seed: u64) -> Result<f64> {
    if !(gamma >= 2.0) {
        return Err(Error::InvalidGamma(gamma));
    }
    let n = model.n_max();
    let scen = ExpectationBackend::exact().scenarios(model, n)?;
    let b = model.drift().norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..trials {
        let h = random_unit(n, &mut rng);
        let moment = scen.expect(|e| (0..n).map(|i| h[i] * (e[i] - model.b(i))).sum::<f64>().abs().powf(gamma));
        best = best.max(moment / (1.0 + b.powf(gamma)));
    }
    Ok(best)
}

/// Uniform direction on the unit sphere of `ℝⁿ`.
pub fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}
