use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel, Strategy};
use crate::numeric::{dot, norm, par_sum, par_sum_vec};
use crate::utility::{Claim, Utility};

/// Projected-gradient settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    /// Stop when the projected gradient norm falls to this level.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-increase parameter of the Armijo test.
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100_000, armijo: 1e-4, shrink: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub n: usize,
    pub h_star: Strategy,
    /// `E U(x + ⟨h*, ε − b⟩ − G)`.
    pub value: f64,
    /// Projected gradient norm at `h*`.
    pub grad_norm: f64,
    pub iterations: usize,
    /// `‖h*‖` within `1e-6` of the radius.
    pub active_bound: bool,
    pub converged: bool,
}

/// `F(h) = E U(x + ⟨h, ε − b⟩ − G)` on the first `n` sources, with the
/// scenarios, centred returns and payoffs laid out once.
pub struct SegmentObjective<'a> {
    u: &'a Utility,
    n: usize,
    weights: Vec<f64>,
    /// Row-major `ε_i − b_i`, `i < n`.
    returns: Vec<f64>,
    payoffs: Vec<f64>,
}

impl<'a> SegmentObjective<'a> {
    pub fn new(
        model: &MarketModel,
        u: &'a Utility,
        backend: &ExpectationBackend,
        n: usize,
        claim: &Claim,
    ) -> Result<Self> {
        if n == 0 || n > model.n_max() {
            return Err(Error::model("maximize_segment", format!("segment {n} outside 1..={}", model.n_max())));
        }
        if claim.depends_on() > model.n_max() {
            return Err(Error::InvalidClaim {
                msg: format!("claim reads {} factors, model has {}", claim.depends_on(), model.n_max()),
            });
        }
        let scen = backend.scenarios(model, n.max(claim.depends_on()))?;
        let mut returns = Vec::with_capacity(scen.len() * n);
        let mut payoffs = Vec::with_capacity(scen.len());
        for e in scen.rows() {
            returns.extend((0..n).map(|i| e[i] - model.b(i)));
            payoffs.push(claim.payoff(e));
        }
        Ok(Self { u, n, weights: scen.weights().to_vec(), returns, payoffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn wealth(&self, s: usize, x: f64, h: &[f64]) -> f64 {
        x - self.payoffs[s] + dot(h, &self.returns[s * self.n..(s + 1) * self.n])
    }

    /// `F(h)` at initial wealth `x`.
    pub fn value(&self, x: f64, h: &[f64]) -> f64 {
        par_sum(self.weights.len(), |s| self.weights[s] * self.u.eval(self.wealth(s, x, h)))
    }

    /// `(F(h), ∇F(h))` with `∇F(h) = E[U′(V − G)(ε − b)]`.
    pub fn value_and_grad(&self, x: f64, h: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n;
        let mut acc = par_sum_vec(self.weights.len(), n + 1, |s, add| {
            let v = self.wealth(s, x, h);
            let w = self.weights[s];
            add(0, w * self.u.eval(v));
            let d = w * self.u.deriv(v);
            for (i, r) in self.returns[s * n..(s + 1) * n].iter().enumerate() {
                add(i + 1, d * r);
            }
        });
        let value = acc.remove(0);
        (value, acc)
    }

    /// Projected gradient ascent on `‖h‖ ≤ radius`, started from `start`
    /// (zero-padded or truncated to `n`, then projected) or from zero.
    pub fn maximize(
        &self,
        x: f64,
        radius: f64,
        start: Option<&Strategy>,
        opts: &OptimizerOptions,
    ) -> Result<OptimizationResult> {
        if !(radius > 0.0) {
            return Err(Error::InvalidBound { msg: format!("radius {radius} must be positive") });
        }
        let n = self.n;
        let mut h = start.map(|s| s.resized(n).into_inner()).unwrap_or_else(|| vec![0.0; n]);
        project(&mut h, radius);

        let (mut f, mut g) = self.value_and_grad(x, &h);
        check_finite(0, f)?;
        let mut step = 1.0;
        let mut iterations = 0;
        let mut pg = projected_step_norm(&h, &g, 1.0, radius);
        let mut flat = 0;

        while pg > opts.tol && iterations < opts.max_iter {
            iterations += 1;
            let mut t = step;
            let mut accepted = None;
            for _ in 0..200 {
                let mut trial: Vec<f64> = h.iter().zip(&g).map(|(hi, gi)| hi + t * gi).collect();
                project(&mut trial, radius);
                let d: Vec<f64> = trial.iter().zip(&h).map(|(a, b)| a - b).collect();
                let (ft, gt) = self.value_and_grad(x, &trial);
                check_finite(iterations, ft)?;
                // rounding allowance for near-flat steps at the optimum
                let noise = 8.0 * f64::EPSILON * (1.0 + f.abs());
                if ft >= f + opts.armijo * dot(&g, &d) - noise {
                    accepted = Some((trial, d, ft, gt));
                    break;
                }
                t *= opts.shrink;
            }
            let Some((trial, d, ft, gt)) = accepted else { break };
            let gdiff: Vec<f64> = g.iter().zip(&gt).map(|(a, b)| a - b).collect();
            let curv = dot(&d, &gdiff);
            // Barzilai–Borwein trial step for the next iteration
            step = if curv > 0.0 { (dot(&d, &d) / curv).clamp(1e-12, 1e12) } else { (t * 2.0).min(1e12) };
            // steps accepted only through the rounding allowance make no progress
            flat = if ft > f { 0 } else { flat + 1 };
            h = trial;
            f = ft;
            g = gt;
            pg = projected_step_norm(&h, &g, 1.0, radius);
            if flat >= MAX_FLAT_STEPS {
                break;
            }
        }

        let h_norm = norm(&h);
        Ok(OptimizationResult {
            n,
            h_star: Strategy::new(h),
            value: f,
            grad_norm: pg,
            iterations,
            active_bound: (radius - h_norm).abs() <= 1e-6,
            converged: pg <= opts.tol,
        })
    }
}

const MAX_FLAT_STEPS: usize = 50;

fn check_finite(iteration: usize, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteObjective { iteration, value })
    }
}

/// Euclidean projection onto the ball of radius `r`.
pub fn project(h: &mut [f64], r: f64) {
    let len = norm(h);
    if len > r {
        let s = r / len;
        h.iter_mut().for_each(|v| *v *= s);
    }
}

/// `‖P(h + t g) − h‖ / t`, zero exactly at constrained stationary points.
fn projected_step_norm(h: &[f64], g: &[f64], t: f64, r: f64) -> f64 {
    let mut p: Vec<f64> = h.iter().zip(g).map(|(a, b)| a + t * b).collect();
    project(&mut p, r);
    p.iter().zip(h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / t
}

/// Solves the segment-`n` problem from the zero strategy (or `start`) on the
/// ball of radius `radius`.
#[allow(clippy::too_many_arguments)]
pub fn maximize_segment(
    model: &MarketModel,
    u: &Utility,
    backend: &ExpectationBackend,
    n: usize,
    x: f64,
    claim: &Claim,
    radius: f64,
    start: Option<&Strategy>,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult> {
    SegmentObjective::new(model, u, backend, n, claim)?.maximize(x, radius, start, opts)
}
