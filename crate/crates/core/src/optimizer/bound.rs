use serde::Serialize;

use crate::arbitrage::NAConstants;
use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel};
use crate::utility::{Claim, Utility};

/// Inputs the bound was computed from, echoed for audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub alpha_large: f64,
    pub n_alpha: usize,
    pub alpha_bar: f64,
    pub alpha_n_alpha: f64,
    /// `E U(x − G)`.
    pub eu_x_minus_g: f64,
    pub drift_norm: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub x0: f64,
    pub x: f64,
}

/// Radius `M` of the ball outside which the zero strategy beats every
/// strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyBound {
    #[serde(rename = "M")]
    pub m: f64,
    pub term_growth: f64,
    pub term_slope: f64,
    /// `max((x − x0)/ᾱ, |x|/ᾱ)`.
    pub kinematic: f64,
    pub inputs: BoundInputs,
}

/// Plug-in evaluation of the bound from already-known inputs.
pub fn bound_from_inputs(inputs: BoundInputs) -> Result<StrategyBound> {
    let BoundInputs { alpha_large: a, alpha_bar: ab, alpha_n_alpha: an, c1, c2, beta, x0, x, .. } = inputs;
    if !(ab > 0.0) || !(a > 0.0) || !(an > 0.0) {
        return Err(Error::InvalidBound {
            msg: format!("alpha_bar = {ab}, alpha = {a}, alpha_n_alpha = {an} must be positive"),
        });
    }
    if !(c1 > 0.0 && beta > 1.0 && c2 >= 0.0) {
        return Err(Error::InvalidBound {
            msg: format!("growth constants C1 = {c1}, C2 = {c2}, beta = {beta} out of range"),
        });
    }
    let denom = c1 * an * a * ab.powf(beta);
    let term_growth = (2.0 * (x0.abs() + x.abs() + c2 * an * a + inputs.eu_x_minus_g.abs()) / denom).powf(1.0 / beta);
    let term_slope = (2.0 * (1.0 + inputs.drift_norm.powi(2)).sqrt() / denom).powf(1.0 / (beta - 1.0));
    let kinematic = ((x - x0) / ab).max(x.abs() / ab);
    let m = kinematic.max(term_growth).max(term_slope);
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidBound { msg: format!("bound evaluates to {m}") });
    }
    Ok(StrategyBound { m, term_growth, term_slope, kinematic, inputs })
}

/// `M_{x,G}` from the no-arbitrage constants, the utility's growth constants
/// and `E U(x − G)` under `backend`. The drift norm includes the declared tail.
pub fn strategy_bound(
    model: &MarketModel,
    u: &Utility,
    na: &NAConstants,
    backend: &ExpectationBackend,
    x: f64,
    claim: &Claim,
) -> Result<StrategyBound> {
    let c = u.constants().ok_or_else(|| Error::InvalidBound { msg: "utility has no growth constants".into() })?;
    let scen = backend.scenarios(model, claim.depends_on())?;
    let eu = scen.expect(|e| u.eval(x - claim.payoff(e)));
    if !eu.is_finite() {
        return Err(Error::InvalidBound { msg: format!("E U(x - G) = {eu}") });
    }
    bound_from_inputs(BoundInputs {
        alpha_large: na.alpha_large,
        n_alpha: na.n_alpha,
        alpha_bar: na.alpha_bar,
        alpha_n_alpha: na.alpha_n_alpha(),
        eu_x_minus_g: eu,
        drift_norm: model.drift().norm(),
        c1: c.c1,
        c2: c.c2,
        beta: c.beta,
        x0: u.x0(),
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs() -> BoundInputs {
        BoundInputs {
            alpha_large: 0.4,
            n_alpha: 1,
            alpha_bar: 0.2,
            alpha_n_alpha: 0.4,
            eu_x_minus_g: 0.0,
            drift_norm: 0.0,
            c1: 0.5,
            c2: 0.0,
            beta: 2.0,
            x0: 0.0,
            x: 0.0,
        }
    }

    #[test]
    fn plug_in_example() {
        let b = bound_from_inputs(inputs()).unwrap();
        assert!((b.term_slope - 625.0).abs() < 1e-9);
        assert_eq!(b.term_growth, 0.0);
        assert_eq!(b.kinematic, 0.0);
        assert_eq!(b.m, b.term_slope);
    }

    #[test]
    fn monotone_in_wealth() {
        let mut last = 0.0;
        for x in [0.0, 1.0, 10.0, 1e3, 1e6] {
            let b = bound_from_inputs(BoundInputs { x, ..inputs() }).unwrap();
            assert!(b.m >= last);
            last = b.m;
        }
        let b = bound_from_inputs(BoundInputs { x: 1e6, ..inputs() }).unwrap();
        assert_eq!(b.m, 5e6);
    }

    #[test]
    fn nonpositive_alpha_bar_is_rejected() {
        assert!(matches!(
            bound_from_inputs(BoundInputs { alpha_bar: 0.0, ..inputs() }),
            Err(Error::InvalidBound { .. })
        ));
    }
}
