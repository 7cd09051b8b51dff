//! Normalized concave utilities with growth constants, the normalization
//! transform, and contingent claims.

mod claim;
mod growth;

pub use claim::{Claim, ClaimKind};
pub use growth::{check_growth, check_shape, fit_constants, GrowthConstants, GrowthReport, ShapeReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel, Strategy};

/// Base shape of a utility before the affine normalization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Shape {
    /// `((1+x)^{1−a} − 1)/(1−a)` for `x ≥ 0`, `−((1−x)^β − 1)/β` for `x < 0`.
    TwoSidedPower { a: f64, beta: f64 },
    /// Concave piecewise-linear interpolation of `(xs, ys)`, extended
    /// linearly beyond the end knots. Derivatives are right-hand slopes.
    Table { xs: Vec<f64>, ys: Vec<f64> },
}

impl Shape {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Shape::TwoSidedPower { a, beta } => {
                if x >= 0.0 {
                    if (*a - 1.0).abs() < 1e-15 {
                        (1.0 + x).ln()
                    } else {
                        ((1.0 + x).powf(1.0 - a) - 1.0) / (1.0 - a)
                    }
                } else {
                    -((1.0 - x).powf(*beta) - 1.0) / beta
                }
            }
            Shape::Table { xs, ys } => {
                let k = segment(xs, x);
                ys[k] + (x - xs[k]) * slope(xs, ys, k)
            }
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self {
            Shape::TwoSidedPower { a, beta } => {
                if x >= 0.0 {
                    (1.0 + x).powf(-a)
                } else {
                    (1.0 - x).powf(beta - 1.0)
                }
            }
            Shape::Table { xs, ys } => slope(xs, ys, segment(xs, x)),
        }
    }
}

/// Index `k` of the linear piece `[xs[k], xs[k+1])` used at `x`, clamped to
/// the end pieces.
fn segment(xs: &[f64], x: f64) -> usize {
    let last = xs.len() - 2;
    match xs.iter().rposition(|&k| k <= x) {
        None => 0,
        Some(k) => k.min(last),
    }
}

fn slope(xs: &[f64], ys: &[f64], k: usize) -> f64 {
    (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k])
}

/// `U(x) = scale · shape(x − shift) + offset`, normalized at `x0` when built
/// through the constructors or [`Utility::normalize`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Utility {
    shape: Shape,
    shift: f64,
    scale: f64,
    offset: f64,
    x0: f64,
    constants: Option<GrowthConstants>,
}

impl Utility {
    /// Two-sided power utility normalized at `x0 = 0`, with fitted growth
    /// constants.
    pub fn two_sided_power(a: f64, beta: f64) -> Result<Self> {
        Self::two_sided_power_at(a, beta, 0.0)
    }

    /// Two-sided power utility translated so that `U(x0) = 0`, `U'(x0) = 1`.
    pub fn two_sided_power_at(a: f64, beta: f64, x0: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::utility("two_sided_power", format!("a = {a} outside (0, 1)")));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::utility("two_sided_power", format!("beta = {beta} must exceed 1")));
        }
        if !x0.is_finite() {
            return Err(Error::utility("two_sided_power", "x0 must be finite"));
        }
        let mut u =
            Self { shape: Shape::TwoSidedPower { a, beta }, shift: x0, scale: 1.0, offset: 0.0, x0, constants: None };
        u.constants = fit_constants(&u);
        Ok(u)
    }

    /// Piecewise-linear utility through the given knots. Slopes must be
    /// positive and non-increasing. Not normalized; no growth constants.
    pub fn table(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        const OP: &str = "table";
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::utility(OP, "need at least two knots with matching lengths"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::utility(OP, "non-finite knot"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::utility(OP, "knots must be strictly increasing"));
        }
        let slopes: Vec<f64> = (0..xs.len() - 1).map(|k| slope(&xs, &ys, k)).collect();
        if slopes.iter().any(|s| *s <= 0.0) {
            return Err(Error::utility(OP, "utility must be strictly increasing"));
        }
        if slopes.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::utility(OP, "slopes must be non-increasing (concavity)"));
        }
        Ok(Self { shape: Shape::Table { xs, ys }, shift: 0.0, scale: 1.0, offset: 0.0, x0: 0.0, constants: None })
    }

    /// `scale · shape(x − shift) + offset`, not normalized.
    pub fn affine(shape: Shape, shift: f64, scale: f64, offset: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && shift.is_finite() && offset.is_finite()) {
            return Err(Error::utility("affine", "scale must be positive and all parameters finite"));
        }
        Ok(Self { shape, shift, scale, offset, x0: shift, constants: None })
    }

    pub fn with_constants(mut self, constants: GrowthConstants) -> Self {
        self.constants = Some(constants);
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn constants(&self) -> Option<&GrowthConstants> {
        self.constants.as_ref()
    }

    /// `1` for strictly concave shapes, `0` for piecewise-linear tables.
    pub fn is_strictly_concave(&self) -> bool {
        matches!(self.shape, Shape::TwoSidedPower { .. })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.scale * self.shape.eval(x - self.shift) + self.offset
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.scale * self.shape.deriv(x - self.shift)
    }

    /// `U(x0) = 0` and `U'(x0) = 1` within `1e-10`.
    pub fn is_normalized(&self) -> bool {
        self.eval(self.x0).abs() <= 1e-10 && (self.deriv(self.x0) - 1.0).abs() <= 1e-10
    }

    /// `V = (U − U(x0)) / U'(x0)`. Growth constants are divided by `U'(x0)`
    /// and the additive ones absorb `|U(x0)|/U'(x0)` (resp. `U⁺(x0)/U'(x0)`).
    pub fn normalize(&self, x0: f64) -> Result<Self> {
        let d = self.deriv(x0);
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::utility("normalize", format!("U'({x0}) = {d} must be positive")));
        }
        let u0 = self.eval(x0);
        let constants = self.constants.map(|c| GrowthConstants {
            c1: c.c1 / d,
            c2: c.c2 / d + u0.abs() / d,
            c3: c.c3 / d,
            c4: c.c4 / d + u0.max(0.0) / d,
            ..c
        });
        Ok(Self {
            shape: self.shape.clone(),
            shift: self.shift,
            scale: self.scale / d,
            offset: (self.offset - u0) / d,
            x0,
            constants,
        })
    }
}

/// Scenario-wise check of `U⁺(y + ⟨h,ε−b⟩ − G) ≤ |x0| + |y + ⟨h,ε−b⟩|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplusCheck {
    /// `E U⁺(y + ⟨h,ε−b⟩ − G)`.
    pub lhs: f64,
    /// `E(|x0| + |y + ⟨h,ε−b⟩|)`.
    pub rhs: f64,
    /// The inequality held in every scenario.
    pub ok: bool,
}

pub fn uplus_bound_check(u: &Utility, model: &MarketModel, y: f64, h: &Strategy, claim: &Claim) -> Result<UplusCheck> {
    let k = h.support_len().max(claim.depends_on());
    let scen = ExpectationBackend::exact().scenarios(model, k)?;
    let x0 = u.x0().abs();
    let gain = |e: &[f64]| -> f64 { y + (0..h.support_len()).map(|i| h[i] * (e[i] - model.b(i))).sum::<f64>() };
    let lhs = scen.expect(|e| u.eval(gain(e) - claim.payoff(e)).max(0.0));
    let rhs = scen.expect(|e| x0 + gain(e).abs());
    let ok = scen.rows().all(|e| {
        let v = gain(e);
        u.eval(v - claim.payoff(e)).max(0.0) <= x0 + v.abs() + 1e-12 * (1.0 + v.abs())
    });
    Ok(UplusCheck { lhs, rhs, ok })
}
