use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

/// Tolerance on `Σ p = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Tolerance on the normalized mean and variance.
pub const MOMENT_TOL: f64 = 1e-10;

/// Finite-support law of one source `ε_i`.
///
/// The constructor enforces the structural invariants (matching lengths,
/// probabilities in `(0, 1]` summing to one, at least two distinct support
/// points). Zero mean and unit variance are *not* enforced here so that
/// [`validate_model`](crate::market::validate_model) can report a badly
/// normalized law instead of refusing to load it; use
/// [`FactorDistribution::standardized`] to normalize raw support points.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FactorDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        const OP: &str = "factor";
        if support.len() != probs.len() {
            return Err(Error::model(
                OP,
                format!("{} support points but {} probabilities", support.len(), probs.len()),
            ));
        }
        if support.iter().chain(&probs).any(|v| !v.is_finite()) {
            return Err(Error::model(OP, "non-finite support point or probability"));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return Err(Error::model(OP, format!("probability {p} outside (0, 1]")));
        }
        let total = probs.iter().copied().collect::<NeumaierSum>().value();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::model(OP, format!("probabilities sum to {total}, not 1")));
        }
        let mut sorted = support.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        if sorted.len() < 2 {
            return Err(Error::model(OP, "support needs at least two distinct points"));
        }
        let mut acc = NeumaierSum::new();
        let cumulative = probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();
        Ok(Self { support, probs, cumulative })
    }

    /// Shifts then scales raw support points so the law has mean 0 and
    /// variance 1.
    pub fn standardized(raw_support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let raw = Self::new(raw_support, probs)?;
        let mean = raw.mean();
        let sd = raw.centered_moment(2).sqrt();
        let support = raw.support.iter().map(|s| (s - mean) / sd).collect();
        Self::new(support, raw.probs)
    }

    /// `±1` with probability one half each.
    pub fn rademacher() -> Self {
        Self::new(vec![-1.0, 1.0], vec![0.5, 0.5]).expect("valid law")
    }

    /// Normalized two-point law taking its positive value with probability
    /// `p_up`.
    pub fn two_point(p_up: f64) -> Result<Self> {
        if !(p_up > 0.0 && p_up < 1.0) {
            return Err(Error::model("factor", format!("p_up = {p_up} outside (0, 1)")));
        }
        let up = ((1.0 - p_up) / p_up).sqrt();
        let down = -(p_up / (1.0 - p_up)).sqrt();
        Self::new(vec![down, up], vec![1.0 - p_up, p_up])
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.support.iter().zip(&self.probs).map(|(&s, &p)| p * f(s)).collect::<NeumaierSum>().value()
    }

    pub fn prob_sum(&self) -> f64 {
        self.probs.iter().copied().collect::<NeumaierSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|s| s)
    }

    /// `E ε²` (raw, not centered).
    pub fn second_moment(&self) -> f64 {
        self.expect(|s| s * s)
    }

    pub fn abs_moment(&self, gamma: f64) -> f64 {
        self.expect(|s| s.abs().powf(gamma))
    }

    fn centered_moment(&self, k: i32) -> f64 {
        let m = self.mean();
        self.expect(|s| (s - m).powi(k))
    }

    pub fn min(&self) -> f64 {
        self.support.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.support.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `P(ε < level)`.
    pub fn prob_below(&self, level: f64) -> f64 {
        self.support.iter().zip(&self.probs).filter(|(s, _)| **s < level).map(|(_, p)| *p).sum()
    }

    /// `P(ε > level)`.
    pub fn prob_above(&self, level: f64) -> f64 {
        self.support.iter().zip(&self.probs).filter(|(s, _)| **s > level).map(|(_, p)| *p).sum()
    }

    /// Index of the support point selected by a uniform draw `u ∈ [0, 1)`.
    pub(crate) fn index_for_uniform(&self, u: f64) -> usize {
        let last = self.cumulative.len() - 1;
        self.cumulative[..last].iter().position(|&c| u < c).unwrap_or(last)
    }
}
