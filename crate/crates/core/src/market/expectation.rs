use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::numeric::{par_sum, NeumaierSum};

/// Default cap on the number of enumerated product states.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

/// Samples per seeded stream in Monte Carlo mode. Block `k` draws from
/// ChaCha stream `k`, so the sample sequence does not depend on how many
/// workers generate it.
pub const MC_BLOCK: usize = 4096;

/// How expectations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpectationBackend {
    /// Enumerate the product support; refuses more than `cap` states.
    Exact { cap: usize },
    /// Seeded sample mean. Every sample draws all `n_max` factors in order,
    /// so the scenarios used for segment `n` are prefixes of those for
    /// segment `n + 1` (common random numbers).
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for ExpectationBackend {
    fn default() -> Self {
        ExpectationBackend::Exact { cap: DEFAULT_STATE_CAP }
    }
}

impl ExpectationBackend {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        ExpectationBackend::MonteCarlo { samples, seed }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ExpectationBackend::Exact { .. })
    }

    /// Scenario set over the first `dims` factors of `model`.
    pub fn scenarios(&self, model: &MarketModel, dims: usize) -> Result<ScenarioSet> {
        if dims > model.n_max() {
            return Err(Error::model("expect", format!("{dims} factors requested, model has {}", model.n_max())));
        }
        match *self {
            ExpectationBackend::Exact { cap } => ScenarioSet::enumerate(model, dims, cap),
            ExpectationBackend::MonteCarlo { samples, seed } => Ok(ScenarioSet::sample(model, dims, samples, seed)),
        }
    }
}

/// Weighted scenarios over the first `dims` factors: either every product
/// state with its probability, or equally weighted Monte Carlo draws.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    dims: usize,
    exact: bool,
    weights: Vec<f64>,
    /// Row-major, `dims` values per scenario.
    values: Vec<f64>,
}

impl ScenarioSet {
    /// All product states, factor index major (the first factor is the most
    /// significant digit), support index minor. Probabilities are multiplied
    /// left to right.
    pub fn enumerate(model: &MarketModel, dims: usize, cap: usize) -> Result<Self> {
        let count = model.state_count(dims);
        if count > cap as u128 {
            return Err(Error::StateCapExceeded { count, cap });
        }
        let count = count as usize;
        let factors = &model.factors()[..dims];
        let mut weights = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count * dims);
        let mut digits = vec![0usize; dims];
        for _ in 0..count {
            let mut w = 1.0;
            for (f, &d) in factors.iter().zip(&digits) {
                w *= f.probs()[d];
                values.push(f.support()[d]);
            }
            weights.push(w);
            for k in (0..dims).rev() {
                digits[k] += 1;
                if digits[k] < factors[k].len() {
                    break;
                }
                digits[k] = 0;
            }
        }
        Ok(Self { dims, exact: true, weights, values })
    }

    /// `samples` seeded draws of all factors, keeping the first `dims`.
    pub fn sample(model: &MarketModel, dims: usize, samples: usize, seed: u64) -> Self {
        let n_max = model.n_max();
        let factors = model.factors();
        let blocks: Vec<Vec<f64>> = (0..samples.div_ceil(MC_BLOCK))
            .into_par_iter()
            .map(|block| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(block as u64);
                let rows = MC_BLOCK.min(samples - block * MC_BLOCK);
                let mut out = Vec::with_capacity(rows * dims);
                for _ in 0..rows {
                    for (i, f) in factors.iter().enumerate().take(n_max) {
                        let u: f64 = rng.random();
                        if i < dims {
                            out.push(f.support()[f.index_for_uniform(u)]);
                        }
                    }
                }
                out
            })
            .collect();
        let values = blocks.concat();
        Self { dims, exact: false, weights: vec![1.0 / samples as f64; samples], values }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, s: usize) -> f64 {
        self.weights[s]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.dims..(s + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(|s| self.row(s))
    }

    /// `E f`, reduced deterministically.
    pub fn expect<F>(&self, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        par_sum(self.len(), |s| self.weights[s] * f(self.row(s)))
    }

    /// Expectation and its standard error. The standard error is zero for
    /// exact enumeration.
    pub fn expect_with_stderr<F>(&self, f: F) -> (f64, f64)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let vals: Vec<f64> = (0..self.len()).into_par_iter().map(|s| f(self.row(s))).collect();
        let mean = self.weights.iter().zip(&vals).map(|(w, v)| w * v).collect::<NeumaierSum>().value();
        if self.exact {
            return (mean, 0.0);
        }
        let n = vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).collect::<NeumaierSum>().value() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

/// `E f` over the first `dims` factors using `backend`.
pub fn expect<F>(model: &MarketModel, backend: &ExpectationBackend, dims: usize, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Ok(backend.scenarios(model, dims)?.expect(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{DriftVector, FactorDistribution};

    fn model() -> MarketModel {
        MarketModel::new(
            vec![
                FactorDistribution::rademacher(),
                FactorDistribution::new(vec![-2.0, 0.5], vec![0.2, 0.8]).unwrap(),
                FactorDistribution::new(vec![-2.0, 0.0, 2.0], vec![0.125, 0.75, 0.125]).unwrap(),
            ],
            DriftVector::new(vec![0.1, 0.2, -0.1], 0.0).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn enumeration_order_is_factor_major() {
        let s = ScenarioSet::enumerate(&model(), 2, 100).unwrap();
        let rows: Vec<&[f64]> = s.rows().collect();
        assert_eq!(rows, vec![&[-1.0, -2.0][..], &[-1.0, 0.5], &[1.0, -2.0], &[1.0, 0.5]]);
        assert_eq!(s.weights(), &[0.5 * 0.2, 0.5 * 0.8, 0.5 * 0.2, 0.5 * 0.8]);
    }

    #[test]
    fn constant_and_mean_examples() {
        let m = model();
        let b = ExpectationBackend::exact();
        assert!((expect(&m, &b, 3, |_| 3.5).unwrap() - 3.5).abs() < 1e-15);
        for i in 0..3 {
            assert!(expect(&m, &b, 3, |e| e[i]).unwrap().abs() < 1e-10);
        }
        let r = MarketModel::iid(FactorDistribution::rademacher(), vec![0.0, 0.0]).unwrap();
        assert_eq!(expect(&r, &b, 2, |e| e[0] * e[1]).unwrap(), 0.0);
    }

    #[test]
    fn cap_is_enforced() {
        let err = ExpectationBackend::Exact { cap: 11 }.scenarios(&model(), 3).unwrap_err();
        assert!(matches!(err, Error::StateCapExceeded { count: 12, cap: 11 }));
        assert!(err.to_string().contains("monte_carlo"));
    }

    #[test]
    fn monte_carlo_prefix_property_and_thread_independence() {
        let m = model();
        let s2 = ScenarioSet::sample(&m, 2, 10_000, 7);
        let s3 = ScenarioSet::sample(&m, 3, 10_000, 7);
        for k in [0, 4095, 4096, 9999] {
            assert_eq!(s2.row(k), &s3.row(k)[..2]);
        }
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| ScenarioSet::sample(&m, 3, 10_000, 7));
        assert_eq!(one.values, s3.values);
        let (mean, se) = s3.expect_with_stderr(|e| e[2]);
        assert!(mean.abs() < 4.0 * se);
    }
}
