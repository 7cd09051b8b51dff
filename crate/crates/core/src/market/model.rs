use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::FactorDistribution;
use crate::numeric::{norm, NeumaierSum};

/// Risk premia `b_1..b_{n_max}` plus the declared squared norm of the
/// remainder `Σ_{i>n_max} b_i²`. The tail only enters norm bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftVector {
    head: Vec<f64>,
    tail_norm_sq: f64,
}

impl DriftVector {
    pub fn new(head: Vec<f64>, tail_norm_sq: f64) -> Result<Self> {
        if head.iter().any(|b| !b.is_finite()) {
            return Err(Error::model("drift", "non-finite drift entry"));
        }
        if !(tail_norm_sq >= 0.0 && tail_norm_sq.is_finite()) {
            return Err(Error::model("drift", format!("tail_norm_sq = {tail_norm_sq} must be finite and >= 0")));
        }
        Ok(Self { head, tail_norm_sq })
    }

    pub fn zeros(n: usize) -> Self {
        Self { head: vec![0.0; n], tail_norm_sq: 0.0 }
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn tail_norm_sq(&self) -> f64 {
        self.tail_norm_sq
    }

    /// `‖b‖²_{ℓ₂}` including the declared tail.
    pub fn norm_sq(&self) -> f64 {
        self.tail_norm_sq_after(0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `Σ_{i>n} b_i²`, with the declared tail beyond the truncation.
    pub fn tail_norm_sq_after(&self, n: usize) -> f64 {
        let mut s: NeumaierSum = self.head.iter().skip(n).map(|b| b * b).collect();
        s.add(self.tail_norm_sq);
        s.value()
    }
}

/// Asset loadings: `m` systematic sources, idiosyncratic scales `β̄_i` and
/// systematic exposures `β_i^j` for `i > m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Loadings {
    m: usize,
    bar_beta: Vec<f64>,
    /// Row `i - m - 1` holds `β_i^1..β_i^m` for asset `i > m` (1-based).
    beta: Vec<Vec<f64>>,
}

impl Loadings {
    pub fn new(m: usize, bar_beta: Vec<f64>, beta: Vec<Vec<f64>>) -> Result<Self> {
        const OP: &str = "loadings";
        if m == 0 || m > bar_beta.len() {
            return Err(Error::model(OP, format!("m = {m} must be in 1..={}", bar_beta.len())));
        }
        if beta.len() != bar_beta.len() - m {
            return Err(Error::model(
                OP,
                format!("expected {} beta rows (assets i > m), got {}", bar_beta.len() - m, beta.len()),
            ));
        }
        if let Some(row) = beta.iter().find(|r| r.len() != m) {
            return Err(Error::model(OP, format!("beta row of length {} but m = {m}", row.len())));
        }
        if bar_beta.iter().chain(beta.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::model(OP, "non-finite loading"));
        }
        Ok(Self { m, bar_beta, beta })
    }

    /// `β̄ ≡ 1`, `β ≡ 0`: assets coincide with sources.
    pub fn identity(n: usize, m: usize) -> Result<Self> {
        Self::new(m, vec![1.0; n], vec![vec![0.0; m]; n.saturating_sub(m)])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn bar_beta(&self) -> &[f64] {
        &self.bar_beta
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }
}

/// Strategy in source coordinates, finitely supported (zero beyond
/// `coords.len()`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Strategy(Vec<f64>);

impl Strategy {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Unit vector `e_i` (0-based `i`).
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0.get(i).copied().unwrap_or(0.0)
    }

    /// One past the last nonzero coordinate.
    pub fn support_len(&self) -> usize {
        self.0.iter().rposition(|&h| h != 0.0).map_or(0, |i| i + 1)
    }

    /// Zero-padded or truncated copy with exactly `n` coordinates.
    pub fn resized(&self, n: usize) -> Self {
        Self((0..n).map(|i| self.get(i)).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|h| h * c).collect())
    }

    /// `‖self − other‖` with zero padding.
    pub fn distance(&self, other: &Strategy) -> f64 {
        let n = self.0.len().max(other.0.len());
        (0..n).map(|i| (self.get(i) - other.get(i)).powi(2)).sum::<f64>().sqrt()
    }
}

impl Deref for Strategy {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Strategy {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Truncated large market: `n_max` independent sources, drift and optional
/// asset loadings.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    factors: Vec<FactorDistribution>,
    drift: DriftVector,
    loadings: Option<Loadings>,
}

impl MarketModel {
    pub fn new(factors: Vec<FactorDistribution>, drift: DriftVector, loadings: Option<Loadings>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::model("model", "at least one factor required"));
        }
        if drift.head().len() != factors.len() {
            return Err(Error::model(
                "model",
                format!("drift head has {} entries for {} factors", drift.head().len(), factors.len()),
            ));
        }
        if let Some(l) = &loadings {
            if l.bar_beta().len() != factors.len() {
                return Err(Error::model(
                    "model",
                    format!("{} loadings for {} factors", l.bar_beta().len(), factors.len()),
                ));
            }
        }
        Ok(Self { factors, drift, loadings })
    }

    /// `n` i.i.d. copies of `law` with the given drift head and zero tail.
    pub fn iid(law: FactorDistribution, drift: Vec<f64>) -> Result<Self> {
        let n = drift.len();
        Self::new(vec![law; n], DriftVector::new(drift, 0.0)?, None)
    }

    pub fn n_max(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[FactorDistribution] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &FactorDistribution {
        &self.factors[i]
    }

    pub fn drift(&self) -> &DriftVector {
        &self.drift
    }

    pub fn b(&self, i: usize) -> f64 {
        self.drift.head()[i]
    }

    pub fn loadings(&self) -> Option<&Loadings> {
        self.loadings.as_ref()
    }

    /// Same factors and loadings with `b ≡ 0` (tail included).
    pub fn without_drift(&self) -> Self {
        Self { drift: DriftVector::zeros(self.n_max()), ..self.clone() }
    }

    /// Model restricted to the first `n` sources; the dropped drift entries
    /// move into the declared tail.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.n_max() {
            return Err(Error::model("model", format!("segment {n} outside 1..={}", self.n_max())));
        }
        let drift = DriftVector::new(self.drift.head()[..n].to_vec(), self.drift.tail_norm_sq_after(n))?;
        Ok(Self { factors: self.factors[..n].to_vec(), drift, loadings: None })
    }

    /// Number of product states over the first `dims` factors.
    pub fn state_count(&self, dims: usize) -> u128 {
        self.factors[..dims].iter().map(|f| f.len() as u128).product()
    }

    /// `V^{x,h} = x + Σ_i h_i (ε_i − b_i)` for one scenario.
    pub fn wealth(&self, x: f64, h: &Strategy, scenario: &[f64]) -> Result<f64> {
        let need = h.support_len();
        if scenario.len() < need {
            return Err(Error::MissingFactor { got: scenario.len(), need });
        }
        if need > self.n_max() {
            return Err(Error::model("wealth", format!("strategy uses {need} sources, model has {}", self.n_max())));
        }
        let mut s = NeumaierSum::new();
        s.add(x);
        for i in 0..need {
            s.add(h[i] * (scenario[i] - self.b(i)));
        }
        Ok(s.value())
    }

    /// Asset returns `R_1..R_{n_max}` for one full scenario.
    pub fn returns_from_factors(&self, scenario: &[f64]) -> Result<Vec<f64>> {
        let l = self.loadings.as_ref().ok_or(Error::MissingLoadings { op: "returns_from_factors" })?;
        let n = self.n_max();
        if scenario.len() < n {
            return Err(Error::MissingFactor { got: scenario.len(), need: n });
        }
        let m = l.m();
        let centered: Vec<f64> = (0..n).map(|i| scenario[i] - self.b(i)).collect();
        Ok((0..n)
            .map(|i| {
                let own = l.bar_beta()[i] * centered[i];
                if i < m {
                    own
                } else {
                    l.beta()[i - m].iter().zip(&centered[..m]).map(|(bj, c)| bj * c).sum::<f64>() + own
                }
            })
            .collect())
    }

    /// Source-space strategy `h` with `Σ a_i R_i = ⟨h, ε − b⟩` identically.
    pub fn asset_to_source(&self, assets: &[f64]) -> Result<Strategy> {
        let l = self.loadings.as_ref().ok_or(Error::MissingLoadings { op: "asset_to_source" })?;
        self.check_invertible(l, assets.len())?;
        let m = l.m();
        let mut h: Vec<f64> = assets.iter().zip(l.bar_beta()).map(|(a, bb)| a * bb).collect();
        for (i, &a) in assets.iter().enumerate().skip(m) {
            // i > m implies h already covers the m systematic coordinates
            for (j, bj) in l.beta()[i - m].iter().enumerate() {
                h[j] += a * bj;
            }
        }
        Ok(Strategy::new(h))
    }

    /// Inverse of [`asset_to_source`](Self::asset_to_source): divide by `β̄`
    /// and back-substitute the systematic block.
    pub fn source_to_asset(&self, h: &Strategy) -> Result<Vec<f64>> {
        let l = self.loadings.as_ref().ok_or(Error::MissingLoadings { op: "source_to_asset" })?;
        let n = h.len();
        self.check_invertible(l, n)?;
        let m = l.m();
        let mut a = vec![0.0; n];
        for i in m..n {
            a[i] = h[i] / l.bar_beta()[i];
        }
        for j in 0..m.min(n) {
            let systematic: f64 = (m..n).map(|i| a[i] * l.beta()[i - m][j]).sum();
            a[j] = (h[j] - systematic) / l.bar_beta()[j];
        }
        Ok(a)
    }

    fn check_invertible(&self, l: &Loadings, len: usize) -> Result<()> {
        if len > self.n_max() {
            return Err(Error::model("asset_to_source", format!("{len} coordinates, model has {}", self.n_max())));
        }
        match l.bar_beta()[..len].iter().position(|&b| b == 0.0) {
            Some(index) => Err(Error::SingularLoadings { index }),
            None => Ok(()),
        }
    }
}
