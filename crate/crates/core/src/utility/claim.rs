use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel};

type Payoff = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Payoff families. Factor indices are 1-based.
#[derive(Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClaimKind {
    Constant {
        value: f64,
    },
    CallOnFactor {
        factor: usize,
        strike: f64,
    },
    BasketCall {
        weights: Vec<f64>,
        strike: f64,
    },
    /// `c + ⟨g, ε − b⟩`, replicable with the strategy `g`.
    Affine {
        c: f64,
        g: Vec<f64>,
        drift: Vec<f64>,
    },
    /// One value per product state of the first `supports.len()` factors, in
    /// enumeration order (last factor fastest).
    Table {
        supports: Vec<Vec<f64>>,
        values: Vec<f64>,
    },
    Custom {
        depends_on: usize,
        #[serde(skip)]
        f: Payoff,
    },
}

impl fmt::Debug for ClaimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant { value } => write!(f, "Constant({value})"),
            Self::CallOnFactor { factor, strike } => write!(f, "CallOnFactor({factor}, {strike})"),
            Self::BasketCall { weights, strike } => write!(f, "BasketCall({weights:?}, {strike})"),
            Self::Affine { c, g, .. } => write!(f, "Affine({c}, {g:?})"),
            Self::Table { values, .. } => write!(f, "Table({} states)", values.len()),
            Self::Custom { depends_on, .. } => write!(f, "Custom(depends_on = {depends_on})"),
        }
    }
}

/// Contingent claim `G` paid at the horizon, plus a constant add-on.
#[derive(Debug, Clone)]
pub struct Claim {
    kind: ClaimKind,
    add: f64,
    description: String,
}

impl Serialize for Claim {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct View<'a> {
            #[serde(flatten)]
            kind: &'a ClaimKind,
            add: f64,
            depends_on: usize,
            description: &'a str,
        }
        View { kind: &self.kind, add: self.add, depends_on: self.depends_on(), description: &self.description }
            .serialize(s)
    }
}

impl Claim {
    fn from_kind(kind: ClaimKind, description: String) -> Self {
        Self { kind, add: 0.0, description }
    }

    pub fn constant(value: f64) -> Self {
        Self::from_kind(ClaimKind::Constant { value }, format!("G = {value}"))
    }

    /// `(ε_factor − strike)⁺`.
    pub fn call_on_factor(factor: usize, strike: f64) -> Self {
        Self::from_kind(ClaimKind::CallOnFactor { factor, strike }, format!("G = (eps_{factor} - {strike})+"))
    }

    /// `(Σ w_i ε_i − strike)⁺`.
    pub fn basket_call(weights: Vec<f64>, strike: f64) -> Self {
        let d = format!("G = (<w, eps> - {strike})+ over {} factors", weights.len());
        Self::from_kind(ClaimKind::BasketCall { weights, strike }, d)
    }

    /// `c + ⟨g, ε − b⟩` with `b` taken from `model`.
    pub fn affine(model: &MarketModel, c: f64, g: Vec<f64>) -> Result<Self> {
        if g.len() > model.n_max() {
            return Err(Error::InvalidClaim { msg: format!("g has {} entries, model has {}", g.len(), model.n_max()) });
        }
        let drift = (0..g.len()).map(|i| model.b(i)).collect();
        let d = format!("G = {c} + <g, eps - b> over {} factors", g.len());
        Ok(Self::from_kind(ClaimKind::Affine { c, g, drift }, d))
    }

    /// Table payoff over the first `k` factors of `model`.
    pub fn table(model: &MarketModel, k: usize, values: Vec<f64>) -> Result<Self> {
        if k == 0 || k > model.n_max() {
            return Err(Error::InvalidClaim {
                msg: format!("table depends on {k} factors, model has {}", model.n_max()),
            });
        }
        let count = model.state_count(k);
        if count != values.len() as u128 {
            return Err(Error::InvalidClaim { msg: format!("table has {} values, expected {count}", values.len()) });
        }
        let supports = model.factors()[..k].iter().map(|f| f.support().to_vec()).collect();
        Ok(Self::from_kind(ClaimKind::Table { supports, values }, format!("G tabulated over {k} factors")))
    }

    pub fn custom(
        depends_on: usize,
        description: impl Into<String>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::from_kind(ClaimKind::Custom { depends_on, f: Arc::new(f) }, description.into())
    }

    /// `G + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { kind: self.kind.clone(), add: self.add + c, description: format!("{} + {c}", self.description) }
    }

    pub fn kind(&self) -> &ClaimKind {
        &self.kind
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Number of leading factors the payoff reads.
    pub fn depends_on(&self) -> usize {
        match &self.kind {
            ClaimKind::Constant { .. } => 0,
            ClaimKind::CallOnFactor { factor, .. } => *factor,
            ClaimKind::BasketCall { weights, .. } => weights.len(),
            ClaimKind::Affine { g, .. } => g.len(),
            ClaimKind::Table { supports, .. } => supports.len(),
            ClaimKind::Custom { depends_on, .. } => *depends_on,
        }
    }

    /// `G(ε)`; `scenario` must cover at least [`Claim::depends_on`] factors.
    pub fn payoff(&self, e: &[f64]) -> f64 {
        let base = match &self.kind {
            ClaimKind::Constant { value } => *value,
            ClaimKind::CallOnFactor { factor, strike } => (e[factor - 1] - strike).max(0.0),
            ClaimKind::BasketCall { weights, strike } => {
                (weights.iter().zip(e).map(|(w, x)| w * x).sum::<f64>() - strike).max(0.0)
            }
            ClaimKind::Affine { c, g, drift } => {
                c + g.iter().zip(drift).zip(e).map(|((g, b), x)| g * (x - b)).sum::<f64>()
            }
            ClaimKind::Table { supports, values } => {
                let mut idx = 0;
                for (s, x) in supports.iter().zip(e) {
                    match s.iter().position(|v| v == x) {
                        Some(d) => idx = idx * s.len() + d,
                        None => return f64::NAN,
                    }
                }
                values[idx]
            }
            ClaimKind::Custom { f, .. } => f(e),
        };
        base + self.add
    }

    /// Checks `G ≥ 0` and finiteness on every enumerated state of the
    /// factors the claim reads, and returns `sup G`.
    pub fn check(&self, model: &MarketModel, cap: usize) -> Result<f64> {
        let k = self.depends_on();
        if k > model.n_max() {
            return Err(Error::InvalidClaim { msg: format!("claim reads {k} factors, model has {}", model.n_max()) });
        }
        let scen = ExpectationBackend::Exact { cap }.scenarios(model, k)?;
        let mut sup = f64::NEG_INFINITY;
        for (s, e) in scen.rows().enumerate() {
            let g = self.payoff(e);
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidClaim { msg: format!("payoff {g} in state {s} ({})", self.description) });
            }
            sup = sup.max(g);
        }
        Ok(sup)
    }
}
