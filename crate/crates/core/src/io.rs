//! JSON model files. Reals are written as decimal strings so that files
//! round-trip bit-exactly; on input both strings and JSON numbers are
//! accepted.

use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market::{DriftVector, FactorDistribution, Loadings, MarketModel};

/// `f64` stored as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Real(v)),
            Raw::Text(t) => t
                .trim()
                .parse::<f64>()
                .map(Real)
                .map_err(|e| serde::de::Error::custom(format!("invalid real {t:?}: {e}"))),
        }
    }
}

fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

fn unwrap(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorFile {
    pub support: Vec<Real>,
    pub probs: Vec<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftFile {
    pub head: Vec<Real>,
    #[serde(default = "zero")]
    pub tail_norm_sq: Real,
}

fn zero() -> Real {
    Real(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingsFile {
    pub m: usize,
    pub bar_beta: Vec<Real>,
    pub beta: Vec<Vec<Real>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub factors: Vec<FactorFile>,
    pub drift: DriftFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loadings: Option<LoadingsFile>,
}

impl ModelFile {
    pub fn from_model(model: &MarketModel) -> Self {
        Self {
            name: None,
            factors: model
                .factors()
                .iter()
                .map(|f| FactorFile { support: reals(f.support()), probs: reals(f.probs()) })
                .collect(),
            drift: DriftFile { head: reals(model.drift().head()), tail_norm_sq: Real(model.drift().tail_norm_sq()) },
            loadings: model.loadings().map(|l| LoadingsFile {
                m: l.m(),
                bar_beta: reals(l.bar_beta()),
                beta: l.beta().iter().map(|r| reals(r)).collect(),
            }),
        }
    }

    pub fn to_model(&self) -> Result<MarketModel> {
        let factors = self
            .factors
            .iter()
            .map(|f| FactorDistribution::new(unwrap(&f.support), unwrap(&f.probs)))
            .collect::<Result<Vec<_>>>()?;
        let drift = DriftVector::new(unwrap(&self.drift.head), self.drift.tail_norm_sq.0)?;
        let loadings = match &self.loadings {
            None => None,
            Some(l) => Some(Loadings::new(l.m, unwrap(&l.bar_beta), l.beta.iter().map(|r| unwrap(r)).collect())?),
        };
        MarketModel::new(factors, drift, loadings)
    }
}

pub fn model_from_json(text: &str) -> Result<MarketModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::Format { op: "model_from_json", msg: e.to_string() })?;
    file.to_model()
}

pub fn model_to_json(model: &MarketModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model file serializes")
}

pub fn load_model(path: &Path) -> Result<MarketModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Format { op: "load_model", msg: format!("{}: {e}", path.display()) })?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = MarketModel::new(
            vec![FactorDistribution::new(vec![-2.0, 0.5], vec![0.2, 0.8]).unwrap(), FactorDistribution::rademacher()],
            DriftVector::new(vec![0.1, -1.0 / 3.0], 1e-3).unwrap(),
            None,
        )
        .unwrap();
        let text = model_to_json(&m);
        assert!(text.contains("\"0.1\""));
        assert_eq!(model_from_json(&text).unwrap(), m);
    }

    #[test]
    fn numbers_and_strings_both_parse() {
        let m =
            model_from_json(r#"{"factors":[{"support":[-1, "1"],"probs":["0.5", 0.5]}],"drift":{"head":["0.25"]}}"#)
                .unwrap();
        assert_eq!(m.b(0), 0.25);
        assert_eq!(m.drift().tail_norm_sq(), 0.0);
    }

    #[test]
    fn malformed_files_are_format_errors() {
        assert!(matches!(model_from_json("{"), Err(Error::Format { .. })));
        assert!(matches!(
            model_from_json(r#"{"factors":[{"support":["x"],"probs":["1"]}],"drift":{"head":[]}}"#),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            model_from_json(r#"{"factors":[{"support":[1],"probs":[1]}],"drift":{"head":[0]}}"#),
            Err(Error::InvalidModel { .. })
        ));
    }
}
