use std::collections::BTreeMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::market::{ExpectationBackend, MarketModel, ScenarioSet};
use crate::numeric::NeumaierSum;

/// Smallest admissible weight of a certificate.
pub const MIN_WEIGHT: f64 = 1e-9;

/// Strictly positive re-weighting of the segment's product states under
/// which every source `i ≤ n` has mean `b_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleCertificate {
    pub n: usize,
    #[serde(serialize_with = "sparse")]
    pub weights: Vec<f64>,
    /// `max_s w_s / P(s)`.
    pub max_density_ratio: f64,
    pub min_weight: f64,
    /// True when the physical measure itself already satisfies the moment
    /// conditions.
    pub physical: bool,
}

fn sparse<S: Serializer>(w: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let map: BTreeMap<usize, f64> = w.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, *v)).collect();
    map.serialize(s)
}

impl MartingaleCertificate {
    /// `E_Q f` over the same enumeration the certificate was built on.
    pub fn expect(&self, scen: &ScenarioSet, f: impl Fn(&[f64]) -> f64) -> f64 {
        scen.rows().zip(&self.weights).map(|(row, w)| w * f(row)).collect::<NeumaierSum>().value()
    }
}

/// Equivalent martingale measure for the first `n` sources.
///
/// When `P` itself has `E ε_i = b_i` it is returned directly. Otherwise the
/// weights solve the linear program
///
/// ```text
/// maximize t  s.t.  w_s = t + v_s,  v_s ≥ 0,  Σ w_s = 1,  Σ w_s ε_i(s) = b_i  (i ≤ n)
/// ```
///
/// whose optimum `t*` is the largest achievable minimum weight; the segment
/// admits an equivalent martingale measure iff `t* > 0`.
pub fn emm_segment(model: &MarketModel, n: usize, cap: usize) -> Result<MartingaleCertificate> {
    if n == 0 || n > model.n_max() {
        return Err(Error::model("emm_segment", format!("segment {n} outside 1..={}", model.n_max())));
    }
    let scen = ExpectationBackend::Exact { cap }.scenarios(model, n)?;
    let probs = scen.weights();
    let k = scen.len();

    let physical_gap = (0..n).map(|i| (scen.expect(|e| e[i]) - model.b(i)).abs()).fold(0.0, f64::max);
    if physical_gap <= 1e-10 {
        let min_weight = probs.iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(MartingaleCertificate {
            n,
            weights: probs.to_vec(),
            max_density_ratio: 1.0,
            min_weight,
            physical: true,
        });
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (0.0, 1.0 / k as f64));
    let v: Vec<_> = (0..k).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();

    let mut total = vec![(t, k as f64)];
    total.extend(v.iter().map(|&vs| (vs, 1.0)));
    lp.add_constraint(total.as_slice(), ComparisonOp::Eq, 1.0);
    for i in 0..n {
        let col_sum: f64 = scen.rows().map(|e| e[i]).sum();
        let mut row = vec![(t, col_sum)];
        row.extend(scen.rows().zip(&v).map(|(e, &vs)| (vs, e[i])));
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, model.b(i));
    }

    let infeasible = |reason: String| Error::EmmInfeasible { n, reason };
    let solution = lp
        .solve()
        .map_err(|e| infeasible(format!("linear program: {e}")))?
        .into_solution()
        .map_err(|_| infeasible("linear program interrupted".into()))?;
    let t_star = solution.var_value(t);
    if t_star < MIN_WEIGHT {
        return Err(infeasible(format!("largest achievable minimum weight is {t_star:.3e}")));
    }

    let mut weights: Vec<f64> = v.iter().map(|&vs| t_star + solution.var_value(vs).max(0.0)).collect();
    let sum = weights.iter().copied().collect::<NeumaierSum>().value();
    weights.iter_mut().for_each(|w| *w /= sum);

    for i in 0..n {
        let m = scen.rows().zip(&weights).map(|(e, w)| w * e[i]).collect::<NeumaierSum>().value();
        if (m - model.b(i)).abs() > 1e-8 {
            return Err(infeasible(format!("source {} has Q-mean {m}, expected {}", i + 1, model.b(i))));
        }
    }
    let min_weight = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let max_density_ratio = weights.iter().zip(probs).map(|(w, p)| w / p).fold(0.0, f64::max);
    Ok(MartingaleCertificate { n, weights, max_density_ratio, min_weight, physical: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::FactorDistribution;

    fn rademacher(b: Vec<f64>) -> MarketModel {
        MarketModel::iid(FactorDistribution::rademacher(), b).unwrap()
    }

    #[test]
    fn zero_drift_uses_physical_measure() {
        let c = emm_segment(&rademacher(vec![0.0, 0.0]), 2, 100).unwrap();
        assert!(c.physical);
        assert_eq!(c.max_density_ratio, 1.0);
        assert_eq!(c.weights, vec![0.25; 4]);
    }

    #[test]
    fn shifted_rademacher_two_by_two() {
        let c = emm_segment(&rademacher(vec![0.5]), 1, 100).unwrap();
        assert!((c.weights[0] - 0.25).abs() < 1e-12);
        assert!((c.weights[1] - 0.75).abs() < 1e-12);
        assert!((c.max_density_ratio - 1.5).abs() < 1e-12);
    }

    #[test]
    fn boundary_drift_is_infeasible() {
        let err = emm_segment(&rademacher(vec![1.0]), 1, 100).unwrap_err();
        assert!(matches!(err, Error::EmmInfeasible { n: 1, .. }));
        assert!(emm_segment(&rademacher(vec![1.5]), 1, 100).is_err());
    }

    #[test]
    fn certificate_centres_every_source() {
        let m = MarketModel::new(
            vec![
                FactorDistribution::new(vec![-2.0, 0.5], vec![0.2, 0.8]).unwrap(),
                FactorDistribution::new(vec![-2.0, 0.0, 2.0], vec![0.125, 0.75, 0.125]).unwrap(),
                FactorDistribution::rademacher(),
            ],
            crate::market::DriftVector::new(vec![0.3, -0.4, 0.2], 0.0).unwrap(),
            None,
        )
        .unwrap();
        let c = emm_segment(&m, 3, 100).unwrap();
        let scen = ExpectationBackend::exact().scenarios(&m, 3).unwrap();
        assert!(c.min_weight >= MIN_WEIGHT);
        assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let h = [0.7, -1.3, 2.1];
        let gain = c.expect(&scen, |e| (0..3).map(|i| h[i] * (e[i] - m.b(i))).sum());
        assert!(gain.abs() < 1e-8);
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(json["weights"].as_object().unwrap().len(), 12);
    }
}
