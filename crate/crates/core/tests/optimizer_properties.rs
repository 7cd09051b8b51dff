mod common;

use bigmarket::arbitrage::{na_constants, NaOptions};
use bigmarket::market::{random_unit, DriftVector, ExpectationBackend, FactorDistribution, MarketModel, Strategy};
use bigmarket::optimizer::{
    convergence_run, maximize_segment, strategy_bound, ConvergenceOptions, OptimizerOptions, SegmentObjective,
};
use bigmarket::utility::{Claim, Utility};
use common::oracle::{atoms, grid_max_1d, grid_max_2d, objective};
use common::{rademacher, shipped};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact() -> ExpectationBackend {
    ExpectationBackend::exact()
}

#[test]
fn gradient_matches_central_differences() {
    let m = shipped("rademacher_mixture6");
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let claim = Claim::call_on_factor(2, 0.5);
    let obj = SegmentObjective::new(&m, &u, &exact(), 4, &claim).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..25 {
        let h: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = rng.random_range(-1.0..1.0);
        let (_, g) = obj.value_and_grad(x, &h);
        let fd: Vec<f64> = (0..4)
            .map(|i| {
                let eps = 1e-6 * (1.0 + h[i].abs());
                let mut p = h.clone();
                let mut q = h.clone();
                p[i] += eps;
                q[i] -= eps;
                (obj.value(x, &p) - obj.value(x, &q)) / (2.0 * eps)
            })
            .collect();
        let err: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
        assert!(err <= 1e-5 * scale, "{g:?} vs {fd:?}");
    }
}

#[test]
fn objective_matches_direct_summation() {
    let m = shipped("skewed3");
    let u = Utility::two_sided_power(0.3, 1.7).unwrap();
    let claim = Claim::basket_call(vec![0.5, 0.5], 0.1);
    let obj = SegmentObjective::new(&m, &u, &exact(), 3, &claim).unwrap();
    let at = atoms(&m, 3);
    let h = [0.4, -1.2, 0.9];
    let direct = objective(&m, &at, |v| u.eval(v), |e| claim.payoff(e), 0.3, &h);
    assert!((obj.value(0.3, &h) - direct).abs() < 1e-13);
}

#[test]
fn strategies_beyond_the_bound_lose_to_holding_nothing() {
    let m = shipped("rademacher_mixture6");
    let na = na_constants(&m, &NaOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (a, beta) in [(0.5, 2.0), (0.5, 1.5)] {
        let u = Utility::two_sided_power(a, beta).unwrap();
        let claim = Claim::call_on_factor(1, 0.0);
        let x = 0.5;
        let bound = strategy_bound(&m, &u, &na, &exact(), x, &claim).unwrap();
        let obj = SegmentObjective::new(&m, &u, &exact(), 6, &claim).unwrap();
        let f0 = obj.value(x, &[0.0; 6]);
        for delta in [0.01, 0.1, 1.0] {
            for _ in 0..20 {
                let h: Vec<f64> = random_unit(6, &mut rng).into_iter().map(|v| v * bound.m * (1.0 + delta)).collect();
                assert!(obj.value(x, &h) < f0, "beta {beta}, delta {delta}");
            }
        }
    }
}

#[test]
fn value_is_translation_invariant() {
    let m = shipped("skewed3");
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let claim = Claim::call_on_factor(1, 0.2);
    let opts = OptimizerOptions::default();
    let base = maximize_segment(&m, &u, &exact(), 3, 0.4, &claim, 100.0, None, &opts).unwrap();
    for c in [-0.7, 0.25, 3.0] {
        let r = maximize_segment(&m, &u, &exact(), 3, 0.4 + c, &claim.shifted(c), 100.0, None, &opts).unwrap();
        assert!((r.value - base.value).abs() < 1e-9, "c = {c}");
        assert!(r.h_star.distance(&base.h_star) < 1e-5, "c = {c}");
    }
}

#[test]
fn value_is_concave_and_increasing_in_wealth() {
    let m = shipped("skewed3");
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let claim = Claim::call_on_factor(2, 0.0);
    let opts = OptimizerOptions::default();
    let v = |x: f64| maximize_segment(&m, &u, &exact(), 3, x, &claim, 100.0, None, &opts).unwrap().value;
    let xs: Vec<f64> = (0..9).map(|k| -1.0 + 0.5 * k as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| v(x)).collect();
    for w in vals.windows(3) {
        assert!(w[1] >= 0.5 * (w[0] + w[2]) - 1e-9, "{vals:?}");
        assert!(w[1] > w[0] && w[2] > w[1]);
    }
}

#[test]
fn restarts_agree_on_the_maximizer() {
    let m = shipped("rademacher_mixture6");
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let claim = Claim::call_on_factor(2, 0.5);
    let obj = SegmentObjective::new(&m, &u, &exact(), 6, &claim).unwrap();
    let opts = OptimizerOptions::default();
    let base = obj.maximize(0.5, 50.0, None, &opts).unwrap();
    assert!(base.converged && !base.active_bound);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let start = Strategy::new((0..6).map(|_| rng.random_range(-20.0..20.0)).collect());
        let r = obj.maximize(0.5, 50.0, Some(&start), &opts).unwrap();
        assert!(r.h_star.distance(&base.h_star) < 1e-5);
        assert!((r.value - base.value).abs() < 1e-10);
    }
}

#[test]
fn nested_segments_improve_monotonically() {
    let m = shipped("rademacher_mixture6");
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let claim = Claim::call_on_factor(2, 0.5);
    let opts = ConvergenceOptions { strategy_tol: 0.5, ..Default::default() };
    let rep = convergence_run(&m, &u, &exact(), 0.5, &claim, &[1, 2, 3, 4, 5, 6], 100.0, &opts).unwrap();
    assert!(rep.monotone_ok, "{:?}", rep.u_seq);
    assert!(rep.u_seq.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    assert!((rep.u_ref - rep.u_seq[5]).abs() < 1e-12);
}

/// Two-point factors with drift strictly inside the support.
fn seeded_case(seed: u64, n: usize) -> (MarketModel, Utility, Claim, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let laws: Vec<FactorDistribution> =
        (0..n).map(|_| FactorDistribution::two_point(rng.random_range(0.3..0.7)).unwrap()).collect();
    let b: Vec<f64> = laws.iter().map(|f| rng.random_range(0.5 * f.min()..0.5 * f.max())).collect();
    let m = MarketModel::new(laws, DriftVector::new(b, 0.0).unwrap(), None).unwrap();
    let u = Utility::two_sided_power(rng.random_range(0.2..0.8), rng.random_range(1.5..3.0)).unwrap();
    let claim = Claim::call_on_factor(1, rng.random_range(-0.5..0.5));
    (m, u, claim, rng.random_range(-1.0..1.0))
}

#[test]
fn one_factor_solutions_match_grid_search() {
    for seed in 0..5 {
        let (m, u, claim, x) = seeded_case(seed, 1);
        let r = maximize_segment(&m, &u, &exact(), 1, x, &claim, 20.0, None, &OptimizerOptions::default()).unwrap();
        let at = atoms(&m, 1);
        let (h, v) =
            grid_max_1d(|t| objective(&m, &at, |w| u.eval(w), |e| claim.payoff(e), x, &[t]), -20.0, 20.0, 1e-7);
        assert!((r.h_star.get(0) - h).abs() < 1e-3, "seed {seed}: {} vs {h}", r.h_star.get(0));
        assert!((r.value - v).abs() < 1e-6, "seed {seed}");
    }
}

#[test]
fn two_factor_solutions_match_grid_search() {
    for seed in 10..13 {
        let (m, u, claim, x) = seeded_case(seed, 2);
        let r = maximize_segment(&m, &u, &exact(), 2, x, &claim, 20.0, None, &OptimizerOptions::default()).unwrap();
        let at = atoms(&m, 2);
        let (h, v) =
            grid_max_2d(|s, t| objective(&m, &at, |w| u.eval(w), |e| claim.payoff(e), x, &[s, t]), -20.0, 20.0, 1e-6);
        assert!(r.h_star.distance(&Strategy::new(h.to_vec())) < 1e-3, "seed {seed}");
        assert!((r.value - v).abs() < 1e-6, "seed {seed}");
    }
}

#[test]
fn martingale_market_holds_nothing() {
    let m = rademacher(vec![0.0; 3]);
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let r = maximize_segment(&m, &u, &exact(), 3, 0.2, &Claim::constant(0.0), 10.0, None, &OptimizerOptions::default())
        .unwrap();
    assert_eq!(r.h_star.norm(), 0.0);
}
