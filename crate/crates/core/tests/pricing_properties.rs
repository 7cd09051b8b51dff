mod common;

use bigmarket::market::ExpectationBackend;
use bigmarket::pricing::{price_convergence, reservation_price, PriceOptions};
use bigmarket::utility::{Claim, Utility};
use common::oracle::{atoms, grid_max_2d, objective};
use common::shipped;

fn exact() -> ExpectationBackend {
    ExpectationBackend::exact()
}

fn price(name: &str, n: usize, x: f64, claim: &Claim) -> f64 {
    let m = shipped(name);
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let r = reservation_price(&m, &u, &exact(), n, x, claim, 100.0, &PriceOptions::default()).unwrap();
    assert!(r.residual_ok, "{r:?}");
    r.p
}

#[test]
fn constant_claims_price_at_face_value() {
    for c in [0.0, 0.3, 1.0, 4.5] {
        let p = price("skewed3", 3, 0.2, &Claim::constant(c));
        assert!((p - c).abs() < 1e-7, "{c}: {p}");
    }
}

#[test]
fn replicable_claims_price_at_replication_cost() {
    let m = shipped("skewed3");
    let claim = Claim::affine(&m, 2.0, vec![0.3, -0.2]).unwrap();
    let p = price("skewed3", 3, 0.0, &claim);
    assert!((p - 2.0).abs() < 1e-6, "{p}");
}

#[test]
fn prices_respect_payoff_order_and_bounds() {
    let strikes = [-0.5, 0.0, 0.5, 1.0];
    let prices: Vec<f64> =
        strikes.iter().map(|&k| price("rademacher_mixture6", 3, 0.5, &Claim::call_on_factor(2, k))).collect();
    assert!(prices.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{prices:?}");
    let m = shipped("rademacher_mixture6");
    for (&k, &p) in strikes.iter().zip(&prices) {
        let sup = (m.factor(1).max() - k).max(0.0);
        assert!(p >= -1e-9 && p <= sup + 1e-9, "strike {k}: {p} outside [0, {sup}]");
    }
}

#[test]
fn prices_shift_with_the_claim() {
    let claim = Claim::call_on_factor(1, 0.2);
    let base = price("skewed3", 2, 0.3, &claim);
    for c in [0.5, 2.0] {
        let p = price("skewed3", 2, 0.3, &claim.shifted(c));
        assert!((p - base - c).abs() < 1e-7, "{c}: {p} vs {base}");
    }
}

#[test]
fn price_gaps_shrink_on_three_factors() {
    let m = shipped("skewed3");
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let claim = Claim::call_on_factor(1, 0.0);
    let pc = price_convergence(&m, &u, &exact(), 0.2, &claim, &[1, 2], 100.0, 1.0, &PriceOptions::default()).unwrap();
    assert_eq!(pc.reference.n, 3);
    assert!(pc.gaps[0] >= pc.gaps[1] - 1e-6, "{:?}", pc.gaps);
}

/// Indifference price by bisection over grid-searched values, sharing only
/// the utility and factor tables with the library.
fn oracle_price(name: &str, x: f64, strike: f64) -> f64 {
    let m = shipped(name);
    let u = Utility::two_sided_power(0.5, 2.0).unwrap();
    let at = atoms(&m, 2);
    let value = |x: f64, g: &dyn Fn(&[f64]) -> f64| {
        grid_max_2d(|s, t| objective(&m, &at, |w| u.eval(w), g, x, &[s, t]), -20.0, 20.0, 1e-6).1
    };
    let target = value(x, &|_| 0.0);
    let call = move |e: &[f64]| (e[0] - strike).max(0.0);
    let (mut lo, mut hi) = (0.0, m.factor(0).max());
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if value(x + mid, &call) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn call_price_matches_brute_force_on_two_factors() {
    let p = price("skewed3", 2, 0.2, &Claim::call_on_factor(1, 0.1));
    let oracle = oracle_price("skewed3", 0.2, 0.1);
    assert!((p - oracle).abs() < 1e-5, "{p} vs {oracle}");
}
