//! Utility maximization and indifference pricing in large one-period
//! markets driven by countably many independent factors, approximated by
//! their first `n` sources.
//!
//! The stages mirror the modules:
//!
//! - [`market`]: factor laws, drift, loadings and exact or Monte Carlo
//!   expectations;
//! - [`arbitrage`]: certified no-arbitrage constants and martingale
//!   certificates;
//! - [`utility`]: normalized utilities, growth constants and claims;
//! - [`optimizer`]: the strategy bound, segment solves and convergence
//!   studies;
//! - [`pricing`]: reservation prices and their convergence.
//!
//! ```
//! use bigmarket::arbitrage::{na_constants, NaOptions};
//! use bigmarket::market::{ExpectationBackend, FactorDistribution, MarketModel};
//! use bigmarket::optimizer::{maximize_segment, strategy_bound, OptimizerOptions};
//! use bigmarket::utility::{Claim, Utility};
//!
//! let model = MarketModel::iid(FactorDistribution::rademacher(), vec![0.2, 0.1, 0.0]).unwrap();
//! let u = Utility::two_sided_power(0.5, 2.0).unwrap();
//! let na = na_constants(&model, &NaOptions::default()).unwrap();
//! let exact = ExpectationBackend::exact();
//! let claim = Claim::call_on_factor(1, 0.0);
//! let bound = strategy_bound(&model, &u, &na, &exact, 1.0, &claim).unwrap();
//! let best = maximize_segment(&model, &u, &exact, 3, 1.0, &claim, bound.m, None, &OptimizerOptions::default()).unwrap();
//! assert!(best.converged && best.h_star.norm() < bound.m);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arbitrage;
pub mod error;
pub mod io;
pub mod market;
pub mod numeric;
pub mod optimizer;
pub mod pricing;
pub mod utility;

pub use error::{Error, ErrorKind, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/market.md")]
    mod market {}
    #[doc = include_str!("../../../book/src/no-arbitrage.md")]
    mod no_arbitrage {}
    #[doc = include_str!("../../../book/src/utility.md")]
    mod utility {}
    #[doc = include_str!("../../../book/src/optimization.md")]
    mod optimization {}
    #[doc = include_str!("../../../book/src/pricing.md")]
    mod pricing {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
