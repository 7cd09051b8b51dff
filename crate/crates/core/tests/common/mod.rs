#![allow(dead_code)]

use std::path::Path;

use bigmarket::market::{FactorDistribution, MarketModel};

pub fn shipped(name: &str) -> MarketModel {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.json"));
    bigmarket::io::load_model(&path).unwrap()
}

pub const SHIPPED: [&str; 3] = ["rademacher_mixture6", "skewed3", "ten_factor"];

pub fn rademacher(b: Vec<f64>) -> MarketModel {
    MarketModel::iid(FactorDistribution::rademacher(), b).unwrap()
}

pub mod oracle;
