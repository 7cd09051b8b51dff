//! Report artifacts: `report.json`, `convergence.csv`, `prices.csv`.
//!
//! The CSVs are always rendered from the stored shape of the report, so
//! `run` and `report` produce the same bytes.

use std::path::Path;

use bigmarket::optimizer::ConvergenceReport;
use bigmarket::pricing::{PriceConvergence, PriceResult};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const REPORT_FILE: &str = "report.json";
pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const PRICES_FILE: &str = "prices.csv";

#[derive(Debug, Clone, Deserialize)]
pub struct StoredConvergence {
    pub n_grid: Vec<usize>,
    pub u_seq: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub h_norms: Vec<f64>,
    pub cesaro_dist: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StoredPrice {
    pub n: usize,
    pub p: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StoredPrices {
    pub results: Vec<StoredPrice>,
    pub reference: StoredPrice,
}

impl From<&ConvergenceReport> for StoredConvergence {
    fn from(c: &ConvergenceReport) -> Self {
        Self {
            n_grid: c.n_grid.clone(),
            u_seq: c.u_seq.clone(),
            grad_norms: c.grad_norms.clone(),
            h_norms: c.h_norms.clone(),
            cesaro_dist: c.cesaro_dist.clone(),
        }
    }
}

impl From<&PriceResult> for StoredPrice {
    fn from(r: &PriceResult) -> Self {
        Self { n: r.n, p: r.p, residual: r.residual, iterations: r.iterations }
    }
}

impl From<&PriceConvergence> for StoredPrices {
    fn from(p: &PriceConvergence) -> Self {
        Self { results: p.results.iter().map(Into::into).collect(), reference: (&p.reference).into() }
    }
}

/// The parts of `report.json` the CSVs are rendered from.
#[derive(Debug, Clone, Deserialize)]
pub struct StoredReport {
    pub convergence: StoredConvergence,
    pub prices: StoredPrices,
}

#[derive(Serialize)]
struct ConvergenceRow {
    n: usize,
    u_n: f64,
    grad_norm: f64,
    h_norm: f64,
    cesaro_dist: f64,
}

#[derive(Serialize)]
struct PriceRow {
    n: String,
    p_n: f64,
    residual: f64,
    iterations: usize,
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Solver(format!("cli::report: csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Solver(format!("cli::report: csv: {e}")))
}

pub fn convergence_csv(c: &StoredConvergence) -> Result<Vec<u8>, CliError> {
    let len = c.n_grid.len();
    if [c.u_seq.len(), c.grad_norms.len(), c.h_norms.len(), c.cesaro_dist.len()].iter().any(|&l| l != len) {
        return Err(CliError::input("cli::report: convergence sequences have different lengths"));
    }
    csv_bytes((0..len).map(|k| ConvergenceRow {
        n: c.n_grid[k],
        u_n: c.u_seq[k],
        grad_norm: c.grad_norms[k],
        h_norm: c.h_norms[k],
        cesaro_dist: c.cesaro_dist[k],
    }))
}

pub fn prices_csv(p: &StoredPrices) -> Result<Vec<u8>, CliError> {
    let row = |r: &StoredPrice, n: String| PriceRow { n, p_n: r.p, residual: r.residual, iterations: r.iterations };
    csv_bytes(
        p.results.iter().map(|r| row(r, r.n.to_string())).chain(std::iter::once(row(&p.reference, "reference".into()))),
    )
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { op: "create_dir", source })?;
    }
    std::fs::write(path, bytes).map_err(|source| CliError::Io { op: "write", source })
}

/// Writes the three artifacts for a serializable report.
pub fn write_all<R: Serialize>(report: &R, dir: &Path) -> Result<StoredReport, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Solver(format!("cli::report: {e}")))?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Solver(format!("cli::report: {e}")))?;
    text.push('\n');
    write(&dir.join(REPORT_FILE), text.as_bytes())?;
    let stored: StoredReport =
        serde_json::from_value(value).map_err(|e| CliError::Solver(format!("cli::report: {e}")))?;
    render(&stored, dir)?;
    Ok(stored)
}

/// Re-renders the CSVs from `dir/report.json`.
pub fn rerender(dir: &Path) -> Result<StoredReport, CliError> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::input(format!("cli::report: cannot read {}: {e}", path.display())))?;
    let stored: StoredReport =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("cli::report: {}: {e}", path.display())))?;
    render(&stored, dir)?;
    Ok(stored)
}

fn render(stored: &StoredReport, dir: &Path) -> Result<(), CliError> {
    write_convergence(&stored.convergence, dir)?;
    write_prices(&stored.prices, dir)
}

pub fn write_convergence(c: &StoredConvergence, dir: &Path) -> Result<(), CliError> {
    write(&dir.join(CONVERGENCE_FILE), &convergence_csv(c)?)
}

pub fn write_prices(p: &StoredPrices, dir: &Path) -> Result<(), CliError> {
    write(&dir.join(PRICES_FILE), &prices_csv(p)?)
}
