//! Quantitative no-arbitrage constants.
//!
//! For a strategy `h` on the first `n` sources let `L = ⟨h, ε − b⟩` and
//!
//! ```text
//! q(h) = sup { α ∈ (0, 1) : P(L < −α) > α }.
//! ```
//!
//! `L` is discrete, so `α ↦ P(L < −α)` is a non-increasing step function
//! whose jumps sit at the loss magnitudes `a = −L > 0`. On each interval
//! `[t_j, t_{j+1})` between consecutive magnitudes it equals the mass `c_j`
//! of atoms with magnitude at least `t_{j+1}`, and the admissible `α` there
//! are those below both `c_j` and `t_{j+1}`. Scanning the sorted atoms gives
//! `q(h)` exactly.
//!
//! The segment constant is `(1 − safety) · inf_{‖h‖=1} q(h)`. The infimum is
//! approximated by structured directions, a low-discrepancy sphere grid and
//! multi-start projected pattern search.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{random_unit, ExpectationBackend, MarketModel, ScenarioSet, Strategy, DEFAULT_STATE_CAP};
use crate::numeric::{halton, norm, primes, NeumaierSum};

/// Search budget for [`na_constant_segment`].
#[derive(Debug, Clone, PartialEq)]
pub struct NaOptions {
    /// Relative margin taken off the approximate infimum.
    pub safety: f64,
    /// Number of multi-start local searches.
    pub starts: usize,
    /// Size of the low-discrepancy sphere grid.
    pub grid_points: usize,
    /// The sphere grid is only used up to this segment size.
    pub grid_max_dim: usize,
    /// `q` evaluations allowed per local search.
    pub evals_per_start: usize,
    pub seed: u64,
    /// Enumeration cap for the product states of the segment.
    pub cap: usize,
}

impl Default for NaOptions {
    fn default() -> Self {
        Self {
            safety: 1e-3,
            starts: 64,
            grid_points: 4096,
            grid_max_dim: 6,
            evals_per_start: 400,
            seed: 0,
            cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Certified constant for one segment, with the direction that attained the
/// smallest `q` found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentConstant {
    pub n: usize,
    pub alpha: f64,
    pub q_min: f64,
    pub minimizer: Vec<f64>,
}

/// Per-segment constants, the large-market constant and the derived split
/// used by the strategy bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NAConstants {
    pub per_segment: BTreeMap<usize, f64>,
    pub alpha_large: f64,
    pub n_alpha: usize,
    pub alpha_bar: f64,
}

impl NAConstants {
    pub fn alpha(&self, n: usize) -> Option<f64> {
        self.per_segment.get(&n).copied()
    }

    /// `α_{n_α}`.
    pub fn alpha_n_alpha(&self) -> f64 {
        self.per_segment[&self.n_alpha]
    }
}

/// Outcome of [`na_constant_large`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeConstant {
    pub alpha_large: f64,
    pub n_alpha: usize,
    pub alpha_bar: f64,
}

/// Centered returns `ε_i − b_i` of the first `n` sources over all product
/// states.
#[derive(Debug, Clone)]
pub struct LossProfile {
    n: usize,
    weights: Vec<f64>,
    centered: Vec<f64>,
}

impl LossProfile {
    pub fn new(model: &MarketModel, n: usize, cap: usize) -> Result<Self> {
        let scen = ExpectationBackend::Exact { cap }.scenarios(model, n)?;
        Ok(Self::from_scenarios(model, &scen, n))
    }

    pub fn from_scenarios(model: &MarketModel, scen: &ScenarioSet, n: usize) -> Self {
        let mut centered = Vec::with_capacity(scen.len() * n);
        for row in scen.rows() {
            centered.extend((0..n).map(|i| row[i] - model.b(i)));
        }
        Self { n, weights: scen.weights().to_vec(), centered }
    }

    pub fn dims(&self) -> usize {
        self.n
    }

    fn losses(&self, h: &[f64]) -> Vec<(f64, f64)> {
        self.weights
            .iter()
            .zip(self.centered.chunks(self.n))
            .map(|(&w, c)| (c.iter().zip(h).map(|(c, h)| c * h).sum::<f64>(), w))
            .collect()
    }

    /// `q(h)` for a direction `h` (not necessarily unit; scale matters).
    pub fn q(&self, h: &[f64]) -> f64 {
        q_from_atoms(self.losses(h))
    }

    /// `P(⟨h, ε−b⟩ < −α)`.
    pub fn prob_loss_exceeds(&self, h: &[f64], alpha: f64) -> f64 {
        self.losses(h).into_iter().filter(|(l, _)| *l < -alpha).map(|(_, w)| w).collect::<NeumaierSum>().value()
    }
}

/// `sup{α ∈ (0,1) : P(L < −α) > α}` for a discrete `L` given as
/// `(value, probability)` atoms. Zero when no such `α` exists.
pub fn q_from_atoms(atoms: Vec<(f64, f64)>) -> f64 {
    let scale = atoms.iter().map(|(l, _)| l.abs()).fold(1.0, f64::max);
    let tie = 1e-12 * scale;
    let mut losses: Vec<(f64, f64)> = atoms.into_iter().filter(|(l, _)| *l < -tie).map(|(l, w)| (-l, w)).collect();
    losses.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut remaining: NeumaierSum = losses.iter().map(|(_, w)| *w).collect();
    let mut left = 0.0;
    let mut best: f64 = 0.0;
    let mut k = 0;
    while k < losses.len() {
        let a = losses[k].0;
        let c = remaining.value();
        // on [left, a) the probability of losing more than α is c
        if c <= left {
            return best;
        }
        best = best.max(c.min(a).min(1.0));
        while k < losses.len() && losses[k].0 - a <= tie {
            remaining.add(-losses[k].1);
            k += 1;
        }
        left = a;
    }
    let c = remaining.value();
    if c > left {
        best = best.max(c.min(1.0));
    }
    best
}

fn normalize(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let r = norm(&v);
    if r < 1e-14 {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= r);
    Some(v)
}

/// `±e_i` and `(±e_i ± e_j)/√2`.
fn structured_directions(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[i] = s;
            out.push(v);
        }
    }
    if n <= 16 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i + 1..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut v = vec![0.0; n];
                    v[i] = si * r;
                    v[j] = sj * r;
                    out.push(v);
                }
            }
        }
    }
    out
}

/// Halton points pushed through Box–Muller onto the sphere.
fn sphere_grid(n: usize, points: usize) -> Vec<Vec<f64>> {
    let bases = primes(2 * n);
    (1..=points as u64)
        .filter_map(|k| {
            let v = (0..n)
                .map(|i| {
                    let u1 = halton(k, bases[2 * i]).max(1e-300);
                    let u2 = halton(k, bases[2 * i + 1]);
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            normalize(v)
        })
        .collect()
}

/// Derivative-free descent of `q` on the sphere: coordinate steps, support
/// pruning and magnitude equalization, each followed by projection back onto
/// the sphere. The step halves whenever no move improves.
fn local_search(profile: &LossProfile, start: Vec<f64>, budget: usize) -> (f64, Vec<f64>) {
    let n = profile.dims();
    let mut h = start;
    let mut qh = profile.q(&h);
    let mut evals = 1;
    let mut step = 0.5;
    while step > 1e-4 && evals < budget {
        let mut improved = false;
        'moves: for candidate in moves(&h, step, n) {
            let Some(c) = normalize(candidate) else { continue };
            let qc = profile.q(&c);
            evals += 1;
            if qc < qh - 1e-15 {
                h = c;
                qh = qc;
                improved = true;
                break 'moves;
            }
            if evals >= budget {
                break 'moves;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (qh, h)
}

fn moves(h: &[f64], step: f64, n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * n + n * n);
    for i in 0..n {
        for s in [step, -step] {
            let mut c = h.to_vec();
            c[i] += s;
            out.push(c);
        }
    }
    let nonzero = h.iter().filter(|x| **x != 0.0).count();
    if nonzero > 1 {
        for i in 0..n {
            if h[i] != 0.0 {
                let mut c = h.to_vec();
                c[i] = 0.0;
                out.push(c);
            }
        }
    }
    if n <= 12 {
        for i in 0..n {
            for j in 0..n {
                if i != j && h[i] != 0.0 && h[j].abs() != h[i].abs() {
                    let mut c = h.to_vec();
                    c[j] = h[i].abs() * if h[j] < 0.0 { -1.0 } else { 1.0 };
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Certified `α_n` for the segment of the first `n` sources.
pub fn na_constant_segment(model: &MarketModel, n: usize, opts: &NaOptions) -> Result<SegmentConstant> {
    na_constant_segment_with_hint(model, n, opts, None)
}

/// As [`na_constant_segment`], also trying `hint` (zero-padded) as a
/// candidate direction.
pub fn na_constant_segment_with_hint(
    model: &MarketModel,
    n: usize,
    opts: &NaOptions,
    hint: Option<&Strategy>,
) -> Result<SegmentConstant> {
    if n == 0 || n > model.n_max() {
        return Err(Error::model("na_constant_segment", format!("segment {n} outside 1..={}", model.n_max())));
    }
    let profile = LossProfile::new(model, n, opts.cap)?;

    let mut candidates = structured_directions(n);
    if let Some(h) = hint.and_then(|h| normalize(h.resized(n).into_inner())) {
        candidates.insert(0, h);
    }
    if n >= 2 && n <= opts.grid_max_dim {
        candidates.extend(sphere_grid(n, opts.grid_points));
    }
    let scored: Vec<f64> = candidates.par_iter().map(|c| profile.q(c)).collect();
    let (mut best_q, mut best_h) = (f64::INFINITY, Vec::new());
    for (q, c) in scored.iter().zip(&candidates) {
        if *q < best_q {
            best_q = *q;
            best_h = c.clone();
        }
    }

    if n >= 2 && best_q > 0.0 {
        let starts: Vec<Vec<f64>> = (0..opts.starts)
            .map(|k| {
                if k == 0 {
                    best_h.clone()
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(k as u64);
                    random_unit(n, &mut rng)
                }
            })
            .collect();
        let results: Vec<(f64, Vec<f64>)> =
            starts.into_par_iter().map(|s| local_search(&profile, s, opts.evals_per_start)).collect();
        // ties go to the lowest start index
        for (q, h) in results {
            if q < best_q {
                best_q = q;
                best_h = h;
            }
        }
    }

    if best_q <= 0.0 {
        return Err(Error::ArbitrageWitness { n, q: best_q, h: best_h });
    }
    Ok(SegmentConstant { n, alpha: (1.0 - opts.safety) * best_q, q_min: best_q, minimizer: best_h })
}

/// `α_1..α_{n_max}` with the search for segment `n + 1` seeded by the
/// minimizer of segment `n`. Reported values are running minima, since the
/// unit sphere of a segment contains that of every smaller one.
pub fn segment_constants(model: &MarketModel, opts: &NaOptions) -> Result<Vec<SegmentConstant>> {
    let mut out: Vec<SegmentConstant> = Vec::with_capacity(model.n_max());
    for n in 1..=model.n_max() {
        let hint = out.last().map(|c| Strategy::new(c.minimizer.clone()));
        let mut c = na_constant_segment_with_hint(model, n, opts, hint.as_ref())?;
        if let Some(prev) = out.last() {
            if prev.alpha < c.alpha {
                c.alpha = prev.alpha;
                c.q_min = prev.q_min;
                c.minimizer = Strategy::new(prev.minimizer.clone()).resized(n).into_inner();
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// Splits the drift around the large-market constant: `n_α` is the smallest
/// `n ≥ 1` whose drift tail (declared tail included) is at most
/// `alpha_large / 2`, and `ᾱ = min(α_{n_α}, alpha_large / 2)`.
pub fn large_split(model: &MarketModel, alpha_large: f64, per_segment: &BTreeMap<usize, f64>) -> Result<LargeConstant> {
    let budget = alpha_large / 2.0;
    let drift = model.drift();
    if drift.tail_norm_sq() > budget * budget {
        return Err(Error::TailBudget { tail_norm_sq: drift.tail_norm_sq(), budget: budget * budget });
    }
    let n_alpha = (1..=model.n_max())
        .find(|&n| drift.tail_norm_sq_after(n).sqrt() <= budget)
        .expect("the tail at n_max is within budget");
    let alpha_n = *per_segment
        .get(&n_alpha)
        .ok_or_else(|| Error::model("na_constant_large", format!("no constant for segment {n_alpha}")))?;
    Ok(LargeConstant { alpha_large, n_alpha, alpha_bar: alpha_n.min(budget) })
}

/// Large-market constant: `α_{n_max}` of the drift-free model, then the
/// drift split of [`large_split`].
pub fn na_constant_large(
    model: &MarketModel,
    per_segment: &BTreeMap<usize, f64>,
    opts: &NaOptions,
) -> Result<LargeConstant> {
    let driftless = model.without_drift();
    let alpha_large = na_constant_segment(&driftless, model.n_max(), opts)?.alpha;
    large_split(model, alpha_large, per_segment)
}

/// Full computation: every segment constant, then the large-market split.
pub fn na_constants(model: &MarketModel, opts: &NaOptions) -> Result<NAConstants> {
    let segs = segment_constants(model, opts)?;
    let per_segment: BTreeMap<usize, f64> = segs.iter().map(|c| (c.n, c.alpha)).collect();
    let large = na_constant_large(model, &per_segment, opts)?;
    Ok(NAConstants { per_segment, alpha_large: large.alpha_large, n_alpha: large.n_alpha, alpha_bar: large.alpha_bar })
}
