//! Reference computations that share nothing with the library beyond the
//! model's factor tables and the utility's pointwise values.
#![allow(dead_code)]

use bigmarket::market::MarketModel;

/// Every state of the first `dims` factors with its probability, built by a
/// plain odometer.
pub fn atoms(model: &MarketModel, dims: usize) -> Vec<(Vec<f64>, f64)> {
    let mut idx = vec![0usize; dims];
    let mut out = Vec::new();
    loop {
        let e: Vec<f64> = (0..dims).map(|i| model.factor(i).support()[idx[i]]).collect();
        let w: f64 = (0..dims).map(|i| model.factor(i).probs()[idx[i]]).product();
        out.push((e, w));
        let mut k = dims;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < model.factor(k).len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `E U(x + Σ h_i (ε_i − b_i) − G)` by direct summation over `atoms`.
pub fn objective(
    model: &MarketModel,
    atoms: &[(Vec<f64>, f64)],
    u: impl Fn(f64) -> f64,
    g: impl Fn(&[f64]) -> f64,
    x: f64,
    h: &[f64],
) -> f64 {
    atoms
        .iter()
        .map(|(e, w)| {
            let gain: f64 = h.iter().enumerate().map(|(i, hi)| hi * (e[i] - model.b(i))).sum();
            w * u(x + gain - g(e))
        })
        .sum()
}

const POINTS: usize = 401;

/// Coarse-to-fine grid search for the maximum of `f` on `[lo, hi]`: each pass
/// re-centres a `POINTS`-point grid on the best node with half-width two
/// steps, until the step is below `resolution`.
pub fn grid_max_1d(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, resolution: f64) -> (f64, f64) {
    let (lo0, hi0) = (lo, hi);
    loop {
        let step = (hi - lo) / (POINTS - 1) as f64;
        let (best, val) = (0..POINTS)
            .map(|k| lo + k as f64 * step)
            .map(|t| (t, f(t)))
            .fold((lo, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        if step < resolution {
            return (best, val);
        }
        lo = (best - 2.0 * step).max(lo0);
        hi = (best + 2.0 * step).min(hi0);
    }
}

/// Two-dimensional analogue of [`grid_max_1d`] on the box `[lo, hi]²`,
/// with `POINTS / 4` nodes per axis per pass.
pub fn grid_max_2d(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, resolution: f64) -> ([f64; 2], f64) {
    let pts = POINTS / 4;
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (lo, hi, lo, hi);
    loop {
        let s0 = (hi0 - lo0) / (pts - 1) as f64;
        let s1 = (hi1 - lo1) / (pts - 1) as f64;
        let mut best = ([lo0, lo1], f64::NEG_INFINITY);
        for i in 0..pts {
            for j in 0..pts {
                let p = [lo0 + i as f64 * s0, lo1 + j as f64 * s1];
                let v = f(p[0], p[1]);
                if v > best.1 {
                    best = (p, v);
                }
            }
        }
        if s0.max(s1) < resolution {
            return best;
        }
        let [b0, b1] = best.0;
        (lo0, hi0) = ((b0 - 2.0 * s0).max(lo), (b0 + 2.0 * s0).min(hi));
        (lo1, hi1) = ((b1 - 2.0 * s1).max(lo), (b1 + 2.0 * s1).min(hi));
    }
}
