//! Compensated summation and deterministic parallel reductions.
//!
//! Every expectation in the crate is a weighted sum over scenarios. The sums
//! are split into fixed-size chunks (independent of the rayon pool size),
//! each chunk is accumulated with Neumaier's compensated addition, and the
//! chunk partials are folded in index order. The result is bit-identical for
//! any number of worker threads.

use rayon::prelude::*;

/// Rows per reduction chunk. Fixed so the partition never depends on the
/// number of workers.
pub const CHUNK: usize = 512;

/// Neumaier (improved Kahan–Babuška) running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping both compensation terms.
    #[inline]
    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Compensated sum of a slice, sequential.
pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<NeumaierSum>().value()
}

/// `Σ_r f(r)` for `r in 0..rows`, reduced deterministically.
pub fn par_sum<F>(rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<NeumaierSum> = chunk_starts(rows)
        .into_par_iter()
        .map(|start| {
            let end = (start + CHUNK).min(rows);
            (start..end).map(&f).collect::<NeumaierSum>()
        })
        .collect();
    let mut total = NeumaierSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Vector-valued deterministic reduction: for each row, `f(row, acc)` adds
/// its contribution into the `width`-long accumulator through the callback.
/// Returns the compensated totals.
pub fn par_sum_vec<F>(rows: usize, width: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut dyn FnMut(usize, f64)) + Sync,
{
    let partials: Vec<Vec<NeumaierSum>> = chunk_starts(rows)
        .into_par_iter()
        .map(|start| {
            let end = (start + CHUNK).min(rows);
            let mut acc = vec![NeumaierSum::new(); width];
            for r in start..end {
                f(r, &mut |k, v| acc[k].add(v));
            }
            acc
        })
        .collect();
    let mut total = vec![NeumaierSum::new(); width];
    for chunk in &partials {
        for (t, p) in total.iter_mut().zip(chunk) {
            t.merge(p);
        }
    }
    total.iter().map(NeumaierSum::value).collect()
}

fn chunk_starts(rows: usize) -> Vec<usize> {
    (0..rows).step_by(CHUNK).collect()
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Radical-inverse Halton coordinate of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// First `n` primes, used as Halton bases.
pub fn primes(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(n);
    let mut c = 2u64;
    while out.len() < n {
        if out.iter().all(|p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}
