use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Shape, Utility};

/// Growth constants: `|U(x)| ≥ C1|x|^β − C2` for `x ≤ x0` and
/// `U⁻(x) ≤ C3|x|^γ + C4` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub c3: f64,
    pub c4: f64,
    pub gamma: f64,
}

const GRID_MAX: f64 = 1e6;
const GRID_POINTS: usize = 481;
const FIT_MARGIN: f64 = 1e-9;

/// `0` followed by log-spaced distances in `[1e-6, 1e6]`.
fn distances() -> impl Iterator<Item = f64> {
    std::iter::once(0.0).chain((0..GRID_POINTS).map(|k| {
        let t = k as f64 / (GRID_POINTS - 1) as f64;
        10f64.powf(-6.0 + 12.0 * t).min(GRID_MAX)
    }))
}

fn lower_points(x0: f64) -> impl Iterator<Item = f64> {
    distances().map(move |d| x0 - d)
}

fn loss_points() -> impl Iterator<Item = f64> {
    distances().flat_map(|d| [d, -d])
}

fn lower_violation(u: &Utility, c: &GrowthConstants, x: f64) -> f64 {
    c.c1 * x.abs().powf(c.beta) - c.c2 - u.eval(x).abs()
}

fn loss_violation(u: &Utility, c: &GrowthConstants, x: f64) -> f64 {
    (-u.eval(x)).max(0.0) - c.c3 * x.abs().powf(c.gamma) - c.c4
}

/// Fits constants for a two-sided power utility: `C1 = scale/(2β)`,
/// `γ = max(β, 2)`, `C3 = scale·2^γ/β`, and `C2`, `C4` as the largest
/// violation on the check grid plus a small margin. `None` for tables.
pub fn fit_constants(u: &Utility) -> Option<GrowthConstants> {
    let Shape::TwoSidedPower { beta, .. } = *u.shape() else {
        return None;
    };
    let gamma = beta.max(2.0);
    let mut c = GrowthConstants {
        c1: u.scale / (2.0 * beta),
        c2: 0.0,
        beta,
        c3: u.scale * 2f64.powf(gamma) / beta,
        c4: 0.0,
        gamma,
    };
    let v_lower = lower_points(u.x0()).map(|x| lower_violation(u, &c, x)).fold(0.0, f64::max);
    let v_loss = loss_points().map(|x| loss_violation(u, &c, x)).fold(0.0, f64::max);
    c.c2 = v_lower + FIT_MARGIN * (1.0 + v_lower);
    c.c4 = v_loss + FIT_MARGIN * (1.0 + v_loss);
    Some(c)
}

/// Largest violation of each growth inequality on the check grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthReport {
    pub lower_growth_ok: bool,
    pub loss_growth_ok: bool,
    pub worst_lower: f64,
    pub worst_loss: f64,
    pub constants_ok: bool,
}

pub fn check_growth(u: &Utility, c: &GrowthConstants) -> GrowthReport {
    let worst_lower = lower_points(u.x0()).map(|x| lower_violation(u, c, x)).fold(f64::NEG_INFINITY, f64::max);
    let worst_loss = loss_points().map(|x| loss_violation(u, c, x)).fold(f64::NEG_INFINITY, f64::max);
    // relative slack for the rounding in |U| at |x| ~ 1e6
    let slack = |x: f64| 1e-12 * (1.0 + x.abs());
    let lower_growth_ok = lower_points(u.x0()).all(|x| lower_violation(u, c, x) <= slack(u.eval(x)));
    let loss_growth_ok = loss_points().all(|x| loss_violation(u, c, x) <= slack(u.eval(x)));
    let constants_ok =
        c.c1 > 0.0 && c.c2 >= 0.0 && c.beta > 1.0 && c.c3 > 0.0 && c.c4 >= 0.0 && c.gamma >= c.beta.min(2.0);
    GrowthReport { lower_growth_ok, loss_growth_ok, worst_lower, worst_loss, constants_ok }
}

/// Seeded concavity, monotonicity and normalization checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeReport {
    pub concave_ok: bool,
    pub increasing_ok: bool,
    pub normalized_ok: bool,
}

pub fn check_shape(u: &Utility, trials: usize, seed: u64) -> ShapeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0 = u.x0();
    let mut concave_ok = true;
    let mut increasing_ok = true;
    for _ in 0..trials {
        let mut t = [0.0; 3];
        for v in &mut t {
            *v = x0 + rng.random_range(-100.0..100.0);
        }
        t.sort_by(f64::total_cmp);
        let [x, y, z] = t;
        if z > x && y > x && z > y {
            let chord = ((z - y) * u.eval(x) + (y - x) * u.eval(z)) / (z - x);
            // rounding of the chord grows with |U|
            let tol = 1e-12 * (1.0 + u.eval(x).abs() + u.eval(z).abs());
            concave_ok &= u.eval(y) >= chord - tol;
        }
        for delta in [1e-3, 1.0, 10.0] {
            increasing_ok &= u.eval(y + delta) > u.eval(y);
        }
    }
    ShapeReport { concave_ok, increasing_ok, normalized_ok: u.is_normalized() }
}
