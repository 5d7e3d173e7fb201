//! Euclidean projection onto `{w : Σw = budget, Σ|w| ≤ cap}`.
//!
//! The minimiser has the form `w_i = soft(y_i − ν, θ)`. If the gross bound
//! is slack, `θ = 0` and the answer is a uniform shift. Otherwise the
//! positive and negative legs decouple: `w⁺ = max(y − α, 0)` must sum to
//! `(budget + cap)/2` and `w⁻ = min(y − β, 0)` to `(budget − cap)/2`, with
//! `α = ν + θ` and `β = ν − θ`. Each leg is a simplex-type projection solved
//! exactly by sorting.

use nalgebra::DVector;

fn gross(w: &DVector<f64>) -> f64 {
    w.iter().map(|x| x.abs()).sum()
}

/// `α` with `Σ max(y_i − α, 0) = total`, for `total > 0`.
fn upper_level(y: &[f64], total: f64) -> f64 {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut alpha = sorted[0] - total;
    for (i, &v) in sorted.iter().enumerate() {
        cum += v;
        let candidate = (cum - total) / (i + 1) as f64;
        if candidate < v {
            alpha = candidate;
        } else {
            break;
        }
    }
    alpha
}

/// Nearest point of the feasible set to `y`. Requires `cap ≥ |budget|`.
pub(crate) fn project(y: &DVector<f64>, budget: f64, cap: f64) -> DVector<f64> {
    let n = y.len() as f64;
    let shift = (y.sum() - budget) / n;
    let w = y.add_scalar(-shift);
    if gross(&w) <= cap {
        return w;
    }
    let long = 0.5 * (budget + cap);
    let short = 0.5 * (cap - budget);
    let alpha = upper_level(y.as_slice(), long);
    let beta = if short > 0.0 {
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        -upper_level(&neg, short)
    } else {
        f64::NEG_INFINITY
    };
    y.map(|v| {
        if v > alpha {
            v - alpha
        } else if v < beta {
            v - beta
        } else {
            0.0
        }
    })
}
