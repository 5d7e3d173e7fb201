//! Dynamic time warping with absolute-difference local cost.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::MonthDistanceMatrix;
use crate::error::{Error, Result};

/// DTW distance, optionally restricted to a Sakoe-Chiba band.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dtw {
    window: Option<usize>,
}

impl Dtw {
    pub fn unbounded() -> Self {
        Self { window: None }
    }

    /// Only cells with `|i − j| ≤ window` are reachable. The band is widened
    /// to the length difference so that a path always exists.
    pub fn with_window(window: usize) -> Self {
        Self {
            window: Some(window),
        }
    }

    pub fn window(&self) -> Option<usize> {
        self.window
    }

    /// Minimal cumulative cost of a monotone path from `(0, 0)` to
    /// `(len(a) − 1, len(b) − 1)`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Argument("DTW needs non-empty sequences".into()));
        }
        Ok(self.distance_unchecked(a, b))
    }

    fn distance_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let m = b.len();
        let w = self
            .window
            .map_or(usize::MAX, |w| w.max(a.len().abs_diff(m)));
        // prev/curr hold row i−1 / i of the cost table, shifted by one column
        let mut prev = vec![f64::INFINITY; m + 1];
        let mut curr = vec![f64::INFINITY; m + 1];
        prev[0] = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            let lo = i.saturating_sub(w);
            let hi = i.saturating_add(w).min(m - 1);
            curr.fill(f64::INFINITY);
            for j in lo..=hi {
                let best = prev[j].min(prev[j + 1]).min(curr[j]);
                curr[j + 1] = (ai - b[j]).abs() + best;
            }
            std::mem::swap(&mut prev, &mut curr);
            prev[0] = f64::INFINITY;
        }
        prev[m]
    }
}

const LANES: usize = 8;

impl Dtw {
    /// `distance` from `a` to each of `LANES` sequences of one common length,
    /// run in lockstep so the independent recurrences overlap. Every lane
    /// performs exactly the scalar operations, so results are bit-identical.
    fn distance_lanes(&self, a: &[f64], bs: &[&[f64]; LANES]) -> [f64; LANES] {
        let m = bs[0].len();
        debug_assert!(bs.iter().all(|b| b.len() == m));
        let w = self
            .window
            .map_or(usize::MAX, |w| w.max(a.len().abs_diff(m)));
        let b: Vec<[f64; LANES]> = (0..m).map(|j| std::array::from_fn(|l| bs[l][j])).collect();
        let mut prev = vec![[f64::INFINITY; LANES]; m + 1];
        let mut curr = vec![[f64::INFINITY; LANES]; m + 1];
        prev[0] = [0.0; LANES];
        for (i, &ai) in a.iter().enumerate() {
            let lo = i.saturating_sub(w);
            let hi = i.saturating_add(w).min(m - 1);
            curr.fill([f64::INFINITY; LANES]);
            for j in lo..=hi {
                let (up, diag, left, bj) = (prev[j + 1], prev[j], curr[j], b[j]);
                let mut out = [0.0; LANES];
                for l in 0..LANES {
                    let (x, y, z) = (diag[l], up[l], left[l]);
                    let b = if x < y { x } else { y };
                    out[l] = (ai - bj[l]).abs() + if b < z { b } else { z };
                }
                curr[j + 1] = out;
            }
            std::mem::swap(&mut prev, &mut curr);
            prev[0] = [f64::INFINITY; LANES];
        }
        prev[m]
    }
}

/// Unbounded DTW between two sequences.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    Dtw::unbounded().distance(a, b)
}

/// DTW between every pair of rows of `m`, each row read as a sequence in
/// month order.
pub fn dtw_distance_matrix(m: &MonthDistanceMatrix, dtw: Dtw) -> Result<MonthDistanceMatrix> {
    let t = m.len();
    if t == 0 {
        return Err(Error::Argument("empty distance matrix".into()));
    }
    let rows: Vec<Vec<f64>> = (0..t)
        .map(|i| m.d.row(i).iter().copied().collect())
        .collect();
    // (i, first j) for blocks of up to LANES partners j < i
    let blocks: Vec<(usize, usize)> = (1..t)
        .flat_map(|i| (0..i).step_by(LANES).map(move |j| (i, j)))
        .collect();
    let values: Vec<[f64; LANES]> = blocks
        .par_iter()
        .map(|&(i, j0)| {
            let last = i - 1;
            let bs: [&[f64]; LANES] = std::array::from_fn(|l| rows[(j0 + l).min(last)].as_slice());
            dtw.distance_lanes(&rows[i], &bs)
        })
        .collect();
    let mut d = DMatrix::zeros(t, t);
    for (&(i, j0), v) in blocks.iter().zip(values) {
        for (l, &x) in v.iter().enumerate().take(i - j0) {
            d[(i, j0 + l)] = x;
            d[(j0 + l, i)] = x;
        }
    }
    MonthDistanceMatrix::new(m.months.clone(), d)
}
