//! Market states from clustered efficient-frontier coefficients.
//!
//! The pipeline turns a coefficient series into `K` states:
//!
//! 1. arrange `(r_mvp, sigma_mvp, u)` as a 3×T matrix, optionally z-scoring
//!    each coefficient across months;
//! 2. Pearson-correlate every pair of month columns;
//! 3. map correlations to distances with `√(2(1 − ρ))`;
//! 4. DTW between the rows of that matrix, each row a month's distance
//!    profile in time order;
//! 5. agglomerative clustering of the DTW matrix, cut at `K`.

mod cluster;
mod correlation;
mod dtw;

pub use cluster::{agglomerate, hierarchical_cluster, Dendrogram, Linkage, Merge, StateSequence};
pub use correlation::{coefficient_correlation_distance, correlation_distance, MonthDistanceMatrix};
pub use dtw::{dtw_distance, dtw_distance_matrix, Dtw};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::frontier::EfCoefficientSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConfig {
    pub k: usize,
    pub standardize: bool,
    pub linkage: Linkage,
    /// Sakoe-Chiba band for DTW; `None` is unbounded.
    pub dtw_window: Option<usize>,
}

impl Default for RegimeConfig {
    fn default() -> Self {
        Self {
            k: 4,
            standardize: true,
            linkage: Linkage::Average,
            dtw_window: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegimeFit {
    pub correlation: MonthDistanceMatrix,
    pub dtw: MonthDistanceMatrix,
    pub states: StateSequence,
    pub dendrogram: Dendrogram,
}

/// Run all five steps on `series`.
pub fn fit_states(series: &EfCoefficientSeries, cfg: &RegimeConfig) -> Result<RegimeFit> {
    let correlation = coefficient_correlation_distance(series, cfg.standardize)?;
    let band = cfg.dtw_window.map_or_else(Dtw::unbounded, Dtw::with_window);
    let dtw = dtw_distance_matrix(&correlation, band)?;
    let (states, dendrogram) = hierarchical_cluster(&dtw, cfg.k, cfg.linkage)?;
    Ok(RegimeFit {
        correlation,
        dtw,
        states,
        dendrogram,
    })
}
