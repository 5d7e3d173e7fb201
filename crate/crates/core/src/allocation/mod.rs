//! Per-state tangency portfolios and their transition-weighted combination.

mod projection;
mod tangency;

pub use tangency::{
    closed_form_tangency, tangency_portfolio, Budget, PortfolioWeights, SharpeObjective, SolveMethod, Tangency,
    TangencyOptions,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::sample_mean_cov;
use crate::ingest::{MonthlySlices, ReturnPanel};
use crate::regime::StateSequence;

/// Nearest feasible point of `{Σw = budget, Σ|w| ≤ cap}`.
pub fn project_feasible(y: &DVector<f64>, budget: Budget, cap: f64) -> DVector<f64> {
    projection::project(y, budget.value(), cap)
}

/// Daily return rows grouped by the state of their month.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePartition {
    /// Per state (index `s − 1`), the panel row indices in time order.
    pub days: Vec<Vec<usize>>,
    /// Per state, the matching return rows (days × assets).
    pub rows: Vec<DMatrix<f64>>,
}

impl StatePartition {
    pub fn k(&self) -> usize {
        self.days.len()
    }
}

/// Assign every daily row of the labelled months to its month's state.
pub fn partition_returns_by_state(
    panel: &ReturnPanel,
    slices: &MonthlySlices,
    states: &StateSequence,
) -> Result<StatePartition> {
    if states.months.len() > slices.months.len() || states.months[..] != slices.months[..states.months.len()] {
        return Err(Error::Argument(
            "state sequence must label the leading months of the slices".into(),
        ));
    }
    let mut days = vec![Vec::new(); states.k];
    for (range, &label) in slices.ranges.iter().zip(&states.labels) {
        days[label - 1].extend(range.clone());
    }
    for (s, d) in days.iter().enumerate() {
        if d.len() < 2 {
            return Err(Error::DegenerateState {
                state: s + 1,
                rows: d.len(),
            });
        }
    }
    let rows = days
        .iter()
        .map(|d| panel.returns.select_rows(d.iter()))
        .collect();
    Ok(StatePartition { days, rows })
}

/// Per-state portfolios, one row per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateWeightMatrix {
    /// K × n
    pub w: DMatrix<f64>,
    pub budgets: Vec<Budget>,
    /// In-sample daily Sharpe of the chosen row on its state's returns.
    pub sharpes: Vec<f64>,
    /// Rows that fell back to equal weights.
    pub fallback: Vec<bool>,
}

impl StateWeightMatrix {
    pub fn k(&self) -> usize {
        self.w.nrows()
    }

    pub fn row(&self, state: usize) -> Vec<f64> {
        self.w.row(state - 1).iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationConfig {
    pub gross_cap: f64,
    pub ridge: f64,
    pub tangency: TangencyOptions,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            gross_cap: 1.5,
            ridge: crate::frontier::DEFAULT_RIDGE,
            tangency: TangencyOptions::default(),
        }
    }
}

/// Sharpe of `w` on daily rows, `(mean(r_p) − rf) / sd(r_p)` with the
/// unbiased standard deviation.
pub fn in_sample_sharpe(rows: &DMatrix<f64>, w: &[f64], rf: f64) -> f64 {
    let w = DVector::from_column_slice(w);
    let r = rows * w;
    let t = r.len() as f64;
    let mean = r.mean();
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
    if !(var > 0.0) {
        return f64::NEG_INFINITY;
    }
    (mean - rf) / var.sqrt()
}

/// Solve both budgets per state and keep the higher in-sample Sharpe.
/// Ties within 1e-10 go to the fully invested row.
///
/// `seed_salt` perturbs the random starts deterministically so that callers
/// can key them to something stable, such as the decision month.
pub fn state_weight_matrix(
    partition: &StatePartition,
    rf: f64,
    cfg: &AllocationConfig,
    seed_salt: u64,
) -> Result<StateWeightMatrix> {
    let k = partition.k();
    let n = partition.rows.first().map_or(0, |r| r.ncols());
    if n == 0 {
        return Err(Error::Argument("no assets".into()));
    }
    let mut w = DMatrix::zeros(k, n);
    let mut budgets = Vec::with_capacity(k);
    let mut sharpes = Vec::with_capacity(k);
    let mut fallback = Vec::with_capacity(k);
    for (s, rows) in partition.rows.iter().enumerate() {
        let moments = match sample_mean_cov(rows, cfg.ridge) {
            Ok(m) => Some(m),
            Err(Error::SingularCovariance { .. }) => None,
            Err(e) => return Err(e),
        };
        let mut best: Option<(Budget, Vec<f64>, f64)> = None;
        if let Some(m) = &moments {
            for (bi, budget) in [Budget::FullyInvested, Budget::ZeroNet].into_iter().enumerate() {
                let opts = TangencyOptions {
                    seed: cfg
                        .tangency
                        .seed
                        .wrapping_add(seed_salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
                        .wrapping_add((s as u64) << 8 | bi as u64),
                    ..cfg.tangency
                };
                let t = match tangency_portfolio(m, rf, budget, cfg.gross_cap, &opts) {
                    Ok(t) => t,
                    Err(Error::Argument(_)) => continue,
                    Err(e) => return Err(e),
                };
                let sample_rf = match budget {
                    Budget::ZeroNet if !cfg.tangency.subtract_rf_zero_budget => 0.0,
                    _ => rf,
                };
                let sharpe = in_sample_sharpe(rows, &t.weights.w, sample_rf);
                let better = match &best {
                    None => true,
                    Some((_, _, bs)) => sharpe > bs + 1e-10,
                };
                if better {
                    best = Some((budget, t.weights.w, sharpe));
                }
            }
        }
        match best {
            Some((budget, row, sharpe)) => {
                w.row_mut(s).copy_from_slice(&row);
                budgets.push(budget);
                sharpes.push(sharpe);
                fallback.push(false);
            }
            None => {
                log::warn!("state {}: covariance singular after ridge; using equal weights", s + 1);
                let row = vec![1.0 / n as f64; n];
                sharpes.push(in_sample_sharpe(rows, &row, rf));
                w.row_mut(s).copy_from_slice(&row);
                budgets.push(Budget::FullyInvested);
                fallback.push(true);
            }
        }
    }
    Ok(StateWeightMatrix {
        w,
        budgets,
        sharpes,
        fallback,
    })
}

/// `w* = Σ_s p[s] · W[s, :]`.
pub fn markov_markowitz_weights(w: &StateWeightMatrix, p: &DVector<f64>) -> Result<DVector<f64>> {
    if p.len() != w.k() {
        return Err(Error::Argument(format!(
            "transition row has {} entries for {} states",
            p.len(),
            w.k()
        )));
    }
    Ok(w.w.tr_mul(p))
}
