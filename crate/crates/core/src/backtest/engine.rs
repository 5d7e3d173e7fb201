use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::benchmarks::benchmark_equal_weight_vol_targeted;
use super::config::{BacktestConfig, Benchmark};
use super::holding::simulate_holding;
use super::metrics::{alpha_regression, compute_metrics, wealth_curve, AlphaRegression, PerformanceMetrics};
use crate::allocation::{
    markov_markowitz_weights, partition_returns_by_state, state_weight_matrix, tangency_portfolio, Budget,
    StateWeightMatrix, TangencyOptions,
};
use crate::error::{Error, Result};
use crate::frontier::{monthly_coefficients, sample_mean_cov, EfCoefficientSeries};
use crate::ingest::{group_by_month, MonthlySlices, ReturnPanel};
use crate::markov::{
    estimate_transition_matrix_smoothed, steady_state, transition_row, SteadyState, TransitionMatrix,
};
use crate::month::MonthKey;
use crate::regime::{fit_states, RegimeFit, StateSequence};

pub const STRATEGY_NAME: &str = "markov_markowitz";

/// Everything fitted on a block of leading months.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub regime: RegimeFit,
    pub transition: TransitionMatrix,
    pub steady_state: Option<SteadyState>,
    pub state_weights: StateWeightMatrix,
    /// Risk-free rate aggregated over the fitted days.
    pub rf: f64,
}

impl ModelFit {
    pub fn states(&self) -> &StateSequence {
        &self.regime.states
    }

    /// Transition-weighted weights for the month after the last fitted one.
    pub fn next_weights(&self) -> Result<(usize, DVector<f64>, DVector<f64>)> {
        let current = self
            .regime
            .states
            .last()
            .ok_or_else(|| Error::Argument("empty state sequence".into()))?;
        let p = transition_row(&self.transition, current)?;
        let w = markov_markowitz_weights(&self.state_weights, &p)?;
        Ok((current, p, w))
    }
}

fn seed_salt(month: MonthKey) -> u64 {
    (month.year as i64 * 12 + month.month as i64) as u64
}

/// Fit states, transitions and per-state portfolios on the first `n_months`
/// months of `slices`.
pub fn fit_model(
    panel: &ReturnPanel,
    slices: &MonthlySlices,
    coeffs: &EfCoefficientSeries,
    n_months: usize,
    cfg: &BacktestConfig,
) -> Result<ModelFit> {
    if n_months == 0 || n_months > slices.len() {
        return Err(Error::Argument(format!(
            "cannot fit on {n_months} of {} months",
            slices.len()
        )));
    }
    let regime = fit_states(&coeffs.head(n_months), &cfg.regime())?;
    let transition = estimate_transition_matrix_smoothed(&regime.states, cfg.pseudo_count)?;
    let steady_state = steady_state(&transition).ok();
    let partition = partition_returns_by_state(panel, slices, &regime.states)?;
    let end = slices.ranges[n_months - 1].end;
    let rf = cfg.rf_aggregation.apply(&panel.rf[..end]);
    let state_weights = state_weight_matrix(&partition, rf, &cfg.allocation(), seed_salt(slices.months[n_months - 1]))?;
    Ok(ModelFit {
        regime,
        transition,
        steady_state,
        state_weights,
        rf,
    })
}

/// The model's decision for one test month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSnapshot {
    /// The month the weights are held through.
    pub month: MonthKey,
    pub states: StateSequence,
    /// K × K, rows are the source state.
    pub transition: Vec<Vec<f64>>,
    pub steady_state: Option<Vec<f64>>,
    pub state_weights: StateWeightMatrix,
    pub current_state: usize,
    pub transition_row: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Weights for month index `month_idx`, using months `0..month_idx` only.
pub fn decide_month(
    panel: &ReturnPanel,
    slices: &MonthlySlices,
    coeffs: &EfCoefficientSeries,
    month_idx: usize,
    cfg: &BacktestConfig,
) -> Result<IterationSnapshot> {
    let month = slices.months[month_idx];
    let fit = fit_model(panel, slices, coeffs, month_idx, cfg).map_err(|e| e.in_month(month))?;
    let (current_state, p, w) = fit.next_weights().map_err(|e| e.in_month(month))?;
    Ok(IterationSnapshot {
        month,
        transition: fit
            .transition
            .matrix()
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect(),
        steady_state: fit.steady_state.map(|s| s.pi),
        states: fit.regime.states,
        state_weights: fit.state_weights,
        current_state,
        transition_row: p.iter().copied().collect(),
        weights: w.iter().copied().collect(),
    })
}

/// Fully invested tangency on every training day before `month_idx`.
pub fn decide_tangency(
    panel: &ReturnPanel,
    slices: &MonthlySlices,
    month_idx: usize,
    cfg: &BacktestConfig,
) -> Result<Vec<f64>> {
    let month = slices.months[month_idx];
    let end = slices.ranges[month_idx - 1].end;
    let rows = panel.returns.rows(0, end).into_owned();
    let rf = cfg.rf_aggregation.apply(&panel.rf[..end]);
    let n = panel.n_assets();
    let moments = match sample_mean_cov(&rows, cfg.ridge) {
        Ok(m) => m,
        Err(Error::SingularCovariance { .. }) => {
            log::warn!("{month}: tangency benchmark covariance singular; using equal weights");
            return Ok(vec![1.0 / n as f64; n]);
        }
        Err(e) => return Err(e.in_month(month)),
    };
    let opts = TangencyOptions {
        seed: cfg.seed ^ seed_salt(month),
        ..cfg.allocation().tangency
    };
    let t = tangency_portfolio(&moments, rf, Budget::FullyInvested, cfg.gross_cap, &opts)
        .map_err(|e| e.in_month(month))?;
    Ok(t.weights.w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub name: String,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMetrics {
    pub name: String,
    #[serde(flatten)]
    pub metrics: PerformanceMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedAlpha {
    pub benchmark: String,
    /// `None` when the regression is not defined (too short, flat benchmark).
    pub regression: Option<AlphaRegression>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategies: Vec<NamedMetrics>,
    pub alphas: Vec<NamedAlpha>,
}

impl MetricsReport {
    pub fn get(&self, name: &str) -> Option<&PerformanceMetrics> {
        self.strategies.iter().find(|s| s.name == name).map(|s| &s.metrics)
    }
}

/// Metrics for the first series (the strategy) and every other series,
/// plus the strategy's alpha against each of the others.
pub fn metrics_report(series: &[NamedSeries], rf: &[f64]) -> Result<MetricsReport> {
    let mut strategies = Vec::with_capacity(series.len());
    for s in series {
        strategies.push(NamedMetrics {
            name: s.name.clone(),
            metrics: compute_metrics(&s.returns, rf)?,
        });
    }
    let alphas = match series.split_first() {
        Some((strategy, others)) => others
            .iter()
            .map(|b| NamedAlpha {
                benchmark: b.name.clone(),
                regression: alpha_regression(&strategy.returns, &b.returns, rf).ok(),
            })
            .collect(),
        None => Vec::new(),
    };
    Ok(MetricsReport { strategies, alphas })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub config: BacktestConfig,
    /// Investable universe (benchmark columns removed).
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub rf: Vec<f64>,
    pub net_returns: Vec<f64>,
    pub gross_returns: Vec<f64>,
    pub turnover: Vec<f64>,
    pub benchmarks: Vec<NamedSeries>,
    pub snapshots: Vec<IterationSnapshot>,
    pub metrics: MetricsReport,
    /// Set when the universe has at least as many assets as the median
    /// month has trading days.
    pub dimensionality_warning: bool,
}

impl BacktestResult {
    /// Strategy first, then benchmarks in configuration order.
    pub fn all_series(&self) -> Vec<NamedSeries> {
        std::iter::once(NamedSeries {
            name: STRATEGY_NAME.into(),
            returns: self.net_returns.clone(),
        })
        .chain(self.benchmarks.iter().cloned())
        .collect()
    }

    pub fn wealth(&self) -> Vec<f64> {
        wealth_curve(&self.net_returns)
    }

    /// `(month, weights)` in test order.
    pub fn weight_history(&self) -> Vec<(MonthKey, &[f64])> {
        self.snapshots.iter().map(|s| (s.month, s.weights.as_slice())).collect()
    }
}

struct Path {
    net: Vec<f64>,
    gross: Vec<f64>,
    turnover: Vec<f64>,
}

fn hold_months<F>(
    panel: &ReturnPanel,
    slices: &MonthlySlices,
    test_idx: usize,
    fee_rate: f64,
    initial: Vec<f64>,
    mut decide: F,
) -> Result<Path>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    let mut path = Path {
        net: Vec::new(),
        gross: Vec::new(),
        turnover: Vec::new(),
    };
    let mut prior = initial;
    for i in test_idx..slices.len() {
        let target = decide(i)?;
        let range = slices.ranges[i].clone();
        let rows = panel.returns.rows(range.start, range.len()).into_owned();
        let held = simulate_holding(&rows, &panel.rf[range], &target, fee_rate, &prior)?;
        path.net.extend(held.net);
        path.gross.extend(held.gross);
        path.turnover.extend(held.turnover);
        prior = target;
    }
    Ok(path)
}

fn initial_book<F>(test_idx: usize, cfg: &BacktestConfig, n: usize, decide: F) -> Vec<f64>
where
    F: FnOnce(usize) -> Result<Vec<f64>>,
{
    if cfg.warm_start && test_idx > cfg.k.max(3) {
        match decide(test_idx - 1) {
            Ok(w) => return w,
            Err(e) => log::warn!("warm start unavailable ({e}); entering from cash"),
        }
    }
    vec![0.0; n]
}

/// Walk forward month by month: fit on every month before the test month,
/// hold the transition-weighted weights through it, then add it to the
/// training set.
pub fn run_online_backtest(panel: &ReturnPanel, cfg: &BacktestConfig) -> Result<BacktestResult> {
    cfg.validate()?;
    let hold_tickers: Vec<String> = cfg
        .benchmarks
        .iter()
        .filter_map(|b| match b {
            Benchmark::BuyAndHold(t) => Some(t.clone()),
            _ => None,
        })
        .collect();
    let (universe, held_columns) = panel.split_off(&hold_tickers)?;

    let slices = group_by_month(&universe)?;
    let dimensionality_warning = universe.n_assets() as f64 >= slices.median_days();
    if dimensionality_warning {
        log::warn!(
            "{} assets against a median of {} trading days per month; monthly covariances are rank-deficient",
            universe.n_assets(),
            slices.median_days()
        );
    }
    let coeffs = monthly_coefficients(&universe, &slices, cfg.ridge)?;
    let test_idx = slices
        .months
        .iter()
        .position(|m| *m >= cfg.test_start)
        .ok_or_else(|| Error::Argument(format!("no data on or after test start {}", cfg.test_start)))?;
    if test_idx < cfg.min_training_months {
        return Err(Error::Argument(format!(
            "test start {} leaves {test_idx} training months; at least {} are required",
            cfg.test_start, cfg.min_training_months
        )));
    }
    let n = universe.n_assets();

    let initial = initial_book(test_idx, cfg, n, |i| {
        decide_month(&universe, &slices, &coeffs, i, cfg).map(|s| s.weights)
    });
    let mut snapshots = Vec::with_capacity(slices.len() - test_idx);
    let path = hold_months(&universe, &slices, test_idx, cfg.fee_rate, initial, |i| {
        let snapshot = decide_month(&universe, &slices, &coeffs, i, cfg)?;
        let w = snapshot.weights.clone();
        snapshots.push(snapshot);
        Ok(w)
    })?;

    let first_day = slices.ranges[test_idx].start;
    let days = first_day..universe.n_days();
    let mut benchmarks = Vec::new();
    for b in &cfg.benchmarks {
        let returns = match b {
            Benchmark::Tangency => {
                let initial = initial_book(test_idx, cfg, n, |i| decide_tangency(&universe, &slices, i, cfg));
                hold_months(&universe, &slices, test_idx, cfg.fee_rate, initial, |i| {
                    decide_tangency(&universe, &slices, i, cfg)
                })?
                .net
            }
            Benchmark::EqualWeight => {
                benchmark_equal_weight_vol_targeted(&universe, days.clone(), &path.net)?
            }
            Benchmark::BuyAndHold(t) => held_columns
                .iter()
                .find(|(name, _)| name == t)
                .map(|(_, r)| r[days.clone()].to_vec())
                .expect("split_off returned every requested column"),
        };
        benchmarks.push(NamedSeries {
            name: b.name(),
            returns,
        });
    }

    let rf = universe.rf[days.clone()].to_vec();
    let mut result = BacktestResult {
        config: cfg.clone(),
        tickers: universe.tickers.clone(),
        dates: universe.dates[days].to_vec(),
        rf,
        net_returns: path.net,
        gross_returns: path.gross,
        turnover: path.turnover,
        benchmarks,
        snapshots,
        metrics: MetricsReport {
            strategies: Vec::new(),
            alphas: Vec::new(),
        },
        dimensionality_warning,
    };
    result.metrics = metrics_report(&result.all_series(), &result.rf)?;
    Ok(result)
}

/// Fit the model once on the leading `n_months` months (all months when `None`).
pub fn fit_panel(panel: &ReturnPanel, cfg: &BacktestConfig, n_months: Option<usize>) -> Result<(EfCoefficientSeries, MonthlySlices, ModelFit)> {
    let slices = group_by_month(panel)?;
    let coeffs = monthly_coefficients(panel, &slices, cfg.ridge)?;
    let n = n_months.unwrap_or(slices.len());
    let fit = fit_model(panel, &slices, &coeffs, n, cfg)?;
    Ok((coeffs, slices, fit))
}

/// Transition matrix snapshot as a dense matrix.
pub fn snapshot_matrix(s: &IterationSnapshot) -> DMatrix<f64> {
    let k = s.transition.len();
    DMatrix::from_fn(k, k, |i, j| s.transition[i][j])
}
