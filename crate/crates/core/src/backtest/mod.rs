//! Walk-forward evaluation: monthly refits, daily rebalancing, fees,
//! benchmarks and summary statistics.

mod benchmarks;
mod config;
mod engine;
mod holding;
pub mod metrics;

pub use benchmarks::{benchmark_equal_weight_vol_targeted, equal_weight_returns, volatility_target};
pub use config::{BacktestConfig, Benchmark, RfAggregation, DEFAULT_FEE_RATE, DEFAULT_GROSS_CAP, MIN_TRAINING_MONTHS};
pub use engine::{
    decide_month, decide_tangency, fit_model, fit_panel, metrics_report, run_online_backtest, snapshot_matrix,
    BacktestResult, IterationSnapshot, MetricsReport, ModelFit, NamedAlpha, NamedMetrics, NamedSeries,
    STRATEGY_NAME,
};
pub use holding::{simulate_holding, HoldingPeriod};
pub use metrics::{
    alpha_regression, annualized_return, compute_metrics, max_drawdown, sharpe_ratio, wealth_curve, AlphaRegression,
    PerformanceMetrics, TRADING_DAYS_PER_YEAR,
};
