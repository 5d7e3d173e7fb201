use crate::error::{Error, Result};
use crate::ingest::ReturnPanel;

use super::metrics::sample_std;

/// Daily-rebalanced equal-weight returns over `days`.
pub fn equal_weight_returns(panel: &ReturnPanel, days: std::ops::Range<usize>) -> Vec<f64> {
    let n = panel.n_assets() as f64;
    days.map(|d| panel.returns.row(d).sum() / n).collect()
}

/// Scale `benchmark` so its sample volatility equals the strategy's.
/// Returns the scaled series and the factor.
pub fn volatility_target(benchmark: &[f64], strategy: &[f64]) -> Result<(Vec<f64>, f64)> {
    if benchmark.len() != strategy.len() || benchmark.len() < 2 {
        return Err(Error::Argument(
            "volatility targeting needs two equal-length series of at least 2 days".into(),
        ));
    }
    let sd_bench = sample_std(benchmark);
    if !(sd_bench > 0.0) {
        return Err(Error::Degenerate("benchmark has zero volatility".into()));
    }
    let k = sample_std(strategy) / sd_bench;
    Ok((benchmark.iter().map(|r| r * k).collect(), k))
}

/// Equal weights over the strategy's test days, volatility-targeted to it.
pub fn benchmark_equal_weight_vol_targeted(
    panel: &ReturnPanel,
    days: std::ops::Range<usize>,
    strategy_returns: &[f64],
) -> Result<Vec<f64>> {
    let ew = equal_weight_returns(panel, days);
    volatility_target(&ew, strategy_returns).map(|(s, _)| s)
}
