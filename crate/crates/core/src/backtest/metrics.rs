//! Performance statistics on daily return series.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample standard deviation.
pub fn sample_std(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)).sqrt()
}

/// Spread below rounding noise relative to the values themselves.
fn negligible_spread(sd: f64, x: &[f64]) -> bool {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    !(sd > 1e-12 * scale)
}

/// Wealth after each day, starting from 1.0 before the first return.
pub fn wealth_curve(returns: &[f64]) -> Vec<f64> {
    returns
        .iter()
        .scan(1.0, |w, r| {
            *w *= 1.0 + r;
            Some(*w)
        })
        .collect()
}

/// Largest peak-to-trough decline of a wealth path, in `[−1, 0]`.
pub fn max_drawdown(wealth: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &w in wealth {
        peak = peak.max(w);
        worst = worst.min(w / peak - 1.0);
    }
    worst
}

/// Annualised Sharpe ratio of `r − rf`.
pub fn sharpe_ratio(returns: &[f64], rf: &[f64]) -> Result<f64> {
    check_lengths(returns, rf)?;
    let excess: Vec<f64> = returns.iter().zip(rf).map(|(r, f)| r - f).collect();
    let sd = sample_std(&excess);
    if negligible_spread(sd, &excess) {
        return Err(Error::Degenerate("excess returns have zero variance; Sharpe undefined".into()));
    }
    Ok(mean(&excess) / sd * TRADING_DAYS_PER_YEAR.sqrt())
}

/// Geometric annualised return, `(Π(1 + r))^(252/N) − 1`.
pub fn annualized_return(returns: &[f64]) -> f64 {
    let log_growth: f64 = returns.iter().map(|r| r.ln_1p()).sum();
    (log_growth * TRADING_DAYS_PER_YEAR / returns.len() as f64).exp_m1()
}

fn check_lengths(returns: &[f64], rf: &[f64]) -> Result<()> {
    if returns.len() != rf.len() {
        return Err(Error::Argument(format!(
            "{} returns but {} risk-free values",
            returns.len(),
            rf.len()
        )));
    }
    if returns.len() < 2 {
        return Err(Error::Argument("at least 2 observations are required".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMetrics {
    /// `None` when the excess returns have zero variance.
    pub sharpe: Option<f64>,
    pub annualized_return: f64,
    pub max_drawdown: f64,
}

pub fn compute_metrics(returns: &[f64], rf: &[f64]) -> Result<PerformanceMetrics> {
    check_lengths(returns, rf)?;
    let sharpe = match sharpe_ratio(returns, rf) {
        Ok(s) => Some(s),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(PerformanceMetrics {
        sharpe,
        annualized_return: annualized_return(returns),
        max_drawdown: max_drawdown(&wealth_curve(returns)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRegression {
    /// Daily intercept.
    pub intercept: f64,
    pub beta: f64,
    /// `252 × intercept`
    pub annual_alpha: f64,
    /// Two-sided t-test on the intercept with `N − 2` degrees of freedom.
    pub p_value: f64,
    pub n_obs: usize,
}

/// OLS of strategy excess returns on benchmark excess returns.
pub fn alpha_regression(strategy: &[f64], benchmark: &[f64], rf: &[f64]) -> Result<AlphaRegression> {
    let n = strategy.len();
    if benchmark.len() != n || rf.len() != n {
        return Err(Error::Argument("strategy, benchmark and rf lengths differ".into()));
    }
    if n < 30 {
        return Err(Error::Argument(format!("alpha regression needs at least 30 observations, got {n}")));
    }
    let y: Vec<f64> = strategy.iter().zip(rf).map(|(s, f)| s - f).collect();
    let x: Vec<f64> = benchmark.iter().zip(rf).map(|(b, f)| b - f).collect();
    let (mx, my) = (mean(&x), mean(&y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if negligible_spread((sxx / (n - 1) as f64).sqrt(), &x) {
        return Err(Error::Degenerate("benchmark excess returns have zero variance".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - beta * a).powi(2))
        .sum();
    let df = (n - 2) as f64;
    let sigma2 = sse / df;
    let se = (sigma2 * (1.0 / n as f64 + mx * mx / sxx)).sqrt();
    let p_value = if se > 0.0 {
        let t = intercept / se;
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    } else if intercept == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(AlphaRegression {
        intercept,
        beta,
        annual_alpha: TRADING_DAYS_PER_YEAR * intercept,
        p_value,
        n_obs: n,
    })
}
