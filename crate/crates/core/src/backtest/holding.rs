use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Daily outcome of holding one target through one month.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HoldingPeriod {
    /// Before fees.
    pub gross: Vec<f64>,
    /// After fees.
    pub net: Vec<f64>,
    pub turnover: Vec<f64>,
}

/// Hold `target` through the rows of `returns`, rebalancing back to it at
/// every close.
///
/// Each day the book earns `Σ w_i r_i` plus the risk-free rate on the
/// uninvested balance `1 − Σw`. Drifted weights are `w_i (1 + r_i) / (1 + r_p)`
/// and the rebalance trades `Σ|w − drifted|`. Day one also trades
/// `Σ|w − prior|` to move from the previous book. Fees are
/// `fee_rate × turnover`, deducted from that day's return.
pub fn simulate_holding(
    returns: &DMatrix<f64>,
    rf: &[f64],
    target: &[f64],
    fee_rate: f64,
    prior: &[f64],
) -> Result<HoldingPeriod> {
    let n = target.len();
    if returns.ncols() != n || prior.len() != n {
        return Err(Error::Argument(format!(
            "{} assets in returns, {} in target, {} in prior weights",
            returns.ncols(),
            n,
            prior.len()
        )));
    }
    if rf.len() != returns.nrows() {
        return Err(Error::Argument("risk-free series length differs from returns".into()));
    }
    if !(fee_rate >= 0.0) || target.iter().any(|w| !w.is_finite()) {
        return Err(Error::Argument("invalid fee rate or target weights".into()));
    }
    let cash = 1.0 - target.iter().sum::<f64>();
    let entry: f64 = target.iter().zip(prior).map(|(w, p)| (w - p).abs()).sum();
    let mut out = HoldingPeriod::default();
    for (d, row) in returns.row_iter().enumerate() {
        let gross = row.iter().zip(target).map(|(r, w)| w * r).sum::<f64>() + cash * rf[d];
        let growth = 1.0 + gross;
        let rebalance: f64 = row
            .iter()
            .zip(target)
            .map(|(r, w)| (w - w * (1.0 + r) / growth).abs())
            .sum();
        let turnover = rebalance + if d == 0 { entry } else { 0.0 };
        out.gross.push(gross);
        out.net.push(gross - fee_rate * turnover);
        out.turnover.push(turnover);
    }
    Ok(out)
}
