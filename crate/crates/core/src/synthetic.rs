//! Seeded regime-switching return panels for examples and tests.

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ingest::{PricePanel, ReturnPanel};
use crate::month::MonthKey;

/// Daily return distribution in one regime: a common factor plus
/// independent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec {
    /// Per-asset daily mean.
    pub mean: Vec<f64>,
    /// Per-asset idiosyncratic daily volatility.
    pub vol: Vec<f64>,
    /// Daily volatility of the common factor (unit loading on every asset).
    pub factor_vol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub regimes: Vec<RegimeSpec>,
    /// Probability of keeping the current regime into the next month.
    pub stay_probability: f64,
    pub start: MonthKey,
    pub months: usize,
    /// Daily risk-free rate.
    pub rf: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Bull and bear regimes with sign-opposed means: calm and rising
    /// versus volatile and falling.
    pub fn two_regime(n_assets: usize, years: usize, seed: u64) -> Self {
        let mean: Vec<f64> = (0..n_assets).map(|i| 0.0006 + 0.0001 * i as f64).collect();
        let vol: Vec<f64> = (0..n_assets).map(|i| 0.008 + 0.001 * i as f64).collect();
        Self {
            regimes: vec![
                RegimeSpec {
                    mean: mean.clone(),
                    vol: vol.clone(),
                    factor_vol: 0.004,
                },
                RegimeSpec {
                    mean: mean.iter().map(|m| -m).collect(),
                    vol: vol.iter().map(|v| 2.0 * v).collect(),
                    factor_vol: 0.012,
                },
            ],
            stay_probability: 0.9,
            start: MonthKey { year: 2000, month: 1 },
            months: 12 * years,
            rf: 0.00008,
            seed,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.regimes.first().map_or(0, |r| r.mean.len())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub returns: ReturnPanel,
    /// Regime index (0-based) of every generated month.
    pub regimes: Vec<usize>,
}

impl SyntheticPanel {
    /// Prices starting at 100 on the business day before the first return.
    pub fn prices(&self) -> PricePanel {
        let r = &self.returns;
        let first = r.dates[0];
        let mut day0 = first.pred_opt().expect("date in range");
        while is_weekend(day0) {
            day0 = day0.pred_opt().expect("date in range");
        }
        let mut dates = vec![day0];
        dates.extend(&r.dates);
        let n = r.n_assets();
        let mut prices = DMatrix::from_element(dates.len(), n, 100.0);
        for d in 0..r.n_days() {
            for j in 0..n {
                prices[(d + 1, j)] = prices[(d, j)] * (1.0 + r.returns[(d, j)]);
            }
        }
        PricePanel::new(dates, r.tickers.clone(), prices).expect("positive prices")
    }
}

fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Weekdays of one calendar month.
pub fn business_days(month: MonthKey) -> Vec<NaiveDate> {
    let mut d = month.first_day();
    let mut out = Vec::new();
    while MonthKey::of(d) == month {
        if !is_weekend(d) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticPanel> {
    let n = cfg.n_assets();
    if cfg.regimes.is_empty() || n == 0 {
        return Err(Error::Argument("at least one regime with one asset is required".into()));
    }
    if cfg.regimes.iter().any(|r| r.mean.len() != n || r.vol.len() != n) {
        return Err(Error::Argument("regimes disagree on the number of assets".into()));
    }
    if !(0.0..=1.0).contains(&cfg.stay_probability) {
        return Err(Error::Argument("stay probability must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let k = cfg.regimes.len();

    let mut month = cfg.start;
    let mut regime = 0usize;
    let mut regimes = Vec::with_capacity(cfg.months);
    let mut dates = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for m in 0..cfg.months {
        if m > 0 && k > 1 && !rng.random_bool(cfg.stay_probability) {
            regime = (regime + rng.random_range(1..k)) % k;
        }
        regimes.push(regime);
        let spec = &cfg.regimes[regime];
        for day in business_days(month) {
            let f = spec.factor_vol * std_normal.sample(&mut rng);
            for j in 0..n {
                rows.push(spec.mean[j] + f + spec.vol[j] * std_normal.sample(&mut rng));
            }
            dates.push(day);
        }
        month = month.succ();
    }
    let tickers = (1..=n).map(|i| format!("A{i}")).collect();
    let returns = DMatrix::from_row_slice(dates.len(), n, &rows);
    let rf = vec![cfg.rf; dates.len()];
    Ok(SyntheticPanel {
        returns: ReturnPanel::new(dates, tickers, returns, rf)?,
        regimes,
    })
}
