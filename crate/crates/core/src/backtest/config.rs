use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::allocation::{AllocationConfig, TangencyOptions};
use crate::error::{Error, Result};
use crate::frontier::DEFAULT_RIDGE;
use crate::month::MonthKey;
use crate::regime::{Linkage, RegimeConfig};

pub const MIN_TRAINING_MONTHS: usize = 24;
pub const DEFAULT_FEE_RATE: f64 = 0.01;
pub const DEFAULT_GROSS_CAP: f64 = 1.5;

/// A comparison series produced alongside the strategy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Benchmark {
    /// Fully invested tangency on all training days, refit monthly.
    Tangency,
    /// Daily-rebalanced equal weights scaled to the strategy's volatility.
    EqualWeight,
    /// Buy-and-hold of a price column, removed from the investable universe.
    BuyAndHold(String),
}

impl Benchmark {
    pub fn name(&self) -> String {
        match self {
            Benchmark::Tangency => "tangency".into(),
            Benchmark::EqualWeight => "equal_weight".into(),
            Benchmark::BuyAndHold(t) => t.clone(),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "" => Err("empty benchmark name".into()),
            "tangency" => Ok(Benchmark::Tangency),
            "equal_weight" | "equal-weight" | "ew" => Ok(Benchmark::EqualWeight),
            ticker => Ok(Benchmark::BuyAndHold(ticker.to_string())),
        }
    }
}

impl Serialize for Benchmark {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Benchmark {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// How the daily risk-free series over a training window becomes the
/// single rate used in the Sharpe objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RfAggregation {
    #[default]
    Mean,
    /// The rate on the last training day.
    Last,
}

impl RfAggregation {
    pub fn apply(self, rf: &[f64]) -> f64 {
        match self {
            RfAggregation::Mean => rf.iter().sum::<f64>() / rf.len() as f64,
            RfAggregation::Last => *rf.last().expect("non-empty training window"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub k: usize,
    /// First month traded out of sample.
    pub test_start: MonthKey,
    pub min_training_months: usize,
    pub gross_cap: f64,
    /// Proportional cost per unit of traded notional.
    pub fee_rate: f64,
    pub ridge: f64,
    pub standardize: bool,
    pub linkage: Linkage,
    pub dtw_window: Option<usize>,
    pub pseudo_count: f64,
    pub rf_aggregation: RfAggregation,
    pub subtract_rf_zero_budget: bool,
    pub random_starts: usize,
    pub seed: u64,
    /// Price the first test month's entry from the weights the model would
    /// have held the month before, so that later starts reproduce earlier
    /// runs exactly.
    pub warm_start: bool,
    pub benchmarks: Vec<Benchmark>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            k: 4,
            test_start: MonthKey { year: 2000, month: 1 },
            min_training_months: MIN_TRAINING_MONTHS,
            gross_cap: DEFAULT_GROSS_CAP,
            fee_rate: DEFAULT_FEE_RATE,
            ridge: DEFAULT_RIDGE,
            standardize: true,
            linkage: Linkage::Average,
            dtw_window: None,
            pseudo_count: 0.0,
            rf_aggregation: RfAggregation::Mean,
            subtract_rf_zero_budget: true,
            random_starts: TangencyOptions::default().random_starts,
            seed: 0,
            warm_start: true,
            benchmarks: vec![Benchmark::Tangency, Benchmark::EqualWeight],
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Argument(format!("K must be at least 2, got {}", self.k)));
        }
        if !(self.fee_rate >= 0.0) {
            return Err(Error::Argument(format!("fee rate must be >= 0, got {}", self.fee_rate)));
        }
        if !(self.gross_cap >= 1.0) {
            return Err(Error::Argument(format!(
                "gross cap must be >= 1 to hold a fully invested book, got {}",
                self.gross_cap
            )));
        }
        if !(self.pseudo_count >= 0.0) {
            return Err(Error::Argument(format!("pseudo count must be >= 0, got {}", self.pseudo_count)));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::Argument(format!("ridge must be >= 0, got {}", self.ridge)));
        }
        if self.min_training_months < self.k.max(3) {
            return Err(Error::Argument(format!(
                "min_training_months {} is below max(K, 3)",
                self.min_training_months
            )));
        }
        Ok(())
    }

    pub fn regime(&self) -> RegimeConfig {
        RegimeConfig {
            k: self.k,
            standardize: self.standardize,
            linkage: self.linkage,
            dtw_window: self.dtw_window,
        }
    }

    pub fn allocation(&self) -> AllocationConfig {
        AllocationConfig {
            gross_cap: self.gross_cap,
            ridge: self.ridge,
            tangency: TangencyOptions {
                subtract_rf_zero_budget: self.subtract_rf_zero_budget,
                random_starts: self.random_starts,
                seed: self.seed,
                ..TangencyOptions::default()
            },
        }
    }
}
