#![allow(dead_code)]

use std::path::{Path, PathBuf};

use markov_markowitz::export::{write_prices, write_risk_free};
use markov_markowitz::ingest::ReturnPanel;
use markov_markowitz::synthetic::{generate, SyntheticConfig};

pub fn panel(n_assets: usize, years: usize, seed: u64) -> ReturnPanel {
    generate(&SyntheticConfig::two_regime(n_assets, years, seed)).unwrap().returns
}

/// Write `prices.csv` and `rf.csv` for a synthetic panel into `dir`.
pub fn write_fixture(dir: &Path, n_assets: usize, months: usize, seed: u64) -> (PathBuf, PathBuf) {
    let mut cfg = SyntheticConfig::two_regime(n_assets, 1, seed);
    cfg.months = months;
    let p = generate(&cfg).unwrap();
    let prices = dir.join("prices.csv");
    let rf = dir.join("rf.csv");
    let price_panel = p.prices();
    write_prices(&prices, &price_panel).unwrap();
    let rf_rates = vec![p.returns.rf[0]; price_panel.dates.len()];
    write_risk_free(&rf, &price_panel.dates, &rf_rates).unwrap();
    (prices, rf)
}
