//! File-based pipeline: write price and risk-free files, load them, and
//! export coefficients, states and the transition matrix.
//!
//!     cargo run --example csv_pipeline -- [output-dir]

use std::path::PathBuf;

use markov_markowitz::backtest::{fit_panel, BacktestConfig};
use markov_markowitz::export;
use markov_markowitz::ingest::{compute_returns, load_price_panel};
use markov_markowitz::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("mm-csv-pipeline"), PathBuf::from);
    std::fs::create_dir_all(&dir)?;

    let synthetic = generate(&SyntheticConfig::two_regime(4, 3, 8))?;
    let prices = synthetic.prices();
    export::write_prices(&dir.join("prices.csv"), &prices)?;
    let rf = vec![synthetic.returns.rf[0]; prices.dates.len()];
    export::write_risk_free(&dir.join("rf.csv"), &prices.dates, &rf)?;

    let loaded = load_price_panel(dir.join("prices.csv"), "date")?;
    let panel = compute_returns(&loaded, dir.join("rf.csv"))?;
    println!("{} days x {} assets", panel.n_days(), panel.n_assets());

    let cfg = BacktestConfig { k: 3, ..Default::default() };
    let (coeffs, _, fit) = fit_panel(&panel, &cfg, None)?;
    export::write_coefficients(&dir.join(export::COEFFICIENTS_FILE), &coeffs)?;
    export::write_states(&dir.join(export::STATES_FILE), fit.states(), None)?;
    export::write_transition_matrix(&dir.join(export::TRANSITION_FILE), &fit.transition)?;
    export::write_state_weights(&dir.join(export::STATE_WEIGHTS_FILE), &fit.state_weights, &panel.tickers)?;
    println!("wrote exports to {}", dir.display());
    Ok(())
}
