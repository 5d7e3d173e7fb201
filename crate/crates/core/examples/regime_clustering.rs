//! Correlation distance between months, DTW between their distance
//! profiles, and hierarchical clustering into market states.
//!
//!     cargo run --example regime_clustering -- [k]

use markov_markowitz::frontier::{monthly_coefficients, DEFAULT_RIDGE};
use markov_markowitz::ingest::group_by_month;
use markov_markowitz::regime::{fit_states, RegimeConfig};
use markov_markowitz::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = std::env::args().nth(1).map_or(Ok(2), |s| s.parse())?;
    let panel = generate(&SyntheticConfig::two_regime(5, 4, 5))?;
    let slices = group_by_month(&panel.returns)?;
    let series = monthly_coefficients(&panel.returns, &slices, DEFAULT_RIDGE)?;

    let fit = fit_states(&series, &RegimeConfig { k, ..Default::default() })?;
    println!("{} months clustered into {k} states\n", fit.states.len());
    println!("month    true  state");
    for ((m, s), r) in fit.states.months.iter().zip(&fit.states.labels).zip(&panel.regimes) {
        println!("{m}  {:>4}  {s:>5}", r + 1);
    }
    let top = &fit.dendrogram.merges[fit.dendrogram.merges.len() - 3..];
    println!("\nlast merges (left, right, height, size):");
    for m in top {
        println!("  {:>3} {:>3} {:>8.4} {:>4}", m.left, m.right, m.height, m.size);
    }
    Ok(())
}
