//! Monthly efficient-frontier coefficients and the frontier they describe.
//!
//!     cargo run --example frontier_coefficients

use markov_markowitz::frontier::{ef_variance_at, monthly_coefficients, DEFAULT_RIDGE};
use markov_markowitz::ingest::group_by_month;
use markov_markowitz::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let panel = generate(&SyntheticConfig::two_regime(5, 1, 3))?;
    let slices = group_by_month(&panel.returns)?;
    let series = monthly_coefficients(&panel.returns, &slices, DEFAULT_RIDGE)?;

    println!("month    regime      r_mvp   sigma_mvp          u");
    for ((m, c), regime) in series.months.iter().zip(&series.coeffs).zip(&panel.regimes) {
        let label = if *regime == 0 { "bull" } else { "bear" };
        println!("{m}  {label:>6} {:>10.5} {:>11.5} {:>10.5}", c.r_mvp, c.sigma_mvp, c.u);
    }

    let c = &series.coeffs[0];
    println!("\nfrontier of {}: sigma at target daily returns", series.months[0]);
    for step in -2..=2 {
        let r = c.r_mvp + step as f64 * 0.001;
        println!("  r = {r:+.4}  sigma = {:.5}", ef_variance_at(r, c)?.sqrt());
    }
    Ok(())
}
