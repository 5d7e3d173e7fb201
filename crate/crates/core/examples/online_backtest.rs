//! Walk-forward backtest on a seeded bull/bear panel.
//!
//!     cargo run --release --example online_backtest -- [seed] [years] [k]

use markov_markowitz::backtest::{run_online_backtest, BacktestConfig, STRATEGY_NAME};
use markov_markowitz::export::render_metrics;
use markov_markowitz::synthetic::{generate, SyntheticConfig};
use markov_markowitz::MonthKey;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().map_or(Ok(11), |s| s.parse())?;
    let years = args.get(1).map_or(Ok(12), |s| s.parse())?;
    let k = args.get(2).map_or(Ok(2), |s| s.parse())?;

    let panel = generate(&SyntheticConfig::two_regime(6, years, seed))?;
    let cfg = BacktestConfig {
        k,
        test_start: MonthKey { year: 2002, month: 1 },
        ..Default::default()
    };
    let started = std::time::Instant::now();
    let result = run_online_backtest(&panel.returns, &cfg)?;
    println!(
        "{} test months, {} days, {:.1}s\n",
        result.snapshots.len(),
        result.dates.len(),
        started.elapsed().as_secs_f64()
    );
    print!("{}", render_metrics(&result.metrics));

    let last = result.snapshots.last().expect("at least one test month");
    println!("\nlast decision ({}), current state {}:", last.month, last.current_state);
    println!("  transition row {:?}", last.transition_row);
    println!("  weights        {:?}", last.weights);
    println!("final wealth of {STRATEGY_NAME}: {:.4}", result.wealth().last().unwrap());
    Ok(())
}
