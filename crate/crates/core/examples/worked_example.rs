//! Transition-weighted portfolio: the current state's transition row
//! averages the per-state tangency rows.
//!
//!     cargo run --example worked_example

use markov_markowitz::allocation::{markov_markowitz_weights, Budget, StateWeightMatrix};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // state 1 is bullish and fully invested, state 2 bearish and zero-net
    let w = StateWeightMatrix {
        w: DMatrix::from_row_slice(2, 3, &[0.6, 0.5, -0.1, -0.5, 0.25, 0.25]),
        budgets: vec![Budget::FullyInvested, Budget::ZeroNet],
        sharpes: vec![0.08, 0.03],
        fallback: vec![false, false],
    };
    let p = DVector::from_vec(vec![1.0 / 3.0, 2.0 / 3.0]);
    let blended = markov_markowitz_weights(&w, &p)?;
    println!("P[current, :] = {:.4?}", p.as_slice());
    println!("W =\n{:.3}", w.w);
    println!("w* = {:.4?}  (net {:.4}, gross {:.4})", blended.as_slice(), blended.sum(), blended.abs().sum());
    Ok(())
}
