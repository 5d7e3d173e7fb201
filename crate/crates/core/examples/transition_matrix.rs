//! Markov transition estimates from a state sequence, and steady states.
//!
//!     cargo run --example transition_matrix

use markov_markowitz::markov::{estimate_transition_matrix, steady_state, TransitionMatrix};
use markov_markowitz::regime::StateSequence;
use markov_markowitz::MonthKey;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let labels = vec![1, 1, 2, 2, 2, 3, 1, 1, 3, 3, 2, 1];
    let months = std::iter::successors(Some(MonthKey { year: 2020, month: 1 }), |m| Some(m.succ()))
        .take(labels.len())
        .collect();
    let seq = StateSequence::new(months, labels, 3)?;
    let p = estimate_transition_matrix(&seq)?;
    println!("estimated P (rows: from):\n{:.3}", p.matrix());
    println!("steady state: {:.3?}", steady_state(&p)?.pi);

    // A four-state reference matrix (rows renormalised)
    let reference = TransitionMatrix::renormalized(DMatrix::from_row_slice(
        4,
        4,
        &[
            0.41, 0.30, 0.13, 0.15, //
            0.36, 0.30, 0.13, 0.21, //
            0.14, 0.25, 0.37, 0.24, //
            0.23, 0.21, 0.22, 0.34,
        ],
    ))?;
    let ss = steady_state(&reference)?;
    println!("reference matrix: steady state {:.3?} after {} iterations", ss.pi, ss.iterations);
    Ok(())
}
