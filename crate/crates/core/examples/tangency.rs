//! Maximum-Sharpe portfolios under a budget and a gross-exposure cap.
//!
//!     cargo run --example tangency

use markov_markowitz::allocation::{closed_form_tangency, tangency_portfolio, Budget, TangencyOptions};
use markov_markowitz::frontier::{SampleMoments, DEFAULT_RIDGE};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mean = DVector::from_vec(vec![0.0008, 0.0005, -0.0002, 0.0003]);
    let cov = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0e-4, 0.3e-4, 0.2e-4, 0.1e-4, //
            0.3e-4, 0.8e-4, 0.2e-4, 0.1e-4, //
            0.2e-4, 0.2e-4, 1.2e-4, 0.3e-4, //
            0.1e-4, 0.1e-4, 0.3e-4, 0.6e-4,
        ],
    );
    let m = SampleMoments::from_parts(mean, cov, 250, DEFAULT_RIDGE)?;
    let rf = 0.0001;
    if let Some(w) = closed_form_tangency(&m, rf) {
        let gross: f64 = w.iter().map(|x| x.abs()).sum();
        println!("unconstrained: {:.4?} (gross {gross:.3})", w.as_slice());
    }
    let opts = TangencyOptions::default();
    for budget in [Budget::FullyInvested, Budget::ZeroNet] {
        for cap in [1.0, 1.5, 3.0] {
            let t = tangency_portfolio(&m, rf, budget, cap, &opts)?;
            println!(
                "{budget:<15} cap {cap:.1}: {:.4?}  daily Sharpe {:.4} ({:?})",
                t.weights.w, t.sharpe, t.method
            );
        }
    }
    Ok(())
}
