//! Asset allocation driven by a Markov chain over market states.
//!
//! Each month's daily returns are reduced to the three coefficients of
//! that month's efficient frontier. Months are compared by the correlation
//! of their coefficients, the resulting distance profiles are compared with
//! dynamic time warping, and hierarchical clustering groups months into `K`
//! states. A transition matrix estimated from the state sequence weights a
//! per-state tangency portfolio into next month's allocation.
//!
//! | stage | module |
//! |---|---|
//! | price / risk-free / recession files | [`ingest`] |
//! | monthly frontier coefficients | [`frontier`] |
//! | distances, DTW, clustering | [`regime`] |
//! | transition matrix, steady state | [`markov`] |
//! | per-state tangency, blended weights | [`allocation`] |
//! | walk-forward evaluation and metrics | [`backtest`] |
//! | CSV / JSON outputs | [`export`] |
//! | command-line front end | [`cli`] |
//!
//! [`synthetic`] generates seeded regime-switching panels for experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod backtest;
pub mod cli;
pub mod error;
pub mod export;
pub mod frontier;
pub mod ingest;
pub mod markov;
pub mod month;
pub mod regime;
pub mod synthetic;

pub use error::{Error, Result};
pub use month::MonthKey;
