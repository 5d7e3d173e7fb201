//! Plain-text exports of every pipeline stage, and readers for the ones
//! `report` consumes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::allocation::StateWeightMatrix;
use crate::backtest::{
    wealth_curve, BacktestConfig, BacktestResult, MetricsReport, NamedSeries,
};
use crate::error::{Error, Result};
use crate::frontier::EfCoefficientSeries;
use crate::ingest::{PricePanel, RecessionLabels};
use crate::markov::TransitionMatrix;
use crate::regime::{Dendrogram, StateSequence};

pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const STATES_FILE: &str = "states.csv";
pub const DENDROGRAM_FILE: &str = "dendrogram.csv";
pub const DENDROGRAM_TREE_FILE: &str = "dendrogram.txt";
pub const TRANSITION_FILE: &str = "transition_matrix.csv";
pub const STEADY_STATE_FILE: &str = "steady_state.csv";
pub const STATE_WEIGHTS_FILE: &str = "state_weights.csv";
pub const DAILY_RETURNS_FILE: &str = "daily_returns.csv";
pub const WEALTH_FILE: &str = "wealth.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const METRICS_FILE: &str = "metrics.json";

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn state_header(k: usize) -> Vec<String> {
    (1..=k).map(|s| format!("s{s}")).collect()
}

pub fn write_coefficients(path: &Path, series: &EfCoefficientSeries) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["year", "month", "A", "B", "C", "r_mvp", "sigma_mvp", "u"])?;
    for (m, c) in series.months.iter().zip(&series.coeffs) {
        w.write_record(&[
            m.year.to_string(),
            m.month.to_string(),
            c.a.to_string(),
            c.b.to_string(),
            c.c.to_string(),
            c.r_mvp.to_string(),
            c.sigma_mvp.to_string(),
            c.u.to_string(),
        ])?;
    }
    finish(w, path)
}

/// `date,<tickers...>` in the layout the price loader reads.
pub fn write_prices(path: &Path, p: &PricePanel) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(p.tickers.iter().cloned());
    w.write_record(&header)?;
    for (d, date) in p.dates.iter().enumerate() {
        let mut rec = vec![date.to_string()];
        rec.extend(p.prices.row(d).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// `date,rf` with rates in percent per day, from decimal daily rates.
pub fn write_risk_free(path: &Path, dates: &[NaiveDate], rf: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["date", "rf"])?;
    for (date, r) in dates.iter().zip(rf) {
        w.write_record(&[date.to_string(), (100.0 * r).to_string()])?;
    }
    finish(w, path)
}

/// `year,month,state`, plus a `recession` column (blank when unknown) if
/// labels are given.
pub fn write_states(path: &Path, states: &StateSequence, recession: Option<&RecessionLabels>) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["year", "month", "state"];
    if recession.is_some() {
        header.push("recession");
    }
    w.write_record(&header)?;
    for (m, s) in states.months.iter().zip(&states.labels) {
        let mut rec = vec![m.year.to_string(), m.month.to_string(), s.to_string()];
        if let Some(labels) = recession {
            rec.push(labels.get(*m).map_or(String::new(), |b| u8::from(b).to_string()));
        }
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// One merge per line; ids below the leaf count are months in order,
/// merge `i` creates id `n_leaves + i`.
pub fn write_dendrogram(path: &Path, d: &Dendrogram) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["left_id", "right_id", "height", "size"])?;
    for m in &d.merges {
        w.write_record(&[
            m.left.to_string(),
            m.right.to_string(),
            m.height.to_string(),
            m.size.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_dendrogram_tree(path: &Path, d: &Dendrogram) -> Result<()> {
    std::fs::write(path, d.to_tree_string() + "\n").map_err(|e| Error::io(path, e))
}

pub fn write_transition_matrix(path: &Path, p: &TransitionMatrix) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(state_header(p.k()))?;
    for row in p.matrix().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    finish(w, path)
}

pub fn write_steady_state(path: &Path, pi: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(state_header(pi.len()))?;
    w.write_record(pi.iter().map(|v| v.to_string()))?;
    finish(w, path)
}

pub fn write_state_weights(path: &Path, sw: &StateWeightMatrix, tickers: &[String]) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["state".to_string(), "budget".into(), "sharpe".into()];
    header.extend(tickers.iter().cloned());
    w.write_record(&header)?;
    for s in 0..sw.k() {
        let mut rec = vec![(s + 1).to_string(), sw.budgets[s].to_string(), sw.sharpes[s].to_string()];
        rec.extend(sw.w.row(s).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// `date,rf,<strategy>,<benchmarks...>`
pub fn write_daily_returns(path: &Path, r: &BacktestResult) -> Result<()> {
    let series = r.all_series();
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string(), "rf".into()];
    header.extend(series.iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    for (d, date) in r.dates.iter().enumerate() {
        let mut rec = vec![date.to_string(), r.rf[d].to_string()];
        rec.extend(series.iter().map(|s| s.returns[d].to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Daily returns as written by [`write_daily_returns`].
#[derive(Debug, Clone, PartialEq)]
pub struct StoredReturns {
    pub dates: Vec<NaiveDate>,
    pub rf: Vec<f64>,
    /// Strategy first.
    pub series: Vec<NamedSeries>,
}

pub fn read_daily_returns(path: &Path) -> Result<StoredReturns> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr.headers()?.clone();
    if header.len() < 3 || &header[0] != "date" || &header[1] != "rf" {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: "expected header date,rf,<series...>".into(),
        });
    }
    let mut out = StoredReturns {
        dates: Vec::new(),
        rf: Vec::new(),
        series: header
            .iter()
            .skip(2)
            .map(|name| NamedSeries {
                name: name.to_string(),
                returns: Vec::new(),
            })
            .collect(),
    };
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", i + 1)))
        };
        out.dates.push(
            record[0]
                .parse()
                .map_err(|e| bad(format!("date {:?}: {e}", &record[0])))?,
        );
        out.rf.push(num(1)?);
        for (j, s) in out.series.iter_mut().enumerate() {
            s.returns.push(num(j + 2)?);
        }
    }
    Ok(out)
}

/// `date,<series...>` wealth paths starting from 1.0 before the first day.
pub fn write_wealth(path: &Path, r: &BacktestResult) -> Result<()> {
    let series = r.all_series();
    let curves: Vec<Vec<f64>> = series.iter().map(|s| wealth_curve(&s.returns)).collect();
    let mut w = writer(path)?;
    let mut header = vec!["date".to_string()];
    header.extend(series.iter().map(|s| s.name.clone()));
    w.write_record(&header)?;
    for (d, date) in r.dates.iter().enumerate() {
        let mut rec = vec![date.to_string()];
        rec.extend(curves.iter().map(|c| c[d].to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Strategy target weights, one row per test month.
pub fn write_weights(path: &Path, r: &BacktestResult) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["year".to_string(), "month".into()];
    header.extend(r.tickers.iter().cloned());
    w.write_record(&header)?;
    for (m, weights) in r.weight_history() {
        let mut rec = vec![m.year.to_string(), m.month.to_string()];
        rec.extend(weights.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    /// The resolved configuration; feeding it back reproduces the run.
    pub config: BacktestConfig,
    pub seed: u64,
    pub tickers: Vec<String>,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub n_days: usize,
    pub dimensionality_warning: bool,
    pub metrics: MetricsReport,
}

impl MetricsFile {
    pub fn from_result(r: &BacktestResult) -> Self {
        Self {
            config: r.config.clone(),
            seed: r.config.seed,
            tickers: r.tickers.clone(),
            first_date: r.dates.first().copied(),
            last_date: r.dates.last().copied(),
            n_days: r.dates.len(),
            dimensionality_warning: r.dimensionality_warning,
            metrics: r.metrics.clone(),
        }
    }
}

pub fn write_metrics(path: &Path, m: &MetricsFile) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, m)?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<MetricsFile> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Write every backtest export into `dir`; returns the paths written.
pub fn export_backtest(dir: &Path, r: &BacktestResult) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut step = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        f(&path)?;
        written.push(path);
        Ok(())
    };
    step(DAILY_RETURNS_FILE, &|p| write_daily_returns(p, r))?;
    step(WEALTH_FILE, &|p| write_wealth(p, r))?;
    step(WEIGHTS_FILE, &|p| write_weights(p, r))?;
    if let Some(last) = r.snapshots.last() {
        step(STATES_FILE, &|p| write_states(p, &last.states, None))?;
        step(TRANSITION_FILE, &|p| {
            write_transition_matrix(p, &TransitionMatrix::new(crate::backtest::snapshot_matrix(last))?)
        })?;
        if let Some(pi) = &last.steady_state {
            step(STEADY_STATE_FILE, &|p| write_steady_state(p, pi))?;
        }
        step(STATE_WEIGHTS_FILE, &|p| write_state_weights(p, &last.state_weights, &r.tickers))?;
    }
    step(METRICS_FILE, &|p| write_metrics(p, &MetricsFile::from_result(r)))?;
    Ok(written)
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Human-readable summary table.
pub fn render_metrics(report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<20} {:>8} {:>12} {:>9}", "series", "sharpe", "ann.ret(%)", "mdd(%)");
    for m in &report.strategies {
        let sharpe = m.metrics.sharpe.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            s,
            "{:<20} {:>8} {:>12} {:>9}",
            m.name,
            sharpe,
            pct(m.metrics.annualized_return),
            pct(m.metrics.max_drawdown)
        );
    }
    if !report.alphas.is_empty() {
        let _ = writeln!(s, "\n{:<20} {:>14} {:>9}", "alpha vs", "ann.alpha(%)", "p-value");
        for a in &report.alphas {
            match &a.regression {
                Some(r) => {
                    let _ = writeln!(s, "{:<20} {:>14} {:>9.4}", a.benchmark, pct(r.annual_alpha), r.p_value);
                }
                None => {
                    let _ = writeln!(s, "{:<20} {:>14} {:>9}", a.benchmark, "n/a", "n/a");
                }
            }
        }
    }
    s
}
