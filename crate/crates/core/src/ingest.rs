//! Price, risk-free and recession-indicator ingestion.
//!
//! Prices arrive as a wide table (`date,<ticker1>,<ticker2>,...`). Rows with
//! any blank cell are dropped so that every remaining date has a price for
//! every asset. Returns are simple daily returns; the risk-free file uses the
//! Fama-French daily convention (percent per day) and is forward-filled onto
//! the return dates.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::month::MonthKey;

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// dates × tickers
    pub prices: DMatrix<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: DMatrix<f64>) -> Result<Self> {
        if prices.nrows() != dates.len() || prices.ncols() != tickers.len() {
            return Err(Error::Validation(format!(
                "price matrix is {}x{} but there are {} dates and {} tickers",
                prices.nrows(),
                prices.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        check_strictly_increasing(&dates)?;
        if let Some(((r, c), p)) = prices
            .iter()
            .enumerate()
            .map(|(k, p)| ((k % dates.len().max(1), k / dates.len().max(1)), p))
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::Validation(format!(
                "non-positive price {p} for {} on {}",
                tickers[c], dates[r]
            )));
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }
}

/// Daily simple returns with an aligned risk-free series.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// dates × tickers
    pub returns: DMatrix<f64>,
    /// Daily risk-free rate as a decimal, one per date.
    pub rf: Vec<f64>,
}

/// A ticker with its daily returns.
pub type NamedColumn = (String, Vec<f64>);

impl ReturnPanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        returns: DMatrix<f64>,
        rf: Vec<f64>,
    ) -> Result<Self> {
        if returns.nrows() != dates.len() || returns.ncols() != tickers.len() {
            return Err(Error::Validation(format!(
                "return matrix is {}x{} but there are {} dates and {} tickers",
                returns.nrows(),
                returns.ncols(),
                dates.len(),
                tickers.len()
            )));
        }
        if rf.len() != dates.len() {
            return Err(Error::Validation(format!(
                "{} risk-free values for {} dates",
                rf.len(),
                dates.len()
            )));
        }
        check_strictly_increasing(&dates)?;
        if let Some(r) = returns.iter().find(|r| !(r.is_finite() && **r > -1.0)) {
            return Err(Error::Validation(format!("return {r} is not > -1")));
        }
        if let Some(r) = rf.iter().find(|r| !r.is_finite()) {
            return Err(Error::Validation(format!("non-finite risk-free rate {r}")));
        }
        Ok(Self {
            dates,
            tickers,
            returns,
            rf,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    /// Split off the named columns, returning `(remaining universe, removed
    /// columns as (ticker, daily returns))`.
    pub fn split_off(&self, tickers: &[String]) -> Result<(ReturnPanel, Vec<NamedColumn>)> {
        let mut removed = Vec::new();
        let mut keep = Vec::new();
        for t in tickers {
            if self.ticker_index(t).is_none() {
                return Err(Error::Argument(format!("unknown ticker {t}")));
            }
        }
        for (j, t) in self.tickers.iter().enumerate() {
            if tickers.contains(t) {
                removed.push((t.clone(), self.returns.column(j).iter().copied().collect()));
            } else {
                keep.push(j);
            }
        }
        if keep.is_empty() {
            return Err(Error::Argument("no assets left in the universe".into()));
        }
        let returns = self.returns.select_columns(keep.iter());
        let kept_tickers = keep.iter().map(|&j| self.tickers[j].clone()).collect();
        Ok((
            ReturnPanel {
                dates: self.dates.clone(),
                tickers: kept_tickers,
                returns,
                rf: self.rf.clone(),
            },
            removed,
        ))
    }
}

/// Daily risk-free observations as decimals.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskFreeSeries {
    pub dates: Vec<NaiveDate>,
    pub rates: Vec<f64>,
}

impl RiskFreeSeries {
    /// Most recent observation on or before `date`.
    pub fn value_at(&self, date: NaiveDate) -> Option<f64> {
        let idx = self.dates.partition_point(|d| *d <= date);
        (idx > 0).then(|| self.rates[idx - 1])
    }
}

/// Contiguous daily row blocks, one per calendar month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySlices {
    pub months: Vec<MonthKey>,
    pub ranges: Vec<Range<usize>>,
}

impl MonthlySlices {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn index_of(&self, month: MonthKey) -> Option<usize> {
        self.months.binary_search(&month).ok()
    }

    /// Median number of trading days per month.
    pub fn median_days(&self) -> f64 {
        let mut n: Vec<usize> = self.ranges.iter().map(|r| r.len()).collect();
        if n.is_empty() {
            return 0.0;
        }
        n.sort_unstable();
        let mid = n.len() / 2;
        if n.len() % 2 == 1 {
            n[mid] as f64
        } else {
            (n[mid - 1] + n[mid]) as f64 / 2.0
        }
    }
}

/// Per-month binary recession indicator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecessionLabels {
    pub by_month: BTreeMap<MonthKey, bool>,
}

impl RecessionLabels {
    /// `None` when the month is absent from the source file.
    pub fn get(&self, month: MonthKey) -> Option<bool> {
        self.by_month.get(&month).copied()
    }
}

fn check_strictly_increasing(dates: &[NaiveDate]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Validation(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn parse_date(s: &str, path: &Path, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad date {s:?}: {e}"),
    })
}

fn parse_number(s: &str, path: &Path, line: u64) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("bad number {s:?}"),
    })
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

pub fn load_price_panel(path: impl AsRef<Path>, date_column: &str) -> Result<PricePanel> {
    let path = path.as_ref();
    read_price_panel(open(path)?, path, date_column)
}

/// Parse a wide price table. `source` only labels error messages.
pub fn read_price_panel<R: Read>(reader: R, source: &Path, date_column: &str) -> Result<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let date_idx = header
        .iter()
        .position(|h| h == date_column)
        .ok_or_else(|| Error::Parse {
            path: source.to_path_buf(),
            line: 1,
            message: format!("no {date_column:?} column in header"),
        })?;
    let asset_cols: Vec<usize> = (0..header.len()).filter(|&i| i != date_idx).collect();
    if asset_cols.len() < 2 {
        return Err(Error::Validation(format!(
            "{}: at least 2 asset columns are required, found {}",
            source.display(),
            asset_cols.len()
        )));
    }
    let tickers: Vec<String> = asset_cols.iter().map(|&i| header[i].to_string()).collect();

    let mut rows: Vec<(NaiveDate, Vec<f64>)> = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let date = parse_date(&record[date_idx], source, line)?;
        if !seen.insert(date) {
            return Err(Error::Validation(format!(
                "{}: line {line}: duplicate date {date}",
                source.display()
            )));
        }
        let mut values = Vec::with_capacity(asset_cols.len());
        let mut complete = true;
        for &i in &asset_cols {
            let cell = &record[i];
            if cell.is_empty() {
                complete = false;
                continue;
            }
            let p = parse_number(cell, source, line)?;
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Validation(format!(
                    "{}: line {line}: non-positive price {p} for {}",
                    source.display(),
                    &header[i]
                )));
            }
            values.push(p);
        }
        if complete {
            rows.push((date, values));
        }
    }
    rows.sort_by_key(|(d, _)| *d);

    let n = asset_cols.len();
    let prices = DMatrix::from_fn(rows.len(), n, |r, c| rows[r].1[c]);
    let dates = rows.into_iter().map(|(d, _)| d).collect();
    PricePanel::new(dates, tickers, prices)
}

pub fn load_risk_free(path: impl AsRef<Path>) -> Result<RiskFreeSeries> {
    let path = path.as_ref();
    read_risk_free(open(path)?, path)
}

/// Parse a `date,rf` table with rf in percent per day.
pub fn read_risk_free<R: Read>(reader: R, source: &Path) -> Result<RiskFreeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let (date_idx, rf_idx) = match (
        header.iter().position(|h| h.eq_ignore_ascii_case("date")),
        header.iter().position(|h| h.eq_ignore_ascii_case("rf")),
    ) {
        (Some(d), Some(r)) => (d, r),
        _ => {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line: 1,
                message: "risk-free header must contain `date` and `rf`".into(),
            })
        }
    };
    let mut obs = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        let date = parse_date(record.get(date_idx).unwrap_or(""), source, line)?;
        let pct = parse_number(record.get(rf_idx).unwrap_or(""), source, line)?;
        obs.push((date, pct / 100.0));
    }
    obs.sort_by_key(|(d, _)| *d);
    check_strictly_increasing(&obs.iter().map(|(d, _)| *d).collect::<Vec<_>>())?;
    Ok(RiskFreeSeries {
        dates: obs.iter().map(|(d, _)| *d).collect(),
        rates: obs.iter().map(|(_, r)| *r).collect(),
    })
}

/// Simple daily returns with the risk-free rate read from `rf_path`.
pub fn compute_returns(panel: &PricePanel, rf_path: impl AsRef<Path>) -> Result<ReturnPanel> {
    let rf = load_risk_free(rf_path)?;
    returns_with_risk_free(panel, &rf)
}

pub fn returns_with_risk_free(panel: &PricePanel, rf: &RiskFreeSeries) -> Result<ReturnPanel> {
    let t = panel.dates.len();
    if t < 2 {
        return Err(Error::Validation(format!(
            "at least 2 price dates are required, found {t}"
        )));
    }
    let p = &panel.prices;
    let returns = DMatrix::from_fn(t - 1, panel.n_assets(), |r, c| p[(r + 1, c)] / p[(r, c)] - 1.0);
    let dates: Vec<NaiveDate> = panel.dates[1..].to_vec();
    let rf = dates
        .iter()
        .map(|&d| rf.value_at(d).ok_or(Error::Coverage(d)))
        .collect::<Result<Vec<_>>>()?;
    ReturnPanel::new(dates, panel.tickers.clone(), returns, rf)
}

/// Partition daily rows by calendar month.
pub fn group_by_month(panel: &ReturnPanel) -> Result<MonthlySlices> {
    if panel.dates.is_empty() {
        return Err(Error::Validation("return panel is empty".into()));
    }
    let mut months = Vec::new();
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..=panel.dates.len() {
        let boundary =
            i == panel.dates.len() || MonthKey::of(panel.dates[i]) != MonthKey::of(panel.dates[start]);
        if boundary {
            let month = MonthKey::of(panel.dates[start]);
            if i - start < 2 {
                return Err(Error::DegenerateMonth {
                    month,
                    rows: i - start,
                });
            }
            months.push(month);
            ranges.push(start..i);
            start = i;
        }
    }
    Ok(MonthlySlices { months, ranges })
}

pub fn load_recession_labels(path: impl AsRef<Path>) -> Result<RecessionLabels> {
    let path = path.as_ref();
    read_recession_labels(open(path)?, path)
}

/// Parse a `date,indicator` table; any date within a month labels that month.
pub fn read_recession_labels<R: Read>(reader: R, source: &Path) -> Result<RecessionLabels> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut by_month = BTreeMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() < 2 {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line,
                message: "expected `date,indicator`".into(),
            });
        }
        let date = parse_date(&record[0], source, line)?;
        let flag = match record[1].trim() {
            "0" | "0.0" => false,
            "1" | "1.0" => true,
            other => {
                return Err(Error::Validation(format!(
                    "{}: line {line}: indicator must be 0 or 1, got {other:?}",
                    source.display()
                )))
            }
        };
        by_month.insert(MonthKey::of(date), flag);
    }
    Ok(RecessionLabels { by_month })
}
