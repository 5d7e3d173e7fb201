use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frontier::EfCoefficientSeries;
use crate::month::MonthKey;

/// Symmetric month-by-month distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthDistanceMatrix {
    pub months: Vec<MonthKey>,
    pub d: DMatrix<f64>,
}

impl MonthDistanceMatrix {
    pub fn new(months: Vec<MonthKey>, d: DMatrix<f64>) -> Result<Self> {
        let t = months.len();
        if d.nrows() != t || d.ncols() != t {
            return Err(Error::Argument(format!(
                "distance matrix is {}x{} for {t} months",
                d.nrows(),
                d.ncols()
            )));
        }
        for i in 0..t {
            if d[(i, i)] != 0.0 {
                return Err(Error::Argument(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = d[(i, j)];
                if !(v >= 0.0) || v != d[(j, i)] {
                    return Err(Error::Argument(format!(
                        "entry ({i},{j}) is negative, NaN or asymmetric"
                    )));
                }
            }
        }
        Ok(Self { months, d })
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }
}

/// Metric transform of a Pearson correlation, `√(2(1 − ρ))`.
pub fn correlation_distance(rho: f64) -> f64 {
    (2.0 * (1.0 - rho.clamp(-1.0, 1.0))).max(0.0).sqrt()
}

fn pearson(x: &[f64; 3], y: &[f64; 3]) -> Option<f64> {
    let mx = x.iter().sum::<f64>() / 3.0;
    let my = y.iter().sum::<f64>() / 3.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..3 {
        let dx = x[k] - mx;
        let dy = y[k] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Z-score each coefficient across months; constant coefficients map to 0.
fn standardize_rows(cols: &mut [[f64; 3]]) {
    let t = cols.len() as f64;
    for k in 0..3 {
        let mean = cols.iter().map(|c| c[k]).sum::<f64>() / t;
        let var = cols.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / (t - 1.0);
        let sd = var.sqrt();
        for c in cols.iter_mut() {
            c[k] = if sd > 0.0 { (c[k] - mean) / sd } else { 0.0 };
        }
    }
}

/// Correlation distance between every pair of months, each month being the
/// 3-vector `(r_mvp, sigma_mvp, u)`.
pub fn coefficient_correlation_distance(
    series: &EfCoefficientSeries,
    standardize: bool,
) -> Result<MonthDistanceMatrix> {
    let t = series.len();
    if t < 3 {
        return Err(Error::Argument(format!(
            "at least 3 months are required, got {t}"
        )));
    }
    let mut cols: Vec<[f64; 3]> = series.coeffs.iter().map(|c| c.interpretable()).collect();
    if standardize {
        standardize_rows(&mut cols);
    }
    for (month, c) in series.months.iter().zip(&cols) {
        if pearson(c, c).is_none() {
            log::warn!("{month}: coefficient column has zero variance; correlation set to 0");
        }
    }
    let mut d = DMatrix::zeros(t, t);
    for i in 0..t {
        for j in 0..i {
            let rho = pearson(&cols[i], &cols[j]).unwrap_or(0.0);
            let v = correlation_distance(rho);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    MonthDistanceMatrix::new(series.months.clone(), d)
}
