//! Sample moments and closed-form efficient-frontier coefficients.
//!
//! For mean vector `r` and covariance `V`, the unconstrained frontier is
//! `σ²(r) = (A r² − 2 B r + C) / (A C − B²)` with `A = eᵀV⁻¹e`,
//! `B = rᵀV⁻¹e`, `C = rᵀV⁻¹r`. The interpretable reparameterisation is the
//! vertex `(r_mvp, sigma_mvp) = (B/A, 1/√A)` and the curvature rate
//! `u = √((AC − B²)/A)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MonthlySlices, ReturnPanel};
use crate::month::MonthKey;

pub const DEFAULT_RIDGE: f64 = 1e-10;

/// Smallest eigenvalue, relative to the largest, that still counts as invertible.
const MIN_RELATIVE_EIGENVALUE: f64 = 1e-12;

/// `AC − B²` values above this (negative) bound are rounding noise.
const DISCRIMINANT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub mean: DVector<f64>,
    /// Unbiased sample covariance, with `ridge·I` added when `ridge_applied`.
    pub cov: DMatrix<f64>,
    pub n_obs: usize,
    pub ridge_applied: bool,
    chol: Cholesky<f64, Dyn>,
}

impl SampleMoments {
    /// Build from explicit moments, adding `ridge·I` only if `cov` is not
    /// invertible at working precision.
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>, n_obs: usize, ridge: f64) -> Result<Self> {
        let n = mean.len();
        if n == 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Argument(format!(
                "mean has length {n} but covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Degenerate("non-finite moments".into()));
        }
        if let Some(chol) = well_conditioned(&cov) {
            return Ok(Self {
                mean,
                cov,
                n_obs,
                ridge_applied: false,
                chol,
            });
        }
        let mut ridged = cov;
        for i in 0..n {
            ridged[(i, i)] += ridge;
        }
        let chol = well_conditioned(&ridged).ok_or(Error::SingularCovariance { ridge })?;
        Ok(Self {
            mean,
            cov: ridged,
            n_obs,
            ridge_applied: true,
            chol,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.mean.len()
    }

    /// `V⁻¹ b` via the Cholesky factor.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// Scale the covariance by `factor > 0`, keeping the mean.
    pub fn with_scaled_cov(&self, factor: f64) -> Result<Self> {
        Self::from_parts(self.mean.clone(), &self.cov * factor, self.n_obs, 0.0)
    }
}

fn well_conditioned(cov: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= max * MIN_RELATIVE_EIGENVALUE {
        return None;
    }
    Cholesky::new(sym)
}

/// Mean and unbiased covariance of the rows of `rows` (days × assets).
pub fn sample_mean_cov(rows: &DMatrix<f64>, ridge: f64) -> Result<SampleMoments> {
    let t = rows.nrows();
    if t < 2 {
        return Err(Error::Degenerate(format!(
            "sample moments need at least 2 rows, got {t}"
        )));
    }
    let n = rows.ncols();
    let mean = DVector::from_fn(n, |j, _| rows.column(j).sum() / t as f64);
    let mut centered = rows.clone();
    for j in 0..n {
        let m = mean[j];
        centered.column_mut(j).add_scalar_mut(-m);
    }
    let cov = (centered.transpose() * &centered) / (t as f64 - 1.0);
    SampleMoments::from_parts(mean, cov, t, ridge)
}

/// `(A, B, C)` for the moments' mean and covariance.
pub fn ef_raw_coefficients(m: &SampleMoments) -> Result<(f64, f64, f64)> {
    if m.mean.iter().all(|&x| x == 0.0) {
        return Err(Error::DegenerateFrontier("mean return vector is zero".into()));
    }
    let ones = DVector::from_element(m.n_assets(), 1.0);
    let inv_e = m.solve(&ones);
    let inv_r = m.solve(&m.mean);
    let a = ones.dot(&inv_e);
    let b = m.mean.dot(&inv_e);
    let c = m.mean.dot(&inv_r);
    if !(a > 0.0) {
        return Err(Error::NumericalConsistency(format!("A = {a} is not positive")));
    }
    if c < 0.0 {
        return Err(Error::NumericalConsistency(format!("C = {c} is negative")));
    }
    Ok((a, b, c))
}

/// `(r_mvp, sigma_mvp, u)` from `(A, B, C)`.
pub fn ef_interpretable(a: f64, b: f64, c: f64) -> Result<(f64, f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::Argument(format!("A must be positive, got {a}")));
    }
    let mut disc = a * c - b * b;
    if disc < 0.0 {
        if disc < -DISCRIMINANT_SLACK {
            return Err(Error::NumericalConsistency(format!("AC - B^2 = {disc} < 0")));
        }
        disc = 0.0;
    }
    Ok((b / a, 1.0 / a.sqrt(), (disc / a).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_mvp: f64,
    pub sigma_mvp: f64,
    pub u: f64,
}

impl EfCoefficients {
    pub fn from_abc(a: f64, b: f64, c: f64) -> Result<Self> {
        let (r_mvp, sigma_mvp, u) = ef_interpretable(a, b, c)?;
        Ok(Self {
            a,
            b,
            c,
            r_mvp,
            sigma_mvp,
            u,
        })
    }

    pub fn from_moments(m: &SampleMoments) -> Result<Self> {
        let (a, b, c) = ef_raw_coefficients(m)?;
        Self::from_abc(a, b, c)
    }

    /// The clustering features `(r_mvp, sigma_mvp, u)`.
    pub fn interpretable(&self) -> [f64; 3] {
        [self.r_mvp, self.sigma_mvp, self.u]
    }
}

/// Frontier variance at target return `r`, `(A r² − 2 B r + C)/(AC − B²)`.
pub fn ef_variance_at(r: f64, c: &EfCoefficients) -> Result<f64> {
    let disc = c.a * c.c - c.b * c.b;
    if !(disc > 0.0) {
        return Err(Error::DegenerateFrontier(format!("AC - B^2 = {disc}")));
    }
    Ok((c.a * r * r - 2.0 * c.b * r + c.c) / disc)
}

/// Same curve through the vertex form `((r − r_mvp)/u)² + sigma_mvp²`.
pub fn ef_variance_at_interpretable(r: f64, c: &EfCoefficients) -> Result<f64> {
    if !(c.u > 0.0) {
        return Err(Error::DegenerateFrontier("u = 0".into()));
    }
    let z = (r - c.r_mvp) / c.u;
    Ok(z * z + c.sigma_mvp * c.sigma_mvp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfCoefficientSeries {
    pub months: Vec<MonthKey>,
    pub coeffs: Vec<EfCoefficients>,
    /// Whether the diagonal ridge was needed for that month's covariance.
    pub ridge_applied: Vec<bool>,
}

impl EfCoefficientSeries {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    /// The first `n` months.
    pub fn head(&self, n: usize) -> Self {
        Self {
            months: self.months[..n].to_vec(),
            coeffs: self.coeffs[..n].to_vec(),
            ridge_applied: self.ridge_applied[..n].to_vec(),
        }
    }
}

/// One coefficient set per month, each from that month's rows only.
pub fn monthly_coefficients(
    panel: &ReturnPanel,
    slices: &MonthlySlices,
    ridge: f64,
) -> Result<EfCoefficientSeries> {
    let mut coeffs = Vec::with_capacity(slices.len());
    let mut ridge_applied = Vec::with_capacity(slices.len());
    for (month, range) in slices.months.iter().zip(&slices.ranges) {
        let rows = panel.returns.rows(range.start, range.len()).into_owned();
        let tagged = |e: Error| e.in_month(*month);
        let m = sample_mean_cov(&rows, ridge).map_err(tagged)?;
        if m.ridge_applied {
            log::warn!(
                "{month}: covariance of {} assets over {} days is singular; ridge {ridge:e} applied",
                panel.n_assets(),
                range.len()
            );
        }
        coeffs.push(EfCoefficients::from_moments(&m).map_err(tagged)?);
        ridge_applied.push(m.ridge_applied);
    }
    Ok(EfCoefficientSeries {
        months: slices.months.clone(),
        coeffs,
        ridge_applied,
    })
}
