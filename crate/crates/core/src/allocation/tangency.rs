//! Maximum-Sharpe portfolios under a budget and a gross-exposure cap.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::projection::project;
use crate::error::{Error, Result};
use crate::frontier::SampleMoments;

/// Required sum of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Budget {
    /// Σw = 1
    #[serde(rename = "1")]
    FullyInvested,
    /// Σw = 0
    #[serde(rename = "0")]
    ZeroNet,
}

impl Budget {
    pub fn value(self) -> f64 {
        match self {
            Budget::FullyInvested => 1.0,
            Budget::ZeroNet => 0.0,
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights {
    pub w: Vec<f64>,
    pub budget: Budget,
}

impl PortfolioWeights {
    pub fn gross(&self) -> f64 {
        self.w.iter().map(|x| x.abs()).sum()
    }

    pub fn net(&self) -> f64 {
        self.w.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyOptions {
    /// Keep `− r_f` in the numerator for zero-net portfolios.
    pub subtract_rf_zero_budget: bool,
    /// Seeded random starting points for the iterative search.
    pub random_starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for TangencyOptions {
    fn default() -> Self {
        Self {
            subtract_rf_zero_budget: true,
            random_starts: 4,
            seed: 0,
            max_iterations: 3000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedForm,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tangency {
    pub weights: PortfolioWeights,
    pub sharpe: f64,
    pub method: SolveMethod,
}

/// Sharpe objective `(wᵀμ − rf) / √(wᵀVw)` with the zero-budget rf rule applied.
#[derive(Debug, Clone)]
pub struct SharpeObjective<'a> {
    pub moments: &'a SampleMoments,
    pub rf: f64,
}

impl SharpeObjective<'_> {
    pub fn value(&self, w: &DVector<f64>) -> f64 {
        let var = w.dot(&(&self.moments.cov * w));
        if !(var > 0.0) {
            return f64::NEG_INFINITY;
        }
        (w.dot(&self.moments.mean) - self.rf) / var.sqrt()
    }

    /// `μ/σ − (wᵀμ − rf) V w / σ³`
    pub fn gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        let vw = &self.moments.cov * w;
        let var = w.dot(&vw);
        let sd = var.sqrt();
        let excess = w.dot(&self.moments.mean) - self.rf;
        &self.moments.mean / sd - vw * (excess / (var * sd))
    }
}

fn effective_rf(rf: f64, budget: Budget, opts: &TangencyOptions) -> f64 {
    match budget {
        Budget::ZeroNet if !opts.subtract_rf_zero_budget => 0.0,
        _ => rf,
    }
}

fn gross(w: &DVector<f64>) -> f64 {
    w.iter().map(|x| x.abs()).sum()
}

/// Fully-invested closed form `V⁻¹(μ − rf e) / eᵀV⁻¹(μ − rf e)`, if its
/// denominator is positive (otherwise the normalised point minimises Sharpe).
pub fn closed_form_tangency(m: &SampleMoments, rf: f64) -> Option<DVector<f64>> {
    let excess = m.mean.add_scalar(-rf);
    let raw = m.solve(&excess);
    let denom = raw.sum();
    (denom > 0.0 && denom.is_finite()).then(|| raw / denom)
}

/// Direction maximising `wᵀx/σ` on `Σw = 0`, scaled to gross exposure 1.
fn zero_net_direction(m: &SampleMoments, x: &DVector<f64>) -> Option<DVector<f64>> {
    let ones = DVector::from_element(m.n_assets(), 1.0);
    let inv_x = m.solve(x);
    let inv_e = m.solve(&ones);
    let lambda = inv_x.sum() / inv_e.sum();
    let d = inv_x - inv_e * lambda;
    let g = gross(&d);
    (g > 0.0 && g.is_finite()).then(|| d / g)
}

/// Maximise the Sharpe ratio subject to `Σw = budget` and `Σ|w| ≤ gross_cap`.
pub fn tangency_portfolio(
    m: &SampleMoments,
    rf: f64,
    budget: Budget,
    gross_cap: f64,
    opts: &TangencyOptions,
) -> Result<Tangency> {
    let n = m.n_assets();
    let b = budget.value();
    if !(gross_cap >= b.abs()) {
        return Err(Error::Argument(format!(
            "gross cap {gross_cap} cannot hold budget {b}"
        )));
    }
    if budget == Budget::ZeroNet && (n < 2 || gross_cap == 0.0) {
        return Err(Error::Argument(
            "zero-net portfolio needs at least 2 assets and a positive gross cap".into(),
        ));
    }
    let rf_eff = effective_rf(rf, budget, opts);
    let objective = SharpeObjective { moments: m, rf: rf_eff };

    if budget == Budget::FullyInvested {
        if n == 1 {
            let w = DVector::from_element(1, 1.0);
            return Ok(finish(&objective, w, budget, SolveMethod::ClosedForm));
        }
        if let Some(w) = closed_form_tangency(m, rf_eff) {
            if gross(&w) <= gross_cap {
                return Ok(finish(&objective, w, budget, SolveMethod::ClosedForm));
            }
        }
    }
    if !gross_cap.is_finite() {
        return Err(Error::Degenerate(
            "no interior maximum and no finite gross cap to bound the search".into(),
        ));
    }

    let starts = starting_points(m, rf_eff, budget, gross_cap, opts);
    let mut best: Option<(DVector<f64>, f64)> = None;
    for start in starts {
        let (w, s) = ascend(&objective, project(&start, b, gross_cap), b, gross_cap, opts.max_iterations);
        if best.as_ref().is_none_or(|(_, bs)| s > *bs) {
            best = Some((w, s));
        }
    }
    let (mut w, mut s) = best.expect("at least one starting point");
    if let Some((pw, ps)) = polish(&objective, &w, budget, gross_cap) {
        if ps >= s {
            w = pw;
            s = ps;
        }
    }
    if budget == Budget::ZeroNet {
        // the objective is non-decreasing in scale when rf ≥ 0 and the excess is positive
        let g = gross(&w);
        if g > 0.0 && g < gross_cap {
            let scaled = &w * (gross_cap / g);
            let ss = objective.value(&scaled);
            if ss >= s {
                w = scaled;
            }
        }
    }
    Ok(finish(&objective, w, budget, SolveMethod::Iterative))
}

fn finish(objective: &SharpeObjective<'_>, w: DVector<f64>, budget: Budget, method: SolveMethod) -> Tangency {
    let sharpe = objective.value(&w);
    if !(sharpe > 0.0) {
        log::warn!("no feasible portfolio with positive excess return; best Sharpe is {sharpe:.4}");
    }
    Tangency {
        weights: PortfolioWeights {
            w: w.iter().copied().collect(),
            budget,
        },
        sharpe,
        method,
    }
}

fn starting_points(
    m: &SampleMoments,
    rf: f64,
    budget: Budget,
    cap: f64,
    opts: &TangencyOptions,
) -> Vec<DVector<f64>> {
    let n = m.n_assets();
    let mut starts = Vec::new();
    match budget {
        Budget::FullyInvested => {
            let excess = m.mean.add_scalar(-rf);
            let raw = m.solve(&excess);
            if raw.sum() != 0.0 {
                starts.push(&raw / raw.sum());
            }
            starts.push(DVector::from_element(n, 1.0 / n as f64));
            let best_asset = (0..n)
                .max_by(|&i, &j| {
                    let si = excess[i] / m.cov[(i, i)].sqrt();
                    let sj = excess[j] / m.cov[(j, j)].sqrt();
                    si.total_cmp(&sj)
                })
                .unwrap_or(0);
            let mut single = DVector::zeros(n);
            single[best_asset] = 1.0;
            starts.push(single);
        }
        Budget::ZeroNet => {
            // with Σw = 0 and gross = cap, rf acts on wᵀσ/cap; start from the rf-free direction
            if let Some(d) = zero_net_direction(m, &m.mean) {
                starts.push(&d * cap);
                starts.push(&d * (-cap));
            }
            let mut best_pair = None;
            let mut best_value = f64::NEG_INFINITY;
            let objective = SharpeObjective { moments: m, rf };
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let mut w = DVector::zeros(n);
                        w[i] = cap / 2.0;
                        w[j] = -cap / 2.0;
                        let v = objective.value(&w);
                        if v > best_value {
                            best_value = v;
                            best_pair = Some(w);
                        }
                    }
                }
            }
            starts.extend(best_pair);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        let z: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        starts.push(z * (cap / n as f64).max(0.1));
    }
    starts
}

/// Projected ascent with an adaptive, normalised step.
fn ascend(
    objective: &SharpeObjective<'_>,
    start: DVector<f64>,
    budget: f64,
    cap: f64,
    max_iterations: usize,
) -> (DVector<f64>, f64) {
    let mut w = start;
    let mut s = objective.value(&w);
    if !s.is_finite() {
        return (w, s);
    }
    let mut step = 0.1 * cap.max(1.0);
    let min_step = 1e-13 * cap.max(1.0);
    // stop once a window of iterations no longer moves the objective; the
    // face polish finishes the job exactly
    const WINDOW: usize = 50;
    let mut checkpoint = s;
    for it in 1..=max_iterations {
        if it % WINDOW == 0 {
            if s - checkpoint <= 1e-13 * s.abs().max(1e-300) {
                break;
            }
            checkpoint = s;
        }
        let g = objective.gradient(&w);
        let norm = g.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        let candidate = project(&(&w + &g * (step / norm)), budget, cap);
        let cs = objective.value(&candidate);
        if cs > s {
            w = candidate;
            s = cs;
            step = (step * 2.0).min(4.0 * cap.max(1.0));
        } else {
            step *= 0.5;
            if step < min_step {
                break;
            }
        }
    }
    (w, s)
}

/// Exact maximiser on the face of the feasible set that `w` lies on: same
/// sign pattern, same zero set, and the gross bound active or not.
fn polish(
    objective: &SharpeObjective<'_>,
    w: &DVector<f64>,
    budget: Budget,
    cap: f64,
) -> Option<(DVector<f64>, f64)> {
    let m = objective.moments;
    let n = w.len();
    let scale = w.amax().max(1e-300);
    let free: Vec<usize> = (0..n).filter(|&i| w[i].abs() > 1e-9 * scale).collect();
    if free.is_empty() {
        return None;
    }
    let sign: Vec<f64> = free.iter().map(|&i| w[i].signum()).collect();
    let gross_active = (gross(w) - cap).abs() <= 1e-9 * cap.max(1.0);

    let v = DMatrix::from_fn(free.len(), free.len(), |a, b| m.cov[(free[a], free[b])]);
    let mu = DVector::from_fn(free.len(), |a, _| m.mean[free[a]]);
    let sigma = DVector::from_vec(sign.clone());
    let ones = DVector::from_element(free.len(), 1.0);
    let rf = objective.rf;

    // objective x, homogeneous constraint c, and normaliser q with qᵀz = target
    let (x, c, q, target) = match (budget, gross_active) {
        (Budget::FullyInvested, false) => (mu.add_scalar(-rf), None, ones.clone(), 1.0),
        (Budget::FullyInvested, true) => {
            (mu.add_scalar(-rf), Some(&sigma - &ones * cap), ones.clone(), 1.0)
        }
        (Budget::ZeroNet, true) => (&mu - &sigma * (rf / cap), Some(ones.clone()), sigma.clone(), cap),
        (Budget::ZeroNet, false) => return None,
    };
    let chol = v.clone().cholesky()?;
    let inv_x = chol.solve(&x);
    let z = match c {
        None => inv_x,
        Some(c) => {
            let inv_c = chol.solve(&c);
            let cc = c.dot(&inv_c);
            if !(cc.abs() > 0.0) {
                return None;
            }
            &inv_x - inv_c * (c.dot(&inv_x) / cc)
        }
    };
    let qz = q.dot(&z);
    if !(qz > 0.0) {
        return None;
    }
    let z = z * (target / qz);
    let mut out = DVector::zeros(n);
    for (a, &i) in free.iter().enumerate() {
        if z[a] * sign[a] < 0.0 {
            return None;
        }
        out[i] = z[a];
    }
    if gross(&out) > cap * (1.0 + 1e-12) || (out.sum() - budget.value()).abs() > 1e-10 {
        return None;
    }
    let s = objective.value(&out);
    s.is_finite().then_some((out, s))
}
