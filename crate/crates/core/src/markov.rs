//! Observable Markov chain over month states.
//!
//! Rows of the transition matrix are the source state: `p[(i, j)]` is the
//! probability of moving from state `i + 1` to state `j + 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::StateSequence;

pub const STEADY_STATE_TOLERANCE: f64 = 1e-12;
pub const STEADY_STATE_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    /// Validate a row-stochastic matrix.
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() == 0 || p.nrows() != p.ncols() {
            return Err(Error::Argument(format!(
                "transition matrix must be square and non-empty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        for (i, row) in p.row_iter().enumerate() {
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::Argument(format!("row {} has entries outside [0, 1]", i + 1)));
            }
            let s = row.sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Argument(format!("row {} sums to {s}", i + 1)));
            }
        }
        Ok(Self { p })
    }

    /// Scale every row to sum to one, e.g. for matrices printed to two decimals.
    pub fn renormalized(mut p: DMatrix<f64>) -> Result<Self> {
        for mut row in p.row_iter_mut() {
            let s = row.sum();
            if s > 0.0 {
                row /= s;
            }
        }
        Self::new(p)
    }

    pub fn k(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.p[(from - 1, to - 1)]
    }
}

/// Raw transition counts, `counts[(i, j)]` = number of `i+1 → j+1` steps.
pub fn transition_counts(s: &StateSequence) -> DMatrix<f64> {
    let k = s.k;
    let mut counts = DMatrix::zeros(k, k);
    for w in s.labels.windows(2) {
        counts[(w[0] - 1, w[1] - 1)] += 1.0;
    }
    counts
}

/// Maximum-likelihood estimate; states that never depart get a uniform row.
pub fn estimate_transition_matrix(s: &StateSequence) -> Result<TransitionMatrix> {
    estimate_transition_matrix_smoothed(s, 0.0)
}

/// As [`estimate_transition_matrix`], adding `pseudo_count` to every cell.
pub fn estimate_transition_matrix_smoothed(
    s: &StateSequence,
    pseudo_count: f64,
) -> Result<TransitionMatrix> {
    if s.len() < 2 {
        return Err(Error::Argument(format!(
            "transition estimation needs at least 2 labels, got {}",
            s.len()
        )));
    }
    if !(pseudo_count >= 0.0) {
        return Err(Error::Argument(format!(
            "pseudo-count must be non-negative, got {pseudo_count}"
        )));
    }
    let k = s.k;
    let mut p = transition_counts(s).add_scalar(pseudo_count);
    for mut row in p.row_iter_mut() {
        let departures = row.sum();
        if departures > 0.0 {
            row /= departures;
        } else {
            row.fill(1.0 / k as f64);
        }
    }
    Ok(TransitionMatrix { p })
}

/// Row `current` of `p` (1-based), the next-state distribution.
pub fn transition_row(p: &TransitionMatrix, current: usize) -> Result<DVector<f64>> {
    if current == 0 || current > p.k() {
        return Err(Error::Argument(format!(
            "state {current} outside 1..={}",
            p.k()
        )));
    }
    Ok(p.p.row(current - 1).transpose())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub pi: Vec<f64>,
    pub iterations: usize,
}

/// Stationary distribution by power iteration from the uniform vector.
pub fn steady_state(p: &TransitionMatrix) -> Result<SteadyState> {
    let k = p.k();
    let pt = p.p.transpose();
    let mut pi = DVector::from_element(k, 1.0 / k as f64);
    for it in 1..=STEADY_STATE_MAX_ITERATIONS {
        let mut next = &pt * &pi;
        let s = next.sum();
        next /= s;
        let delta = (&next - &pi).amax();
        pi = next;
        if delta < STEADY_STATE_TOLERANCE {
            return Ok(SteadyState {
                pi: pi.iter().copied().collect(),
                iterations: it,
            });
        }
    }
    Err(Error::ReducibleChain {
        iterations: STEADY_STATE_MAX_ITERATIONS,
        last_iterate: pi.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::month::MonthKey;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn seq(labels: &[usize], k: usize) -> StateSequence {
        let months = (0..labels.len())
            .map(|i| MonthKey::new(1990 + (i / 12) as i32, (i % 12) as u32 + 1).unwrap())
            .collect();
        StateSequence::new(months, labels.to_vec(), k).unwrap()
    }

    #[test]
    fn worked_example_rows() {
        let p = estimate_transition_matrix(&seq(&[2, 2, 1, 2, 2], 2)).unwrap();
        assert_eq!(p.get(1, 1), 0.0);
        assert_eq!(p.get(1, 2), 1.0);
        assert!((p.get(2, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.get(2, 2) - 2.0 / 3.0).abs() < 1e-15);
        let row = transition_row(&p, 2).unwrap();
        assert!((row[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((row.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn absorbing_plus_unvisited_state() {
        let p = estimate_transition_matrix(&seq(&[1, 1, 1, 1], 2)).unwrap();
        assert_eq!(p.matrix().row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0]);
        assert_eq!(p.matrix().row(1).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.5]);
    }

    #[test]
    fn final_position_only_state_gets_uniform_row() {
        let p = estimate_transition_matrix(&seq(&[1, 2, 1, 3], 3)).unwrap();
        assert_eq!(p.matrix().row(2).iter().copied().collect::<Vec<_>>(), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn too_short() {
        assert!(estimate_transition_matrix(&seq(&[1], 2)).is_err());
    }

    #[test]
    fn smoothing_adds_pseudo_counts() {
        let p = estimate_transition_matrix_smoothed(&seq(&[1, 1, 2], 2), 1.0).unwrap();
        // row 1: counts (1, 1) + 1 each
        assert_eq!(p.get(1, 1), 0.5);
        // row 2: no departures, (0, 0) + 1 each
        assert_eq!(p.get(2, 2), 0.5);
    }

    #[test]
    fn row_selection() {
        let id = TransitionMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(transition_row(&id, 1).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        let uni = TransitionMatrix::new(DMatrix::from_element(4, 4, 0.25)).unwrap();
        assert_eq!(transition_row(&uni, 3).unwrap().as_slice(), &[0.25; 4]);
        assert!(transition_row(&uni, 0).is_err());
        assert!(transition_row(&uni, 5).is_err());
    }

    #[test]
    fn symmetric_chain_steady_state() {
        let p = TransitionMatrix::new(DMatrix::from_element(2, 2, 0.5)).unwrap();
        let ss = steady_state(&p).unwrap();
        assert!((ss.pi[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_start_converges() {
        let p = TransitionMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        // uniform start is already stationary for the flip chain
        assert!(steady_state(&p).is_ok());
        let p3 = TransitionMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        ))
        .unwrap();
        assert!(steady_state(&p3).is_ok());
    }

    #[test]
    fn non_convergent_chain_reports_last_iterate() {
        // period 2 with an unequal start-up: states 1,2 flip, state 3 feeds 1
        let p = TransitionMatrix::new(DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        ))
        .unwrap();
        match steady_state(&p) {
            Err(Error::ReducibleChain { last_iterate, .. }) => {
                assert!((last_iterate.iter().sum::<f64>() - 1.0).abs() < 1e-12)
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn steady_state_matches_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let raw = DMatrix::from_fn(4, 4, |_, _| rng.random_range(0.05..1.0));
            let p = TransitionMatrix::renormalized(raw).unwrap();
            let ss = steady_state(&p).unwrap();
            // (Pᵀ − I) π = 0 with the last equation replaced by Σπ = 1
            let mut a = p.matrix().transpose() - DMatrix::identity(4, 4);
            let mut b = DVector::zeros(4);
            a.row_mut(3).fill(1.0);
            b[3] = 1.0;
            let direct = a.lu().solve(&b).unwrap();
            for i in 0..4 {
                assert!((ss.pi[i] - direct[i]).abs() < 1e-10);
            }
            let pi = DVector::from_vec(ss.pi.clone());
            let residual = (p.matrix().transpose() * &pi - &pi).amax();
            assert!(residual <= 1e-8);
        }
    }

    proptest::proptest! {
        #[test]
        fn rows_stochastic_and_counts_conserved(
            labels in proptest::collection::vec(1usize..=4, 2..80)
        ) {
            let s = seq(&labels, 4);
            let p = estimate_transition_matrix(&s).unwrap();
            for row in p.matrix().row_iter() {
                proptest::prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            }
            let counts = transition_counts(&s);
            for i in 1..=4 {
                let occurrences = labels[..labels.len() - 1].iter().filter(|&&l| l == i).count();
                proptest::prop_assert_eq!(counts.row(i - 1).sum(), occurrences as f64);
            }
        }

        #[test]
        fn relabeling_permutes_the_matrix(
            labels in proptest::collection::vec(1usize..=3, 2..60),
            perm_idx in 0usize..6,
        ) {
            let perms = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
            let sigma = perms[perm_idx];
            let p = estimate_transition_matrix(&seq(&labels, 3)).unwrap();
            let relabeled: Vec<usize> = labels.iter().map(|&l| sigma[l - 1]).collect();
            let q = estimate_transition_matrix(&seq(&relabeled, 3)).unwrap();
            for i in 1..=3 {
                for j in 1..=3 {
                    proptest::prop_assert_eq!(p.get(i, j), q.get(sigma[i - 1], sigma[j - 1]));
                }
            }
        }
    }
}
