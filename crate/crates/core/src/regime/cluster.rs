//! Agglomerative hierarchical clustering over a precomputed distance matrix.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MonthDistanceMatrix;
use crate::error::{Error, Result};
use crate::month::MonthKey;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Single,
    Complete,
    #[default]
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage {other:?}")),
        }
    }
}

/// One agglomeration step. Leaves are `0..n`; the cluster formed by merge
/// `k` gets id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Flat labels `1..=k` after undoing all but the first `n − k` merges.
    /// Labels follow the order of each cluster's earliest leaf.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(Error::Argument(format!(
                "cluster count {k} must lie in 1..={n}"
            )));
        }
        // representative leaf of every node id
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut node_leaf: Vec<usize> = (0..n).collect();
        for merge in &self.merges[..n - k] {
            let a = find(&mut parent, node_leaf[merge.left]);
            let b = find(&mut parent, node_leaf[merge.right]);
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
            node_leaf.push(lo);
        }
        let mut label_of_root = vec![0usize; n];
        let mut next = 0;
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            if label_of_root[root] == 0 {
                next += 1;
                label_of_root[root] = next;
            }
            labels.push(label_of_root[root]);
        }
        Ok(labels)
    }

    /// Nested-parenthesis tree, e.g. `((0,1):0.1,2):0.7`.
    pub fn to_tree_string(&self) -> String {
        let n = self.n_leaves;
        let mut repr: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        for m in &self.merges {
            repr.push(format!("({},{}):{}", repr[m.left], repr[m.right], m.height));
        }
        repr.pop().unwrap_or_default()
    }
}

/// Month-to-state assignment with labels in `1..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSequence {
    pub months: Vec<MonthKey>,
    pub labels: Vec<usize>,
    pub k: usize,
}

impl StateSequence {
    pub fn new(months: Vec<MonthKey>, labels: Vec<usize>, k: usize) -> Result<Self> {
        if months.len() != labels.len() {
            return Err(Error::Argument(format!(
                "{} months but {} labels",
                months.len(),
                labels.len()
            )));
        }
        if k == 0 {
            return Err(Error::Argument("state count must be positive".into()));
        }
        if let Some(l) = labels.iter().find(|&&l| l == 0 || l > k) {
            return Err(Error::Argument(format!("label {l} outside 1..={k}")));
        }
        Ok(Self { months, labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn last(&self) -> Option<usize> {
        self.labels.last().copied()
    }
}

/// Agglomerate with the chosen linkage, then cut into exactly `k` clusters.
///
/// At equal distance the pair with the lexicographically smallest
/// `(lower id, higher id)` merges first.
pub fn hierarchical_cluster(
    d: &MonthDistanceMatrix,
    k: usize,
    linkage: Linkage,
) -> Result<(StateSequence, Dendrogram)> {
    let n = d.len();
    if k < 2 || k > n {
        return Err(Error::Argument(format!(
            "cluster count {k} must lie in 2..={n}"
        )));
    }
    let dendrogram = agglomerate(d, linkage);
    let labels = dendrogram.cut(k)?;
    Ok((StateSequence::new(d.months.clone(), labels, k)?, dendrogram))
}

pub fn agglomerate(d: &MonthDistanceMatrix, linkage: Linkage) -> Dendrogram {
    let n = d.len();
    let mut dist: Vec<f64> = d.d.transpose().as_slice().to_vec(); // row-major n×n
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let v = dist[a * n + b];
                let (lo, hi) = (id[a].min(id[b]), id[a].max(id[b]));
                let better = match best {
                    None => true,
                    Some((bv, blo, bhi, _, _)) => v < bv || (v == bv && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((v, lo, hi, a, b));
                }
            }
        }
        let (height, lo, hi, a, b) = best.expect("at least two active clusters");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &c in &active {
            if c == a || c == b {
                continue;
            }
            let (da, db) = (dist[c * n + a], dist[c * n + b]);
            let v = match linkage {
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
                Linkage::Average => (na * da + nb * db) / (na + nb),
            };
            dist[c * n + a] = v;
            dist[a * n + c] = v;
        }
        merges.push(Merge {
            left: lo,
            right: hi,
            height,
            size: size[a] + size[b],
        });
        size[a] += size[b];
        id[a] = n + step;
        active.retain(|&c| c != b);
    }
    Dendrogram { n_leaves: n, merges }
}
