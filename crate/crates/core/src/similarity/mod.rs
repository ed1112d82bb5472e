//! Similarity judgements and the models that predict them.

mod cosine;
mod cv;
mod embeddings;
mod kmeans;
mod lowrank;
mod mds;
mod pilesort;
mod ridge;
mod spearman;

pub use cosine::cosine_baseline;
pub use cv::{nested_cv, select_hyperparameters, CvFoldLog, CvReport, Hyperparameters, ModelFamily};
pub use embeddings::{parse_embeddings, EmbeddingSet};
pub use kmeans::{kmeans, select_representatives, KMeansResult};
pub use lowrank::{predict_similarity, train_low_rank, LowRankModel, TrainOptions, TrainReport};
pub use mds::{classical_mds, MdsResult};
pub use pilesort::{empirical_similarity, parse_pile_sort, PileAssignment, PileSortDataset};
pub use ridge::{pair_features, ridge_baseline, RidgeModel};
pub use spearman::{ranks, spearman_rho};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    /// Co-pile proportions in [0, 1] with unit diagonal.
    Empirical,
    Predicted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: DMatrix<f64>,
    kind: SimilarityKind,
    items: Vec<String>,
}

impl SimilarityMatrix {
    pub fn new(values: DMatrix<f64>, kind: SimilarityKind, items: Vec<String>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::dimension(format!("similarity matrix is {}x{}", n, values.ncols())));
        }
        if items.len() != n {
            return Err(Error::dimension(format!("{} item ids for a {n}x{n} matrix", items.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[(i, j)];
                if !v.is_finite() {
                    return Err(Error::validation(format!("similarity ({i},{j}) is {v}")));
                }
                if (v - values[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::validation(format!("similarity not symmetric at ({i},{j})")));
                }
                if kind == SimilarityKind::Empirical {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::validation(format!("empirical similarity ({i},{j}) = {v} outside [0,1]")));
                    }
                    if i == j && v != 1.0 {
                        return Err(Error::validation(format!("empirical self-similarity of item {i} is {v}")));
                    }
                }
            }
        }
        Ok(SimilarityMatrix { values, kind, items })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> SimilarityKind {
        self.kind
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Submatrix over the given item positions, in that order.
    pub fn subset(&self, idx: &[usize]) -> SimilarityMatrix {
        SimilarityMatrix {
            values: DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.values[(idx[a], idx[b])]),
            kind: self.kind,
            items: idx.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    /// Reorders to match `ids`; every id must be present.
    pub fn aligned_to(&self, ids: &[String]) -> Result<SimilarityMatrix> {
        let idx = ids
            .iter()
            .map(|id| {
                self.items
                    .iter()
                    .position(|x| x == id)
                    .ok_or_else(|| Error::dimension(format!("item `{id}` missing from similarity matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.subset(&idx))
    }

    /// Off-diagonal values at the given unordered pairs.
    pub fn pair_values(&self, pairs: &[(usize, usize)]) -> Vec<f64> {
        pairs.iter().map(|&(i, j)| self.values[(i, j)]).collect()
    }
}

/// All unordered pairs `i < j` over `n` items.
pub fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Unordered pairs with both endpoints in `items`.
pub fn pairs_within(items: &[usize]) -> Vec<(usize, usize)> {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    upper_pairs(sorted.len())
        .into_iter()
        .map(|(a, b)| (sorted[a], sorted[b]))
        .collect()
}
