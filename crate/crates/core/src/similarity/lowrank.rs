use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, SimilarityKind, SimilarityMatrix};
use crate::error::{Error, Result};

/// Bilinear similarity `(P f_i) . (P f_j)` with a `rank x dim` projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct LowRankModel {
    projection: DMatrix<f64>,
    penalty: f64,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    rank: usize,
    dim: usize,
    penalty: f64,
    projection: Vec<Vec<f64>>,
}

impl From<LowRankModel> for RawModel {
    fn from(m: LowRankModel) -> Self {
        RawModel {
            rank: m.rank(),
            dim: m.dim(),
            penalty: m.penalty,
            projection: m.projection.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<RawModel> for LowRankModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        if raw.projection.len() != raw.rank || raw.projection.iter().any(|r| r.len() != raw.dim) {
            return Err(Error::dimension(format!(
                "projection does not have shape {}x{}",
                raw.rank, raw.dim
            )));
        }
        let p = DMatrix::from_fn(raw.rank, raw.dim, |i, j| raw.projection[i][j]);
        LowRankModel::new(p, raw.penalty)
    }
}

impl LowRankModel {
    pub fn new(projection: DMatrix<f64>, penalty: f64) -> Result<Self> {
        if projection.nrows() == 0 || projection.nrows() > projection.ncols() {
            return Err(Error::validation(format!(
                "projection rank {} must be in 1..={}",
                projection.nrows(),
                projection.ncols()
            )));
        }
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("projection has non-finite entries"));
        }
        Ok(LowRankModel { projection, penalty })
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn rank(&self) -> usize {
        self.projection.nrows()
    }

    pub fn dim(&self) -> usize {
        self.projection.ncols()
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    /// Projected embeddings, one column per item.
    fn project(&self, e: &EmbeddingSet) -> Result<DMatrix<f64>> {
        if e.dim() != self.dim() {
            return Err(Error::dimension(format!(
                "model expects dimension {}, embeddings have {}",
                self.dim(),
                e.dim()
            )));
        }
        Ok(&self.projection * e.matrix().transpose())
    }

    pub fn predict_matrix(&self, e: &EmbeddingSet) -> Result<SimilarityMatrix> {
        let g = self.project(e)?;
        let mut s = g.transpose() * &g;
        // exact symmetry
        for i in 0..s.nrows() {
            for j in i + 1..s.ncols() {
                let v = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        SimilarityMatrix::new(s, SimilarityKind::Predicted, e.ids().to_vec())
    }
}

/// Predicted similarity `(P f_i) . (P f_j)`.
pub fn predict_similarity(model: &LowRankModel, f_i: &[f64], f_j: &[f64]) -> Result<f64> {
    if f_i.len() != model.dim() || f_j.len() != model.dim() {
        return Err(Error::dimension(format!(
            "model expects dimension {}, got {} and {}",
            model.dim(),
            f_i.len(),
            f_j.len()
        )));
    }
    let a = &model.projection * DVector::from_column_slice(f_i);
    let b = &model.projection * DVector::from_column_slice(f_j);
    Ok(a.dot(&b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub max_iters: usize,
    /// Stop when one step lowers the loss by less than this fraction.
    pub rel_tol: f64,
    /// Step halvings allowed per line search.
    pub max_halvings: usize,
    pub armijo: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { max_iters: 5000, rel_tol: 1e-12, max_halvings: 60, armijo: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Loss after initialization and after every accepted step.
    pub loss_history: Vec<f64>,
    pub converged: bool,
}

impl TrainReport {
    pub fn initial_loss(&self) -> f64 {
        self.loss_history[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().unwrap()
    }
}

struct Objective<'a> {
    features: &'a DMatrix<f64>,
    target: DMatrix<f64>,
    penalty: f64,
}

impl Objective<'_> {
    /// Residual of predicted minus target similarity, zero on the diagonal.
    fn residual(&self, p: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let g = p * self.features.transpose();
        let mut r = g.transpose() * &g - &self.target;
        r.fill_diagonal(0.0);
        (g, r)
    }

    fn loss(&self, p: &DMatrix<f64>) -> f64 {
        let (_, r) = self.residual(p);
        0.5 * r.norm_squared() + self.penalty * p.norm_squared()
    }

    fn loss_and_grad(&self, p: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let (g, r) = self.residual(p);
        let loss = 0.5 * r.norm_squared() + self.penalty * p.norm_squared();
        let grad = (&g * &r) * self.features * 2.0 + p * (2.0 * self.penalty);
        (loss, grad)
    }
}

/// Fits `P` by full-batch gradient descent with backtracking on
/// `1/2 sum_{i != j} (sim_ij - (P f_i).(P f_j))^2 + penalty ||P||_F^2`.
pub fn train_low_rank(
    e: &EmbeddingSet,
    target: &SimilarityMatrix,
    rank: usize,
    penalty: f64,
    seed: u64,
    opts: &TrainOptions,
) -> Result<(LowRankModel, TrainReport)> {
    if rank == 0 || rank > e.dim() {
        return Err(Error::Config(format!("rank must be in 1..={}, got {rank}", e.dim())));
    }
    if !(penalty >= 0.0) || !penalty.is_finite() {
        return Err(Error::Config(format!("penalty must be finite and >= 0, got {penalty}")));
    }
    if e.len() < 2 {
        return Err(Error::validation("need at least two items to train"));
    }
    let target = target.aligned_to(e.ids())?;
    let mut t = target.values().clone();
    t.fill_diagonal(0.0);
    let objective = Objective { features: e.matrix(), target: t, penalty };

    let n = e.len() as f64;
    let off_pairs = n * (n - 1.0);
    let target_rms = (objective.target.norm_squared() / off_pairs).sqrt().max(1e-3);
    let mean_sq_norm = e.matrix().norm_squared() / n;
    let sigma = (target_rms / (rank as f64 * mean_sq_norm.max(1e-12))).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = DMatrix::from_fn(rank, e.dim(), |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        sigma * z
    });

    let (mut loss, mut grad) = objective.loss_and_grad(&p);
    let mut history = vec![loss];
    let mut step = 1.0 / (mean_sq_norm * mean_sq_norm * n).max(1e-12);
    let mut converged = false;

    for _ in 0..opts.max_iters {
        let grad_sq = grad.norm_squared();
        if grad_sq == 0.0 {
            converged = true;
            break;
        }
        let mut halvings = 0;
        let mut saw_non_finite = false;
        let accepted = loop {
            let candidate = &p - &grad * step;
            let cand_loss = objective.loss(&candidate);
            if !cand_loss.is_finite() {
                saw_non_finite = true;
            } else if cand_loss <= loss - opts.armijo * step * grad_sq {
                break Some((candidate, cand_loss));
            }
            halvings += 1;
            if halvings > opts.max_halvings {
                break None;
            }
            step *= 0.5;
        };
        let Some((candidate, cand_loss)) = accepted else {
            if saw_non_finite {
                return Err(Error::Divergence(format!(
                    "loss non-finite after {} step halvings",
                    opts.max_halvings
                )));
            }
            // no descent step available: numerically stationary
            converged = true;
            break;
        };
        let decrease = loss - cand_loss;
        p = candidate;
        (loss, grad) = objective.loss_and_grad(&p);
        history.push(loss);
        step *= 2.0;
        if decrease <= opts.rel_tol * loss.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let model = LowRankModel::new(p, penalty)?;
    Ok((model, TrainReport { loss_history: history, converged }))
}
