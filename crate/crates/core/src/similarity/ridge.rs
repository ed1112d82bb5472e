use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cosine::cosine;
use super::{upper_pairs, EmbeddingSet, SimilarityKind, SimilarityMatrix};
use crate::error::{Error, Result};

/// Pair features: Hadamard product, L1 distance, cosine similarity.
pub fn pair_features(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    out.push(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum());
    out.push(cosine(a, b).unwrap_or(0.0));
    out
}

/// Linear model on pair features with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub alpha: f64,
}

impl RidgeModel {
    pub fn predict_pair(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() || a.len() + 2 != self.coefficients.len() {
            return Err(Error::dimension(format!(
                "ridge model expects vectors of dimension {}",
                self.coefficients.len().saturating_sub(2)
            )));
        }
        let f = pair_features(a, b);
        Ok(self.intercept + f.iter().zip(&self.coefficients).map(|(x, w)| x * w).sum::<f64>())
    }

    pub fn predict_matrix(&self, e: &EmbeddingSet) -> Result<SimilarityMatrix> {
        let n = e.len();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| e.vector(i)).collect();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.predict_pair(&rows[i], &rows[j])?;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SimilarityMatrix::new(out, SimilarityKind::Predicted, e.ids().to_vec())
    }
}

/// Fits ridge regression on all off-diagonal pairs by the normal equations,
/// using the dual form when there are fewer pairs than features.
pub fn ridge_baseline(e: &EmbeddingSet, target: &SimilarityMatrix, alpha: f64) -> Result<RidgeModel> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Range(format!("ridge penalty must be positive and finite, got {alpha}")));
    }
    let target = target.aligned_to(e.ids())?;
    let pairs = upper_pairs(e.len());
    if pairs.is_empty() {
        return Err(Error::validation("ridge baseline needs at least two items"));
    }
    let rows: Vec<Vec<f64>> = (0..e.len()).map(|i| e.vector(i)).collect();
    let p = e.dim() + 2;
    let mut x = DMatrix::<f64>::zeros(pairs.len(), p);
    let mut y = DVector::<f64>::zeros(pairs.len());
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let f = pair_features(&rows[i], &rows[j]);
        x.row_mut(r).copy_from_slice(&f);
        y[r] = target.get(i, j);
    }
    let n = pairs.len() as f64;
    let x_mean: DVector<f64> = x.row_sum().transpose() / n;
    let y_mean = y.sum() / n;
    for mut row in x.row_iter_mut() {
        row -= x_mean.transpose();
    }
    y.add_scalar_mut(-y_mean);

    let w = if pairs.len() <= p {
        let mut k = &x * x.transpose();
        for d in 0..k.nrows() {
            k[(d, d)] += alpha;
        }
        let chol = k.cholesky().ok_or_else(|| Error::Undefined("ridge system not positive definite".into()))?;
        x.transpose() * chol.solve(&y)
    } else {
        let mut g = x.transpose() * &x;
        for d in 0..p {
            g[(d, d)] += alpha;
        }
        let chol = g.cholesky().ok_or_else(|| Error::Undefined("ridge system not positive definite".into()))?;
        chol.solve(&(x.transpose() * &y))
    };
    let intercept = y_mean - x_mean.dot(&w);
    Ok(RidgeModel { coefficients: w.iter().copied().collect(), intercept, alpha })
}
