use nalgebra::DMatrix;

use super::{EmbeddingSet, SimilarityKind, SimilarityMatrix};
use crate::error::{Error, Result};

const ZERO_VARIANCE: f64 = 1e-12;

/// Cosine of two equal-length vectors; `None` when either has zero norm.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (na > 0.0 && nb > 0.0).then(|| (dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Z-scores each dimension across items (population standard deviation).
/// Constant dimensions are dropped with a warning.
pub(crate) fn zscore_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() as f64;
    let mut keep = Vec::new();
    let mut stats = Vec::new();
    for (j, col) in m.column_iter().enumerate() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > ZERO_VARIANCE * (1.0 + mean.abs()) {
            keep.push(j);
            stats.push((mean, sd));
        }
    }
    if keep.len() < m.ncols() {
        log::warn!("dropped {} zero-variance embedding dimensions", m.ncols() - keep.len());
    }
    DMatrix::from_fn(m.nrows(), keep.len(), |i, k| {
        let (mean, sd) = stats[k];
        (m[(i, keep[k])] - mean) / sd
    })
}

/// Cosine similarity between z-scored embeddings.
pub fn cosine_baseline(e: &EmbeddingSet) -> Result<SimilarityMatrix> {
    let n = e.len();
    if n < 2 {
        return Err(Error::validation("cosine baseline needs at least two items"));
    }
    let z = zscore_columns(e.matrix());
    let rows: Vec<Vec<f64>> = (0..n).map(|i| z.row(i).iter().copied().collect()).collect();
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let c = cosine(&rows[i], &rows[j]).ok_or_else(|| {
                Error::Undefined(format!(
                    "cosine of `{}` and `{}` undefined: zero vector after z-scoring",
                    e.ids()[i],
                    e.ids()[j]
                ))
            })?;
            out[(i, j)] = c;
            out[(j, i)] = c;
        }
    }
    SimilarityMatrix::new(out, SimilarityKind::Predicted, e.ids().to_vec())
}
