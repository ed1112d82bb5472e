use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::SimilarityMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MdsResult {
    pub items: Vec<String>,
    /// One row per item, `dims` columns.
    pub coordinates: Vec<Vec<f64>>,
    /// Eigenvalues of the double-centred matrix used for each axis.
    pub eigenvalues: Vec<f64>,
    /// Axes filled with zeros for lack of positive eigenvalues.
    pub padded_axes: usize,
}

/// Torgerson classical scaling of the dissimilarity `1 - sim`.
pub fn classical_mds(s: &SimilarityMatrix, dims: usize) -> Result<MdsResult> {
    if dims == 0 {
        return Err(Error::Config("MDS needs at least one output dimension".into()));
    }
    let n = s.len();
    if n == 0 {
        return Err(Error::EmptyInput("empty similarity matrix".into()));
    }
    let d2 = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (1.0 - s.get(i, j)).powi(2) });
    let row_means: Vec<f64> = (0..n).map(|i| d2.row(i).mean()).collect();
    let grand = d2.mean();
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (d2[(i, j)] - row_means[i] - row_means[j] + grand));

    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.amax().max(1.0);
    let positive: Vec<usize> = order.into_iter().filter(|&k| eig.eigenvalues[k] > 1e-12 * scale).collect();

    let used = positive.len().min(dims);
    let padded_axes = dims - used;
    if padded_axes > 0 {
        log::warn!("only {used} positive eigenvalues; padding {padded_axes} MDS axes with zeros");
    }
    let mut coordinates = vec![vec![0.0; dims]; n];
    let mut eigenvalues = vec![0.0; dims];
    for (axis, &k) in positive.iter().take(used).enumerate() {
        let lambda = eig.eigenvalues[k];
        let v = eig.eigenvectors.column(k);
        // fix the sign so the largest-magnitude entry is positive
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let mean = v.mean();
        for i in 0..n {
            coordinates[i][axis] = sign * (v[i] - mean) * lambda.sqrt();
        }
        eigenvalues[axis] = lambda;
    }
    Ok(MdsResult { items: s.items().to_vec(), coordinates, eigenvalues, padded_axes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityKind;

    fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    fn empirical(values: DMatrix<f64>) -> SimilarityMatrix {
        let ids = (0..values.nrows()).map(|i| i.to_string()).collect();
        SimilarityMatrix::new(values, SimilarityKind::Empirical, ids).unwrap()
    }

    #[test]
    fn zero_similarity_triangle_is_equilateral() {
        let s = empirical(DMatrix::identity(3, 3));
        let r = classical_mds(&s, 2).unwrap();
        let c = &r.coordinates;
        let (a, b, d) = (dist(&c[0], &c[1]), dist(&c[0], &c[2]), dist(&c[1], &c[2]));
        assert!((a - b).abs() < 1e-9 && (b - d).abs() < 1e-9);
        assert!((a - 1.0).abs() < 1e-9);
        for axis in 0..2 {
            assert!(c.iter().map(|p| p[axis]).sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn two_piles_collapse_to_two_points() {
        let block = DMatrix::from_fn(6, 6, |i, j| if (i < 3) == (j < 3) { 1.0 } else { 0.0 });
        let r = classical_mds(&empirical(block), 2).unwrap();
        let c = &r.coordinates;
        assert!(dist(&c[0], &c[1]) < 1e-9 && dist(&c[3], &c[5]) < 1e-9);
        assert!((dist(&c[0], &c[4]) - 1.0).abs() < 1e-9);
        // a single positive eigenvalue: the second axis is padded
        assert_eq!(r.padded_axes, 1);
    }

    #[test]
    fn reconstructs_planar_distances() {
        // five points in the plane, dissimilarities scaled into [0, 1]
        let pts = [(0.0, 0.0), (0.3, 0.1), (0.1, 0.4), (0.5, 0.5), (0.2, 0.2)];
        let sim = DMatrix::from_fn(5, 5, |i, j| {
            1.0 - dist(&[pts[i].0, pts[i].1], &[pts[j].0, pts[j].1])
        });
        let r = classical_mds(&empirical(sim), 2).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = dist(&[pts[i].0, pts[i].1], &[pts[j].0, pts[j].1]);
                assert!((dist(&r.coordinates[i], &r.coordinates[j]) - want).abs() < 1e-9);
            }
        }
    }
}
