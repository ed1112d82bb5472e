use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EmbeddingSet;
use crate::error::{Error, Result};

/// Independent k-means++ restarts used by [`select_representatives`].
pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// One centroid per row.
    pub centroids: DMatrix<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from points to their centroids.
    pub inertia: f64,
}

fn sq_dist(data: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    data.row(i).iter().zip(centroids.row(c).iter()).map(|(a, b)| (a - b).powi(2)).sum()
}

fn plus_plus_init(data: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = data.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| data.row(i).iter().zip(data.row(chosen[0]).iter()).map(|(a, b)| (a - b).powi(2)).sum())
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point coincides with a chosen center
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (i, slot) in d2.iter_mut().enumerate() {
            let d: f64 = data.row(i).iter().zip(data.row(next).iter()).map(|(a, b)| (a - b).powi(2)).sum();
            *slot = slot.min(d);
        }
    }
    data.select_rows(&chosen)
}

#[allow(clippy::needless_range_loop)]
fn lloyd(data: &DMatrix<f64>, mut centroids: DMatrix<f64>) -> KMeansResult {
    let (n, k) = (data.nrows(), centroids.nrows());
    let mut assignments = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .map(|c| (c, sq_dist(data, i, &centroids, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        let mut sums = DMatrix::<f64>::zeros(k, data.ncols());
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            let mut r = sums.row_mut(c);
            r += &data.row(i);
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster at the worst-served point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(data, a, &centroids, assignments[a])
                            .total_cmp(&sq_dist(data, b, &centroids, assignments[b]))
                    })
                    .unwrap();
                centroids.row_mut(c).copy_from(&data.row(far));
                assignments[far] = c;
                changed = true;
            } else {
                let mean = sums.row(c) / counts[c] as f64;
                centroids.row_mut(c).copy_from(&mean);
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n).map(|i| sq_dist(data, i, &centroids, assignments[i])).sum();
    KMeansResult { centroids, assignments, inertia }
}

/// Lloyd's k-means with k-means++ seeding; the best of `restarts` runs wins.
pub fn kmeans(data: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if k == 0 || k > data.nrows() {
        return Err(Error::Config(format!("k = {k} must be in 1..={}", data.nrows())));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let run = lloyd(data, plus_plus_init(data, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Clusters the embeddings into `k` groups and returns, for each centroid,
/// the closest item not already taken by an earlier centroid.
pub fn select_representatives(e: &EmbeddingSet, k: usize, seed: u64) -> Result<Vec<String>> {
    if k > e.len() {
        return Err(Error::Config(format!("cannot select {k} representatives from {} items", e.len())));
    }
    let result = kmeans(e.matrix(), k, seed, DEFAULT_RESTARTS)?;
    let mut taken = vec![false; e.len()];
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let pick = (0..e.len())
            .filter(|&i| !taken[i])
            .min_by(|&a, &b| {
                sq_dist(e.matrix(), a, &result.centroids, c).total_cmp(&sq_dist(e.matrix(), b, &result.centroids, c))
            })
            .unwrap();
        taken[pick] = true;
        out.push(e.ids()[pick].clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;
    use std::collections::BTreeSet;

    fn blobs(centers: &[(f64, f64)], per: usize, spread: f64, seed: u64) -> EmbeddingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for &(x, y) in centers {
            for _ in 0..per {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                rows.push(vec![x + spread * a, y + spread * b]);
            }
        }
        EmbeddingSet::from_rows((0..rows.len()).map(|i| format!("p{i}")).collect(), &rows).unwrap()
    }

    #[test]
    fn k_equal_to_n_returns_everything() {
        let e = blobs(&[(0.0, 0.0)], 7, 1.0, 1);
        let got: BTreeSet<String> = select_representatives(&e, 7, 3).unwrap().into_iter().collect();
        assert_eq!(got, e.ids().iter().cloned().collect());
    }

    #[test]
    fn one_per_separated_blob() {
        let e = blobs(&[(0.0, 0.0), (50.0, 50.0)], 10, 0.5, 2);
        let reps = select_representatives(&e, 2, 9).unwrap();
        let idx: Vec<usize> = reps.iter().map(|r| e.index_of(r).unwrap()).collect();
        assert_eq!(idx.iter().filter(|&&i| i < 10).count(), 1);
        assert_eq!(idx.iter().filter(|&&i| i >= 10).count(), 1);
    }

    #[test]
    fn too_many_clusters() {
        let e = blobs(&[(0.0, 0.0)], 3, 1.0, 1);
        assert!(select_representatives(&e, 4, 0).is_err());
    }

    /// Plain Lloyd with uniformly random initial centers, best of 100.
    fn restart_oracle(data: &DMatrix<f64>, k: usize) -> f64 {
        let n = data.nrows();
        let mut best = f64::INFINITY;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let init = rand::seq::index::sample(&mut rng, n, k).into_vec();
            let mut centers: Vec<Vec<f64>> = init.iter().map(|&i| data.row(i).iter().copied().collect()).collect();
            let mut assign = vec![0; n];
            for _ in 0..200 {
                for i in 0..n {
                    let mut best_c = 0;
                    let mut best_d = f64::INFINITY;
                    for (c, ctr) in centers.iter().enumerate() {
                        let d: f64 = (0..data.ncols()).map(|j| (data[(i, j)] - ctr[j]).powi(2)).sum();
                        if d < best_d {
                            best_d = d;
                            best_c = c;
                        }
                    }
                    assign[i] = best_c;
                }
                for (c, ctr) in centers.iter_mut().enumerate() {
                    let members: Vec<usize> = (0..n).filter(|&i| assign[i] == c).collect();
                    if !members.is_empty() {
                        for j in 0..data.ncols() {
                            ctr[j] = members.iter().map(|&i| data[(i, j)]).sum::<f64>() / members.len() as f64;
                        }
                    }
                }
            }
            let inertia: f64 = (0..n)
                .map(|i| (0..data.ncols()).map(|j| (data[(i, j)] - centers[assign[i]][j]).powi(2)).sum::<f64>())
                .sum();
            best = best.min(inertia);
        }
        best
    }

    #[test]
    fn inertia_close_to_multi_restart_oracle() {
        let e = blobs(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (4.0, 4.0)], 8, 1.0, 5);
        let ours = kmeans(e.matrix(), 4, 17, DEFAULT_RESTARTS).unwrap().inertia;
        let oracle = restart_oracle(e.matrix(), 4);
        assert!(ours <= oracle * 1.01, "ours {ours}, oracle {oracle}");
    }
}
