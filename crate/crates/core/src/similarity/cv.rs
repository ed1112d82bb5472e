use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    cosine_baseline, pairs_within, ridge_baseline, spearman_rho, train_low_rank, EmbeddingSet,
    SimilarityMatrix, TrainOptions,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelFamily {
    Cosine,
    Ridge { alphas: Vec<f64> },
    LowRank { ranks: Vec<usize>, penalties: Vec<f64>, options: TrainOptions, seed: u64 },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Cosine => "cosine",
            ModelFamily::Ridge { .. } => "ridge",
            ModelFamily::LowRank { .. } => "low_rank",
        }
    }

    fn grid(&self) -> Vec<Hyperparameters> {
        match self {
            ModelFamily::Cosine => vec![Hyperparameters::Cosine],
            ModelFamily::Ridge { alphas } => alphas.iter().map(|&alpha| Hyperparameters::Ridge { alpha }).collect(),
            ModelFamily::LowRank { ranks, penalties, .. } => ranks
                .iter()
                .flat_map(|&rank| penalties.iter().map(move |&penalty| Hyperparameters::LowRank { rank, penalty }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Hyperparameters {
    Cosine,
    Ridge { alpha: f64 },
    LowRank { rank: usize, penalty: f64 },
}

/// What happened in one outer fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvFoldLog {
    pub train_items: Vec<String>,
    pub test_items: Vec<String>,
    pub test_pairs: usize,
    pub chosen: Hyperparameters,
    /// Pooled validation rho of the chosen setting in the inner loop.
    pub inner_rho: Option<f64>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvReport {
    pub model: String,
    pub mean_rho: f64,
    /// Population standard deviation across outer folds.
    pub std_rho: f64,
    pub folds: Vec<CvFoldLog>,
}

/// Shuffles `0..n` with `seed` and deals positions round-robin into folds.
pub(crate) fn fold_assignment(n: usize, folds: usize, seed: u64, stream: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    order.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (k, i) in order.into_iter().enumerate() {
        out[k % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// Trains on `train` items (positions into `e`) and returns predictions
/// for every pair among `eval` items.
fn fit_and_score(
    family: &ModelFamily,
    hp: Hyperparameters,
    e: &EmbeddingSet,
    target: &SimilarityMatrix,
    train: &[usize],
    eval: &[usize],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs = pairs_within(eval);
    let truth = target.pair_values(&pairs);
    let local = |(i, j): (usize, usize)| {
        (eval.iter().position(|&x| x == i).unwrap(), eval.iter().position(|&x| x == j).unwrap())
    };
    let eval_set = e.subset(eval);
    let predicted = match (family, hp) {
        (ModelFamily::Cosine, _) => {
            let s = cosine_baseline(e)?;
            return Ok((s.pair_values(&pairs), truth));
        }
        (_, Hyperparameters::Ridge { alpha }) => {
            let model = ridge_baseline(&e.subset(train), &target.subset(train), alpha)?;
            model.predict_matrix(&eval_set)?
        }
        (ModelFamily::LowRank { options, seed, .. }, Hyperparameters::LowRank { rank, penalty }) => {
            let (model, _) = train_low_rank(&e.subset(train), &target.subset(train), rank, penalty, *seed, options)?;
            model.predict_matrix(&eval_set)?
        }
        _ => return Err(Error::Config("hyperparameters do not match model family".into())),
    };
    let values = pairs.iter().map(|&p| {
        let (a, b) = local(p);
        predicted.get(a, b)
    });
    Ok((values.collect(), truth))
}

fn rho_or_zero(pred: &[f64], truth: &[f64]) -> Result<f64> {
    match spearman_rho(pred, truth) {
        Ok(r) => Ok(r),
        Err(Error::Undefined(msg)) => {
            log::warn!("rank correlation undefined ({msg}); scoring fold as 0");
            Ok(0.0)
        }
        Err(e) => Err(e),
    }
}

/// Grid point with the best pooled validation rho over item folds of `items`.
#[allow(clippy::too_many_arguments)]
fn select(
    family: &ModelFamily,
    grid: &[Hyperparameters],
    e: &EmbeddingSet,
    target: &SimilarityMatrix,
    items: &[usize],
    folds: usize,
    seed: u64,
    stream: u64,
) -> Result<(Hyperparameters, f64)> {
    let split: Vec<Vec<usize>> = fold_assignment(items.len(), folds, seed, stream)
        .into_iter()
        .map(|f| f.into_iter().map(|i| items[i]).collect())
        .collect();
    let scores = grid
        .par_iter()
        .map(|&hp| -> Result<f64> {
            let mut pred = Vec::new();
            let mut truth = Vec::new();
            for val in &split {
                let fit: Vec<usize> = items.iter().copied().filter(|i| !val.contains(i)).collect();
                let (p, t) = fit_and_score(family, hp, e, target, &fit, val)?;
                pred.extend(p);
                truth.extend(t);
            }
            Ok(spearman_rho(&pred, &truth).unwrap_or(f64::NEG_INFINITY))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..grid.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    Ok((grid[best], scores[best]))
}

/// Picks hyperparameters by single-level item CV over the whole data set,
/// e.g. for the final model that is refit on every item.
pub fn select_hyperparameters(
    e: &EmbeddingSet,
    target: &SimilarityMatrix,
    family: &ModelFamily,
    folds: usize,
    seed: u64,
) -> Result<(Hyperparameters, Option<f64>)> {
    let target = target.aligned_to(e.ids())?;
    let grid = family.grid();
    match grid.len() {
        0 => Err(Error::Config("empty hyperparameter grid".into())),
        1 => Ok((grid[0], None)),
        _ => {
            if e.len() / folds < 2 {
                return Err(Error::Config(format!("{} items are too few for {folds} folds", e.len())));
            }
            let all: Vec<usize> = (0..e.len()).collect();
            let (hp, rho) = select(family, &grid, e, &target, &all, folds, seed, u64::MAX)?;
            Ok((hp, Some(rho)))
        }
    }
}

/// Nested cross-validation over items. An outer test fold scores only pairs
/// whose two items are both held out; hyperparameters are chosen by pooled
/// validation rho over inner folds of the outer training items.
pub fn nested_cv(
    e: &EmbeddingSet,
    target: &SimilarityMatrix,
    family: &ModelFamily,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let target = target.aligned_to(e.ids())?;
    let n = e.len();
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let outer = fold_assignment(n, folds, seed, 0);
    if let Some(small) = outer.iter().find(|f| f.len() < 3) {
        return Err(Error::Config(format!(
            "{n} items in {folds} folds leaves a test fold with {} items; at least 3 are needed",
            small.len()
        )));
    }
    let inner_size = (n - outer.iter().map(Vec::len).max().unwrap()) / folds;
    if inner_size < 2 {
        return Err(Error::Config(format!(
            "inner folds would hold fewer than 2 items ({n} items, {folds} folds)"
        )));
    }
    let grid = family.grid();
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }

    let logs = outer
        .par_iter()
        .enumerate()
        .map(|(k, test)| -> Result<CvFoldLog> {
            let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
            let (chosen, inner_rho) = if grid.len() == 1 {
                (grid[0], None)
            } else {
                let (hp, rho) = select(family, &grid, e, &target, &train, folds, seed, k as u64 + 1)?;
                (hp, Some(rho))
            };
            let (pred, truth) = fit_and_score(family, chosen, e, &target, &train, test)?;
            Ok(CvFoldLog {
                train_items: train.iter().map(|&i| e.ids()[i].clone()).collect(),
                test_items: test.iter().map(|&i| e.ids()[i].clone()).collect(),
                test_pairs: pred.len(),
                chosen,
                inner_rho,
                rho: rho_or_zero(&pred, &truth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rhos: Vec<f64> = logs.iter().map(|l| l.rho).collect();
    let mean = rhos.iter().sum::<f64>() / rhos.len() as f64;
    let std = (rhos.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / rhos.len() as f64).sqrt();
    Ok(CvReport { model: family.name().to_string(), mean_rho: mean, std_rho: std, folds: logs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::SimilarityKind;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    fn noise_problem(n: usize, d: usize, seed: u64) -> (EmbeddingSet, SimilarityMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = DMatrix::from_fn(n, d, |_, _| normal(&mut rng));
        let mut s = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
        s = (&s + s.transpose()) * 0.5;
        let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        (
            EmbeddingSet::new(ids.clone(), f).unwrap(),
            SimilarityMatrix::new(s, SimilarityKind::Predicted, ids).unwrap(),
        )
    }

    #[test]
    fn folds_partition_items() {
        let f = fold_assignment(20, 6, 3, 0);
        let mut all: Vec<usize> = f.concat();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        assert!(f.iter().all(|x| x.len() == 3 || x.len() == 4));
    }

    #[test]
    fn test_items_never_train() {
        let (e, s) = noise_problem(18, 4, 1);
        let r = nested_cv(&e, &s, &ModelFamily::Ridge { alphas: vec![0.1, 10.0] }, 6, 5).unwrap();
        for fold in &r.folds {
            assert!(fold.test_items.iter().all(|t| !fold.train_items.contains(t)));
            assert_eq!(fold.test_pairs, 3);
        }
    }

    #[test]
    fn replay_is_identical() {
        let (e, s) = noise_problem(18, 4, 2);
        let fam = ModelFamily::LowRank { ranks: vec![1, 2], penalties: vec![0.1], options: TrainOptions { max_iters: 50, ..Default::default() }, seed: 4 };
        let a = nested_cv(&e, &s, &fam, 6, 11).unwrap();
        let b = nested_cv(&e, &s, &fam, 6, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_items_per_fold() {
        let (e, s) = noise_problem(10, 3, 3);
        assert!(matches!(nested_cv(&e, &s, &ModelFamily::Cosine, 6, 0), Err(Error::Config(_))));
    }
}
