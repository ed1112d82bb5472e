//! Counterfactual encoders and deviation from optimality.

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{accuracy, complexity, Encoder};
use crate::error::{Error, Result};
use crate::frontier::FrontierCurve;
use crate::info::{ConditionalDistribution, ProbVector};
use crate::meaning::BeliefModel;

fn sample_rng(seed: u64, sample: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub fraction: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn new(fraction: f64, sample_count: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Range(format!("perturbation fraction {fraction} outside [0, 1]")));
        }
        Ok(PerturbationSpec { fraction, sample_count, seed })
    }

    /// Rows moved per sample: ⌈fraction·|M|⌉, raised to 2 because a single
    /// row cannot be permuted. Zero when `fraction` is zero.
    pub fn rows_moved(&self, meanings: usize) -> Result<usize> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::Range(format!("perturbation fraction {} outside [0, 1]", self.fraction)));
        }
        if self.fraction == 0.0 {
            return Ok(0);
        }
        if meanings < 2 {
            return Err(Error::validation(format!("cannot permute rows of an encoder with {meanings} meaning(s)")));
        }
        // guard against 0.05 * 580 landing a hair above 29
        let exact = self.fraction * meanings as f64;
        let k = (exact - 1e-9 * exact.max(1.0)).ceil() as usize;
        Ok(k.clamp(2, meanings))
    }
}

/// Logs when `rows_moved` had to round a fraction up to two rows.
pub fn warn_if_raised(spec: &PerturbationSpec, meanings: usize, k: usize) {
    let exact = spec.fraction * meanings as f64;
    if k > 0 && (k as f64) > exact.ceil() {
        log::warn!("fraction {} of {meanings} meanings is {exact:.3} rows; permuting {k} instead", spec.fraction);
    }
}

/// A uniformly random permutation of `0..k` with no fixed points.
fn derangement(k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        p.shuffle(rng);
        if p.iter().enumerate().all(|(i, &j)| i != j) {
            return p;
        }
    }
}

/// One perturbed copy: the policy rows of `k` distinct meanings, chosen
/// uniformly, are cycled among themselves by a random derangement. The
/// prior and all other rows are untouched.
fn perturb_once(e: &Encoder, k: usize, rng: &mut ChaCha8Rng) -> Result<Encoder> {
    if k == 0 {
        return Ok(e.clone());
    }
    let mut chosen = index::sample(rng, e.meaning_count(), k).into_vec();
    chosen.sort_unstable();
    let perm = derangement(k, rng);
    let src = e.policy().matrix();
    let mut out = src.clone();
    for (slot, &from) in perm.iter().enumerate() {
        out.set_row(chosen[slot], &src.row(chosen[from]));
    }
    e.with_policy(ConditionalDistribution::new(out)?)
}

/// Sample `index` of the perturbations described by `spec`. It depends
/// only on the seed and the index, so samples can be drawn in any order.
pub fn perturb_sample(e: &Encoder, spec: &PerturbationSpec, index: u64) -> Result<Encoder> {
    let k = spec.rows_moved(e.meaning_count())?;
    perturb_once(e, k, &mut sample_rng(spec.seed, index))
}

/// `spec.sample_count` perturbed copies of `e`.
pub fn perturb_encoder(e: &Encoder, spec: &PerturbationSpec) -> Result<Vec<Encoder>> {
    let k = spec.rows_moved(e.meaning_count())?;
    warn_if_raised(spec, e.meaning_count(), k);
    (0..spec.sample_count)
        .into_par_iter()
        .map(|i| perturb_once(e, k, &mut sample_rng(spec.seed, i as u64)))
        .collect()
}

/// Mixes `parts` into `base` (splitmix64 finalizer per step), for giving
/// each language and fraction its own stream of samples.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RandomMode {
    /// Every meaning maps to one word chosen uniformly.
    #[default]
    OneHot,
    /// Rows drawn from a flat Dirichlet over the lexicon.
    Soft,
}

/// Random encoder over a lexicon of `lexicon_size` words with a uniform prior.
pub fn random_encoder(lexicon_size: usize, meaning_count: usize, seed: u64) -> Result<Encoder> {
    random_encoder_with(lexicon_size, meaning_count, RandomMode::OneHot, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_encoder_with(
    lexicon_size: usize,
    meaning_count: usize,
    mode: RandomMode,
    rng: &mut ChaCha8Rng,
) -> Result<Encoder> {
    if lexicon_size == 0 || meaning_count == 0 {
        return Err(Error::validation("random encoder needs at least one word and one meaning"));
    }
    let mut policy = DMatrix::zeros(meaning_count, lexicon_size);
    match mode {
        RandomMode::OneHot => {
            for m in 0..meaning_count {
                policy[(m, rng.random_range(0..lexicon_size))] = 1.0;
            }
        }
        RandomMode::Soft => {
            let gamma = Gamma::new(1.0, 1.0).expect("valid shape");
            for m in 0..meaning_count {
                for w in 0..lexicon_size {
                    policy[(m, w)] = gamma.sample(rng);
                }
            }
        }
    }
    Encoder::from_policy(ConditionalDistribution::from_weights(policy)?)
}

/// Random encoder `index` shaped like `template`: same meanings, prior and lexicon.
pub fn random_sample(template: &Encoder, mode: RandomMode, seed: u64, index: u64) -> Result<Encoder> {
    let r = random_encoder_with(template.lexicon().len(), template.meaning_count(), mode, &mut sample_rng(seed, index))?;
    template.with_policy(r.policy().clone())
}

pub fn random_like(template: &Encoder, count: usize, mode: RandomMode, seed: u64) -> Result<Vec<Encoder>> {
    (0..count).into_par_iter().map(|i| random_sample(template, mode, seed, i as u64)).collect()
}

/// Complexity and accuracy for many encoders over one prior and belief
/// model. Zero policy entries are skipped, which makes one-hot encoders
/// cost O(|M|·|U|) instead of a dense product.
pub struct PlaneEvaluator {
    prior: Vec<f64>,
    /// p(m) p(u|m), stored with meanings as columns.
    weighted: DMatrix<f64>,
    state_marginal: Vec<f64>,
}

impl PlaneEvaluator {
    pub fn new(prior: &ProbVector, beliefs: &BeliefModel) -> Result<Self> {
        let b = beliefs.conditional().matrix();
        if prior.len() != b.nrows() {
            return Err(Error::dimension(format!("prior has {} meanings, beliefs {}", prior.len(), b.nrows())));
        }
        let p = prior.as_slice();
        let weighted = DMatrix::from_fn(b.ncols(), b.nrows(), |u, m| p[m] * b[(m, u)]);
        let state_marginal = weighted.column_sum().iter().copied().collect();
        Ok(PlaneEvaluator { prior: p.to_vec(), weighted, state_marginal })
    }

    /// (complexity, accuracy) in bits.
    pub fn evaluate(&self, policy: &ConditionalDistribution) -> Result<(f64, f64)> {
        let q = policy.matrix();
        if q.nrows() != self.prior.len() {
            return Err(Error::dimension(format!("policy has {} rows, expected {}", q.nrows(), self.prior.len())));
        }
        let (m_count, w_count, u_count) = (q.nrows(), q.ncols(), self.weighted.nrows());
        let mut pw = vec![0.0; w_count];
        let mut joint = DMatrix::<f64>::zeros(u_count, w_count);
        for w in 0..w_count {
            let mut col = joint.column_mut(w);
            for m in 0..m_count {
                let v = q[(m, w)];
                if v > 0.0 {
                    pw[w] += self.prior[m] * v;
                    col.axpy(v, &self.weighted.column(m), 1.0);
                }
            }
        }
        let mut complexity = 0.0;
        for w in 0..w_count {
            for m in 0..m_count {
                let v = q[(m, w)];
                if v > 0.0 && self.prior[m] > 0.0 {
                    complexity += self.prior[m] * v * (v / pw[w]).log2();
                }
            }
        }
        let mut accuracy = 0.0;
        for w in 0..w_count {
            for u in 0..u_count {
                let j = joint[(u, w)];
                if j > 0.0 {
                    accuracy += j * (j / (pw[w] * self.state_marginal[u])).log2();
                }
            }
        }
        Ok((complexity.max(0.0), accuracy.max(0.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub label: String,
    pub complexity: f64,
    pub accuracy: f64,
    /// ε in bits.
    pub epsilon: f64,
    pub argmin_beta: f64,
    /// (β, (F_β[q] - F*_β)/β) over converged grid points.
    pub gaps: Vec<(f64, f64)>,
}

/// ε for an encoder already placed in the information plane.
pub fn deviation_from_point(
    label: impl Into<String>,
    complexity: f64,
    accuracy: f64,
    curve: &FrontierCurve,
) -> Result<DeviationReport> {
    let gaps: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .filter(|p| p.converged)
        .map(|p| (p.beta, (complexity - p.beta * accuracy - p.optimal_objective) / p.beta))
        .collect();
    let (argmin_beta, epsilon) = gaps
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::NonConvergence("no converged frontier point to compare against".into()))?;
    Ok(DeviationReport { label: label.into(), complexity, accuracy, epsilon, argmin_beta, gaps })
}

/// ε = min over converged grid β of (F_β[q] - F*_β)/β.
pub fn deviation(
    label: impl Into<String>,
    encoder: &Encoder,
    beliefs: &BeliefModel,
    curve: &FrontierCurve,
) -> Result<DeviationReport> {
    deviation_from_point(label, complexity(encoder), accuracy(encoder, beliefs)?, curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontier::{log_beta_grid, reverse_annealing, AnnealingOptions, IbProblem};
    use std::collections::BTreeMap;

    fn labelled(n: usize, words: usize) -> Encoder {
        let m = DMatrix::from_fn(n, words, |i, j| if i % words == j { 1.0 } else { 0.0 });
        Encoder::from_policy(ConditionalDistribution::new(m).unwrap()).unwrap()
    }

    fn differing_rows(a: &Encoder, b: &Encoder) -> usize {
        let (x, y) = (a.policy().matrix(), b.policy().matrix());
        (0..x.nrows()).filter(|&i| x.row(i) != y.row(i)).count()
    }

    #[test]
    fn zero_fraction_is_identity() {
        let e = labelled(5, 5);
        let out = perturb_encoder(&e, &PerturbationSpec::new(0.0, 3, 1).unwrap()).unwrap();
        assert!(out.iter().all(|x| x == &e));
    }

    #[test]
    fn two_meanings_swap() {
        let e = labelled(2, 2);
        let out = perturb_encoder(&e, &PerturbationSpec::new(1.0, 4, 9).unwrap()).unwrap();
        for x in out {
            assert_eq!(x.policy().matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        }
    }

    #[test]
    fn exact_row_counts_and_multiset() {
        let e = labelled(580, 580);
        let spec = PerturbationSpec::new(0.05, 20, 3).unwrap();
        assert_eq!(spec.rows_moved(580).unwrap(), 29);
        for x in perturb_encoder(&e, &spec).unwrap() {
            assert_eq!(differing_rows(&e, &x), 29);
            assert_eq!(x.prior(), e.prior());
            let mut a: Vec<Vec<u64>> = (0..580).map(|i| e.policy().matrix().row(i).iter().map(|v| v.to_bits()).collect()).collect();
            let mut b: Vec<Vec<u64>> = (0..580).map(|i| x.policy().matrix().row(i).iter().map(|v| v.to_bits()).collect()).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn small_fractions_raise_to_two() {
        assert_eq!(PerturbationSpec::new(0.01, 1, 0).unwrap().rows_moved(50).unwrap(), 2);
        assert_eq!(PerturbationSpec::new(0.1, 1, 0).unwrap().rows_moved(50).unwrap(), 5);
        assert!(PerturbationSpec::new(1.5, 1, 0).is_err());
        assert!(PerturbationSpec::new(0.5, 1, 0).unwrap().rows_moved(1).is_err());
    }

    #[test]
    fn complexity_permutation_invariant() {
        let e = labelled(12, 4);
        for x in perturb_encoder(&e, &PerturbationSpec::new(0.5, 10, 2).unwrap()).unwrap() {
            assert!((complexity(&x) - complexity(&e)).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbation_replays() {
        let e = labelled(30, 7);
        let spec = PerturbationSpec::new(0.1, 8, 11).unwrap();
        assert_eq!(perturb_encoder(&e, &spec).unwrap(), perturb_encoder(&e, &spec).unwrap());
    }

    #[test]
    fn random_encoders() {
        let c = random_encoder(1, 6, 4).unwrap();
        assert_eq!(complexity(&c), 0.0);
        assert_eq!(random_encoder(5, 9, 17).unwrap(), random_encoder(5, 9, 17).unwrap());
        let soft = random_encoder_with(3, 4, RandomMode::Soft, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(soft.policy().matrix().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn word_choice_is_uniform() {
        // 10^4 encoders, 8 meanings each, over 4 words
        let (samples, meanings, words) = (10_000, 8, 4);
        let mut counts = BTreeMap::new();
        for s in 0..samples {
            let e = random_encoder(words, meanings, s).unwrap();
            for m in 0..meanings {
                let w = e.policy().matrix().row(m).iter().position(|&v| v == 1.0).unwrap();
                *counts.entry(w).or_insert(0usize) += 1;
            }
        }
        let n = (samples as usize * meanings) as f64;
        let p = 1.0 / words as f64;
        let sd = (n * p * (1.0 - p)).sqrt();
        for w in 0..words {
            assert!((counts[&w] as f64 - n * p).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    fn toy_problem() -> (IbProblem, BeliefModel) {
        let b = ConditionalDistribution::from_weights(DMatrix::from_row_slice(
            4,
            3,
            &[0.8, 0.15, 0.05, 0.6, 0.3, 0.1, 0.1, 0.3, 0.6, 0.05, 0.15, 0.8],
        ))
        .unwrap();
        let p = IbProblem::with_default_words(ProbVector::uniform(4).unwrap(), b.clone()).unwrap();
        (p, BeliefModel::from_conditional(b))
    }

    #[test]
    fn frontier_encoders_have_zero_deviation() {
        let (p, b) = toy_problem();
        let c = reverse_annealing(&p, &log_beta_grid(1.0, 256.0, 20).unwrap(), &AnnealingOptions::default()).unwrap();
        for pt in c.points().iter().filter(|p| p.converged) {
            let e = Encoder::from_policy(pt.encoder.clone().unwrap()).unwrap();
            let r = deviation("f", &e, &b, &c).unwrap();
            assert!(r.epsilon <= 1e-6 && r.epsilon >= -1e-6, "{}", r.epsilon);
        }
        // the one-word encoder is the frontier's origin, optimal for small β
        let constant = Encoder::from_policy(ConditionalDistribution::uniform(4, 1).unwrap()).unwrap();
        assert!(deviation("c", &constant, &b, &c).unwrap().epsilon.abs() <= 1e-6);
        // pairing dissimilar meanings pays a bit of complexity for little accuracy
        let crossed = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        let crossed = Encoder::from_policy(ConditionalDistribution::new(crossed).unwrap()).unwrap();
        assert!(deviation("x", &crossed, &b, &c).unwrap().epsilon > 1e-3);
    }

    #[test]
    fn evaluator_matches_direct_measures() {
        let (_, b) = toy_problem();
        let ev = PlaneEvaluator::new(&ProbVector::uniform(4).unwrap(), &b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for mode in [RandomMode::OneHot, RandomMode::Soft] {
            for _ in 0..50 {
                let e = random_encoder_with(3, 4, mode, &mut rng).unwrap();
                let (c, a) = ev.evaluate(e.policy()).unwrap();
                assert!((c - complexity(&e)).abs() < 1e-12);
                assert!((a - accuracy(&e, &b).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn samples_match_batches() {
        let e = labelled(30, 7);
        let spec = PerturbationSpec::new(0.1, 5, 11).unwrap();
        let batch = perturb_encoder(&e, &spec).unwrap();
        assert_eq!(perturb_sample(&e, &spec, 3).unwrap(), batch[3]);
        let r = random_like(&e, 4, RandomMode::OneHot, 2).unwrap();
        assert_eq!(random_sample(&e, RandomMode::OneHot, 2, 2).unwrap(), r[2]);
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
    }

    #[test]
    fn all_unconverged_is_an_error() {
        let c = FrontierCurve::from_raw(vec![(1.0, 0.0, 0.0, false), (2.0, 1.0, 0.5, false)]).unwrap();
        assert!(deviation_from_point("x", 1.0, 0.2, &c).is_err());
    }
}
