//! The IB optimal frontier.
//!
//! For a fixed β the self-consistent equations
//!
//! ```text
//! p(w)   = Σ_m p(m) q(w|m)
//! p(u|w) = Σ_m p(m|w) p(u|m)
//! q(w|m) ∝ p(w) exp(-β KL[p(u|m) || p(u|w)])
//! ```
//!
//! are iterated to a fixed point. The frontier is traced by reverse
//! deterministic annealing: β runs from the largest grid value down,
//! each solve warm-started from the previous solution with a small
//! multiplicative jitter.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::encoder::{accuracy, complexity, Encoder};
use crate::error::{Error, Result};
use crate::info::{ConditionalDistribution, ProbVector};
use crate::meaning::BeliefModel;
use crate::output::fmt_num;

/// Clusters whose marginal mass falls below this are removed.
const EMPTY_CLUSTER: f64 = 1e-15;
/// Stand-in for ln 0 that keeps `0 * ln 0` finite inside matrix products.
const LN_ZERO: f64 = -1e250;
/// Slack used when deciding whether a point lies on the upper envelope.
const ENVELOPE_SLACK: f64 = 1e-9;

/// Inputs of the IB problem: prior p(m), beliefs p(u|m) and a bound on |W|.
#[derive(Debug, Clone, PartialEq)]
pub struct IbProblem {
    prior: ProbVector,
    beliefs: ConditionalDistribution,
    max_words: usize,
}

impl IbProblem {
    pub fn new(prior: ProbVector, beliefs: ConditionalDistribution, max_words: usize) -> Result<Self> {
        if prior.len() != beliefs.nrows() {
            return Err(Error::dimension(format!(
                "prior has {} meanings but beliefs have {} rows",
                prior.len(),
                beliefs.nrows()
            )));
        }
        if max_words == 0 {
            return Err(Error::Config("max_words must be at least 1".into()));
        }
        Ok(IbProblem { prior, beliefs, max_words })
    }

    /// Problem over the beliefs' meanings with |W| bounded by |M|.
    pub fn with_default_words(prior: ProbVector, beliefs: ConditionalDistribution) -> Result<Self> {
        let m = beliefs.nrows();
        IbProblem::new(prior, beliefs, m)
    }

    pub fn prior(&self) -> &ProbVector {
        &self.prior
    }

    pub fn beliefs(&self) -> &ConditionalDistribution {
        &self.beliefs
    }

    pub fn max_words(&self) -> usize {
        self.max_words
    }

    pub fn meaning_count(&self) -> usize {
        self.prior.len()
    }
}

/// F_β[q] = I(M;W) - β I(W;U), in bits.
pub fn ib_objective(encoder: &Encoder, beliefs: &BeliefModel, beta: f64) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Range(format!("β must be nonnegative, got {beta}")));
    }
    Ok(complexity(encoder) - beta * accuracy(encoder, beliefs)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Stop once the objective changes by less than this between iterations.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions { tol: 1e-8, max_iters: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointResult {
    /// Converged q(w|m) restricted to clusters with positive mass.
    pub encoder: ConditionalDistribution,
    /// Objective (bits) at the initial encoder and after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub complexity: f64,
    pub accuracy: f64,
}

impl FixedPointResult {
    pub fn objective(&self) -> f64 {
        *self.trace.last().unwrap()
    }
}

/// Precomputed pieces of a problem used by every iteration.
struct Solver<'a> {
    prior: DVector<f64>,
    beliefs: &'a DMatrix<f64>,
    /// Σ_u p(u|m) ln p(u|m) per meaning.
    neg_entropy: DVector<f64>,
    /// p(u)
    state_marginal: DVector<f64>,
}

struct Measures {
    complexity: f64,
    accuracy: f64,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a IbProblem) -> Self {
        let beliefs = problem.beliefs.matrix();
        let prior = DVector::from_column_slice(problem.prior.as_slice());
        let neg_entropy = DVector::from_fn(beliefs.nrows(), |m, _| {
            beliefs.row(m).iter().filter(|&&b| b > 0.0).map(|b| b * b.ln()).sum()
        });
        let state_marginal = beliefs.transpose() * &prior;
        Solver { prior, beliefs, neg_entropy, state_marginal }
    }

    /// Drops clusters with negligible mass and renormalizes rows.
    fn prune(&self, q: DMatrix<f64>) -> DMatrix<f64> {
        let pw = q.transpose() * &self.prior;
        let keep: Vec<usize> = (0..q.ncols()).filter(|&w| pw[w] > EMPTY_CLUSTER).collect();
        if keep.len() == q.ncols() {
            return q;
        }
        let mut q = q.select_columns(&keep);
        let width = q.ncols() as f64;
        for mut row in q.row_iter_mut() {
            let s = row.sum();
            if s > 0.0 {
                row /= s;
            } else {
                row.fill(1.0 / width);
            }
        }
        q
    }

    /// p(w) and the decoder p(u|w) for an encoder whose clusters all have mass.
    fn decoder(&self, q: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let pw = q.transpose() * &self.prior;
        let mut joint_mw = q.clone();
        for (m, p) in self.prior.iter().enumerate() {
            joint_mw.row_mut(m).scale_mut(*p);
        }
        let mut dec = joint_mw.transpose() * self.beliefs;
        for (w, mass) in pw.iter().enumerate() {
            dec.row_mut(w).unscale_mut(*mass);
        }
        (pw, dec)
    }

    fn update(&self, q: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
        let (pw, dec) = self.decoder(q);
        let ln_dec = dec.map(|v| if v > 0.0 { v.ln() } else { LN_ZERO });
        let cross = self.beliefs * ln_dec.transpose();
        let (rows, cols) = (q.nrows(), q.ncols());
        let mut out = DMatrix::zeros(rows, cols);
        let mut logits = vec![0.0; cols];
        for m in 0..rows {
            for w in 0..cols {
                let kl = (self.neg_entropy[m] - cross[(m, w)]).max(0.0);
                logits[w] = pw[w].ln() - beta * kl;
            }
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for w in 0..cols {
                let v = (logits[w] - max).exp();
                out[(m, w)] = v;
                total += v;
            }
            out.row_mut(m).unscale_mut(total);
        }
        out
    }

    fn measures(&self, q: &DMatrix<f64>) -> Measures {
        let (pw, dec) = self.decoder(q);
        let mut complexity = 0.0;
        for m in 0..q.nrows() {
            let pm = self.prior[m];
            if pm == 0.0 {
                continue;
            }
            for w in 0..q.ncols() {
                let v = q[(m, w)];
                if v > 0.0 {
                    complexity += pm * v * (v / pw[w]).ln();
                }
            }
        }
        let mut accuracy = 0.0;
        for w in 0..dec.nrows() {
            for u in 0..dec.ncols() {
                let v = dec[(w, u)];
                if v > 0.0 {
                    accuracy += pw[w] * v * (v / self.state_marginal[u]).ln();
                }
            }
        }
        Measures {
            complexity: (complexity / std::f64::consts::LN_2).max(0.0),
            accuracy: (accuracy / std::f64::consts::LN_2).max(0.0),
        }
    }
}

/// Iterates the IB self-consistent equations from `init` at a fixed β.
pub fn ib_fixed_point(
    problem: &IbProblem,
    beta: f64,
    init: &ConditionalDistribution,
    opts: &FixedPointOptions,
) -> Result<FixedPointResult> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::Range(format!("β must be finite and nonnegative, got {beta}")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if init.nrows() != problem.meaning_count() {
        return Err(Error::dimension(format!(
            "initial encoder has {} rows for {} meanings",
            init.nrows(),
            problem.meaning_count()
        )));
    }
    if init.ncols() > problem.max_words {
        return Err(Error::dimension(format!(
            "initial encoder uses {} words, bound is {}",
            init.ncols(),
            problem.max_words
        )));
    }
    let solver = Solver::new(problem);
    let mut q = solver.prune(init.matrix().clone());
    let measure = |q: &DMatrix<f64>| {
        let m = solver.measures(q);
        (m.complexity - beta * m.accuracy, m)
    };
    let (mut objective, mut last) = measure(&q);
    let mut trace = vec![objective];
    let mut converged = false;
    for _ in 0..opts.max_iters {
        q = solver.prune(solver.update(&q, beta));
        let (next, m) = measure(&q);
        trace.push(next);
        last = m;
        let delta = (objective - next).abs();
        objective = next;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(FixedPointResult {
        encoder: ConditionalDistribution::from_weights(q)?,
        trace,
        converged,
        complexity: last.complexity,
        accuracy: last.accuracy,
    })
}

/// `count` values spaced evenly in log between `min` and `max`, inclusive.
pub fn log_beta_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max >= min) || !max.is_finite() || count == 0 {
        return Err(Error::Config(format!("invalid β grid [{min}, {max}] x {count}")));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.ln(), max.ln());
    Ok((0..count)
        .map(|k| {
            if k == count - 1 {
                max
            } else {
                (lo + (hi - lo) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// 100 log-spaced values of β from 1 to 2^20.
pub fn default_beta_grid() -> Vec<f64> {
    log_beta_grid(1.0, (1u64 << 20) as f64, 100).expect("static grid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingOptions {
    pub fixed_point: FixedPointOptions,
    /// Relative scale of the multiplicative noise applied to warm starts.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for AnnealingOptions {
    fn default() -> Self {
        AnnealingOptions { fixed_point: FixedPointOptions::default(), jitter: 1e-3, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub beta: f64,
    pub complexity: f64,
    pub accuracy: f64,
    pub converged: bool,
    /// F*_β: the smallest objective attained at this β by any converged
    /// point of the curve or by the trivial one-word encoder.
    pub optimal_objective: f64,
    /// Survived the upper-envelope and monotonicity cleanup.
    pub on_frontier: bool,
    pub encoder: Option<ConditionalDistribution>,
}

/// Frontier traced over a β grid, sorted by increasing β. Every raw point
/// is retained; `on_frontier` marks the cleaned curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCurve {
    points: Vec<FrontierPoint>,
}

impl FrontierCurve {
    /// Builds a curve from raw `(β, complexity, accuracy, converged)` rows.
    pub fn from_raw(rows: Vec<(f64, f64, f64, bool)>) -> Result<Self> {
        FrontierCurve::from_points(
            rows.into_iter()
                .map(|(beta, complexity, accuracy, converged)| FrontierPoint {
                    beta,
                    complexity,
                    accuracy,
                    converged,
                    optimal_objective: f64::NAN,
                    on_frontier: false,
                    encoder: None,
                })
                .collect(),
        )
    }

    fn from_points(mut points: Vec<FrontierPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("frontier has no points".into()));
        }
        if points.iter().any(|p| !(p.beta > 0.0) || !p.complexity.is_finite() || !p.accuracy.is_finite()) {
            return Err(Error::validation("frontier points need β > 0 and finite measures"));
        }
        points.sort_by(|a, b| a.beta.total_cmp(&b.beta));
        if points.windows(2).any(|w| w[0].beta == w[1].beta) {
            return Err(Error::validation("duplicate β in frontier"));
        }
        let mut curve = FrontierCurve { points };
        curve.cleanup();
        Ok(curve)
    }

    fn cleanup(&mut self) {
        let hull = upper_envelope(
            self.points
                .iter()
                .filter(|p| p.converged)
                .map(|p| (p.complexity, p.accuracy)),
        );
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mut self.points {
            let on_hull = p.converged && p.accuracy >= envelope_at(&hull, p.complexity) - ENVELOPE_SLACK;
            let monotone = p.complexity >= prev.0 - ENVELOPE_SLACK && p.accuracy >= prev.1 - ENVELOPE_SLACK;
            p.on_frontier = on_hull && monotone;
            if p.on_frontier {
                prev = (p.complexity, p.accuracy);
            }
        }
        let optima: Vec<f64> = self.points.iter().map(|p| self.lower_bound(p.beta)).collect();
        for (p, f) in self.points.iter_mut().zip(optima) {
            p.optimal_objective = f;
        }
    }

    /// min(0, min over converged points of C - βA).
    fn lower_bound(&self, beta: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.converged)
            .map(|p| p.complexity - beta * p.accuracy)
            .fold(0.0, f64::min)
    }

    pub fn points(&self) -> &[FrontierPoint] {
        &self.points
    }

    /// Points on the cleaned frontier, by increasing β.
    pub fn frontier(&self) -> impl Iterator<Item = &FrontierPoint> {
        self.points.iter().filter(|p| p.on_frontier)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.beta).collect()
    }

    pub fn beta_range(&self) -> (f64, f64) {
        (self.points[0].beta, self.points[self.points.len() - 1].beta)
    }

    /// Writes `beta,complexity_bits,accuracy_bits,converged`, one row per raw point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["beta", "complexity_bits", "accuracy_bits", "converged"])?;
        for p in &self.points {
            w.write_record([
                fmt_num(p.beta),
                fmt_num(p.complexity),
                fmt_num(p.accuracy),
                p.converged.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["beta", "complexity_bits", "accuracy_bits", "converged"] {
            return Err(Error::Parse { line: 1, message: format!("unexpected frontier header {headers:?}") });
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let num = |i: usize| -> Result<f64> {
                rec.get(i).unwrap_or("").parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("bad number in column {i}"),
                })
            };
            let converged = rec.get(3).unwrap_or("").parse().map_err(|_| Error::Parse {
                line,
                message: "converged must be true or false".into(),
            })?;
            rows.push((num(0)?, num(1)?, num(2)?, converged));
        }
        FrontierCurve::from_raw(rows)
    }
}

/// Vertices of the upper concave envelope through the origin, truncated
/// where accuracy stops increasing.
fn upper_envelope(points: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.chain(std::iter::once((0.0, 0.0))).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let peak = hull
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.1 > hull[best].1 { i } else { best });
    hull.truncate(peak + 1);
    hull
}

/// Piecewise-linear envelope value; flat beyond the last vertex.
fn envelope_at(hull: &[(f64, f64)], c: f64) -> f64 {
    if c <= hull[0].0 {
        return hull[0].1;
    }
    for w in hull.windows(2) {
        let ((c0, a0), (c1, a1)) = (w[0], w[1]);
        if c <= c1 {
            return a0 + (a1 - a0) * (c - c0) / (c1 - c0);
        }
    }
    hull[hull.len() - 1].1
}

fn jittered(q: &ConditionalDistribution, scale: f64, rng: &mut ChaCha8Rng) -> Result<ConditionalDistribution> {
    if scale == 0.0 {
        return Ok(q.clone());
    }
    let noisy = q.matrix().map(|v| {
        let z: f64 = StandardNormal.sample(rng);
        (v * (1.0 + scale * z)).max(0.0)
    });
    ConditionalDistribution::from_weights(noisy)
}

fn initial_encoder(meanings: usize, words: usize) -> Result<ConditionalDistribution> {
    const SMOOTHING: f64 = 1e-6;
    let m = DMatrix::from_fn(meanings, words, |i, j| {
        (if i % words == j { 1.0 - SMOOTHING } else { 0.0 }) + SMOOTHING / words as f64
    });
    ConditionalDistribution::from_weights(m)
}

/// Traces the frontier from the largest β in `betas` down to the smallest.
pub fn reverse_annealing(problem: &IbProblem, betas: &[f64], opts: &AnnealingOptions) -> Result<FrontierCurve> {
    if betas.is_empty() {
        return Err(Error::Config("empty β grid".into()));
    }
    if betas.windows(2).any(|w| !(w[0] < w[1])) || !(betas[0] > 0.0) {
        return Err(Error::Config("β grid must be positive and strictly increasing".into()));
    }
    let words = problem.max_words.min(problem.meaning_count()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut current = initial_encoder(problem.meaning_count(), words)?;
    let mut points = Vec::with_capacity(betas.len());
    for (k, &beta) in betas.iter().enumerate().rev() {
        let start = if k + 1 == betas.len() { current.clone() } else { jittered(&current, opts.jitter, &mut rng)? };
        let result = ib_fixed_point(problem, beta, &start, &opts.fixed_point)?;
        if !result.converged {
            log::warn!("fixed point at β = {beta} did not converge in {} iterations", opts.fixed_point.max_iters);
        }
        current = result.encoder.clone();
        // The one-word encoder scores 0 at every β and is an exact fixed
        // point, so a slower solution above 0 is replaced by it. The warm
        // start chain still follows the annealed solution.
        let point = if result.objective() > 0.0 {
            FrontierPoint {
                beta,
                complexity: 0.0,
                accuracy: 0.0,
                converged: true,
                optimal_objective: f64::NAN,
                on_frontier: false,
                encoder: Some(ConditionalDistribution::new(DMatrix::from_element(problem.meaning_count(), 1, 1.0))?),
            }
        } else {
            FrontierPoint {
                beta,
                complexity: result.complexity,
                accuracy: result.accuracy,
                converged: result.converged,
                optimal_objective: f64::NAN,
                on_frontier: false,
                encoder: Some(result.encoder),
            }
        };
        points.push(point);
    }
    FrontierCurve::from_points(points)
}

/// F*_β evaluated from the curve's converged points (no interpolation
/// in β). `beta` must lie inside the grid's range.
pub fn frontier_value(curve: &FrontierCurve, beta: f64) -> Result<f64> {
    let (lo, hi) = curve.beta_range();
    let slack = 1e-12;
    if !(beta >= lo * (1.0 - slack) && beta <= hi * (1.0 + slack)) {
        return Err(Error::Range(format!("β = {beta} outside frontier grid [{lo}, {hi}]")));
    }
    if let Some(p) = curve.points.iter().find(|p| p.beta == beta) {
        return Ok(p.optimal_objective);
    }
    Ok(curve.lower_bound(beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::ProbVector;

    fn problem(beliefs: &[f64], m: usize, u: usize) -> IbProblem {
        IbProblem::with_default_words(
            ProbVector::uniform(m).unwrap(),
            ConditionalDistribution::from_weights(DMatrix::from_row_slice(m, u, beliefs)).unwrap(),
        )
        .unwrap()
    }

    fn toy() -> IbProblem {
        problem(&[0.7, 0.2, 0.1, 0.5, 0.4, 0.1, 0.1, 0.2, 0.7], 3, 3)
    }

    #[test]
    fn beta_zero_collapses() {
        let p = toy();
        let r = ib_fixed_point(&p, 0.0, &initial_encoder(3, 3).unwrap(), &FixedPointOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.complexity < 1e-9);
    }

    #[test]
    fn identical_beliefs_give_zero_complexity() {
        let p = problem(&[0.2, 0.3, 0.5, 0.2, 0.3, 0.5], 2, 3);
        for beta in [1.0, 10.0, 1000.0] {
            let r = ib_fixed_point(&p, beta, &initial_encoder(2, 2).unwrap(), &FixedPointOptions::default()).unwrap();
            assert!(r.objective().abs() < 1e-9);
        }
    }

    #[test]
    fn trace_never_increases() {
        let p = toy();
        let opts = FixedPointOptions::default();
        let init = ConditionalDistribution::from_weights(DMatrix::from_row_slice(3, 3, &[0.5, 0.3, 0.2, 0.2, 0.6, 0.2, 0.3, 0.3, 0.4])).unwrap();
        let r = ib_fixed_point(&p, 4.0, &init, &opts).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + opts.tol);
        }
    }

    #[test]
    fn measures_match_info_module() {
        let p = toy();
        let init = initial_encoder(3, 3).unwrap();
        let r = ib_fixed_point(&p, 3.0, &init, &FixedPointOptions::default()).unwrap();
        let e = Encoder::from_policy(r.encoder.clone()).unwrap();
        let b = BeliefModel::from_conditional(p.beliefs().clone());
        assert!((complexity(&e) - r.complexity).abs() < 1e-12);
        assert!((accuracy(&e, &b).unwrap() - r.accuracy).abs() < 1e-12);
        assert!((ib_objective(&e, &b, 3.0).unwrap() - r.objective()).abs() < 1e-12);
    }

    #[test]
    fn grid_shape() {
        let g = default_beta_grid();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[99], 1048576.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        // constant ratio
        let r = g[1] / g[0];
        assert!((g[50] / g[49] - r).abs() < 1e-9);
    }

    #[test]
    fn degenerate_beliefs_collapse_frontier() {
        let p = problem(&[0.2, 0.8, 0.2, 0.8, 0.2, 0.8], 3, 2);
        let c = reverse_annealing(&p, &log_beta_grid(1.0, 1e3, 10).unwrap(), &AnnealingOptions::default()).unwrap();
        for pt in c.points() {
            assert!(pt.complexity < 1e-6 && pt.accuracy < 1e-6);
        }
    }

    #[test]
    fn identity_beliefs_reach_lossless_corner() {
        let n = 4;
        let p = IbProblem::with_default_words(ProbVector::uniform(n).unwrap(), ConditionalDistribution::identity(n).unwrap()).unwrap();
        let c = reverse_annealing(&p, &log_beta_grid(1.0, 1e4, 12).unwrap(), &AnnealingOptions::default()).unwrap();
        let top = c.points().last().unwrap();
        assert!((top.complexity - 2.0).abs() < 1e-4 && (top.accuracy - 2.0).abs() < 1e-4);
    }

    #[test]
    fn frontier_value_range_and_grid() {
        let c = reverse_annealing(&toy(), &log_beta_grid(1.0, 64.0, 8).unwrap(), &AnnealingOptions::default()).unwrap();
        assert!(matches!(frontier_value(&c, 0.5), Err(Error::Range(_))));
        assert!(matches!(frontier_value(&c, 65.0), Err(Error::Range(_))));
        for p in c.points() {
            assert_eq!(frontier_value(&c, p.beta).unwrap(), p.optimal_objective);
        }
        assert!(frontier_value(&c, 1.0).unwrap() >= -1e-6);
    }

    #[test]
    fn csv_round_trip_preserves_optima() {
        let c = reverse_annealing(&toy(), &log_beta_grid(1.0, 64.0, 8).unwrap(), &AnnealingOptions::default()).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = FrontierCurve::read_csv(buf.as_slice()).unwrap();
        for (a, b) in c.points().iter().zip(back.points()) {
            assert!((a.optimal_objective - b.optimal_objective).abs() < 1e-9 * (1.0 + a.beta));
            assert_eq!(a.on_frontier, b.on_frontier);
        }
    }

    #[test]
    fn envelope_drops_dominated_points() {
        let c = FrontierCurve::from_raw(vec![
            (1.0, 0.0, 0.0, true),
            (2.0, 1.0, 0.8, true),
            (3.0, 1.5, 0.7, true),
            (4.0, 2.0, 1.2, true),
            (5.0, 3.0, 1.0, false),
        ])
        .unwrap();
        let kept: Vec<f64> = c.frontier().map(|p| p.beta).collect();
        assert_eq!(kept, vec![1.0, 2.0, 4.0]);
        // the unconverged point does not enter F*
        assert_eq!(c.points()[4].optimal_objective, (2.0 - 5.0 * 1.2f64).min(1.0 - 5.0 * 0.8));
    }
}
