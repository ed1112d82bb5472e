//! Python bindings. Matrices cross the boundary as lists of rows.

use std::fs::File;
use std::path::PathBuf;

use ibtrans::baselines::{self, PerturbationSpec, PlaneEvaluator, RandomMode};
use ibtrans::config::RunConfig;
use ibtrans::encoder::{self, Encoder};
use ibtrans::frontier::{self, AnnealingOptions, FixedPointOptions, FrontierCurve, IbProblem};
use ibtrans::info::{self, ConditionalDistribution, JointDistribution, ProbVector};
use ibtrans::meaning::{self, BeliefModel};
use ibtrans::pipeline;
use ibtrans::similarity::{self, EmbeddingSet, ModelFamily, SimilarityKind, SimilarityMatrix, TrainOptions};
use ibtrans::Error;
use nalgebra::DMatrix;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<f64>>;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::NonConvergence(_) | Error::Divergence(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &Rows) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("expected a non-empty rectangular matrix"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn conditional(rows: &Rows) -> PyResult<ConditionalDistribution> {
    ConditionalDistribution::new(matrix(rows)?).map_err(py_err)
}

fn prior_or_uniform(prior: Option<Vec<f64>>, n: usize) -> PyResult<ProbVector> {
    match prior {
        Some(p) => ProbVector::new(p),
        None => ProbVector::uniform(n),
    }
    .map_err(py_err)
}

fn encoder(policy: &Rows, prior: Option<Vec<f64>>) -> PyResult<Encoder> {
    let q = conditional(policy)?;
    let p = prior_or_uniform(prior, q.nrows())?;
    Encoder::from_policy(q).and_then(|e| e.with_prior(p)).map_err(py_err)
}

fn mode(name: &str) -> PyResult<RandomMode> {
    match name {
        "onehot" => Ok(RandomMode::OneHot),
        "soft" => Ok(RandomMode::Soft),
        _ => Err(PyValueError::new_err(format!("mode must be 'onehot' or 'soft', got '{name}'"))),
    }
}

/// Entropy in bits.
#[pyfunction]
fn entropy(p: Vec<f64>) -> PyResult<f64> {
    Ok(info::entropy(&ProbVector::new(p).map_err(py_err)?))
}

/// D(p || q) in bits.
#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = ProbVector::new(p).map_err(py_err)?;
    let q = ProbVector::new(q).map_err(py_err)?;
    info::kl_divergence(&p, &q).map_err(py_err)
}

/// I(X;Y) in bits for a joint distribution with X on rows.
#[pyfunction]
fn mutual_information(joint: Rows) -> PyResult<f64> {
    Ok(info::mutual_information(&JointDistribution::new(matrix(&joint)?).map_err(py_err)?))
}

/// I(M;W) of an encoder p(w|m); the prior defaults to uniform.
#[pyfunction]
#[pyo3(signature = (policy, prior=None))]
fn complexity(policy: Rows, prior: Option<Vec<f64>>) -> PyResult<f64> {
    Ok(encoder::complexity(&encoder(&policy, prior)?))
}

/// I(W;U) of an encoder under beliefs p(u|m).
#[pyfunction]
#[pyo3(signature = (policy, beliefs, prior=None))]
fn accuracy(policy: Rows, beliefs: Rows, prior: Option<Vec<f64>>) -> PyResult<f64> {
    let b = BeliefModel::from_conditional(conditional(&beliefs)?);
    encoder::accuracy(&encoder(&policy, prior)?, &b).map_err(py_err)
}

/// Belief rows p(u|m) proportional to exp(gamma * similarity).
#[pyfunction]
fn beliefs_from_similarity(similarity: Rows, gamma: f64) -> PyResult<Rows> {
    let s = matrix(&similarity)?;
    let ids = (0..s.nrows()).map(|i| i.to_string()).collect();
    let s = SimilarityMatrix::new(s, SimilarityKind::Predicted, ids).map_err(py_err)?;
    let b = meaning::belief_from_similarity(&s, gamma).map_err(py_err)?;
    Ok(rows_of(b.conditional().matrix()))
}

/// Perturbed copies of an encoder: `fraction` of its rows permuted per copy.
#[pyfunction]
#[pyo3(signature = (policy, fraction, count, seed=0))]
fn perturb(policy: Rows, fraction: f64, count: usize, seed: u64) -> PyResult<Vec<Rows>> {
    let spec = PerturbationSpec::new(fraction, count, seed).map_err(py_err)?;
    let out = baselines::perturb_encoder(&encoder(&policy, None)?, &spec).map_err(py_err)?;
    Ok(out.iter().map(|e| rows_of(e.policy().matrix())).collect())
}

/// Random encoders over `lexicon` words for `meanings` meanings.
#[pyfunction]
#[pyo3(signature = (lexicon, meanings, count, seed=0, mode="onehot"))]
fn random_encoders(lexicon: usize, meanings: usize, count: usize, seed: u64, mode: &str) -> PyResult<Vec<Rows>> {
    let template = baselines::random_encoder(lexicon, meanings, seed).map_err(py_err)?;
    let m = self::mode(mode)?;
    let out = baselines::random_like(&template, count, m, seed).map_err(py_err)?;
    Ok(out.iter().map(|e| rows_of(e.policy().matrix())).collect())
}

/// An IB frontier traced by reverse annealing, or read from CSV.
#[pyclass(module = "ibtrans")]
struct Frontier {
    curve: FrontierCurve,
    evaluator: Option<PlaneEvaluator>,
}

#[pymethods]
impl Frontier {
    #[staticmethod]
    #[pyo3(signature = (beliefs, prior=None, betas=None, max_words=None, tol=1e-8, max_iters=10_000, jitter=1e-3, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn compute(
        py: Python<'_>,
        beliefs: Rows,
        prior: Option<Vec<f64>>,
        betas: Option<Vec<f64>>,
        max_words: Option<usize>,
        tol: f64,
        max_iters: usize,
        jitter: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let b = conditional(&beliefs)?;
        let p = prior_or_uniform(prior, b.nrows())?;
        let words = max_words.unwrap_or(b.nrows());
        let problem = IbProblem::new(p.clone(), b.clone(), words).map_err(py_err)?;
        let betas = betas.unwrap_or_else(frontier::default_beta_grid);
        let opts = AnnealingOptions { fixed_point: FixedPointOptions { tol, max_iters }, jitter, seed };
        let curve = py.detach(|| frontier::reverse_annealing(&problem, &betas, &opts)).map_err(py_err)?;
        let evaluator = PlaneEvaluator::new(&p, &BeliefModel::from_conditional(b)).map_err(py_err)?;
        Ok(Frontier { curve, evaluator: Some(evaluator) })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        let f = File::open(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        Ok(Frontier { curve: FrontierCurve::read_csv(f).map_err(py_err)?, evaluator: None })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        let f = File::create(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        self.curve.write_csv(f).map_err(py_err)
    }

    #[getter]
    fn betas(&self) -> Vec<f64> {
        self.curve.betas()
    }

    /// (beta, complexity, accuracy, converged, on_frontier) per grid point.
    fn points(&self) -> Vec<(f64, f64, f64, bool, bool)> {
        self.curve.points().iter().map(|p| (p.beta, p.complexity, p.accuracy, p.converged, p.on_frontier)).collect()
    }

    /// Encoder found at grid point `index`, when the curve was computed here.
    fn encoder(&self, index: usize) -> PyResult<Option<Rows>> {
        let p = self.curve.points().get(index).ok_or_else(|| PyValueError::new_err("index out of range"))?;
        Ok(p.encoder.as_ref().map(|q| rows_of(q.matrix())))
    }

    /// Optimal objective F*_beta.
    fn value(&self, beta: f64) -> PyResult<f64> {
        frontier::frontier_value(&self.curve, beta).map_err(py_err)
    }

    /// (epsilon, argmin beta) for a point of the information plane.
    fn deviation(&self, complexity: f64, accuracy: f64) -> PyResult<(f64, f64)> {
        let r = baselines::deviation_from_point("point", complexity, accuracy, &self.curve).map_err(py_err)?;
        Ok((r.epsilon, r.argmin_beta))
    }

    /// (epsilon, argmin beta) for an encoder under the beliefs this
    /// frontier was computed from.
    fn encoder_deviation(&self, policy: Rows) -> PyResult<(f64, f64)> {
        let ev = self
            .evaluator
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("frontier was loaded from CSV; use deviation(complexity, accuracy)"))?;
        let (c, a) = ev.evaluate(&conditional(&policy)?).map_err(py_err)?;
        self.deviation(c, a)
    }

    fn __len__(&self) -> usize {
        self.curve.points().len()
    }
}

fn embeddings(vectors: &Rows) -> PyResult<EmbeddingSet> {
    let ids = (0..vectors.len()).map(|i| i.to_string()).collect();
    EmbeddingSet::new(ids, matrix(vectors)?).map_err(py_err)
}

fn target(similarity: &Rows) -> PyResult<SimilarityMatrix> {
    let s = matrix(similarity)?;
    let ids = (0..s.nrows()).map(|i| i.to_string()).collect();
    // any symmetric target is accepted, not only co-pile proportions
    SimilarityMatrix::new(s, SimilarityKind::Predicted, ids).map_err(py_err)
}

/// Low-rank bilinear similarity model sim(i, j) = (P f_i).(P f_j).
#[pyclass(module = "ibtrans")]
struct LowRankModel {
    model: similarity::LowRankModel,
}

#[pymethods]
impl LowRankModel {
    #[staticmethod]
    #[pyo3(signature = (vectors, similarity, rank, penalty=0.0, seed=0, max_iters=5000))]
    fn train(
        py: Python<'_>,
        vectors: Rows,
        similarity: Rows,
        rank: usize,
        penalty: f64,
        seed: u64,
        max_iters: usize,
    ) -> PyResult<Self> {
        let (e, s) = (embeddings(&vectors)?, target(&similarity)?);
        let opts = TrainOptions { max_iters, ..TrainOptions::default() };
        let (model, _) = py.detach(|| similarity::train_low_rank(&e, &s, rank, penalty, seed, &opts)).map_err(py_err)?;
        Ok(LowRankModel { model })
    }

    #[getter]
    fn projection(&self) -> Rows {
        rows_of(self.model.projection())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.model.rank()
    }

    fn predict_pair(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
        similarity::predict_similarity(&self.model, &a, &b).map_err(py_err)
    }

    fn predict(&self, vectors: Rows) -> PyResult<Rows> {
        let s = self.model.predict_matrix(&embeddings(&vectors)?).map_err(py_err)?;
        Ok(rows_of(s.values()))
    }
}

/// Nested item cross-validation. Returns (mean rho, std rho) over outer folds.
#[pyfunction]
#[pyo3(signature = (vectors, similarity, model, folds=6, seed=0, ranks=vec![5], penalties=vec![0.0], alphas=vec![1.0]))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    vectors: Rows,
    similarity: Rows,
    model: &str,
    folds: usize,
    seed: u64,
    ranks: Vec<usize>,
    penalties: Vec<f64>,
    alphas: Vec<f64>,
) -> PyResult<(f64, f64)> {
    let family = match model {
        "cosine" => ModelFamily::Cosine,
        "ridge" => ModelFamily::Ridge { alphas },
        "low_rank" => ModelFamily::LowRank { ranks, penalties, options: TrainOptions::default(), seed },
        _ => return Err(PyValueError::new_err("model must be 'cosine', 'ridge' or 'low_rank'")),
    };
    let (e, s) = (embeddings(&vectors)?, target(&similarity)?);
    let r = py.detach(|| similarity::nested_cv(&e, &s, &family, folds, seed)).map_err(py_err)?;
    Ok((r.mean_rho, r.std_rho))
}

/// Runs the full analysis for a TOML config and writes its outputs.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn analyze<'py>(py: Python<'py>, config: PathBuf, out_dir: Option<PathBuf>) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = RunConfig::load(&config).map_err(py_err)?;
    if let Some(dir) = out_dir {
        cfg.output.dir = dir;
    }
    cfg.validate().map_err(py_err)?;
    let threads = cfg.run.threads;
    let bundle = py
        .detach(|| pipeline::with_threads(threads, || pipeline::analyze(&cfg)))
        .map_err(py_err)?
        .map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("meanings", bundle.meanings)?;
    out.set_item("languages", bundle.languages.clone())?;
    out.set_item("points", bundle.records.len())?;
    out.set_item("out_dir", cfg.output.dir.display().to_string())?;
    Ok(out)
}

#[pymodule(name = "ibtrans")]
fn ibtrans_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(complexity, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(beliefs_from_similarity, m)?)?;
    m.add_function(wrap_pyfunction!(perturb, m)?)?;
    m.add_function(wrap_pyfunction!(random_encoders, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_class::<Frontier>()?;
    m.add_class::<LowRankModel>()?;
    Ok(())
}
