//! End-to-end runs: similarity model, beliefs, encoders, frontier and
//! baselines, plus the files each stage writes.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{
    derive_seed, deviation_from_point, perturb_sample, random_sample, warn_if_raised, PerturbationSpec,
    PlaneEvaluator,
};
use crate::config::{PriorSetting, RunConfig};
use crate::encoder::{build_encoders_by_language, parse_alignments, AlignmentTable, Encoder, PriorKind};
use crate::error::{Error, Result};
use crate::frontier::{reverse_annealing, FrontierCurve, IbProblem};
use crate::info::ProbVector;
use crate::meaning::{belief_from_similarity, BeliefModel};
use crate::output::{fmt_num, Staging};
use crate::similarity::{
    classical_mds, cosine_baseline, empirical_similarity, nested_cv, pairs_within, parse_embeddings,
    parse_pile_sort, select_hyperparameters, select_representatives, spearman_rho, train_low_rank, CvReport,
    EmbeddingSet, Hyperparameters, LowRankModel, MdsResult, ModelFamily, PileSortDataset, SimilarityMatrix,
};

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref().ok_or_else(|| Error::Config(format!("no {what} file given")))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Config(format!("cannot open `{}`: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        Error::EmptyInput(m) => Error::EmptyInput(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_pile_sort(cfg: &RunConfig) -> Result<PileSortDataset> {
    let path = require(&cfg.inputs.pile_sort, "pile-sort")?;
    with_path(path, parse_pile_sort(open(path)?))
}

pub fn load_embeddings(cfg: &RunConfig) -> Result<EmbeddingSet> {
    let path = require(&cfg.inputs.embeddings, "embedding")?;
    with_path(path, parse_embeddings(open(path)?))
}

pub fn load_alignments(cfg: &RunConfig) -> Result<AlignmentTable> {
    let path = require(&cfg.inputs.alignments, "alignment")?;
    with_path(path, parse_alignments(open(path)?))
}

pub fn load_model(path: &Path) -> Result<LowRankModel> {
    serde_json::from_reader(open(path)?)
        .map_err(|e| Error::validation(format!("cannot read model `{}`: {e}", path.display())))
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Serialize)]
pub struct LowRankSummary {
    pub rank: usize,
    pub cv: CvReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectedModel {
    pub rank: usize,
    pub penalty: f64,
    /// Pooled validation rho behind the penalty choice, when there was a choice.
    pub selection_rho: Option<f64>,
    pub final_loss: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityReport {
    pub items: Vec<String>,
    pub participants: usize,
    pub folds: usize,
    pub cv_seed: u64,
    /// Cosine baseline scored on every pair, with no training involved.
    pub cosine_all_pairs_rho: Option<f64>,
    pub cosine: CvReport,
    pub ridge: CvReport,
    pub low_rank: Vec<LowRankSummary>,
    pub selected: SelectedModel,
}

#[derive(Debug, Clone)]
pub struct SimilarityOutcome {
    pub report: SimilarityReport,
    pub model: LowRankModel,
}

/// Scores cosine, ridge and one low-rank family per rank by nested CV,
/// then refits the best rank on every item.
pub fn run_similarity(cfg: &RunConfig) -> Result<SimilarityOutcome> {
    let piles = load_pile_sort(cfg)?;
    let target = empirical_similarity(&piles)?;
    let embeddings = load_embeddings(cfg)?.select_ids(target.items())?;
    similarity_from_data(cfg, &embeddings, &target, piles.participant_count())
}

pub fn similarity_from_data(
    cfg: &RunConfig,
    embeddings: &EmbeddingSet,
    target: &SimilarityMatrix,
    participants: usize,
) -> Result<SimilarityOutcome> {
    let s = &cfg.similarity;
    let target = target.aligned_to(embeddings.ids())?;
    let all_pairs = pairs_within(&(0..target.len()).collect::<Vec<_>>());
    let cosine_all = cosine_baseline(embeddings)?;
    let cosine_all_pairs_rho = spearman_rho(&cosine_all.pair_values(&all_pairs), &target.pair_values(&all_pairs)).ok();

    let cosine = nested_cv(embeddings, &target, &ModelFamily::Cosine, s.folds, s.cv_seed)?;
    let ridge = nested_cv(embeddings, &target, &ModelFamily::Ridge { alphas: s.ridge_alphas.clone() }, s.folds, s.cv_seed)?;
    let family = |ranks: Vec<usize>| ModelFamily::LowRank {
        ranks,
        penalties: s.penalties.clone(),
        options: s.train_options(),
        seed: s.init_seed,
    };
    let low_rank = s
        .ranks
        .iter()
        .map(|&rank| Ok(LowRankSummary { rank, cv: nested_cv(embeddings, &target, &family(vec![rank]), s.folds, s.cv_seed)? }))
        .collect::<Result<Vec<_>>>()?;
    let best = low_rank
        .iter()
        .fold(&low_rank[0], |b, r| if r.cv.mean_rho > b.cv.mean_rho { r } else { b });
    let (chosen, selection_rho) = select_hyperparameters(embeddings, &target, &family(vec![best.rank]), s.folds, s.cv_seed)?;
    let Hyperparameters::LowRank { rank, penalty } = chosen else {
        unreachable!("low-rank family yields low-rank hyperparameters")
    };
    let (model, train) = train_low_rank(embeddings, &target, rank, penalty, s.init_seed, &s.train_options())?;
    if !train.converged {
        log::warn!("final low-rank model (D = {rank}) stopped at the iteration limit");
    }
    let report = SimilarityReport {
        items: embeddings.ids().to_vec(),
        participants,
        folds: s.folds,
        cv_seed: s.cv_seed,
        cosine_all_pairs_rho,
        cosine,
        ridge,
        low_rank,
        selected: SelectedModel { rank, penalty, selection_rho, final_loss: train.final_loss(), converged: train.converged },
    };
    Ok(SimilarityOutcome { report, model })
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

pub fn write_similarity(out: &SimilarityOutcome, st: &Staging) -> Result<Vec<&'static str>> {
    let r = &out.report;
    serde_json::to_writer_pretty(BufWriter::new(File::create(st.path("similarity_report.json"))?), r)?;
    let mut w = csv::Writer::from_path(st.path("similarity_report.csv"))?;
    w.write_record(["model", "rank", "mean_rho", "std_rho"])?;
    w.write_record(["cosine_all_pairs", "", &opt_num(r.cosine_all_pairs_rho), ""])?;
    for (name, cv) in [("cosine", &r.cosine), ("ridge", &r.ridge)] {
        w.write_record([name, "", &fmt_num(cv.mean_rho), &fmt_num(cv.std_rho)])?;
    }
    for lr in &r.low_rank {
        w.write_record(["low_rank", &lr.rank.to_string(), &fmt_num(lr.cv.mean_rho), &fmt_num(lr.cv.std_rho)])?;
    }
    w.flush()?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(st.path("lowrank_model.json"))?), &out.model)?;
    Ok(vec!["similarity_report.json", "similarity_report.csv", "lowrank_model.json"])
}

/// The trained model from `inputs.model`, or a fresh one from the pile-sort data.
pub fn load_or_train_model(cfg: &RunConfig) -> Result<(LowRankModel, Option<SimilarityOutcome>)> {
    match &cfg.inputs.model {
        Some(path) => Ok((load_model(path)?, None)),
        None => {
            let out = run_similarity(cfg)?;
            Ok((out.model.clone(), Some(out)))
        }
    }
}

/// Everything the frontier and the baselines are computed over.
#[derive(Debug, Clone)]
pub struct MeaningSpace {
    pub meanings: Vec<String>,
    pub prior: ProbVector,
    pub beliefs: BeliefModel,
    /// One encoder per target language, sorted by language.
    pub encoders: Vec<(String, Encoder)>,
}

pub fn build_meaning_space(cfg: &RunConfig, model: &LowRankModel) -> Result<MeaningSpace> {
    let mut table = load_alignments(cfg)?;
    if let Some(langs) = &cfg.encoders.languages {
        let present = table.languages().into_iter().map(String::from).collect::<BTreeSet<_>>();
        let missing: Vec<&String> = langs.iter().filter(|l| !present.contains(*l)).collect();
        if !missing.is_empty() {
            return Err(Error::validation(format!("languages {missing:?} do not occur in the alignment file")));
        }
        table = AlignmentTable::new(table.records.into_iter().filter(|r| langs.contains(&r.target_language)).collect())?;
    }
    let all = table.meanings().len();
    let keep = table.cross_aligned_meanings();
    if keep.is_empty() {
        return Err(Error::EmptyInput("no meaning is aligned in every target language".into()));
    }
    if keep.len() < all {
        log::info!("{} of {all} meanings are aligned in every language; the rest are left out", keep.len());
    }
    let table = table.restrict_meanings(&keep);
    let meanings: Vec<String> = keep.into_iter().collect();

    let prior = match cfg.encoders.prior {
        PriorSetting::Uniform => ProbVector::uniform(meanings.len())?,
        PriorSetting::Frequency => {
            // pooled over languages so that every encoder shares one frontier
            let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
            for r in &table.records {
                *counts.entry(r.meaning_key.as_str()).or_default() += 1.0;
            }
            ProbVector::from_weights(meanings.iter().map(|m| counts[m.as_str()]).collect())?
        }
    };
    let encoders = build_encoders_by_language(&table, PriorKind::Uniform)?
        .into_iter()
        .map(|(lang, e)| Ok((lang, e.with_prior(prior.clone())?)))
        .collect::<Result<Vec<_>>>()?;

    let embeddings = load_embeddings(cfg)?.map_ids(crate::encoder::normalize_meaning_key)?;
    let vectors = embeddings.select_ids(&meanings).map_err(|e| match e {
        Error::Dimension(m) => Error::Dimension(format!("meaning keys without embeddings: {m}")),
        other => other,
    })?;
    if vectors.dim() != model.dim() {
        return Err(Error::dimension(format!(
            "embeddings have dimension {} but the model expects {}",
            vectors.dim(),
            model.dim()
        )));
    }
    let predicted = model.predict_matrix(&vectors)?;
    let beliefs = belief_from_similarity(&predicted, cfg.beliefs.gamma)?;
    Ok(MeaningSpace { meanings, prior, beliefs, encoders })
}

pub fn compute_frontier(cfg: &RunConfig, space: &MeaningSpace) -> Result<FrontierCurve> {
    let words = cfg.frontier.max_words.unwrap_or(space.meanings.len());
    let problem = IbProblem::new(space.prior.clone(), space.beliefs.conditional().clone(), words)?;
    log::info!(
        "tracing frontier over {} β values, jitter {}",
        cfg.frontier.beta_count,
        cfg.frontier.jitter
    );
    let curve = reverse_annealing(&problem, &cfg.frontier.grid()?, &cfg.frontier.annealing())?;
    let stuck: Vec<f64> = curve.points().iter().filter(|p| !p.converged).map(|p| p.beta).collect();
    if cfg.run.strict && !stuck.is_empty() {
        return Err(Error::NonConvergence(format!("frontier did not converge at β = {stuck:?}")));
    }
    Ok(curve)
}

pub fn load_frontier(path: &Path) -> Result<FrontierCurve> {
    with_path(path, FrontierCurve::read_csv(open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Attested,
    Perturbed,
    Random,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Attested => "attested",
            PointKind::Perturbed => "perturbed",
            PointKind::Random => "random",
        }
    }
}

/// An encoder placed in the information plane together with its ε.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneRecord {
    pub label: String,
    pub kind: PointKind,
    pub language: String,
    pub fraction: Option<f64>,
    pub complexity: f64,
    pub accuracy: f64,
    pub epsilon: f64,
    pub argmin_beta: f64,
}

fn record(
    ev: &PlaneEvaluator,
    curve: &FrontierCurve,
    e: &Encoder,
    label: String,
    kind: PointKind,
    language: &str,
    fraction: Option<f64>,
) -> Result<PlaneRecord> {
    let (complexity, accuracy) = ev.evaluate(e.policy())?;
    let dev = deviation_from_point(label, complexity, accuracy, curve)?;
    Ok(PlaneRecord {
        label: dev.label,
        kind,
        language: language.to_string(),
        fraction,
        complexity,
        accuracy,
        epsilon: dev.epsilon,
        argmin_beta: dev.argmin_beta,
    })
}

/// Attested encoders, their perturbations and random encoders, each with ε.
/// Row order is fixed: by language, then attested, perturbed by fraction,
/// random; samples by index.
pub fn evaluate_encoders(cfg: &RunConfig, space: &MeaningSpace, curve: &FrontierCurve) -> Result<Vec<PlaneRecord>> {
    let b = &cfg.baselines;
    let ev = PlaneEvaluator::new(&space.prior, &space.beliefs)?;
    let mut out = Vec::new();
    for (li, (lang, e)) in space.encoders.iter().enumerate() {
        out.push(record(&ev, curve, e, lang.clone(), PointKind::Attested, lang, None)?);
        for (fi, &fraction) in b.fractions.iter().enumerate() {
            let spec = PerturbationSpec::new(fraction, b.perturbed_count, derive_seed(b.perturb_seed, &[li as u64, fi as u64]))?;
            if li == 0 {
                warn_if_raised(&spec, e.meaning_count(), spec.rows_moved(e.meaning_count())?);
            }
            let rows = (0..b.perturbed_count as u64)
                .into_par_iter()
                .map(|i| {
                    let p = perturb_sample(e, &spec, i)?;
                    let label = format!("{lang}:perturbed:{}:{i}", fmt_num(fraction));
                    record(&ev, curve, &p, label, PointKind::Perturbed, lang, Some(fraction))
                })
                .collect::<Result<Vec<_>>>()?;
            out.extend(rows);
        }
        let seed = derive_seed(b.random_seed, &[li as u64]);
        let rows = (0..b.random_count as u64)
            .into_par_iter()
            .map(|i| {
                let r = random_sample(e, b.random_mode, seed, i)?;
                record(&ev, curve, &r, format!("{lang}:random:{i}"), PointKind::Random, lang, None)
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(rows);
    }
    Ok(out)
}

/// Results of an analysis run, before anything is written.
#[derive(Debug, Clone)]
pub struct AnalysisBundle {
    pub frontier: Option<FrontierCurve>,
    pub records: Vec<PlaneRecord>,
    pub similarity: Option<SimilarityOutcome>,
    pub meanings: usize,
    pub languages: Vec<String>,
}

pub fn run_analysis(cfg: &RunConfig) -> Result<AnalysisBundle> {
    cfg.validate()?;
    let (model, similarity) = load_or_train_model(cfg)?;
    let space = build_meaning_space(cfg, &model)?;
    let frontier = compute_frontier(cfg, &space)?;
    let records = evaluate_encoders(cfg, &space, &frontier)?;
    Ok(AnalysisBundle {
        frontier: Some(frontier),
        records,
        similarity,
        meanings: space.meanings.len(),
        languages: space.encoders.iter().map(|(l, _)| l.clone()).collect(),
    })
}

/// Writes `infoplane.csv` and `deviations.csv`. With `plot_jitter` on, a
/// `complexity_display` column holds complexity plus seeded Gaussian noise,
/// for plotting only; the true values are untouched.
pub fn emit_plot_data(bundle: &AnalysisBundle, cfg: &RunConfig, st: &Staging) -> Result<Vec<&'static str>> {
    let mut missing = Vec::new();
    if bundle.frontier.as_ref().is_none_or(|c| c.points().iter().all(|p| !p.converged)) {
        missing.push("frontier");
    }
    if !bundle.records.iter().any(|r| r.kind == PointKind::Attested) {
        missing.push("attested plane points");
    }
    if !missing.is_empty() {
        return Err(Error::validation(format!("analysis bundle is incomplete; missing {missing:?}")));
    }
    let out = &cfg.output;
    let mut rng = ChaCha8Rng::seed_from_u64(out.jitter_seed);
    let mut plane = csv::Writer::from_path(st.path("infoplane.csv"))?;
    let mut header = vec!["label", "kind", "language", "fraction", "complexity_bits", "accuracy_bits"];
    if out.plot_jitter {
        header.push("complexity_display");
    }
    plane.write_record(&header)?;
    let mut devs = csv::Writer::from_path(st.path("deviations.csv"))?;
    devs.write_record(["label", "kind", "fraction", "epsilon_bits", "argmin_beta"])?;
    for r in &bundle.records {
        let mut row = vec![
            r.label.clone(),
            r.kind.as_str().to_string(),
            r.language.clone(),
            opt_num(r.fraction),
            fmt_num(r.complexity),
            fmt_num(r.accuracy),
        ];
        if out.plot_jitter {
            let z: f64 = StandardNormal.sample(&mut rng);
            row.push(fmt_num(r.complexity + out.jitter_scale * z));
        }
        plane.write_record(&row)?;
        devs.write_record([
            r.label.as_str(),
            r.kind.as_str(),
            &opt_num(r.fraction),
            &fmt_num(r.epsilon),
            &fmt_num(r.argmin_beta),
        ])?;
    }
    plane.flush()?;
    devs.flush()?;
    Ok(vec!["infoplane.csv", "deviations.csv"])
}

pub fn write_frontier(curve: &FrontierCurve, st: &Staging) -> Result<Vec<&'static str>> {
    curve.write_csv(BufWriter::new(File::create(st.path("frontier.csv"))?))?;
    Ok(vec!["frontier.csv"])
}

/// Writes the merged config and `manifest.json`, which records the config
/// hash, every seed and a SHA-256 of each listed output.
pub fn write_manifest(
    cfg: &RunConfig,
    command: &str,
    st: &Staging,
    files: &[&str],
    extra: serde_json::Value,
) -> Result<()> {
    fs::write(st.path("config.toml"), cfg.to_toml()?)?;
    let mut hashes = BTreeMap::new();
    for f in files.iter().copied().chain(["config.toml"]) {
        hashes.insert(f.to_string(), hex::encode(Sha256::digest(fs::read(st.path(f))?)));
    }
    let manifest = serde_json::json!({
        "command": command,
        "config_hash": cfg.hash()?,
        "seeds": {
            "cv": cfg.similarity.cv_seed,
            "low_rank_init": cfg.similarity.init_seed,
            "frontier_jitter": cfg.frontier.seed,
            "perturbation": cfg.baselines.perturb_seed,
            "random": cfg.baselines.random_seed,
            "plot_jitter": cfg.output.jitter_seed,
            "select": cfg.select.seed,
        },
        "gamma": cfg.beliefs.gamma,
        "frontier_jitter_scale": cfg.frontier.jitter,
        "files": hashes,
        "details": extra,
        "version": env!("CARGO_PKG_VERSION"),
    });
    serde_json::to_writer_pretty(BufWriter::new(File::create(st.path("manifest.json"))?), &manifest)?;
    Ok(())
}

fn frontier_details(curve: &FrontierCurve) -> serde_json::Value {
    let stuck: Vec<f64> = curve.points().iter().filter(|p| !p.converged).map(|p| p.beta).collect();
    serde_json::json!({
        "frontier_points": curve.points().len(),
        "frontier_retained": curve.frontier().count(),
        "unconverged_betas": stuck,
    })
}

fn merge(a: serde_json::Value, b: serde_json::Value) -> serde_json::Value {
    match (a, b) {
        (serde_json::Value::Object(mut x), serde_json::Value::Object(y)) => {
            x.extend(y);
            serde_json::Value::Object(x)
        }
        (x, _) => x,
    }
}

/// Full `analyze` run into `cfg.output.dir`. Nothing is written unless
/// every stage succeeds.
pub fn analyze(cfg: &RunConfig) -> Result<AnalysisBundle> {
    let bundle = run_analysis(cfg)?;
    let st = Staging::new(&cfg.output.dir)?;
    let mut files = Vec::new();
    if let Some(sim) = &bundle.similarity {
        files.extend(write_similarity(sim, &st)?);
    }
    let curve = bundle.frontier.as_ref().expect("analysis computes a frontier");
    files.extend(write_frontier(curve, &st)?);
    files.extend(emit_plot_data(&bundle, cfg, &st)?);
    let details = merge(
        frontier_details(curve),
        serde_json::json!({ "meanings": bundle.meanings, "languages": bundle.languages, "points": bundle.records.len() }),
    );
    write_manifest(cfg, "analyze", &st, &files, details)?;
    st.commit()?;
    Ok(bundle)
}

pub fn similarity(cfg: &RunConfig) -> Result<SimilarityOutcome> {
    cfg.validate()?;
    let out = run_similarity(cfg)?;
    let st = Staging::new(&cfg.output.dir)?;
    let files = write_similarity(&out, &st)?;
    write_manifest(cfg, "similarity", &st, &files, serde_json::json!({ "items": out.report.items.len() }))?;
    st.commit()?;
    Ok(out)
}

pub fn frontier(cfg: &RunConfig) -> Result<FrontierCurve> {
    cfg.validate()?;
    let (model, sim) = load_or_train_model(cfg)?;
    let space = build_meaning_space(cfg, &model)?;
    let curve = compute_frontier(cfg, &space)?;
    let st = Staging::new(&cfg.output.dir)?;
    let mut files = Vec::new();
    if let Some(sim) = &sim {
        files.extend(write_similarity(sim, &st)?);
    }
    files.extend(write_frontier(&curve, &st)?);
    write_manifest(cfg, "frontier", &st, &files, frontier_details(&curve))?;
    st.commit()?;
    Ok(curve)
}

/// Deviations against `inputs.frontier` when given, otherwise against a
/// freshly traced frontier.
pub fn deviations(cfg: &RunConfig) -> Result<AnalysisBundle> {
    cfg.validate()?;
    let (model, similarity) = load_or_train_model(cfg)?;
    let space = build_meaning_space(cfg, &model)?;
    let curve = match &cfg.inputs.frontier {
        Some(path) => load_frontier(path)?,
        None => compute_frontier(cfg, &space)?,
    };
    let records = evaluate_encoders(cfg, &space, &curve)?;
    let bundle = AnalysisBundle {
        frontier: Some(curve),
        records,
        similarity,
        meanings: space.meanings.len(),
        languages: space.encoders.iter().map(|(l, _)| l.clone()).collect(),
    };
    let st = Staging::new(&cfg.output.dir)?;
    let files = emit_plot_data(&bundle, cfg, &st)?;
    write_manifest(cfg, "deviations", &st, &files, serde_json::json!({ "points": bundle.records.len() }))?;
    st.commit()?;
    Ok(bundle)
}

/// Classical MDS of the empirical pile-sort similarities into `mds.json`.
pub fn mds(cfg: &RunConfig) -> Result<MdsResult> {
    cfg.validate()?;
    let piles = load_pile_sort(cfg)?;
    let result = classical_mds(&empirical_similarity(&piles)?, cfg.mds.dims)?;
    let st = Staging::new(&cfg.output.dir)?;
    serde_json::to_writer_pretty(BufWriter::new(File::create(st.path("mds.json"))?), &result)?;
    write_manifest(cfg, "mds", &st, &["mds.json"], serde_json::json!({ "dims": cfg.mds.dims }))?;
    st.commit()?;
    Ok(result)
}

/// k-means representatives of the embedding file into `representatives.csv`.
pub fn select(cfg: &RunConfig) -> Result<Vec<String>> {
    cfg.validate()?;
    let e = load_embeddings(cfg)?;
    let chosen = select_representatives(&e, cfg.select.k, cfg.select.seed)?;
    let st = Staging::new(&cfg.output.dir)?;
    let mut w = csv::Writer::from_path(st.path("representatives.csv"))?;
    w.write_record(["cluster", "item_id"])?;
    for (k, id) in chosen.iter().enumerate() {
        w.write_record([k.to_string(), id.clone()])?;
    }
    w.flush()?;
    drop(w);
    write_manifest(cfg, "select", &st, &["representatives.csv"], serde_json::json!({ "k": cfg.select.k }))?;
    st.commit()?;
    Ok(chosen)
}
