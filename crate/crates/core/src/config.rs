//! Run configuration: a TOML file whose values command-line flags may
//! override. The merged result is what gets written next to the outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::RandomMode;
use crate::encoder::PriorKind;
use crate::error::{Error, Result};
use crate::frontier::{log_beta_grid, AnnealingOptions, FixedPointOptions};
use crate::similarity::TrainOptions;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub alignments: Option<PathBuf>,
    pub pile_sort: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// A previously trained low-rank model; skips similarity training.
    pub model: Option<PathBuf>,
    /// A previously computed frontier CSV, used by `deviations`.
    pub frontier: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimilarityConfig {
    pub folds: usize,
    pub ranks: Vec<usize>,
    pub penalties: Vec<f64>,
    pub ridge_alphas: Vec<f64>,
    pub max_iters: usize,
    /// Fold assignment.
    pub cv_seed: u64,
    /// Initial projection of the low-rank model.
    pub init_seed: u64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            folds: 6,
            ranks: vec![1, 5, 10, 15, 20, 50, 100],
            penalties: vec![0.0, 1e-3, 1e-2, 1e-1, 1.0],
            ridge_alphas: vec![0.1, 1.0, 10.0, 100.0, 1000.0],
            max_iters: TrainOptions::default().max_iters,
            cv_seed: 0,
            init_seed: 0,
        }
    }
}

impl SimilarityConfig {
    pub fn train_options(&self) -> TrainOptions {
        TrainOptions { max_iters: self.max_iters, ..TrainOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeliefConfig {
    pub gamma: f64,
}

impl Default for BeliefConfig {
    fn default() -> Self {
        BeliefConfig { gamma: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontierConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_count: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub jitter: f64,
    pub seed: u64,
    /// Bound on the number of words; the meaning count when absent.
    pub max_words: Option<usize>,
}

impl Default for FrontierConfig {
    fn default() -> Self {
        FrontierConfig {
            beta_min: 1.0,
            beta_max: (1u64 << 20) as f64,
            beta_count: 100,
            tol: 1e-8,
            max_iters: 10_000,
            jitter: 1e-3,
            seed: 0,
            max_words: None,
        }
    }
}

impl FrontierConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        log_beta_grid(self.beta_min, self.beta_max, self.beta_count)
    }

    pub fn annealing(&self) -> AnnealingOptions {
        AnnealingOptions {
            fixed_point: FixedPointOptions { tol: self.tol, max_iters: self.max_iters },
            jitter: self.jitter,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub fractions: Vec<f64>,
    /// Perturbed samples per fraction and language.
    pub perturbed_count: usize,
    /// Random encoders per language.
    pub random_count: usize,
    pub random_mode: RandomMode,
    pub perturb_seed: u64,
    pub random_seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            fractions: vec![0.01, 0.05, 0.10],
            perturbed_count: 10_000,
            random_count: 100_000,
            random_mode: RandomMode::OneHot,
            perturb_seed: 0,
            random_seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorSetting {
    #[default]
    Uniform,
    Frequency,
}

impl From<PriorSetting> for PriorKind {
    fn from(p: PriorSetting) -> Self {
        match p {
            PriorSetting::Uniform => PriorKind::Uniform,
            PriorSetting::Frequency => PriorKind::Frequency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub prior: PriorSetting,
    /// Restrict to these target languages; all when absent.
    pub languages: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Adds a display-only jitter column to infoplane.csv.
    pub plot_jitter: bool,
    pub jitter_scale: f64,
    pub jitter_seed: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out"), plot_jitter: false, jitter_scale: 0.01, jitter_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdsConfig {
    pub dims: usize,
}

impl Default for MdsConfig {
    fn default() -> Self {
        MdsConfig { dims: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectConfig {
    pub k: usize,
    pub seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig { k: 30, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub threads: usize,
    /// Treat any unconverged frontier point as a failure.
    pub strict: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { threads: 1, strict: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub similarity: SimilarityConfig,
    pub beliefs: BeliefConfig,
    pub frontier: FrontierConfig,
    pub baselines: BaselineConfig,
    pub encoders: EncoderConfig,
    pub output: OutputConfig,
    pub mds: MdsConfig,
    pub select: SelectConfig,
    pub run: RunSection,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(config_err)
    }

    /// Reads a config file. Relative input paths are taken relative to the
    /// file's directory; the output directory stays relative to the
    /// working directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.inputs.alignments);
        fix(&mut self.inputs.pile_sort);
        fix(&mut self.inputs.embeddings);
        fix(&mut self.inputs.model);
        fix(&mut self.inputs.frontier);
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(config_err)
    }

    /// Hex SHA-256 of the serialized config, leaving out the settings that
    /// cannot change results (output directory, thread count).
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output.dir = PathBuf::new();
        c.run.threads = 1;
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.similarity;
        if s.folds < 2 {
            return Err(Error::Config(format!("similarity.folds must be at least 2, got {}", s.folds)));
        }
        if s.ranks.is_empty() || s.ranks.contains(&0) {
            return Err(Error::Config("similarity.ranks must be nonempty and positive".into()));
        }
        if s.penalties.is_empty() || s.penalties.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("similarity.penalties must be nonempty, finite and nonnegative".into()));
        }
        if s.ridge_alphas.is_empty() || s.ridge_alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Config("similarity.ridge_alphas must be nonempty, finite and positive".into()));
        }
        if !self.beliefs.gamma.is_finite() {
            return Err(Error::Config(format!("beliefs.gamma must be finite, got {}", self.beliefs.gamma)));
        }
        let f = &self.frontier;
        self.frontier.grid()?;
        if !(f.tol > 0.0) || f.max_iters == 0 {
            return Err(Error::Config("frontier.tol must be positive and frontier.max_iters at least 1".into()));
        }
        if !(f.jitter >= 0.0) || !f.jitter.is_finite() {
            return Err(Error::Config(format!("frontier.jitter must be nonnegative, got {}", f.jitter)));
        }
        if f.max_words == Some(0) {
            return Err(Error::Config("frontier.max_words must be at least 1".into()));
        }
        if let Some(bad) = self.baselines.fractions.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Config(format!("perturbation fraction {bad} outside [0, 1]")));
        }
        if !(self.output.jitter_scale >= 0.0) || !self.output.jitter_scale.is_finite() {
            return Err(Error::Config("output.jitter_scale must be nonnegative".into()));
        }
        if self.mds.dims == 0 || self.select.k == 0 {
            return Err(Error::Config("mds.dims and select.k must be at least 1".into()));
        }
        if self.run.threads == 0 {
            return Err(Error::Config("run.threads must be at least 1".into()));
        }
        Ok(())
    }
}
