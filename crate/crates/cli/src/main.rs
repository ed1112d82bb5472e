use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ibtrans::baselines::RandomMode;
use ibtrans::config::{PriorSetting, RunConfig};
use ibtrans::{pipeline, Error};

/// Information Bottleneck analysis of translation encoders.
#[derive(Parser)]
#[command(name = "ibtrans", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Score similarity models by nested CV and fit the low-rank model.
    Similarity,
    /// Frontier, information-plane points and deviations in one run.
    Analyze,
    /// Trace the IB frontier only.
    Frontier,
    /// Place attested and baseline encoders against a frontier.
    Deviations,
    /// Classical MDS of the pile-sort similarities.
    Mds,
    /// Pick k-means representatives from the embedding file.
    Select,
}

/// Flags override the config file; the merged config is saved with the outputs.
#[derive(Args)]
struct Flags {
    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fail with exit code 3 if any frontier point does not converge.
    #[arg(long, global = true)]
    strict: bool,
    /// Repeat for more logging.
    #[arg(long, short, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[arg(long, global = true)]
    alignments: Option<PathBuf>,
    #[arg(long, global = true)]
    pile_sort: Option<PathBuf>,
    #[arg(long, global = true)]
    embeddings: Option<PathBuf>,
    /// Trained low-rank model (JSON); skips similarity training.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Existing frontier CSV for `deviations`.
    #[arg(long, global = true)]
    frontier: Option<PathBuf>,

    #[arg(long, global = true)]
    folds: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long, global = true)]
    cv_seed: Option<u64>,
    /// Gradient steps when training the low-rank model.
    #[arg(long, global = true)]
    train_iters: Option<usize>,

    /// Belief temperature γ.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    prior: Option<Prior>,

    #[arg(long, global = true)]
    beta_min: Option<f64>,
    #[arg(long, global = true)]
    beta_max: Option<f64>,
    #[arg(long, global = true)]
    beta_count: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    jitter: Option<f64>,
    #[arg(long, global = true)]
    frontier_seed: Option<u64>,

    #[arg(long, global = true, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    #[arg(long, global = true)]
    perturbed_count: Option<usize>,
    #[arg(long, global = true)]
    random_count: Option<usize>,
    #[arg(long, global = true)]
    random_mode: Option<Mode>,
    #[arg(long, global = true)]
    perturb_seed: Option<u64>,
    #[arg(long, global = true)]
    random_seed: Option<u64>,

    /// Add a display-only jitter column to infoplane.csv.
    #[arg(long, global = true)]
    plot_jitter: bool,
    #[arg(long, global = true)]
    jitter_seed: Option<u64>,

    #[arg(long, global = true)]
    dims: Option<usize>,
    #[arg(long, short, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    select_seed: Option<u64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Prior {
    Uniform,
    Frequency,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Onehot,
    Soft,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Flags {
    fn merge(self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let i = &mut c.inputs;
        for (slot, v) in [
            (&mut i.alignments, self.alignments),
            (&mut i.pile_sort, self.pile_sort),
            (&mut i.embeddings, self.embeddings),
            (&mut i.model, self.model),
            (&mut i.frontier, self.frontier),
        ] {
            if v.is_some() {
                *slot = v;
            }
        }
        set(&mut c.output.dir, self.out);
        set(&mut c.run.threads, self.threads);
        c.run.strict |= self.strict;
        set(&mut c.similarity.folds, self.folds);
        set(&mut c.similarity.ranks, self.ranks);
        set(&mut c.similarity.cv_seed, self.cv_seed);
        set(&mut c.similarity.max_iters, self.train_iters);
        set(&mut c.beliefs.gamma, self.gamma);
        if let Some(p) = self.prior {
            c.encoders.prior = match p {
                Prior::Uniform => PriorSetting::Uniform,
                Prior::Frequency => PriorSetting::Frequency,
            };
        }
        let f = &mut c.frontier;
        set(&mut f.beta_min, self.beta_min);
        set(&mut f.beta_max, self.beta_max);
        set(&mut f.beta_count, self.beta_count);
        set(&mut f.tol, self.tol);
        set(&mut f.max_iters, self.max_iters);
        set(&mut f.jitter, self.jitter);
        set(&mut f.seed, self.frontier_seed);
        let b = &mut c.baselines;
        set(&mut b.fractions, self.fractions);
        set(&mut b.perturbed_count, self.perturbed_count);
        set(&mut b.random_count, self.random_count);
        if let Some(m) = self.random_mode {
            b.random_mode = match m {
                Mode::Onehot => RandomMode::OneHot,
                Mode::Soft => RandomMode::Soft,
            };
        }
        set(&mut b.perturb_seed, self.perturb_seed);
        set(&mut b.random_seed, self.random_seed);
        c.output.plot_jitter |= self.plot_jitter;
        set(&mut c.output.jitter_seed, self.jitter_seed);
        set(&mut c.mds.dims, self.dims);
        set(&mut c.select.k, self.k);
        set(&mut c.select.seed, self.select_seed);
        c.validate()?;
        Ok(c)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence(_) => 3,
        Error::Io(_) | Error::Divergence(_) => 1,
        _ => 2,
    }
}

fn run(command: Command, cfg: &RunConfig) -> Result<String, Error> {
    let dir = cfg.output.dir.display();
    Ok(match command {
        Command::Similarity => {
            let r = pipeline::similarity(cfg)?.report;
            let best = r.low_rank.iter().find(|l| l.rank == r.selected.rank).expect("selected rank was scored");
            format!(
                "cosine rho {:.3}, ridge {:.3} ± {:.3}, low-rank D={} {:.3} ± {:.3}; wrote {dir}",
                r.cosine.mean_rho, r.ridge.mean_rho, r.ridge.std_rho, best.rank, best.cv.mean_rho, best.cv.std_rho
            )
        }
        Command::Analyze => {
            let b = pipeline::analyze(cfg)?;
            format!("{} meanings, {} languages, {} plane points; wrote {dir}", b.meanings, b.languages.len(), b.records.len())
        }
        Command::Frontier => {
            let c = pipeline::frontier(cfg)?;
            let stuck = c.points().iter().filter(|p| !p.converged).count();
            format!("{} frontier points ({stuck} unconverged); wrote {dir}", c.points().len())
        }
        Command::Deviations => {
            let b = pipeline::deviations(cfg)?;
            format!("{} plane points; wrote {dir}", b.records.len())
        }
        Command::Mds => {
            let m = pipeline::mds(cfg)?;
            format!("{} items in {} dimensions; wrote {dir}", m.items.len(), m.eigenvalues.len())
        }
        Command::Select => {
            let chosen = pipeline::select(cfg)?;
            format!("selected {}; wrote {dir}", chosen.join(", "))
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.flags.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = cli.flags.merge().and_then(|cfg| {
        let threads = cfg.run.threads;
        pipeline::with_threads(threads, || run(cli.command, &cfg))?
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
