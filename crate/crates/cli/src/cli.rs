//! Argument parsing and resolution into a [`RunConfig`].

use std::path::PathBuf;

use advdefer::losses::TauParameter;
use advdefer::scorer::{Method, TrainConfig};
use advdefer::seed::derive_seed;
use advdefer::synthbench::{Baseline, BenchmarkConfig, RegionSpec};
use clap::{Args, Parser, Subcommand};

use crate::config::{read_spec, DataSource, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "advdefer", version, about = "Learning to defer with advice: oracles, surrogates, training, benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the two-region synthetic benchmark and write its report files.
    Synth(SynthArgs),
    /// Per-instance Bayes decisions for a cost tensor.
    Bayes(BayesArgs),
    /// Train a scorer and write a policy file.
    Train(TrainArgs),
    /// Evaluate a saved policy and write a metrics file.
    Eval(EvalArgs),
    /// Build and certify the separated-surrogate counterexample table.
    Fisher(FisherArgs),
    /// Re-render the tables of a saved synthetic report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Root seed; every run derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![250, 500, 1000, 2500, 5000])]
    pub sizes: Vec<usize>,
    /// Number of seeds per training size.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Learned methods to run (comma-separated).
    #[arg(long, value_delimiter = ',', default_values_t = Method::ALL.to_vec())]
    pub method: Vec<Method>,
    /// Reference baselines (comma-separated).
    #[arg(long, value_delimiter = ',', default_values_t = Baseline::SYNTHETIC.to_vec())]
    pub baselines: Vec<Baseline>,
    /// JSON region spec replacing the default tables.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub test_size: usize,
    /// Override the number of training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Decision-map resolution; 0 disables maps.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    #[arg(long)]
    pub structured_head: bool,
    #[arg(long, default_value = "synth_out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    #[arg(long)]
    pub tensor: PathBuf,
    /// Cost multipliers (comma-separated); needs `gamma_base` in the header.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Output directory for `decisions.csv` and `bayes.json`; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Either a tensor file or a freshly generated synthetic sample.
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, conflicts_with_all = ["n", "spec_file"])]
    pub tensor: Option<PathBuf>,
    #[arg(long, requires = "tensor")]
    pub lambda: Option<f64>,
    /// Synthetic sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Root seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
}

impl DataArgs {
    fn resolve(&self, default_n: usize, stream: u64) -> CliResult<DataSource> {
        match &self.tensor {
            Some(path) => Ok(DataSource::Tensor { path: path.clone(), lambda: self.lambda }),
            None => Ok(DataSource::Synthetic {
                n: self.n.unwrap_or(default_n),
                seed: derive_seed(self.seed, &[stream]),
                spec: spec_or_default(self.spec_file.as_ref())?,
            }),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = Method::Augmented)]
    pub method: Method,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 120)]
    pub epochs: usize,
    #[arg(long, default_value_t = 3e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 10.0)]
    pub clip: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![32, 32])]
    pub hidden: Vec<usize>,
    #[arg(long)]
    pub structured_head: bool,
    #[arg(long, default_value = "policy.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub policy: PathBuf,
    /// Metrics JSON path; stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long, default_value_t = 0.5)]
    pub b: f64,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Cost bound C.
    #[arg(long, default_value_t = 1.08)]
    pub bound: f64,
    /// Perturbation; half the largest feasible value when absent.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A `report.json` written by `synth`.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory to re-emit the CSV tables into.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn spec_or_default(path: Option<&PathBuf>) -> CliResult<RegionSpec> {
    path.map_or_else(|| Ok(RegionSpec::default()), |p| read_spec(p))
}

fn tau(v: f64) -> CliResult<TauParameter> {
    TauParameter::new(v).map_err(CliError::from)
}

impl Cli {
    pub fn into_run_config(self) -> CliResult<RunConfig> {
        Ok(match self.command {
            Command::Synth(a) => {
                let mut train = TrainConfig::synthetic(0);
                train.tau = tau(a.tau)?;
                train.structured_head = a.structured_head;
                if let Some(e) = a.epochs {
                    train.epochs = e;
                }
                RunConfig::Synth {
                    benchmark: BenchmarkConfig {
                        sizes: a.sizes,
                        seeds: a.seeds,
                        test_size: a.test_size,
                        test_seed: None,
                        root_seed: a.seed,
                        spec: spec_or_default(a.spec_file.as_ref())?,
                        train,
                        methods: a.method,
                        baselines: a.baselines,
                        grid_resolution: a.grid,
                    },
                    out: a.out,
                }
            }
            Command::Bayes(a) => RunConfig::Bayes { tensor: a.tensor, lambdas: a.lambda, out: a.out },
            Command::Train(a) => {
                let train = TrainConfig {
                    learning_rate: a.lr,
                    weight_decay: a.weight_decay,
                    grad_clip_norm: a.clip,
                    epochs: a.epochs,
                    batch_size: a.batch_size,
                    tau: tau(a.tau)?,
                    seed: derive_seed(a.data.seed, &[2]),
                    hidden_dims: a.hidden,
                    structured_head: a.structured_head,
                    ..TrainConfig::synthetic(0)
                };
                RunConfig::Train { data: a.data.resolve(5000, 1)?, method: a.method, train, out: a.out }
            }
            Command::Eval(a) => RunConfig::Eval { data: a.data.resolve(100_000, 0)?, policy: a.policy, out: a.out },
            Command::Fisher(a) => RunConfig::Fisher { b: a.b, epsilon: a.epsilon, bound: a.bound, delta: a.delta, out: a.out },
            Command::Report(a) => RunConfig::Report { input: a.input, out: a.out },
        })
    }
}
