use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const DEFAULT_SEED: u64 = 20150101;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const SEED_ENV: &str = "BLOCKMT_SEED";

#[derive(Debug, Parser)]
#[command(name = "blockmt", version, about = "Adaptive FDR/FWER control under block dependence")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Base seed for Monte Carlo work.
    #[arg(long, global = true, env = SEED_ENV)]
    pub seed: Option<u64>,

    /// Target error rate [default: 0.05].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,

    /// Estimator tuning parameter.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Write data output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,

    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl GlobalArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(DEFAULT_ALPHA)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply a procedure to a p-value file.
    Test(TestArgs),
    /// Run Monte Carlo error-rate simulations and emit CSV.
    Simulate(SimulateArgs),
    /// Run the numerical verification suite.
    Verify(VerifyArgs),
    /// Print the smallest certified lambda for `b` blocks.
    Threshold(ThresholdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bh,
    Bonferroni,
    TwoStageBh,
    AdaptiveBh,
    AdaptiveBonferroni,
    Bky,
}

impl MethodArg {
    pub fn is_adaptive(self) -> bool {
        matches!(self, MethodArg::AdaptiveBh | MethodArg::AdaptiveBonferroni)
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodArg::Bh => "bh",
            MethodArg::Bonferroni => "bonferroni",
            MethodArg::TwoStageBh => "two-stage-bh",
            MethodArg::AdaptiveBh => "adaptive-bh",
            MethodArg::AdaptiveBonferroni => "adaptive-bonferroni",
            MethodArg::Bky => "bky",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Storey,
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Tsv,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// CSV file with header `block_id,hypothesis_id,p_value` (`-` for stdin).
    pub input: PathBuf,

    #[arg(long, short, value_enum, default_value_t = MethodArg::TwoStageBh)]
    pub method: MethodArg,

    #[arg(long, value_enum, default_value_t = EstimatorArg::Block)]
    pub estimator: EstimatorArg,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// n = 240, n0 = 120, s in {2,3,4,6}; BH and the adaptive BH methods.
    FdrFigures,
    /// n = 100, n0 = 50, s in {2,4,10,20}; Bonferroni and its adaptive versions.
    FwerFigures,
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,

    /// key=value file; keys: n, n0, s, lambda, rho, methods, reps, seed, alpha, d.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub n0: Option<usize>,

    /// Block sizes, comma separated.
    #[arg(long = "block-sizes", value_delimiter = ',')]
    pub block_sizes: Option<Vec<usize>>,

    /// Estimator parameters, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,

    /// Within-block correlations, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rhos: Option<Vec<f64>>,

    /// Methods, comma separated (BH, adBH1, adBH2, adBH3, tsBH, Bonf, adBon1, adBon2).
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,

    #[arg(long)]
    pub reps: Option<usize>,

    /// Mean of the false-null statistics (default sqrt(10)).
    #[arg(long)]
    pub d: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Exact certification sweep of the block estimator.
    #[arg(long)]
    pub property1: bool,

    #[arg(long, default_value_t = 12)]
    pub max_b: usize,

    #[arg(long, default_value_t = 4)]
    pub max_s: usize,

    /// Balanced column-sum rearrangement on random 0/1 matrices.
    #[arg(long)]
    pub lemma1: bool,

    /// Random instances for `--lemma1` and `--oracle`.
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,

    /// Monotonicity of (2x+3)^(-2/(x+2)) on a grid.
    #[arg(long)]
    pub lemma2: bool,

    /// Binomial inverse-moment identity against pmf summation.
    #[arg(long)]
    pub identity: bool,

    /// Procedures against the brute-force oracle.
    #[arg(long)]
    pub oracle: bool,
}

impl VerifyArgs {
    /// True when no check was selected explicitly, meaning run everything.
    pub fn run_all(&self) -> bool {
        !(self.property1 || self.lemma1 || self.lemma2 || self.identity || self.oracle)
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Number of blocks (at least 1).
    pub b: u64,
}
