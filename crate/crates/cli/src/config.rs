//! Command-line flags, the flat config file and their merge.
//!
//! Every option can come from `--config FILE` (flat TOML, unknown keys are
//! rejected) or from a flag; flags win. The merged, fully defaulted config is
//! what gets written into report headers.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "l2boost", version, about = "Componentwise L2 boosting: fitting, benchmarks, classification, greedy bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a boosting path to a CSV file and stop it by an information criterion.
    Fit(FitArgs),
    /// Run the seeded simulation benchmark.
    Simulate(SimulateArgs),
    /// Repeated random-split misclassification on expression data.
    Classify(ClassifyArgs),
    /// Check the weak greedy remainder bound on random dictionaries.
    GreedyCheck(GreedyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Simulate(_) => "simulate",
            Command::Classify(_) => "classify",
            Command::GreedyCheck(_) => "greedy-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VariantOpt {
    L2boost,
    Fslr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingOpt {
    /// Corrected AIC with hat-matrix degrees of freedom.
    Aicc,
    /// Bernoulli AIC for a 0/1 response.
    Bernoulli,
    /// Run all `m_max` iterations.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HatOpt {
    Subspace,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleOpt {
    PerSetting,
    PerReplication,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FormatOpt {
    Csv,
    Markdown,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CodingOpt {
    ZeroOne,
    Centered,
}

/// Keys accepted in a config file. All optional; anything else is an error.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<String>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub nu: Option<f64>,
    pub m_max: Option<usize>,
    pub variant: Option<VariantOpt>,
    pub stopping: Option<StoppingOpt>,
    pub hat: Option<HatOpt>,
    pub input: Option<PathBuf>,
    pub response: Option<String>,
    pub settings: Option<Vec<String>>,
    pub methods: Option<Vec<String>>,
    pub reps: Option<usize>,
    pub oracle: Option<OracleOpt>,
    pub format: Option<FormatOpt>,
    pub expression: Option<PathBuf>,
    pub labels: Option<String>,
    pub repeats: Option<usize>,
    pub coding: Option<CodingOpt>,
    pub train_fraction: Option<f64>,
    pub preprocess: Option<bool>,
    pub instances: Option<usize>,
    pub b: Option<f64>,
    pub steps: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cap on worker threads (0 or absent: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for output files (created if missing).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoostArgs {
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub m_max: Option<usize>,
    #[arg(long, value_enum)]
    pub hat: Option<HatOpt>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// CSV with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Name of the response column.
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantOpt>,
    #[arg(long, value_enum)]
    pub stopping: Option<StoppingOpt>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Comma-separated setting labels such as `iid-p10,block-p100-n20`.
    #[arg(long, value_delimiter = ',')]
    pub settings: Option<Vec<String>>,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Base seed; replication `r` uses `seed + r`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleOpt>,
    #[arg(long, value_enum)]
    pub format: Option<FormatOpt>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Expression CSV: one row per sample, one column per gene, plus labels.
    #[arg(long)]
    pub expression: Option<PathBuf>,
    /// Name of the 0/1 label column.
    #[arg(long)]
    pub labels: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub coding: Option<CodingOpt>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Clip, log and row-standardize the raw values first.
    #[arg(long)]
    pub preprocess: Option<bool>,
}

#[derive(Debug, Clone, Args)]
pub struct GreedyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Weakness parameter in (0, 1].
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub const DEFAULT_SETTINGS: [&str; 6] = ["iid-p3", "iid-p10", "iid-p100", "block-p3", "block-p10", "block-p100"];
pub const DEFAULT_METHODS: [&str; 7] = ["L2Boost", "L2Boost*", "Lasso", "Lasso*", "fwd.var.sel.", "ridge*", "OLS"];

#[derive(Debug, Clone, Serialize)]
pub struct FitConfig {
    pub input: PathBuf,
    pub response: String,
    pub nu: f64,
    pub m_max: usize,
    pub variant: VariantOpt,
    pub stopping: StoppingOpt,
    pub hat: HatOpt,
    pub out_dir: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateConfig {
    pub settings: Vec<String>,
    pub methods: Vec<String>,
    pub reps: usize,
    pub seed: u64,
    pub nu: f64,
    pub m_max: usize,
    pub hat: HatOpt,
    pub oracle: OracleOpt,
    pub format: FormatOpt,
    pub out_dir: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyConfig {
    pub expression: PathBuf,
    pub labels: String,
    pub repeats: usize,
    pub seed: u64,
    pub coding: CodingOpt,
    pub train_fraction: f64,
    pub preprocess: bool,
    pub nu: f64,
    pub m_max: usize,
    pub hat: HatOpt,
    pub out_dir: PathBuf,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreedyConfig {
    pub instances: usize,
    pub b: f64,
    pub nu: f64,
    pub steps: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub threads: usize,
}

fn required<T>(v: Option<T>, key: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required option `{key}`")))
}

fn load_file(common: &Common, command: &str) -> Result<FileConfig, CliError> {
    let file = match &common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Some(c) = &file.command {
        if c != command {
            return Err(CliError::Config(format!("config file is for `{c}`, not `{command}`")));
        }
    }
    Ok(file)
}

fn common_out(common: &Common, file: &FileConfig) -> (PathBuf, usize) {
    let out = common.out_dir.clone().or_else(|| file.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    (out, common.threads.or(file.threads).unwrap_or(0))
}

fn boost_defaults(b: &BoostArgs, file: &FileConfig) -> (f64, usize, HatOpt) {
    (
        b.nu.or(file.nu).unwrap_or(0.1),
        b.m_max.or(file.m_max).unwrap_or(1000),
        b.hat.or(file.hat).unwrap_or(HatOpt::Subspace),
    )
}

impl FitArgs {
    pub fn resolve(self) -> Result<FitConfig, CliError> {
        let file = load_file(&self.common, "fit")?;
        let (out_dir, threads) = common_out(&self.common, &file);
        let (nu, m_max, hat) = boost_defaults(&self.boost, &file);
        Ok(FitConfig {
            input: required(self.input.or(file.input), "input")?,
            response: required(self.response.or(file.response), "response")?,
            nu,
            m_max,
            variant: self.variant.or(file.variant).unwrap_or(VariantOpt::L2boost),
            stopping: self.stopping.or(file.stopping).unwrap_or(StoppingOpt::Aicc),
            hat,
            out_dir,
            threads,
        })
    }
}

impl SimulateArgs {
    pub fn resolve(self) -> Result<SimulateConfig, CliError> {
        let file = load_file(&self.common, "simulate")?;
        let (out_dir, threads) = common_out(&self.common, &file);
        let (nu, m_max, hat) = boost_defaults(&self.boost, &file);
        let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Ok(SimulateConfig {
            settings: self.settings.or(file.settings).unwrap_or_else(|| owned(&DEFAULT_SETTINGS)),
            methods: self.methods.or(file.methods).unwrap_or_else(|| owned(&DEFAULT_METHODS)),
            reps: self.reps.or(file.reps).unwrap_or(50),
            seed: self.seed.or(file.seed).unwrap_or(1),
            nu,
            m_max,
            hat,
            oracle: self.oracle.or(file.oracle).unwrap_or(OracleOpt::PerSetting),
            format: self.format.or(file.format).unwrap_or(FormatOpt::Both),
            out_dir,
            threads,
        })
    }
}

impl ClassifyArgs {
    pub fn resolve(self) -> Result<ClassifyConfig, CliError> {
        let file = load_file(&self.common, "classify")?;
        let (out_dir, threads) = common_out(&self.common, &file);
        let (nu, m_max, hat) = boost_defaults(&self.boost, &file);
        Ok(ClassifyConfig {
            expression: required(self.expression.or(file.expression), "expression")?,
            labels: self.labels.or(file.labels).unwrap_or_else(|| "label".into()),
            repeats: self.repeats.or(file.repeats).unwrap_or(50),
            seed: self.seed.or(file.seed).unwrap_or(1),
            coding: self.coding.or(file.coding).unwrap_or(CodingOpt::ZeroOne),
            train_fraction: self.train_fraction.or(file.train_fraction).unwrap_or(2.0 / 3.0),
            preprocess: self.preprocess.or(file.preprocess).unwrap_or(true),
            nu,
            m_max,
            hat,
            out_dir,
            threads,
        })
    }
}

impl GreedyArgs {
    pub fn resolve(self) -> Result<GreedyConfig, CliError> {
        let file = load_file(&self.common, "greedy-check")?;
        let (out_dir, threads) = common_out(&self.common, &file);
        Ok(GreedyConfig {
            instances: self.instances.or(file.instances).unwrap_or(100),
            b: self.b.or(file.b).unwrap_or(1.0),
            nu: self.nu.or(file.nu).unwrap_or(1.0),
            steps: self.steps.or(file.steps).unwrap_or(200),
            seed: self.seed.or(file.seed).unwrap_or(1),
            out_dir,
            threads,
        })
    }
}
