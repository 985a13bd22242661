use std::path::{Path, PathBuf};

use antnav::aco::{SolverConfig, Variant};
use antnav::qanalysis::SymmetrizePolicy;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::Failure;

#[derive(Debug, Parser)]
#[command(name = "antnav", version, about = "Ant colony cycles over news corpora and TSP benchmarks")]
pub struct Cli {
    /// TOML file with flat keys mirroring the long flags (e.g. `iters = 500`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a TSPLIB instance.
    SolveTsp(SolveTspArgs),
    /// Order a document corpus into a reading cycle.
    Cycle(CycleArgs),
    /// Compare the negative-trail variant against the ACS baseline.
    Bench(BenchArgs),
    /// Download a corpus from a Guardian-style content API.
    Fetch(FetchArgs),
    /// Write the document distance matrix only.
    Distances(DistancesArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub ants: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho_pos: Option<f64>,
    #[arg(long)]
    pub rho_neg: Option<f64>,
    #[arg(long)]
    pub q0: Option<f64>,
    #[arg(long)]
    pub neg_deposit: Option<f64>,
    #[arg(long)]
    pub tau_neg_max: Option<f64>,
    /// Run the single-pheromone ACS baseline instead of the variant.
    #[arg(long)]
    pub baseline: bool,
    /// Build ant tours on all cores; output is unchanged.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct SolveTspArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Stop once the best tour is this short.
    #[arg(long)]
    pub target: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// jsonl or csv; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// mean or max
    #[arg(long)]
    pub policy: Option<String>,
}

#[derive(Debug, Args)]
pub struct CycleArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Keep documents published at or after this date (YYYY-MM-DD or RFC 3339).
    #[arg(long)]
    pub from: Option<String>,
    /// Keep documents published strictly before this date.
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct DistancesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of paired seeds (1..=N).
    #[arg(long)]
    pub seeds: Option<usize>,
    /// A tour length, or `best-known` to look the instance up in the catalog.
    #[arg(long, conflicts_with = "target_pct")]
    pub target: Option<String>,
    /// Target = best-known × (1 + pct/100).
    #[arg(long)]
    pub target_pct: Option<f64>,
    /// `instance,best_known` CSV; the bundled catalog is used otherwise.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub from: String,
    #[arg(long)]
    pub to: String,
    #[arg(long)]
    pub section: Option<String>,
    #[arg(long)]
    pub page_size: Option<u32>,
    #[arg(long)]
    pub max_pages: Option<usize>,
    /// Overrides the GUARDIAN_API_KEY environment variable.
    #[arg(long)]
    pub api_key: Option<String>,
    #[arg(long)]
    pub base_url: Option<String>,
    /// Serve `page-<n>.json` files from this directory instead of the network.
    #[arg(long)]
    pub fixture_dir: Option<PathBuf>,
    /// Output JSONL file.
    #[arg(long)]
    pub out: PathBuf,
}

/// Values read from `--config`. Keys match the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub iters: Option<usize>,
    pub ants: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub rho_pos: Option<f64>,
    pub rho_neg: Option<f64>,
    pub q0: Option<f64>,
    pub neg_deposit: Option<f64>,
    pub tau_neg_max: Option<f64>,
    pub baseline: Option<bool>,
    pub parallel: Option<bool>,
    pub policy: Option<String>,
    pub seeds: Option<usize>,
    pub target_pct: Option<f64>,
    pub page_size: Option<u32>,
    pub max_pages: Option<usize>,
    pub section: Option<String>,
    pub base_url: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
    }
}

impl SolverArgs {
    /// Flags win over the config file, which wins over defaults.
    pub fn resolve(&self, file: &FileConfig) -> SolverConfig {
        let d = SolverConfig::default();
        let baseline = self.baseline || file.baseline.unwrap_or(false);
        SolverConfig {
            variant: if baseline { Variant::Acs } else { Variant::Negative },
            ants: self.ants.or(file.ants).or(d.ants),
            alpha: self.alpha.or(file.alpha).unwrap_or(d.alpha),
            beta: self.beta.or(file.beta).unwrap_or(d.beta),
            gamma: self.gamma.or(file.gamma).unwrap_or(d.gamma),
            rho_pos: self.rho_pos.or(file.rho_pos).unwrap_or(d.rho_pos),
            rho_neg: self.rho_neg.or(file.rho_neg).unwrap_or(d.rho_neg),
            q0: self.q0.or(file.q0).unwrap_or(d.q0),
            neg_deposit: self.neg_deposit.or(file.neg_deposit).unwrap_or(d.neg_deposit),
            tau_neg_max: self.tau_neg_max.or(file.tau_neg_max).unwrap_or(d.tau_neg_max),
            iterations: self.iters.or(file.iters).unwrap_or(d.iterations),
            seed: self.seed.or(file.seed).unwrap_or(d.seed),
            target: None,
            parallel: self.parallel || file.parallel.unwrap_or(false),
        }
    }
}

impl CorpusArgs {
    pub fn policy(&self, file: &FileConfig) -> Result<SymmetrizePolicy, Failure> {
        match self.policy.as_deref().or(file.policy.as_deref()) {
            None => Ok(SymmetrizePolicy::default()),
            Some(p) => p.parse().map_err(Failure::usage),
        }
    }
}
