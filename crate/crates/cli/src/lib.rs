//! Command line front end: summarize CSV data, run benchmark sweeps, audit
//! memory layouts and generate synthetic process data.

pub mod commands;
pub mod dataset;
pub mod error;
pub mod surrogate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use exemplar_core::bench::{Axis, Format, ProblemSpec};
use exemplar_core::optimize::DEFAULT_SIEVE_EPSILON;
use exemplar_core::{AuxiliaryKind, Backend, Precision};

use commands::{BenchArgs, LayoutAuditArgs, Optimizer, SummarizeArgs};
pub use error::{CliError, CliResult};
use surrogate::SurrogateSpec;

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "EXEMPLAR_THREADS";

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Parser)]
#[command(name = "exemplar", version, about = "Exemplar-based data summarization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select k representative rows of a CSV file.
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(short, long)]
        k: usize,
        /// The first line holds column names.
        #[arg(long)]
        header: bool,
        /// Z-score every column before summarizing.
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum, default_value = "greedy")]
        optimizer: Optimizer,
        #[arg(long, default_value = "batched")]
        backend: Backend,
        #[arg(long, default_value = "fp32")]
        precision: Precision,
        /// Auxiliary exemplar: `zero` or `mean`.
        #[arg(long, default_value = "zero")]
        e0: AuxiliaryKind,
        /// Seeds the stream order of the sieve.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = THREADS_ENV, default_value_t = default_threads())]
        threads: usize,
        #[arg(long, default_value_t = DEFAULT_SIEVE_EPSILON)]
        epsilon: f64,
        /// JSON destination; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time evaluation backends along one problem axis.
    Bench {
        #[arg(long, default_value = "N")]
        axis: Axis,
        /// Comma-separated ascending values; the reference series when omitted.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
        #[arg(long, default_value_t = 50000)]
        n: usize,
        #[arg(long, default_value_t = 5000)]
        l: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "fp32")]
        precision: Precision,
        /// Comma-separated backends such as `naive,batched:4`; the first is the baseline.
        #[arg(long, value_delimiter = ',', default_value = "batched:1,batched")]
        backends: Vec<String>,
        #[arg(long, default_value_t = 15)]
        repeats: usize,
        #[arg(long, default_value = "csv")]
        format: Format,
        #[arg(long, env = THREADS_ENV, default_value_t = default_threads())]
        threads: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate regime-structured synthetic curves.
    Surrogate {
        #[arg(long, default_value_t = 1000)]
        cycles: usize,
        #[arg(long, default_value_t = 100)]
        dims: usize,
        #[arg(long, default_value_t = 5)]
        regimes: usize,
        #[arg(long, default_value_t = 200)]
        cycles_per_regime: usize,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Regime label file; `<output stem>.labels.csv` when omitted.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Compare memory transactions of the interleaved and contiguous layouts.
    LayoutAudit {
        #[arg(long, default_value_t = 50000)]
        n: usize,
        #[arg(long, default_value_t = 5000)]
        l: usize,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        dims: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "fp32")]
        precision: Precision,
    },
}

/// Runs a parsed command and returns what should go to stdout.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Summarize {
            input,
            k,
            header,
            normalize,
            optimizer,
            backend,
            precision,
            e0,
            seed,
            threads,
            epsilon,
            output,
        } => commands::cmd_summarize(&SummarizeArgs {
            input,
            has_header: header,
            normalize,
            k,
            optimizer,
            backend,
            precision,
            e0,
            seed,
            threads,
            epsilon,
            output,
        }),
        Command::Bench {
            axis,
            values,
            n,
            l,
            k,
            dims,
            seed,
            precision,
            backends,
            repeats,
            format,
            threads,
            output,
        } => commands::cmd_bench(&BenchArgs {
            axis,
            values,
            base: ProblemSpec { n, l, k, dims, seed, precision },
            backends,
            repeats,
            format,
            threads,
            output,
        }),
        Command::Surrogate {
            cycles,
            dims,
            regimes,
            cycles_per_regime,
            noise,
            seed,
            output,
            labels,
        } => {
            let spec = SurrogateSpec {
                n_cycles: cycles,
                dims,
                n_regimes: regimes,
                cycles_per_regime,
                noise_scale: noise,
                seed,
            };
            commands::cmd_surrogate(&spec, &output, labels.as_deref())
        }
        Command::LayoutAudit { n, l, k, dims, seed, precision } => {
            commands::cmd_layout_audit(&LayoutAuditArgs { n, l, k, dims, seed, precision })
        }
    }
}
