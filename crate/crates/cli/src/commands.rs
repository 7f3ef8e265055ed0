//! Subcommand implementations. Each returns the text it would print.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use exemplar_core::batched::KernelConfig;
use exemplar_core::bench::{emit_report, generate_problem, run_sweep, Axis, BackendSpec, Format, ProblemSpec};
use exemplar_core::layout::audit_layouts;
use exemplar_core::optimize::{greedy_maximize, sieve_stream_maximize};
use exemplar_core::{AuxiliaryKind, Backend, EbcFunction, GroundMatrix, OptimizerBudget, Precision};

use crate::dataset::{load_csv, write_csv};
use crate::error::{CliError, CliResult};
use crate::surrogate::{generate_surrogate, SurrogateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Optimizer {
    Greedy,
    Sieve,
}

#[derive(Debug, Clone)]
pub struct SummarizeArgs {
    pub input: PathBuf,
    pub has_header: bool,
    pub normalize: bool,
    pub k: usize,
    pub optimizer: Optimizer,
    pub backend: Backend,
    pub precision: Precision,
    pub e0: AuxiliaryKind,
    pub seed: u64,
    pub threads: usize,
    pub epsilon: f64,
    pub output: Option<PathBuf>,
}

/// Machine-readable summary; field order is the output order.
#[derive(Debug, Serialize)]
pub struct SummaryDocument {
    pub k: usize,
    pub selected_indices: Vec<usize>,
    pub function_value: f64,
    pub gains: Vec<f64>,
    pub backend: String,
    pub precision: String,
    pub runtime_seconds: f64,
}

fn write_output(path: Option<&Path>, text: &str) -> CliResult<String> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", p.display())))?;
            Ok(String::new())
        }
        None => Ok(text.to_string()),
    }
}

pub fn cmd_summarize(args: &SummarizeArgs) -> CliResult<String> {
    if args.k == 0 {
        return Err(CliError::Usage("k must be >= 1".into()));
    }
    let data = load_csv(&args.input, args.has_header, args.normalize)?;
    if args.k > data.n() {
        return Err(CliError::Usage(format!("k={} exceeds the {} rows of the input", args.k, data.n())));
    }
    let ground = GroundMatrix::from_rows(&data.series, args.precision)?;
    let f = EbcFunction::new(ground, args.e0);
    let budget = OptimizerBudget::new(args.k, args.backend, args.threads);
    let summary = match args.optimizer {
        Optimizer::Greedy => greedy_maximize(&f, &budget)?,
        Optimizer::Sieve => {
            let mut order: Vec<usize> = (0..f.n()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(args.seed));
            sieve_stream_maximize(order, &f, &budget, args.epsilon)?
        }
    };
    let doc = SummaryDocument {
        k: args.k,
        selected_indices: summary.selected,
        function_value: summary.value,
        gains: summary.gains,
        backend: args.backend.name().to_string(),
        precision: args.precision.name().to_string(),
        runtime_seconds: summary.runtime_seconds,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_output(args.output.as_deref(), &text)
}

/// Parses `naive`, `device-sim`, `batched` or `batched:<threads>`.
pub fn parse_backend_spec(text: &str, default_threads: usize) -> CliResult<BackendSpec> {
    let (name, threads) = match text.split_once(':') {
        Some((name, t)) => {
            let t: usize = t
                .parse()
                .map_err(|_| CliError::Usage(format!("bad thread count in backend '{text}'")))?;
            (name, t)
        }
        None => (text, default_threads),
    };
    let backend: Backend = name.parse()?;
    if threads == 0 {
        return Err(CliError::Usage("thread count must be >= 1".into()));
    }
    Ok(BackendSpec::new(backend, threads))
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub axis: Axis,
    pub values: Option<Vec<usize>>,
    pub base: ProblemSpec,
    pub backends: Vec<String>,
    pub repeats: usize,
    pub format: Format,
    pub threads: usize,
    pub output: Option<PathBuf>,
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<String> {
    let values = args.values.clone().unwrap_or_else(|| args.axis.default_values());
    let backends = args
        .backends
        .iter()
        .map(|b| parse_backend_spec(b, args.threads))
        .collect::<CliResult<Vec<_>>>()?;
    let report = run_sweep(args.axis, &values, &args.base, &backends, args.repeats)?;
    write_output(args.output.as_deref(), &emit_report(&report, args.format))
}

pub fn cmd_surrogate(spec: &SurrogateSpec, output: &Path, labels: Option<&Path>) -> CliResult<String> {
    let (rows, regimes) = generate_surrogate(spec)?;
    let io_err = |p: &Path, e: std::io::Error| CliError::Internal(format!("cannot write {}: {e}", p.display()));
    let file = File::create(output).map_err(|e| io_err(output, e))?;
    write_csv(BufWriter::new(file), &rows).map_err(|e| io_err(output, e))?;

    let labels_path = labels.map(Path::to_path_buf).unwrap_or_else(|| default_labels_path(output));
    let file = File::create(&labels_path).map_err(|e| io_err(&labels_path, e))?;
    let mut w = BufWriter::new(file);
    let mut write_labels = || -> std::io::Result<()> {
        writeln!(w, "cycle,regime")?;
        for (cycle, regime) in regimes.iter().enumerate() {
            writeln!(w, "{cycle},{regime}")?;
        }
        w.flush()
    };
    write_labels().map_err(|e| io_err(&labels_path, e))?;
    Ok(format!(
        "wrote {} cycles x {} dims to {} and labels to {}\n",
        spec.n_cycles,
        spec.dims,
        output.display(),
        labels_path.display()
    ))
}

/// `data.csv` gets `data.labels.csv` next to it.
pub fn default_labels_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map_or_else(|| "surrogate".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.labels.csv"))
}

#[derive(Debug, Clone, Copy)]
pub struct LayoutAuditArgs {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub dims: usize,
    pub seed: u64,
    pub precision: Precision,
}

pub fn cmd_layout_audit(args: &LayoutAuditArgs) -> CliResult<String> {
    let spec = ProblemSpec {
        n: args.n,
        l: args.l,
        k: args.k,
        dims: args.dims,
        seed: args.seed,
        precision: args.precision,
    };
    let (_, multiset) = generate_problem(&spec)?;
    let config = KernelConfig::for_problem(args.n, args.l, args.dims, args.precision)?;
    let audit = audit_layouts(&multiset, &config)?;
    let mut out = String::new();
    let mut line = |key: &str, value: String| {
        out.push_str(key);
        out.push('=');
        out.push_str(&value);
        out.push('\n');
    };
    line("b_x", config.block.x.to_string());
    line("b_y", config.block.y.to_string());
    line("g_x", config.grid.x.to_string());
    line("g_y", config.grid.y.to_string());
    line("beta", config.beta.to_string());
    line("gamma", config.gamma.to_string());
    line("warp_size", config.warp_size.to_string());
    line("segment_bytes", config.segment_bytes.to_string());
    line("steps", audit.steps.to_string());
    line("interleaved_transactions", audit.interleaved_transactions.to_string());
    line("contiguous_transactions", audit.contiguous_transactions.to_string());
    line("ratio", format!("{:.4}", audit.ratio()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backend_specs() {
        let b = parse_backend_spec("batched:4", 1).unwrap();
        assert_eq!((b.backend, b.threads, b.label.as_str()), (Backend::Batched, 4, "batched-t4"));
        let b = parse_backend_spec("naive", 3).unwrap();
        assert_eq!((b.backend, b.label.as_str()), (Backend::Naive, "naive"));
        assert!(parse_backend_spec("batched:0", 1).is_err());
        assert!(parse_backend_spec("gpu", 1).is_err());
        assert!(parse_backend_spec("batched:x", 1).is_err());
    }

    #[test]
    fn labels_path_sits_beside_output() {
        assert_eq!(default_labels_path(Path::new("/tmp/x/data.csv")), PathBuf::from("/tmp/x/data.labels.csv"));
    }

    #[test]
    fn layout_audit_reports_reference_configuration() {
        let args = LayoutAuditArgs { n: 50000, l: 5000, k: 2, dims: 100, seed: 1, precision: Precision::Fp32 };
        let out = cmd_layout_audit(&args).unwrap();
        for expected in ["b_x=1\n", "b_y=1024\n", "g_x=50000\n", "g_y=5\n", "beta=49152\n", "gamma=400\n"] {
            assert!(out.contains(expected), "{out}");
        }
    }

    #[test]
    fn layout_audit_single_set_ratio_one() {
        let args = LayoutAuditArgs { n: 30, l: 1, k: 5, dims: 4, seed: 2, precision: Precision::Fp32 };
        assert!(cmd_layout_audit(&args).unwrap().contains("ratio=1.0000\n"));
    }
}
