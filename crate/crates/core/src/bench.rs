//! Random problem generation and runtime sweeps.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{AuxiliaryKind, EvalMultiset, GroundMatrix, MultisetBuilder, Precision};
use crate::ebc::EbcFunction;
use crate::error::{Error, Result};
use crate::optimize::{evaluate, Backend};

/// Shape and seed of a random evaluation problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemSpec {
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub dims: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("l", self.l), ("k", self.k), ("dims", self.dims)] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be >= 1")));
            }
        }
        if self.k > self.n {
            return Err(Error::InvalidArgument(format!(
                "set size k={} exceeds ground size n={}",
                self.k, self.n
            )));
        }
        Ok(())
    }

    fn with_axis(mut self, axis: Axis, value: usize) -> Self {
        match axis {
            Axis::N => self.n = value,
            Axis::L => self.l = value,
            Axis::K => self.k = value,
        }
        self
    }
}

/// Uniform `[0, 1)` ground data and `l` sets of `k` distinct indices.
pub fn generate_problem(spec: &ProblemSpec) -> Result<(GroundMatrix, EvalMultiset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values: Vec<f64> = (0..spec.n * spec.dims).map(|_| rng.gen::<f64>()).collect();
    let ground = GroundMatrix::new(values, spec.n, spec.dims, spec.precision)?;
    let mut builder = MultisetBuilder::with_capacity(spec.l, spec.l * spec.k);
    for _ in 0..spec.l {
        let mut set = sample(&mut rng, spec.n, spec.k).into_vec();
        set.sort_unstable();
        builder.push(set);
    }
    Ok((ground, builder.finish()?))
}

/// Swept problem parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    N,
    L,
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::N => "N",
            Axis::L => "l",
            Axis::K => "k",
        }
    }

    /// Default sweep values: the endpoints and spacing of the reference
    /// experiment series.
    pub fn default_values(self) -> Vec<usize> {
        match self {
            Axis::N => (0..15).map(|i| 1000 + 28500 * i).collect(),
            Axis::L => {
                let mut v: Vec<usize> = (0..9).map(|i| 1000 + 2785 * i).collect();
                v.push(26070);
                v
            }
            Axis::K => (0..13).map(|i| 10 + 35 * i).collect(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "N" | "n" => Ok(Axis::N),
            "L" | "l" => Ok(Axis::L),
            "K" | "k" => Ok(Axis::K),
            other => Err(Error::InvalidArgument(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// A backend under measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendSpec {
    pub label: String,
    pub backend: Backend,
    pub threads: usize,
}

impl BackendSpec {
    pub fn new(backend: Backend, threads: usize) -> Self {
        let label = match backend {
            Backend::Batched => format!("batched-t{threads}"),
            other => other.name().to_string(),
        };
        Self { label, backend, threads }
    }
}

/// Runtimes measured at one axis value, indexed `[backend][repeat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: usize,
    pub runtimes: Vec<Vec<f64>>,
}

impl SweepRow {
    pub fn median(&self, backend: usize) -> f64 {
        median(&self.runtimes[backend])
    }

    /// Median-over-median speedup of `subject` against `baseline`.
    pub fn speedup(&self, baseline: usize, subject: usize) -> f64 {
        clamp_time(self.median(baseline)) / clamp_time(self.median(subject))
    }
}

/// Aggregate speedup of one backend against another.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub subject: String,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: Axis,
    pub backends: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub comparisons: Vec<Comparison>,
}

/// Median of a non-empty slice; mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

// A zero reading would make a ratio meaningless.
fn clamp_time(t: f64) -> f64 {
    t.max(1e-9)
}

/// Per-repeat speedups of `subject` over `baseline`, pooled over all rows.
pub fn compare(rows: &[SweepRow], backends: &[String], baseline: usize, subject: usize) -> Comparison {
    let ratios: Vec<f64> = rows
        .iter()
        .flat_map(|r| {
            r.runtimes[baseline]
                .iter()
                .zip(&r.runtimes[subject])
                .map(|(&b, &s)| clamp_time(b) / clamp_time(s))
        })
        .collect();
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (ratios.iter().sum::<f64>() / ratios.len() as f64).clamp(min, max);
    Comparison {
        baseline: backends[baseline].clone(),
        subject: backends[subject].clone(),
        min,
        mean,
        max,
    }
}

/// Measures every backend at every axis value. Only the evaluate call is
/// timed; generation and baseline computation happen before the clock
/// starts. Speedups are reported against the first backend.
pub fn run_sweep(
    axis: Axis,
    values: &[usize],
    base: &ProblemSpec,
    backends: &[BackendSpec],
    repeats: usize,
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if values.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("sweep values must be sorted ascending".into()));
    }
    if backends.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one backend".into()));
    }
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let spec = base.with_axis(axis, value);
        let (ground, multiset) = generate_problem(&spec)?;
        let f = EbcFunction::new(ground, AuxiliaryKind::Zero);
        let mut runtimes = vec![Vec::with_capacity(repeats); backends.len()];
        for _ in 0..repeats {
            for (b, spec) in backends.iter().enumerate() {
                let start = Instant::now();
                let out = evaluate(&f, &multiset, spec.backend, spec.threads)?;
                runtimes[b].push(start.elapsed().as_secs_f64());
                drop(out);
            }
        }
        rows.push(SweepRow { axis_value: value, runtimes });
    }
    let labels: Vec<String> = backends.iter().map(|b| b.label.clone()).collect();
    let comparisons = (0..labels.len()).map(|s| compare(&rows, &labels, 0, s)).collect();
    Ok(SweepReport { axis, backends: labels, rows, comparisons })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown report format '{other}'"))),
        }
    }
}

/// Renders a report. CSV lists every measurement followed by a blank line
/// and the min/mean/max speedup block; Markdown gives a median runtime table
/// and a speedup table with one row per statistic.
pub fn emit_report(report: &SweepReport, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str("axis_value,backend,run,runtime_seconds\n");
            for row in &report.rows {
                for (b, label) in report.backends.iter().enumerate() {
                    for (r, t) in row.runtimes[b].iter().enumerate() {
                        let _ = writeln!(out, "{},{},{},{:.9}", row.axis_value, label, r, t);
                    }
                }
            }
            out.push('\n');
            out.push_str("subject,baseline,statistic,speedup\n");
            for c in &report.comparisons {
                for (stat, v) in [("min", c.min), ("mean", c.mean), ("max", c.max)] {
                    let _ = writeln!(out, "{},{},{},{:.4}", c.subject, c.baseline, stat, v);
                }
            }
        }
        Format::Markdown => {
            let _ = write!(out, "| {} |", report.axis);
            for label in &report.backends {
                let _ = write!(out, " {label} median (s) |");
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(report.backends.len()));
            out.push('\n');
            for row in &report.rows {
                let _ = write!(out, "| {} |", row.axis_value);
                for b in 0..report.backends.len() {
                    let _ = write!(out, " {:.6} |", row.median(b));
                }
                out.push('\n');
            }
            out.push('\n');
            out.push_str("| speedup |");
            for c in &report.comparisons {
                let _ = write!(out, " {} vs {} |", c.subject, c.baseline);
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(report.comparisons.len()));
            out.push('\n');
            for stat in ["min", "mean", "max"] {
                let _ = write!(out, "| {stat} |");
                for c in &report.comparisons {
                    let v = match stat {
                        "min" => c.min,
                        "mean" => c.mean,
                        _ => c.max,
                    };
                    let _ = write!(out, " {v:.2} |");
                }
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, l: usize, k: usize) -> ProblemSpec {
        ProblemSpec { n, l, k, dims: 3, seed: 5, precision: Precision::Fp32 }
    }

    #[test]
    fn generation_is_deterministic() {
        let (g1, m1) = generate_problem(&spec(40, 7, 4)).unwrap();
        let (g2, m2) = generate_problem(&spec(40, 7, 4)).unwrap();
        assert_eq!(g1.values::<f64>(), g2.values::<f64>());
        assert_eq!(m1, m2);
        let (g3, _) = generate_problem(&ProblemSpec { seed: 6, ..spec(40, 7, 4) }).unwrap();
        assert_ne!(g1.values::<f64>(), g3.values::<f64>());
    }

    #[test]
    fn generated_sets_are_distinct_and_in_range() {
        let (g, m) = generate_problem(&spec(30, 20, 6)).unwrap();
        assert_eq!(m.len(), 20);
        assert!(g.values::<f64>().iter().all(|&v| (0.0..1.0).contains(&v)));
        for set in m.iter() {
            assert_eq!(set.len(), 6);
            assert!(set.windows(2).all(|w| w[0] < w[1]));
            assert!(set.iter().all(|&i| i < 30));
        }
        let (_, full) = generate_problem(&spec(9, 3, 9)).unwrap();
        for set in full.iter() {
            assert_eq!(set, (0..9).collect::<Vec<_>>().as_slice());
        }
        assert!(generate_problem(&spec(5, 2, 6)).is_err());
        assert!(generate_problem(&spec(5, 0, 2)).is_err());
    }

    #[test]
    fn reference_starting_point_is_accepted() {
        let s = ProblemSpec { n: 50000, l: 5000, k: 10, dims: 100, seed: 0, precision: Precision::Fp32 };
        assert!(s.validate().is_ok());
    }

    #[test]
    fn default_values_span_reference_ranges() {
        let n = Axis::N.default_values();
        assert_eq!((n[0], n[1], *n.last().unwrap()), (1000, 29500, 400000));
        let l = Axis::L.default_values();
        assert_eq!((l[0], l[1], *l.last().unwrap()), (1000, 3785, 26070));
        let k = Axis::K.default_values();
        assert_eq!((k[0], k[1], *k.last().unwrap()), (10, 45, 430));
        for v in [n, l, k] {
            assert!(v.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn single_backend_compares_to_itself() {
        let r = run_sweep(Axis::K, &[2, 3], &spec(50, 4, 2), &[BackendSpec::new(Backend::Naive, 1)], 1).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.comparisons.len(), 1);
        let c = &r.comparisons[0];
        assert_eq!((c.min, c.mean, c.max), (1.0, 1.0, 1.0));
    }

    #[test]
    fn sweep_argument_checks() {
        let b = [BackendSpec::new(Backend::Naive, 1)];
        assert!(run_sweep(Axis::N, &[20, 10], &spec(50, 4, 2), &b, 1).is_err());
        assert!(run_sweep(Axis::N, &[10], &spec(50, 4, 2), &b, 0).is_err());
        assert!(run_sweep(Axis::N, &[], &spec(50, 4, 2), &b, 1).is_err());
        assert!(run_sweep(Axis::N, &[10], &spec(50, 4, 2), &[], 1).is_err());
    }

    #[test]
    fn seeded_two_point_sweep_has_expected_shape() {
        let backends = [BackendSpec::new(Backend::Naive, 1), BackendSpec::new(Backend::Batched, 2)];
        let r = run_sweep(Axis::N, &[100, 200], &spec(0, 8, 3).with_axis(Axis::N, 100), &backends, 3).unwrap();
        let csv = emit_report(&r, Format::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "axis_value,backend,run,runtime_seconds");
        assert_eq!(lines.len(), 1 + 2 * 2 * 3 + 1 + 1 + 2 * 3);
        assert!(lines[1].starts_with("100,naive,0,"));
        assert!(lines[12].starts_with("200,batched-t2,2,"));
        for c in &r.comparisons {
            assert!(c.min > 0.0 && c.min <= c.mean && c.mean <= c.max);
        }
    }

    fn hand_report() -> SweepReport {
        let backends = vec!["naive".to_string(), "batched-t4".to_string()];
        let rows = vec![
            SweepRow { axis_value: 1000, runtimes: vec![vec![0.8, 1.0], vec![0.2, 0.25]] },
            SweepRow { axis_value: 2000, runtimes: vec![vec![2.0, 1.8], vec![0.4, 0.6]] },
        ];
        let comparisons = vec![compare(&rows, &backends, 0, 0), compare(&rows, &backends, 0, 1)];
        SweepReport { axis: Axis::N, backends, rows, comparisons }
    }

    #[test]
    fn golden_csv() {
        let expected = "\
axis_value,backend,run,runtime_seconds
1000,naive,0,0.800000000
1000,naive,1,1.000000000
1000,batched-t4,0,0.200000000
1000,batched-t4,1,0.250000000
2000,naive,0,2.000000000
2000,naive,1,1.800000000
2000,batched-t4,0,0.400000000
2000,batched-t4,1,0.600000000

subject,baseline,statistic,speedup
naive,naive,min,1.0000
naive,naive,mean,1.0000
naive,naive,max,1.0000
batched-t4,naive,min,3.0000
batched-t4,naive,mean,4.0000
batched-t4,naive,max,5.0000
";
        assert_eq!(emit_report(&hand_report(), Format::Csv), expected);
    }

    #[test]
    fn golden_markdown() {
        let expected = "\
| N | naive median (s) | batched-t4 median (s) |
|---|---|---|
| 1000 | 0.900000 | 0.225000 |
| 2000 | 1.900000 | 0.500000 |

| speedup | naive vs naive | batched-t4 vs naive |
|---|---|---|
| min | 1.00 | 3.00 |
| mean | 1.00 | 4.00 |
| max | 1.00 | 5.00 |
";
        assert_eq!(emit_report(&hand_report(), Format::Markdown), expected);
    }

    #[test]
    fn median_and_row_speedup() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let r = &hand_report().rows[0];
        assert!((r.speedup(0, 1) - 4.0).abs() < 1e-12);
    }
}
