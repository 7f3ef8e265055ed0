//! Cardinality-constrained maximization of the clustering function.
//!
//! Every optimizer hands complete multisets to one of the evaluation
//! backends, so the parallelism lives in the backend and the optimizers
//! stay single-threaded drivers. Ties are always broken towards the lowest
//! ground index (or the first set in enumeration order), which makes the
//! selection independent of the backend.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::batched::{evaluate_multiset_batched, simulate_kernel, KernelConfig};
use crate::data::{EvalMultiset, MultisetBuilder, Summary};
use crate::distance::Dissimilarity;
use crate::ebc::EbcFunction;
use crate::error::{Error, Result};
use crate::layout::interleave_eval_sets;

/// Which evaluator computes multiset values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    /// One set at a time, `f64` accumulation.
    Naive,
    /// Thread pool over the work matrix.
    #[default]
    Batched,
    /// Single-threaded kernel model.
    DeviceSim,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Naive => "naive",
            Backend::Batched => "batched",
            Backend::DeviceSim => "device-sim",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "naive" => Ok(Backend::Naive),
            "batched" => Ok(Backend::Batched),
            "device-sim" | "device" | "sim" => Ok(Backend::DeviceSim),
            other => Err(Error::InvalidArgument(format!("unknown backend '{other}'"))),
        }
    }
}

/// Evaluates `multiset` with the chosen backend.
pub fn evaluate<D: Dissimilarity>(
    f: &EbcFunction<D>,
    multiset: &EvalMultiset,
    backend: Backend,
    threads: usize,
) -> Result<Vec<f64>> {
    match backend {
        Backend::Naive => f.evaluate_multiset_naive(multiset),
        Backend::Batched => evaluate_multiset_batched(f, multiset, threads),
        Backend::DeviceSim => {
            let g = f.ground();
            let interleaved = interleave_eval_sets(multiset, g)?;
            let config = KernelConfig::for_problem(g.n(), multiset.len(), g.dims(), g.precision())?;
            Ok(simulate_kernel(f, &interleaved, &config, false)?.values)
        }
    }
}

/// Summary size and evaluation resources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OptimizerBudget {
    pub k: usize,
    pub backend: Backend,
    pub threads: usize,
}

impl OptimizerBudget {
    pub fn new(k: usize, backend: Backend, threads: usize) -> Self {
        Self { k, backend, threads }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("summary size k must be >= 1".into()));
        }
        if self.k > n {
            return Err(Error::InvalidArgument(format!(
                "summary size k={} exceeds ground set size {n}",
                self.k
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("thread count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Index of the largest value, first one on ties.
fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (pos, &v) in values.iter().enumerate() {
        match best {
            Some(b) if v <= values[b] => {}
            _ => best = Some(pos),
        }
    }
    best
}

/// Greedy maximization: `k` rounds, each evaluating `S ∪ {c}` for every
/// unselected `c` and keeping the best.
pub fn greedy_maximize<D: Dissimilarity>(f: &EbcFunction<D>, budget: &OptimizerBudget) -> Result<Summary> {
    let n = f.n();
    budget.validate(n)?;
    let start = Instant::now();
    let mut selected: Vec<usize> = Vec::with_capacity(budget.k);
    let mut taken = vec![false; n];
    let mut gains = Vec::with_capacity(budget.k);
    let mut current = 0.0;
    let mut evaluations = 0u64;

    for _ in 0..budget.k {
        let candidates: Vec<usize> = (0..n).filter(|&c| !taken[c]).collect();
        let mut builder = MultisetBuilder::with_capacity(candidates.len(), candidates.len() * (selected.len() + 1));
        for &c in &candidates {
            builder.push(selected.iter().copied().chain(std::iter::once(c)));
        }
        let multiset = builder.finish()?;
        let values = evaluate(f, &multiset, budget.backend, budget.threads)?;
        evaluations += values.len() as u64;
        let best = first_argmax(&values).expect("at least one candidate while k <= n");
        let chosen = candidates[best];
        gains.push(values[best] - current);
        current = values[best];
        selected.push(chosen);
        taken[chosen] = true;
    }

    Ok(Summary {
        selected,
        value: current,
        gains,
        evaluations,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

/// Largest number of subsets [`brute_force_opt`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;
const BRUTE_FORCE_BATCH: usize = 4096;

/// Exact optimum over all `k`-subsets, evaluated with the naive evaluator.
/// Meant as a test oracle for small instances.
pub fn brute_force_opt<D: Dissimilarity>(f: &EbcFunction<D>, k: usize) -> Result<Summary> {
    let n = f.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "brute force needs 1 <= k <= {n}, got {k}"
        )));
    }
    let count = binomial(n, k);
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge(format!(
            "C({n}, {k}) = {count} subsets exceed the limit of {BRUTE_FORCE_LIMIT}"
        )));
    }
    let start = Instant::now();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut evaluations = 0u64;
    let mut combo: Vec<usize> = (0..k).collect();
    let mut pending: Vec<Vec<usize>> = Vec::with_capacity(BRUTE_FORCE_BATCH);
    let mut exhausted = false;

    let mut flush = |pending: &mut Vec<Vec<usize>>, best: &mut Option<(f64, Vec<usize>)>| -> Result<()> {
        if pending.is_empty() {
            return Ok(());
        }
        let multiset = EvalMultiset::new(std::mem::take(pending))?;
        let values = f.evaluate_multiset_naive(&multiset)?;
        evaluations += values.len() as u64;
        for (j, v) in values.into_iter().enumerate() {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                *best = Some((v, multiset.set(j).to_vec()));
            }
        }
        Ok(())
    };

    while !exhausted {
        pending.push(combo.clone());
        if pending.len() == BRUTE_FORCE_BATCH {
            flush(&mut pending, &mut best)?;
        }
        // next combination in lexicographic order
        match (0..k).rev().find(|&p| combo[p] < n - k + p) {
            Some(p) => {
                combo[p] += 1;
                for q in p + 1..k {
                    combo[q] = combo[q - 1] + 1;
                }
            }
            None => exhausted = true,
        }
    }
    flush(&mut pending, &mut best)?;

    let (value, selected) = best.expect("at least one subset");
    let mut gains = Vec::with_capacity(k);
    let mut prev = 0.0;
    for t in 1..=k {
        let v = f.value(&selected[..t])?;
        gains.push(v - prev);
        prev = v;
    }
    Ok(Summary {
        selected,
        value,
        gains,
        evaluations,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Default)]
struct Sieve {
    set: Vec<usize>,
    value: f64,
    gains: Vec<f64>,
}

/// Default geometric grid spacing of the sieve thresholds.
pub const DEFAULT_SIEVE_EPSILON: f64 = 0.1;

/// Single-pass threshold sieve.
///
/// Thresholds `τ = (1 + ε)^i` cover `[m, 2·k·m]`, where `m` is the largest
/// singleton value seen so far; each threshold keeps its own set and admits
/// an element when its marginal gain reaches `(τ/2 - f(S)) / (k - |S|)`.
/// The best set over all thresholds is returned.
pub fn sieve_stream_maximize<D: Dissimilarity>(
    stream: impl IntoIterator<Item = usize>,
    f: &EbcFunction<D>,
    budget: &OptimizerBudget,
    epsilon: f64,
) -> Result<Summary> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    budget.validate(f.n())?;
    let k = budget.k;
    let start = Instant::now();
    let log_base = (1.0 + epsilon).ln();
    let mut sieves: BTreeMap<i64, Sieve> = BTreeMap::new();
    let mut max_singleton = 0.0f64;
    let mut evaluations = 0u64;

    for e in stream {
        // the singleton first, then every open sieve extended by `e`
        let open: Vec<i64> = sieves
            .iter()
            .filter(|(_, s)| !s.set.is_empty() && s.set.len() < k && !s.set.contains(&e))
            .map(|(&i, _)| i)
            .collect();
        let mut builder = MultisetBuilder::with_capacity(open.len() + 1, 0);
        builder.push([e]);
        for i in &open {
            builder.push(sieves[i].set.iter().copied().chain([e]));
        }
        let values = evaluate(f, &builder.finish()?, budget.backend, budget.threads)?;
        evaluations += values.len() as u64;
        let singleton = values[0];
        let extended: BTreeMap<i64, f64> = open.iter().copied().zip(values[1..].iter().copied()).collect();

        if singleton > max_singleton {
            max_singleton = singleton;
            let lo = (max_singleton.ln() / log_base).ceil() as i64;
            let hi = ((2.0 * k as f64 * max_singleton).ln() / log_base).floor() as i64;
            sieves.retain(|&i, _| i >= lo);
            for i in lo..=hi {
                sieves.entry(i).or_default();
            }
        }

        for (&i, sieve) in sieves.iter_mut() {
            if sieve.set.len() >= k || sieve.set.contains(&e) {
                continue;
            }
            let with_e = if sieve.set.is_empty() {
                singleton
            } else {
                match extended.get(&i) {
                    Some(&v) => v,
                    None => continue,
                }
            };
            let tau = (i as f64 * log_base).exp();
            let gain = with_e - sieve.value;
            let needed = (tau / 2.0 - sieve.value) / (k - sieve.set.len()) as f64;
            if gain >= needed {
                sieve.set.push(e);
                sieve.gains.push(gain);
                sieve.value = with_e;
            }
        }
    }

    let best = sieves
        .into_values()
        .fold(None::<Sieve>, |best, s| match best {
            Some(b) if s.value <= b.value => Some(b),
            _ => Some(s),
        })
        .unwrap_or_default();
    Ok(Summary {
        selected: best.set,
        value: best.value,
        gains: best.gains,
        evaluations,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}
