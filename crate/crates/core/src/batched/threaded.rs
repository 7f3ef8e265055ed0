//! Multi-threaded evaluation of a whole multiset over the work matrix.
//!
//! The `l × n` work matrix is cut into `row_parts × col_parts` rectangular
//! tiles, one per worker. Each worker walks its tile in cache-sized column
//! chunks and keeps one running partial sum per row. Partial sums of a row
//! are then added in column-part order, so the result depends only on the
//! thread count, never on scheduling.

use std::ops::Range;

use crate::data::EvalMultiset;
use crate::distance::{Dissimilarity, Scalar};
use crate::ebc::EbcFunction;
use crate::error::{Error, Result};

/// Target bytes of ground vectors kept hot while sweeping over sets.
const CHUNK_BYTES: usize = 256 * 1024;
const MAX_CHUNK_ROWS: usize = 1024;

/// `[f(S_1), ..., f(S_l)]` using `threads` workers, in the ground
/// matrix's arithmetic precision.
pub fn evaluate_multiset_batched<D: Dissimilarity>(
    f: &EbcFunction<D>,
    multiset: &EvalMultiset,
    threads: usize,
) -> Result<Vec<f64>> {
    let losses = batched_losses(f, multiset, threads)?;
    let baseline = f.baseline_loss();
    Ok(losses.into_iter().map(|loss| baseline - loss).collect())
}

/// `L(S_j ∪ {e0})` for every set, widened to `f64`.
pub fn batched_losses<D: Dissimilarity>(
    f: &EbcFunction<D>,
    multiset: &EvalMultiset,
    threads: usize,
) -> Result<Vec<f64>> {
    if threads == 0 {
        return Err(Error::InvalidArgument("thread count must be >= 1".into()));
    }
    multiset.validate(f.n())?;
    if f.ground().precision().is_double() {
        Ok(row_sums::<f64, D>(f, multiset, threads))
    } else {
        Ok(row_sums::<f32, D>(f, multiset, threads)
            .into_iter()
            .map(Scalar::to_f64)
            .collect())
    }
}

/// Splits `threads` workers over an `l × n` matrix, rows first.
fn partition(l: usize, n: usize, threads: usize) -> (usize, usize) {
    let row_parts = threads.min(l).max(1);
    let col_parts = (threads / row_parts).clamp(1, n.max(1));
    (row_parts, col_parts)
}

fn split(len: usize, parts: usize, p: usize) -> Range<usize> {
    let base = len / parts;
    let extra = len % parts;
    let start = p * base + p.min(extra);
    let end = start + base + usize::from(p < extra);
    start..end
}

struct Tile<'a, T, D> {
    ground: &'a [T],
    dims: usize,
    n: T,
    e0_dist: &'a [T],
    multiset: &'a EvalMultiset,
    distance: &'a D,
}

impl<T: Scalar, D: Dissimilarity> Tile<'_, T, D> {
    fn vector(&self, i: usize) -> &[T] {
        &self.ground[i * self.dims..(i + 1) * self.dims]
    }

    fn run(&self, rows: Range<usize>, cols: Range<usize>) -> Vec<T> {
        let mut sums = vec![T::ZERO; rows.len()];
        let chunk = (CHUNK_BYTES / (self.dims * T::BYTES)).clamp(1, MAX_CHUNK_ROWS);
        let mut start = cols.start;
        while start < cols.end {
            let end = (start + chunk).min(cols.end);
            for (slot, j) in sums.iter_mut().zip(rows.clone()) {
                let set = self.multiset.set(j);
                let mut acc = *slot;
                for i in start..end {
                    let v = self.vector(i);
                    let mut t = self.e0_dist[i];
                    for &s in set {
                        t = t.min(self.distance.eval(self.vector(s), v));
                    }
                    acc += t / self.n;
                }
                *slot = acc;
            }
            start = end;
        }
        sums
    }
}

fn row_sums<T: Scalar, D: Dissimilarity>(
    f: &EbcFunction<D>,
    multiset: &EvalMultiset,
    threads: usize,
) -> Vec<T> {
    let ground = f.ground();
    let (n, dims, l) = (ground.n(), ground.dims(), multiset.len());
    let values = ground.values::<T>();
    let e0 = f.e0_as::<T>();
    let e0_dist: Vec<T> = (0..n)
        .map(|i| f.distance().eval(e0, &values[i * dims..(i + 1) * dims]))
        .collect();
    let tile = Tile {
        ground: values,
        dims,
        n: T::from_f64(n as f64),
        e0_dist: &e0_dist,
        multiset,
        distance: f.distance(),
    };

    let (row_parts, col_parts) = partition(l, n, threads);
    let tiles: Vec<(Range<usize>, Range<usize>)> = (0..row_parts)
        .flat_map(|rp| (0..col_parts).map(move |cp| (split(l, row_parts, rp), split(n, col_parts, cp))))
        .collect();

    let partials: Vec<Vec<T>> = if tiles.len() == 1 {
        vec![tile.run(0..l, 0..n)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = tiles
                .iter()
                .map(|(rows, cols)| {
                    let tile = &tile;
                    let (rows, cols) = (rows.clone(), cols.clone());
                    scope.spawn(move || tile.run(rows, cols))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("evaluation worker panicked"))
                .collect()
        })
    };

    let mut out = vec![T::ZERO; l];
    // tiles are ordered row part first, then column part
    for ((rows, _), partial) in tiles.iter().zip(&partials) {
        for (j, &s) in rows.clone().zip(partial) {
            out[j] += s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AuxiliaryKind, GroundMatrix, Precision};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_pair(precision: Precision) -> EbcFunction {
        let g = GroundMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], precision).unwrap();
        EbcFunction::new(g, AuxiliaryKind::Zero)
    }

    #[test]
    fn single_thread_matches_naive_bitwise_on_fixture() {
        let f = unit_pair(Precision::Fp64);
        let m = EvalMultiset::new(vec![vec![0], vec![1], vec![0, 1]]).unwrap();
        let naive = f.evaluate_multiset_naive(&m).unwrap();
        let batched = evaluate_multiset_batched(&f, &m, 1).unwrap();
        assert_eq!(batched, vec![0.5, 0.5, 1.0]);
        assert!(naive.iter().zip(&batched).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn identical_sets_give_identical_values() {
        let f = unit_pair(Precision::Fp32);
        let m = EvalMultiset::new(vec![vec![1, 0]; 7]).unwrap();
        let v = evaluate_multiset_batched(&f, &m, 3).unwrap();
        assert!(v.windows(2).all(|w| w[0].to_bits() == w[1].to_bits()));
    }

    #[test]
    fn rejects_zero_threads_and_bad_indices() {
        let f = unit_pair(Precision::Fp64);
        let m = EvalMultiset::new(vec![vec![0]]).unwrap();
        assert!(matches!(
            evaluate_multiset_batched(&f, &m, 0),
            Err(Error::InvalidArgument(_))
        ));
        let m = EvalMultiset::new(vec![vec![0], vec![2]]).unwrap();
        assert_eq!(
            evaluate_multiset_batched(&f, &m, 2),
            Err(Error::IndexOutOfRange {
                index: 2,
                n: 2,
                set: Some(1)
            })
        );
    }

    #[test]
    fn partition_covers_every_cell_once() {
        for (l, n, threads) in [(1, 10, 8), (3, 10, 8), (50, 7, 4), (5, 1, 16), (1, 1, 1)] {
            let (rp, cp) = partition(l, n, threads);
            assert!(rp * cp <= threads.max(1));
            let mut seen = vec![0u32; l * n];
            for r in 0..rp {
                for c in 0..cp {
                    for j in split(l, rp, r) {
                        for i in split(n, cp, c) {
                            seen[j * n + i] += 1;
                        }
                    }
                }
            }
            assert!(seen.iter().all(|&s| s == 1), "l={l} n={n} threads={threads}");
        }
    }

    fn random_case(rng: &mut ChaCha8Rng, precision: Precision) -> (EbcFunction, EvalMultiset) {
        let n = rng.gen_range(1..=200);
        let dims = rng.gen_range(1..=20);
        let l = rng.gen_range(1..=50);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dims).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let f = EbcFunction::new(GroundMatrix::from_rows(&rows, precision).unwrap(), AuxiliaryKind::Zero);
        let sets = (0..l)
            .map(|_| {
                let k = rng.gen_range(0..=10.min(n));
                rand::seq::index::sample(rng, n, k).into_vec()
            })
            .collect();
        (f, EvalMultiset::new(sets).unwrap())
    }

    #[test]
    fn random_instances_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for round in 0..100 {
            let precision = if round % 2 == 0 { Precision::Fp32 } else { Precision::Fp64 };
            let (f, m) = random_case(&mut rng, precision);
            let naive = f.evaluate_multiset_naive(&m).unwrap();
            let scale = f.baseline_loss();
            let tol = if precision.is_double() { 1e-10 } else { 1e-5 };
            for threads in [1, 2, 8] {
                let got = evaluate_multiset_batched(&f, &m, threads).unwrap();
                for (a, b) in got.iter().zip(&naive) {
                    assert!((a - b).abs() <= tol * b.abs().max(scale), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn thread_count_reproducibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (f, m) = random_case(&mut rng, Precision::Fp32);
        for threads in [1, 3, 8] {
            let a = evaluate_multiset_batched(&f, &m, threads).unwrap();
            let b = evaluate_multiset_batched(&f, &m, threads).unwrap();
            assert_eq!(a, b);
        }
    }
}
