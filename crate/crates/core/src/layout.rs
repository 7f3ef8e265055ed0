//! Memory layouts for the device kernel and a segment-level transaction model.
//!
//! The ground matrix is flattened column by column into one buffer. The
//! evaluation sets are merged into a single `dims × (l · max_len)` matrix by
//! taking the next unprocessed vector from each set in round-robin order,
//! leaving a hole once a set is exhausted; that matrix is then flattened row
//! by row, so the address of feature `k` in column `c` is
//! `(k · l · max_len + c) · bytes`. Threads of one warp that read the same
//! feature of the rank-`r` vector of neighbouring sets therefore touch
//! neighbouring addresses.

use crate::batched::KernelConfig;
use crate::data::{EvalMultiset, GroundMatrix, Precision};
use crate::error::{Error, Result};

/// Column-major flattening: all rows' feature 0, then all rows' feature 1, ...
pub fn vectorize_ground(ground: &GroundMatrix) -> Vec<f64> {
    let (n, dims) = (ground.n(), ground.dims());
    let mut buf = Vec::with_capacity(n * dims);
    for k in 0..dims {
        buf.extend((0..n).map(|i| ground.row(i)[k]));
    }
    buf
}

/// Inverse of [`vectorize_ground`].
pub fn devectorize_ground(
    buf: &[f64],
    n: usize,
    dims: usize,
    precision: Precision,
) -> Result<GroundMatrix> {
    if buf.len() != n * dims {
        return Err(Error::DimensionMismatch {
            expected: n * dims,
            got: buf.len(),
        });
    }
    let mut rows = vec![0.0; n * dims];
    for k in 0..dims {
        for i in 0..n {
            rows[i * dims + k] = buf[k * n + i];
        }
    }
    GroundMatrix::new(rows, n, dims, precision)
}

/// The round-robin evaluation-set matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedEvalMatrix {
    dims: usize,
    set_lengths: Vec<usize>,
    max_len: usize,
    scalar_bytes: usize,
    /// `dims` rows of `columns()` values, row-wise.
    cells: Vec<f64>,
    /// Same shape as `cells`; authoritative for which cells hold data.
    occupancy: Vec<bool>,
    /// Ground index stored in each column, if any.
    sources: Vec<Option<usize>>,
}

impl InterleavedEvalMatrix {
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of sets `l`.
    pub fn sets(&self) -> usize {
        self.set_lengths.len()
    }

    pub fn set_lengths(&self) -> &[usize] {
        &self.set_lengths
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn scalar_bytes(&self) -> usize {
        self.scalar_bytes
    }

    /// `l · max_len`.
    pub fn columns(&self) -> usize {
        self.sets() * self.max_len
    }

    /// `(set, rank)` owning column `c`.
    pub fn column_owner(&self, c: usize) -> (usize, usize) {
        (c % self.sets(), c / self.sets())
    }

    /// Column holding the rank-`r` vector of set `j`.
    pub fn column_of(&self, j: usize, r: usize) -> usize {
        r * self.sets() + j
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn source(&self, c: usize) -> Option<usize> {
        self.sources[c]
    }

    /// Value of feature `k` in column `c`, `None` for holes.
    pub fn get(&self, k: usize, c: usize) -> Option<f64> {
        let at = k * self.columns() + c;
        self.occupancy[at].then(|| self.cells[at])
    }

    /// Byte address of feature `k` in column `c` relative to the buffer start.
    pub fn address(&self, k: usize, c: usize) -> u64 {
        ((k * self.columns() + c) * self.scalar_bytes) as u64
    }

    pub fn filled_cells(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    /// Occupancy flag for every cell of column `c` across all features.
    fn column_occupancy(&self, c: usize) -> impl Iterator<Item = bool> + '_ {
        (0..self.dims).map(move |k| self.occupancy[k * self.columns() + c])
    }
}

/// Merges the sets of `multiset` round-robin into one matrix. Holes hold a
/// quiet NaN and are marked unoccupied.
pub fn interleave_eval_sets(
    multiset: &EvalMultiset,
    ground: &GroundMatrix,
) -> Result<InterleavedEvalMatrix> {
    multiset.validate(ground.n())?;
    let dims = ground.dims();
    let l = multiset.len();
    let max_len = multiset.max_len();
    let columns = l * max_len;
    let mut cells = vec![f64::NAN; dims * columns];
    let mut occupancy = vec![false; dims * columns];
    let mut sources = vec![None; columns];
    for r in 0..max_len {
        for j in 0..l {
            let c = r * l + j;
            if let Some(&s) = multiset.set(j).get(r) {
                sources[c] = Some(s);
                for (k, &v) in ground.row(s).iter().enumerate() {
                    cells[k * columns + c] = v;
                    occupancy[k * columns + c] = true;
                }
            }
        }
    }
    Ok(InterleavedEvalMatrix {
        dims,
        set_lengths: multiset.lengths(),
        max_len,
        scalar_bytes: ground.precision().storage_bytes(),
        cells,
        occupancy,
        sources,
    })
}

/// Recovers the original multiset, checking the occupancy mask against the
/// recorded set lengths.
pub fn deinterleave(m: &InterleavedEvalMatrix) -> Result<EvalMultiset> {
    let l = m.sets();
    if l == 0 {
        return Err(Error::Corruption("matrix holds no sets".into()));
    }
    if m.set_lengths.iter().copied().max().unwrap_or(0) != m.max_len
        || m.occupancy.len() != m.dims * m.columns()
        || m.sources.len() != m.columns()
    {
        return Err(Error::Corruption("shape disagrees with set lengths".into()));
    }
    let mut sets: Vec<Vec<usize>> = m.set_lengths.iter().map(|&n| Vec::with_capacity(n)).collect();
    for c in 0..m.columns() {
        let (j, r) = m.column_owner(c);
        let expected = r < m.set_lengths[j];
        if m.column_occupancy(c).any(|o| o != expected) {
            return Err(Error::Corruption(format!(
                "column {c} (set {j}, rank {r}) occupancy disagrees with set length {}",
                m.set_lengths[j]
            )));
        }
        match (expected, m.sources[c]) {
            (true, Some(s)) => sets[j].push(s),
            (false, None) => {}
            _ => {
                return Err(Error::Corruption(format!(
                    "column {c} source disagrees with occupancy"
                )))
            }
        }
    }
    EvalMultiset::new(sets)
}

/// One warp instruction's global memory reads.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AccessStep {
    pub warp: usize,
    pub addresses: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AccessTrace {
    pub steps: Vec<AccessStep>,
}

impl AccessTrace {
    pub fn push(&mut self, warp: usize, addresses: Vec<u64>) {
        self.steps.push(AccessStep { warp, addresses });
    }
}

/// Distinct `segment_bytes`-sized segments touched by `addresses`.
pub fn count_segments(addresses: &[u64], segment_bytes: usize) -> usize {
    let seg = segment_bytes as u64;
    let mut segments: Vec<u64> = addresses.iter().map(|a| a / seg).collect();
    segments.sort_unstable();
    segments.dedup();
    segments.len()
}

/// Transactions needed for each step of `trace`.
pub fn count_memory_transactions(trace: &AccessTrace, segment_bytes: usize) -> Result<Vec<usize>> {
    if segment_bytes == 0 {
        return Err(Error::InvalidArgument("segment size must be positive".into()));
    }
    Ok(trace
        .steps
        .iter()
        .map(|s| count_segments(&s.addresses, segment_bytes))
        .collect())
}

/// Where each set's vectors live in global memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetLayout {
    /// Round-robin merged matrix, flattened row-wise.
    Interleaved,
    /// Set after set, each vector's features consecutive.
    Contiguous,
}

/// Reads of the set vectors issued by the warps of one block column under
/// `config`, for the given layout.
///
/// Threads are linearized x-fastest into warps; a thread at `(t_x, t_y)` of
/// block row `b_y*` reads set `j = b_y · b_y* + t_y`. Every step is one
/// `(rank, feature)` load for all threads whose set still has a vector of
/// that rank.
pub fn access_trace(multiset: &EvalMultiset, config: &KernelConfig, layout: SetLayout) -> AccessTrace {
    let l = multiset.len();
    let dims = config.dims();
    let bytes = config.scalar_bytes;
    let max_len = multiset.max_len();
    let columns = l * max_len;
    let lengths = multiset.lengths();
    let mut offsets = Vec::with_capacity(l);
    let mut acc = 0usize;
    for &len in &lengths {
        offsets.push(acc);
        acc += len * dims;
    }

    let (b_x, b_y) = (config.block.x, config.block.y);
    let tpb = b_x * b_y;
    let warps = config.warps_per_block();
    let mut trace = AccessTrace::default();
    let mut lanes: Vec<usize> = Vec::with_capacity(config.warp_size);
    for by in 0..config.grid.y {
        for w in 0..warps {
            lanes.clear();
            for lin in w * config.warp_size..((w + 1) * config.warp_size).min(tpb) {
                let j = by * b_y + lin / b_x;
                if j < l {
                    lanes.push(j);
                }
            }
            let ranks = lanes.iter().map(|&j| lengths[j]).max().unwrap_or(0);
            let warp_id = by * warps + w;
            for r in 0..ranks {
                for k in 0..dims {
                    let addresses = lanes
                        .iter()
                        .filter(|&&j| r < lengths[j])
                        .map(|&j| match layout {
                            SetLayout::Interleaved => ((k * columns + r * l + j) * bytes) as u64,
                            SetLayout::Contiguous => ((offsets[j] + r * dims + k) * bytes) as u64,
                        })
                        .collect();
                    trace.push(warp_id, addresses);
                }
            }
        }
    }
    trace
}

/// Transaction totals of the two layouts under the same warp schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutAudit {
    pub steps: usize,
    pub interleaved_transactions: usize,
    pub contiguous_transactions: usize,
    /// Steps in which the interleaved layout needed more transactions.
    pub interleaved_worse_steps: usize,
    /// Busiest step of the interleaved layout.
    pub interleaved_max_per_step: usize,
    pub contiguous_max_per_step: usize,
}

impl LayoutAudit {
    /// `contiguous / interleaved`; 1 when nothing is read.
    pub fn ratio(&self) -> f64 {
        if self.interleaved_transactions == 0 {
            1.0
        } else {
            self.contiguous_transactions as f64 / self.interleaved_transactions as f64
        }
    }

    pub fn interleaved_dominates(&self) -> bool {
        self.interleaved_transactions <= self.contiguous_transactions
    }
}

pub fn audit_layouts(multiset: &EvalMultiset, config: &KernelConfig) -> Result<LayoutAudit> {
    config.validate(0, multiset.len())?;
    let seg = config.segment_bytes;
    let a = count_memory_transactions(&access_trace(multiset, config, SetLayout::Interleaved), seg)?;
    let b = count_memory_transactions(&access_trace(multiset, config, SetLayout::Contiguous), seg)?;
    debug_assert_eq!(a.len(), b.len());
    Ok(LayoutAudit {
        steps: a.len(),
        interleaved_transactions: a.iter().sum(),
        contiguous_transactions: b.iter().sum(),
        interleaved_worse_steps: a.iter().zip(&b).filter(|(x, y)| x > y).count(),
        interleaved_max_per_step: a.iter().copied().max().unwrap_or(0),
        contiguous_max_per_step: b.iter().copied().max().unwrap_or(0),
    })
}
