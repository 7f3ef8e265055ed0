//! A deterministic, single-threaded model of the work-matrix kernel.
//!
//! Blocks run one after another in row-major grid order. Inside a block the
//! threads with `t_y = 0` first copy their ground vector from the
//! column-major ground buffer into the block's shared memory, then every
//! warp runs in lockstep: one instruction step per `(rank, feature)` read of
//! the interleaved set matrix, with the byte addresses of that step turned
//! into a transaction count. `e0` is an implicit member of every set and is
//! read from constant memory, so it never shows up in the trace.

use crate::batched::{KernelConfig, WorkMatrix};
use crate::distance::{Dissimilarity, Scalar};
use crate::ebc::EbcFunction;
use crate::error::{Error, Result};
use crate::layout::{count_segments, vectorize_ground, InterleavedEvalMatrix};

/// Observability counters collected while simulating.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeviceTrace {
    /// Ground vectors copied into shared memory, per block in launch order.
    pub shared_loads: Vec<usize>,
    /// Distinct ground vectors each block is responsible for.
    pub block_vectors: Vec<usize>,
    /// Memory transactions of each warp instruction step, in issue order.
    pub global_transactions: Vec<usize>,
    pub cells_computed: usize,
    /// Times each work-matrix cell was written (row-major, `l × n`); only
    /// kept when the work matrix is materialized.
    pub visit_counts: Option<Vec<u32>>,
}

impl DeviceTrace {
    pub fn total_transactions(&self) -> usize {
        self.global_transactions.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelRun {
    /// `f(S_j)` for every set.
    pub values: Vec<f64>,
    pub trace: DeviceTrace,
    /// The full work matrix when requested.
    pub work: Option<WorkMatrix>,
}

/// Runs the kernel model over every cell of the `l × n` work matrix.
pub fn simulate_kernel<D: Dissimilarity>(
    f: &EbcFunction<D>,
    interleaved: &InterleavedEvalMatrix,
    config: &KernelConfig,
    materialize: bool,
) -> Result<KernelRun> {
    let ground = f.ground();
    let (n, l) = (ground.n(), interleaved.sets());
    config.validate(n, l)?;
    let bytes = ground.precision().storage_bytes();
    if config.scalar_bytes != bytes || config.gamma != ground.dims() * bytes {
        return Err(Error::Configuration(format!(
            "configuration built for {}-byte scalars and {}-byte vectors, ground needs {} and {}",
            config.scalar_bytes,
            config.gamma,
            bytes,
            ground.dims() * bytes
        )));
    }
    if interleaved.dims() != ground.dims() || interleaved.scalar_bytes() != bytes {
        return Err(Error::Configuration(
            "interleaved matrix was built for a different ground set".into(),
        ));
    }
    if ground.precision().is_double() {
        run::<f64, D>(f, interleaved, config, materialize)
    } else {
        run::<f32, D>(f, interleaved, config, materialize)
    }
}

struct Lane<T> {
    i: usize,
    j: usize,
    d_min: T,
}

fn run<T: Scalar, D: Dissimilarity>(
    f: &EbcFunction<D>,
    m: &InterleavedEvalMatrix,
    config: &KernelConfig,
    materialize: bool,
) -> Result<KernelRun> {
    let ground = f.ground();
    let (n, dims, l) = (ground.n(), ground.dims(), m.sets());
    let global_ground: Vec<T> = vectorize_ground(ground).into_iter().map(T::from_f64).collect();
    let set_cells: Vec<T> = m.cells().iter().map(|&v| T::from_f64(v)).collect();
    let columns = m.columns();
    let lengths = m.set_lengths();
    let e0 = f.e0_as::<T>();
    let n_t = T::from_f64(n as f64);

    let mut work = if materialize {
        Some(WorkMatrix::zeros(l, n)?)
    } else {
        None
    };
    let mut visits = materialize.then(|| vec![0u32; l * n]);
    let mut row_sums = vec![T::ZERO; l];
    let mut trace = DeviceTrace::default();

    let (b_x, b_y) = (config.block.x, config.block.y);
    let tpb = b_x * b_y;
    let mut shared = vec![T::ZERO; b_x * dims];
    let mut s_vec = vec![T::ZERO; dims];
    let mut lanes: Vec<Lane<T>> = Vec::with_capacity(config.warp_size);
    let mut addresses: Vec<u64> = Vec::with_capacity(config.warp_size);

    for by in 0..config.grid.y {
        for bx in 0..config.grid.x {
            // t_y = 0 threads stage their vector, then the block synchronizes.
            let mut loads = 0;
            for tx in 0..b_x {
                let i = b_x * bx + tx;
                if i < n {
                    for k in 0..dims {
                        shared[tx * dims + k] = global_ground[k * n + i];
                    }
                    loads += 1;
                }
            }
            trace.shared_loads.push(loads);
            trace.block_vectors.push((b_x * bx..b_x * (bx + 1)).filter(|&i| i < n).count());

            for w in 0..config.warps_per_block() {
                lanes.clear();
                for lin in w * config.warp_size..((w + 1) * config.warp_size).min(tpb) {
                    let (tx, ty) = (lin % b_x, lin / b_x);
                    let (i, j) = (b_x * bx + tx, b_y * by + ty);
                    // grid overshoot: these threads do nothing
                    if i < n && j < l {
                        let v = &shared[tx * dims..(tx + 1) * dims];
                        lanes.push(Lane {
                            i,
                            j,
                            d_min: f.distance().eval(e0, v),
                        });
                    }
                }
                let ranks = lanes.iter().map(|t| lengths[t.j]).max().unwrap_or(0);
                for r in 0..ranks {
                    for k in 0..dims {
                        addresses.clear();
                        addresses.extend(
                            lanes
                                .iter()
                                .filter(|t| r < lengths[t.j])
                                .map(|t| m.address(k, m.column_of(t.j, r))),
                        );
                        trace
                            .global_transactions
                            .push(count_segments(&addresses, config.segment_bytes));
                    }
                    for t in lanes.iter_mut().filter(|t| r < lengths[t.j]) {
                        let c = m.column_of(t.j, r);
                        for (k, s) in s_vec.iter_mut().enumerate() {
                            *s = set_cells[k * columns + c];
                        }
                        let tx = t.i - b_x * bx;
                        let v = &shared[tx * dims..(tx + 1) * dims];
                        t.d_min = t.d_min.min(f.distance().eval(&s_vec, v));
                    }
                }
                for t in &lanes {
                    let cell = t.d_min / n_t;
                    row_sums[t.j] += cell;
                    if let Some(w) = work.as_mut() {
                        w.set(t.j, t.i, cell.to_f64());
                    }
                    if let Some(v) = visits.as_mut() {
                        v[t.j * n + t.i] += 1;
                    }
                    trace.cells_computed += 1;
                }
            }
        }
    }
    trace.visit_counts = visits;

    let baseline = f.baseline_loss();
    Ok(KernelRun {
        values: row_sums.into_iter().map(|s| baseline - s.to_f64()).collect(),
        trace,
        work,
    })
}
