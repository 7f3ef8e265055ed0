//! Work-matrix evaluation of many sets at once.
//!
//! Every cell `W[j, i] = |V|^-1 min_{s ∈ S_j ∪ {e0}} d(v_i, s)` is an
//! independent task and the row sums `W · 1` are the set losses. Two
//! backends compute them: a thread pool over rectangular tiles of `W`, and
//! a single-threaded model of the GPU kernel that also reports how the
//! launch configuration uses shared memory and global memory segments.

mod config;
mod device;
mod threaded;
mod work;

pub use config::{
    compute_block_dims, compute_grid_dims, Dim3, KernelConfig, ThreadCoord, DEFAULT_SEGMENT_BYTES,
    DEFAULT_SHARED_BYTES, DEFAULT_WARP_SIZE, MAX_THREADS_PER_BLOCK,
};
pub use device::{simulate_kernel, DeviceTrace, KernelRun};
pub use threaded::{batched_losses, evaluate_multiset_batched};
pub use work::{reduce_work_matrix, WorkMatrix, MAX_MATERIALIZED_CELLS};
