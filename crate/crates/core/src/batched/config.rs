//! Grid/block dimensioning for the work-matrix kernel.

use crate::data::Precision;
use crate::error::{Error, Result};

/// Hardware limit on threads per block.
pub const MAX_THREADS_PER_BLOCK: usize = 1024;
pub const DEFAULT_WARP_SIZE: usize = 32;
pub const DEFAULT_SEGMENT_BYTES: usize = 32;
/// 48 KiB of shared memory per block.
pub const DEFAULT_SHARED_BYTES: usize = 49152;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dim3 {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Dim3 {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y, z: 1 }
    }

    pub fn volume(&self) -> usize {
        self.x * self.y * self.z
    }
}

/// Block dimensions `(b_x, b_y)` for `l` evaluation sets.
///
/// `b_y = min(1024, l)` puts as many sets as possible next to each other;
/// `b_x` takes the remaining thread budget, capped by how many ground
/// vectors of `gamma` bytes fit into `beta` bytes of shared memory.
pub fn compute_block_dims(l: usize, beta: usize, gamma: usize) -> Result<(usize, usize)> {
    if l == 0 || gamma == 0 {
        return Err(Error::InvalidArgument(format!(
            "block dimensioning needs l >= 1 and gamma >= 1 (l={l}, gamma={gamma})"
        )));
    }
    if gamma > beta {
        return Err(Error::Configuration(format!(
            "a ground vector of {gamma} bytes does not fit into {beta} bytes of shared memory"
        )));
    }
    let b_y = MAX_THREADS_PER_BLOCK.min(l);
    let b_x = (MAX_THREADS_PER_BLOCK / b_y).min(beta / gamma);
    Ok((b_x, b_y))
}

/// Grid dimensions `(ceil(n / b_x), ceil(l / b_y))`.
pub fn compute_grid_dims(n: usize, l: usize, block: (usize, usize)) -> Result<(usize, usize)> {
    let (b_x, b_y) = block;
    if b_x == 0 || b_y == 0 {
        return Err(Error::Configuration(format!(
            "block dimensions must be positive, got ({b_x}, {b_y})"
        )));
    }
    Ok((n.div_ceil(b_x), l.div_ceil(b_y)))
}

/// A complete launch configuration plus the memory parameters it was
/// derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelConfig {
    pub grid: Dim3,
    pub block: Dim3,
    /// Shared memory bytes per block.
    pub beta: usize,
    /// Bytes per ground vector.
    pub gamma: usize,
    /// Bytes per stored scalar.
    pub scalar_bytes: usize,
    pub max_threads: usize,
    pub warp_size: usize,
    pub segment_bytes: usize,
}

impl KernelConfig {
    /// Derives the configuration for `n` ground vectors of `dims` features
    /// and `l` sets with the default 48 KiB shared memory budget.
    pub fn for_problem(n: usize, l: usize, dims: usize, precision: Precision) -> Result<Self> {
        Self::for_problem_with_beta(n, l, dims, precision, DEFAULT_SHARED_BYTES)
    }

    pub fn for_problem_with_beta(
        n: usize,
        l: usize,
        dims: usize,
        precision: Precision,
        beta: usize,
    ) -> Result<Self> {
        let scalar_bytes = precision.storage_bytes();
        let gamma = dims * scalar_bytes;
        let block = compute_block_dims(l, beta, gamma)?;
        let grid = compute_grid_dims(n, l, block)?;
        Ok(Self {
            grid: Dim3::new(grid.0, grid.1),
            block: Dim3::new(block.0, block.1),
            beta,
            gamma,
            scalar_bytes,
            max_threads: MAX_THREADS_PER_BLOCK,
            warp_size: DEFAULT_WARP_SIZE,
            segment_bytes: DEFAULT_SEGMENT_BYTES,
        })
    }

    /// Feature count implied by `gamma / scalar_bytes`.
    pub fn dims(&self) -> usize {
        self.gamma / self.scalar_bytes
    }

    pub fn threads_per_block(&self) -> usize {
        self.block.volume()
    }

    pub fn block_count(&self) -> usize {
        self.grid.volume()
    }

    pub fn warps_per_block(&self) -> usize {
        self.threads_per_block().div_ceil(self.warp_size)
    }

    /// Checks the launch invariants against an `l × n` work matrix.
    pub fn validate(&self, n: usize, l: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::Configuration(msg));
        if self.block.z != 1 || self.grid.z != 1 {
            return fail("z dimensions must be 1".into());
        }
        if self.block.x == 0 || self.block.y == 0 || self.grid.x == 0 || self.grid.y == 0 {
            return fail(format!(
                "empty launch: grid {:?}, block {:?}",
                self.grid, self.block
            ));
        }
        if self.warp_size == 0 || self.segment_bytes == 0 || self.scalar_bytes == 0 {
            return fail("warp size, segment size and scalar width must be positive".into());
        }
        if self.threads_per_block() > self.max_threads {
            return fail(format!(
                "{} threads per block exceed the limit of {}",
                self.threads_per_block(),
                self.max_threads
            ));
        }
        if self.block.x * self.gamma > self.beta {
            return fail(format!(
                "{} cached vectors of {} bytes exceed {} bytes of shared memory",
                self.block.x, self.gamma, self.beta
            ));
        }
        if self.grid.x * self.block.x < n || self.grid.y * self.block.y < l {
            return fail(format!(
                "grid {}x{} of blocks {}x{} does not cover a {}x{} work matrix",
                self.grid.x, self.grid.y, self.block.x, self.block.y, l, n
            ));
        }
        Ok(())
    }
}

/// Position of one simulated thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreadCoord {
    /// `(b_x*, b_y*)`
    pub block: (usize, usize),
    /// `(t_x*, t_y*)`
    pub thread: (usize, usize),
}

impl ThreadCoord {
    /// Work-matrix cell `(i, j)` = (ground column, set row) of this thread.
    pub fn cell(&self, block_dim: Dim3) -> (usize, usize) {
        (
            block_dim.x * self.block.0 + self.thread.0,
            block_dim.y * self.block.1 + self.thread.1,
        )
    }
}
