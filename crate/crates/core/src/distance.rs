//! Scalar arithmetic types and the dissimilarity functions used by every evaluator.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Sub};

use crate::error::{Error, Result};

/// Floating point type used for arithmetic inside an evaluation backend.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + AddAssign
    + 'static
{
    const ZERO: Self;
    const INFINITY: Self;
    /// Width of one stored value in bytes.
    const BYTES: usize;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    /// Picks the buffer holding values of this width.
    fn pick<'a>(wide: &'a [f64], narrow: &'a [f32]) -> &'a [Self];

    #[inline]
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f32 {
    const ZERO: Self = 0.0;
    const INFINITY: Self = f32::INFINITY;
    const BYTES: usize = 4;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    fn pick<'a>(_wide: &'a [f64], narrow: &'a [f32]) -> &'a [Self] {
        narrow
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const INFINITY: Self = f64::INFINITY;
    const BYTES: usize = 8;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    fn pick<'a>(wide: &'a [f64], _narrow: &'a [f32]) -> &'a [Self] {
        wide
    }
}

/// A dissimilarity `d(x, y) >= 0` between two equally sized vectors.
///
/// Implementations may assume equal lengths; callers check dimensions once
/// up front instead of on every pair.
pub trait Dissimilarity: Send + Sync {
    fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T;
}

/// `d(x, y) = ||x - y||_2^2`, the only built-in dissimilarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredEuclidean;

const LANES: usize = 8;

impl Dissimilarity for SquaredEuclidean {
    #[inline]
    fn eval<T: Scalar>(&self, x: &[T], y: &[T]) -> T {
        debug_assert_eq!(x.len(), y.len());
        // Eight independent accumulators so the loop vectorizes; the lane
        // order is fixed, which keeps results reproducible.
        let mut acc = [T::ZERO; LANES];
        let xs = x.chunks_exact(LANES);
        let ys = y.chunks_exact(LANES);
        let (xr, yr) = (xs.remainder(), ys.remainder());
        for (a, b) in xs.zip(ys) {
            for l in 0..LANES {
                let t = a[l] - b[l];
                acc[l] += t * t;
            }
        }
        let mut tail = T::ZERO;
        for (&a, &b) in xr.iter().zip(yr) {
            let t = a - b;
            tail += t * t;
        }
        let lo = (acc[0] + acc[4]) + (acc[1] + acc[5]);
        let hi = (acc[2] + acc[6]) + (acc[3] + acc[7]);
        (lo + hi) + tail
    }
}

/// Squared Euclidean distance with a dimension check.
pub fn squared_euclidean(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(SquaredEuclidean.eval(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plain(x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    #[test]
    fn hand_values() {
        assert_eq!(squared_euclidean(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(squared_euclidean(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(squared_euclidean(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 25.0);
    }

    #[test]
    fn mismatch_is_rejected() {
        assert_eq!(
            squared_euclidean(&[1.0, 2.0], &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn f32_path_matches_small_integers() {
        let x: Vec<f32> = (0..19).map(|i| i as f32).collect();
        let y = vec![0.0f32; 19];
        // sum of squares 0..18
        assert_eq!(SquaredEuclidean.eval(&x, &y), 2109.0);
    }

    proptest! {
        #[test]
        fn symmetric_nonnegative_and_matches_plain_sum(
            pair in (1usize..40).prop_flat_map(|d| (
                proptest::collection::vec(-1e3f64..1e3, d),
                proptest::collection::vec(-1e3f64..1e3, d),
            ))
        ) {
            let (x, y) = pair;
            let a = squared_euclidean(&x, &y).unwrap();
            let b = squared_euclidean(&y, &x).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a, b);
            let p = plain(&x, &y);
            prop_assert!((a - p).abs() <= 1e-12 * p.max(1.0));
            prop_assert_eq!(squared_euclidean(&x, &x).unwrap(), 0.0);
        }
    }
}
