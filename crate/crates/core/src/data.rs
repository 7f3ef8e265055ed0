//! Ground set, evaluation multisets, precision modes and optimizer summaries.

use std::fmt;
use std::str::FromStr;

use half::f16;

use crate::distance::Scalar;
use crate::error::{Error, Result};

/// Numeric precision of stored values.
///
/// `Fp16Storage` rounds every stored value to the nearest half precision
/// number and computes in `f32`; there is no half precision arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    Fp16Storage,
    #[default]
    Fp32,
    Fp64,
}

impl Precision {
    /// Rounds `x` to the nearest value representable in this storage format.
    pub fn store(self, x: f64) -> f64 {
        match self {
            Precision::Fp16Storage => f16::from_f64(x).to_f64(),
            Precision::Fp32 => x as f32 as f64,
            Precision::Fp64 => x,
        }
    }

    /// Bytes per stored scalar.
    pub fn storage_bytes(self) -> usize {
        match self {
            Precision::Fp16Storage => 2,
            Precision::Fp32 => 4,
            Precision::Fp64 => 8,
        }
    }

    /// True when backends compute in `f64`.
    pub fn is_double(self) -> bool {
        matches!(self, Precision::Fp64)
    }

    pub fn name(self) -> &'static str {
        match self {
            Precision::Fp16Storage => "fp16",
            Precision::Fp32 => "fp32",
            Precision::Fp64 => "fp64",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fp16" | "fp16-storage" | "half" => Ok(Precision::Fp16Storage),
            "fp32" | "single" => Ok(Precision::Fp32),
            "fp64" | "double" => Ok(Precision::Fp64),
            other => Err(Error::InvalidArgument(format!(
                "unknown precision '{other}'"
            ))),
        }
    }
}

/// The dataset being summarized: `n` observations of `dims` features.
///
/// Values are rounded to the requested precision on construction and kept
/// twice, widened to `f64` and narrowed to `f32`, so every backend can read
/// its arithmetic type without converting in the hot loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundMatrix {
    n: usize,
    dims: usize,
    precision: Precision,
    wide: Vec<f64>,
    narrow: Vec<f32>,
}

impl GroundMatrix {
    /// Builds a matrix from row-major `values`.
    pub fn new(values: Vec<f64>, n: usize, dims: usize, precision: Precision) -> Result<Self> {
        if n == 0 || dims == 0 {
            return Err(Error::InvalidArgument(format!(
                "ground matrix needs n >= 1 and dims >= 1, got {n}x{dims}"
            )));
        }
        if values.len() != n * dims {
            return Err(Error::DimensionMismatch {
                expected: n * dims,
                got: values.len(),
            });
        }
        let mut wide = values;
        for (pos, v) in wide.iter_mut().enumerate() {
            let stored = precision.store(*v);
            if !v.is_finite() || !stored.is_finite() {
                return Err(Error::NonFinite {
                    row: pos / dims,
                    col: pos % dims,
                });
            }
            *v = stored;
        }
        let narrow = wide.iter().map(|&v| v as f32).collect();
        Ok(Self {
            n,
            dims,
            precision,
            wide,
            narrow,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], precision: Precision) -> Result<Self> {
        let dims = rows.first().map(Vec::len).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * dims);
        for row in rows {
            if row.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, rows.len(), dims, precision)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Row `i` widened to `f64`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.wide[i * self.dims..(i + 1) * self.dims]
    }

    /// Row-major values in the arithmetic type `T`.
    pub fn values<T: Scalar>(&self) -> &[T] {
        T::pick(&self.wide, &self.narrow)
    }

    pub fn row_as<T: Scalar>(&self, i: usize) -> &[T] {
        &self.values::<T>()[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.wide.chunks_exact(self.dims)
    }
}

/// Choice of the auxiliary representative `e0` that anchors the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AuxiliaryKind {
    /// The all-zero vector.
    #[default]
    Zero,
    /// Column-wise mean of the ground set.
    Mean,
}

impl FromStr for AuxiliaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(AuxiliaryKind::Zero),
            "mean" => Ok(AuxiliaryKind::Mean),
            other => Err(Error::InvalidArgument(format!("unknown e0 kind '{other}'"))),
        }
    }
}

/// The all-zero auxiliary vector of length `dims`.
pub fn zero_auxiliary(dims: usize) -> Vec<f64> {
    vec![0.0; dims]
}

/// Column-wise mean of `ground`, accumulated in `f64`.
pub fn mean_auxiliary(ground: &GroundMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; ground.dims()];
    for row in ground.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = ground.n() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Builds `e0` for `ground` and rounds it to the ground's storage precision.
pub fn make_auxiliary_vector(ground: &GroundMatrix, kind: AuxiliaryKind) -> Vec<f64> {
    let raw = match kind {
        AuxiliaryKind::Zero => zero_auxiliary(ground.dims()),
        AuxiliaryKind::Mean => mean_auxiliary(ground),
    };
    raw.into_iter().map(|v| ground.precision().store(v)).collect()
}

/// The candidate sets `S_1..S_l` evaluated together, stored as index lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalMultiset {
    indices: Vec<usize>,
    offsets: Vec<usize>,
}

impl EvalMultiset {
    pub fn new(sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidArgument(
                "an evaluation multiset needs at least one set".into(),
            ));
        }
        let mut builder = MultisetBuilder::with_capacity(sets.len(), 0);
        for s in &sets {
            builder.push(s.iter().copied());
        }
        builder.finish()
    }

    /// Number of sets `l`.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn set(&self, j: usize) -> &[usize] {
        &self.indices[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn set_len(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn max_len(&self) -> usize {
        self.offsets.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    pub fn total_len(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.len()).map(move |j| self.set(j))
    }

    pub fn to_sets(&self) -> Vec<Vec<usize>> {
        self.iter().map(<[usize]>::to_vec).collect()
    }

    /// Checks every index against a ground set of size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        for (j, set) in self.iter().enumerate() {
            if let Some(&index) = set.iter().find(|&&i| i >= n) {
                return Err(Error::IndexOutOfRange {
                    index,
                    n,
                    set: Some(j),
                });
            }
        }
        Ok(())
    }
}

/// Incremental construction of an [`EvalMultiset`] without nested vectors.
#[derive(Debug, Default)]
pub struct MultisetBuilder {
    indices: Vec<usize>,
    offsets: Vec<usize>,
}

impl MultisetBuilder {
    pub fn with_capacity(sets: usize, indices: usize) -> Self {
        let mut offsets = Vec::with_capacity(sets + 1);
        offsets.push(0);
        Self {
            indices: Vec::with_capacity(indices),
            offsets,
        }
    }

    pub fn push(&mut self, set: impl IntoIterator<Item = usize>) {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        self.indices.extend(set);
        self.offsets.push(self.indices.len());
    }

    pub fn finish(mut self) -> Result<EvalMultiset> {
        if self.offsets.is_empty() {
            self.offsets.push(0);
        }
        if self.offsets.len() < 2 {
            return Err(Error::InvalidArgument(
                "an evaluation multiset needs at least one set".into(),
            ));
        }
        Ok(EvalMultiset {
            indices: self.indices,
            offsets: self.offsets,
        })
    }
}

/// Result of a cardinality-constrained maximization.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    /// Selected ground indices in selection order.
    pub selected: Vec<usize>,
    /// Achieved `f(selected)`.
    pub value: f64,
    /// Marginal gain of each selection step.
    pub gains: Vec<f64>,
    /// Number of set evaluations performed.
    pub evaluations: u64,
    pub runtime_seconds: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{Dissimilarity, SquaredEuclidean};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fp16_storage_rounds_to_nearest_half() {
        let p = Precision::Fp16Storage;
        assert_eq!(p.store(1.0), 1.0);
        assert_eq!(p.store(0.1), 0.0999755859375);
        assert_eq!(p.store(65504.0), 65504.0);
        assert_eq!(p.store(-2.5), -2.5);
        assert_eq!(p.store(1.0 + 1.0 / 4096.0), 1.0);
        assert_eq!(p.store(1.0 + 3.0 / 2048.0), 1.0 + 2.0 / 1024.0);
        assert_eq!(p.store(6.0e-8), 5.960464477539063e-8);
        assert!(p.store(1.0e6).is_infinite());
    }

    #[test]
    fn fp16_overflow_is_rejected_as_non_finite() {
        let err = GroundMatrix::new(vec![1.0, 70000.0], 1, 2, Precision::Fp16Storage).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn rejects_nan_and_inf() {
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            let err = GroundMatrix::new(vec![0.0, 1.0, bad, 2.0], 2, 2, Precision::Fp64).unwrap_err();
            assert_eq!(err, Error::NonFinite { row: 1, col: 0 });
        }
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(GroundMatrix::new(vec![], 0, 1, Precision::Fp64).is_err());
        assert!(GroundMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]], Precision::Fp64).is_err());
    }

    #[test]
    fn auxiliary_vectors() {
        assert_eq!(zero_auxiliary(3), vec![0.0, 0.0, 0.0]);
        let g = GroundMatrix::from_rows(&[vec![2.0], vec![4.0]], Precision::Fp64).unwrap();
        assert_eq!(make_auxiliary_vector(&g, AuxiliaryKind::Mean), vec![3.0]);
        let g = GroundMatrix::from_rows(&[vec![1.0, 1.0]], Precision::Fp64).unwrap();
        assert_eq!(make_auxiliary_vector(&g, AuxiliaryKind::Mean), vec![1.0, 1.0]);
        assert_eq!(make_auxiliary_vector(&g, AuxiliaryKind::Zero), vec![0.0, 0.0]);
    }

    #[test]
    fn multiset_accessors_and_validation() {
        let m = EvalMultiset::new(vec![vec![0, 1], vec![], vec![2]]).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.set(1), &[] as &[usize]);
        assert_eq!(m.lengths(), vec![2, 0, 1]);
        assert_eq!(m.max_len(), 2);
        assert!(m.validate(3).is_ok());
        assert_eq!(
            m.validate(2),
            Err(Error::IndexOutOfRange {
                index: 2,
                n: 2,
                set: Some(2)
            })
        );
        assert!(EvalMultiset::new(vec![]).is_err());
    }

    #[test]
    fn distance_is_symmetric_in_every_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for precision in [Precision::Fp16Storage, Precision::Fp32, Precision::Fp64] {
            for _ in 0..1000 {
                let dims = rng.gen_range(1..32);
                let rows: Vec<Vec<f64>> = (0..2)
                    .map(|_| (0..dims).map(|_| rng.gen_range(-10.0..10.0)).collect())
                    .collect();
                let g = GroundMatrix::from_rows(&rows, precision).unwrap();
                if precision.is_double() {
                    let (x, y) = (g.row_as::<f64>(0), g.row_as::<f64>(1));
                    let (a, b) = (SquaredEuclidean.eval(x, y), SquaredEuclidean.eval(y, x));
                    assert!(a >= 0.0 && a == b);
                } else {
                    let (x, y) = (g.row_as::<f32>(0), g.row_as::<f32>(1));
                    let (a, b) = (SquaredEuclidean.eval(x, y), SquaredEuclidean.eval(y, x));
                    assert!(a >= 0.0 && a == b);
                }
            }
        }
    }
}
