//! The k-medoids loss and the exemplar-based clustering function built on it.
//!
//! `f(S) = L({e0}) - L(S ∪ {e0})` where `L` is the mean distance of every
//! ground vector to its closest representative. The evaluators here follow
//! the straightforward row-by-row procedure and accumulate in `f64`
//! regardless of the storage precision; they serve as the reference the
//! batched backends are checked against.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::data::{make_auxiliary_vector, AuxiliaryKind, EvalMultiset, GroundMatrix};
use crate::distance::{Dissimilarity, SquaredEuclidean};
use crate::error::{Error, Result};

/// `|V|^-1 Σ_v min_{s ∈ reps} d(v, s)` over explicit representative vectors.
pub fn k_medoids_loss<D: Dissimilarity>(
    ground: &GroundMatrix,
    reps: &[Vec<f64>],
    distance: &D,
) -> Result<f64> {
    if reps.is_empty() {
        return Err(Error::InvalidArgument(
            "k-medoids loss is undefined for an empty representative set".into(),
        ));
    }
    if let Some(bad) = reps.iter().find(|r| r.len() != ground.dims()) {
        return Err(Error::DimensionMismatch {
            expected: ground.dims(),
            got: bad.len(),
        });
    }
    let mut sigma = 0.0;
    for v in ground.rows() {
        let mut t = f64::INFINITY;
        for s in reps {
            t = t.min(distance.eval::<f64>(s, v));
        }
        sigma += t;
    }
    Ok(sigma / ground.n() as f64)
}

/// The exemplar-based clustering set function over a fixed ground set.
#[derive(Debug)]
pub struct EbcFunction<D = SquaredEuclidean> {
    ground: Arc<GroundMatrix>,
    e0: Vec<f64>,
    e0_narrow: Vec<f32>,
    baseline: f64,
    distance: D,
    baseline_computations: AtomicUsize,
}

impl EbcFunction<SquaredEuclidean> {
    pub fn new(ground: impl Into<Arc<GroundMatrix>>, e0: AuxiliaryKind) -> Self {
        let ground = ground.into();
        let e0 = make_auxiliary_vector(&ground, e0);
        Self::with_parts(ground, e0, SquaredEuclidean).expect("e0 built from ground")
    }
}

impl<D: Dissimilarity> EbcFunction<D> {
    /// Builds the function with an explicit `e0` and dissimilarity.
    /// `L({e0})` is computed here, once.
    pub fn with_parts(ground: Arc<GroundMatrix>, e0: Vec<f64>, distance: D) -> Result<Self> {
        if e0.len() != ground.dims() {
            return Err(Error::DimensionMismatch {
                expected: ground.dims(),
                got: e0.len(),
            });
        }
        if e0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("e0 must be finite".into()));
        }
        let e0: Vec<f64> = e0.into_iter().map(|v| ground.precision().store(v)).collect();
        let e0_narrow = e0.iter().map(|&v| v as f32).collect();
        let mut f = Self {
            ground,
            e0,
            e0_narrow,
            baseline: 0.0,
            distance,
            baseline_computations: AtomicUsize::new(0),
        };
        f.baseline = f.loss_with_e0(&[]);
        f.baseline_computations.fetch_add(1, Ordering::Relaxed);
        Ok(f)
    }

    pub fn ground(&self) -> &GroundMatrix {
        &self.ground
    }

    pub fn ground_arc(&self) -> &Arc<GroundMatrix> {
        &self.ground
    }

    pub fn n(&self) -> usize {
        self.ground.n()
    }

    pub fn e0(&self) -> &[f64] {
        &self.e0
    }

    /// `e0` in the arithmetic type `T`.
    pub fn e0_as<T: crate::distance::Scalar>(&self) -> &[T] {
        T::pick(&self.e0, &self.e0_narrow)
    }

    pub fn distance(&self) -> &D {
        &self.distance
    }

    /// Cached `L({e0})`.
    pub fn baseline_loss(&self) -> f64 {
        self.baseline
    }

    /// How many times `L({e0})` has been computed for this function.
    pub fn baseline_computations(&self) -> usize {
        self.baseline_computations.load(Ordering::Relaxed)
    }

    fn check_indices(&self, set: &[usize]) -> Result<()> {
        let n = self.n();
        match set.iter().find(|&&i| i >= n) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                n,
                set: None,
            }),
            None => Ok(()),
        }
    }

    /// `L(S ∪ {e0})` with `e0` as a virtual extra representative.
    /// Rows are reduced left to right by index.
    fn loss_with_e0(&self, set: &[usize]) -> f64 {
        let g = &*self.ground;
        let mut sigma = 0.0;
        for v in g.rows() {
            let mut t = f64::INFINITY;
            for &s in set {
                t = t.min(self.distance.eval::<f64>(g.row(s), v));
            }
            t = t.min(self.distance.eval::<f64>(&self.e0, v));
            sigma += t;
        }
        sigma / g.n() as f64
    }

    /// `L(S ∪ {e0})` for a set of ground indices.
    pub fn loss(&self, set: &[usize]) -> Result<f64> {
        self.check_indices(set)?;
        Ok(self.loss_with_e0(set))
    }

    /// `f(S) = L({e0}) - L(S ∪ {e0})`.
    pub fn value(&self, set: &[usize]) -> Result<f64> {
        Ok(self.baseline - self.loss(set)?)
    }

    /// `Δ(e | S) = f(S ∪ {e}) - f(S)`; exactly zero when `e ∈ S`.
    pub fn marginal_gain(&self, set: &[usize], e: usize) -> Result<f64> {
        self.check_indices(set)?;
        self.check_indices(&[e])?;
        if set.contains(&e) {
            return Ok(0.0);
        }
        let mut with = Vec::with_capacity(set.len() + 1);
        with.extend_from_slice(set);
        with.push(e);
        Ok(self.value(&with)? - self.value(set)?)
    }

    /// `[f(S_1), ..., f(S_l)]`, one set at a time.
    pub fn evaluate_multiset_naive(&self, multiset: &EvalMultiset) -> Result<Vec<f64>> {
        multiset.validate(self.n())?;
        Ok(multiset
            .iter()
            .map(|set| self.baseline - self.loss_with_e0(set))
            .collect())
    }
}

/// Free-function form of [`EbcFunction::value`].
pub fn ebc_value<D: Dissimilarity>(f: &EbcFunction<D>, set: &[usize]) -> Result<f64> {
    f.value(set)
}

/// Free-function form of [`EbcFunction::marginal_gain`].
pub fn marginal_gain<D: Dissimilarity>(f: &EbcFunction<D>, set: &[usize], e: usize) -> Result<f64> {
    f.marginal_gain(set, e)
}

/// Free-function form of [`EbcFunction::evaluate_multiset_naive`].
pub fn evaluate_multiset_naive<D: Dissimilarity>(
    f: &EbcFunction<D>,
    multiset: &EvalMultiset,
) -> Result<Vec<f64>> {
    f.evaluate_multiset_naive(multiset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Precision;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_pair() -> EbcFunction {
        let g = GroundMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], Precision::Fp64).unwrap();
        EbcFunction::new(g, AuxiliaryKind::Zero)
    }

    #[test]
    fn loss_fixtures() {
        let d = SquaredEuclidean;
        let g = GroundMatrix::from_rows(&[vec![0.0, 0.0], vec![2.0, 0.0]], Precision::Fp64).unwrap();
        assert_eq!(k_medoids_loss(&g, &[vec![0.0, 0.0], vec![2.0, 0.0]], &d).unwrap(), 0.0);
        assert_eq!(k_medoids_loss(&g, &[vec![0.0, 0.0]], &d).unwrap(), 2.0);
        let g = GroundMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], Precision::Fp64).unwrap();
        assert_eq!(k_medoids_loss(&g, &[vec![0.0, 0.0]], &d).unwrap(), 1.0);
    }

    #[test]
    fn loss_rejects_empty_and_mismatched_reps() {
        let g = GroundMatrix::from_rows(&[vec![1.0, 0.0]], Precision::Fp64).unwrap();
        assert!(matches!(
            k_medoids_loss(&g, &[], &SquaredEuclidean),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            k_medoids_loss(&g, &[vec![1.0]], &SquaredEuclidean),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn value_fixtures() {
        let f = unit_pair();
        assert_eq!(f.baseline_loss(), 1.0);
        assert_eq!(f.value(&[]).unwrap(), 0.0);
        assert_eq!(f.value(&[0]).unwrap(), 0.5);
        assert_eq!(f.value(&[0, 1]).unwrap(), 1.0);
        assert_eq!(
            f.value(&[2]),
            Err(Error::IndexOutOfRange {
                index: 2,
                n: 2,
                set: None
            })
        );
    }

    #[test]
    fn marginal_gain_fixtures() {
        let f = unit_pair();
        assert_eq!(f.marginal_gain(&[0], 0).unwrap(), 0.0);
        assert_eq!(f.marginal_gain(&[], 0).unwrap(), 0.5);
        assert_eq!(f.marginal_gain(&[0], 1).unwrap(), 0.5);
        assert!(f.marginal_gain(&[0], 5).is_err());
    }

    #[test]
    fn naive_multiset_fixtures() {
        let f = unit_pair();
        let m = EvalMultiset::new(vec![vec![]]).unwrap();
        assert_eq!(f.evaluate_multiset_naive(&m).unwrap(), vec![0.0]);
        let m = EvalMultiset::new(vec![vec![0], vec![1], vec![0, 1]]).unwrap();
        assert_eq!(f.evaluate_multiset_naive(&m).unwrap(), vec![0.5, 0.5, 1.0]);
        let m = EvalMultiset::new(vec![vec![0, 1]]).unwrap();
        assert_eq!(f.evaluate_multiset_naive(&m).unwrap(), vec![f.baseline_loss()]);
        let m = EvalMultiset::new(vec![vec![0], vec![7]]).unwrap();
        assert_eq!(
            f.evaluate_multiset_naive(&m),
            Err(Error::IndexOutOfRange {
                index: 7,
                n: 2,
                set: Some(1)
            })
        );
    }

    #[test]
    fn baseline_is_cached_and_fresh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let g = GroundMatrix::from_rows(&rows, Precision::Fp64).unwrap();
        let f = EbcFunction::new(g.clone(), AuxiliaryKind::Mean);
        let fresh = k_medoids_loss(&g, &[f.e0().to_vec()], &SquaredEuclidean).unwrap();
        assert!((f.baseline_loss() - fresh).abs() <= 1e-12 * fresh);
        for _ in 0..5 {
            let m = EvalMultiset::new(vec![vec![1, 2], vec![3]]).unwrap();
            f.evaluate_multiset_naive(&m).unwrap();
        }
        assert_eq!(f.baseline_computations(), 1);
    }

    fn random_function(rng: &mut ChaCha8Rng) -> EbcFunction {
        let n = rng.gen_range(2..=50);
        let dims = rng.gen_range(1..=10);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dims).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let g = GroundMatrix::from_rows(&rows, Precision::Fp64).unwrap();
        let kind = if rng.gen_bool(0.5) {
            AuxiliaryKind::Zero
        } else {
            AuxiliaryKind::Mean
        };
        EbcFunction::new(g, kind)
    }

    #[test]
    fn monotone_and_submodular_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let f = random_function(&mut rng);
            let n = f.n();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let e = order[0];
            let b_len = rng.gen_range(0..n);
            let a_len = rng.gen_range(0..=b_len);
            let b = &order[1..1 + b_len.min(n - 1)];
            let a = &b[..a_len.min(b.len())];
            let da = f.marginal_gain(a, e).unwrap();
            let db = f.marginal_gain(b, e).unwrap();
            assert!(da >= -1e-9 && db >= -1e-9);
            assert!(da >= db - 1e-9, "Δ(e|A)={da} < Δ(e|B)={db}");
            assert!(f.value(a).unwrap() <= f.value(b).unwrap() + 1e-9);
        }
    }

    #[test]
    fn bounded_by_full_set_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let f = random_function(&mut rng);
            let all: Vec<usize> = (0..f.n()).collect();
            let full = f.value(&all).unwrap();
            assert!(full <= f.baseline_loss() + 1e-12);
            let size = rng.gen_range(0..=f.n());
            let s: Vec<usize> = rand::seq::index::sample(&mut rng, f.n(), size).into_vec();
            assert!(f.value(&s).unwrap() <= full + 1e-9);
        }
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        for precision in [Precision::Fp16Storage, Precision::Fp32, Precision::Fp64] {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let rows: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..5).map(|_| rng.gen_range(0.0..1.0)).collect())
                .collect();
            let f = EbcFunction::new(GroundMatrix::from_rows(&rows, precision).unwrap(), AuxiliaryKind::Zero);
            let m = EvalMultiset::new(vec![vec![0, 4, 9], vec![], vec![29]]).unwrap();
            let first = f.evaluate_multiset_naive(&m).unwrap();
            for _ in 0..3 {
                let again = f.evaluate_multiset_naive(&m).unwrap();
                assert!(first.iter().zip(&again).all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }
}
