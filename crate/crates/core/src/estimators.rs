//! Estimators of the number of true nulls `n0`.
//!
//! Both estimators count the p-values above `lambda`:
//!
//! ```text
//! storey: (n - R(lambda) + 1)     / (1 - lambda)
//! block:  (n - R(lambda) + s_max) / (1 - lambda)
//! ```
//!
//! Estimates are not clamped to `[1, n]`. The block estimator is the one
//! whose reciprocal expectation under the Dirac-uniform configuration is
//! bounded for `lambda >= lambda_threshold(b)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_lambda, Error, Result};
use crate::types::PValueMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    /// `(n - R(lambda) + 1) / (1 - lambda)`, ignores block structure.
    Storey,
    /// `(n - R(lambda) + s_max) / (1 - lambda)`.
    Block,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Storey => "storey",
            EstimatorKind::Block => "block",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "storey" => Ok(EstimatorKind::Storey),
            "block" => Ok(EstimatorKind::Block),
            other => Err(Error::InvalidArgument(format!("unknown estimator {other:?}"))),
        }
    }
}

/// Anything that maps a p-value matrix to an estimate of `n0`.
///
/// Implementations used by adaptive procedures with a guarantee should be
/// non-decreasing in every p-value.
pub trait NullEstimator {
    fn estimate(&self, pvals: &PValueMatrix) -> f64;
}

impl<F> NullEstimator for F
where
    F: Fn(&PValueMatrix) -> f64,
{
    fn estimate(&self, pvals: &PValueMatrix) -> f64 {
        self(pvals)
    }
}

/// A validated `(kind, lambda)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    kind: EstimatorKind,
    lambda: f64,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { kind, lambda })
    }

    pub fn storey(lambda: f64) -> Result<Self> {
        Self::new(EstimatorKind::Storey, lambda)
    }

    pub fn block(lambda: f64) -> Result<Self> {
        Self::new(EstimatorKind::Block, lambda)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl NullEstimator for EstimatorSpec {
    fn estimate(&self, pvals: &PValueMatrix) -> f64 {
        let offset = match self.kind {
            EstimatorKind::Storey => 1,
            EstimatorKind::Block => pvals.layout().s_max(),
        };
        estimate_with_offset(pvals, self.lambda, offset)
    }
}

/// Constant estimate, independent of the data. With the value `n` the
/// adaptive procedures reduce to their non-adaptive counterparts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedEstimator(pub f64);

impl NullEstimator for FixedEstimator {
    fn estimate(&self, _: &PValueMatrix) -> f64 {
        self.0
    }
}

/// `R(lambda)`: how many p-values are at most `lambda`.
pub fn r_lambda(pvals: &PValueMatrix, lambda: f64) -> Result<usize> {
    check_lambda(lambda)?;
    Ok(count_at_most(pvals, lambda))
}

fn count_at_most(pvals: &PValueMatrix, lambda: f64) -> usize {
    pvals.values().iter().filter(|&&p| p <= lambda).count()
}

fn estimate_with_offset(pvals: &PValueMatrix, lambda: f64, offset: usize) -> f64 {
    let above = pvals.layout().n() - count_at_most(pvals, lambda);
    (above + offset) as f64 / (1.0 - lambda)
}

/// Block-aware estimate `(n - R(lambda) + s_max) / (1 - lambda)`.
pub fn n0_block(pvals: &PValueMatrix, lambda: f64) -> Result<f64> {
    Ok(EstimatorSpec::block(lambda)?.estimate(pvals))
}

/// Storey's estimate `(n - R(lambda) + 1) / (1 - lambda)`.
pub fn n0_storey(pvals: &PValueMatrix, lambda: f64) -> Result<f64> {
    Ok(EstimatorSpec::storey(lambda)?.estimate(pvals))
}

/// Smallest `lambda` for which the block estimator is certified with `b`
/// blocks: `(2b + 3)^(-2 / (b + 2))`.
pub fn lambda_threshold(b: usize) -> Result<f64> {
    if b == 0 {
        return Err(Error::InvalidArgument("block count must be at least 1".into()));
    }
    let b = b as f64;
    Ok((2.0 * b + 3.0).powf(-2.0 / (b + 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BlockLayout;
    use proptest::prelude::*;

    fn example() -> PValueMatrix {
        PValueMatrix::from_rows(&[vec![0.1, 0.9], vec![0.6, 0.7]]).unwrap()
    }

    fn filled(v: f64) -> PValueMatrix {
        PValueMatrix::new(BlockLayout::uniform(2, 2).unwrap(), vec![v; 4]).unwrap()
    }

    #[test]
    fn r_lambda_counts() {
        assert_eq!(r_lambda(&filled(1.0), 0.5).unwrap(), 0);
        assert_eq!(r_lambda(&filled(0.0), 0.5).unwrap(), 4);
        assert_eq!(r_lambda(&example(), 0.5).unwrap(), 1);
        // boundary counts as "not exceeding"
        assert_eq!(r_lambda(&filled(0.5), 0.5).unwrap(), 4);
        assert!(r_lambda(&example(), 0.0).is_err());
        assert!(r_lambda(&example(), 1.0).is_err());
    }

    #[test]
    fn block_estimator_examples() {
        assert_eq!(n0_block(&example(), 0.5).unwrap(), 10.0);
        assert_eq!(n0_block(&filled(0.0), 0.5).unwrap(), 4.0);
        assert_eq!(n0_block(&filled(1.0), 0.5).unwrap(), 12.0);
    }

    #[test]
    fn storey_estimator_examples() {
        assert_eq!(n0_storey(&example(), 0.5).unwrap(), 8.0);
        assert_eq!(n0_storey(&filled(0.0), 0.5).unwrap(), 2.0);
    }

    #[test]
    fn threshold_values() {
        // reference values from 30-digit evaluation of the closed form
        let b1 = lambda_threshold(1).unwrap();
        let b2 = lambda_threshold(2).unwrap();
        let b120 = lambda_threshold(120).unwrap();
        assert!((b1 - 0.341_995_189_335_339_4).abs() < 1e-12);
        assert!((b2 - 0.377_964_473_009_227_2).abs() < 1e-12);
        assert!((b120 - 0.913_885_318_413_344_8).abs() < 1e-12);
        assert!(lambda_threshold(0).is_err());
    }

    #[test]
    fn threshold_increasing_over_grid() {
        let v: Vec<f64> = (1..=200).map(|b| lambda_threshold(b).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn spec_rejects_bad_lambda() {
        assert!(EstimatorSpec::block(0.0).is_err());
        assert!(EstimatorSpec::storey(1.0).is_err());
        assert!(EstimatorSpec::storey(f64::NAN).is_err());
        assert_eq!("Block".parse::<EstimatorKind>().unwrap(), EstimatorKind::Block);
        assert!("smooth".parse::<EstimatorKind>().is_err());
    }

    fn matrix() -> impl Strategy<Value = PValueMatrix> {
        prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..=4), 1..=6)
            .prop_map(|rows| PValueMatrix::from_rows(&rows).unwrap())
    }

    proptest! {
        #[test]
        fn block_minus_storey_is_constant(p in matrix(), lambda in 0.01f64..0.99) {
            let diff = n0_block(&p, lambda).unwrap() - n0_storey(&p, lambda).unwrap();
            let expect = (p.layout().s_max() - 1) as f64 / (1.0 - lambda);
            prop_assert!((diff - expect).abs() <= 1e-9 * expect.max(1.0));
        }

        #[test]
        fn block_estimator_bounded_below(p in matrix(), lambda in 0.01f64..0.99) {
            let est = n0_block(&p, lambda).unwrap();
            prop_assert!(est >= p.layout().s_max() as f64 / (1.0 - lambda));
            prop_assert!(est > 0.0);
        }

        #[test]
        fn block_estimator_nondecreasing(
            p in matrix(),
            lambda in 0.01f64..0.99,
            pick in any::<prop::sample::Index>(),
            raise in 0.0f64..=1.0,
        ) {
            let k = pick.index(p.values().len());
            let mut values = p.values().to_vec();
            values[k] = values[k].max(raise);
            let q = PValueMatrix::new(p.layout().clone(), values).unwrap();
            prop_assert!(n0_block(&q, lambda).unwrap() >= n0_block(&p, lambda).unwrap());
        }

        #[test]
        fn singleton_layouts_coincide(v in prop::collection::vec(0.0f64..=1.0, 1..20), lambda in 0.01f64..0.99) {
            let p = PValueMatrix::new(BlockLayout::singletons(v.len()).unwrap(), v).unwrap();
            prop_assert_eq!(n0_block(&p, lambda).unwrap(), n0_storey(&p, lambda).unwrap());
        }
    }
}
