//! Block-aware procedures.
//!
//! The two-stage BH first screens blocks with BH applied to Bonferroni
//! adjusted block minima `s_bar * min_j P_ij` at constants `k * alpha / b`,
//! then tests individual hypotheses inside the significant blocks at
//! `B * alpha / n`. The adaptive variant runs the same two stages on
//! `pi0_hat * P_ij`; the adaptive Bonferroni is single-step at
//! `alpha / n0_hat`. The BKY two-stage procedure is included as a
//! non-block comparator.

use crate::baseline::{bh, linear_constants, single_step, stepup_cutoff, stepup_unchecked};
use crate::error::{check_alpha, Error, Result};
use crate::estimators::NullEstimator;
use crate::types::{check_probabilities, PValueMatrix, TestOutcome};

/// Block p-values `s_bar * min_j P_ij`, one per block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPValues(Vec<f64>);

impl BlockPValues {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn block_pvalues(pvals: &PValueMatrix) -> BlockPValues {
    let s_bar = pvals.layout().s_bar();
    BlockPValues(
        pvals
            .rows()
            .map(|row| s_bar * row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect(),
    )
}

/// Shared two-stage body on `scale * P`. With `scale == 1.0` this is the
/// plain two-stage BH; otherwise `scale` is `pi0_hat`.
fn scaled_two_stage(pvals: &PValueMatrix, alpha: f64, scale: f64) -> TestOutcome {
    let layout = pvals.layout();
    let (b, n) = (layout.b(), layout.n());
    let block_q: Vec<f64> = block_pvalues(pvals)
        .into_inner()
        .into_iter()
        .map(|p| scale * p)
        .collect();

    let Some((sig, cutoff)) = stepup_cutoff(&block_q, &linear_constants(b, alpha)) else {
        return TestOutcome::empty();
    };
    let cell_cutoff = sig as f64 * alpha / n as f64;

    let mut rejected = Vec::new();
    for (i, &q) in block_q.iter().enumerate() {
        if q > cutoff {
            continue;
        }
        for (j, &p) in pvals.row(i).iter().enumerate() {
            if scale * p <= cell_cutoff {
                rejected.push((i, j));
            }
        }
    }
    TestOutcome {
        rejections: rejected.len(),
        rejected,
        significant_blocks: sig,
        estimator_value: None,
    }
}

/// Two-stage BH under block dependence.
pub fn two_stage_bh(pvals: &PValueMatrix, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    Ok(scaled_two_stage(pvals, alpha, 1.0))
}

fn checked_estimate<E: NullEstimator + ?Sized>(pvals: &PValueMatrix, est: &E) -> Result<f64> {
    let n0 = est.estimate(pvals);
    if n0.is_finite() && n0 > 0.0 {
        Ok(n0)
    } else {
        Err(Error::InvalidEstimate(n0))
    }
}

/// Adaptive BH under block dependence.
///
/// `pi0_hat = n0_hat / n` is computed once from the full matrix and
/// scales both the block p-values and the individual p-values.
pub fn adaptive_bh<E: NullEstimator + ?Sized>(
    pvals: &PValueMatrix,
    alpha: f64,
    est: &E,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let n0 = checked_estimate(pvals, est)?;
    let pi0 = n0 / pvals.layout().n() as f64;
    let mut outcome = scaled_two_stage(pvals, alpha, pi0);
    outcome.estimator_value = Some(n0);
    Ok(outcome)
}

/// Adaptive Bonferroni: reject `P_ij <= alpha / n0_hat`.
pub fn adaptive_bonferroni<E: NullEstimator + ?Sized>(
    pvals: &PValueMatrix,
    alpha: f64,
    est: &E,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let n0 = checked_estimate(pvals, est)?;
    let flat = single_step(pvals.values(), alpha / n0);
    let mut outcome = TestOutcome::from_flat(pvals.layout(), &flat)?;
    outcome.estimator_value = Some(n0);
    Ok(outcome)
}

/// Two-stage adaptive BH of Benjamini, Krieger and Yekutieli on a flat
/// list of p-values.
///
/// Stage one runs BH at `alpha / (1 + alpha)`; with `r1` rejections the
/// second stage is a step-up at constants `i * alpha' / (n - r1)`.
pub fn bky_adaptive_bh(pvals: &[f64], alpha: f64) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
    if pvals.is_empty() {
        return Err(Error::Empty);
    }
    check_probabilities(pvals)?;
    let n = pvals.len();
    let level = alpha / (1.0 + alpha);
    let first = bh(pvals, level)?;
    let r1 = first.len();
    if r1 == 0 || r1 == n {
        return Ok(first);
    }
    let n0 = (n - r1) as f64;
    let constants: Vec<f64> = (1..=n)
        .map(|i| (i as f64 * level / n0).min(1.0))
        .collect();
    Ok(stepup_unchecked(pvals, &constants))
}
