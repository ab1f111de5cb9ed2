//! Generic step-up and single-step machinery, with the non-adaptive
//! Benjamini-Hochberg and Bonferroni baselines.
//!
//! Flat procedures take a slice of p-values and return the rejected
//! indices in ascending order. All comparisons are non-strict (`<=`), so
//! tied p-values are rejected or retained together.

use crate::error::{check_alpha, Error, Result};
use crate::types::{check_probabilities, TestOutcome, TruthAssignment};

/// Critical constants `i * alpha / m` for `i = 1..=m`.
pub(crate) fn linear_constants(m: usize, alpha: f64) -> Vec<f64> {
    (1..=m).map(|i| i as f64 * alpha / m as f64).collect()
}

/// Step-up test with critical constants `alpha_1 <= ... <= alpha_n`.
///
/// Rejects every `i` with `P_i <= P_(R)` where `R` is the largest rank with
/// `P_(R) <= alpha_R`. Nothing is rejected when no such rank exists.
pub fn stepup(pvals: &[f64], constants: &[f64]) -> Result<Vec<usize>> {
    if pvals.is_empty() {
        return Err(Error::Empty);
    }
    if pvals.len() != constants.len() {
        return Err(Error::LengthMismatch {
            expected: pvals.len(),
            found: constants.len(),
        });
    }
    check_probabilities(pvals)?;
    let mut prev = 0.0;
    for (index, &c) in constants.iter().enumerate() {
        if !(0.0..=1.0).contains(&c) || c < prev {
            return Err(Error::InvalidConstant { index, value: c });
        }
        prev = c;
    }
    Ok(stepup_unchecked(pvals, constants))
}

/// Step-up core without validation. `values` may exceed one (adaptive
/// p-values), but must not contain NaN.
pub(crate) fn stepup_unchecked(values: &[f64], constants: &[f64]) -> Vec<usize> {
    match stepup_threshold(values, constants) {
        Some(t) => (0..values.len()).filter(|&i| values[i] <= t).collect(),
        None => Vec::new(),
    }
}

/// Returns `(R, P_(R))` for a step-up test, or `None` when nothing passes.
pub(crate) fn stepup_cutoff(values: &[f64], constants: &[f64]) -> Option<(usize, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    (0..sorted.len())
        .rev()
        .find(|&k| sorted[k] <= constants[k])
        .map(|k| (k + 1, sorted[k]))
}

fn stepup_threshold(values: &[f64], constants: &[f64]) -> Option<f64> {
    stepup_cutoff(values, constants).map(|(_, t)| t)
}

/// Benjamini-Hochberg: step-up with `alpha_i = i * alpha / n`.
pub fn bh(pvals: &[f64], alpha: f64) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
    stepup(pvals, &linear_constants(pvals.len(), alpha))
}

/// Bonferroni: single-step test rejecting `P_i <= alpha / n`.
pub fn bonferroni(pvals: &[f64], alpha: f64) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
    if pvals.is_empty() {
        return Err(Error::Empty);
    }
    check_probabilities(pvals)?;
    Ok(single_step(pvals, alpha / pvals.len() as f64))
}

pub(crate) fn single_step(values: &[f64], cutoff: f64) -> Vec<usize> {
    (0..values.len()).filter(|&i| values[i] <= cutoff).collect()
}

/// Number of false rejections `V` of an outcome given the ground truth.
pub fn false_rejections(outcome: &TestOutcome, truth: &TruthAssignment) -> Result<usize> {
    outcome.rejected.iter().try_fold(0, |v, &(i, j)| {
        match truth.is_true_null(i, j) {
            Some(true) => Ok(v + 1),
            Some(false) => Ok(v),
            None => Err(Error::ShapeMismatch(format!(
                "rejected cell ({i}, {j}) is outside the truth layout"
            ))),
        }
    })
}

/// Number of rejected false nulls (true positives).
pub fn true_rejections(outcome: &TestOutcome, truth: &TruthAssignment) -> Result<usize> {
    Ok(outcome.rejections - false_rejections(outcome, truth)?)
}
