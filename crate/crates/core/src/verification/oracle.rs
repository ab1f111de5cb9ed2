//! Literal re-implementation of the block procedures by exhaustive scans.
//!
//! Nothing here calls into `procedures`, `baseline` or `estimators`: order
//! statistics are located by counting rather than sorting, and the
//! estimators are recomputed from their formulas. Arithmetic expressions
//! are written the same way as in the production code so that exact
//! boundary hits compare identically.

use crate::error::{Error, Result};
use crate::types::PValueMatrix;

/// Largest number of hypotheses the oracle accepts.
pub const ORACLE_MAX_N: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleEstimator {
    Storey(f64),
    Block(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMethod {
    TwoStageBh,
    AdaptiveBh(OracleEstimator),
    AdaptiveBonferroni(OracleEstimator),
}

fn oracle_n0(pvals: &PValueMatrix, est: OracleEstimator) -> f64 {
    let n = pvals.layout().n();
    let mut s_max = 0;
    let mut at_most = |lambda: f64| {
        let mut r = 0;
        for row in pvals.rows() {
            s_max = s_max.max(row.len());
            for &p in row {
                if p <= lambda {
                    r += 1;
                }
            }
        }
        r
    };
    match est {
        OracleEstimator::Fixed(v) => v,
        OracleEstimator::Storey(lambda) => {
            let r = at_most(lambda);
            (n - r + 1) as f64 / (1.0 - lambda)
        }
        OracleEstimator::Block(lambda) => {
            let r = at_most(lambda);
            (n - r + s_max) as f64 / (1.0 - lambda)
        }
    }
}

/// Rejected `(block, position)` pairs, block-major.
#[allow(clippy::needless_range_loop)]
pub fn brute_force_procedure(
    pvals: &PValueMatrix,
    alpha: f64,
    method: OracleMethod,
) -> Result<Vec<(usize, usize)>> {
    let layout = pvals.layout();
    let (n, b) = (layout.n(), layout.b());
    if n > ORACLE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "oracle is limited to {ORACLE_MAX_N} hypotheses, got {n}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }

    let est = match method {
        OracleMethod::TwoStageBh => None,
        OracleMethod::AdaptiveBh(e) | OracleMethod::AdaptiveBonferroni(e) => Some(e),
    };
    if let Some(OracleEstimator::Storey(l) | OracleEstimator::Block(l)) = est {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::InvalidLambda(l));
        }
    }

    if let OracleMethod::AdaptiveBonferroni(e) = method {
        let cutoff = alpha / oracle_n0(pvals, e);
        let mut out = Vec::new();
        for i in 0..b {
            for (j, &p) in pvals.row(i).iter().enumerate() {
                if p <= cutoff {
                    out.push((i, j));
                }
            }
        }
        return Ok(out);
    }

    let scale = match est {
        Some(e) => oracle_n0(pvals, e) / n as f64,
        None => 1.0,
    };
    let s_bar = n as f64 / b as f64;
    let block_q: Vec<f64> = (0..b)
        .map(|i| {
            let mut m = f64::INFINITY;
            for &p in pvals.row(i) {
                if p < m {
                    m = p;
                }
            }
            scale * (s_bar * m)
        })
        .collect();

    // B = max{k : at least k block values <= k alpha / b}
    let count_le = |t: f64| block_q.iter().filter(|&&q| q <= t).count();
    let Some(sig) = (1..=b)
        .rev()
        .find(|&k| count_le(k as f64 * alpha / b as f64) >= k)
    else {
        return Ok(Vec::new());
    };
    // the B-th order statistic is the smallest value with B values at or below it
    let kth = block_q
        .iter()
        .copied()
        .filter(|&v| count_le(v) >= sig)
        .fold(f64::INFINITY, f64::min);
    let cell_cutoff = sig as f64 * alpha / n as f64;

    let mut out = Vec::new();
    for i in 0..b {
        if block_q[i] > kth {
            continue;
        }
        for (j, &p) in pvals.row(i).iter().enumerate() {
            if scale * p <= cell_cutoff {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}
