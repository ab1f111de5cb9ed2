//! Executable checks of the mathematics behind the block estimator.
//!
//! Under the Dirac-uniform (DU) configuration, false-null p-values are
//! fixed at zero and true-null p-values are independent uniforms. For the
//! block estimator evaluated on a matrix whose row `i` has been zeroed,
//! `n - R(lambda)` is exactly the number of true nulls outside row `i`
//! that land above `lambda`, which is `Binomial(n0 - m_i, 1 - lambda)`.
//! The certified quantity
//!
//! ```text
//! sum_i m_i * E_DU[ 1 / n0_hat(P with row i zeroed) ]
//!   = sum_i m_i * (1 - lambda) * E[ 1 / (W_i + s_max) ]
//! ```
//!
//! is therefore a finite sum over binomial probabilities, and must not
//! exceed one for `lambda >= lambda_threshold(b)`.

mod oracle;

pub use oracle::{brute_force_procedure, OracleEstimator, OracleMethod, ORACLE_MAX_N};

use rand::Rng;

use crate::error::{check_lambda, Error, Result};
use crate::estimators::{lambda_threshold, NullEstimator};
use crate::simulation::{replication_rng, Estimate};
use crate::types::{BlockLayout, PValueMatrix, TruthAssignment};

/// Layout, truth and `lambda` for a Dirac-uniform check.
#[derive(Debug, Clone, PartialEq)]
pub struct DuCheckInput {
    truth: TruthAssignment,
    lambda: f64,
}

impl DuCheckInput {
    pub fn new(truth: TruthAssignment, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(Self { truth, lambda })
    }

    /// Uniform-size blocks with `row_nulls[i]` leading true nulls in block `i`.
    pub fn from_row_counts(s: usize, row_nulls: &[usize], lambda: f64) -> Result<Self> {
        let layout = BlockLayout::uniform(row_nulls.len(), s)?;
        Self::new(TruthAssignment::from_row_counts(layout, row_nulls)?, lambda)
    }

    pub fn truth(&self) -> &TruthAssignment {
        &self.truth
    }

    pub fn layout(&self) -> &BlockLayout {
        self.truth.layout()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Probabilities `P(X = k)`, `k = 0..=trials`, for `X ~ Binomial(trials, theta)`.
pub fn binomial_pmf(trials: u64, theta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "success probability must lie in [0, 1], got {theta}"
        )));
    }
    let mut pmf = Vec::with_capacity(trials as usize + 1);
    let mut coef = 1.0f64;
    for k in 0..=trials {
        if k > 0 {
            coef = coef * (trials - k + 1) as f64 / k as f64;
        }
        pmf.push(coef * theta.powi(k as i32) * (1.0 - theta).powi((trials - k) as i32));
    }
    Ok(pmf)
}

/// `E[1 / (1 + X)]` for `X ~ Binomial(trials, theta)` in closed form,
/// `(1 - (1 - theta)^(trials + 1)) / ((trials + 1) theta)`.
///
/// At `theta = 0` the variable is degenerate at zero and the value is 1.
pub fn binomial_inverse_moment(trials: u64, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "success probability must lie in [0, 1], got {theta}"
        )));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    let m = (trials + 1) as f64;
    // 1 - (1 - theta)^m without cancellation for small theta
    let tail = -(m * (-theta).ln_1p()).exp_m1();
    Ok(tail / (m * theta))
}

/// Exact left-hand side of the DU certification inequality for the block
/// estimator.
pub fn property1_lhs_exact(input: &DuCheckInput) -> Result<f64> {
    let truth = input.truth();
    let s_max = input.layout().s_max() as f64;
    let lambda = input.lambda();
    let n0 = truth.n0();
    let mut total = 0.0;
    for m in truth.row_counts() {
        if m == 0 {
            continue;
        }
        let pmf = binomial_pmf((n0 - m) as u64, 1.0 - lambda)?;
        let expect: f64 = pmf
            .iter()
            .enumerate()
            .map(|(w, p)| p / (w as f64 + s_max))
            .sum();
        total += m as f64 * (1.0 - lambda) * expect;
    }
    Ok(total)
}

/// Monte Carlo version of the DU left-hand side for an arbitrary estimator.
///
/// Each replication draws one DU matrix and evaluates the estimator on it
/// once per block with a true null, with that block's row set to zero.
pub fn property1_lhs_mc<E: NullEstimator + Sync + ?Sized>(
    input: &DuCheckInput,
    est: &E,
    reps: usize,
    seed: u64,
) -> Result<Estimate> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    let truth = input.truth();
    let layout = truth.layout();
    let counts = truth.row_counts();
    let samples = (0..reps as u64)
        .map(|rep| {
            let mut rng = replication_rng(seed, rep);
            let values: Vec<f64> = truth
                .labels()
                .iter()
                .map(|&null| if null { rng.random::<f64>() } else { 0.0 })
                .collect();
            let p = PValueMatrix::new(layout.clone(), values)?;
            counts
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0)
                .try_fold(0.0, |acc, (i, &m)| {
                    let n0 = est.estimate(&p.with_row_zeroed(i));
                    if n0.is_finite() && n0 > 0.0 {
                        Ok(acc + m as f64 / n0)
                    } else {
                        Err(Error::InvalidEstimate(n0))
                    }
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Estimate::from_samples(&samples))
}

/// One evaluated configuration of the certification sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificationCase {
    pub b: usize,
    pub s_max: usize,
    pub row_nulls: Vec<usize>,
    pub lambda: f64,
    pub lhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertificationReport {
    pub cases: usize,
    pub worst: Option<CertificationCase>,
    pub failures: Vec<CertificationCase>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// `lambda` values checked for `b` blocks: the threshold itself and
/// points above it.
pub fn certification_lambdas(b: usize) -> Result<Vec<f64>> {
    let t = lambda_threshold(b)?;
    let mut out = vec![t];
    for l in [t + 0.05, (t + 1.0) / 2.0, 0.99] {
        if l < 1.0 && l > t && !out.contains(&l) {
            out.push(l);
        }
    }
    Ok(out)
}

/// Every non-decreasing sequence of length `len` over `0..=max`. The DU
/// left-hand side depends on the per-row null counts only through their
/// multiset, so these cover all truth patterns up to row permutation.
pub fn row_count_patterns(len: usize, max: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, len: usize, lo: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for v in lo..=max {
            prefix.push(v);
            extend(prefix, len, v, max, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(len), len, 0, max, &mut out);
    out
}

/// Sweeps `b <= max_b`, `s_max <= max_s`, all per-row null counts and the
/// lambdas from [`certification_lambdas`], recording any case whose exact
/// left-hand side exceeds `1 + tol`.
///
/// The left-hand side does not depend on block sizes other than `s_max`,
/// so each pattern is evaluated on blocks of common size `s_max`.
pub fn certify_property1(max_b: usize, max_s: usize, tol: f64) -> Result<CertificationReport> {
    let mut report = CertificationReport::default();
    for b in 1..=max_b {
        let lambdas = certification_lambdas(b)?;
        for s in 1..=max_s {
            for pattern in row_count_patterns(b, s) {
                for &lambda in &lambdas {
                    let input = DuCheckInput::from_row_counts(s, &pattern, lambda)?;
                    let lhs = property1_lhs_exact(&input)?;
                    report.cases += 1;
                    let case = || CertificationCase {
                        b,
                        s_max: s,
                        row_nulls: pattern.clone(),
                        lambda,
                        lhs,
                    };
                    if report.worst.as_ref().is_none_or(|w| lhs > w.lhs) {
                        report.worst = Some(case());
                    }
                    if lhs > 1.0 + tol {
                        report.failures.push(case());
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Moves the ones within each row so that every column sum is
/// `floor(m / q)` or `floor(m / q) + 1`, where `m` is the total.
///
/// Rows are processed in order; each row's ones go to the currently
/// least-filled columns, lowest index first. After every row the column
/// sums differ by at most one, so the final sums fall in the window.
pub fn balanced_rearrangement(a: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
    let q = a.first().map_or(0, Vec::len);
    if a.iter().any(|row| row.len() != q) {
        return Err(Error::ShapeMismatch("rows differ in length".into()));
    }
    if let Some(v) = a.iter().flatten().find(|&&v| v > 1) {
        return Err(Error::InvalidArgument(format!("non-binary entry {v}")));
    }
    let mut fill = vec![0usize; q];
    let mut out = Vec::with_capacity(a.len());
    for row in a {
        let ones = row.iter().filter(|&&v| v == 1).count();
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by_key(|&j| (fill[j], j));
        let mut new_row = vec![0u8; q];
        for &j in &order[..ones] {
            new_row[j] = 1;
            fill[j] += 1;
        }
        out.push(new_row);
    }
    Ok(out)
}

pub fn column_sums(a: &[Vec<u8>]) -> Vec<usize> {
    let q = a.first().map_or(0, Vec::len);
    (0..q)
        .map(|j| a.iter().map(|row| row[j] as usize).sum())
        .collect()
}

/// True when `b` keeps every row sum of `a` and its column sums all lie
/// in `{floor(m/q), floor(m/q) + 1}`.
pub fn is_balanced_rearrangement(a: &[Vec<u8>], b: &[Vec<u8>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let row_sum = |r: &Vec<u8>| r.iter().map(|&v| v as usize).sum::<usize>();
    if a.iter().zip(b).any(|(x, y)| x.len() != y.len() || row_sum(x) != row_sum(y)) {
        return false;
    }
    let cols = column_sums(b);
    if cols.is_empty() {
        return true;
    }
    let m: usize = cols.iter().sum();
    let lo = m / cols.len();
    cols.iter().all(|&c| c == lo || c == lo + 1)
}

/// `f(x) = (2x + 3)^(-2 / (x + 2))`, which equals `lambda_threshold` at
/// integer arguments.
pub fn lemma2_f(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 || x.is_infinite() {
        return Err(Error::InvalidArgument(format!("f is defined for x >= 0, got {x}")));
    }
    Ok((2.0 * x + 3.0).powf(-2.0 / (x + 2.0)))
}

/// Checks on the grid `lo, lo + step, ..., <= hi` that `f` is
/// non-decreasing on the points `>= 1` and bounded by `f(1)` on the
/// points in `[0, 1]`.
pub fn grid_monotonicity_check(lo: f64, hi: f64, step: f64) -> Result<bool> {
    if step.is_nan() || step <= 0.0 || hi.is_nan() || lo.is_nan() || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "bad grid [{lo}, {hi}] with step {step}"
        )));
    }
    let f1 = lemma2_f(1.0)?;
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut prev: Option<f64> = None;
    for k in 0..=count {
        let x = lo + k as f64 * step;
        let fx = lemma2_f(x)?;
        if x <= 1.0 && fx > f1 {
            return Ok(false);
        }
        if x >= 1.0 {
            if prev.is_some_and(|p| fx < p) {
                return Ok(false);
            }
            prev = Some(fx);
        }
    }
    Ok(true)
}
