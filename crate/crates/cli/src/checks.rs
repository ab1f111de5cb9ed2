//! Named pass/fail checks backing `blockmt verify` and the acceptance run.

use std::fmt;

use blockmt::verification::{
    balanced_rearrangement, binomial_inverse_moment, binomial_pmf, brute_force_procedure,
    certify_property1, grid_monotonicity_check, is_balanced_rearrangement, OracleEstimator,
    OracleMethod,
};
use blockmt::{
    adaptive_bh, adaptive_bonferroni, bh, bonferroni, n0_block, n0_storey, two_stage_bh,
    BlockLayout, EstimatorSpec, FixedEstimator, PValueMatrix, Result, TestOutcome,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Random p-value matrix with `b <= max_b` blocks of sizes `1..=max_s`.
/// Values are mixed between small and uniform draws, some rounded to two
/// decimals so that ties and exact boundary hits occur.
pub fn random_matrix(rng: &mut impl Rng, max_b: usize, max_s: usize) -> PValueMatrix {
    let b = rng.random_range(1..=max_b);
    let rows: Vec<Vec<f64>> = (0..b)
        .map(|_| {
            let s = rng.random_range(1..=max_s);
            (0..s).map(|_| random_pvalue(rng)).collect()
        })
        .collect();
    PValueMatrix::from_rows(&rows).expect("valid random matrix")
}

fn random_pvalue(rng: &mut impl Rng) -> f64 {
    let p: f64 = if rng.random_bool(0.5) {
        rng.random_range(0.0..0.1)
    } else {
        rng.random()
    };
    if rng.random_bool(0.25) {
        (p * 100.0).round() / 100.0
    } else {
        p
    }
}

fn oracle_estimator(spec: &EstimatorSpec) -> OracleEstimator {
    match spec.kind() {
        blockmt::EstimatorKind::Storey => OracleEstimator::Storey(spec.lambda()),
        blockmt::EstimatorKind::Block => OracleEstimator::Block(spec.lambda()),
    }
}

/// Rejection-set equality between the procedures and the brute-force
/// oracle, one result per procedure.
pub fn oracle_checks(instances: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = [
        "oracle two_stage_bh",
        "oracle adaptive_bh (block)",
        "oracle adaptive_bh (storey)",
        "oracle adaptive_bonferroni (block)",
    ];
    let mut mismatches = [0usize; 4];
    for _ in 0..instances {
        let p = random_matrix(&mut rng, 4, 3);
        let alpha = rng.random_range(0.01..0.5);
        let lambda = rng.random_range(0.05..0.95);
        let block = EstimatorSpec::block(lambda)?;
        let storey = EstimatorSpec::storey(lambda)?;

        let pairs: [(TestOutcome, OracleMethod); 4] = [
            (two_stage_bh(&p, alpha)?, OracleMethod::TwoStageBh),
            (
                adaptive_bh(&p, alpha, &block)?,
                OracleMethod::AdaptiveBh(oracle_estimator(&block)),
            ),
            (
                adaptive_bh(&p, alpha, &storey)?,
                OracleMethod::AdaptiveBh(oracle_estimator(&storey)),
            ),
            (
                adaptive_bonferroni(&p, alpha, &block)?,
                OracleMethod::AdaptiveBonferroni(oracle_estimator(&block)),
            ),
        ];
        for (k, (got, method)) in pairs.iter().enumerate() {
            if got.rejected != brute_force_procedure(&p, alpha, *method)? {
                mismatches[k] += 1;
            }
        }
    }
    Ok(names
        .iter()
        .zip(mismatches)
        .map(|(name, bad)| {
            CheckResult::new(name, bad == 0, format!("{bad} mismatches in {instances} instances"))
        })
        .collect())
}

fn flat_outcome(layout: &BlockLayout, flat: &[usize]) -> Result<Vec<(usize, usize)>> {
    Ok(TestOutcome::from_flat(layout, flat)?.rejected)
}

/// Structural reductions: singleton blocks, constant `n0_hat = n`, and
/// `s_max = 1`.
pub fn reduction_checks(instances: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut singleton_bad, mut constant_bad, mut estimator_bad) = (0, 0, 0);
    for _ in 0..instances {
        let alpha = rng.random_range(0.01..0.5);
        let lambda = rng.random_range(0.05..0.95);

        let n = rng.random_range(1..=30);
        let flat: Vec<f64> = (0..n).map(|_| random_pvalue(&mut rng)).collect();
        let single = PValueMatrix::new(BlockLayout::singletons(n)?, flat.clone())?;
        if two_stage_bh(&single, alpha)?.rejected != flat_outcome(single.layout(), &bh(&flat, alpha)?)? {
            singleton_bad += 1;
        }
        if n0_block(&single, lambda)? != n0_storey(&single, lambda)? {
            estimator_bad += 1;
        }

        let p = random_matrix(&mut rng, 6, 4);
        let all = FixedEstimator(p.layout().n() as f64);
        let same_bh = adaptive_bh(&p, alpha, &all)?.rejected == two_stage_bh(&p, alpha)?.rejected;
        let same_bonf = adaptive_bonferroni(&p, alpha, &all)?.rejected
            == flat_outcome(p.layout(), &bonferroni(p.values(), alpha)?)?;
        if !(same_bh && same_bonf) {
            constant_bad += 1;
        }
    }
    let detail = |bad: usize| format!("{bad} mismatches in {instances} instances");
    Ok(vec![
        CheckResult::new("singleton blocks: two-stage BH = BH", singleton_bad == 0, detail(singleton_bad)),
        CheckResult::new(
            "n0_hat = n: adaptive = non-adaptive",
            constant_bad == 0,
            detail(constant_bad),
        ),
        CheckResult::new(
            "s_max = 1: block estimator = Storey",
            estimator_bad == 0,
            detail(estimator_bad),
        ),
    ])
}

/// Exact certification sweep of the block estimator.
pub fn property1_check(max_b: usize, max_s: usize) -> Result<CheckResult> {
    let report = certify_property1(max_b, max_s, 1e-12)?;
    let worst = report
        .worst
        .as_ref()
        .map_or("none".to_string(), |w| {
            format!("max lhs {} at b={} s={} lambda={:.4}", w.lhs, w.b, w.s_max, w.lambda)
        });
    let mut detail = format!("{} cases, {} failures, {worst}", report.cases, report.failures.len());
    if let Some(f) = report.failures.first() {
        detail.push_str(&format!(
            "; first failure b={} s={} nulls={:?} lambda={} lhs={}",
            f.b, f.s_max, f.row_nulls, f.lambda, f.lhs
        ));
    }
    Ok(CheckResult::new(
        &format!("property 1 certification (b <= {max_b}, s <= {max_s})"),
        report.passed(),
        detail,
    ))
}

/// Closed-form `E[1 / (1 + X)]` for `X ~ Bin(trials, theta)` against direct
/// summation over the pmf.
pub fn identity_check() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for trials in 0..=60u64 {
        for k in 1..=9 {
            let theta = k as f64 / 10.0;
            let direct: f64 = binomial_pmf(trials, theta)?
                .iter()
                .enumerate()
                .map(|(x, p)| p / (1.0 + x as f64))
                .sum();
            worst = worst.max((binomial_inverse_moment(trials, theta)? - direct).abs());
        }
    }
    Ok(CheckResult::new(
        "binomial inverse moment identity",
        worst <= 1e-12,
        format!("max abs error {worst:e} over trials <= 60, theta in 0.1..0.9"),
    ))
}

/// Balanced rearrangement on random 0/1 matrices of random shape.
pub fn lemma1_check(instances: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..instances {
        let rows = rng.random_range(1..=12);
        let cols = rng.random_range(1..=8);
        let density: f64 = rng.random();
        let a: Vec<Vec<u8>> = (0..rows)
            .map(|_| (0..cols).map(|_| u8::from(rng.random_bool(density))).collect())
            .collect();
        if !is_balanced_rearrangement(&a, &balanced_rearrangement(&a)?) {
            bad += 1;
        }
    }
    Ok(CheckResult::new(
        "balanced column-sum rearrangement",
        bad == 0,
        format!("{bad} failures in {instances} matrices"),
    ))
}

pub fn lemma2_check() -> Result<CheckResult> {
    let ok = grid_monotonicity_check(0.0, 200.0, 0.01)?;
    Ok(CheckResult::new(
        "threshold function monotonicity",
        ok,
        "grid [0, 200] step 0.01",
    ))
}
