//! Monte Carlo engine for block-equicorrelated normal test statistics.
//!
//! Each replication draws `X_ij = mu_ij + sqrt(rho) Z_i + sqrt(1 - rho) e_ij`
//! with independent standard normals `Z_i` (one per block) and `e_ij`,
//! which realizes the within-block correlation `rho` exactly. The p-values
//! are two-sided z-test p-values.
//!
//! Replication `r` always draws from stream `r` of a ChaCha8 generator
//! keyed by the configured seed, so results do not depend on how the
//! replications are scheduled across threads.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{bh, bonferroni, false_rejections};
use crate::error::{check_alpha, check_lambda, Error, Result};
use crate::estimators::EstimatorSpec;
use crate::normal::two_sided_pvalue;
use crate::procedures::{adaptive_bh, adaptive_bonferroni, bky_adaptive_bh, two_stage_bh};
use crate::types::{BlockLayout, PValueMatrix, TestOutcome, TruthAssignment};

/// Procedures compared by the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Plain BH on the flat p-values.
    #[serde(rename = "BH")]
    Bh,
    /// Adaptive BH with Storey's estimator, ignoring blocks.
    #[serde(rename = "adBH1")]
    AdBh1,
    /// Block-aware adaptive BH with the block estimator.
    #[serde(rename = "adBH2")]
    AdBh2,
    /// Benjamini-Krieger-Yekutieli two-stage adaptive BH.
    #[serde(rename = "adBH3")]
    AdBh3,
    /// Two-stage BH under block dependence (not adaptive).
    #[serde(rename = "tsBH")]
    TsBh,
    #[serde(rename = "Bonf")]
    Bonf,
    /// Adaptive Bonferroni with Storey's estimator.
    #[serde(rename = "adBon1")]
    AdBon1,
    /// Adaptive Bonferroni with the block estimator.
    #[serde(rename = "adBon2")]
    AdBon2,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Bh,
        Method::AdBh1,
        Method::AdBh2,
        Method::AdBh3,
        Method::TsBh,
        Method::Bonf,
        Method::AdBon1,
        Method::AdBon2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bh => "BH",
            Method::AdBh1 => "adBH1",
            Method::AdBh2 => "adBH2",
            Method::AdBh3 => "adBH3",
            Method::TsBh => "tsBH",
            Method::Bonf => "Bonf",
            Method::AdBon1 => "adBon1",
            Method::AdBon2 => "adBon2",
        }
    }

    /// Applies the method to one data set.
    pub fn apply(self, pvals: &PValueMatrix, alpha: f64, lambda: f64) -> Result<TestOutcome> {
        let layout = pvals.layout();
        match self {
            Method::Bh => TestOutcome::from_flat(layout, &bh(pvals.values(), alpha)?),
            Method::AdBh1 => {
                let flat = pvals.flattened();
                let o = adaptive_bh(&flat, alpha, &EstimatorSpec::storey(lambda)?)?;
                let mut out = TestOutcome::from_flat(layout, &o.flat_indices(flat.layout()))?;
                out.estimator_value = o.estimator_value;
                Ok(out)
            }
            Method::AdBh2 => adaptive_bh(pvals, alpha, &EstimatorSpec::block(lambda)?),
            Method::AdBh3 => TestOutcome::from_flat(layout, &bky_adaptive_bh(pvals.values(), alpha)?),
            Method::TsBh => two_stage_bh(pvals, alpha),
            Method::Bonf => TestOutcome::from_flat(layout, &bonferroni(pvals.values(), alpha)?),
            Method::AdBon1 => adaptive_bonferroni(pvals, alpha, &EstimatorSpec::storey(lambda)?),
            Method::AdBon2 => adaptive_bonferroni(pvals, alpha, &EstimatorSpec::block(lambda)?),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// One simulation cell: a single `(s, lambda, rho)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub n0: usize,
    /// Common block size; must divide `n`.
    pub s: usize,
    pub rho: f64,
    /// Mean of the false-null statistics.
    pub d: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl SimConfig {
    pub const DEFAULT_REPS: usize = 2000;
    pub const DEFAULT_ALPHA: f64 = 0.05;

    pub fn default_d() -> f64 {
        10f64.sqrt()
    }

    pub fn new(n: usize, n0: usize, s: usize, rho: f64, lambda: f64, methods: Vec<Method>) -> Self {
        Self {
            n,
            n0,
            s,
            rho,
            d: Self::default_d(),
            alpha: Self::DEFAULT_ALPHA,
            lambda,
            reps: Self::DEFAULT_REPS,
            seed: 0,
            methods,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 || self.s == 0 {
            return bad("n and s must be positive".into());
        }
        if !self.n.is_multiple_of(self.s) {
            return bad(format!("block size {} does not divide n = {}", self.s, self.n));
        }
        if self.n0 > self.n {
            return bad(format!("n0 = {} exceeds n = {}", self.n0, self.n));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !self.d.is_finite() {
            return bad(format!("signal mean must be finite, got {}", self.d));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods requested".into());
        }
        check_alpha(self.alpha)?;
        check_lambda(self.lambda)
    }

    pub fn layout(&self) -> Result<BlockLayout> {
        BlockLayout::uniform(self.n / self.s, self.s)
    }
}

/// True-null pattern for `n` hypotheses in blocks of `s`.
///
/// The `n0` true nulls are spread as evenly as possible over the blocks,
/// with the blocks holding one extra null placed last, and occupy the
/// leading positions of each block. This gives `s/2` nulls per block for
/// even `s` with `n0 = n/2`, and for `s = 3, n = 240, n0 = 120` one null
/// in each of the first 40 blocks and two in each of the remaining 40.
pub fn truth_layout(n: usize, n0: usize, s: usize) -> Result<TruthAssignment> {
    if s == 0 || n == 0 || !n.is_multiple_of(s) {
        return Err(Error::InvalidConfig(format!(
            "block size {s} does not divide n = {n}"
        )));
    }
    if n0 > n {
        return Err(Error::InvalidConfig(format!("n0 = {n0} exceeds n = {n}")));
    }
    let b = n / s;
    let (base, extra) = (n0 / b, n0 % b);
    let counts: Vec<usize> = (0..b)
        .map(|i| if i >= b - extra { base + 1 } else { base })
        .collect();
    TruthAssignment::from_row_counts(BlockLayout::uniform(b, s)?, &counts)
}

/// Generator for replication `rep` under `seed`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Draws one block-equicorrelated data set and returns its p-values.
pub fn generate<R: Rng + ?Sized>(
    config: &SimConfig,
    truth: &TruthAssignment,
    rng: &mut R,
) -> Result<PValueMatrix> {
    if !(0.0..1.0).contains(&config.rho) {
        return Err(Error::InvalidConfig(format!(
            "rho must lie in [0, 1), got {}",
            config.rho
        )));
    }
    let stats = draw_statistics(config.rho, config.d, truth, rng);
    PValueMatrix::new(
        truth.layout().clone(),
        stats.into_iter().map(two_sided_pvalue).collect(),
    )
}

/// Raw test statistics `X_ij` in block-major order.
pub fn draw_statistics<R: Rng + ?Sized>(
    rho: f64,
    d: f64,
    truth: &TruthAssignment,
    rng: &mut R,
) -> Vec<f64> {
    let shared = rho.sqrt();
    let own = (1.0 - rho).sqrt();
    let layout = truth.layout();
    let labels = truth.labels();
    let mut out = Vec::with_capacity(layout.n());
    for i in 0..layout.b() {
        let z: f64 = rng.sample(StandardNormal);
        for k in layout.range(i) {
            let e: f64 = rng.sample(StandardNormal);
            let mu = if labels[k] { 0.0 } else { d };
            out.push(mu + shared * z + own * e);
        }
    }
    out
}

/// Monte Carlo mean with its standard error; `se` is `None` for one
/// replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: Option<f64>,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = xs.len();
        let mean = pairwise_sum(xs) / m as f64;
        let se = (m > 1).then(|| {
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&dev) / (m - 1) as f64).sqrt() / (m as f64).sqrt()
        });
        Self { mean, se }
    }

    /// Standard error, treating the single-replication case as zero.
    pub fn se_or_zero(&self) -> f64 {
        self.se.unwrap_or(0.0)
    }
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub fdr: Estimate,
    pub fwer: Estimate,
    /// Undefined when there are no false nulls.
    pub power: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub summaries: Vec<MethodSummary>,
}

impl SimReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Per-replication error statistics of one method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationStats {
    pub false_rejections: usize,
    pub rejections: usize,
    pub true_rejections: usize,
}

impl ReplicationStats {
    pub fn fdp(&self) -> f64 {
        self.false_rejections as f64 / self.rejections.max(1) as f64
    }

    pub fn any_false(&self) -> f64 {
        if self.false_rejections > 0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Runs replication `rep` and returns one entry per configured method.
pub fn run_replication(
    config: &SimConfig,
    truth: &TruthAssignment,
    rep: u64,
) -> Result<Vec<ReplicationStats>> {
    let mut rng = replication_rng(config.seed, rep);
    let pvals = generate(config, truth, &mut rng)?;
    config
        .methods
        .iter()
        .map(|m| {
            let outcome = m.apply(&pvals, config.alpha, config.lambda)?;
            let v = false_rejections(&outcome, truth)?;
            Ok(ReplicationStats {
                false_rejections: v,
                rejections: outcome.rejections,
                true_rejections: outcome.rejections - v,
            })
        })
        .collect()
}

/// Per-replication statistics for every replication, in replication order.
pub fn replicate(config: &SimConfig) -> Result<Vec<Vec<ReplicationStats>>> {
    config.validate()?;
    let truth = truth_layout(config.n, config.n0, config.s)?;
    (0..config.reps as u64)
        .into_par_iter()
        .map(|r| run_replication(config, &truth, r))
        .collect()
}

/// Estimates FDR, FWER and average power of every configured method.
pub fn run_mc(config: &SimConfig) -> Result<SimReport> {
    let per_rep = replicate(config)?;
    let alternatives = config.n - config.n0;
    let summaries = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let column = || per_rep.iter().map(move |r| r[k]);
            let fdp: Vec<f64> = column().map(|s| s.fdp()).collect();
            let any: Vec<f64> = column().map(|s| s.any_false()).collect();
            let power = (alternatives > 0).then(|| {
                let tp: Vec<f64> = column()
                    .map(|s| s.true_rejections as f64 / alternatives as f64)
                    .collect();
                Estimate::from_samples(&tp)
            });
            MethodSummary {
                method,
                fdr: Estimate::from_samples(&fdp),
                fwer: Estimate::from_samples(&any),
                power,
            }
        })
        .collect();
    Ok(SimReport {
        config: config.clone(),
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("adbh2".parse::<Method>().unwrap(), Method::AdBh2);
        assert!("adBH9".parse::<Method>().is_err());
    }

    #[test]
    fn even_block_truth() {
        let t = truth_layout(240, 120, 4).unwrap();
        assert_eq!(t.layout().b(), 60);
        assert!(t.row_counts().iter().all(|&m| m == 2));
        for i in 0..60 {
            let row: Vec<bool> = (0..4).map(|j| t.is_true_null(i, j).unwrap()).collect();
            assert_eq!(row, vec![true, true, false, false]);
        }
    }

    #[test]
    fn three_block_truth() {
        let t = truth_layout(240, 120, 3).unwrap();
        let counts = t.row_counts();
        assert_eq!(counts.len(), 80);
        assert!(counts[..40].iter().all(|&m| m == 1));
        assert!(counts[40..].iter().all(|&m| m == 2));
        assert_eq!(t.n0(), 120);
    }

    #[test]
    fn truth_edge_cases() {
        assert_eq!(truth_layout(12, 0, 3).unwrap().n0(), 0);
        assert_eq!(truth_layout(12, 12, 3).unwrap().n0(), 12);
        assert!(truth_layout(12, 13, 3).is_err());
        assert!(truth_layout(10, 5, 3).is_err());
        let t = truth_layout(100, 50, 20).unwrap();
        assert!(t.row_counts().iter().all(|&m| m == 10));
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::new(240, 120, 2, 0.5, 0.5, vec![Method::Bh]);
        assert!(ok.validate().is_ok());
        let mut c = ok.clone();
        c.s = 7;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.rho = 1.0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.rho = -0.1;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.reps = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.alpha = 0.0;
        assert!(c.validate().is_err());
        let mut c = ok;
        c.methods.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn estimate_se_matches_recomputation() {
        let xs = [0.0, 0.25, 1.0, 0.5, 0.0];
        let e = Estimate::from_samples(&xs);
        let mean = 1.75 / 5.0;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
        assert!((e.mean - mean).abs() < 1e-15);
        assert!((e.se.unwrap() - (var / 5.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::from_samples(&[0.3]).se, None);
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }

    #[test]
    fn summary_se_matches_stored_replications() {
        let mut c = SimConfig::new(24, 12, 3, 0.3, 0.5, vec![Method::Bh, Method::AdBon2]);
        c.reps = 50;
        c.seed = 11;
        let per_rep = replicate(&c).unwrap();
        let report = run_mc(&c).unwrap();
        for (k, s) in report.summaries.iter().enumerate() {
            let fdp: Vec<f64> = per_rep.iter().map(|r| r[k].fdp()).collect();
            let mean = fdp.iter().sum::<f64>() / 50.0;
            let sd = (fdp.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 49.0).sqrt();
            assert!((s.fdr.mean - mean).abs() < 1e-12);
            assert!((s.fdr.se.unwrap() - sd / 50f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn replication_invariants() {
        let mut c = SimConfig::new(60, 30, 4, 0.6, 0.2, Method::ALL.to_vec());
        c.reps = 40;
        for reps in replicate(&c).unwrap() {
            for s in reps {
                assert!(s.false_rejections <= s.rejections);
                assert!(s.rejections <= 60);
                assert!(s.true_rejections <= 30);
            }
        }
    }

    #[test]
    fn no_true_nulls_means_no_errors() {
        let mut c = SimConfig::new(40, 0, 4, 0.5, 0.5, Method::ALL.to_vec());
        c.reps = 30;
        let r = run_mc(&c).unwrap();
        for s in &r.summaries {
            assert_eq!(s.fdr.mean, 0.0);
            assert_eq!(s.fwer.mean, 0.0);
        }
    }

    #[test]
    fn all_null_power_undefined() {
        let mut c = SimConfig::new(20, 20, 4, 0.0, 0.5, vec![Method::Bonf]);
        c.reps = 5;
        let r = run_mc(&c).unwrap();
        assert!(r.summaries[0].power.is_none());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut c = SimConfig::new(48, 24, 4, 0.4, 0.5, Method::ALL.to_vec());
        c.reps = 64;
        c.seed = 99;
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_mc(&c).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_mc(&c).unwrap());
        assert_eq!(serial, parallel);
    }

    #[test]
    fn adbh1_equals_adbh2_without_blocks() {
        let truth = truth_layout(30, 15, 1).unwrap();
        let c = SimConfig::new(30, 15, 1, 0.0, 0.5, vec![]);
        for rep in 0..200 {
            let p = generate(&c, &truth, &mut replication_rng(5, rep)).unwrap();
            for lambda in [0.2, 0.5, 0.8] {
                let a = Method::AdBh1.apply(&p, 0.05, lambda).unwrap();
                let b = Method::AdBh2.apply(&p, 0.05, lambda).unwrap();
                assert_eq!(a.rejected, b.rejected);
            }
        }
    }

    #[test]
    fn generate_rejects_bad_rho() {
        let truth = truth_layout(4, 2, 2).unwrap();
        let mut c = SimConfig::new(4, 2, 2, 0.0, 0.5, vec![Method::Bh]);
        c.rho = 1.5;
        assert!(generate(&c, &truth, &mut replication_rng(0, 0)).is_err());
    }
}
