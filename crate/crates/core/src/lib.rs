//! Adaptive false discovery rate and familywise error rate control for
//! p-values arranged in independent blocks.
//!
//! The crate provides
//!
//! * step-up and single-step baselines (BH, Bonferroni),
//! * null-count estimators, including the block-aware one whose
//!   correction term is the largest block size,
//! * the two-stage BH, adaptive BH and adaptive Bonferroni procedures for
//!   block dependence, plus the BKY comparator,
//! * a deterministic Monte Carlo engine for block-equicorrelated normals,
//! * exact and brute-force checks of the underlying mathematics.

pub mod baseline;
pub mod error;
pub mod estimators;
pub mod normal;
pub mod procedures;
pub mod simulation;
pub mod types;
pub mod verification;

pub use baseline::{bh, bonferroni, false_rejections, stepup, true_rejections};
pub use error::{Error, Result};
pub use estimators::{
    lambda_threshold, n0_block, n0_storey, r_lambda, EstimatorKind, EstimatorSpec,
    FixedEstimator, NullEstimator,
};
pub use normal::{normal_cdf, two_sided_pvalue};
pub use procedures::{
    adaptive_bh, adaptive_bonferroni, bky_adaptive_bh, block_pvalues, two_stage_bh,
    BlockPValues,
};
pub use simulation::{run_mc, truth_layout, Estimate, Method, MethodSummary, SimConfig, SimReport};
pub use types::{BlockLayout, PValueMatrix, TestOutcome, TruthAssignment};
