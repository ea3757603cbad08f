//! Likelihood-oriented estimation of spectral power parameters from 1-bit
//! (hard-limited) samples of band-limited Gaussian processes.
//!
//! The crate builds the covariance model of the received signal, evaluates
//! the moments of the quantized samples through Gaussian orthant
//! probabilities, forms the conservative Fisher matrix of the quantized
//! receiver next to the ideal-receiver Fisher matrix, quantifies the
//! information loss of 1-bit sampling, and estimates the power levels by
//! Fisher scoring on the auxiliary quadratic statistics. A Monte-Carlo
//! harness verifies the analytic uncertainty predictions.

pub mod auxstats;
pub mod data;
pub mod error;
pub mod estimator;
pub mod infometrics;
pub mod model;
pub mod orthant;
pub mod quad;
pub mod rng;
pub mod simkit;

pub use auxstats::{
    cov_stats, factor_cov, jac_mean_stats, mean_stats, reduce_stats, scenario_fingerprint,
    theta_fingerprint, AuxMoments, FourthMomentTable, PairIndex,
};
pub use data::{hard_limit, BinaryWindows, RealWindows};
pub use error::{Error, Result};
pub use estimator::{
    estimate_ideal, estimate_ideal_from_moment, estimate_quant, estimate_quant_from_mean,
    scoring_step_quant, ScoringConfig, Trajectory,
};
pub use infometrics::{
    fisher_ideal, fisher_ideal_joint, fisher_quantized, fisher_quantized_from_moments, info_loss,
    loss_db, predict_sigma, FisherReport,
};
pub use model::{
    build_mixing, build_noise_corr, build_ry, build_sigma_y, build_source_corr, db_to_linear,
    dsigma_y_dtheta, linear_to_db, ModelMatrices, ParamVector, Scenario,
};
pub use orthant::{
    arcsine_pair, mc_sign_moment_oracle, orthant3, orthant4, sign_moment4, CorrSubset,
};
pub use quad::{adaptive_gk15, QuadResult};
pub use simkit::{
    run_mc, sample_windows, write_trials_csv, McMode, McReport, SeedProvenance, TrialBatch,
    TrialData,
};
