//! Monte-Carlo harness: window sampling, hard limiting, and repeated-trial
//! verification of the estimators.
//!
//! Reproducibility contract: every window is filled from its own counter-mode
//! substream of the master seed and every trial from a seed derived by index,
//! so results are bit-identical across runs and across thread counts. Trial
//! aggregation walks trials in index order after the parallel phase.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write as _;
use std::path::Path;

use crate::auxstats::factor_cov;
use crate::data::{hard_limit, BinaryWindows, RealWindows};
use crate::error::{Error, Result};
use crate::estimator::{estimate_ideal, estimate_quant_from_mean, ScoringConfig};
use crate::model::{build_ry, ParamVector, Scenario};
use crate::rng::{derive_trial_seed, fill_standard_normal, stream_rng};

/// Which receiver the Monte-Carlo trials exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum McMode {
    /// Hard-limited data, quantized scoring estimator.
    Quantized,
    /// Unquantized data, ideal-receiver scoring estimator.
    Ideal,
}

/// Record of how one trial's randomness was derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub master_seed: u64,
    pub trial: u64,
    pub trial_seed: u64,
}

/// Data of a single trial.
#[derive(Debug, Clone)]
pub enum TrialData {
    Quantized(BinaryWindows),
    Ideal(RealWindows),
}

/// One trial's data with its empirical reduced-statistics mean (quantized
/// mode only) and seed provenance.
#[derive(Debug, Clone)]
pub struct TrialBatch {
    pub data: TrialData,
    pub mu_emp: Option<DVector<f64>>,
    pub provenance: SeedProvenance,
}

impl TrialBatch {
    /// Sample one trial's N windows deterministically from (master seed,
    /// trial index).
    pub fn generate(
        scn: &Scenario,
        theta: &ParamVector,
        n_windows: usize,
        master_seed: u64,
        trial: u64,
        mode: McMode,
    ) -> Result<Self> {
        let trial_seed = derive_trial_seed(master_seed, trial);
        let y = sample_windows(scn, theta, n_windows, trial_seed)?;
        let provenance = SeedProvenance {
            master_seed,
            trial,
            trial_seed,
        };
        Ok(match mode {
            McMode::Quantized => {
                let z = hard_limit(&y);
                let mu_emp = z.empirical_mean_stats();
                Self {
                    data: TrialData::Quantized(z),
                    mu_emp: Some(mu_emp),
                    provenance,
                }
            }
            McMode::Ideal => Self {
                data: TrialData::Ideal(y),
                mu_emp: None,
                provenance,
            },
        })
    }
}

/// Sample N windows of the band-limited process: rows L·g with L the
/// Cholesky factor of R_y(θ) and g standard normal. Window w draws from
/// substream w of the seed.
pub fn sample_windows(
    scn: &Scenario,
    theta: &ParamVector,
    n_windows: usize,
    seed: u64,
) -> Result<RealWindows> {
    if n_windows == 0 {
        return Err(Error::InvalidInput("need at least one window".into()));
    }
    let ry = build_ry(scn, theta)?;
    let chol = factor_cov(&ry)?;
    let l = chol.l();
    let m = scn.m();

    let mut data = vec![0.0; n_windows * m];
    let mut g = vec![0.0; m];
    for w in 0..n_windows {
        let mut rng = stream_rng(seed, w as u64);
        fill_standard_normal(&mut rng, &mut g);
        let row = &mut data[w * m..(w + 1) * m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += l[(i, j)] * g[j];
            }
            row[i] = acc;
        }
    }
    RealWindows::new(n_windows, m, data)
}

/// Monte-Carlo verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub mode: McMode,
    pub master_seed: u64,
    /// Trials attempted.
    pub k_requested: usize,
    /// Trials that produced an estimate (failures are excluded from R̂).
    pub k_used: usize,
    pub failed: usize,
    /// Empirical error moment R̂ = (1/K) Σ (θ̂_k − θ)(θ̂_k − θ)ᵀ.
    pub r_hat: DMatrix<f64>,
    /// Relative uncertainty σ̂_d = √([R̂]_dd) / θ_d against the true powers.
    pub sigma_hat: Vec<f64>,
    /// Per-trial final estimates in trial order; None marks a failed trial.
    pub estimates: Vec<Option<Vec<f64>>>,
}

impl McReport {
    /// Assemble a report from per-trial estimates. Errors if more than 1% of
    /// trials failed or no trial succeeded.
    pub fn from_estimates(
        theta_true: &ParamVector,
        estimates: Vec<Option<Vec<f64>>>,
        master_seed: u64,
        mode: McMode,
    ) -> Result<Self> {
        let d = theta_true.d();
        let k_requested = estimates.len();
        let failed = estimates.iter().filter(|e| e.is_none()).count();
        let k_used = k_requested - failed;
        if k_used == 0 || (failed as f64) > 0.01 * (k_requested as f64) {
            return Err(Error::TooManyTrialFailures {
                failed,
                total: k_requested,
            });
        }
        if estimates
            .iter()
            .flatten()
            .any(|e| e.len() != d || e.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidInput(
                "trial estimates must be finite with one entry per source".into(),
            ));
        }

        let mut r_hat = DMatrix::zeros(d, d);
        for est in estimates.iter().flatten() {
            for a in 0..d {
                let ea = est[a] - theta_true.theta_src()[a];
                for b in 0..d {
                    let eb = est[b] - theta_true.theta_src()[b];
                    r_hat[(a, b)] += ea * eb;
                }
            }
        }
        r_hat /= k_used as f64;
        let sigma_hat = (0..d)
            .map(|a| r_hat[(a, a)].sqrt() / theta_true.theta_src()[a])
            .collect();
        Ok(Self {
            mode,
            master_seed,
            k_requested,
            k_used,
            failed,
            r_hat,
            sigma_hat,
            estimates,
        })
    }
}

/// Run K independent trials of sample → (limit →) estimate and aggregate the
/// error moments. Trials run in parallel; the outcome is independent of the
/// thread count.
pub fn run_mc(
    scn: &Scenario,
    theta_true: &ParamVector,
    n_windows: usize,
    k_trials: usize,
    cfg: &ScoringConfig,
    master_seed: u64,
    mode: McMode,
) -> Result<McReport> {
    if k_trials < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 trials for an error estimate, got {k_trials}"
        )));
    }
    let estimates: Vec<Option<Vec<f64>>> = (0..k_trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(scn, theta_true, n_windows, master_seed, trial, cfg, mode).ok())
        .collect();
    McReport::from_estimates(theta_true, estimates, master_seed, mode)
}

fn run_trial(
    scn: &Scenario,
    theta_true: &ParamVector,
    n_windows: usize,
    master_seed: u64,
    trial: u64,
    cfg: &ScoringConfig,
    mode: McMode,
) -> Result<Vec<f64>> {
    let batch = TrialBatch::generate(scn, theta_true, n_windows, master_seed, trial, mode)?;
    let traj = match &batch.data {
        TrialData::Quantized(_) => {
            let mu = batch.mu_emp.as_ref().expect("quantized batch carries mu");
            estimate_quant_from_mean(scn, mu, cfg)?
        }
        TrialData::Ideal(y) => estimate_ideal(scn, y, theta_true.theta_noise(), cfg)?,
    };
    Ok(traj.final_estimate().to_vec())
}

/// Write per-trial estimates as CSV (columns trial, theta_hat_1 …
/// theta_hat_D), skipping failed trials. The file appears atomically.
pub fn write_trials_csv(report: &McReport, path: &Path) -> Result<()> {
    let d = report.sigma_hat.len();
    let mut out = String::new();
    out.push_str("trial");
    for a in 1..=d {
        out.push_str(&format!(",theta_hat_{a}"));
    }
    out.push('\n');
    for (trial, est) in report.estimates.iter().enumerate() {
        if let Some(est) = est {
            out.push_str(&trial.to_string());
            for v in est {
                out.push_str(&format!(",{:.8e}", v));
            }
            out.push('\n');
        }
    }

    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = dir.unwrap_or_else(|| Path::new(".")).join(format!(
        ".{}.tmp",
        path.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("trials.csv")
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(out.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
