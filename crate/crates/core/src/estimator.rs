//! Fisher-scoring estimators of the source powers.
//!
//! The quantized estimator scores the auxiliary quadratic statistics of the
//! hard-limited data: Δθ̂ = F̃_z(θ̂)⁻¹ Jᵀ R_φ̃⁻¹ (μ̂ − μ_φ̃(θ̂)). The ideal
//! estimator scores the Gaussian likelihood of the unquantized windows
//! through their empirical second moment. Both run a fixed iteration count
//! with a positivity floor and no step damping; a singular Fisher matrix
//! aborts the run with the offending iterate attached.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::auxstats::{factor_cov, jac_mean_stats, mean_stats, AuxMoments};
use crate::data::{BinaryWindows, RealWindows};
use crate::error::{Error, Result};
use crate::infometrics::dry_dtheta;
use crate::model::{build_ry, ParamVector, Scenario};

/// Fisher-scoring run configuration.
#[derive(Debug, Clone)]
pub struct ScoringConfig {
    /// Iteration count I; the trajectory has I + 1 entries.
    pub iterations: usize,
    /// Initial iterate θ̂⁽⁰⁾; defaults to the floor in every coordinate.
    pub theta_init: Option<Vec<f64>>,
    /// Positivity floor θ_Δ applied coordinatewise after every step.
    pub theta_floor: f64,
    /// Emit per-iteration debug logs.
    pub log_convergence: bool,
    /// Reuse R_φ̃ from θ̂⁽⁰⁾ for all later iterations, skipping the
    /// quadrivariate moment assembly there. Speed option only; leave off
    /// when the full conservative update is wanted.
    pub freeze_cov: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            theta_init: None,
            theta_floor: 1e-3,
            log_convergence: false,
            freeze_cov: false,
        }
    }
}

impl ScoringConfig {
    fn validate(&self, d: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidInput("need at least one iteration".into()));
        }
        if !(self.theta_floor > 0.0 && self.theta_floor.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "theta floor must be positive and finite, got {}",
                self.theta_floor
            )));
        }
        if let Some(init) = &self.theta_init {
            if init.len() != d {
                return Err(Error::InvalidInput(format!(
                    "{} initial powers for D = {d}",
                    init.len()
                )));
            }
            if !init.iter().all(|&v| v.is_finite() && v >= self.theta_floor) {
                return Err(Error::InvalidInput(
                    "initial powers must be finite and at least the floor".into(),
                ));
            }
        }
        Ok(())
    }

    fn initial(&self, d: usize) -> Vec<f64> {
        self.theta_init
            .clone()
            .unwrap_or_else(|| vec![self.theta_floor; d])
    }
}

/// Iterates θ̂⁽⁰⁾ … θ̂⁽ᴵ⁾ of one scoring run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_estimate(&self) -> &[f64] {
        self.iterates.last().expect("trajectory is never empty")
    }
}

fn check_mu_emp(mu_emp: &DVector<f64>, m: usize) -> Result<()> {
    let expect = m * (m - 1) / 2;
    if mu_emp.len() != expect {
        return Err(Error::InvalidInput(format!(
            "{} reduced statistics for M = {m} (want {expect})",
            mu_emp.len()
        )));
    }
    if !mu_emp.iter().all(|&v| (-1.0..=1.0).contains(&v)) {
        return Err(Error::InvalidInput(
            "empirical reduced statistics must lie in [-1, 1]".into(),
        ));
    }
    Ok(())
}

fn solve_step(
    jac: &DMatrix<f64>,
    cov_chol: &Cholesky<f64, Dyn>,
    residual: &DVector<f64>,
    theta_hat: &ParamVector,
) -> Result<DVector<f64>> {
    let x = cov_chol.solve(jac);
    let f = {
        let raw = jac.transpose() * &x;
        (&raw + raw.transpose()) * 0.5
    };
    let rhs = x.transpose() * residual;
    let chol = f.cholesky().ok_or_else(|| Error::SingularFisher {
        theta: {
            let mut v = theta_hat.theta_src().to_vec();
            v.push(theta_hat.theta_noise());
            v
        },
    })?;
    Ok(chol.solve(&rhs))
}

/// One quantized scoring step Δθ̂ at θ̂, before flooring.
pub fn scoring_step_quant(
    scn: &Scenario,
    theta_hat: &ParamVector,
    mu_emp: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_mu_emp(mu_emp, scn.m())?;
    let aux = AuxMoments::build(scn, theta_hat)?;
    let chol = factor_cov(&aux.cov)?;
    solve_step(&aux.jac, &chol, &(mu_emp - &aux.mu), theta_hat)
}

/// Quantized scoring run from a precomputed empirical mean μ̂.
pub fn estimate_quant_from_mean(
    scn: &Scenario,
    mu_emp: &DVector<f64>,
    cfg: &ScoringConfig,
) -> Result<Trajectory> {
    cfg.validate(scn.d())?;
    check_mu_emp(mu_emp, scn.m())?;

    let mut theta = cfg.initial(scn.d());
    let mut iterates = vec![theta.clone()];
    let mut frozen: Option<Cholesky<f64, Dyn>> = None;

    for it in 0..cfg.iterations {
        let p = ParamVector::new(theta.clone(), 1.0)?;
        let chol = match (&frozen, cfg.freeze_cov) {
            (Some(c), true) => c.clone(),
            _ => {
                let aux = AuxMoments::build(scn, &p)?;
                let c = factor_cov(&aux.cov)?;
                if cfg.freeze_cov {
                    frozen = Some(c.clone());
                }
                c
            }
        };
        let mu = mean_stats(scn, &p)?;
        let jac = jac_mean_stats(scn, &p)?;
        let delta = solve_step(&jac, &chol, &(mu_emp - &mu), &p)?;
        for (t, d) in theta.iter_mut().zip(delta.iter()) {
            *t = (*t + d).max(cfg.theta_floor);
        }
        if cfg.log_convergence {
            log::debug!(
                "scoring iter {}: theta = {:?}, step = {:?}",
                it + 1,
                theta,
                delta.as_slice()
            );
        }
        iterates.push(theta.clone());
    }
    Ok(Trajectory { iterates })
}

/// Quantized scoring run on hard-limited windows. The empirical mean μ̂ is
/// accumulated once, exactly, in window order.
pub fn estimate_quant(
    scn: &Scenario,
    z: &BinaryWindows,
    cfg: &ScoringConfig,
) -> Result<Trajectory> {
    if z.m() != scn.m() {
        return Err(Error::InvalidInput(format!(
            "windows of M = {} for scenario with M = {}",
            z.m(),
            scn.m()
        )));
    }
    estimate_quant_from_mean(scn, &z.empirical_mean_stats(), cfg)
}

/// Ideal-receiver scoring run from a precomputed second moment Ŝ. Ŝ is never
/// factorized, so indefinite empirical moments are fine.
pub fn estimate_ideal_from_moment(
    scn: &Scenario,
    s_hat: &DMatrix<f64>,
    theta_noise: f64,
    cfg: &ScoringConfig,
) -> Result<Trajectory> {
    cfg.validate(scn.d())?;
    if s_hat.nrows() != scn.m() || s_hat.ncols() != scn.m() {
        return Err(Error::InvalidInput(format!(
            "{}x{} second moment for M = {}",
            s_hat.nrows(),
            s_hat.ncols(),
            scn.m()
        )));
    }
    if !(theta_noise > 0.0 && theta_noise.is_finite()) {
        return Err(Error::NonPositivePower);
    }

    let derivs: Vec<DMatrix<f64>> = (0..scn.d())
        .map(|d| dry_dtheta(scn, d))
        .collect::<Result<_>>()?;

    let mut theta = cfg.initial(scn.d());
    let mut iterates = vec![theta.clone()];

    for it in 0..cfg.iterations {
        let p = ParamVector::new(theta.clone(), theta_noise)?;
        let ry = build_ry(scn, &p)?;
        let chol = factor_cov(&ry)?;
        let solved: Vec<DMatrix<f64>> = derivs.iter().map(|dr| chol.solve(dr)).collect();
        let u = chol.solve(s_hat);

        // per-window score s_a = ½[tr(T_a R⁻¹Ŝ) − tr(T_a)], T_a = R⁻¹∂R_a
        let score = DVector::from_iterator(
            scn.d(),
            solved
                .iter()
                .map(|t| 0.5 * (t.component_mul(&u.transpose()).sum() - t.trace())),
        );
        let mut f = DMatrix::zeros(scn.d(), scn.d());
        for a in 0..scn.d() {
            for b in a..scn.d() {
                let v = 0.5 * solved[a].component_mul(&solved[b].transpose()).sum();
                f[(a, b)] = v;
                f[(b, a)] = v;
            }
        }
        let fchol = f.cholesky().ok_or_else(|| Error::SingularFisher {
            theta: {
                let mut v = theta.clone();
                v.push(theta_noise);
                v
            },
        })?;
        let delta = fchol.solve(&score);
        for (t, d) in theta.iter_mut().zip(delta.iter()) {
            *t = (*t + d).max(cfg.theta_floor);
        }
        if cfg.log_convergence {
            log::debug!(
                "ideal iter {}: theta = {:?}, step = {:?}",
                it + 1,
                theta,
                delta.as_slice()
            );
        }
        iterates.push(theta.clone());
    }
    Ok(Trajectory { iterates })
}

/// Ideal-receiver scoring run on real-valued windows, θ_0 known.
pub fn estimate_ideal(
    scn: &Scenario,
    y: &RealWindows,
    theta_noise: f64,
    cfg: &ScoringConfig,
) -> Result<Trajectory> {
    if y.m() != scn.m() {
        return Err(Error::InvalidInput(format!(
            "windows of M = {} for scenario with M = {}",
            y.m(),
            scn.m()
        )));
    }
    estimate_ideal_from_moment(scn, &y.second_moment(), theta_noise, cfg)
}
