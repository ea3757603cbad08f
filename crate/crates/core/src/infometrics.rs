//! Fisher information of the quantized and ideal receivers, the
//! per-parameter information loss of hard-limiting, and analytic
//! uncertainty predictions.
//!
//! The quantized receiver is scored conservatively through the auxiliary
//! quadratic statistics: F̃_z = Jᵀ R_φ̃⁻¹ J with J = ∂μ_φ̃/∂θ. The ideal
//! receiver uses the standard zero-mean Gaussian Fisher matrix
//! [F_y]_ab = ½ tr(R_y⁻¹ ∂R_y/∂θ_a · R_y⁻¹ ∂R_y/∂θ_b) per window, with the
//! noise power treated as known.

use nalgebra::{DMatrix, DVector};

use crate::auxstats::{factor_cov, AuxMoments, FourthMomentTable};
use crate::error::{Error, Result};
use crate::model::{
    build_mixing, build_noise_corr, build_ry, build_source_corr, ParamVector, Scenario,
};

fn full_theta(theta: &ParamVector) -> Vec<f64> {
    let mut v = theta.theta_src().to_vec();
    v.push(theta.theta_noise());
    v
}

/// F̃_z from preassembled moments, via a symmetric solve against R_φ̃.
pub fn fisher_quantized_from_moments(aux: &AuxMoments) -> Result<DMatrix<f64>> {
    let chol = factor_cov(&aux.cov)?;
    let x = chol.solve(&aux.jac);
    let f = aux.jac.transpose() * x;
    Ok((&f + f.transpose()) * 0.5)
}

/// Conservative quantized-receiver Fisher matrix
/// F̃_z(θ) = (∂μ_φ̃/∂θ)ᵀ R_φ̃⁻¹ (∂μ_φ̃/∂θ), per window.
pub fn fisher_quantized(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    fisher_quantized_from_moments(&AuxMoments::build(scn, theta)?)
}

/// ∂R_y/∂θ_d = Ω̄_d Σ_d ⊙ W_d (R_y is linear in θ).
pub(crate) fn dry_dtheta(scn: &Scenario, d: usize) -> Result<DMatrix<f64>> {
    Ok(build_source_corr(scn, d)?.component_mul(&build_mixing(scn, d)?) * scn.bandwidth_bar()[d])
}

fn fisher_from_derivs(ry: &DMatrix<f64>, derivs: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let chol = factor_cov(ry)?;
    let solved: Vec<DMatrix<f64>> = derivs.iter().map(|dr| chol.solve(dr)).collect();
    let p = derivs.len();
    let mut f = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            // tr(S_a S_b) as the inner product of S_a with S_bᵀ
            let v = 0.5 * solved[a].component_mul(&solved[b].transpose()).sum();
            f[(a, b)] = v;
            f[(b, a)] = v;
        }
    }
    Ok(f)
}

/// Ideal-receiver Fisher matrix over the D source powers, θ_0 known.
pub fn fisher_ideal(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    let ry = build_ry(scn, theta)?;
    let derivs: Vec<DMatrix<f64>> = (0..scn.d())
        .map(|d| dry_dtheta(scn, d))
        .collect::<Result<_>>()?;
    fisher_from_derivs(&ry, &derivs)
}

/// Ideal-receiver Fisher matrix with θ_0 estimated jointly:
/// (D+1)×(D+1) over [θ_1 … θ_D, θ_0]. Not used for the loss measure, which
/// compares the D-parameter problems.
pub fn fisher_ideal_joint(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    let ry = build_ry(scn, theta)?;
    let mut derivs: Vec<DMatrix<f64>> = (0..scn.d())
        .map(|d| dry_dtheta(scn, d))
        .collect::<Result<_>>()?;
    derivs.push(build_noise_corr(scn));
    fisher_from_derivs(&ry, &derivs)
}

/// Diagonal of F⁻¹ via solves against the Cholesky factor.
fn inverse_diagonal(f: &DMatrix<f64>, theta: &ParamVector) -> Result<Vec<f64>> {
    let d = f.nrows();
    let chol = f.clone().cholesky().ok_or_else(|| Error::SingularFisher {
        theta: full_theta(theta),
    })?;
    let mut diag = Vec::with_capacity(d);
    for a in 0..d {
        let e = DVector::from_fn(d, |i, _| if i == a { 1.0 } else { 0.0 });
        diag.push(chol.solve(&e)[a]);
    }
    Ok(diag)
}

fn loss_from_pair(
    f_quant: &DMatrix<f64>,
    f_ideal: &DMatrix<f64>,
    theta: &ParamVector,
) -> Result<Vec<f64>> {
    let inv_q = inverse_diagonal(f_quant, theta)?;
    let inv_i = inverse_diagonal(f_ideal, theta)?;
    Ok(inv_i.iter().zip(&inv_q).map(|(i, q)| i / q).collect())
}

/// Information loss χ_d = [F_y⁻¹]_dd / [F̃_z⁻¹]_dd, one linear ratio per
/// source power.
pub fn info_loss(scn: &Scenario, theta: &ParamVector) -> Result<Vec<f64>> {
    let fq = fisher_quantized(scn, theta)?;
    let fy = fisher_ideal(scn, theta)?;
    loss_from_pair(&fq, &fy, theta)
}

/// Power-style dB of a loss (or any positive ratio) vector.
pub fn loss_db(loss: &[f64]) -> Vec<f64> {
    loss.iter().map(|&x| 10.0 * x.log10()).collect()
}

/// Predicted relative uncertainty (1/θ_d)·√([F⁻¹]_dd / N) from a
/// per-window Fisher matrix and N windows.
pub fn predict_sigma(fisher: &DMatrix<f64>, theta: &ParamVector, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one window".into()));
    }
    if fisher.nrows() != theta.d() {
        return Err(Error::InvalidInput(format!(
            "{}x{} Fisher matrix for {} source powers",
            fisher.nrows(),
            fisher.ncols(),
            theta.d()
        )));
    }
    let inv = inverse_diagonal(fisher, theta)?;
    Ok(inv
        .iter()
        .zip(theta.theta_src())
        .map(|(v, t)| (v / n as f64).sqrt() / t)
        .collect())
}

/// Fisher matrices, loss, and analytic uncertainty predictions at one θ.
#[derive(Debug, Clone)]
pub struct FisherReport {
    /// Conservative quantized Fisher matrix F̃_z(θ), per window.
    pub f_quant: DMatrix<f64>,
    /// Ideal-receiver Fisher matrix F_y(θ), per window, θ_0 known.
    pub f_ideal: DMatrix<f64>,
    /// Information loss χ_d, linear.
    pub loss: Vec<f64>,
    /// Information loss in dB, 10·log10 χ_d.
    pub loss_db: Vec<f64>,
    /// Predicted relative uncertainty of the quantized receiver.
    pub crb_sigma_quant: Vec<f64>,
    /// Predicted relative uncertainty of the ideal receiver.
    pub crb_sigma_ideal: Vec<f64>,
}

impl FisherReport {
    /// Full report at (scenario, θ) for N windows.
    pub fn build(scn: &Scenario, theta: &ParamVector, n: usize) -> Result<Self> {
        let aux = AuxMoments::build(scn, theta)?;
        Self::from_moments(scn, theta, n, &aux)
    }

    /// Full report reusing a fourth-moment table for the same (scenario, θ).
    pub fn build_with_table(
        scn: &Scenario,
        theta: &ParamVector,
        n: usize,
        table: &FourthMomentTable,
    ) -> Result<Self> {
        let aux = AuxMoments::build_with_table(scn, theta, table)?;
        Self::from_moments(scn, theta, n, &aux)
    }

    fn from_moments(
        scn: &Scenario,
        theta: &ParamVector,
        n: usize,
        aux: &AuxMoments,
    ) -> Result<Self> {
        let f_quant = fisher_quantized_from_moments(aux)?;
        let f_ideal = fisher_ideal(scn, theta)?;
        let loss = loss_from_pair(&f_quant, &f_ideal, theta)?;
        let ldb = loss_db(&loss);
        let crb_sigma_quant = predict_sigma(&f_quant, theta, n)?;
        let crb_sigma_ideal = predict_sigma(&f_ideal, theta, n)?;
        Ok(Self {
            f_quant,
            f_ideal,
            loss,
            loss_db: ldb,
            crb_sigma_quant,
            crb_sigma_ideal,
        })
    }
}
