//! Sign-moments of zero-mean Gaussian vectors.
//!
//! The arcsine law covers pairs, the classical closed form covers triples,
//! and quadrivariate orthant probabilities computed by Plackett reduction
//! cover the fourth moments E[sgn(y_a) sgn(y_b) sgn(y_c) sgn(y_d)].
//!
//! Plackett reduction: along the linear path ρ(t) = t·ρ from independence,
//! dP4/dρ_ab = φ2(0,0;ρ_ab) · Φ2(0,0;ρ_cond) where (c,d) are the two
//! coordinates not in the pair and ρ_cond is their conditional correlation
//! given the pair. Both factors are closed-form at the orthant point, so a
//! single adaptive 1-D quadrature yields P4.

use nalgebra::{Matrix3, Matrix4, Vector4};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::quad::adaptive_gk15;
use crate::rng::{standard_normal_pair, stream_rng};

/// Largest correlation magnitude fed to arcsine/derivative formulas.
pub const CORR_CLAMP: f64 = 1.0 - 1e-12;

/// Tolerance on the smallest eigenvalue of a correlation matrix.
const PSD_TOL: f64 = -1e-10;

/// Absolute tolerance of one orthant quadrature.
const ORTHANT_TOL: f64 = 1e-9;

/// Hard cap on integrand evaluations per orthant quadrature.
const ORTHANT_BUDGET: usize = 2048;

/// Pairs (a, b), a < b, of 4 coordinates in the order the 6 correlations are
/// stored: (ρ_01, ρ_02, ρ_03, ρ_12, ρ_13, ρ_23).
const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// For pair p = (a, b) with complement (c, d): positions in the ρ vector of
/// (u, v, w, x, q) = (ρ_ca, ρ_cb, ρ_da, ρ_db, ρ_cd).
const UVWXQ: [[usize; 5]; 6] = [
    [1, 3, 2, 4, 5],
    [0, 3, 2, 5, 4],
    [0, 4, 1, 5, 3],
    [0, 1, 4, 5, 2],
    [0, 2, 3, 5, 1],
    [1, 2, 3, 4, 0],
];

/// The 6 pairwise correlations of 4 selected coordinates, validated to form
/// a positive-semidefinite correlation matrix.
///
/// Entries are clamped to |ρ| ≤ 1 − 1e-12 on construction to guard the
/// 1/√(1−ρ²) singularity in downstream formulas; with a positive noise floor
/// the model never produces correlations at ±1, so the clamp is inert in
/// normal operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrSubset {
    rho: [f64; 6],
}

impl CorrSubset {
    /// Validates and stores correlations given in the order
    /// (ρ_01, ρ_02, ρ_03, ρ_12, ρ_13, ρ_23).
    pub fn new(rho: [f64; 6]) -> Result<Self> {
        let mut clamped = [0.0; 6];
        for (i, &v) in rho.iter().enumerate() {
            if !(v.abs() <= 1.0) {
                return Err(Error::CorrelationOutOfRange { value: v });
            }
            clamped[i] = v.clamp(-CORR_CLAMP, CORR_CLAMP);
        }
        let m = corr_matrix4(&clamped);
        let min_eig = m
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < PSD_TOL {
            return Err(Error::IndefiniteCorrelation { min_eig });
        }
        Ok(Self { rho: clamped })
    }

    /// Stored (clamped) correlations in layout order.
    pub fn rho(&self) -> &[f64; 6] {
        &self.rho
    }
}

fn corr_matrix4(rho: &[f64; 6]) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    for (p, &(a, b)) in PAIRS.iter().enumerate() {
        m[(a, b)] = rho[p];
        m[(b, a)] = rho[p];
    }
    m
}

/// E[sgn(y_a) sgn(y_b)] = (2/π) arcsin(ρ) for a unit-variance Gaussian pair.
pub fn arcsine_pair(rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::CorrelationOutOfRange { value: rho });
    }
    Ok(2.0 / PI * rho.asin())
}

/// Trivariate orthant probability P(y_1>0, y_2>0, y_3>0), closed form.
pub fn orthant3(rho12: f64, rho13: f64, rho23: f64) -> Result<f64> {
    for &r in &[rho12, rho13, rho23] {
        if !(r.abs() <= 1.0) {
            return Err(Error::CorrelationOutOfRange { value: r });
        }
    }
    let m = Matrix3::new(1.0, rho12, rho13, rho12, 1.0, rho23, rho13, rho23, 1.0);
    let min_eig = m
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if min_eig < PSD_TOL {
        return Err(Error::IndefiniteCorrelation { min_eig });
    }
    Ok(0.125 + (rho12.asin() + rho13.asin() + rho23.asin()) / (4.0 * PI))
}

/// dP4/dt at path point ρ(t) = t·ρ, summed over the six pair derivatives.
fn plackett_integrand(rho: &[f64; 6], t: f64) -> f64 {
    let mut total = 0.0;
    for p in 0..6 {
        let r0 = rho[p];
        if r0 == 0.0 {
            continue;
        }
        let r = t * r0;
        let idx = &UVWXQ[p];
        let u = t * rho[idx[0]];
        let v = t * rho[idx[1]];
        let w = t * rho[idx[2]];
        let x = t * rho[idx[3]];
        let q = t * rho[idx[4]];
        let om = 1.0 - r * r;
        let s11 = 1.0 - (u * u + v * v - 2.0 * r * u * v) / om;
        let s22 = 1.0 - (w * w + x * x - 2.0 * r * w * x) / om;
        let s12 = q - (u * w + v * x - r * (u * x + v * w)) / om;
        let den = s11 * s22;
        let rc = if den <= 0.0 {
            // conditional variance collapsed; the correlation saturates
            if s12 == 0.0 {
                0.0
            } else {
                s12.signum()
            }
        } else {
            (s12 / den.sqrt()).clamp(-1.0, 1.0)
        };
        total += r0 / (TAU * om.sqrt()) * (0.25 + rc.asin() / TAU);
    }
    total
}

fn orthant4_raw(rho: &[f64; 6]) -> Result<f64> {
    if rho.iter().all(|&r| r == 0.0) {
        return Ok(0.0625);
    }
    let q = adaptive_gk15(
        |t| plackett_integrand(rho, t),
        0.0,
        1.0,
        ORTHANT_TOL,
        ORTHANT_BUDGET,
    )?;
    Ok(0.0625 + q.value)
}

/// Quadrivariate orthant probability P(y_1>0, y_2>0, y_3>0, y_4>0).
pub fn orthant4(c: &CorrSubset) -> Result<f64> {
    orthant4_raw(c.rho())
}

/// E[sgn(y_1) sgn(y_2) sgn(y_3) sgn(y_4)] for 4 distinct coordinates.
///
/// Sums (∏ s)·P(s ⊙ y > 0) over the 8 sign patterns with s_1 = +1 and
/// doubles, exploiting the central symmetry P(s) = P(−s). Repeated
/// coordinates must be reduced by the caller via z² = 1 before reaching
/// this operation.
pub fn sign_moment4(c: &CorrSubset) -> Result<f64> {
    let rho = c.rho();
    let mut acc = 0.0;
    for bits in 0u32..8 {
        let mut s = [1.0f64; 4];
        let mut parity = 1.0;
        for k in 0..3 {
            if bits >> k & 1 == 1 {
                s[k + 1] = -1.0;
                parity = -parity;
            }
        }
        let mut flipped = [0.0; 6];
        for (p, &(a, b)) in PAIRS.iter().enumerate() {
            flipped[p] = s[a] * s[b] * rho[p];
        }
        acc += parity * orthant4_raw(&flipped)?;
    }
    Ok(2.0 * acc)
}

/// Plain Monte-Carlo estimate of the fourth sign-moment with its standard
/// error, via Cholesky-factorized sampling. Deterministic for a fixed seed.
pub fn mc_sign_moment_oracle(c: &CorrSubset, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    if n_samples < 10_000 {
        return Err(Error::InvalidInput(format!(
            "oracle needs at least 10000 samples, got {n_samples}"
        )));
    }
    let m = corr_matrix4(c.rho());
    let chol = match m.cholesky() {
        Some(ch) => ch,
        None => (m + Matrix4::identity() * 1e-12)
            .cholesky()
            .ok_or_else(|| {
                Error::Factorization("correlation matrix is numerically singular".into())
            })?,
    };
    let l = chol.l();
    let mut rng = stream_rng(seed, 0);
    let mut sum: i64 = 0;
    for _ in 0..n_samples {
        let (z0, z1) = standard_normal_pair(&mut rng);
        let (z2, z3) = standard_normal_pair(&mut rng);
        let y = l * Vector4::new(z0, z1, z2, z3);
        let mut prod: i64 = 1;
        for k in 0..4 {
            if y[k] < 0.0 {
                prod = -prod;
            }
        }
        sum += prod;
    }
    let n = n_samples as f64;
    let est = sum as f64 / n;
    let se = ((1.0 - est * est).max(0.0) / n).sqrt();
    Ok((est, se))
}
