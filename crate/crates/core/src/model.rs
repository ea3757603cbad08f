//! Scenario description and deterministic covariance model.
//!
//! All frequencies are stored as dimensionless ratios to the noise band edge
//! Ω_0. Internally Ω_0 = π, so the shared spectral factor Ω_0/π equals 1 and
//! every downstream quantity (which depends only on frequency ratios) is
//! exact. Matrices are Toeplitz in the lag i−j and built from lag kernels.

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Normalized sinc, sin(πx)/(πx) with sinc(0) = 1.
pub(crate) fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Static description of the band-limited sources, the noise band, and the
/// sampling window.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    omega_bar: Vec<f64>,
    bandwidth_bar: Vec<f64>,
    sampler_ratio: f64,
    m: usize,
}

impl Scenario {
    /// Validates dimensionless center frequencies ω̄_d ∈ [0, 1],
    /// half-bandwidths Ω̄_d ∈ (0, 1], sampler ratio (fixed to 1), and window
    /// length M ≥ 2.
    pub fn new(
        omega_bar: Vec<f64>,
        bandwidth_bar: Vec<f64>,
        sampler_ratio: f64,
        m: usize,
    ) -> Result<Self> {
        if omega_bar.is_empty() {
            return Err(Error::InvalidScenario("need at least one source".into()));
        }
        if omega_bar.len() != bandwidth_bar.len() {
            return Err(Error::InvalidScenario(format!(
                "{} center frequencies but {} bandwidths",
                omega_bar.len(),
                bandwidth_bar.len()
            )));
        }
        for (d, &w) in omega_bar.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidScenario(format!(
                    "omega_bar[{d}] = {w} outside [0, 1]"
                )));
            }
        }
        for (d, &b) in bandwidth_bar.iter().enumerate() {
            if !(b > 0.0 && b <= 1.0) {
                return Err(Error::InvalidScenario(format!(
                    "bandwidth_bar[{d}] = {b} outside (0, 1]"
                )));
            }
        }
        if sampler_ratio != 1.0 {
            return Err(Error::InvalidScenario(format!(
                "sampler_ratio = {sampler_ratio}; oversampling is out of scope, only 1 is supported"
            )));
        }
        if m < 2 {
            return Err(Error::InvalidScenario(format!(
                "window length M = {m} too short, need M >= 2"
            )));
        }
        Ok(Self {
            omega_bar,
            bandwidth_bar,
            sampler_ratio,
            m,
        })
    }

    /// Source count D.
    pub fn d(&self) -> usize {
        self.omega_bar.len()
    }

    /// Samples per window M.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn omega_bar(&self) -> &[f64] {
        &self.omega_bar
    }

    pub fn bandwidth_bar(&self) -> &[f64] {
        &self.bandwidth_bar
    }

    pub fn sampler_ratio(&self) -> f64 {
        self.sampler_ratio
    }

    fn check_source(&self, d: usize) -> Result<()> {
        if d >= self.d() {
            Err(Error::SourceIndexOutOfRange {
                index: d,
                count: self.d(),
            })
        } else {
            Ok(())
        }
    }
}

/// Spectral power levels θ = [θ_1 … θ_D, θ_0], strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    theta_src: Vec<f64>,
    theta_noise: f64,
}

/// Power-style dB to linear conversion, θ = 10^(dB/10).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear to power-style dB, 10·log10(θ).
pub fn linear_to_db(theta: f64) -> f64 {
    10.0 * theta.log10()
}

impl ParamVector {
    pub fn new(theta_src: Vec<f64>, theta_noise: f64) -> Result<Self> {
        for &t in theta_src.iter().chain(std::iter::once(&theta_noise)) {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::NonPositivePower);
            }
        }
        Ok(Self {
            theta_src,
            theta_noise,
        })
    }

    /// Source powers from dB values, with the noise power fixed to 1.
    pub fn from_src_db(src_db: &[f64]) -> Result<Self> {
        Self::new(src_db.iter().copied().map(db_to_linear).collect(), 1.0)
    }

    pub fn d(&self) -> usize {
        self.theta_src.len()
    }

    pub fn theta_src(&self) -> &[f64] {
        &self.theta_src
    }

    pub fn theta_noise(&self) -> f64 {
        self.theta_noise
    }

    /// Source powers in dB.
    pub fn src_db(&self) -> Vec<f64> {
        self.theta_src.iter().copied().map(linear_to_db).collect()
    }
}

/// Builds the lag-kernel Toeplitz matrix kernel[|i−j|].
fn toeplitz(m: usize, kernel: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let values: Vec<f64> = (0..m).map(kernel).collect();
    DMatrix::from_fn(m, m, |i, j| values[i.abs_diff(j)])
}

/// Source band correlation Σ_d with entries sinc(Ω̄_d·|i−j|) at
/// sampler_ratio = 1.
pub fn build_source_corr(scn: &Scenario, d: usize) -> Result<DMatrix<f64>> {
    scn.check_source(d)?;
    let bw = scn.bandwidth_bar[d] / scn.sampler_ratio;
    Ok(toeplitz(scn.m, |lag| sinc(bw * lag as f64)))
}

/// Mixing matrix W_d with entries cos(ω̄_d·π·(i−j)) at sampler_ratio = 1
/// (trig collapse of the raw two-term cos·cos + sin·sin form).
pub fn build_mixing(scn: &Scenario, d: usize) -> Result<DMatrix<f64>> {
    scn.check_source(d)?;
    let w = scn.omega_bar[d] / scn.sampler_ratio;
    Ok(toeplitz(scn.m, |lag| (w * PI * lag as f64).cos()))
}

/// Noise band correlation Σ_0 with entries sinc(|i−j| / sampler_ratio);
/// the identity (up to sinc rounding) at Nyquist spacing.
pub fn build_noise_corr(scn: &Scenario) -> DMatrix<f64> {
    let inv = 1.0 / scn.sampler_ratio;
    toeplitz(scn.m, |lag| sinc(inv * lag as f64))
}

/// Shared unit-diagonal value of R_y: Σ_d θ_d Ω̄_d + θ_0 (with Ω_0/π = 1).
fn ry_diagonal(scn: &Scenario, theta: &ParamVector) -> f64 {
    theta
        .theta_src
        .iter()
        .zip(&scn.bandwidth_bar)
        .map(|(t, b)| t * b)
        .sum::<f64>()
        + theta.theta_noise
}

/// Received-signal covariance R_y(θ) = Σ_d θ_d Ω̄_d Σ_d ⊙ W_d + θ_0 Σ_0.
pub fn build_ry(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    check_dims(scn, theta)?;
    let mut ry = build_noise_corr(scn) * theta.theta_noise;
    for d in 0..scn.d() {
        let a = build_source_corr(scn, d)?.component_mul(&build_mixing(scn, d)?);
        ry += a * (theta.theta_src[d] * scn.bandwidth_bar[d]);
    }
    Ok(ry)
}

/// Correlation matrix Σ_y(θ) = R_y(θ) normalized by its shared diagonal.
pub fn build_sigma_y(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    let mut s = build_ry(scn, theta)? / ry_diagonal(scn, theta);
    s.fill_diagonal(1.0);
    Ok(s)
}

/// ∂Σ_y/∂θ_d = Ω̄_d (Σ_d ⊙ W_d − Σ_y) / (Σ_d' θ_d' Ω̄_d' + 1) in the
/// quantized-domain parameterization, which fixes θ_0 = 1.
pub fn dsigma_y_dtheta(scn: &Scenario, theta: &ParamVector, d: usize) -> Result<DMatrix<f64>> {
    if theta.theta_noise != 1.0 {
        return Err(Error::InvalidInput(format!(
            "quantized-domain derivative requires theta_0 = 1, got {}",
            theta.theta_noise
        )));
    }
    check_dims(scn, theta)?;
    scn.check_source(d)?;
    Ok(dsigma_general(scn, theta, &build_sigma_y(scn, theta)?, d))
}

/// Derivative at general θ_0 (quotient rule on the shared normalizer).
fn dsigma_general(
    scn: &Scenario,
    theta: &ParamVector,
    sigma_y: &DMatrix<f64>,
    d: usize,
) -> DMatrix<f64> {
    let a = build_source_corr(scn, d)
        .expect("index checked")
        .component_mul(&build_mixing(scn, d).expect("index checked"));
    let mut ds = (a - sigma_y) * (scn.bandwidth_bar[d] / ry_diagonal(scn, theta));
    ds.fill_diagonal(0.0);
    ds
}

fn check_dims(scn: &Scenario, theta: &ParamVector) -> Result<()> {
    if scn.d() != theta.d() {
        return Err(Error::InvalidInput(format!(
            "scenario has {} sources but theta has {}",
            scn.d(),
            theta.d()
        )));
    }
    Ok(())
}

/// All deterministic matrices of a (scenario, θ) pair.
#[derive(Debug, Clone)]
pub struct ModelMatrices {
    pub sigma_src: Vec<DMatrix<f64>>,
    pub mixing: Vec<DMatrix<f64>>,
    pub sigma_noise: DMatrix<f64>,
    pub ry: DMatrix<f64>,
    pub sigma_y: DMatrix<f64>,
    pub dsigma_y: Vec<DMatrix<f64>>,
}

impl ModelMatrices {
    pub fn build(scn: &Scenario, theta: &ParamVector) -> Result<Self> {
        check_dims(scn, theta)?;
        let sigma_src: Vec<_> = (0..scn.d())
            .map(|d| build_source_corr(scn, d))
            .collect::<Result<_>>()?;
        let mixing: Vec<_> = (0..scn.d())
            .map(|d| build_mixing(scn, d))
            .collect::<Result<_>>()?;
        let sigma_noise = build_noise_corr(scn);
        let ry = build_ry(scn, theta)?;
        let sigma_y = build_sigma_y(scn, theta)?;
        let dsigma_y = (0..scn.d())
            .map(|d| dsigma_general(scn, theta, &sigma_y, d))
            .collect();
        Ok(Self {
            sigma_src,
            mixing,
            sigma_noise,
            ry,
            sigma_y,
            dsigma_y,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    pub(crate) fn narrowband_pair(m: usize) -> Scenario {
        Scenario::new(vec![0.25, 0.75], vec![1.0 / 64.0, 1.0 / 64.0], 1.0, m).unwrap()
    }

    fn unit_theta(d: usize) -> ParamVector {
        ParamVector::new(vec![1.0; d], 1.0).unwrap()
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::new(vec![0.5], vec![0.25], 1.0, 8).is_ok());
        assert!(Scenario::new(vec![], vec![], 1.0, 8).is_err());
        assert!(Scenario::new(vec![0.5], vec![0.25, 0.1], 1.0, 8).is_err());
        assert!(Scenario::new(vec![1.5], vec![0.25], 1.0, 8).is_err());
        assert!(Scenario::new(vec![0.5], vec![0.0], 1.0, 8).is_err());
        assert!(Scenario::new(vec![0.5], vec![1.5], 1.0, 8).is_err());
        assert!(Scenario::new(vec![0.5], vec![0.25], 2.0, 8).is_err());
        assert!(Scenario::new(vec![0.5], vec![0.25], 1.0, 1).is_err());
    }

    #[test]
    fn param_vector_validation_and_db() {
        assert!(ParamVector::new(vec![1.0, 0.5], 1.0).is_ok());
        assert!(ParamVector::new(vec![0.0], 1.0).is_err());
        assert!(ParamVector::new(vec![1.0], -1.0).is_err());
        assert!(ParamVector::new(vec![f64::NAN], 1.0).is_err());

        let p = ParamVector::from_src_db(&[-30.0, 0.0, 6.0]).unwrap();
        assert_abs_diff_eq!(p.theta_src()[0], 1e-3, epsilon = 1e-18);
        assert_abs_diff_eq!(p.theta_src()[1], 1.0, epsilon = 1e-15);
        for (db, back) in [-30.0, 0.0, 6.0].iter().zip(p.src_db()) {
            assert_abs_diff_eq!(*db, back, epsilon = 1e-12);
        }
    }

    #[test]
    fn source_corr_examples() {
        let scn = Scenario::new(vec![0.5, 0.5], vec![1.0, 0.5], 1.0, 6).unwrap();
        let full = build_source_corr(&scn, 0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                if i == j {
                    assert_eq!(full[(i, j)], 1.0);
                } else {
                    assert_abs_diff_eq!(full[(i, j)], 0.0, epsilon = 1e-15);
                }
            }
        }
        let half = build_source_corr(&scn, 1).unwrap();
        assert_abs_diff_eq!(half[(0, 1)], 2.0 / PI, epsilon = 1e-15);
        assert!(build_source_corr(&scn, 2).is_err());
    }

    #[test]
    fn mixing_examples_and_raw_oracle() {
        let scn = Scenario::new(vec![0.0, 0.5, 0.37], vec![0.1, 0.1, 0.1], 1.0, 9).unwrap();
        let ones = build_mixing(&scn, 0).unwrap();
        assert!(ones.iter().all(|&v| v == 1.0));
        let nyq = build_mixing(&scn, 1).unwrap();
        assert_abs_diff_eq!(nyq[(3, 4)], 0.0, epsilon = 1e-15);

        // raw two-term form of the mixing entries as an oracle
        for d in 0..3 {
            let w = build_mixing(&scn, d).unwrap();
            let wb = scn.omega_bar()[d];
            for i in 0..9 {
                for j in 0..9 {
                    let ai = wb * PI * i as f64;
                    let aj = wb * PI * j as f64;
                    let raw = ai.cos() * aj.cos() + ai.sin() * aj.sin();
                    assert_abs_diff_eq!(w[(i, j)], raw, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn ry_noise_only_limit() {
        let scn = narrowband_pair(8);
        let theta = ParamVector::new(vec![1e-300, 1e-300], 2.5).unwrap();
        let ry = build_ry(&scn, &theta).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let expect = if i == j { 2.5 } else { 0.0 };
                assert_abs_diff_eq!(ry[(i, j)], expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn ry_diagonal_value() {
        // diagonal of R_y collapses to (Σ_d θ_d Ω_d + θ_0 Ω_0)/π with Ω_0 = π
        let scn = narrowband_pair(4);
        let theta = ParamVector::new(vec![2.0, 3.0], 0.7).unwrap();
        let ry = build_ry(&scn, &theta).unwrap();
        let expect = 2.0 / 64.0 + 3.0 / 64.0 + 0.7;
        for i in 0..4 {
            assert_abs_diff_eq!(ry[(i, i)], expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn ry_matches_bruteforce() {
        let scn = narrowband_pair(16);
        let theta = ParamVector::new(vec![0.8, 1.7], 1.0).unwrap();
        let ry = build_ry(&scn, &theta).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let mut v = 0.0;
                for d in 0..2 {
                    let bw = scn.bandwidth_bar()[d];
                    let wb = scn.omega_bar()[d];
                    let lag = (i as f64 - j as f64).abs();
                    let sinc_v = if lag == 0.0 {
                        1.0
                    } else {
                        (PI * bw * lag).sin() / (PI * bw * lag)
                    };
                    let ai = wb * PI * i as f64;
                    let aj = wb * PI * j as f64;
                    let mix = ai.cos() * aj.cos() + ai.sin() * aj.sin();
                    v += theta.theta_src()[d] * bw * sinc_v * mix;
                }
                let lag = (i as f64 - j as f64).abs();
                v += if lag == 0.0 {
                    1.0
                } else {
                    (PI * lag).sin() / (PI * lag)
                };
                assert_abs_diff_eq!(ry[(i, j)], v, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sigma_y_unit_diagonal_and_scale_invariance() {
        let scn = narrowband_pair(12);
        let theta = ParamVector::new(vec![0.4, 2.2], 1.0).unwrap();
        let s = build_sigma_y(&scn, &theta).unwrap();
        for i in 0..12 {
            assert_eq!(s[(i, i)], 1.0);
        }
        for c in [0.1, 10.0] {
            let scaled = ParamVector::new(vec![0.4 * c, 2.2 * c], c).unwrap();
            let s2 = build_sigma_y(&scn, &scaled).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    assert_abs_diff_eq!(s[(i, j)], s2[(i, j)], epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn sigma_y_noise_only_is_identity() {
        let scn = narrowband_pair(8);
        let theta = ParamVector::new(vec![1e-300, 1e-300], 1.0).unwrap();
        let s = build_sigma_y(&scn, &theta).unwrap();
        assert_abs_diff_eq!(
            (s - DMatrix::<f64>::identity(8, 8)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn dsigma_diagonal_zero_and_theta0_guard() {
        let scn = narrowband_pair(10);
        let theta = unit_theta(2);
        for d in 0..2 {
            let ds = dsigma_y_dtheta(&scn, &theta, d).unwrap();
            for i in 0..10 {
                assert_eq!(ds[(i, i)], 0.0);
            }
            assert_abs_diff_eq!((ds.clone() - ds.transpose()).norm(), 0.0, epsilon = 1e-14);
        }
        let bad = ParamVector::new(vec![1.0, 1.0], 0.5).unwrap();
        assert!(dsigma_y_dtheta(&scn, &bad, 0).is_err());
    }

    #[test]
    fn dsigma_matches_finite_difference() {
        let scn = narrowband_pair(8);
        let theta = ParamVector::new(vec![0.6, 1.4], 1.0).unwrap();
        let h = 1e-6;
        for d in 0..2 {
            let ds = dsigma_y_dtheta(&scn, &theta, d).unwrap();
            let mut up = theta.theta_src().to_vec();
            let mut dn = up.clone();
            up[d] += h;
            dn[d] -= h;
            let sp = build_sigma_y(&scn, &ParamVector::new(up, 1.0).unwrap()).unwrap();
            let sm = build_sigma_y(&scn, &ParamVector::new(dn, 1.0).unwrap()).unwrap();
            let fd = (sp - sm) / (2.0 * h);
            let scale = ds.norm().max(1e-12);
            assert!(
                (ds - fd).norm() / scale < 1e-6,
                "finite difference mismatch for d = {d}"
            );
        }
    }

    #[test]
    fn dsigma_small_power_limit() {
        // D = 1, θ_1 → 0: derivative → Ω̄_1 (Σ_1⊙W_1 − Σ_0)
        let scn = Scenario::new(vec![0.3], vec![0.2], 1.0, 6).unwrap();
        let theta = ParamVector::new(vec![1e-9], 1.0).unwrap();
        let ds = dsigma_y_dtheta(&scn, &theta, 0).unwrap();
        let a = build_source_corr(&scn, 0)
            .unwrap()
            .component_mul(&build_mixing(&scn, 0).unwrap());
        let mut limit = (a - build_noise_corr(&scn)) * 0.2;
        limit.fill_diagonal(0.0);
        assert!((ds - limit).norm() < 1e-8);
    }

    #[test]
    fn model_matrices_build_consistent() {
        let scn = narrowband_pair(16);
        let theta = ParamVector::new(vec![0.5, 1.2], 1.0).unwrap();
        let mm = ModelMatrices::build(&scn, &theta).unwrap();
        assert_eq!(mm.sigma_src.len(), 2);
        assert_eq!(mm.dsigma_y.len(), 2);
        assert!(mm.ry.clone().cholesky().is_some(), "R_y must be PD");
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(mm.sigma_y[(i, j)], mm.sigma_y[(j, i)]);
                if i != j {
                    assert!(mm.sigma_y[(i, j)].abs() < 1.0);
                }
            }
        }
        assert_eq!(mm.sigma_y, build_sigma_y(&scn, &theta).unwrap());
        assert_eq!(mm.dsigma_y[1], dsigma_y_dtheta(&scn, &theta, 1).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ry_positive_definite(
            t1 in 1e-4f64..100.0,
            t2 in 1e-4f64..100.0,
            w1 in 0.0f64..1.0,
            w2 in 0.0f64..1.0,
            b1 in 0.01f64..1.0,
            b2 in 0.01f64..1.0,
        ) {
            let scn = Scenario::new(vec![w1, w2], vec![b1, b2], 1.0, 12).unwrap();
            let theta = ParamVector::new(vec![t1, t2], 1.0).unwrap();
            let ry = build_ry(&scn, &theta).unwrap();
            prop_assert!(ry.clone().cholesky().is_some());
            let s = build_sigma_y(&scn, &theta).unwrap();
            for i in 0..12 {
                for j in 0..12 {
                    if i != j {
                        prop_assert!(s[(i, j)].abs() < 1.0);
                    }
                }
            }
        }
    }
}
