//! Reduced sufficient statistics of the hard-limited samples.
//!
//! The elimination map Φ keeps one copy of each off-diagonal product
//! z_i z_j of a ±1 window z, in canonical row-major upper-triangle order.
//! This module assembles the mean μ_φ̃(θ) of those products (arcsine law),
//! its Jacobian in the source powers, and their C̃×C̃ covariance R_φ̃(θ),
//! whose fourth moments reduce to quadrivariate orthant probabilities.
//!
//! Fourth moments are computed once per unordered 4-index set (exactly
//! binomial(M, 4) quadrature calls per assembly) and scattered to the three
//! pairings of the set. A versioned binary cache file can persist the table
//! across runs.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{build_sigma_y, dsigma_y_dtheta, ParamVector, Scenario};
use crate::orthant::{sign_moment4, CorrSubset, CORR_CLAMP};

/// Canonical ordering of the C̃ = M(M−1)/2 strict upper-triangle pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairIndex {
    m: usize,
    pairs: Vec<(usize, usize)>,
    pos: Vec<usize>,
}

impl PairIndex {
    /// Index over windows of length `m` (m ≥ 2).
    pub fn new(m: usize) -> Self {
        assert!(m >= 2, "pair index needs at least 2 coordinates");
        let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
        let mut pos = vec![usize::MAX; m * m];
        for i in 0..m {
            for j in i + 1..m {
                pos[i * m + j] = pairs.len();
                pos[j * m + i] = pairs.len();
                pairs.push((i, j));
            }
        }
        Self { m, pairs, pos }
    }

    /// Number of pairs C̃.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Window length M.
    pub fn m(&self) -> usize {
        self.m
    }

    /// All pairs in canonical order.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// The c-th pair (i, j), i < j.
    pub fn pair(&self, c: usize) -> (usize, usize) {
        self.pairs[c]
    }

    /// Position of pair (i, j), i ≠ j, in either order.
    pub fn position(&self, i: usize, j: usize) -> usize {
        debug_assert!(i != j && i < self.m && j < self.m);
        self.pos[i * self.m + j]
    }
}

/// φ̃(z): the C̃ products z_i z_j of a ±1 window in canonical pair order.
pub fn reduce_stats(z: &[i8]) -> Result<Vec<i8>> {
    if z.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "window of length {} has no pair statistics",
            z.len()
        )));
    }
    if z.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::NonBinaryData);
    }
    let m = z.len();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            out.push(z[i] * z[j]);
        }
    }
    Ok(out)
}

fn require_unit_noise(theta: &ParamVector) -> Result<()> {
    if theta.theta_noise() != 1.0 {
        return Err(Error::InvalidInput(format!(
            "quantized-domain statistics require theta_0 = 1, got {}",
            theta.theta_noise()
        )));
    }
    Ok(())
}

/// Checks every off-diagonal correlation is usable by the arcsine formulas.
fn check_clamp(sy: &DMatrix<f64>, pidx: &PairIndex) -> Result<()> {
    for &(i, j) in pidx.pairs() {
        let v = sy[(i, j)];
        if v.abs() >= CORR_CLAMP {
            return Err(Error::ClampActivated { i, j, value: v });
        }
    }
    Ok(())
}

fn mean_from_sigma(sy: &DMatrix<f64>, pidx: &PairIndex) -> DVector<f64> {
    DVector::from_iterator(
        pidx.len(),
        pidx.pairs()
            .iter()
            .map(|&(i, j)| 2.0 / PI * sy[(i, j)].asin()),
    )
}

/// μ_φ̃(θ): arcsine-law means (2/π)·arcsin([Σ_y]_ij) in canonical pair order.
pub fn mean_stats(scn: &Scenario, theta: &ParamVector) -> Result<DVector<f64>> {
    require_unit_noise(theta)?;
    let sy = build_sigma_y(scn, theta)?;
    let pidx = PairIndex::new(scn.m());
    check_clamp(&sy, &pidx)?;
    Ok(mean_from_sigma(&sy, &pidx))
}

/// ∂μ_φ̃/∂θ: C̃×D matrix with entries
/// (2/π)·[∂Σ_y/∂θ_d]_ij / √(1 − [Σ_y]_ij²).
pub fn jac_mean_stats(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    require_unit_noise(theta)?;
    let sy = build_sigma_y(scn, theta)?;
    let pidx = PairIndex::new(scn.m());
    check_clamp(&sy, &pidx)?;
    let mut jac = DMatrix::zeros(pidx.len(), scn.d());
    for d in 0..scn.d() {
        let ds = dsigma_y_dtheta(scn, theta, d)?;
        for (c, &(i, j)) in pidx.pairs().iter().enumerate() {
            let s = sy[(i, j)];
            jac[(c, d)] = 2.0 / PI * ds[(i, j)] / (1.0 - s * s).sqrt();
        }
    }
    Ok(jac)
}

/// Fourth sign-moments E[z_i z_j z_k z_l] for every 4-index set i<j<k<l of a
/// correlation matrix, in lexicographic set order.
#[derive(Debug, Clone, PartialEq)]
pub struct FourthMomentTable {
    m: usize,
    quads: Vec<[u16; 4]>,
    values: Vec<f64>,
}

fn enumerate_quads(m: usize) -> Vec<[u16; 4]> {
    let mut quads = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                for l in k + 1..m {
                    quads.push([i as u16, j as u16, k as u16, l as u16]);
                }
            }
        }
    }
    quads
}

impl FourthMomentTable {
    /// Evaluates all binomial(M, 4) quadrivariate moments of the M×M
    /// correlation matrix `sy`. Parallelized over index sets; the result is
    /// identical for any thread count.
    pub fn compute(sy: &DMatrix<f64>) -> Result<Self> {
        let m = sy.nrows();
        let quads = enumerate_quads(m);
        let values: Vec<f64> = quads
            .par_iter()
            .map(|&[i, j, k, l]| {
                let (i, j, k, l) = (i as usize, j as usize, k as usize, l as usize);
                let rho = [
                    sy[(i, j)],
                    sy[(i, k)],
                    sy[(i, l)],
                    sy[(j, k)],
                    sy[(j, l)],
                    sy[(k, l)],
                ];
                CorrSubset::new(rho)
                    .and_then(|c| sign_moment4(&c))
                    .map_err(|source| Error::FourthMoment {
                        i,
                        j,
                        k,
                        l,
                        source: Box::new(source),
                    })
            })
            .collect::<Result<_>>()?;
        Ok(Self { m, quads, values })
    }

    /// Window length M the table was built for.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of stored 4-index sets, binomial(M, 4).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Moment of the set {i, j, k, l} (4 distinct indices, any order).
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Option<f64> {
        let mut key = [i as u16, j as u16, k as u16, l as u16];
        key.sort_unstable();
        self.quads
            .binary_search(&key)
            .ok()
            .map(|rank| self.values[rank])
    }

    /// FNV-1a checksum of the stored value bits.
    pub fn checksum(&self) -> u64 {
        let mut h = fnv::OFFSET;
        for v in &self.values {
            fnv::feed(&mut h, &v.to_le_bytes());
        }
        h
    }

    /// Writes the table with a versioned header binding it to the scenario
    /// and θ fingerprints it was computed from.
    ///
    /// Format (all little-endian): magic `OBSM4\0`, u32 version (1),
    /// u64 M, u64 scenario fingerprint, u64 theta fingerprint, u64 count,
    /// count f64 values, u64 FNV-1a checksum of the value bytes.
    pub fn write_binary(&self, path: &Path, scenario_fp: u64, theta_fp: u64) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(b"OBSM4\0")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&scenario_fp.to_le_bytes())?;
        w.write_all(&theta_fp.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        let mut h = fnv::OFFSET;
        for v in &self.values {
            let bytes = v.to_le_bytes();
            fnv::feed(&mut h, &bytes);
            w.write_all(&bytes)?;
        }
        w.write_all(&h.to_le_bytes())?;
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`write_binary`](Self::write_binary),
    /// returning it with the stored (scenario, θ) fingerprints.
    pub fn read_binary(path: &Path) -> Result<(Self, u64, u64)> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 6];
        r.read_exact(&mut magic)?;
        if &magic != b"OBSM4\0" {
            return Err(Error::MomentCache("bad magic, not a moment table".into()));
        }
        let version = read_u32(&mut r)?;
        if version != 1 {
            return Err(Error::MomentCache(format!("unsupported version {version}")));
        }
        let m = read_u64(&mut r)? as usize;
        let scenario_fp = read_u64(&mut r)?;
        let theta_fp = read_u64(&mut r)?;
        let count = read_u64(&mut r)? as usize;
        let quads = enumerate_quads(m);
        if quads.len() != count {
            return Err(Error::MomentCache(format!(
                "count {count} inconsistent with M = {m}"
            )));
        }
        let mut values = Vec::with_capacity(count);
        let mut h = fnv::OFFSET;
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            fnv::feed(&mut h, &buf);
            values.push(f64::from_le_bytes(buf));
        }
        let stored = read_u64(&mut r)?;
        if stored != h {
            return Err(Error::MomentCache(format!(
                "checksum mismatch: stored {stored:#018x}, computed {h:#018x}"
            )));
        }
        Ok((Self { m, quads, values }, scenario_fp, theta_fp))
    }

    /// Reads a table and verifies it was computed for exactly this
    /// (scenario, θ) pair.
    pub fn load_for(path: &Path, scn: &Scenario, theta: &ParamVector) -> Result<Self> {
        let (table, sfp, tfp) = Self::read_binary(path)?;
        if sfp != scenario_fingerprint(scn) || tfp != theta_fingerprint(theta) {
            return Err(Error::MomentCache(
                "cache was computed for a different scenario or theta".into(),
            ));
        }
        if table.m != scn.m() {
            return Err(Error::MomentCache(format!(
                "cache holds M = {}, scenario needs M = {}",
                table.m,
                scn.m()
            )));
        }
        Ok(table)
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

mod fnv {
    pub const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;

    pub fn feed(h: &mut u64, bytes: &[u8]) {
        for &b in bytes {
            *h ^= b as u64;
            *h = h.wrapping_mul(PRIME);
        }
    }
}

/// Stable fingerprint of a scenario's defining numbers.
pub fn scenario_fingerprint(scn: &Scenario) -> u64 {
    let mut h = fnv::OFFSET;
    fnv::feed(&mut h, &(scn.m() as u64).to_le_bytes());
    fnv::feed(&mut h, &(scn.d() as u64).to_le_bytes());
    fnv::feed(&mut h, &scn.sampler_ratio().to_le_bytes());
    for &w in scn.omega_bar() {
        fnv::feed(&mut h, &w.to_le_bytes());
    }
    for &b in scn.bandwidth_bar() {
        fnv::feed(&mut h, &b.to_le_bytes());
    }
    h
}

/// Stable fingerprint of a parameter vector.
pub fn theta_fingerprint(theta: &ParamVector) -> u64 {
    let mut h = fnv::OFFSET;
    fnv::feed(&mut h, &theta.theta_noise().to_le_bytes());
    for &t in theta.theta_src() {
        fnv::feed(&mut h, &t.to_le_bytes());
    }
    h
}

fn cov_from_parts(
    sy: &DMatrix<f64>,
    pidx: &PairIndex,
    mu: &DVector<f64>,
    table: &FourthMomentTable,
) -> DMatrix<f64> {
    let m = pidx.m();
    let ctil = pidx.len();
    let mut cov = DMatrix::zeros(ctil, ctil);

    // identical pairs: E[(z_i z_j)^2] = 1
    for c in 0..ctil {
        cov[(c, c)] = 1.0 - mu[c] * mu[c];
    }

    // one shared index x: E[z_x z_a z_x z_b] = E[z_a z_b] via z_x^2 = 1
    for x in 0..m {
        for a in 0..m {
            if a == x {
                continue;
            }
            for b in a + 1..m {
                if b == x {
                    continue;
                }
                let c1 = pidx.position(x, a);
                let c2 = pidx.position(x, b);
                let e = 2.0 / PI * sy[(a, b)].asin();
                let v = e - mu[c1] * mu[c2];
                cov[(c1, c2)] = v;
                cov[(c2, c1)] = v;
            }
        }
    }

    // four distinct indices: one quadrivariate moment scattered to the
    // three pairings of the set
    for (&[i, j, k, l], &e) in table.quads.iter().zip(&table.values) {
        let (i, j, k, l) = (i as usize, j as usize, k as usize, l as usize);
        for (c1, c2) in [
            (pidx.position(i, j), pidx.position(k, l)),
            (pidx.position(i, k), pidx.position(j, l)),
            (pidx.position(i, l), pidx.position(j, k)),
        ] {
            let v = e - mu[c1] * mu[c2];
            cov[(c1, c2)] = v;
            cov[(c2, c1)] = v;
        }
    }
    cov
}

/// R_φ̃(θ): covariance of the reduced statistics, assembled from the
/// case-reduced fourth moments.
pub fn cov_stats(scn: &Scenario, theta: &ParamVector) -> Result<DMatrix<f64>> {
    require_unit_noise(theta)?;
    let sy = build_sigma_y(scn, theta)?;
    let pidx = PairIndex::new(scn.m());
    check_clamp(&sy, &pidx)?;
    let mu = mean_from_sigma(&sy, &pidx);
    let table = FourthMomentTable::compute(&sy)?;
    Ok(cov_from_parts(&sy, &pidx, &mu, &table))
}

/// Mean, Jacobian and covariance of the reduced statistics at one θ.
#[derive(Debug, Clone)]
pub struct AuxMoments {
    /// μ_φ̃(θ), length C̃.
    pub mu: DVector<f64>,
    /// ∂μ_φ̃/∂θ, C̃×D.
    pub jac: DMatrix<f64>,
    /// R_φ̃(θ), C̃×C̃ symmetric.
    pub cov: DMatrix<f64>,
}

impl AuxMoments {
    /// Builds all three moment blocks, evaluating the fourth-moment table.
    pub fn build(scn: &Scenario, theta: &ParamVector) -> Result<Self> {
        require_unit_noise(theta)?;
        let sy = build_sigma_y(scn, theta)?;
        let table = FourthMomentTable::compute(&sy)?;
        Self::assemble(scn, theta, &sy, &table)
    }

    /// Builds the moment blocks reusing a precomputed fourth-moment table
    /// for the same (scenario, θ).
    pub fn build_with_table(
        scn: &Scenario,
        theta: &ParamVector,
        table: &FourthMomentTable,
    ) -> Result<Self> {
        require_unit_noise(theta)?;
        if table.m() != scn.m() {
            return Err(Error::MomentCache(format!(
                "table holds M = {}, scenario needs M = {}",
                table.m(),
                scn.m()
            )));
        }
        let sy = build_sigma_y(scn, theta)?;
        Self::assemble(scn, theta, &sy, table)
    }

    fn assemble(
        scn: &Scenario,
        theta: &ParamVector,
        sy: &DMatrix<f64>,
        table: &FourthMomentTable,
    ) -> Result<Self> {
        let pidx = PairIndex::new(scn.m());
        check_clamp(sy, &pidx)?;
        let mu = mean_from_sigma(sy, &pidx);
        let jac = jac_mean_stats(scn, theta)?;
        let cov = cov_from_parts(sy, &pidx, &mu, table);
        Ok(Self { mu, jac, cov })
    }
}

/// Cholesky factorization of a symmetric positive-definite moment matrix,
/// with a single ridge retry of 1e-10·(trace/n)·I absorbing quadrature
/// rounding; failure after the retry is a hard error.
pub fn factor_cov(cov: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(ch) = cov.clone().cholesky() {
        return Ok(ch);
    }
    let n = cov.nrows();
    let ridge = 1e-10 * cov.trace() / n as f64;
    let bumped = cov + DMatrix::identity(n, n) * ridge;
    bumped.cholesky().ok_or_else(|| {
        Error::Factorization(format!(
            "moment covariance not positive definite after ridge {ridge:.3e}"
        ))
    })
}
