//! Window containers for sampled and hard-limited data.
//!
//! Both containers store N windows of M samples row-major, so window n
//! occupies `data[n*m .. (n+1)*m]`.

use nalgebra::DVector;

use crate::auxstats::PairIndex;
use crate::error::{Error, Result};

/// N real-valued windows of M samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RealWindows {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl RealWindows {
    pub fn new(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || m < 2 {
            return Err(Error::InvalidInput(format!(
                "need N >= 1 windows of M >= 2 samples, got N = {n}, M = {m}"
            )));
        }
        if data.len() != n * m {
            return Err(Error::InvalidInput(format!(
                "{} samples for N*M = {}",
                data.len(),
                n * m
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { n, m, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Empirical second-moment matrix Ŝ = (1/N) Σ_n y_n y_nᵀ, flattened
    /// row-major.
    pub fn second_moment(&self) -> nalgebra::DMatrix<f64> {
        let mut s = nalgebra::DMatrix::zeros(self.m, self.m);
        for w in 0..self.n {
            let y = self.window(w);
            for i in 0..self.m {
                for j in i..self.m {
                    s[(i, j)] += y[i] * y[j];
                }
            }
        }
        s /= self.n as f64;
        for i in 0..self.m {
            for j in 0..i {
                s[(i, j)] = s[(j, i)];
            }
        }
        s
    }
}

/// N hard-limited windows of M samples, entries ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryWindows {
    n: usize,
    m: usize,
    data: Vec<i8>,
}

impl BinaryWindows {
    pub fn new(n: usize, m: usize, data: Vec<i8>) -> Result<Self> {
        if n == 0 || m < 2 {
            return Err(Error::InvalidInput(format!(
                "need N >= 1 windows of M >= 2 samples, got N = {n}, M = {m}"
            )));
        }
        if data.len() != n * m {
            return Err(Error::InvalidInput(format!(
                "{} samples for N*M = {}",
                data.len(),
                n * m
            )));
        }
        if !data.iter().all(|&v| v == 1 || v == -1) {
            return Err(Error::NonBinaryData);
        }
        Ok(Self { n, m, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn window(&self, i: usize) -> &[i8] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    /// Empirical mean of the reduced statistics,
    /// μ̂_c = (1/N) Σ_n z_n[i] z_n[j] for pair c = (i, j).
    ///
    /// Pair products are ±1, so the per-pair sums are accumulated exactly in
    /// i64 in window order; the result does not depend on any parallel
    /// execution schedule upstream.
    pub fn empirical_mean_stats(&self) -> DVector<f64> {
        let pidx = PairIndex::new(self.m);
        let mut counts = vec![0i64; pidx.len()];
        for w in 0..self.n {
            let z = self.window(w);
            let mut c = 0;
            for i in 0..self.m {
                for j in (i + 1)..self.m {
                    counts[c] += (z[i] * z[j]) as i64;
                    c += 1;
                }
            }
        }
        DVector::from_iterator(pidx.len(), counts.iter().map(|&s| s as f64 / self.n as f64))
    }
}

/// Hard limiter: +1 for y >= 0, -1 otherwise (sign of zero is +1).
pub fn hard_limit(y: &RealWindows) -> BinaryWindows {
    let data: Vec<i8> = y
        .data
        .iter()
        .map(|&v| if v >= 0.0 { 1 } else { -1 })
        .collect();
    BinaryWindows {
        n: y.n,
        m: y.m,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn containers_validate_shape() {
        assert!(RealWindows::new(2, 3, vec![0.0; 6]).is_ok());
        assert!(RealWindows::new(2, 3, vec![0.0; 5]).is_err());
        assert!(RealWindows::new(0, 3, vec![]).is_err());
        assert!(RealWindows::new(2, 1, vec![0.0; 2]).is_err());
        assert!(RealWindows::new(1, 2, vec![f64::NAN, 0.0]).is_err());

        assert!(BinaryWindows::new(1, 2, vec![1, -1]).is_ok());
        assert!(matches!(
            BinaryWindows::new(1, 2, vec![1, 0]),
            Err(Error::NonBinaryData)
        ));
    }

    #[test]
    fn window_accessor_is_row_major() {
        let y = RealWindows::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(y.window(0), &[1.0, 2.0, 3.0]);
        assert_eq!(y.window(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn hard_limit_signs() {
        let y = RealWindows::new(1, 4, vec![-0.5, 0.0, 1e-300, -1e-300]).unwrap();
        let z = hard_limit(&y);
        assert_eq!(z.window(0), &[-1, 1, 1, -1]);
    }

    #[test]
    fn empirical_mean_stats_hand_case() {
        // windows (+,+,-) and (+,-,-): pair products
        //   (0,1): +1, -1 -> 0;  (0,2): -1, -1 -> -1;  (1,2): -1, +1 -> 0
        let z = BinaryWindows::new(2, 3, vec![1, 1, -1, 1, -1, -1]).unwrap();
        let mu = z.empirical_mean_stats();
        assert_eq!(mu.as_slice(), &[0.0, -1.0, 0.0]);
    }

    #[test]
    fn second_moment_hand_case() {
        let y = RealWindows::new(2, 2, vec![1.0, 2.0, 3.0, -1.0]).unwrap();
        let s = y.second_moment();
        assert_abs_diff_eq!(s[(0, 0)], (1.0 + 9.0) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(0, 1)], (2.0 - 3.0) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s[(1, 0)], s[(0, 1)], epsilon = 0.0);
        assert_abs_diff_eq!(s[(1, 1)], (4.0 + 1.0) / 2.0, epsilon = 1e-15);
    }
}
