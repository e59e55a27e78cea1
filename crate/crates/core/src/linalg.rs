//! Cholesky factors of covariance matrices.
//!
//! Toeplitz matrices are factored with the Schur algorithm in O(N²); a plain
//! dense factorization is kept for general symmetric matrices.

use crate::covariance::AutocovSequence;
use crate::error::{Error, Result};

/// Lower-triangular factor `L` of `Σ = L Lᵀ`, stored column by column
/// (column `k` holds rows `k..n`).
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    fn offset(&self, k: usize) -> usize {
        k * self.n - k * k.saturating_sub(1) / 2
    }

    /// Entries `L[k..n, k]`.
    pub fn column(&self, k: usize) -> &[f64] {
        let o = self.offset(k);
        &self.data[o..o + self.n - k]
    }

    /// `L[i, k]` (zero above the diagonal).
    pub fn get(&self, i: usize, k: usize) -> f64 {
        if i < k {
            0.0
        } else {
            self.column(k)[i - k]
        }
    }

    /// `L z`.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.n, "vector length must match the factor");
        let mut y = vec![0.0; self.n];
        for (k, &zk) in z.iter().enumerate() {
            for (yi, &l) in y[k..].iter_mut().zip(self.column(k)) {
                *yi += l * zk;
            }
        }
        y
    }

    /// `L Z` for `batch` vectors stored row-major (`z[i * batch + b]`).
    ///
    /// Each output column is bitwise identical to [`Self::mul_vec`] applied
    /// to the matching input column.
    pub fn mul_batch(&self, z: &[f64], batch: usize) -> Vec<f64> {
        assert_eq!(z.len(), self.n * batch, "batch shape must match the factor");
        let mut y = vec![0.0; self.n * batch];
        for k in 0..self.n {
            let zk = &z[k * batch..(k + 1) * batch];
            for (off, &l) in self.column(k).iter().enumerate() {
                let row = &mut y[(k + off) * batch..(k + off + 1) * batch];
                for (yb, &zb) in row.iter_mut().zip(zk) {
                    *yb += l * zb;
                }
            }
        }
        y
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(
            b.len(),
            self.n,
            "right-hand side length must match the factor"
        );
        let mut x = b.to_vec();
        for k in 0..self.n {
            let col = self.column(k);
            x[k] /= col[0];
            let xk = x[k];
            for (xi, &l) in x[k + 1..].iter_mut().zip(&col[1..]) {
                *xi -= l * xk;
            }
        }
        x
    }

    /// Dense `L` row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for k in 0..n {
            for (off, &l) in self.column(k).iter().enumerate() {
                m[(k + off) * n + k] = l;
            }
        }
        m
    }

    /// Dense `L Lᵀ` row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let l = self.to_dense();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| l[i * n + k] * l[j * n + k]).sum();
                m[i * n + j] = s;
                m[j * n + i] = s;
            }
        }
        m
    }
}

/// Cholesky factor of the symmetric Toeplitz matrix with first row `cov`
/// (Schur algorithm with hyperbolic rotations).
pub fn toeplitz_cholesky(cov: &AutocovSequence) -> Result<CholeskyFactor> {
    let t = cov.values();
    let n = t.len();
    let t0 = t[0];
    if !(t0 > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 0 });
    }
    let scale = t0.sqrt();
    let mut u: Vec<f64> = t.iter().map(|&x| x / scale).collect();
    let mut v = u.clone();
    v[0] = 0.0;

    let mut data = Vec::with_capacity(n * (n + 1) / 2);
    for k in 0..n {
        data.extend_from_slice(&u[k..]);
        if k + 1 == n {
            break;
        }
        // Shift the first generator down one row; the second stays.
        u.copy_within(k..n - 1, k + 1);
        let rho = v[k + 1] / u[k + 1];
        if !(rho.abs() < 1.0) {
            return Err(Error::NotPositiveDefinite { index: k + 1 });
        }
        let c = 1.0 / ((1.0 - rho) * (1.0 + rho)).sqrt();
        for (ui, vi) in u[k + 1..].iter_mut().zip(&mut v[k + 1..]) {
            let (a, b) = (*ui, *vi);
            *ui = c * (a - rho * b);
            *vi = c * (b - rho * a);
        }
    }
    Ok(CholeskyFactor { n, data })
}

/// Cholesky factor of a dense symmetric positive-definite matrix (row-major).
pub fn dense_cholesky(a: &[f64], n: usize) -> Result<CholeskyFactor> {
    if a.len() != n * n {
        return Err(Error::LengthMismatch {
            expected: n * n,
            found: a.len(),
        });
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let d = a[j * n + j] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
        if !(d > 0.0) {
            return Err(Error::NotPositiveDefinite { index: j });
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let s = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = s / d;
        }
    }
    let mut data = Vec::with_capacity(n * (n + 1) / 2);
    for k in 0..n {
        data.extend((k..n).map(|i| l[i * n + k]));
    }
    Ok(CholeskyFactor { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: Vec<f64>) -> AutocovSequence {
        AutocovSequence::from_values(v).unwrap()
    }

    #[test]
    fn trivial_factors() {
        let f = toeplitz_cholesky(&seq(vec![4.0])).unwrap();
        assert_eq!(f.get(0, 0), 2.0);
        let f = toeplitz_cholesky(&seq(vec![1.0, 0.0, 0.0, 0.0])).unwrap();
        for i in 0..4 {
            for k in 0..4 {
                assert_eq!(f.get(i, k), if i == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn matches_dense_on_small_matrix() {
        let s = seq(vec![3.0, 1.2, -0.4, 0.3, 0.1]);
        let a = toeplitz_cholesky(&s).unwrap();
        let b = dense_cholesky(&s.to_dense(), 5).unwrap();
        for i in 0..5 {
            for k in 0..=i {
                assert!((a.get(i, k) - b.get(i, k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let s = seq(vec![1.0, 0.9, 0.0]);
        assert!(matches!(
            toeplitz_cholesky(&s),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(dense_cholesky(&s.to_dense(), 3).is_err());
        let s = seq(vec![1.0, 1.0]);
        assert!(toeplitz_cholesky(&s).is_err());
    }

    #[test]
    fn solve_and_multiply() {
        let s = seq(vec![2.0, 0.5, 0.25]);
        let f = toeplitz_cholesky(&s).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve_lower(&b);
        let back = f.mul_vec(&x);
        for (p, q) in back.iter().zip(b) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn batch_matches_single() {
        let s = seq(vec![2.0, 0.7, 0.3, 0.1, 0.05]);
        let f = toeplitz_cholesky(&s).unwrap();
        let batch = 3;
        let z: Vec<f64> = (0..15).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let y = f.mul_batch(&z, batch);
        for b in 0..batch {
            let col: Vec<f64> = (0..5).map(|i| z[i * batch + b]).collect();
            let single = f.mul_vec(&col);
            for i in 0..5 {
                assert_eq!(single[i].to_bits(), y[i * batch + b].to_bits());
            }
        }
    }
}
