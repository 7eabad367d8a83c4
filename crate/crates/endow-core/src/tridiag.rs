//! Tridiagonal (Thomas) solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::FloatMath as _;

/// Tridiagonal system with `lower[0]` and `upper[n-1]` unused.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// Solve `A x = rhs` in place by the Thomas algorithm (no pivoting; intended
    /// for the diagonally dominant systems the schemes produce).
    pub fn solve(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        scratch.clear();
        scratch.resize(n, 0.0);
        let mut d = self.diag[0];
        if d.abs() < 1e-300 {
            return Err(Error::GridTooCoarse { detail: "singular pivot in tridiagonal solve".into() });
        }
        rhs[0] /= d;
        for i in 1..n {
            scratch[i] = self.upper[i - 1] / d;
            d = self.diag[i] - self.lower[i] * scratch[i];
            if d.abs() < 1e-300 {
                return Err(Error::GridTooCoarse { detail: "singular pivot in tridiagonal solve".into() });
            }
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / d;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i + 1] * rhs[i + 1];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        // [2 1 0; 1 3 1; 0 1 2] x = [3, 10, 9] -> x = [0.5, 2, 3.5]
        let a = Tridiag {
            lower: vec![0.0, 1.0, 1.0],
            diag: vec![2.0, 3.0, 2.0],
            upper: vec![1.0, 1.0, 0.0],
        };
        let mut rhs = vec![3.0, 10.0, 9.0];
        a.solve(&mut rhs, &mut Vec::new()).unwrap();
        for (x, want) in rhs.iter().zip([0.5, 2.0, 3.5]) {
            assert!((x - want).abs() < 1e-14);
        }
    }

    #[test]
    fn mul_then_solve_roundtrip() {
        let n = 64;
        let a = Tridiag {
            lower: (0..n).map(|i| -0.3 - 0.001 * i as f64).collect(),
            diag: (0..n).map(|i| 2.0 + 0.01 * i as f64).collect(),
            upper: (0..n).map(|i| -0.4 + 0.002 * i as f64).collect(),
        };
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut y = vec![0.0; n];
        a.mul(&x, &mut y);
        a.solve(&mut y, &mut Vec::new()).unwrap();
        for (got, want) in y.iter().zip(&x) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}
