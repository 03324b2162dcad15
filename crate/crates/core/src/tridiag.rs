//! Tridiagonal matrices: storage, products, and the Thomas solve.

use crate::error::{Error, Result};

/// Tridiagonal matrix of order `n` stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    /// Subdiagonal, length `n - 1`.
    pub sub: Vec<f64>,
    /// Main diagonal, length `n`.
    pub diag: Vec<f64>,
    /// Superdiagonal, length `n - 1`.
    pub sup: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            sub: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Entry (i, j); zero outside the three diagonals.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.sub[j]
        } else if i + 1 == j {
            self.sup[i]
        } else {
            0.0
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n, "matvec dimension mismatch");
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Returns `a*self`, entrywise.
    pub fn scale(&self, a: f64) -> Tridiag {
        Tridiag {
            sub: self.sub.iter().map(|v| a * v).collect(),
            diag: self.diag.iter().map(|v| a * v).collect(),
            sup: self.sup.iter().map(|v| a * v).collect(),
        }
    }

    /// Adds `a*other` into `self` in place.
    pub fn axpy(&mut self, a: f64, other: &Tridiag) {
        assert_eq!(self.n(), other.n(), "axpy dimension mismatch");
        for (s, o) in self.sub.iter_mut().zip(&other.sub) {
            *s += a * o;
        }
        for (s, o) in self.diag.iter_mut().zip(&other.diag) {
            *s += a * o;
        }
        for (s, o) in self.sup.iter_mut().zip(&other.sup) {
            *s += a * o;
        }
    }

    /// Thomas algorithm without pivoting. Fails on a (near-)zero pivot or a
    /// non-finite solution.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        assert_eq!(rhs.len(), n, "solve dimension mismatch");
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c = vec![0.0; n]; // modified superdiagonal
        let mut d = vec![0.0; n]; // modified rhs
        let scale = self
            .diag
            .iter()
            .chain(&self.sub)
            .chain(&self.sup)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);

        let mut pivot = self.diag[0];
        if pivot.abs() <= 1e-14 * scale {
            return Err(Error::SingularSystem(format!("pivot {pivot:e} at row 0")));
        }
        c[0] = if n > 1 { self.sup[0] / pivot } else { 0.0 };
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i - 1] * c[i - 1];
            if pivot.abs() <= 1e-14 * scale {
                return Err(Error::SingularSystem(format!("pivot {pivot:e} at row {i}")));
            }
            if i + 1 < n {
                c[i] = self.sup[i] / pivot;
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem("non-finite solution".into()));
        }
        Ok(d)
    }
}
