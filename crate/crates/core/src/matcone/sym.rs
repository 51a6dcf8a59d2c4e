use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::{arg, Result};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 16;

/// Validates a matrix dimension (2 ≤ n ≤ 16).
pub fn check_dim(n: usize) -> Result<usize> {
    if (2..=MAX_DIM).contains(&n) {
        Ok(n)
    } else {
        arg(format!("matrix dimension {n} outside 2..={MAX_DIM}"))
    }
}

/// Dense symmetric matrix stored as its lower triangle, row by row.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

#[inline]
fn idx(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl SymMatrix {
    /// Zero matrix. Panics if `n` is outside `2..=16`; use [`check_dim`] on
    /// untrusted input.
    pub fn zeros(n: usize) -> Self {
        assert!((2..=MAX_DIM).contains(&n), "SymMatrix dimension {n} outside 2..={MAX_DIM}");
        SymMatrix { n, a: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[idx(i, i)] = c;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.a[idx(i, i)] = v;
        }
        m
    }

    /// `p ⊗ p`.
    pub fn outer(p: &[f64]) -> Self {
        Self::from_fn(p.len(), |i, j| p[i] * p[j])
    }

    /// `(p ⊗ q + q ⊗ p) / 2`.
    pub fn sym_outer(p: &[f64], q: &[f64]) -> Self {
        assert_eq!(p.len(), q.len());
        Self::from_fn(p.len(), |i, j| 0.5 * (p[i] * q[j] + q[i] * p[j]))
    }

    /// Builds from `f(i, j)` evaluated for `i >= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.a[idx(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from a dense row-major array, which must be symmetric.
    pub fn from_dense(n: usize, rows: &[f64]) -> Result<Self> {
        check_dim(n)?;
        if rows.len() != n * n {
            return arg(format!("expected {} entries, got {}", n * n, rows.len()));
        }
        for i in 0..n {
            for j in 0..i {
                let (x, y) = (rows[i * n + j], rows[j * n + i]);
                if x != y {
                    return arg(format!("matrix not symmetric at ({i},{j}): {x} vs {y}"));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i * n + j]))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[idx(i, j)] = v;
    }

    /// Packed lower-triangle entries.
    pub fn packed(&self) -> &[f64] {
        &self.a
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.a.iter().zip(&other.a).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Adds `c` to every diagonal entry.
    pub fn add_diag(&mut self, c: f64) {
        for i in 0..self.n {
            self.a[idx(i, i)] += c;
        }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &SymMatrix) {
        assert_eq!(self.n, other.n);
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += c * y;
        }
    }

    /// `self += c * p ⊗ p`.
    pub fn add_outer(&mut self, c: f64, p: &[f64]) {
        assert_eq!(self.n, p.len());
        for i in 0..self.n {
            for j in 0..=i {
                self.a[idx(i, j)] += c * p[i] * p[j];
            }
        }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { n: self.n, a: self.a.iter().map(|v| c * v).collect() }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len());
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `Q diag(d) Qᵀ` for `Q` given column-major (`q[col * n + row]`).
    pub fn from_eigen(d: &[f64], q: &[f64]) -> SymMatrix {
        let n = d.len();
        assert_eq!(q.len(), n * n);
        Self::from_fn(n, |i, j| (0..n).map(|k| q[k * n + i] * d[k] * q[k * n + j]).sum())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:.6e}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SymMatrix> for SymMatrix {
    fn add_assign(&mut self, rhs: &SymMatrix) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SymMatrix> for SymMatrix {
    fn sub_assign(&mut self, rhs: &SymMatrix) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul<&SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, rhs: &SymMatrix) -> SymMatrix {
        rhs.scale(self)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}
