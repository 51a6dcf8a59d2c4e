use crate::error::{Error, Result};

use super::sym::SymMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts the given values ascending.
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Spectrum { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Spectrum of `-M`.
    pub fn negated(&self) -> Spectrum {
        Spectrum { values: self.values.iter().rev().map(|v| -v).collect() }
    }
}

/// Eigenvalues by cyclic Jacobi rotations.
///
/// Panics only if the sweep cap is hit, which does not happen for finite
/// symmetric input; see [`try_eigen_sym`].
pub fn eigen_sym(m: &SymMatrix) -> Spectrum {
    match try_eigen_sym(m) {
        Ok(s) => s,
        Err(e) => panic!("{e}"),
    }
}

pub fn try_eigen_sym(m: &SymMatrix) -> Result<Spectrum> {
    jacobi(m, false).map(|(d, _)| Spectrum { values: d })
}

/// Eigenvalues and eigenvectors. Vectors are returned column-major:
/// column `k` (entries `q[k*n .. (k+1)*n]`) belongs to `spectrum.values()[k]`.
pub fn eigen_sym_vectors(m: &SymMatrix) -> Result<(Spectrum, Vec<f64>)> {
    jacobi(m, true).map(|(d, v)| (Spectrum { values: d }, v))
}

#[inline]
fn rotate(a: &mut [f64], n: usize, s: f64, tau: f64, (i, j): (usize, usize), (k, l): (usize, usize)) {
    let g = a[i * n + j];
    let h = a[k * n + l];
    a[i * n + j] = g - s * (h + g * tau);
    a[k * n + l] = h + s * (g - h * tau);
}

fn jacobi(m: &SymMatrix, want_vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = m.dim();
    let mut a = m.to_dense();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite matrix entry".into()));
    }
    // v is row-major here: v[row * n + col]
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let mut converged = false;

    for sweep in 0..MAX_SWEEPS {
        let mut sm = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                sm += a[p * n + q].abs();
            }
        }
        if sm == 0.0 {
            converged = true;
            break;
        }
        let tresh = if sweep < 3 { 0.2 * sm / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[p * n + q] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[p * n + q] = 0.0;
                    for j in 0..p {
                        rotate(&mut a, n, s, tau, (j, p), (j, q));
                    }
                    for j in p + 1..q {
                        rotate(&mut a, n, s, tau, (p, j), (j, q));
                    }
                    for j in q + 1..n {
                        rotate(&mut a, n, s, tau, (p, j), (q, j));
                    }
                    if want_vectors {
                        for j in 0..n {
                            rotate(&mut v, n, s, tau, (j, p), (j, q));
                        }
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    if !converged {
        return Err(Error::Internal(format!("Jacobi eigen solver did not converge in {MAX_SWEEPS} sweeps")));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut q = Vec::new();
    if want_vectors {
        q = vec![0.0; n * n];
        for (k, &src) in order.iter().enumerate() {
            for row in 0..n {
                q[k * n + row] = v[row * n + src];
            }
        }
    }
    Ok((values, q))
}
