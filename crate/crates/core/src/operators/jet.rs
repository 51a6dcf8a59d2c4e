use crate::error::{arg, domain, Result};
use crate::matcone::SymMatrix;

/// Second-order jet `(x, s, p, H)` of a scalar function at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub x: Vec<f64>,
    pub s: f64,
    pub p: Vec<f64>,
    pub h: SymMatrix,
}

impl Jet2 {
    pub fn new(x: Vec<f64>, s: f64, p: Vec<f64>, h: SymMatrix) -> Result<Self> {
        if x.len() != p.len() || h.dim() != p.len() {
            return arg(format!("jet dimensions disagree: x {}, p {}, H {}", x.len(), p.len(), h.dim()));
        }
        Ok(Jet2 { x, s, p, h })
    }

    /// Jet of the constant function `s`.
    pub fn constant(x: Vec<f64>, s: f64) -> Self {
        let n = x.len();
        Jet2 { x, s, p: vec![0.0; n], h: SymMatrix::zeros(n) }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn p_norm(&self) -> f64 {
        norm(&self.p)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conformal Hessian `A^u` of a positive function `u` in dimension `n ≥ 3`.
pub fn conformal_hessian_u(j: &Jet2, n: usize) -> Result<SymMatrix> {
    if n < 3 {
        return arg(format!("conformal Hessian needs n >= 3, got {n}"));
    }
    if !(j.s > 0.0) {
        return domain(format!("conformal Hessian needs u > 0, got {}", j.s));
    }
    let nf = n as f64;
    let u = j.s;
    let c_h = -(2.0 / (nf - 2.0)) * u.powf(-(nf + 2.0) / (nf - 2.0));
    let w = u.powf(-2.0 * nf / (nf - 2.0)) / ((nf - 2.0) * (nf - 2.0));
    let q2 = dot(&j.p, &j.p);
    let mut a = j.h.scale(c_h);
    a.add_outer(2.0 * nf * w, &j.p);
    a.add_diag(-2.0 * w * q2);
    Ok(a)
}

/// `A_w = w ∇²w − ½|∇w|² I`.
pub fn conformal_a_w(j: &Jet2) -> SymMatrix {
    let mut a = j.h.scale(j.s);
    a.add_diag(-0.5 * dot(&j.p, &j.p));
    a
}

/// `A[ψ] = ∇²ψ + ∇ψ⊗∇ψ − ½|∇ψ|² I`.
pub fn conformal_a_psi(j: &Jet2) -> SymMatrix {
    let mut a = j.h.clone();
    a.add_outer(1.0, &j.p);
    a.add_diag(-0.5 * dot(&j.p, &j.p));
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_jets_vanish() {
        let j = Jet2::constant(vec![0.3, -0.2, 0.1], 2.0);
        assert_eq!(conformal_hessian_u(&j, 3).unwrap().max_abs(), 0.0);
        assert_eq!(conformal_a_w(&j).max_abs(), 0.0);
        assert_eq!(conformal_a_psi(&j).max_abs(), 0.0);
    }

    #[test]
    fn linear_w_gives_minus_half_identity() {
        let j = Jet2::new(vec![0.0, 0.4], 0.0, vec![1.0, 0.0], SymMatrix::zeros(2)).unwrap();
        let a = conformal_a_w(&j);
        assert_eq!(a, SymMatrix::scaled_identity(2, -0.5));
    }

    #[test]
    fn unit_gradient_psi() {
        let j = Jet2::new(vec![0.0; 3], 0.0, vec![1.0, 0.0, 0.0], SymMatrix::zeros(3)).unwrap();
        let a = conformal_a_psi(&j);
        assert_eq!(a, SymMatrix::diag(&[0.5, -0.5, -0.5]));
    }

    #[test]
    fn rejects_bad_input() {
        let j = Jet2::constant(vec![0.0; 3], -1.0);
        assert!(conformal_hessian_u(&j, 3).is_err());
        let j = Jet2::constant(vec![0.0; 3], 1.0);
        assert!(conformal_hessian_u(&j, 2).is_err());
        assert!(Jet2::new(vec![0.0; 2], 0.0, vec![0.0; 3], SymMatrix::zeros(3)).is_err());
    }
}
