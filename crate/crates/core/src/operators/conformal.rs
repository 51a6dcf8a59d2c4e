use crate::error::{arg, domain, Result};
use crate::matcone::SymMatrix;

use super::fields::{FieldOracle, ScalarField};
use super::jet::{conformal_a_psi, conformal_a_w, conformal_hessian_u, dot, Jet2};

/// The three expressions of the conformal Hessian at one point.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub a_u: SymMatrix,
    pub a_w: SymMatrix,
    /// `e^{2ψ} A[ψ]`.
    pub a_psi_scaled: SymMatrix,
    /// Largest entrywise deviation among the three.
    pub deviation: f64,
    pub pass: bool,
}

/// Computes `A^u` directly, through `w = u^{−2/(n−2)}` and through
/// `ψ = −(2/(n−2)) ln u`, and compares them.
pub fn consistency_check(u: &FieldOracle, x: &[f64], n: usize, tol: f64) -> Result<ConsistencyReport> {
    if n < 3 {
        return arg(format!("conformal identities need n >= 3, got {n}"));
    }
    let ju = u.jet(x)?;
    if !(ju.s > 0.0) {
        return domain(format!("u must be positive, got {}", ju.s));
    }
    let a_u = conformal_hessian_u(&ju, n)?;
    let k = -2.0 / (n as f64 - 2.0);
    let d = ju.dim();

    // w = u^k by the chain rule
    let w = ju.s.powf(k);
    let w1 = k * w / ju.s;
    let w2 = k * (k - 1.0) * w / (ju.s * ju.s);
    let jw = Jet2 {
        x: x.to_vec(),
        s: w,
        p: ju.p.iter().map(|a| w1 * a).collect(),
        h: {
            let mut h = ju.h.scale(w1);
            h.add_outer(w2, &ju.p);
            h
        },
    };
    let a_w = conformal_a_w(&jw);

    // ψ = k ln u
    let psi = k * ju.s.ln();
    let grad: Vec<f64> = ju.p.iter().map(|a| k * a / ju.s).collect();
    let mut hpsi = ju.h.scale(k / ju.s);
    hpsi.add_outer(-k / (ju.s * ju.s), &ju.p);
    let jpsi = Jet2 { x: x.to_vec(), s: psi, p: grad, h: hpsi };
    let a_psi_scaled = conformal_a_psi(&jpsi).scale((2.0 * psi).exp());

    debug_assert_eq!(a_u.dim(), d);
    let deviation = a_u.max_abs_diff(&a_w).max(a_u.max_abs_diff(&a_psi_scaled)).max(a_w.max_abs_diff(&a_psi_scaled));
    Ok(ConsistencyReport { a_u, a_w, a_psi_scaled, deviation, pass: deviation <= tol })
}

/// Kelvin transform `u_{x,λ}(y) = λ^{n−2}/|y−x|^{n−2} · u(x + λ²(y−x)/|y−x|²)`.
pub fn kelvin(u: &impl ScalarField, x: &[f64], lambda: f64, y: &[f64], n: usize) -> Result<f64> {
    if n < 3 {
        return arg(format!("Kelvin transform needs n >= 3, got {n}"));
    }
    if !(lambda > 0.0) {
        return arg(format!("radius must be positive, got {lambda}"));
    }
    if x.len() != y.len() {
        return arg("points have different dimensions");
    }
    let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let r2 = dot(&d, &d);
    if r2 == 0.0 {
        return domain("Kelvin transform undefined at the center");
    }
    let scale = lambda * lambda / r2;
    let z: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + scale * b).collect();
    Ok((lambda * lambda / r2).powf((n as f64 - 2.0) / 2.0) * u.value(&z))
}

/// `R = ¼ (sup u / inf u)^{−1/(n−2)}`.
pub fn moving_sphere_radius(sup_u: f64, inf_u: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return arg(format!("moving spheres need n >= 3, got {n}"));
    }
    if !(inf_u > 0.0) || !(sup_u >= inf_u) {
        return domain(format!("need 0 < inf u <= sup u, got inf {inf_u}, sup {sup_u}"));
    }
    Ok(0.25 * (sup_u / inf_u).powf(-1.0 / (n as f64 - 2.0)))
}
