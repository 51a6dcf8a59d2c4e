use crate::envelopes::{envelope, GridFn, Side};
use crate::error::{arg, Result};
use crate::matcone::{ConeSpec, SymMatrix};
use crate::operators::OperatorSpec;

use super::discrete::{discrete_jet, Geometry};

/// Upper end of the search for the penalty constant `a`.
pub const A_MAX: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizationReport {
    /// `Lower` checks a supersolution through `w_ε`, `Upper` a subsolution
    /// through `v^ε`.
    pub side: Side,
    pub eps: f64,
    pub tol: f64,
    /// Smallest `a` that makes every checked node pass.
    pub a_fit: f64,
    pub checked: usize,
    /// Interior nodes without a discrete jet or above the amplitude bound.
    pub skipped: usize,
    /// Nodes no `a ≤ A_MAX` repairs.
    pub infeasible: Vec<usize>,
}

impl RegularizationReport {
    pub fn pass(&self) -> bool {
        self.infeasible.is_empty() && self.checked > 0
    }
}

/// Checks `F[w_ε] − a|x_*−x|(1 + |x_*−x|/ε)|∇w_ε|^m I ∉ U` (supersolutions,
/// `side = Lower`) or `F[v^ε] + a|x^*−x|(1 + |x^*−x|/ε)|∇v^ε|^m I ∈ Ū`
/// (subsolutions, `side = Upper`) at every interior node, and fits the
/// smallest sample-feasible `a`.
#[allow(clippy::too_many_arguments)]
pub fn envelope_error_check(
    src: &GridFn,
    geom: Geometry,
    eps: f64,
    side: Side,
    f: &OperatorSpec,
    u: &ConeSpec,
    big_m: f64,
    tol: f64,
) -> Result<RegularizationReport> {
    geom.check(src)?;
    if u.n != geom.n() {
        return arg("cone and geometry dimensions differ");
    }
    if !(tol > 0.0) || !(big_m > 0.0) {
        return arg("tol and M must be positive");
    }
    let env = envelope(src, eps, side)?;
    let eff = tol + 4.0 * src.h_max();
    let m = f.exponent();
    let mut a_fit: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    let mut infeasible = Vec::new();
    for i in 0..src.len() {
        if !src.is_interior(i) {
            continue;
        }
        let star = env.argpt[i];
        let Some(j) = discrete_jet(&env.env, geom, i) else {
            skipped += 1;
            continue;
        };
        if j.s.abs() + src.value(star).abs() > big_m {
            skipped += 1;
            continue;
        }
        checked += 1;
        let d = src.dist2(i, star).sqrt();
        let kappa = d * (1.0 + d / eps) * j.p_norm().powf(m);
        let fm = f.eval(&j);
        // signature holds at penalty a
        let ok = |a: f64| {
            let mut mm: SymMatrix = fm.clone();
            match side {
                Side::Lower => {
                    mm.add_diag(-a * kappa);
                    u.margin_matrix(&mm) <= eff
                }
                Side::Upper => {
                    mm.add_diag(a * kappa);
                    u.margin_matrix(&mm) >= -eff
                }
            }
        };
        if ok(0.0) {
            continue;
        }
        if kappa == 0.0 || !ok(A_MAX) {
            infeasible.push(i);
            continue;
        }
        let (mut lo, mut hi) = (0.0, A_MAX);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-12 * hi {
                break;
            }
        }
        a_fit = a_fit.max(hi);
    }
    Ok(RegularizationReport { side, eps, tol: eff, a_fit, checked, skipped, infeasible })
}
