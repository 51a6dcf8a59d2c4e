use crate::envelopes::GridFn;
use crate::error::{Error, Result};
use crate::matcone::{ConeKind, ConeSpec, SymMatrix};
use crate::operators::{Jet2, OperatorSpec};
use crate::viscosity::{centred, line_jet, Geometry};

/// Neighbour values around one node; the centre value is the unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub geom: Geometry,
    /// Coordinates of the node on the grid.
    pub at: Vec<f64>,
    pub h: Vec<f64>,
    /// `(left, right)` along each grid axis.
    pub pairs: Vec<(f64, f64)>,
    /// `(+,+), (+,−), (−,+), (−,−)` diagonal neighbours on 2D grids.
    pub corners: Option<[f64; 4]>,
}

impl Stencil {
    /// `None` at boundary nodes or next to masked values.
    pub fn from_grid(u: &GridFn, geom: Geometry, i: usize) -> Option<Stencil> {
        if !u.is_interior(i) {
            return None;
        }
        let mut pairs = Vec::with_capacity(2);
        for a in 0..u.dim() {
            let (l, r) = u.axis_pair(i, a)?;
            let (vl, vr) = (u.value(l), u.value(r));
            if !(vl.is_finite() && vr.is_finite()) {
                return None;
            }
            pairs.push((vl, vr));
        }
        let corners = if u.dim() == 2 {
            let nx = u.shape()[0];
            let c = [u.value(i + nx + 1), u.value(i + 1 - nx), u.value(i + nx - 1), u.value(i - nx - 1)];
            if c.iter().any(|v| !v.is_finite()) {
                return None;
            }
            Some(c)
        } else {
            None
        };
        if let Geometry::Radial { .. } = geom {
            if !(u.coord(i, 0) > 0.0) {
                return None;
            }
        }
        Some(Stencil { geom, at: u.coords(i), h: u.h().to_vec(), pairs, corners })
    }

    /// Discrete jet with centre value `c`.
    pub fn jet(&self, c: f64) -> Jet2 {
        match self.corners {
            Some(k) => {
                let (px, hxx) = centred(self.pairs[0].0, c, self.pairs[0].1, self.h[0]);
                let (py, hyy) = centred(self.pairs[1].0, c, self.pairs[1].1, self.h[1]);
                let hxy = (k[0] - k[1] - k[2] + k[3]) / (4.0 * self.h[0] * self.h[1]);
                let mut h = SymMatrix::zeros(2);
                h.set(0, 0, hxx);
                h.set(1, 1, hyy);
                h.set(0, 1, hxy);
                Jet2 { x: self.at.clone(), s: c, p: vec![px, py], h }
            }
            None => {
                let (d1, d2) = centred(self.pairs[0].0, c, self.pairs[0].1, self.h[0]);
                line_jet(self.geom, self.at[0], c, d1, d2).expect("radial stencils have r > 0")
            }
        }
    }

    pub fn margin(&self, c: f64, f: &OperatorSpec, u: &ConeSpec) -> f64 {
        u.margin_matrix(&f.eval(&self.jet(c)))
    }

    /// `−∂(margin)/∂c` for trace-type cones: `Σ 2/h²`.
    pub fn trace_slope(&self) -> f64 {
        self.h.iter().map(|h| 2.0 / (h * h)).sum()
    }
}

/// Whether the margin is affine in the centre value with slope
/// `−Σ 2/h²`: trace-type cones and `L` independent of `s`.
pub fn affine_case(f: &OperatorSpec, u: &ConeSpec) -> bool {
    matches!(u.kind, ConeKind::TraceCone | ConeKind::GammaK(1)) && !f.depends_on_s()
}

/// Centre value where the discrete `F` crosses `∂U`. The margin must be
/// non-negative at `bracket.0` and non-positive at `bracket.1`; raising
/// the centre lowers the discrete Hessian.
pub fn pointwise_root(st: &Stencil, f: &OperatorSpec, u: &ConeSpec, bracket: (f64, f64), depth: usize) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo <= hi) {
        return Err(Error::Bracket(format!("empty bracket [{lo}, {hi}]")));
    }
    let (mlo, mhi) = (st.margin(lo, f, u), st.margin(hi, f, u));
    if mlo == 0.0 {
        return Ok(lo);
    }
    if mhi == 0.0 {
        return Ok(hi);
    }
    if !(mlo > 0.0 && mhi < 0.0) {
        return Err(Error::Bracket(format!("no sign change: margin {mlo} at {lo}, {mhi} at {hi}")));
    }
    if affine_case(f, u) {
        let c = st.margin(0.0, f, u) / st.trace_slope();
        return Ok(c.clamp(lo, hi));
    }
    for _ in 0..depth {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = st.margin(mid, f, u);
        if m > 0.0 {
            lo = mid;
        } else if m < 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root near `c0`, widening the bracket geometrically until it straddles
/// the crossing.
pub fn root_near(st: &Stencil, f: &OperatorSpec, u: &ConeSpec, c0: f64, depth: usize) -> Result<f64> {
    if affine_case(f, u) {
        return Ok(st.margin(0.0, f, u) / st.trace_slope());
    }
    let m0 = st.margin(c0, f, u);
    if m0 == 0.0 {
        return Ok(c0);
    }
    let mut step = 1e-6 * (1.0 + c0.abs());
    for _ in 0..200 {
        let c1 = if m0 > 0.0 { c0 + step } else { c0 - step };
        let m1 = st.margin(c1, f, u);
        if (m0 > 0.0) != (m1 > 0.0) || m1 == 0.0 {
            let bracket = if m0 > 0.0 { (c0, c1) } else { (c1, c0) };
            return pointwise_root(st, f, u, bracket, depth);
        }
        step *= 2.0;
        if !step.is_finite() {
            break;
        }
    }
    Err(Error::Bracket(format!("no crossing found near {c0}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn slab(l: f64, r: f64, h: f64) -> Stencil {
        Stencil { geom: Geometry::Slab { n: 2 }, at: vec![0.3], h: vec![h], pairs: vec![(l, r)], corners: None }
    }

    fn trace2() -> ConeSpec {
        ConeSpec::new(ConeKind::TraceCone, 2).unwrap()
    }

    #[test]
    fn laplace_root_is_the_midpoint() {
        let f = OperatorSpec::QuadConst { alpha: 0.0, beta: 0.0 };
        let st = slab(0.2, 1.0, 0.1);
        let c = pointwise_root(&st, &f, &trace2(), (-10.0, 10.0), 200).unwrap();
        assert!((c - 0.6).abs() < 1e-15);
    }

    #[test]
    fn quadratic_gradient_root_matches_algebra() {
        // trace F = (l − 2c + r)/h² + (α − 2β)p², p = (r − l)/2h
        let (alpha, beta, l, r, h) = (1.5, 0.25, 0.4, 0.9, 0.05);
        let f = OperatorSpec::QuadConst { alpha, beta };
        let p = (r - l) / (2.0 * h);
        let expect = 0.5 * (l + r) + 0.5 * h * h * (alpha - 2.0 * beta) * p * p;
        for u in [trace2(), ConeSpec::new(ConeKind::GammaK(1), 2).unwrap()] {
            let c = pointwise_root(&slab(l, r, h), &f, &u, (-100.0, 100.0), 200).unwrap();
            assert!((c - expect).abs() < 1e-13, "{c} vs {expect}");
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        // the same crossing with an s-dependent term that vanishes: forces bisection
        let f = OperatorSpec::QuadVar {
            alpha: crate::operators::NamedCoeff::new("one", |_, _| 1.5),
            beta: crate::operators::NamedCoeff::new("quarter", |_, _| 0.25),
            m: 2.0,
        };
        let (l, r, h) = (0.4, 0.9, 0.05);
        let p = (r - l) / (2.0 * h);
        let expect = 0.5 * (l + r) + 0.5 * h * h * (1.5 - 0.5) * p * p;
        let c = pointwise_root(&slab(l, r, h), &f, &trace2(), (-100.0, 100.0), 200).unwrap();
        assert!((c - expect).abs() < 1e-12);
        let c = root_near(&slab(l, r, h), &f, &trace2(), 50.0, 200).unwrap();
        assert!((c - expect).abs() < 1e-12);
    }

    #[test]
    fn crossing_is_on_the_boundary() {
        let f = OperatorSpec::QuadConst { alpha: 1.0, beta: 0.0 };
        let u = ConeSpec::new(ConeKind::PosDef, 3).unwrap();
        let st = Stencil {
            geom: Geometry::Radial { n: 3 },
            at: vec![0.7],
            h: vec![0.01],
            pairs: vec![(0.2, 0.25)],
            corners: None,
        };
        let c = root_near(&st, &f, &u, 0.0, 200).unwrap();
        assert!(st.margin(c, &f, &u).abs() < 1e-6);
    }

    #[test]
    fn bad_bracket_is_an_error() {
        let f = OperatorSpec::QuadConst { alpha: 0.0, beta: 0.0 };
        assert!(matches!(pointwise_root(&slab(0.0, 1.0, 0.1), &f, &trace2(), (0.6, 0.9), 100), Err(Error::Bracket(_))));
    }

    proptest! {
        // centred gradients keep the scheme monotone while |∂L/∂p|·h ≤ 1
        #[test]
        fn root_is_monotone_in_neighbours(l in -0.4f64..0.4, r in -0.4f64..0.4, bump in 0.0f64..0.01) {
            let f = OperatorSpec::QuadVar {
                alpha: crate::operators::NamedCoeff::new("a", |_, s| 0.5 + 0.25 * s.tanh()),
                beta: crate::operators::NamedCoeff::new("b", |_, s| 1.0 - 0.25 * s.tanh()),
                m: 2.0,
            };
            let u = trace2();
            let h = 0.001;
            let c0 = root_near(&slab(l, r, h), &f, &u, 0.0, 200).unwrap();
            let c1 = root_near(&slab(l + bump, r, h), &f, &u, 0.0, 200).unwrap();
            prop_assert!(c1 >= c0 - 1e-12);
        }
    }
}
