use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::envelopes::GridFn;
use crate::error::{arg, Error, Result};
use crate::matcone::{classify, ConeClass, ConeSpec, SymMatrix, Verdict};
use crate::operators::{Jet2, OperatorSpec};

/// How grid nodes map to points of `ℝⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    /// 1D grid along `x₁`, constant in the remaining `n − 1` variables.
    Slab { n: usize },
    /// 1D grid in `r = |x|` for radial functions on `ℝⁿ`.
    Radial { n: usize },
    /// 2D grid in the plane, `n = 2`.
    Plane,
}

impl Geometry {
    /// Dimension of the jets.
    pub fn n(self) -> usize {
        match self {
            Geometry::Slab { n } | Geometry::Radial { n } => n,
            Geometry::Plane => 2,
        }
    }

    pub fn grid_dim(self) -> usize {
        match self {
            Geometry::Plane => 2,
            _ => 1,
        }
    }

    pub fn check(self, g: &GridFn) -> Result<()> {
        if g.dim() != self.grid_dim() {
            return arg(format!("{self} geometry needs a {}D grid", self.grid_dim()));
        }
        let n = self.n();
        if !(2..=16).contains(&n) {
            return arg(format!("jet dimension must lie in 2..=16, got {n}"));
        }
        if let Geometry::Radial { .. } = self {
            if g.lo()[0] < 0.0 {
                return arg("radial grids need r >= 0");
            }
        }
        Ok(())
    }

    /// Whether node `i` lies on the boundary of the domain. The centre of
    /// a radial grid is not a boundary point.
    pub fn is_boundary(self, g: &GridFn, i: usize) -> bool {
        if g.is_interior(i) {
            return false;
        }
        !(matches!(self, Geometry::Radial { .. }) && i == 0 && g.coord(0, 0) == 0.0)
    }

    /// The point of `ℝⁿ` that node `i` stands for.
    pub fn point(self, g: &GridFn, i: usize) -> Vec<f64> {
        match self {
            Geometry::Plane => g.coords(i),
            Geometry::Slab { n } | Geometry::Radial { n } => {
                let mut x = vec![0.0; n];
                x[0] = g.coord(i, 0);
                x
            }
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Geometry::Slab { n } => write!(f, "slab:{n}"),
            Geometry::Radial { n } => write!(f, "radial:{n}"),
            Geometry::Plane => f.write_str("plane"),
        }
    }
}

impl FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "plane" {
            return Ok(Geometry::Plane);
        }
        let (kind, n) = s.split_once(':').ok_or_else(|| Error::Parse(format!("bad geometry '{s}'")))?;
        let n: usize = n.trim().parse().map_err(|_| Error::Parse(format!("bad dimension in '{s}'")))?;
        match kind.trim() {
            "slab" => Ok(Geometry::Slab { n }),
            "radial" => Ok(Geometry::Radial { n }),
            _ => Err(Error::Parse(format!("unknown geometry '{s}'"))),
        }
    }
}

/// First and second centred differences from three values.
pub(crate) fn centred(l: f64, c: f64, r: f64, h: f64) -> (f64, f64) {
    ((r - l) / (2.0 * h), (l - 2.0 * c + r) / (h * h))
}

/// Jet assembled from one value, one gradient component along `x₁` and the
/// second difference, for the 1D geometries.
pub(crate) fn line_jet(geom: Geometry, x1: f64, s: f64, d1: f64, d2: f64) -> Option<Jet2> {
    let n = geom.n();
    let mut x = vec![0.0; n];
    x[0] = x1;
    let mut p = vec![0.0; n];
    p[0] = d1;
    let mut h = SymMatrix::zeros(n);
    h.set(0, 0, d2);
    if let Geometry::Radial { .. } = geom {
        if !(x1 > 0.0) {
            return None;
        }
        for k in 1..n {
            h.set(k, k, d1 / x1);
        }
    }
    Some(Jet2 { x, s, p, h })
}

/// Centred-difference jet at an interior node; `None` at boundary nodes,
/// next to masks, or at the centre of a radial grid.
pub fn discrete_jet(g: &GridFn, geom: Geometry, i: usize) -> Option<Jet2> {
    if !g.is_interior(i) || g.is_masked(i) {
        return None;
    }
    let c = g.value(i);
    match geom {
        Geometry::Plane => {
            let (hx, hy) = (g.h()[0], g.h()[1]);
            let (l, r) = g.axis_pair(i, 0)?;
            let (d, u) = g.axis_pair(i, 1)?;
            let vals = [g.value(l), g.value(r), g.value(d), g.value(u)];
            // (+,+), (+,−), (−,+), (−,−)
            let corners = [g.value(u + 1), g.value(d + 1), g.value(u - 1), g.value(d - 1)];
            if vals.iter().chain(corners.iter()).any(|v| !v.is_finite()) {
                return None;
            }
            let (px, hxx) = centred(vals[0], c, vals[1], hx);
            let (py, hyy) = centred(vals[2], c, vals[3], hy);
            let hxy = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * hx * hy);
            let mut h = SymMatrix::zeros(2);
            h.set(0, 0, hxx);
            h.set(1, 1, hyy);
            h.set(0, 1, hxy);
            Some(Jet2 { x: g.coords(i), s: c, p: vec![px, py], h })
        }
        _ => {
            let (l, r) = g.axis_pair(i, 0)?;
            let (vl, vr) = (g.value(l), g.value(r));
            if !(vl.is_finite() && vr.is_finite()) {
                return None;
            }
            let (d1, d2) = centred(vl, c, vr, g.h()[0]);
            line_jet(geom, g.coord(i, 0), c, d1, d2)
        }
    }
}

/// `classify(F(j), U, tol)`.
pub fn jet_classify(j: &Jet2, f: &OperatorSpec, u: &ConeSpec, tol: f64) -> Result<ConeClass> {
    if !(tol > 0.0) {
        return arg("tol must be positive");
    }
    if j.dim() != u.n {
        return arg(format!("jet dimension {} differs from cone dimension {}", j.dim(), u.n));
    }
    Ok(classify(&f.eval(j), u, tol))
}

/// Default grid-level tolerance `1e−6 + 4h²`.
pub fn default_grid_tol(h: f64) -> f64 {
    1e-6 + 4.0 * h * h
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRow {
    pub node: usize,
    pub class: ConeClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub rows: Vec<NodeRow>,
    /// Tolerance actually used, `tol + 4h`.
    pub tol: f64,
    /// Nodes where `F ∉ Ū` at tolerance: the subsolution signature fails.
    pub sub_failures: Vec<usize>,
    /// Nodes where `F ∈ U` at tolerance: the supersolution signature fails.
    pub super_failures: Vec<usize>,
    /// Interior nodes without a discrete jet.
    pub skipped: usize,
}

impl GridReport {
    pub fn count(&self, v: Verdict) -> usize {
        self.rows.iter().filter(|r| r.class.verdict == v).count()
    }

    /// Consistent with a subsolution at every checked node.
    pub fn consistent_sub(&self) -> bool {
        self.sub_failures.is_empty()
    }

    pub fn consistent_super(&self) -> bool {
        self.super_failures.is_empty()
    }

    pub fn consistent_solution(&self) -> bool {
        self.consistent_sub() && self.consistent_super()
    }

    pub fn max_abs_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.class.margin.abs()).fold(0.0, f64::max)
    }

    /// CSV `node_index,class,margin`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "node_index,class,margin")?;
        for r in &self.rows {
            writeln!(out, "{},{},{:.17e}", r.node, r.class.verdict.label(), r.class.margin)?;
        }
        Ok(())
    }
}

/// Classifies the discrete `F` at every interior node. Centred-difference
/// jets are one family of touching test functions, so a clean report means
/// "consistent with", never "certified".
pub fn grid_verify(psi: &GridFn, geom: Geometry, f: &OperatorSpec, u: &ConeSpec, tol: f64) -> Result<GridReport> {
    geom.check(psi)?;
    if u.n != geom.n() {
        return arg("cone and geometry dimensions differ");
    }
    if !(tol > 0.0) {
        return arg("tol must be positive");
    }
    let eff = tol + 4.0 * psi.h_max();
    let mut rows = Vec::new();
    let mut sub_failures = Vec::new();
    let mut super_failures = Vec::new();
    let mut skipped = 0;
    for i in 0..psi.len() {
        if !psi.is_interior(i) {
            continue;
        }
        let Some(j) = discrete_jet(psi, geom, i) else {
            skipped += 1;
            continue;
        };
        let class = classify(&f.eval(&j), u, eff);
        match class.verdict {
            Verdict::Outside => sub_failures.push(i),
            Verdict::Interior => super_failures.push(i),
            Verdict::Boundary => {}
        }
        rows.push(NodeRow { node: i, class });
    }
    Ok(GridReport { rows, tol: eff, sub_failures, super_failures, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcone::ConeKind;
    use crate::radial::RadialProfile;

    #[test]
    fn constant_jets_sit_on_the_boundary() {
        let u = ConeSpec::new(ConeKind::GammaK(2), 3).unwrap();
        let j = Jet2::constant(vec![0.1, 0.2, 0.3], 4.0);
        let c = jet_classify(&j, &OperatorSpec::QuadConst { alpha: 1.0, beta: 0.5 }, &u, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::Boundary);
    }

    #[test]
    fn identity_hessian_is_interior() {
        let u = ConeSpec::new(ConeKind::GammaK(3), 3).unwrap();
        let j = Jet2::new(vec![0.0; 3], 0.0, vec![0.0; 3], SymMatrix::identity(3)).unwrap();
        let c = jet_classify(&j, &OperatorSpec::ConformalA, &u, 1e-8).unwrap();
        assert_eq!(c.verdict, Verdict::Interior);
        assert!(jet_classify(&j, &OperatorSpec::ConformalA, &u, 0.0).is_err());
    }

    #[test]
    fn sink_profile_sits_on_the_boundary() {
        // μ = 0 along the gradient, ν < 0 across
        let m = 3.0;
        let f: OperatorSpec = format!("genL:sink:{m}").parse().unwrap();
        let u = ConeSpec::new(ConeKind::AtLeastOnePositive, 3).unwrap();
        let prof = RadialProfile::BLipCtex { m };
        for k in 1..20 {
            let r = 1.0 + 0.05 * k as f64;
            let (s, d1, d2) = prof.eval(r).unwrap();
            let j = line_jet(Geometry::Radial { n: 3 }, r, s, d1, d2).unwrap();
            let c = jet_classify(&j, &f, &u, 1e-8).unwrap();
            assert_eq!(c.verdict, Verdict::Boundary, "r={r} margin={}", c.margin);
        }
    }

    #[test]
    fn half_square_is_interior_everywhere() {
        let g = GridFn::new_2d([-1.0, -1.0], [1.0, 1.0], [21, 21], |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let u = ConeSpec::new(ConeKind::GammaK(2), 2).unwrap();
        let f = OperatorSpec::QuadConst { alpha: 0.0, beta: 0.0 };
        let r = grid_verify(&g, Geometry::Plane, &f, &u, 1e-8).unwrap();
        assert_eq!(r.count(Verdict::Interior), 19 * 19);
        assert!(r.consistent_sub());
        assert!(!r.consistent_super());
    }

    #[test]
    fn log_singular_family_verifies_as_solution() {
        let (mu, alpha, beta, n) = (1.0, 1.0, 0.0, 3);
        let prof = RadialProfile::LogSingular { mu, alpha, beta, n };
        let g = GridFn::new_1d(0.5, 1.0, 1001, |r| prof.value(r).unwrap()).unwrap();
        let u = ConeSpec::new(ConeKind::TraceCone, 3).unwrap();
        let f = OperatorSpec::QuadConst { alpha, beta };
        let r = grid_verify(&g, Geometry::Radial { n }, &f, &u, default_grid_tol(g.h()[0])).unwrap();
        assert!(r.consistent_solution(), "max margin {}", r.max_abs_margin());
        assert!(r.max_abs_margin() < 1e-4);
    }

    #[test]
    fn holder_pair_verifies_as_solutions() {
        let (gamma, n) = (0.5, 3);
        let f: OperatorSpec = format!("genL:holder:{gamma}").parse().unwrap();
        let u = ConeSpec::new(ConeKind::TraceCone, n).unwrap();
        let prof = RadialProfile::HolderCtex { gamma, n };
        let w = GridFn::new_1d(0.0, 1.0, 2001, |r| prof.value(r).unwrap()).unwrap();
        let zero = w.map(|_| 0.0);
        for g in [&w, &zero] {
            let r = grid_verify(g, Geometry::Radial { n }, &f, &u, default_grid_tol(w.h()[0])).unwrap();
            assert!(r.consistent_solution(), "max margin {}", r.max_abs_margin());
        }
    }

    #[test]
    fn geometry_text_round_trip() {
        for g in [Geometry::Slab { n: 2 }, Geometry::Radial { n: 5 }, Geometry::Plane] {
            assert_eq!(g.to_string().parse::<Geometry>().unwrap(), g);
        }
        assert!("disc:2".parse::<Geometry>().is_err());
    }

    #[test]
    fn radial_centre_is_not_boundary() {
        let g = GridFn::new_1d(0.0, 1.0, 11, |r| r).unwrap();
        let geom = Geometry::Radial { n: 3 };
        assert!(!geom.is_boundary(&g, 0));
        assert!(geom.is_boundary(&g, 10));
        assert!(Geometry::Slab { n: 2 }.is_boundary(&g, 0));
    }
}
