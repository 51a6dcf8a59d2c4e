use std::io::{BufRead, Read, Write};

use crate::envelopes::{fmt_real, GridFn};
use crate::error::{arg, Error, Result};
use crate::matcone::{ConeKind, ConeSpec};
use crate::operators::OperatorSpec;
use crate::viscosity::Geometry;

use super::solver::{SolverConfig, SweepOrder};

/// Dirichlet problem with an ordered sub/supersolution pair that agrees on
/// the boundary. `sub.value(i)` is the boundary datum at boundary nodes.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub geom: Geometry,
    pub f: OperatorSpec,
    pub u: ConeSpec,
    pub sub: GridFn,
    pub sup: GridFn,
}

impl DirichletProblem {
    pub fn new(geom: Geometry, f: OperatorSpec, u: ConeSpec, sub: GridFn, sup: GridFn) -> Result<Self> {
        geom.check(&sub)?;
        if !sub.same_grid(&sup) {
            return arg("sub and super live on different grids");
        }
        if u.n != geom.n() {
            return arg(format!("cone dimension {} does not match geometry {geom}", u.n));
        }
        for i in 0..sub.len() {
            let (a, b) = (sub.value(i), sup.value(i));
            if !(a.is_finite() && b.is_finite()) {
                return arg(format!("non-finite sub/super value at node {i}"));
            }
            if a > b {
                return arg(format!("sub exceeds super at node {i}: {a} > {b}"));
            }
            if geom.is_boundary(&sub, i) && a != b {
                return arg(format!("sub and super differ at boundary node {i}: {a} vs {b}"));
            }
        }
        if matches!(geom, Geometry::Radial { .. }) && sub.coord(0, 0) == 0.0 {
            return arg("radial Dirichlet problems need r > 0 on the whole grid");
        }
        Ok(DirichletProblem { geom, f, u, sub, sup })
    }

    /// Sub and super from formulas, with both replaced by `boundary` on
    /// boundary nodes.
    pub fn from_formulas(
        geom: Geometry,
        f: OperatorSpec,
        u: ConeSpec,
        grid: &GridFn,
        sub: impl Fn(&[f64]) -> f64,
        sup: impl Fn(&[f64]) -> f64,
        boundary: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let mut a = grid.clone();
        let mut b = grid.clone();
        for i in 0..grid.len() {
            let x = grid.coords(i);
            if geom.is_boundary(grid, i) {
                let g = boundary(&x);
                a.set(i, g);
                b.set(i, g);
            } else {
                a.set(i, sub(&x));
                b.set(i, sup(&x));
            }
        }
        DirichletProblem::new(geom, f, u, a, b)
    }

    /// `F = quad:1:0`, trace cone, `n = 3`, on `½ ≤ r ≤ 1` with `intervals`
    /// grid steps and data from `ln(1/r + 1)`, which is the exact solution.
    pub fn annulus(intervals: usize) -> Result<Self> {
        let (a, b) = (DirichletProblem::annulus_exact(0.5), DirichletProblem::annulus_exact(1.0));
        Ok(DirichletProblem::annulus_quad(1.0, 0.0, 3, a, b, intervals)?.0)
    }

    /// Exact solution of [`DirichletProblem::annulus`].
    pub fn annulus_exact(r: f64) -> f64 {
        (1.0 / r + 1.0).ln()
    }

    /// `F = quad:α:β`, trace cone, on `½ ≤ r ≤ 1` in `ℝⁿ` with data `inner`
    /// at `r = ½` and `outer` at `r = 1`. With `c = α − nβ` the trace
    /// equation says `e^{cψ}` is harmonic, so the exact solution is
    /// `ln(A + B r^{2−n})/c` (or `A + B r^{2−n}` when `c = 0`). Sub and super
    /// perturb the harmonic part by `∓κτ`, where `Δτ = −1` and `τ` vanishes
    /// on both spheres. Returns the problem and the exact solution.
    pub fn annulus_quad(
        alpha: f64,
        beta: f64,
        n: usize,
        inner: f64,
        outer: f64,
        intervals: usize,
    ) -> Result<(Self, impl Fn(f64) -> f64)> {
        if intervals < 2 {
            return arg("need at least 2 intervals");
        }
        if n < 3 {
            return arg("annulus problems need n >= 3");
        }
        let nf = n as f64;
        let c = alpha - nf * beta;
        let q = 2.0f64.powi(n as i32 - 2);
        // torsion τ = −r²/2n + A₀ r^{2−n} + B₀
        let a0 = -3.0 / (8.0 * nf * (q - 1.0));
        let b0 = 1.0 / (2.0 * nf) - a0;
        let tau = move |r: f64| -r * r / (2.0 * nf) + a0 * r.powf(2.0 - nf) + b0;
        let tau_max = (0..=64).map(|k| tau(0.5 + k as f64 / 128.0)).fold(0.0, f64::max);
        // harmonic part fitted to the transformed data
        let lift = move |g: f64| if c == 0.0 { g } else { (c * g).exp() };
        let (e_in, e_out) = (lift(inner), lift(outer));
        let bh = (e_in - e_out) / (q - 1.0);
        let ah = e_out - bh;
        let harm = move |r: f64| ah + bh * r.powf(2.0 - nf);
        let e_min = e_in.min(e_out);
        let kappa = if c == 0.0 { 1.0 } else { (0.5 * e_min / tau_max).min(1.0) };
        let back = move |e: f64| if c == 0.0 { e } else { e.ln() / c };
        // e^{cψ} superharmonic gives a supersolution when c > 0, subharmonic when c < 0
        let sgn = if c < 0.0 { -1.0 } else { 1.0 };
        let grid = GridFn::new_1d(0.5, 1.0, intervals + 1, |_| 0.0)?;
        let problem = DirichletProblem::from_formulas(
            Geometry::Radial { n },
            OperatorSpec::QuadConst { alpha, beta },
            ConeSpec::new(ConeKind::TraceCone, n)?,
            &grid,
            |x| back(harm(x[0]) - sgn * kappa * tau(x[0])),
            |x| back(harm(x[0]) + sgn * kappa * tau(x[0])),
            |x| if x[0] < 0.75 { inner } else { outer },
        )?;
        Ok((problem, move |r: f64| back(harm(r))))
    }

    /// `F = quad:1:0` on the plane box `[½, 1]²` with boundary data from the
    /// planar slice of `ln(1/|x| + 1)`. That slice is a subsolution; the
    /// super adds a paraboloid to `e^ψ` that beats its Laplacian.
    pub fn plane_box(count: usize, cone: ConeKind) -> Result<Self> {
        let grid = GridFn::new_2d([0.5, 0.5], [1.0, 1.0], [count, count], |_| 0.0)?;
        let e = |x: &[f64]| 1.0 / (x[0] * x[0] + x[1] * x[1]).sqrt() + 1.0;
        // Δ(1/ρ) = 1/ρ³ ≤ 2√2 on the box; c(R² − |x − x₀|²)/4 has Laplacian −c
        let bump = |x: &[f64]| {
            let (dx, dy) = (x[0] - 0.75, x[1] - 0.75);
            3.0 * (0.25 - dx * dx - dy * dy) / 4.0
        };
        DirichletProblem::from_formulas(
            Geometry::Plane,
            OperatorSpec::QuadConst { alpha: 1.0, beta: 0.0 },
            ConeSpec::new(cone, 2)?,
            &grid,
            |x| e(x).ln(),
            |x| (e(x) + bump(x)).ln(),
            |x| e(x).ln(),
        )
    }

    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.sub.len()).filter(|&i| self.geom.is_boundary(&self.sub, i)).collect()
    }

    /// Same problem with sub and super replaced; boundary data come from
    /// the new pair.
    pub fn with_pair(&self, sub: GridFn, sup: GridFn) -> Result<Self> {
        DirichletProblem::new(self.geom, self.f.clone(), self.u.clone(), sub, sup)
    }

    /// Header lines `key=value` (`F`, `U`, `geometry`, and optionally `tol`,
    /// `max_sweeps`, `order`), then CSV with columns `x[,y],sub,super`.
    pub fn read(input: impl Read) -> Result<(Self, SolverConfig)> {
        let mut reader = std::io::BufReader::new(input);
        let mut header = Vec::new();
        let mut body = String::new();
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(|e| Error::Parse(e.to_string()))?;
            if n == 0 {
                break;
            }
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            match t.split_once('=') {
                Some((k, v)) if !t.contains(',') => header.push((k.trim().to_string(), v.trim().to_string())),
                _ => {
                    body.push_str(&line);
                    reader.read_to_string(&mut body).map_err(|e| Error::Parse(e.to_string()))?;
                    break;
                }
            }
        }
        let get = |k: &str| header.iter().find(|(a, _)| a == k).map(|(_, v)| v.as_str());
        let geom: Geometry = get("geometry").ok_or_else(|| Error::Parse("missing geometry=".into()))?.parse()?;
        let f: OperatorSpec = get("F").ok_or_else(|| Error::Parse("missing F=".into()))?.parse()?;
        let u = ConeSpec::parse(get("U").ok_or_else(|| Error::Parse("missing U=".into()))?, geom.n())?;
        let mut cfg = SolverConfig::default();
        if let Some(t) = get("tol") {
            cfg.tol = crate::text::parse_real(t)?;
        }
        if let Some(m) = get("max_sweeps") {
            cfg.max_sweeps = m.parse().map_err(|_| Error::Parse(format!("bad max_sweeps '{m}'")))?;
        }
        if let Some(o) = get("order") {
            cfg.order = o.parse()?;
        }
        for (k, _) in &header {
            if !["geometry", "F", "U", "tol", "max_sweeps", "order"].contains(&k.as_str()) {
                return Err(Error::Parse(format!("unknown header key '{k}'")));
            }
        }
        let mut grids = GridFn::read_csv_columns(body.as_bytes(), &["sub", "super"])?;
        let sup = grids.pop().unwrap();
        let sub = grids.pop().unwrap();
        Ok((DirichletProblem::new(geom, f, u, sub, sup)?, cfg))
    }

    /// Writes the format read by [`DirichletProblem::read`].
    pub fn write(&self, cfg: &SolverConfig, out: &mut impl Write) -> Result<()> {
        let io = |e: std::io::Error| Error::Parse(e.to_string());
        if !self.f.is_textual() {
            return arg(format!("operator {} has no text form", self.f));
        }
        writeln!(out, "geometry={}", self.geom).map_err(io)?;
        writeln!(out, "F={}", self.f).map_err(io)?;
        writeln!(out, "U={}", self.u).map_err(io)?;
        writeln!(out, "tol={}", fmt_real(cfg.tol)).map_err(io)?;
        writeln!(out, "max_sweeps={}", cfg.max_sweeps).map_err(io)?;
        writeln!(out, "order={}", cfg.order).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let cerr = |e: csv::Error| Error::Parse(e.to_string());
        let mut head = vec!["x"];
        if self.sub.dim() == 2 {
            head.push("y");
        }
        head.extend(["sub", "super"]);
        w.write_record(&head).map_err(cerr)?;
        for i in 0..self.sub.len() {
            let mut rec: Vec<String> = self.sub.coords(i).iter().map(|c| fmt_real(*c)).collect();
            rec.push(fmt_real(self.sub.value(i)));
            rec.push(fmt_real(self.sup.value(i)));
            w.write_record(&rec).map_err(cerr)?;
        }
        w.flush().map_err(io)
    }
}

impl std::fmt::Display for SweepOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SweepOrder::Lexicographic => "lexicographic",
            SweepOrder::RedBlack => "red_black",
        })
    }
}

impl std::str::FromStr for SweepOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lexicographic" => Ok(SweepOrder::Lexicographic),
            "red_black" => Ok(SweepOrder::RedBlack),
            _ => Err(Error::Parse(format!("unknown sweep order '{s}'"))),
        }
    }
}
