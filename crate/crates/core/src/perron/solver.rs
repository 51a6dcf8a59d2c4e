use std::io::Write;

use crate::envelopes::{fmt_real, GridFn};
use crate::error::{arg, Error, Result};
use crate::matcone::{ConeClass, Verdict};

use super::problem::DirichletProblem;
use super::stencil::{root_near, Stencil};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    Lexicographic,
    /// Nodes with even index sum first, then odd.
    RedBlack,
}

/// Which way iterates may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Start at the supersolution; iterates never increase.
    Descending,
    /// Start at the subsolution; iterates never decrease.
    Ascending,
    /// Plain Gauss–Seidel from an arbitrary start between sub and super.
    TwoSided,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Largest allowed `|root − u|` at an interior node.
    pub tol: f64,
    pub max_sweeps: usize,
    pub order: SweepOrder,
    pub bisection_depth: usize,
    /// Interleave a damped Newton step with each sweep on 1D grids.
    pub newton: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_sweeps: 100_000,
            order: SweepOrder::Lexicographic,
            bisection_depth: 200,
            newton: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    /// Largest `|target − u|` met during a sweep, or the largest node
    /// change of a Newton step.
    pub residual: f64,
    /// Step length, for Newton steps.
    pub newton_theta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PerronResult {
    pub u: GridFn,
    pub direction: Direction,
    pub sweeps: usize,
    pub newton_steps: usize,
    pub converged: bool,
    /// Largest `|clamp(root) − u|` over interior nodes after the last sweep.
    pub residual: f64,
    /// Estimated distance to the discrete solution, from the contraction
    /// of the last two sweeps.
    pub error_estimate: f64,
    /// Per interior node: the classification of `F` at the discrete jet.
    pub classes: Vec<(usize, ConeClass)>,
    /// Margin tolerance used for `classes`: the margin change caused by
    /// moving a node value by `tol`.
    pub class_tol: f64,
    /// `sub ≤ u ≤ super` after every sweep.
    pub sandwich_ok: bool,
    /// Iterates moved only in the allowed direction.
    pub monotone_ok: bool,
    pub history: Vec<SweepRecord>,
}

impl PerronResult {
    pub fn all_boundary(&self) -> bool {
        self.classes.iter().all(|(_, c)| c.verdict == Verdict::Boundary)
    }

    /// CSV `node,x[,y],u,residual_class`; boundary nodes carry `dirichlet`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let cerr = |e: csv::Error| Error::Parse(e.to_string());
        let mut head = vec!["node", "x"];
        if self.u.dim() == 2 {
            head.push("y");
        }
        head.extend(["u", "residual_class"]);
        w.write_record(&head).map_err(cerr)?;
        let mut cls = vec!["dirichlet"; self.u.len()];
        for (i, c) in &self.classes {
            cls[*i] = c.verdict.label();
        }
        for i in 0..self.u.len() {
            let mut rec = vec![i.to_string()];
            rec.extend(self.u.coords(i).iter().map(|c| fmt_real(*c)));
            rec.push(fmt_real(self.u.value(i)));
            rec.push(cls[i].to_string());
            w.write_record(&rec).map_err(cerr)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Descending iteration from the supersolution.
pub fn perron_solve(p: &DirichletProblem, cfg: &SolverConfig) -> Result<PerronResult> {
    solve_from(p, cfg, &p.sup, Direction::Descending)
}

/// Ascending iteration from the subsolution.
pub fn perron_solve_ascending(p: &DirichletProblem, cfg: &SolverConfig) -> Result<PerronResult> {
    solve_from(p, cfg, &p.sub, Direction::Ascending)
}

fn interior_order(p: &DirichletProblem, order: SweepOrder) -> Vec<usize> {
    let inner: Vec<usize> = (0..p.sub.len()).filter(|&i| !p.geom.is_boundary(&p.sub, i)).collect();
    match order {
        SweepOrder::Lexicographic => inner,
        SweepOrder::RedBlack => {
            let parity = |i: usize| {
                let m = p.sub.multi(i);
                (m[0] + if p.sub.dim() == 2 { m[1] } else { 0 }) % 2
            };
            let mut out: Vec<usize> = inner.iter().copied().filter(|&i| parity(i) == 0).collect();
            out.extend(inner.iter().copied().filter(|&i| parity(i) == 1));
            out
        }
    }
}

fn stencil(p: &DirichletProblem, u: &GridFn, i: usize) -> Result<Stencil> {
    Stencil::from_grid(u, p.geom, i).ok_or_else(|| Error::Internal(format!("node {i} has no full stencil")))
}

/// Iterates pointwise crossings from `init` until every interior node sits
/// within `tol` of its crossing (clamped to `[sub, super]`) and the
/// estimated error is below `tol`.
pub fn solve_from(p: &DirichletProblem, cfg: &SolverConfig, init: &GridFn, dir: Direction) -> Result<PerronResult> {
    if !(cfg.tol > 0.0) || cfg.max_sweeps == 0 {
        return arg("solver needs tol > 0 and max_sweeps > 0");
    }
    if !init.same_grid(&p.sub) {
        return arg("initial grid differs from the problem grid");
    }
    for i in 0..init.len() {
        let v = init.value(i);
        if !(v >= p.sub.value(i) && v <= p.sup.value(i)) {
            return Err(Error::Precondition(format!("initial value at node {i} leaves [sub, super]")));
        }
        if p.geom.is_boundary(&p.sub, i) && v != p.sub.value(i) {
            return Err(Error::Precondition(format!("initial value at boundary node {i} differs from the data")));
        }
    }
    let order = interior_order(p, cfg.order);
    let mut u = init.clone();
    let mut sandwich_ok = true;
    let mut monotone_ok = true;
    let mut converged = false;
    let newton_1d = cfg.newton && p.sub.dim() == 1;
    let mut newton_on = newton_1d;
    let mut newton_steps = 0;
    let mut history = Vec::new();
    let mut sweeps = 0;
    // Newton phase on 1D grids; sweeps afterwards certify the residual
    while newton_on && sweeps < cfg.max_sweeps {
        let before = u.values().to_vec();
        match newton_step(p, &mut u, dir, cfg.tol)? {
            Some((theta, step)) => {
                sweeps += 1;
                newton_steps += 1;
                track(p, &u, &before, dir, &mut sandwich_ok, &mut monotone_ok);
                history.push(SweepRecord { sweep: sweeps, residual: step, newton_theta: Some(theta) });
                if step <= 0.01 * cfg.tol {
                    newton_on = false;
                }
            }
            None => newton_on = false,
        }
    }
    let mut prev_residual: Option<f64> = None;
    let mut error_estimate = f64::INFINITY;
    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let before = u.values().to_vec();
        let mut residual: f64 = 0.0;
        let mut moved = false;
        for &i in &order {
            let st = stencil(p, &u, i)?;
            let ui = u.value(i);
            let root = root_near(&st, &p.f, &p.u, ui, cfg.bisection_depth)?;
            let target = root.clamp(p.sub.value(i), p.sup.value(i));
            residual = residual.max((target - ui).abs());
            let next = match dir {
                Direction::Descending => ui.min(target),
                Direction::Ascending => ui.max(target),
                Direction::TwoSided => target,
            };
            if next != ui {
                moved = true;
                u.set(i, next);
            }
        }
        track(p, &u, &before, dir, &mut sandwich_ok, &mut monotone_ok);
        history.push(SweepRecord { sweep: sweeps, residual, newton_theta: None });
        error_estimate = if newton_1d {
            // size of the next Newton correction
            match newton_direction(p, &u)? {
                Some((_, _, d, _)) => d.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(residual),
                None => f64::INFINITY,
            }
        } else {
            // a-posteriori bound ρ/(1 − ρ)·residual from the observed contraction
            match prev_residual {
                Some(prev) if residual < prev => residual * (residual / (prev - residual)).max(1.0),
                _ => 1e3 * residual,
            }
        };
        prev_residual = Some(residual);
        if residual <= cfg.tol && error_estimate <= cfg.tol {
            converged = true;
            break;
        }
        if !moved {
            // stuck against the allowed direction
            break;
        }
    }
    let (residual, classes, class_tol) = final_report(p, &u, cfg)?;
    converged = converged && residual <= cfg.tol;
    Ok(PerronResult {
        u,
        direction: dir,
        sweeps,
        newton_steps,
        converged,
        residual,
        error_estimate,
        classes,
        class_tol,
        sandwich_ok,
        monotone_ok,
        history,
    })
}

fn track(p: &DirichletProblem, u: &GridFn, before: &[f64], dir: Direction, sandwich: &mut bool, monotone: &mut bool) {
    for i in 0..u.len() {
        let v = u.value(i);
        if v < p.sub.value(i) || v > p.sup.value(i) {
            *sandwich = false;
        }
        match dir {
            Direction::Descending if v > before[i] => *monotone = false,
            Direction::Ascending if v < before[i] => *monotone = false,
            _ => {}
        }
    }
}

type Classes = Vec<(usize, ConeClass)>;

fn final_report(p: &DirichletProblem, u: &GridFn, cfg: &SolverConfig) -> Result<(f64, Classes, f64)> {
    let mut residual: f64 = 0.0;
    let mut classes = Vec::new();
    let mut class_tol: f64 = 0.0;
    for i in interior_order(p, SweepOrder::Lexicographic) {
        let st = stencil(p, u, i)?;
        let ui = u.value(i);
        let root = root_near(&st, &p.f, &p.u, ui, cfg.bisection_depth)?;
        residual = residual.max((root.clamp(p.sub.value(i), p.sup.value(i)) - ui).abs());
        let tol = cfg.tol * st.trace_slope();
        class_tol = class_tol.max(tol);
        classes.push((i, ConeClass::from_margin(st.margin(ui, &p.f, &p.u), tol)));
    }
    Ok((residual, classes, class_tol))
}

fn margins(p: &DirichletProblem, u: &GridFn, inner: &[usize]) -> Result<Vec<f64>> {
    inner.iter().map(|&i| Ok(stencil(p, u, i)?.margin(u.value(i), &p.f, &p.u))).collect()
}

/// One damped Newton step for the tridiagonal system `margin = 0` on a 1D
/// grid. Lengths `1, 1 − 2⁻⁵², …, ½, ¼, …` are tried in turn until the
/// iterate keeps the sign pattern of the direction (supersolution when
/// descending, subsolution when ascending) up to a margin slack worth a
/// tenth of `tol` in the solution. Returns the accepted length and the largest node change, or
/// `None` when no length works.
fn newton_step(p: &DirichletProblem, u: &mut GridFn, dir: Direction, tol: f64) -> Result<Option<(f64, f64)>> {
    let (inner, m0, d, inv_norm) = match newton_direction(p, u)? {
        Some(x) => x,
        None => return Ok(None),
    };
    // margin slack that moves the discrete solution by at most tol/10,
    // but never below the rounding level of the difference quotients
    let mut noise: f64 = 0.0;
    for &i in &inner {
        let st = stencil(p, u, i)?;
        let size = st.pairs.iter().fold(u.value(i).abs(), |a, &(l, r)| a.max(l.abs()).max(r.abs()));
        noise = noise.max(16.0 * f64::EPSILON * st.trace_slope() * (1.0 + size));
    }
    let mtol = (0.1 * tol / inv_norm).max(noise);
    let worst0 = m0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let lengths = std::iter::once(1.0)
        .chain((1..=52).rev().map(|j| 1.0 - 0.5f64.powi(j)))
        .chain((2..=40).map(|j| 0.5f64.powi(j)));
    let mut trial = u.clone();
    for theta in lengths {
        for (k, &i) in inner.iter().enumerate() {
            let (cur, lo_b, hi_b) = (u.value(i), p.sub.value(i), p.sup.value(i));
            let v = (cur + theta * d[k]).clamp(lo_b, hi_b);
            let v = match dir {
                Direction::Descending => v.min(cur),
                Direction::Ascending => v.max(cur),
                Direction::TwoSided => v,
            };
            trial.set(i, v);
        }
        let m1 = margins(p, &trial, &inner)?;
        let ok = match dir {
            Direction::Descending => m1.iter().zip(&m0).all(|(a, b)| *a <= b.max(0.0) + mtol),
            Direction::Ascending => m1.iter().zip(&m0).all(|(a, b)| *a >= b.min(0.0) - mtol),
            Direction::TwoSided => m1.iter().fold(0.0f64, |a, v| a.max(v.abs())) < worst0,
        };
        if ok {
            let step = inner.iter().map(|&i| (trial.value(i) - u.value(i)).abs()).fold(0.0, f64::max);
            *u = trial;
            return Ok(Some((theta, step)));
        }
    }
    Ok(None)
}

type NewtonDirection = (Vec<usize>, Vec<f64>, Vec<f64>, f64);

/// Interior nodes, their margins, the Newton correction solving
/// `J d = −margin` with the Jacobian bands from central differences, and
/// `‖J⁻¹‖_∞`.
fn newton_direction(p: &DirichletProblem, u: &GridFn) -> Result<Option<NewtonDirection>> {
    let inner = interior_order(p, SweepOrder::Lexicographic);
    let m = inner.len();
    if m == 0 {
        return Ok(None);
    }
    let m0 = margins(p, u, &inner)?;
    let (mut lo, mut di, mut up) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for (k, &i) in inner.iter().enumerate() {
        let st = stencil(p, u, i)?;
        let c = u.value(i);
        let eta = 1e-7 * (1.0 + c.abs());
        di[k] = (st.margin(c + eta, &p.f, &p.u) - st.margin(c - eta, &p.f, &p.u)) / (2.0 * eta);
        for (side, band) in [(0usize, &mut lo), (1usize, &mut up)] {
            let mut s = st.clone();
            let base = if side == 0 { s.pairs[0].0 } else { s.pairs[0].1 };
            let e = 1e-7 * (1.0 + base.abs());
            let mut at = |v: f64| {
                if side == 0 {
                    s.pairs[0].0 = v;
                } else {
                    s.pairs[0].1 = v;
                }
                s.margin(c, &p.f, &p.u)
            };
            band[k] = (at(base + e) - at(base - e)) / (2.0 * e);
        }
    }
    // neighbours on the boundary are fixed
    lo[0] = 0.0;
    up[m - 1] = 0.0;
    let rhs: Vec<f64> = m0.iter().map(|v| -v).collect();
    let d = match thomas(&lo, &di, &up, &rhs) {
        Some(d) => d,
        None => return Ok(None),
    };
    // J has non-negative off-diagonal bands, so ‖J⁻¹‖_∞ = max |J⁻¹ 1|
    let inv_norm = match thomas(&lo, &di, &up, &vec![1.0; m]) {
        Some(z) => z.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        None => return Ok(None),
    };
    Ok(Some((inner, m0, d, inv_norm)))
}

/// Tridiagonal solve; `None` on a zero pivot.
fn thomas(lo: &[f64], di: &[f64], up: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let m = di.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    let mut piv = di[0];
    if piv == 0.0 || !piv.is_finite() {
        return None;
    }
    c[0] = up[0] / piv;
    d[0] = rhs[0] / piv;
    for k in 1..m {
        piv = di[k] - lo[k] * c[k - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        c[k] = up[k] / piv;
        d[k] = (rhs[k] - lo[k] * d[k - 1]) / piv;
    }
    for k in (0..m - 1).rev() {
        d[k] -= c[k] * d[k + 1];
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcone::ConeKind;

    fn sup_error(r: &PerronResult) -> f64 {
        (0..r.u.len())
            .map(|i| (r.u.value(i) - DirichletProblem::annulus_exact(r.u.coord(i, 0))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn thomas_solves_a_small_system() {
        let d = thomas(&[0.0, 1.0, 1.0], &[4.0, 4.0, 4.0], &[1.0, 1.0, 0.0], &[5.0, 6.0, 5.0]).unwrap();
        for v in d {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn annulus_converges_with_second_order_error() {
        let cfg = SolverConfig { tol: 1e-11, ..SolverConfig::default() };
        let mut errs = Vec::new();
        for n in [40, 80] {
            let r = perron_solve(&DirichletProblem::annulus(n).unwrap(), &cfg).unwrap();
            assert!(r.converged, "residual {}", r.residual);
            assert!(r.sandwich_ok && r.monotone_ok);
            assert!(r.all_boundary());
            errs.push(sup_error(&r));
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "{errs:?}");
    }

    #[test]
    fn gauss_seidel_alone_reaches_the_same_answer() {
        let p = DirichletProblem::annulus(16).unwrap();
        let fast = perron_solve(&p, &SolverConfig { tol: 1e-12, ..SolverConfig::default() }).unwrap();
        let slow = perron_solve(&p, &SolverConfig { tol: 1e-12, newton: false, ..SolverConfig::default() }).unwrap();
        assert!(slow.converged && slow.newton_steps == 0);
        assert!(slow.monotone_ok && slow.sandwich_ok);
        for i in 0..p.sub.len() {
            assert!((fast.u.value(i) - slow.u.value(i)).abs() < 1e-9);
        }
        for w in slow.history.windows(2) {
            assert!(w[1].residual <= w[0].residual * 1.0001 + 1e-15);
        }
    }

    #[test]
    fn ascending_and_descending_agree() {
        let p = DirichletProblem::annulus(60).unwrap();
        let cfg = SolverConfig { tol: 1e-10, ..SolverConfig::default() };
        let a = perron_solve(&p, &cfg).unwrap();
        let b = perron_solve_ascending(&p, &cfg).unwrap();
        assert!(a.converged && b.converged && b.monotone_ok);
        for i in 0..p.sub.len() {
            assert!(a.u.value(i) >= b.u.value(i) - 1e-9);
            assert!((a.u.value(i) - b.u.value(i)).abs() < 1e-8);
        }
    }

    #[test]
    fn plane_box_converges_for_both_orders() {
        let p = DirichletProblem::plane_box(17, ConeKind::GammaK(1)).unwrap();
        let mut last = None;
        for order in [SweepOrder::Lexicographic, SweepOrder::RedBlack] {
            let r = perron_solve(&p, &SolverConfig { tol: 1e-9, order, ..SolverConfig::default() }).unwrap();
            assert!(r.converged && r.monotone_ok && r.sandwich_ok);
            assert!(r.all_boundary());
            if let Some(prev) = &last {
                let prev: &GridFn = prev;
                for i in 0..p.sub.len() {
                    assert!((prev.value(i) - r.u.value(i)).abs() < 1e-7);
                }
            }
            last = Some(r.u);
        }
    }

    #[test]
    fn solution_csv_shape() {
        let r = perron_solve(&DirichletProblem::annulus(8).unwrap(), &SolverConfig::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "node,x,u,residual_class");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].ends_with("dirichlet"));
        assert!(lines[2].ends_with("boundary"));
    }

    #[test]
    fn start_outside_the_pair_is_rejected() {
        let p = DirichletProblem::annulus(8).unwrap();
        let bad = p.sup.map(|v| v + 1.0);
        assert!(matches!(
            solve_from(&p, &SolverConfig::default(), &bad, Direction::TwoSided),
            Err(Error::Precondition(_))
        ));
    }
}

#[cfg(test)]
mod family_tests {
    use super::*;

    #[test]
    fn quad_family_solutions_converge_to_the_exact_profile() {
        for (alpha, beta, n) in [(0.5, 0.5, 3), (3.0, 1.0, 3), (0.2, 0.3, 4), (2.0, 0.1, 5)] {
            let (p, exact) = DirichletProblem::annulus_quad(alpha, beta, n, -0.3, 0.7, 200).unwrap();
            let r = perron_solve(&p, &SolverConfig { tol: 1e-11, ..SolverConfig::default() }).unwrap();
            assert!(r.converged && r.monotone_ok && r.sandwich_ok, "{alpha} {beta} {n}");
            let err = (0..r.u.len()).map(|i| (r.u.value(i) - exact(r.u.coord(i, 0))).abs()).fold(0.0, f64::max);
            assert!(err < 1e-4, "{alpha} {beta} {n}: {err}");
        }
    }
}
