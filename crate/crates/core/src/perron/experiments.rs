use rand::Rng;

use crate::envelopes::GridFn;
use crate::error::{arg, Result};
use crate::rng::seeded;
use crate::viscosity::Geometry;

use super::problem::DirichletProblem;
use super::solver::{perron_solve, perron_solve_ascending, solve_from, Direction, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessRun {
    pub label: String,
    pub converged: bool,
    pub sweeps: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    pub runs: Vec<UniquenessRun>,
    /// Largest sup-distance between any two limits.
    pub max_distance: f64,
    pub tol: f64,
    /// Some run failed to converge, so nothing is claimed.
    pub inconclusive: bool,
    pub pass: bool,
    pub solutions: Vec<GridFn>,
}

/// Random starts `sub + t·(super − sub)` with independent `t ∈ [0, 1]` per node.
pub fn random_starts(p: &DirichletProblem, count: usize, seed: u64) -> Vec<GridFn> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| {
            let mut g = p.sub.clone();
            for i in 0..g.len() {
                let (a, b) = (p.sub.value(i), p.sup.value(i));
                g.set(i, (a + rng.gen::<f64>() * (b - a)).clamp(a, b));
            }
            g
        })
        .collect()
}

/// Solves from the super (descending), the sub (ascending) and each extra
/// start (two-sided); passes when all limits lie within `10·tol` of each
/// other.
pub fn uniqueness_experiment(p: &DirichletProblem, cfg: &SolverConfig, starts: &[GridFn]) -> Result<UniquenessReport> {
    let mut results = vec![
        ("descending".to_string(), perron_solve(p, cfg)?),
        ("ascending".to_string(), perron_solve_ascending(p, cfg)?),
    ];
    for (k, s) in starts.iter().enumerate() {
        results.push((format!("start{k}"), solve_from(p, cfg, s, Direction::TwoSided)?));
    }
    let mut max_distance: f64 = 0.0;
    for a in 0..results.len() {
        for b in a + 1..results.len() {
            let (ua, ub) = (&results[a].1.u, &results[b].1.u);
            for i in 0..ua.len() {
                max_distance = max_distance.max((ua.value(i) - ub.value(i)).abs());
            }
        }
    }
    let inconclusive = results.iter().any(|(_, r)| !r.converged);
    let runs = results
        .iter()
        .map(|(l, r)| UniquenessRun {
            label: l.clone(),
            converged: r.converged,
            sweeps: r.sweeps,
            residual: r.residual,
        })
        .collect();
    Ok(UniquenessReport {
        runs,
        max_distance,
        tol: cfg.tol,
        inconclusive,
        pass: !inconclusive && max_distance <= 10.0 * cfg.tol,
        solutions: results.into_iter().map(|(_, r)| r.u).collect(),
    })
}

/// Solves two problems whose boundary data are ordered and checks that the
/// solutions keep that order up to `10·tol`. Returns the smallest
/// `u₁ − u₂` over the grid.
pub fn comparison_check(upper: &DirichletProblem, lower: &DirichletProblem, cfg: &SolverConfig) -> Result<(bool, f64)> {
    if !upper.sub.same_grid(&lower.sub) {
        return arg("problems live on different grids");
    }
    for i in upper.boundary_nodes() {
        if upper.sub.value(i) < lower.sub.value(i) {
            return arg(format!("boundary data are not ordered at node {i}"));
        }
    }
    let a = perron_solve(upper, cfg)?;
    let b = perron_solve(lower, cfg)?;
    let gap = (0..a.u.len()).map(|i| a.u.value(i) - b.u.value(i)).fold(f64::INFINITY, f64::min);
    Ok((a.converged && b.converged && gap >= -10.0 * cfg.tol, gap))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientBandReport {
    /// Largest discrete gradient norm away from the boundary band.
    pub interior_max: f64,
    /// Largest discrete gradient norm inside the band.
    pub band_max: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Discrete gradient norm at node `i`: centred inside, one-sided on the
/// box boundary.
fn grad_norm(u: &GridFn, i: usize) -> f64 {
    let m = u.multi(i);
    let mut acc = 0.0;
    for a in 0..u.dim() {
        let stride = if a == 0 { 1 } else { u.shape()[0] };
        let h = u.h()[a];
        let d = if m[a] == 0 {
            (u.value(i + stride) - u.value(i)) / h
        } else if m[a] + 1 == u.shape()[a] {
            (u.value(i) - u.value(i - stride)) / h
        } else {
            (u.value(i + stride) - u.value(i - stride)) / (2.0 * h)
        };
        acc += d * d;
    }
    acc.sqrt()
}

/// Compares the largest gradient in the interior with the largest gradient
/// within `band` nodes of the boundary; passes when the interior does not
/// exceed the band by more than `4·h`.
pub fn translation_gradient_bound(u: &GridFn, geom: Geometry, band: usize) -> Result<GradientBandReport> {
    geom.check(u)?;
    if band == 0 {
        return arg("band must contain at least one node layer");
    }
    let mut interior_max: f64 = 0.0;
    let mut band_max: f64 = 0.0;
    for i in 0..u.len() {
        let m = u.multi(i);
        let depth = (0..u.dim()).map(|a| m[a].min(u.shape()[a] - 1 - m[a])).min().unwrap();
        let g = grad_norm(u, i);
        if depth < band {
            band_max = band_max.max(g);
        } else {
            interior_max = interior_max.max(g);
        }
    }
    let slack = 4.0 * u.h_max();
    Ok(GradientBandReport { interior_max, band_max, slack, pass: interior_max <= band_max + slack })
}
