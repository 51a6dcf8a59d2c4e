use crate::error::{arg, Error, Result};
use crate::operators::{kelvin, moving_sphere_radius, ScalarField};

#[derive(Debug, Clone, PartialEq)]
pub struct SphereConfig {
    pub n: usize,
    /// Nodes per axis of the slice grid over `[−1, 1]²`.
    pub grid: usize,
    pub tol: f64,
    /// `sup u` and `inf u` over `B(0, 1)`; estimated by sampling when absent.
    pub sup_u: Option<f64>,
    pub inf_u: Option<f64>,
    /// Points sampled on the spheres `|y − x| = λ` and `|y| = ¾`.
    pub sphere_points: usize,
}

impl Default for SphereConfig {
    fn default() -> Self {
        SphereConfig { n: 3, grid: 81, tol: 1e-8, sup_u: None, inf_u: None, sphere_points: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereRow {
    pub x: Vec<f64>,
    pub lambda: f64,
    /// `max (u_{x,λ} − u)` over slice nodes of `B(0,¾) ∖ B(x,λ)`.
    pub max_excess: f64,
    pub nodes: usize,
    /// `max |u_{x,λ} − u|` on `|y − x| = λ`.
    pub sphere_dev: f64,
    /// `max (u_{x,λ} − inf u)` on `|y| = ¾`.
    pub boundary_excess: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereReport {
    pub radius: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub rows: Vec<SphereRow>,
    /// Largest `|u(a) − u(b)|/|a − b|` over slice node pairs.
    pub lipschitz: f64,
}

impl SphereReport {
    pub fn pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

/// Quasi-uniform points on the unit sphere of `ℝⁿ` (a Fibonacci spiral in
/// the first three coordinates).
fn sphere_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let rho = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            let mut p = vec![0.0; n];
            p[0] = rho * t.cos();
            p[1] = rho * t.sin();
            if n > 2 {
                p[2] = z;
            }
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            p.iter().map(|v| v / norm).collect()
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Samples `sup` and `inf` of `u` over the unit ball on a cubic lattice in
/// the first three coordinates.
fn sample_extremes(u: &impl ScalarField, n: usize) -> (f64, f64) {
    let k: usize = 41;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let dims = n.min(3);
    let total = k.pow(dims as u32);
    for idx in 0..total {
        let mut p = vec![0.0; n];
        let mut rest = idx;
        for c in p.iter_mut().take(dims) {
            *c = -1.0 + 2.0 * (rest % k) as f64 / (k - 1) as f64;
            rest /= k;
        }
        if p.iter().map(|v| v * v).sum::<f64>() > 1.0 {
            continue;
        }
        let v = u.value(&p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (hi, lo)
}

/// Checks `u_{x,λ} ≤ u + tol` on slice nodes of `B(0,¾) ∖ B(x,λ)` (the
/// plane of the first two coordinates), equality on `|y − x| = λ`, and
/// `u_{x,λ} ≤ inf u` on `|y| = ¾`, for every centre and radius given.
pub fn moving_sphere_check(
    u: &impl ScalarField,
    xs: &[Vec<f64>],
    lambdas: &[Vec<f64>],
    cfg: &SphereConfig,
) -> Result<SphereReport> {
    let n = cfg.n;
    if n < 3 {
        return arg("moving spheres need n >= 3");
    }
    if xs.len() != lambdas.len() {
        return arg("need one list of radii per centre");
    }
    if cfg.grid < 3 {
        return arg("slice grid needs at least 3 nodes per axis");
    }
    let (sup_u, inf_u) = match (cfg.sup_u, cfg.inf_u) {
        (Some(s), Some(i)) => (s, i),
        _ => sample_extremes(u, n),
    };
    let radius = moving_sphere_radius(sup_u, inf_u, n)?;
    let step = 2.0 / (cfg.grid - 1) as f64;
    let slice: Vec<Vec<f64>> = (0..cfg.grid * cfg.grid)
        .map(|k| {
            let mut p = vec![0.0; n];
            p[0] = -1.0 + (k % cfg.grid) as f64 * step;
            p[1] = -1.0 + (k / cfg.grid) as f64 * step;
            p
        })
        .filter(|p| p[0] * p[0] + p[1] * p[1] <= 0.5625)
        .collect();
    let values: Vec<f64> = slice.iter().map(|p| u.value(p)).collect();
    let unit = sphere_points(n, cfg.sphere_points);
    let mut rows = Vec::new();
    for (x, lams) in xs.iter().zip(lambdas) {
        if x.len() != n {
            return arg("centre has the wrong dimension");
        }
        if dist(x, &vec![0.0; n]) > 0.5 + 1e-12 {
            return arg("centres must lie in the closed ball of radius 1/2");
        }
        for &lambda in lams {
            if !(lambda > 0.0) || lambda > radius {
                return Err(Error::Precondition(format!("radius {lambda} exceeds R = {radius}")));
            }
            let mut max_excess = f64::NEG_INFINITY;
            let mut nodes = 0;
            for (y, &uy) in slice.iter().zip(&values) {
                if dist(y, x) < lambda {
                    continue;
                }
                nodes += 1;
                max_excess = max_excess.max(kelvin(u, x, lambda, y, n)? - uy);
            }
            let mut sphere_dev: f64 = 0.0;
            let mut boundary_excess = f64::NEG_INFINITY;
            for e in &unit {
                let y: Vec<f64> = x.iter().zip(e).map(|(a, b)| a + lambda * b).collect();
                sphere_dev = sphere_dev.max((kelvin(u, x, lambda, &y, n)? - u.value(&y)).abs());
                let yb: Vec<f64> = e.iter().map(|b| 0.75 * b).collect();
                boundary_excess = boundary_excess.max(kelvin(u, x, lambda, &yb, n)? - inf_u);
            }
            let pass = max_excess <= cfg.tol && sphere_dev <= cfg.tol && boundary_excess <= cfg.tol;
            rows.push(SphereRow { x: x.clone(), lambda, max_excess, nodes, sphere_dev, boundary_excess, pass });
        }
    }
    let mut lipschitz: f64 = 0.0;
    for a in 0..slice.len() {
        for b in a + 1..slice.len() {
            let d = dist(&slice[a], &slice[b]);
            if d >= step * (1.0 - 1e-12) {
                lipschitz = lipschitz.max((values[a] - values[b]).abs() / d);
            }
        }
    }
    Ok(SphereReport { radius, sup_u, inf_u, rows, lipschitz })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FieldOracle;

    #[test]
    fn constant_field_passes_with_equality_on_the_sphere() {
        let u = |_: &[f64]| 2.0;
        let cfg = SphereConfig { grid: 31, sup_u: Some(2.0), inf_u: Some(2.0), ..SphereConfig::default() };
        let xs = vec![vec![0.1, 0.2, 0.0]];
        let r = moving_sphere_check(&u, &xs, &[vec![0.1, 0.25]], &cfg).unwrap();
        assert_eq!(r.radius, 0.25);
        assert!(r.pass());
        assert!(r.rows.iter().all(|row| row.sphere_dev < 1e-14));
    }

    #[test]
    fn bubble_passes_for_admissible_radii() {
        let u = FieldOracle::Bubble { n: 3 };
        let inf = 0.5f64.sqrt();
        let cfg = SphereConfig { grid: 41, sup_u: Some(1.0), inf_u: Some(inf), ..SphereConfig::default() };
        let rad = moving_sphere_radius(1.0, inf, 3).unwrap();
        let xs = vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![0.2, -0.3, 0.1]];
        let lams = vec![vec![rad]; 3];
        let r = moving_sphere_check(&u, &xs, &lams, &cfg).unwrap();
        assert!(r.pass(), "{:?}", r.rows);
        assert!(r.lipschitz < 1.0);
    }

    #[test]
    fn too_large_radius_is_rejected() {
        let u = FieldOracle::Bubble { n: 3 };
        let cfg = SphereConfig { grid: 11, sup_u: Some(1.0), inf_u: Some(0.5f64.sqrt()), ..SphereConfig::default() };
        let r = moving_sphere_check(&u, &[vec![0.0; 3]], &[vec![0.3]], &cfg);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn sampled_extremes_of_the_bubble() {
        let (hi, lo) = sample_extremes(&FieldOracle::Bubble { n: 3 }, 3);
        assert_eq!(hi, 1.0);
        assert!(lo >= 0.5f64.sqrt() && lo < 0.5f64.sqrt() + 1e-2);
    }
}
