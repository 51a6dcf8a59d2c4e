use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{arg, Result};
use crate::matcone::{eigen_sym, SymMatrix};
use crate::rng::seeded;

use super::jet::{dot, norm};
use super::spec::OperatorSpec;

/// Largest `|p|` sampled.
pub const P_CAP: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub r: f64,
    pub lambda: f64,
    pub m: f64,
    pub samples: usize,
    pub seed: u64,
    pub n: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { r: 1.0, lambda: 1.0, m: 2.0, samples: 400, seed: 0, n: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `|∇_x L| ≤ C|p|^m`.
    XLipschitz,
    /// `0 ≤ L(s′) − L(s) ≤ C(s′ − s)|p|^m I`.
    SLipschitz,
    /// `p·∇_p L − L + θΛ|∇_p L| I − θ I ≤ C p⊗p − |p|^m I / C`.
    GradientStructure,
    /// `p·∇_p L − L − θΛ|∇_p L| I + θ I ≥ −C p⊗p + |p|^m I / C`.
    GradientStructureDual,
    /// `L` non-decreasing in `s`.
    MonotoneInS,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::XLipschitz,
        Condition::SLipschitz,
        Condition::GradientStructure,
        Condition::GradientStructureDual,
        Condition::MonotoneInS,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::XLipschitz => "x_lipschitz",
            Condition::SLipschitz => "s_lipschitz",
            Condition::GradientStructure => "gradient_structure",
            Condition::GradientStructureDual => "gradient_structure_dual",
            Condition::MonotoneInS => "monotone_in_s",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeWitness {
    pub x: Vec<f64>,
    pub s: f64,
    pub s2: Option<f64>,
    pub p: Vec<f64>,
    pub theta: Option<f64>,
    /// The offending eigenvalue or ratio.
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct ConditionRow {
    pub condition: Condition,
    pub tested: usize,
    /// Smallest constant that works on the sample.
    pub constant: Option<f64>,
    pub theta_bar: Option<f64>,
    pub witness: Option<ProbeWitness>,
}

impl ConditionRow {
    pub fn holds(&self) -> bool {
        self.witness.is_none() && self.constant.is_none_or(f64::is_finite)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub rows: Vec<ConditionRow>,
}

impl ProbeReport {
    pub fn row(&self, c: Condition) -> &ConditionRow {
        self.rows.iter().find(|r| r.condition == c).expect("all conditions reported")
    }

    /// Largest fitted constant over the conditions that hold.
    pub fn max_constant(&self) -> f64 {
        self.rows.iter().filter(|r| r.holds()).filter_map(|r| r.constant).fold(0.0, f64::max)
    }
}

/// Richardson-extrapolated central difference of a matrix-valued map.
fn deriv(f: &dyn Fn(f64) -> SymMatrix, h: f64) -> SymMatrix {
    let d = |h: f64| {
        let mut a = f(h);
        a -= &f(-h);
        a.scale(0.5 / h)
    };
    let mut coarse = d(h);
    let fine = d(0.5 * h);
    coarse = coarse.scale(-1.0 / 3.0);
    coarse.axpy(4.0 / 3.0, &fine);
    coarse
}

struct Sample {
    x: Vec<f64>,
    s: f64,
    s2: f64,
    p: Vec<f64>,
}

fn draw(cfg: &ProbeConfig, rng: &mut crate::rng::Rng) -> Sample {
    let n = cfg.n;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut s = rng.gen_range(-cfg.r..=cfg.r);
    let mut s2 = rng.gen_range(-cfg.r..=cfg.r);
    if s2 < s {
        std::mem::swap(&mut s, &mut s2);
    }
    let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let dn = norm(&dir).max(1e-300);
    let q = 10f64.powf(rng.gen_range(-3.0..P_CAP.log10()));
    for d in dir.iter_mut() {
        *d *= q / dn;
    }
    Sample { x, s, s2, p: dir }
}

/// Largest constant the bisection will report.
pub const C_CAP: f64 = 1e6;

/// Smallest `C` with `C p⊗p − |p|^m I / C − G ⪰ 0`, found by bisection
/// since the left side increases with `C`. `None` if no `C ≤ C_CAP` works.
fn c_needed(g: &SymMatrix, p: &[f64], m: f64) -> Option<f64> {
    let pm = norm(p).powf(m);
    let ok = |c: f64| {
        let mut a = SymMatrix::outer(p).scale(c);
        a.add_diag(-pm / c);
        a -= g;
        let scale = 1e-12 * (1.0 + pm / c + g.max_abs()) + 4.0 * f64::EPSILON * c * pm.max(dot(p, p));
        eigen_sym(&a).min() >= -scale
    };
    let (mut lo, mut hi) = (1e-9, C_CAP);
    if !ok(hi) {
        return None;
    }
    if ok(lo) {
        return Some(lo);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo < 1.0 + 1e-9 {
            break;
        }
    }
    Some(hi)
}

/// Sampling-based falsification of the structural conditions on `L`.
/// Fitted constants are feasible on the sample; witnesses disprove.
pub fn probe_l_conditions(f: &OperatorSpec, cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.samples == 0 {
        return arg("probe needs at least one sample");
    }
    if !(cfg.r > 0.0) || !(cfg.lambda > 0.0) {
        return arg("probe needs R > 0 and Λ > 0");
    }
    let n = cfg.n;
    let mut rng = seeded(cfg.seed);
    let samples: Vec<Sample> = (0..cfg.samples).map(|_| draw(cfg, &mut rng)).collect();
    let l = |x: &[f64], s: f64, p: &[f64]| f.lower_order(x, s, p);

    // x-Lipschitz
    let mut row0 = ConditionRow {
        condition: Condition::XLipschitz,
        tested: 0,
        constant: Some(0.0),
        theta_bar: None,
        witness: None,
    };
    for smp in &samples {
        let mut fro2 = 0.0;
        let hx = 1e-3;
        for k in 0..n {
            let dk = deriv(
                &|t| {
                    let mut y = smp.x.clone();
                    y[k] += t;
                    l(&y, smp.s, &smp.p)
                },
                hx,
            );
            fro2 += dk.frobenius().powi(2);
        }
        let ratio = fro2.sqrt() / norm(&smp.p).powf(cfg.m);
        row0.tested += 1;
        if ratio.is_finite() {
            row0.constant = row0.constant.map(|c| c.max(ratio));
        } else if row0.witness.is_none() {
            row0.witness = Some(ProbeWitness {
                x: smp.x.clone(),
                s: smp.s,
                s2: None,
                p: smp.p.clone(),
                theta: None,
                value: ratio,
            });
        }
    }

    // s-Lipschitz and monotonicity
    let mut row1 = ConditionRow {
        condition: Condition::SLipschitz,
        tested: 0,
        constant: Some(0.0),
        theta_bar: None,
        witness: None,
    };
    let mut rowm =
        ConditionRow { condition: Condition::MonotoneInS, tested: 0, constant: None, theta_bar: None, witness: None };
    for smp in &samples {
        let a = l(&smp.x, smp.s, &smp.p);
        let b = l(&smp.x, smp.s2, &smp.p);
        let d = &b - &a;
        let spec = eigen_sym(&d);
        let tol = 1e-12 * (1.0 + a.max_abs() + b.max_abs());
        row1.tested += 1;
        rowm.tested += 1;
        if spec.min() < -tol {
            let w = ProbeWitness {
                x: smp.x.clone(),
                s: smp.s,
                s2: Some(smp.s2),
                p: smp.p.clone(),
                theta: None,
                value: spec.min(),
            };
            if rowm.witness.is_none() {
                rowm.witness = Some(w.clone());
            }
            if row1.witness.is_none() {
                row1.witness = Some(w);
            }
            continue;
        }
        let ds = smp.s2 - smp.s;
        if ds > 0.0 {
            let ratio = spec.max() / (ds * norm(&smp.p).powf(cfg.m));
            if ratio.is_finite() {
                row1.constant = row1.constant.map(|c| c.max(ratio));
            } else if row1.witness.is_none() {
                row1.witness = Some(ProbeWitness {
                    x: smp.x.clone(),
                    s: smp.s,
                    s2: Some(smp.s2),
                    p: smp.p.clone(),
                    theta: None,
                    value: ratio,
                });
            }
        }
    }

    // p-structure: A = p·∇_p L − L and g = |∇_p L|
    let structure: Vec<(SymMatrix, f64)> = samples
        .iter()
        .map(|smp| {
            let hp = 1e-4 * (1.0 + norm(&smp.p));
            let mut fro2 = 0.0;
            let mut dir = SymMatrix::zeros(n);
            for k in 0..n {
                let dk = deriv(
                    &|t| {
                        let mut q = smp.p.clone();
                        q[k] += t;
                        l(&smp.x, smp.s, &q)
                    },
                    hp,
                );
                fro2 += dk.frobenius().powi(2);
                dir.axpy(smp.p[k], &dk);
            }
            dir -= &l(&smp.x, smp.s, &smp.p);
            (dir, fro2.sqrt())
        })
        .collect();

    let rows2 = [Condition::GradientStructure, Condition::GradientStructureDual].map(|cond| {
        let sign = if cond == Condition::GradientStructure { 1.0 } else { -1.0 };
        let g_of = |k: usize, theta: f64| {
            let (a, g) = &structure[k];
            let mut out = a.scale(sign);
            out.add_diag(theta * (cfg.lambda * g - 1.0));
            out
        };
        let feasible_all =
            |theta: f64| (0..samples.len()).all(|k| c_needed(&g_of(k, theta), &samples[k].p, cfg.m).is_some());
        let mut row =
            ConditionRow { condition: cond, tested: samples.len(), constant: None, theta_bar: None, witness: None };
        // theta = 0 must work; then take the largest dyadic theta_bar that also works
        let zero_fail = (0..samples.len()).find(|&k| c_needed(&g_of(k, 0.0), &samples[k].p, cfg.m).is_none());
        if let Some(k) = zero_fail {
            let e = eigen_sym(&g_of(k, 0.0));
            row.witness = Some(ProbeWitness {
                x: samples[k].x.clone(),
                s: samples[k].s,
                s2: None,
                p: samples[k].p.clone(),
                theta: Some(0.0),
                value: e.max(),
            });
            return row;
        }
        let theta_bar = (0..=40).map(|j| 0.5f64.powi(j)).find(|&t| feasible_all(t));
        let Some(theta_bar) = theta_bar else {
            row.witness = Some(ProbeWitness {
                x: samples[0].x.clone(),
                s: samples[0].s,
                s2: None,
                p: samples[0].p.clone(),
                theta: Some(0.5f64.powi(40)),
                value: f64::NAN,
            });
            return row;
        };
        let thetas: Vec<f64> = std::iter::once(0.0).chain((0..5).map(|j| theta_bar * 0.5f64.powi(j))).collect();
        let mut c_max: f64 = 0.0;
        for k in 0..samples.len() {
            for &t in &thetas {
                c_max = c_max.max(c_needed(&g_of(k, t), &samples[k].p, cfg.m).unwrap_or(f64::INFINITY));
            }
        }
        row.constant = Some(c_max);
        row.theta_bar = Some(theta_bar);
        row
    });

    let [r2, r2d] = rows2;
    Ok(ProbeReport { rows: vec![row0, row1, r2, r2d, rowm] })
}

/// Convenience wrapper with the positional arguments.
pub fn probe_l_conditions_with(
    f: &OperatorSpec,
    r: f64,
    lambda: f64,
    m: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    probe_l_conditions(f, &ProbeConfig { r, lambda, m, samples, seed, n: 3 })
}
