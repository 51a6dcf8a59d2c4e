use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{arg, Error, Result};
use crate::matcone::{eigen_sym, SymMatrix};
use crate::operators::{probe_l_conditions, Jet2, OperatorSpec, ProbeConfig};
use crate::rng::seeded;

/// Constants of the exponential perturbation
/// `ψ ± μ(e^{α|x|²} + e^{−βψ} − τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationParams {
    pub mu: f64,
    pub mu0: f64,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub k0: f64,
    pub m: f64,
    /// Amplitude bound on `|ψ|`.
    pub big_m: f64,
    /// Structural constant the other values were derived from.
    pub c: f64,
}

/// Gap tolerance used by the scans.
pub const GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variation {
    /// `ψ̃ = ψ + μ(…)`, a strict subsolution perturbation.
    Tilde,
    /// `ψ̂ = ψ − μ(…)`, the mirror image.
    Hat,
}

impl Variation {
    pub fn label(self) -> &'static str {
        match self {
            Variation::Tilde => "tilde",
            Variation::Hat => "hat",
        }
    }
}

/// Largest `2^{−k}`, `k ≥ 1`, with `ok`.
fn largest_dyadic(ok: impl Fn(f64) -> bool) -> Option<f64> {
    (1..200).map(|k| 0.5f64.powi(k)).find(|&v| ok(v))
}

impl PerturbationParams {
    /// Constants derived from a structural constant `c` on the box
    /// `[−1, 1]ⁿ` with `|ψ| ≤ big_m`:
    /// `β = 2C`; `α` the largest dyadic below 1 with
    /// `α sup φ (1/f′_min + 1) ≤ 1/C`; `δ` the largest dyadic with
    /// `Cδ ≤ f′_min/2`; `μ₀` the largest dyadic with `μ₀(1 + f′_max) ≤ 1/C`
    /// and `μ₀ f′_max ≤ ½`; `K₀ = min(α, f′_min/C, β f′_min/2)`; `μ = μ₀/2`.
    pub fn from_constant(c: f64, n: usize, big_m: f64, m: f64) -> Result<Self> {
        if !(c > 2.0) || !(big_m > 0.0) || n < 2 {
            return arg("need C > 2, M > 0 and n >= 2");
        }
        let beta = 2.0 * c;
        let fp_min = beta * (-beta * big_m).exp();
        let fp_max = beta * (beta * big_m).exp();
        let nf = n as f64;
        let alpha = largest_dyadic(|a| a * (a * nf).exp() * (1.0 / fp_min + 1.0) <= 1.0 / c)
            .ok_or_else(|| Error::Domain("no admissible alpha".into()))?;
        let delta =
            largest_dyadic(|d| c * d <= 0.5 * fp_min).ok_or_else(|| Error::Domain("no admissible delta".into()))?;
        let mu0 = largest_dyadic(|u| u * (1.0 + fp_max) <= 1.0 / c && u * fp_max <= 0.5)
            .ok_or_else(|| Error::Domain("no admissible mu0".into()))?;
        let k0 = alpha.min(fp_min / c).min(0.5 * beta * fp_min);
        Ok(PerturbationParams { mu: 0.5 * mu0, mu0, tau: 0.0, alpha, beta, delta, k0, m, big_m, c })
    }

    /// Deterministic search: `C` starts from the probed structural
    /// constants (at least 4) and doubles until a calibration sample of
    /// jets shows no negative gap on either side.
    pub fn search(f: &OperatorSpec, n: usize, big_m: f64, seed: u64) -> Result<Self> {
        let cfg = ProbeConfig { r: 2.0 * big_m, lambda: 1.0, m: f.exponent(), samples: 400, seed, n };
        let probed = probe_l_conditions(f, &cfg)?.max_constant();
        let mut c = 4.0f64;
        while c < probed {
            c *= 2.0;
        }
        for _ in 0..12 {
            let p = PerturbationParams::from_constant(c, n, big_m, f.exponent())?;
            let ok = [Variation::Tilde, Variation::Hat]
                .iter()
                .all(|&v| scan_variation(f, &p, v, n, 200, seed ^ 0x5eed).map(|r| r.pass()).unwrap_or(false));
            if ok {
                return Ok(p);
            }
            c *= 2.0;
        }
        Err(Error::Domain("no constant up to the search limit passes calibration".into()))
    }

    /// `μ β sup e^{−βψ} ≤ ½` over `|ψ| ≤ M`.
    pub fn normalized(&self) -> bool {
        self.mu * self.beta * (self.beta * self.big_m).exp() <= 0.5
    }

    /// `|s| ≤ M` and `e^{α|x|²} + e^{−βs} − τ ≥ −δ`.
    pub fn in_working_set(&self, j: &Jet2) -> bool {
        j.s.abs() <= self.big_m && self.bump(j) - self.tau >= -self.delta
    }

    fn bump(&self, j: &Jet2) -> f64 {
        let x2: f64 = j.x.iter().map(|v| v * v).sum();
        (self.alpha * x2).exp() + (-self.beta * j.s).exp()
    }

    pub fn with_mu(self, mu: f64) -> Self {
        PerturbationParams { mu, ..self }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        PerturbationParams { tau, ..self }
    }
}

/// `(1 + |p|^m) I + p⊗p`.
fn forcing(p: &[f64], m: f64) -> SymMatrix {
    let q = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = SymMatrix::scaled_identity(p.len(), 1.0 + q.powf(m));
    out.add_outer(1.0, p);
    out
}

/// Exact jet of `ψ + σμ(e^{α|x|²} + e^{−βψ} − τ)` with `σ = ±1`.
fn perturbed_jet(j: &Jet2, p: &PerturbationParams, sigma: f64) -> Jet2 {
    let n = j.dim();
    let x2: f64 = j.x.iter().map(|v| v * v).sum();
    let phi = (p.alpha * x2).exp();
    let g = (-p.beta * j.s).exp();
    let mu = sigma * p.mu;
    let lin = 1.0 - mu * p.beta * g;
    let s = j.s + mu * (phi + g - p.tau);
    let grad: Vec<f64> = (0..n).map(|i| lin * j.p[i] + 2.0 * mu * p.alpha * phi * j.x[i]).collect();
    let mut h = j.h.scale(lin);
    // ∇²φ = φ(2αI + 4α² x⊗x)
    h.add_diag(2.0 * mu * p.alpha * phi);
    h.add_outer(4.0 * mu * p.alpha * p.alpha * phi, &j.x);
    h.add_outer(mu * p.beta * p.beta * g, &j.p);
    Jet2 { x: j.x.clone(), s, p: grad, h }
}

/// Jet of `ψ̃` and `F[ψ̃] − (1 − μβe^{−βψ})F[ψ] − μK₀[(1 + |p|^m)I + p⊗p]`,
/// which is positive semidefinite when the perturbation inequality holds.
pub fn first_variation_tilde(j: &Jet2, p: &PerturbationParams, f: &OperatorSpec) -> Result<(Jet2, SymMatrix)> {
    variation(j, p, f, Variation::Tilde)
}

/// Jet of `ψ̂` and `(1 + μβe^{−βψ})F[ψ] − μK₀[…] − F[ψ̂]`.
pub fn first_variation_hat(j: &Jet2, p: &PerturbationParams, f: &OperatorSpec) -> Result<(Jet2, SymMatrix)> {
    variation(j, p, f, Variation::Hat)
}

pub fn variation(j: &Jet2, p: &PerturbationParams, f: &OperatorSpec, side: Variation) -> Result<(Jet2, SymMatrix)> {
    if !p.in_working_set(j) {
        return Err(Error::Precondition(format!(
            "jet outside the working set: s = {}, bump − τ = {}",
            j.s,
            p.bump(j) - p.tau
        )));
    }
    let sigma = match side {
        Variation::Tilde => 1.0,
        Variation::Hat => -1.0,
    };
    let g = (-p.beta * j.s).exp();
    let pj = perturbed_jet(j, p, sigma);
    let fj = f.eval(j);
    let fp = f.eval(&pj);
    let force = forcing(&j.p, p.m).scale(p.mu * p.k0);
    let scale = 1.0 - sigma * p.mu * p.beta * g;
    let gap = match side {
        Variation::Tilde => &(&fp - &fj.scale(scale)) - &force,
        Variation::Hat => &(&fj.scale(scale) - &force) - &fp,
    };
    Ok((pj, gap))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationScan {
    pub side: Variation,
    pub tested: usize,
    pub min_eig: f64,
    pub worst: Option<Jet2>,
    pub params: PerturbationParams,
}

impl VariationScan {
    pub fn pass(&self) -> bool {
        self.tested > 0 && self.min_eig >= -GAP_TOL
    }
}

/// Random jets in the working set: `x ∈ [−1, 1]ⁿ`, `|s| ≤ M`, `|p| ≤ 10`,
/// Hessian entries in `[−5, 5]` and `τ` in the admissible band below
/// `e^{α|x|²} + e^{−βs} + δ`.
pub fn random_working_jet(p: &PerturbationParams, n: usize, rng: &mut crate::rng::Rng) -> (Jet2, f64) {
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let s = rng.gen_range(-p.big_m..=p.big_m);
    let dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let q = rng.gen_range(0.0..=10.0);
    let grad: Vec<f64> = dir.iter().map(|v| v * q / dn).collect();
    let h = SymMatrix::from_fn(n, |_, _| rng.gen_range(-5.0..=5.0));
    let j = Jet2 { x, s, p: grad, h };
    let top = p.bump(&j) + p.delta;
    let tau = top - rng.gen_range(0.0..=1.0);
    (j, tau)
}

/// Smallest gap eigenvalue over `samples` random working-set jets.
pub fn scan_variation(
    f: &OperatorSpec,
    p: &PerturbationParams,
    side: Variation,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<VariationScan> {
    let mut rng = seeded(seed);
    let mut min_eig = f64::INFINITY;
    let mut worst = None;
    for _ in 0..samples {
        let (j, tau) = random_working_jet(p, n, &mut rng);
        let pp = p.with_tau(tau);
        let (_, gap) = variation(&j, &pp, f, side)?;
        let e = eigen_sym(&gap).min();
        if e < min_eig {
            min_eig = e;
            worst = Some(j);
        }
    }
    Ok(VariationScan { side, tested: samples, min_eig, worst, params: *p })
}
