use crate::error::{arg, domain, Result};
use crate::matcone::{eigen_sym, Spectrum};
use crate::operators::{FieldOracle, OperatorSpec};

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Radial functions with exact first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `t^{1/3}|r − r₀|^{2/3}`.
    PowerTwoThirds { t: f64, r0: f64 },
    /// `r^{λ+1} / ((λ+1)(λ+n−1)^λ)` with `λ = 1/(1−γ)`.
    HolderCtex { gamma: f64, n: usize },
    /// `−(m−1)^{(m−2)/(m−1)} (m−2)^{−1} (r−1)^{(m−2)/(m−1)}` on `(1, ∞)`.
    BLipCtex { m: f64 },
    /// `ln(r^{2−n} + μ) / (α − nβ)`.
    LogSingular { mu: f64, alpha: f64, beta: f64, n: usize },
    /// `(δ/2) ln cosh(r − r₀)`.
    TanhBump { delta: f64, r0: f64 },
    /// Piecewise-linear interpolation of sampled values and derivatives.
    Sampled { r: Vec<f64>, psi: Vec<f64>, dpsi: Vec<f64>, ddpsi: Vec<f64> },
}

impl RadialProfile {
    pub fn sampled(r: Vec<f64>, psi: Vec<f64>, dpsi: Vec<f64>, ddpsi: Vec<f64>) -> Result<Self> {
        let k = r.len();
        if k < 2 || psi.len() != k || dpsi.len() != k || ddpsi.len() != k {
            return arg("sampled profile needs at least two radii and matching columns");
        }
        if r.windows(2).any(|w| !(w[1] > w[0])) {
            return arg("sampled radii must increase strictly");
        }
        Ok(RadialProfile::Sampled { r, psi, dpsi, ddpsi })
    }

    /// Closed interval of radii where the profile is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            RadialProfile::BLipCtex { .. } => (1.0, f64::INFINITY),
            RadialProfile::LogSingular { .. } => (0.0, f64::INFINITY),
            RadialProfile::Sampled { r, .. } => (r[0], r[r.len() - 1]),
            _ => (0.0, f64::INFINITY),
        }
    }

    /// `(ψ, ψ′, ψ″)` at radius `r`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = self.domain();
        if !(r >= lo && r <= hi) {
            return domain(format!("radius {r} outside [{lo}, {hi}]"));
        }
        Ok(match self {
            RadialProfile::PowerTwoThirds { t, r0 } => {
                let d = r - r0;
                if d == 0.0 {
                    return domain("profile is not twice differentiable at r0");
                }
                let tau = t.cbrt();
                let a = d.abs();
                let a13 = a.cbrt();
                (tau * a13 * a13, (2.0 / 3.0) * tau / a13 * d.signum(), -(2.0 / 9.0) * tau / (a * a13))
            }
            RadialProfile::HolderCtex { gamma, n } => {
                let lam = 1.0 / (1.0 - gamma);
                let c = (lam + *n as f64 - 1.0).powf(lam);
                (r.powf(lam + 1.0) / ((lam + 1.0) * c), r.powf(lam) / c, lam * r.powf(lam - 1.0) / c)
            }
            RadialProfile::BLipCtex { m } => {
                if r == 1.0 {
                    return domain("profile is singular at r = 1");
                }
                let e = (m - 2.0) / (m - 1.0);
                let c = (m - 1.0).powf(e) / (m - 2.0);
                let base = (m - 1.0) * (r - 1.0);
                (-c * (r - 1.0).powf(e), -base.powf(-1.0 / (m - 1.0)), base.powf(-m / (m - 1.0)))
            }
            RadialProfile::LogSingular { mu, alpha, beta, n } => {
                if r == 0.0 {
                    return domain("profile is singular at the origin");
                }
                let nf = *n as f64;
                let k = alpha - nf * beta;
                let h = r.powf(2.0 - nf) + mu;
                let h1 = (2.0 - nf) * r.powf(1.0 - nf);
                let h2 = (2.0 - nf) * (1.0 - nf) * r.powf(-nf);
                (h.ln() / k, h1 / (k * h), (h2 / h - h1 * h1 / (h * h)) / k)
            }
            RadialProfile::TanhBump { delta, r0 } => {
                let x = r - r0;
                let th = x.tanh();
                (0.5 * delta * ln_cosh(x), 0.5 * delta * th, 0.5 * delta * (1.0 - th * th))
            }
            RadialProfile::Sampled { r: rs, psi, dpsi, ddpsi } => {
                let i = match rs.binary_search_by(|v| v.total_cmp(&r)) {
                    Ok(i) => return Ok((psi[i], dpsi[i], ddpsi[i])),
                    Err(i) => i - 1,
                };
                let w = (r - rs[i]) / (rs[i + 1] - rs[i]);
                let lerp = |v: &[f64]| v[i] + w * (v[i + 1] - v[i]);
                (lerp(psi), lerp(dpsi), lerp(ddpsi))
            }
        })
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        if let RadialProfile::PowerTwoThirds { t, r0 } = self {
            let a = (r - r0).abs().cbrt();
            return Ok(t.cbrt() * a * a);
        }
        Ok(self.eval(r)?.0)
    }
}

/// The two distinct eigenvalues `(μ, ν)` of `F` at the radial jet with
/// value `s`, slope `ψ′` and curvature `ψ″`; the spectrum is `(μ, ν, …, ν)`.
pub fn radial_f_eigs(r: f64, s: f64, dpsi: f64, ddpsi: f64, f: &OperatorSpec, n: usize) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return domain(format!("radius must be positive, got {r}"));
    }
    match f.radial_l(r, s, dpsi.abs(), n) {
        Some((par, perp)) => Ok((ddpsi + par, dpsi / r + perp)),
        None => {
            // user-supplied L: assemble the matrix at x = r e₁ and read the
            // entries along and across the gradient
            let mut x = vec![0.0; n];
            x[0] = r;
            let mut p = vec![0.0; n];
            p[0] = dpsi;
            let mut h = crate::matcone::SymMatrix::scaled_identity(n, dpsi / r);
            h.set(0, 0, ddpsi);
            let jet = crate::operators::Jet2::new(x, s, p, h)?;
            let m = f.eval(&jet);
            Ok((m.get(0, 0), m.get(1, 1)))
        }
    }
}

/// Full spectrum `(μ, ν, …, ν)`.
pub fn radial_spectrum(mu: f64, nu: f64, n: usize) -> Spectrum {
    let mut v = vec![nu; n];
    v[0] = mu;
    Spectrum::new(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuarticVariant {
    /// `8P₄ + 6561` with `|p|⁴` weight one.
    P4,
    /// `2P̃₄ + 164025` with `|p|⁴/100`.
    P4Tilde,
}

/// Closed-form eigenvalues `(λ₁, λ₂)` of `F[ψ_t]` for `ψ_t = t^{1/3}|r−r₀|^{2/3}`.
pub fn lambda12_t(t: f64, r: f64, r0: f64, alpha: f64, variant: QuarticVariant) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return domain(format!("radius must be positive, got {r}"));
    }
    let d = r - r0;
    if d == 0.0 {
        return domain("profile is not twice differentiable at r0");
    }
    let a = d.abs();
    let pre = t.cbrt() / (a * a.cbrt());
    let t2 = t * t;
    Ok(match variant {
        QuarticVariant::P4 => {
            let p8 = 8.0 * (64.0 * t2 * t2 + 324.0 * alpha * t2 + 729.0 * t);
            let k = -2.0 / 59049.0 * pre;
            (k * (p8 + 6561.0), k * (p8 - 19683.0 * d / r))
        }
        QuarticVariant::P4Tilde => {
            let p2 = 2.0 * (6400.0 * t2 * t2 + 32400.0 * alpha * t2 + 729.0 * t);
            let k = -2.0 / 1476225.0 * pre;
            (k * (p2 + 164025.0), k * (p2 - 492075.0 * d / r))
        }
    })
}

/// `λ₁` at a root of the variant's quartic, using the compensated value of
/// the quartic so that cancellation is not amplified.
pub(crate) fn lambda1_at(q: &super::QuarticSpec, t: f64, r: f64, r0: f64, variant: QuarticVariant) -> f64 {
    let a = (r - r0).abs();
    let pre = t.cbrt() / (a * a.cbrt());
    let k = match variant {
        QuarticVariant::P4 => -2.0 / 59049.0,
        QuarticVariant::P4Tilde => -2.0 / 1476225.0,
    };
    k * pre * super::quartic_eval(q, t)
}

/// Trace residual and spectrum of `F[ψ_μ]` for `F = quad:α:β`.
#[derive(Debug, Clone)]
pub struct LogSingularReport {
    pub trace_residual: f64,
    pub spectrum: Spectrum,
    pub min_eigenvalue: f64,
}

/// Evaluates `Δψ_μ + (α − nβ)|∇ψ_μ|²`, the trace of `F[ψ_μ]`.
pub fn log_singular_check(mu: f64, alpha: f64, beta: f64, n: usize, x: &[f64]) -> Result<LogSingularReport> {
    if !(alpha - n as f64 * beta > 0.0) {
        return arg("need alpha - n beta > 0");
    }
    if x.iter().all(|v| *v == 0.0) {
        return domain("log-singular profile is undefined at the origin");
    }
    let jet = FieldOracle::LogSingular { n, mu, alpha, beta }.jet(x)?;
    let m = OperatorSpec::QuadConst { alpha, beta }.eval(&jet);
    let spectrum = eigen_sym(&m);
    Ok(LogSingularReport { trace_residual: m.trace(), min_eigenvalue: spectrum.min(), spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    #[test]
    fn zero_profile_gives_b_at_zero() {
        let f = OperatorSpec::rotinv("id", "negone").unwrap();
        assert_eq!(radial_f_eigs(1.3, 0.0, 0.0, 0.0, &f, 3).unwrap(), (-1.0, -1.0));
        assert!(radial_f_eigs(0.0, 0.0, 0.0, 0.0, &f, 3).is_err());
    }

    #[test]
    fn blip_profile_has_vanishing_mu() {
        for m in [2.5, 3.0, 4.0] {
            let prof = RadialProfile::BLipCtex { m };
            let f: OperatorSpec = format!("genL:sink:{m}").parse().unwrap();
            for k in 1..50 {
                let r = 1.0 + 0.04 * k as f64;
                let (s, d1, d2) = prof.eval(r).unwrap();
                let (mu, nu) = radial_f_eigs(r, s, d1, d2, &f, 3).unwrap();
                assert!(mu.abs() <= 1e-10 * (1.0 + d2.abs()), "m={m} r={r} mu={mu}");
                assert!(nu < 0.0);
            }
        }
    }

    #[test]
    fn holder_profile_solves_the_trace_equation() {
        for &(gamma, n) in &[(0.5, 3usize), (0.25, 2), (0.75, 4)] {
            let prof = RadialProfile::HolderCtex { gamma, n };
            let f: OperatorSpec = format!("genL:holder:{gamma}").parse().unwrap();
            for k in 1..40 {
                let r = 0.05 * k as f64;
                let (s, d1, d2) = prof.eval(r).unwrap();
                let lap = d2 + (n as f64 - 1.0) * d1 / r;
                assert!((lap - d1.abs().powf(gamma)).abs() <= 1e-10);
                let (mu, nu) = radial_f_eigs(r, s, d1, d2, &f, n).unwrap();
                assert!((mu + (n as f64 - 1.0) * nu).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn lambda_plug_in() {
        let (l1, _) = lambda12_t(1.0, 2.0, 1.0, -3.0, QuarticVariant::P4).unwrap();
        assert!((l1 + 2.0 * 5129.0 / 59049.0).abs() < 1e-15);
        assert_eq!(lambda12_t(0.0, 2.0, 1.0, -3.0, QuarticVariant::P4).unwrap(), (0.0, 0.0));
        assert!(lambda12_t(1.0, 1.0, 1.0, -3.0, QuarticVariant::P4).is_err());
    }

    /// The closed forms agree with the generic operator pipeline.
    #[test]
    fn closed_forms_match_pipeline() {
        let mut rng = seeded(21);
        for _ in 0..1000 {
            let t = rng.gen_range(-3.0..3.0);
            let r0 = 1.0;
            let r = r0 + rng.gen_range(-0.5f64..0.5);
            if (r - r0).abs() < 1e-3 {
                continue;
            }
            for (variant, spec) in
                [(QuarticVariant::P4, "genL:beta-sign:-3"), (QuarticVariant::P4Tilde, "genL:tilde:-3")]
            {
                let prof = RadialProfile::PowerTwoThirds { t, r0 };
                let (s, d1, d2) = prof.eval(r).unwrap();
                let f: OperatorSpec = spec.parse().unwrap();
                let (mu, nu) = radial_f_eigs(r, s, d1, d2, &f, 3).unwrap();
                let (l1, l2) = lambda12_t(t, r, r0, -3.0, variant).unwrap();
                let (par, _) = f.radial_l(r, s, d1.abs(), 3).unwrap();
                let scale = d2.abs() + par.abs() + (d1 / r).abs();
                assert!((mu - l1).abs() <= 1e-9 * scale.max(l1.abs()), "{mu} vs {l1}");
                assert!((nu - l2).abs() <= 1e-9 * scale.max(l2.abs()), "{nu} vs {l2}");
            }
        }
    }

    #[test]
    fn log_singular_examples() {
        let x = [0.5, 0.0, 0.0];
        let rep = log_singular_check(0.0, 1.0, 0.0, 3, &x).unwrap();
        assert!(rep.trace_residual.abs() <= 1e-10);
        let rep = log_singular_check(1.0, 1.0, 0.0, 3, &x).unwrap();
        assert!(rep.trace_residual.abs() <= 1e-10);
        assert!(log_singular_check(1.0, 1.0, 0.0, 3, &[0.0; 3]).is_err());
        assert!(log_singular_check(1.0, 1.0, 1.0, 3, &x).is_err());
        // ψ₁ − ψ₀ at |x| = 1 is ln 2 / (α − nβ)
        let p1 = RadialProfile::LogSingular { mu: 1.0, alpha: 1.0, beta: 0.0, n: 3 };
        let p0 = RadialProfile::LogSingular { mu: 0.0, alpha: 1.0, beta: 0.0, n: 3 };
        assert!((p1.value(1.0).unwrap() - p0.value(1.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        for k in 1..100 {
            let r = k as f64 / 100.0;
            assert!(p1.value(r).unwrap() > p0.value(r).unwrap());
        }
    }

    #[test]
    fn tanh_bump_derivatives() {
        let p = RadialProfile::TanhBump { delta: 0.5, r0: 2.0 };
        let (v, d1, d2) = p.eval(2.0).unwrap();
        assert_eq!((v, d1, d2), (0.0, 0.0, 0.25));
        let h = 1e-5;
        let (_, a, _) = p.eval(2.7).unwrap();
        let fd = (p.value(2.7 + h).unwrap() - p.value(2.7 - h).unwrap()) / (2.0 * h);
        assert!((a - fd).abs() < 1e-9);
    }

    #[test]
    fn sampled_profile_interpolates() {
        let p = RadialProfile::sampled(vec![0.0, 1.0], vec![0.0, 2.0], vec![2.0, 2.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(p.eval(0.25).unwrap(), (0.5, 2.0, 0.0));
        assert!(RadialProfile::sampled(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(p.eval(1.5).is_err());
    }
}
