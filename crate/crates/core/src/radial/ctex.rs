use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_rational::Ratio;

use crate::envelopes::GridFn;
use crate::error::{arg, Error, Result};
use crate::operators::OperatorSpec;

use super::interp::{tilde_alpha_exact, BAND};
use super::profiles::{lambda12_t, lambda1_at, radial_f_eigs, QuarticVariant, RadialProfile};
use super::quartic::{quartic_roots, to_f64, QuarticSpec, Root};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CtexKind {
    /// Sign-changing `s`-dependence with `α < −5/2`.
    BetaSign,
    /// The modified term, equal to `L̃` on the set `N`.
    NonDecL,
    /// Hölder continuous `L = −|p|^γ I / n`.
    HolderRhs,
    /// `b(0) = 0`, `b′(0) ≠ 0`.
    BPrimeNonzero,
}

impl CtexKind {
    pub fn label(self) -> &'static str {
        match self {
            CtexKind::BetaSign => "beta-sign",
            CtexKind::NonDecL => "nondec",
            CtexKind::HolderRhs => "holder",
            CtexKind::BPrimeNonzero => "bprime",
        }
    }
}

impl fmt::Display for CtexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CtexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "beta-sign" => Ok(CtexKind::BetaSign),
            "nondec" => Ok(CtexKind::NonDecL),
            "holder" => Ok(CtexKind::HolderRhs),
            "bprime" => Ok(CtexKind::BPrimeNonzero),
            other => Err(Error::Parse(format!("unknown counterexample kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CtexParams {
    /// Coefficient of `s|p|⁶`; defaults to `−3` and `−36/25`.
    pub alpha: Option<Ratio<i64>>,
    /// Touching radius; defaults to 1 (power profiles) or 2 (bprime).
    pub r0: Option<f64>,
    /// Hölder exponent.
    pub gamma: f64,
    pub n: usize,
}

impl Default for CtexParams {
    fn default() -> Self {
        CtexParams { alpha: None, r0: None, gamma: 0.5, n: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtexRow {
    pub r: f64,
    pub w: f64,
    pub v: f64,
    pub mu_w: f64,
    pub nu_w: f64,
    pub mu_v: f64,
    pub nu_v: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct Clause {
    pub name: &'static str,
    pub pass: bool,
    pub witness_r: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CtexCertificate {
    pub kind: CtexKind,
    pub operator: String,
    pub cone: String,
    pub alpha: Option<Ratio<i64>>,
    pub r0: f64,
    /// Half-width of the certified radial window.
    pub delta: f64,
    pub t0: Option<f64>,
    pub roots: Vec<Root>,
    pub unresolved: Vec<(f64, f64)>,
    pub rows: Vec<CtexRow>,
    pub clauses: Vec<Clause>,
    pub touching: Vec<f64>,
    /// Largest `|λ₁|` over the located roots and the grid.
    pub lambda1_max: Option<f64>,
    /// `(w, v)` at the touching radius, where the profiles are finite.
    pub touch_values: Option<(f64, f64)>,
}

impl CtexCertificate {
    pub fn pass(&self) -> bool {
        !self.clauses.is_empty() && self.clauses.iter().all(|c| c.pass)
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    /// `w` and `v` on the equispaced radial window with the touching
    /// radius put back when the scan grid punctured it.
    pub fn pair_grids(&self) -> Result<(GridFn, GridFn)> {
        let mut pts: Vec<(f64, f64, f64)> = self.rows.iter().map(|r| (r.r, r.w, r.v)).collect();
        if let (Some(&t), Some((a, b))) = (self.touching.first(), self.touch_values) {
            if !pts.iter().any(|p| p.0 == t) {
                pts.push((t, a, b));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.len() < 3 {
            return arg("certificate has fewer than 3 rows");
        }
        let lo = pts[0].0;
        let h = (pts[pts.len() - 1].0 - lo) / (pts.len() - 1) as f64;
        for (k, p) in pts.iter().enumerate() {
            if (lo + k as f64 * h - p.0).abs() > 1e-9 * h {
                return arg("certificate radii are not equispaced");
            }
        }
        let shape = vec![pts.len()];
        let w = GridFn::from_values(vec![lo], vec![h], shape.clone(), pts.iter().map(|p| p.1).collect())?;
        let v = GridFn::from_values(vec![lo], vec![h], shape, pts.iter().map(|p| p.2).collect())?;
        Ok((w, v))
    }

    pub fn failed_clauses(&self) -> Vec<&'static str> {
        self.clauses.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }

    /// Rows as CSV with header `r,w,v,mu_w,nu_w,mu_v,nu_v,verdict`.
    pub fn write_rows_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "r,w,v,mu_w,nu_w,mu_v,nu_v,verdict")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                r.r,
                r.w,
                r.v,
                r.mu_w,
                r.nu_w,
                r.mu_v,
                r.nu_v,
                if r.ok { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }

    /// Roots as CSV with header `i,t_i,bracket_lo,bracket_hi`.
    pub fn write_roots_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "i,t_i,bracket_lo,bracket_hi")?;
        for (i, r) in self.roots.iter().enumerate() {
            writeln!(out, "{},{:.17e},{:.17e},{:.17e}", i + 1, r.t, r.lo, r.hi)?;
        }
        Ok(())
    }
}

/// Per-row tolerance on a cancelling eigenvalue.
fn eig_tol(terms: &[f64]) -> f64 {
    1e-9 * (1.0 + terms.iter().map(|t| t.abs()).sum::<f64>())
}

struct Scan {
    rows: Vec<CtexRow>,
    clauses: Vec<Clause>,
    touching: Vec<f64>,
    touch_values: Option<(f64, f64)>,
}

/// Checks the sub/super signatures for `U = ` positive definite (or the
/// trace cone for the Hölder case) and the touching pattern.
fn scan(
    radii: &[f64],
    touch_at: f64,
    w: &dyn Fn(f64) -> Result<(f64, f64, f64)>,
    v: &dyn Fn(f64) -> Result<(f64, f64, f64)>,
    f: &OperatorSpec,
    n: usize,
    trace_cone: bool,
) -> Result<Scan> {
    let mut rows = Vec::with_capacity(radii.len());
    let mut wit_super = None;
    let mut wit_sub = None;
    let mut wit_order = None;
    let mut wit_touch = None;
    let nf = n as f64;
    for &r in radii {
        let (ws, w1, w2) = w(r)?;
        let (vs, v1, v2) = v(r)?;
        let (mu_w, nu_w) = radial_f_eigs(r, ws, w1, w2, f, n)?;
        let (mu_v, nu_v) = radial_f_eigs(r, vs, v1, v2, f, n)?;
        let (pw, _) = f.radial_l(r, ws, w1.abs(), n).unwrap_or((0.0, 0.0));
        let (pv, _) = f.radial_l(r, vs, v1.abs(), n).unwrap_or((0.0, 0.0));
        let tw = eig_tol(&[w2, pw, w1 / r]) * if trace_cone { nf } else { 1.0 };
        let tv = eig_tol(&[v2, pv, v1 / r]) * if trace_cone { nf } else { 1.0 };
        let (sup_ok, sub_ok) = if trace_cone {
            (mu_w + (nf - 1.0) * nu_w <= tw, mu_v + (nf - 1.0) * nu_v >= -tv)
        } else {
            (mu_w.min(nu_w) <= tw, mu_v.min(nu_v) >= -tv)
        };
        let order_ok = ws >= vs;
        if !sup_ok && wit_super.is_none() {
            wit_super = Some(r);
        }
        if !sub_ok && wit_sub.is_none() {
            wit_sub = Some(r);
        }
        if !order_ok && wit_order.is_none() {
            wit_order = Some(r);
        }
        if r != touch_at && !(ws - vs > 0.0) && wit_touch.is_none() {
            wit_touch = Some(r);
        }
        rows.push(CtexRow { r, w: ws, v: vs, mu_w, nu_w, mu_v, nu_v, ok: sup_ok && sub_ok && order_ok });
    }
    let first = radii[0];
    let last = radii[radii.len() - 1];
    let gap = |r: f64| -> Result<bool> { Ok(w(r)?.0 > v(r)?.0) };
    let ends_ok = gap(first)? && gap(last)?;
    let touching = vec![touch_at];
    let touch_values = match (w(touch_at), v(touch_at)) {
        (Ok(a), Ok(b)) if a.0.is_finite() && b.0.is_finite() => Some((a.0, b.0)),
        _ => None,
    };
    let clauses = vec![
        Clause { name: "w_supersolution", pass: wit_super.is_none(), witness_r: wit_super },
        Clause { name: "v_subsolution", pass: wit_sub.is_none(), witness_r: wit_sub },
        Clause { name: "w_ge_v", pass: wit_order.is_none(), witness_r: wit_order },
        Clause { name: "touching_only_at_r0", pass: wit_touch.is_none(), witness_r: wit_touch },
        Clause { name: "w_gt_v_on_boundary", pass: ends_ok, witness_r: if ends_ok { None } else { Some(first) } },
    ];
    Ok(Scan { rows, clauses, touching, touch_values })
}

/// `count` equispaced radii on `[lo, hi]`, dropping `puncture` if hit.
fn grid(lo: f64, hi: f64, count: usize, puncture: Option<f64>) -> Vec<f64> {
    (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).filter(|r| Some(*r) != puncture).collect()
}

/// Builds the counterexample pair and certifies it on a grid of `rgrid`
/// radii.
pub fn build_counterexample(kind: CtexKind, params: &CtexParams, rgrid: usize) -> Result<CtexCertificate> {
    if rgrid < 3 {
        return arg("need at least 3 radii");
    }
    if params.n < 2 {
        return arg("need n >= 2");
    }
    match kind {
        CtexKind::BetaSign | CtexKind::NonDecL => power_pair(kind, params, rgrid),
        CtexKind::BPrimeNonzero => bprime(params, rgrid),
        CtexKind::HolderRhs => holder(params, rgrid),
    }
}

fn power_pair(kind: CtexKind, params: &CtexParams, rgrid: usize) -> Result<CtexCertificate> {
    let n = params.n;
    let r0 = params.r0.unwrap_or(1.0);
    if !(r0 > 0.0) {
        return arg("r0 must be positive");
    }
    let (variant, q, f, seps, alpha) = match kind {
        CtexKind::BetaSign => {
            let alpha = params.alpha.unwrap_or(Ratio::from_integer(-3));
            let a = to_f64(alpha);
            (
                QuarticVariant::P4,
                QuarticSpec::beta_sign_roots(alpha)?,
                OperatorSpec::general(crate::operators::GeneralL::BetaSign { alpha: a }),
                vec![-2.0, 0.0, 2.25],
                alpha,
            )
        }
        _ => {
            let alpha = params.alpha.unwrap_or(tilde_alpha_exact());
            if alpha != tilde_alpha_exact() {
                return arg("the modified counterexample is fixed at alpha = -36/25");
            }
            (
                QuarticVariant::P4Tilde,
                QuarticSpec::tilde_roots(alpha)?,
                OperatorSpec::general(crate::operators::GeneralL::NonDec),
                vec![-2.0, -1.6, 2.0],
                alpha,
            )
        }
    };
    let a = to_f64(alpha);
    let found = quartic_roots(&q);
    let interlaced = found.interlaces(&seps);
    let mut cert = CtexCertificate {
        kind,
        operator: f.to_string(),
        cone: "posdef".into(),
        alpha: Some(alpha),
        r0,
        delta: 0.0,
        t0: None,
        roots: found.roots.clone(),
        unresolved: found.unresolved.clone(),
        rows: Vec::new(),
        clauses: vec![Clause { name: "roots_interlace", pass: interlaced, witness_r: None }],
        touching: Vec::new(),
        lambda1_max: None,
        touch_values: None,
    };
    if !interlaced {
        return Ok(cert);
    }
    let t: Vec<f64> = found.values();
    let lam = |tt: f64, r: f64| lambda12_t(tt, r, r0, a, variant);

    // λ₁ > 0 and λ₂ > 0 across the window
    let t0_ok = |t0: f64, radii: &[f64]| -> Result<bool> {
        for &r in radii {
            let (l1, l2) = lam(t0, r)?;
            if !(l1 > 0.0 && l2 > 0.0) {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let mut last = None;
    for k in 2..=20 {
        let delta = 0.5f64.powi(k);
        if r0 - delta <= 0.0 {
            continue;
        }
        let radii = grid(r0 - delta, r0 + delta, rgrid, Some(r0));
        let t0 = match kind {
            CtexKind::NonDecL => Some(-3.0).filter(|&c| t0_ok(c, &radii).unwrap_or(false)),
            _ => {
                let mut found_t0 = None;
                for step in 1..=400 {
                    let c = t[0] - 0.25 * step as f64;
                    if t0_ok(c, &radii)? {
                        found_t0 = Some(c);
                        break;
                    }
                }
                found_t0
            }
        };
        let mut clauses = vec![Clause { name: "roots_interlace", pass: true, witness_r: None }];
        let mut l1_max: f64 = 0.0;
        let mut wit_l2 = None;
        for &ti in &t {
            for &r in &radii {
                l1_max = l1_max.max(lambda1_at(&q, ti, r, r0, variant).abs());
                let (_, l2) = lam(ti, r)?;
                if !(ti * l2 > 0.0) && wit_l2.is_none() {
                    wit_l2 = Some(r);
                }
            }
        }
        clauses.push(Clause { name: "lambda1_vanishes", pass: l1_max <= 1e-9, witness_r: None });
        clauses.push(Clause { name: "lambda2_sign", pass: wit_l2.is_none(), witness_r: wit_l2 });
        clauses.push(Clause { name: "t0_both_positive", pass: t0.is_some(), witness_r: None });
        let t0v = t0.unwrap_or(t[0] - 1.0);
        let (t2, t3, t4) = (t[1], t[2], t[3]);
        let w = move |r: f64| RadialProfile::PowerTwoThirds { t: if r >= r0 { t4 } else { t2 }, r0 }.eval(r);
        let v = move |r: f64| RadialProfile::PowerTwoThirds { t: if r >= r0 { t3 } else { t0v }, r0 }.eval(r);
        let sc = scan(&radii, r0, &w, &v, &f, n, false)?;
        clauses.extend(sc.clauses);
        let touch_values = Some((
            RadialProfile::PowerTwoThirds { t: t4, r0 }.value(r0)?,
            RadialProfile::PowerTwoThirds { t: t3, r0 }.value(r0)?,
        ));
        if kind == CtexKind::NonDecL {
            // s|p|² for every jet of w and v stays outside the band
            let in_n = sc.rows.iter().all(|row| {
                let sw = |tt: f64| 4.0 * tt / 9.0;
                let _ = row;
                [t2, t3, t4, t0v].iter().all(|&tt| sw(tt).abs() >= BAND)
            });
            let mut wit = None;
            for &r in &radii {
                for prof in [w(r)?, v(r)?] {
                    if (prof.0 * prof.1 * prof.1).abs() < BAND * (1.0 - 1e-12) && wit.is_none() {
                        wit = Some(r);
                    }
                }
            }
            clauses.push(Clause { name: "jets_in_N", pass: in_n && wit.is_none(), witness_r: wit });
        }
        let c = CtexCertificate {
            kind,
            operator: f.to_string(),
            cone: "posdef".into(),
            alpha: Some(alpha),
            r0,
            delta,
            t0,
            roots: found.roots.clone(),
            unresolved: found.unresolved.clone(),
            rows: sc.rows,
            clauses,
            touching: sc.touching,
            lambda1_max: Some(l1_max),
            touch_values,
        };
        if c.pass() {
            return Ok(c);
        }
        last = Some(c);
    }
    cert = last.unwrap_or(cert);
    Ok(cert)
}

fn bprime(params: &CtexParams, rgrid: usize) -> Result<CtexCertificate> {
    let n = params.n;
    let r0 = params.r0.unwrap_or(2.0);
    let delta = 0.5;
    let f = OperatorSpec::rotinv("zero", "neg")?;
    // b(s) = −s: b(s) < 0 and s/|b(s)| = 1 < r0 on (0, δ)
    if !(r0 > 1.0) {
        return arg("bprime needs r0 > 1");
    }
    let prof = RadialProfile::TanhBump { delta, r0 };
    let w = |r: f64| prof.eval(r);
    let v = |_: f64| Ok((0.0, 0.0, 0.0));
    let radii = grid(r0 - 1.0, r0 + 1.0, rgrid, None);
    let sc = scan(&radii, r0, &w, &v, &f, n, false)?;
    let mut clauses = sc.clauses;
    let nu_bad = sc.rows.iter().find(|row| row.nu_w > 0.0).map(|row| row.r);
    let nu_zero = {
        let (s, d1, d2) = prof.eval(r0)?;
        radial_f_eigs(r0, s, d1, d2, &f, n)?.1 == 0.0
    };
    clauses.push(Clause { name: "nu_nonpositive", pass: nu_bad.is_none(), witness_r: nu_bad });
    clauses.push(Clause { name: "nu_zero_at_r0", pass: nu_zero, witness_r: if nu_zero { None } else { Some(r0) } });
    Ok(CtexCertificate {
        kind: CtexKind::BPrimeNonzero,
        operator: f.to_string(),
        cone: "posdef".into(),
        alpha: None,
        r0,
        delta: 1.0,
        t0: None,
        roots: Vec::new(),
        unresolved: Vec::new(),
        rows: sc.rows,
        clauses,
        touching: sc.touching,
        lambda1_max: None,
        touch_values: sc.touch_values,
    })
}

fn holder(params: &CtexParams, rgrid: usize) -> Result<CtexCertificate> {
    let n = params.n;
    let gamma = params.gamma;
    if !(gamma > 0.0 && gamma < 1.0) {
        return arg("holder exponent must lie in (0, 1)");
    }
    let f = OperatorSpec::general(crate::operators::GeneralL::Holder { gamma });
    let prof = RadialProfile::HolderCtex { gamma, n };
    let w = |r: f64| prof.eval(r);
    let v = |_: f64| Ok((0.0, 0.0, 0.0));
    let radii = grid(0.0, 1.0, rgrid, Some(0.0));
    let sc = scan(&radii, 0.0, &w, &v, &f, n, true)?;
    let mut clauses = sc.clauses;
    // both are classical solutions: the trace vanishes
    let nf = n as f64;
    let bad = sc
        .rows
        .iter()
        .find(|row| (row.mu_w + (nf - 1.0) * row.nu_w).abs() > 1e-10 || (row.mu_v + (nf - 1.0) * row.nu_v) != 0.0)
        .map(|row| row.r);
    clauses.push(Clause { name: "both_solve_trace_equation", pass: bad.is_none(), witness_r: bad });
    let w0 = prof.value(0.0)?;
    clauses.push(Clause { name: "touch_at_origin", pass: w0 == 0.0, witness_r: None });
    Ok(CtexCertificate {
        kind: CtexKind::HolderRhs,
        operator: f.to_string(),
        cone: "trace".into(),
        alpha: None,
        r0: 0.0,
        delta: 1.0,
        t0: None,
        roots: Vec::new(),
        unresolved: Vec::new(),
        rows: sc.rows,
        clauses,
        touching: sc.touching,
        lambda1_max: None,
        touch_values: sc.touch_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(kind: CtexKind, alpha: Option<Ratio<i64>>) -> CtexCertificate {
        let p = CtexParams { alpha, ..CtexParams::default() };
        build_counterexample(kind, &p, 2001).unwrap()
    }

    #[test]
    fn pair_grid_restores_the_touching_radius() {
        let c = run(CtexKind::BetaSign, None);
        let (w, v) = c.pair_grids().unwrap();
        assert_eq!(w.len(), 2001);
        assert_eq!(w.coord(1000, 0), 1.0);
        assert_eq!(w.value(1000), v.value(1000));
        assert!(w.value(0) > v.value(0) && w.value(2000) > v.value(2000));
    }

    #[test]
    fn beta_sign_certificate_passes() {
        let c = run(CtexKind::BetaSign, None);
        assert!(c.pass(), "{:?}", c.failed_clauses());
        assert_eq!(c.roots.len(), 4);
        assert_eq!(c.delta, 0.125);
        assert_eq!(c.touching, vec![1.0]);
        assert_eq!(c.rows.len(), 2000);
        assert!(c.lambda1_max.unwrap() <= 1e-9);
        assert!(c.t0.unwrap() < c.roots[0].t);
    }

    #[test]
    fn nondec_certificate_passes() {
        let c = run(CtexKind::NonDecL, None);
        assert!(c.pass(), "{:?}", c.failed_clauses());
        assert!(c.roots[1].t.abs() > 1.6 && c.roots[2].t.abs() > 1.6);
        assert_eq!(c.t0, Some(-3.0));
    }

    #[test]
    fn bprime_certificate_passes() {
        let c = run(CtexKind::BPrimeNonzero, None);
        assert!(c.pass(), "{:?}", c.failed_clauses());
        assert_eq!(c.touching, vec![2.0]);
    }

    #[test]
    fn holder_certificate_passes() {
        let c = run(CtexKind::HolderRhs, None);
        assert!(c.pass(), "{:?}", c.failed_clauses());
    }

    #[test]
    fn beta_sign_fails_above_threshold() {
        let c = run(CtexKind::BetaSign, Some(Ratio::from_integer(-2)));
        assert!(!c.pass());
        assert!(!c.clause("roots_interlace").unwrap().pass);
    }

    #[test]
    fn beta_sign_passes_across_the_admissible_range() {
        for k in 0..19 {
            // α from −9.9 to −2.7
            let alpha = Ratio::new(-99 + 4 * k, 10);
            let p = CtexParams { alpha: Some(alpha), ..CtexParams::default() };
            let c = build_counterexample(CtexKind::BetaSign, &p, 401).unwrap();
            assert!(c.pass(), "alpha={alpha}: {:?}", c.failed_clauses());
        }
    }

    #[test]
    fn csv_shapes() {
        let c = run(CtexKind::BPrimeNonzero, None);
        let mut buf = Vec::new();
        c.write_rows_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("r,w,v,mu_w,nu_w,mu_v,nu_v,verdict\n"));
        assert_eq!(text.lines().count(), 2002);
        let c = run(CtexKind::BetaSign, None);
        let mut buf = Vec::new();
        c.write_roots_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn parse_kinds() {
        for k in ["beta-sign", "nondec", "holder", "bprime"] {
            assert_eq!(k.parse::<CtexKind>().unwrap().label(), k);
        }
        assert!("x".parse::<CtexKind>().is_err());
    }
}
