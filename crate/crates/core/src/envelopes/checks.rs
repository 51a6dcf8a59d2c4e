use std::fmt;

use rand::Rng as _;

use crate::error::{arg, Result};
use crate::rng::seeded;

use super::envelope::{envelope, envelope_at, EnvelopeResult, Side};
use super::grid::GridFn;

/// Slack factor `c` in the `c·h` tolerances.
pub const SLACK_C: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvProperty {
    /// Envelopes move monotonically toward the source as ε decreases.
    Convergence,
    /// `D²v^ε ≥ −2/ε` (upper) or `D²w_ε ≤ 2/ε` (lower).
    OneSidedHessian,
    /// `|x* − x|² ≤ ε (max v − v(x))`.
    Displacement,
    /// `|Dv^ε| ≤ (2/√ε)(max v − inf_ω v)^{1/2}` per axis.
    Gradient,
    /// `|x* − x| ≤ [ε K (2ε sup|v|)^{1/2}]^{1/2}` for Lipschitz sources.
    LipschitzDisplacement,
}

impl EnvProperty {
    pub fn label(self) -> &'static str {
        match self {
            EnvProperty::Convergence => "convergence",
            EnvProperty::OneSidedHessian => "one_sided_hessian",
            EnvProperty::Displacement => "displacement",
            EnvProperty::Gradient => "gradient",
            EnvProperty::LipschitzDisplacement => "lipschitz_displacement",
        }
    }
}

impl fmt::Display for EnvProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyRow {
    pub property: EnvProperty,
    pub eps: f64,
    pub pass: bool,
    /// Largest `lhs − bound`; non-positive when the property holds.
    pub worst: f64,
    pub node: Option<usize>,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub side: Side,
    pub rows: Vec<PropertyRow>,
    /// Largest `|env − src|` at the smallest ε.
    pub final_gap: f64,
}

impl EnvelopeReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn rows_for(&self, p: EnvProperty) -> impl Iterator<Item = &PropertyRow> {
        self.rows.iter().filter(move |r| r.property == p)
    }

    pub fn failures(&self) -> Vec<&PropertyRow> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }
}

struct Worst {
    value: f64,
    node: Option<usize>,
    checked: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { value: f64::NEG_INFINITY, node: None, checked: 0 }
    }

    fn see(&mut self, excess: f64, node: usize) {
        self.checked += 1;
        if excess > self.value || excess.is_nan() {
            self.value = excess;
            self.node = Some(node);
        }
    }

    fn row(self, property: EnvProperty, eps: f64) -> PropertyRow {
        let worst = if self.checked == 0 { 0.0 } else { self.value };
        PropertyRow { property, eps, pass: worst <= 0.0, worst, node: self.node, checked: self.checked }
    }
}

/// `s·v`, so the upper-side formulas serve both sides.
fn sgn(side: Side) -> f64 {
    match side {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    }
}

/// Largest pairwise difference quotient, when the grid is small enough.
fn lipschitz_constant(src: &GridFn) -> Option<f64> {
    if src.len() > 4096 || src.values().iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut k: f64 = 0.0;
    for i in 0..src.len() {
        for j in i + 1..src.len() {
            k = k.max((src.value(i) - src.value(j)).abs() / src.dist2(i, j).sqrt());
        }
    }
    Some(k)
}

/// Checks the envelope properties for each ε in a decreasing list.
pub fn check_envelope_properties(src: &GridFn, eps_list: &[f64], side: Side) -> Result<EnvelopeReport> {
    if eps_list.is_empty() {
        return arg("need at least one eps");
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return arg("eps list must be strictly decreasing");
    }
    let s = sgn(side);
    // extreme of the source in the direction the envelope pushes
    let top = match side {
        Side::Upper => src.max_finite(),
        Side::Lower => -src.min_finite(),
    };
    let sup_abs = src.values().iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let lip = lipschitz_constant(src);
    let mut rows = Vec::new();
    let mut prev: Option<EnvelopeResult> = None;
    let mut final_gap = 0.0;
    for &eps in eps_list {
        let e = envelope(src, eps, side)?;
        let env_scale = e.env.values().iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));

        let mut conv = Worst::new();
        for i in 0..src.len() {
            if src.is_masked(i) {
                continue;
            }
            // s·env ≥ s·src, and s·env_k ≤ s·env_{k−1}
            let mut ex = s * (src.value(i) - e.env.value(i));
            if let Some(p) = &prev {
                ex = ex.max(s * (e.env.value(i) - p.env.value(i)));
            }
            conv.see(ex, i);
        }
        rows.push(conv.row(EnvProperty::Convergence, eps));

        let mut hess = Worst::new();
        for i in 0..src.len() {
            for a in 0..src.dim() {
                let Some((l, r)) = src.axis_pair(i, a) else { continue };
                let (el, ec, er) = (e.env.value(l), e.env.value(i), e.env.value(r));
                if !(el.is_finite() && ec.is_finite() && er.is_finite()) {
                    continue;
                }
                let h = src.h()[a];
                let d2 = (el - 2.0 * ec + er) / (h * h);
                let round = 8.0 * f64::EPSILON * env_scale / (h * h);
                hess.see(-2.0 / eps - SLACK_C * h - round - s * d2, i);
            }
        }
        rows.push(hess.row(EnvProperty::OneSidedHessian, eps));

        let mut disp = Worst::new();
        for i in 0..src.len() {
            if src.is_masked(i) {
                continue;
            }
            let d2 = src.dist2(i, e.argpt[i]);
            let bound = eps * (top - s * src.value(i));
            disp.see(d2 - bound - 1e-12 * (d2 + bound.abs()), i);
        }
        rows.push(disp.row(EnvProperty::Displacement, eps));

        let mut grad = Worst::new();
        for i in 0..src.len() {
            for a in 0..src.dim() {
                let Some((l, r)) = src.axis_pair(i, a) else { continue };
                let (el, er) = (e.env.value(l), e.env.value(r));
                if !(el.is_finite() && er.is_finite() && !src.is_masked(l) && !src.is_masked(r)) {
                    continue;
                }
                let h = src.h()[a];
                let d = (er - el) / (2.0 * h);
                let low = (s * src.value(l)).min(s * src.value(r));
                let bound = 2.0 / eps.sqrt() * (top - low).max(0.0).sqrt() + SLACK_C * h / eps;
                let round = 4.0 * f64::EPSILON * env_scale / h;
                grad.see(d.abs() - bound - round, i);
            }
        }
        rows.push(grad.row(EnvProperty::Gradient, eps));

        if let Some(k) = lip {
            let mut ld = Worst::new();
            let bound = (eps * k * (2.0 * eps * sup_abs).sqrt()).sqrt();
            for i in 0..src.len() {
                let d = src.dist2(i, e.argpt[i]).sqrt();
                ld.see(d - bound * (1.0 + 1e-12), i);
            }
            rows.push(ld.row(EnvProperty::LipschitzDisplacement, eps));
        }

        final_gap = (0..src.len())
            .filter(|&i| !src.is_masked(i))
            .map(|i| (e.env.value(i) - src.value(i)).abs())
            .fold(0.0, f64::max);
        prev = Some(e);
    }
    Ok(EnvelopeReport { side, rows, final_gap })
}

/// Resolution of the dyadic grid on `[−1, 1]`.
pub const DYADIC_LEVELS: i32 = 17;

/// The lower semicontinuous dyadic staircase: on `(2^{−(j+1)}, 2^{−j}]` it
/// is `1` for odd `j` and the ramp `2 − 2^{j+1}|x|` for even `j`; `w(0) = 0`.
pub fn dyadic_w(x: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        return 0.0;
    }
    if a > 1.0 {
        return f64::NAN;
    }
    let mut j = 0i32;
    while a <= 0.5f64.powi(j + 1) {
        j += 1;
    }
    if j % 2 == 1 {
        1.0
    } else {
        2.0 - 2.0f64.powi(j + 1) * a
    }
}

/// The staircase on `[−1, 1]` with spacing `2^{−levels}`.
pub fn dyadic_grid(levels: i32) -> Result<GridFn> {
    if !(2..=24).contains(&levels) {
        return arg("levels must lie in 2..=24");
    }
    let count = (1usize << (levels + 1)) + 1;
    GridFn::new_1d(-1.0, 1.0, count, dyadic_w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicRow {
    pub k: u32,
    pub eps: f64,
    pub x: f64,
    pub env: f64,
    pub env_bound: f64,
    pub argpt_x: f64,
    pub displacement: f64,
    pub displacement_bound: f64,
    /// Smallest `w` on the window `|y − x_k| < √ε_k/8`.
    pub window_min: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicReport {
    pub rows: Vec<DyadicRow>,
    pub h: f64,
}

impl DyadicReport {
    pub fn pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

/// Lower envelopes of the dyadic staircase at `x_k = 2^{−(2k+3)}` with
/// `ε_k = 2^{−2(2k+1)}`, for `k = 2..=6`.
pub fn dyadic_sharpness() -> Result<DyadicReport> {
    let g = dyadic_grid(DYADIC_LEVELS)?;
    let h = g.h()[0];
    let mut rows = Vec::new();
    for k in 2u32..=6 {
        let eps = 0.5f64.powi(2 * (2 * k as i32 + 1));
        let x = 0.5f64.powi(2 * k as i32 + 3);
        let node = ((x + 1.0) / h).round() as usize;
        debug_assert_eq!(g.coord(node, 0), x);
        let (env, a) = envelope_at(&g, eps, Side::Lower, node)?;
        let argpt_x = g.coord(a, 0);
        let displacement = (argpt_x - x).abs();
        let radius = eps.sqrt() / 8.0;
        let reach = (radius / h).ceil() as usize;
        let window_min = (node.saturating_sub(reach)..=(node + reach).min(g.len() - 1))
            .filter(|&j| (g.coord(j, 0) - x).abs() < radius)
            .map(|j| g.value(j))
            .fold(f64::INFINITY, f64::min);
        let env_bound = 1.0 / 16.0;
        let pass = env <= env_bound && displacement >= radius && window_min > 0.5;
        rows.push(DyadicRow {
            k,
            eps,
            x,
            env,
            env_bound,
            argpt_x,
            displacement,
            displacement_bound: radius,
            window_min,
            pass,
        });
    }
    Ok(DyadicReport { rows, h })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub node: usize,
    pub value: f64,
    /// `limsup` (upper) or `liminf` (lower) over the tail of the sequence.
    pub limit: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Envelope values along `ε_j = ε₀ 2^{−j}` at nodes `node + offsets[j]`.
pub fn stability_sequence(src: &GridFn, side: Side, node: usize, eps0: f64, offsets: &[isize]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(offsets.len());
    for (j, &o) in offsets.iter().enumerate() {
        let at = node as isize + o;
        if at < 0 || at as usize >= src.len() {
            return arg("offset leaves the grid");
        }
        let eps = eps0 * 0.5f64.powi(j as i32);
        out.push(envelope_at(src, eps, side, at as usize)?.0);
    }
    Ok(out)
}

/// Random sequences `ε_j → 0`, `x_j → x` at random finite nodes; compares the
/// tail extreme of the envelope values with `v(x)` at tolerance `c·h^{1/2}`.
pub fn stability_check(src: &GridFn, side: Side, trials: usize, seed: u64) -> Result<Vec<StabilityRow>> {
    let finite: Vec<usize> = (0..src.len()).filter(|&i| !src.is_masked(i) && src.is_interior(i)).collect();
    if finite.is_empty() {
        return arg("no finite interior nodes");
    }
    let h = src.h_max();
    // run ε down to about h² so the tail sees the local behaviour
    let eps0 = 1.0;
    let steps = ((1.0 / (h * h)).log2().ceil() as usize).max(4);
    let tol = SLACK_C * h.sqrt();
    let mut rng = seeded(seed);
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let node = finite[rng.gen_range(0..finite.len())];
        let m = src.multi(node)[0];
        let room = m.min(src.shape()[0] - 1 - m);
        let offsets: Vec<isize> = (0..steps)
            .map(|j| {
                let reach = room.min(steps.saturating_sub(2 * j)) as isize;
                if reach == 0 {
                    0
                } else {
                    rng.gen_range(-reach..=reach)
                }
            })
            .collect();
        let seq = stability_sequence(src, side, node, eps0, &offsets)?;
        let tail = &seq[steps / 2..];
        let (limit, pass) = match side {
            Side::Upper => {
                let l = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (l, l <= src.value(node) + tol)
            }
            Side::Lower => {
                let l = tail.iter().cloned().fold(f64::INFINITY, f64::min);
                (l, l >= src.value(node) - tol)
            }
        };
        rows.push(StabilityRow { node, value: src.value(node), limit, tol, pass });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_values() {
        assert_eq!(dyadic_w(0.0), 0.0);
        assert_eq!(dyadic_w(1.0), 0.0);
        assert_eq!(dyadic_w(0.75), 0.5);
        assert_eq!(dyadic_w(0.5), 1.0);
        assert_eq!(dyadic_w(0.3), 1.0);
        assert_eq!(dyadic_w(0.25), 0.0);
        assert_eq!(dyadic_w(-0.1875), 0.5);
    }

    #[test]
    fn dyadic_is_lower_semicontinuous_at_ramp_ends() {
        for j in [2, 4, 6] {
            let x = 0.5f64.powi(j);
            assert_eq!(dyadic_w(x), 0.0);
            assert!(dyadic_w(x * (1.0 + 1e-9)) >= 0.0);
        }
    }

    #[test]
    fn dyadic_reproduces_both_bounds() {
        let r = dyadic_sharpness().unwrap();
        assert_eq!(r.rows.len(), 5);
        for row in &r.rows {
            assert!(row.env <= 1.0 / 16.0, "{row:?}");
            assert!(row.displacement >= row.eps.sqrt() / 8.0, "{row:?}");
            assert!(row.window_min > 0.5);
        }
        assert!(r.pass());
        let k2 = &r.rows[0];
        assert_eq!((k2.eps, k2.x), (1.0 / 1024.0, 1.0 / 128.0));
    }

    #[test]
    fn gaussian_passes_everything() {
        let g = GridFn::new_1d(-1.0, 1.0, 2001, |x| (-8.0 * x * x).exp()).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let r = check_envelope_properties(&g, &[0.1, 0.01], side).unwrap();
            assert!(r.all_pass(), "{:?}", r.failures());
            assert_eq!(r.rows.len(), 10);
        }
    }

    #[test]
    fn step_passes_everything() {
        let g = GridFn::new_1d(-1.0, 1.0, 801, |x| if x >= 0.0 { 1.0 } else { 0.0 }).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let r = check_envelope_properties(&g, &[0.2, 0.05, 0.01], side).unwrap();
            assert!(r.all_pass(), "{:?}", r.failures());
            assert_eq!(r.rows_for(EnvProperty::LipschitzDisplacement).count(), 3);
        }
    }

    #[test]
    fn broken_semiconvexity_is_reported() {
        // a non-envelope passed off as one must fail the Hessian row
        let g = GridFn::new_1d(-1.0, 1.0, 201, |x| -50.0 * x * x).unwrap();
        let r = check_envelope_properties(&g, &[1e-3], Side::Upper).unwrap();
        assert!(r.all_pass());
        let mut e = envelope(&g, 1e-3, Side::Upper).unwrap();
        e.env.set(100, e.env.value(100) + 1.0);
        let h = g.h()[0];
        let d2 = (e.env.value(99) - 2.0 * e.env.value(100) + e.env.value(101)) / (h * h);
        assert!(d2 < -2.0 / 1e-3 - SLACK_C * h);
    }

    #[test]
    fn decreasing_eps_required() {
        let g = GridFn::new_1d(0.0, 1.0, 11, |x| x).unwrap();
        assert!(check_envelope_properties(&g, &[0.1, 0.2], Side::Upper).is_err());
    }

    #[test]
    fn continuous_source_is_stable() {
        let g = GridFn::new_1d(-1.0, 1.0, 401, |x| (2.0 * x).cos()).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let rows = stability_check(&g, side, 10, 5).unwrap();
            assert!(rows.iter().all(|r| r.pass), "{rows:?}");
        }
    }

    #[test]
    fn step_from_below_stays_under() {
        // upper semicontinuous step: v = 1 on x ≥ 0
        let g = GridFn::new_1d(-1.0, 1.0, 401, |x| if x >= 0.0 { 1.0 } else { 0.0 }).unwrap();
        let node = 200;
        let offsets: Vec<isize> = (0..20).map(|j| -((20 - j) as isize)).collect();
        let seq = stability_sequence(&g, Side::Upper, node, 1.0, &offsets).unwrap();
        let limsup = seq[10..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(limsup <= 1.0);
        // the far tail sits strictly below v(0)
        assert!(seq[seq.len() - 1] < 1.0);
    }

    #[test]
    fn dyadic_liminf_at_origin() {
        let g = dyadic_grid(10).unwrap();
        let node = g.len() / 2;
        let offsets: Vec<isize> = (0..16).map(|j| if j % 2 == 0 { 16 - j } else { j - 16 } as isize).collect();
        let seq = stability_sequence(&g, Side::Lower, node, 0.5, &offsets).unwrap();
        assert!(seq.iter().all(|&v| v >= 0.0));
    }
}
