use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, ToPrimitive};

use crate::error::{Error, Result};

/// `c₄t⁴ + c₂t² + c₁t + c₀`, optionally with exact rational coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticSpec {
    pub c4: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
    pub exact: Option<[Ratio<i64>; 4]>,
}

fn r(v: i64) -> Ratio<i64> {
    Ratio::from_integer(v)
}

fn mul(a: Ratio<i64>, b: Ratio<i64>) -> Result<Ratio<i64>> {
    a.checked_mul(&b).ok_or(Error::Overflow("rational multiply"))
}

fn add(a: Ratio<i64>, b: Ratio<i64>) -> Result<Ratio<i64>> {
    a.checked_add(&b).ok_or(Error::Overflow("rational add"))
}

pub(crate) fn to_f64(x: Ratio<i64>) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

impl QuarticSpec {
    pub fn from_f64(c4: f64, c2: f64, c1: f64, c0: f64) -> Result<Self> {
        if c4 == 0.0 || !c4.is_finite() {
            return Err(Error::Argument("leading coefficient must be finite and nonzero".into()));
        }
        Ok(QuarticSpec { c4, c2, c1, c0, exact: None })
    }

    pub fn from_exact(c: [Ratio<i64>; 4]) -> Result<Self> {
        if c[0] == r(0) {
            return Err(Error::Argument("leading coefficient must be nonzero".into()));
        }
        Ok(QuarticSpec { c4: to_f64(c[0]), c2: to_f64(c[1]), c1: to_f64(c[2]), c0: to_f64(c[3]), exact: Some(c) })
    }

    /// `64t⁴ + 324αt² + 729t`.
    pub fn p4(alpha: Ratio<i64>) -> Result<Self> {
        Self::from_exact([r(64), mul(r(324), alpha)?, r(729), r(0)])
    }

    /// `6400t⁴ + 32400αt² + 729t`.
    pub fn p4_tilde(alpha: Ratio<i64>) -> Result<Self> {
        Self::from_exact([r(6400), mul(r(32400), alpha)?, r(729), r(0)])
    }

    /// `8P₄ + 6561`, whose roots make the first eigenvalue vanish.
    pub fn beta_sign_roots(alpha: Ratio<i64>) -> Result<Self> {
        Self::from_exact([r(512), mul(r(2592), alpha)?, r(5832), r(6561)])
    }

    /// `2P̃₄ + 164025`.
    pub fn tilde_roots(alpha: Ratio<i64>) -> Result<Self> {
        Self::from_exact([r(12800), mul(r(64800), alpha)?, r(1458), r(164025)])
    }

    fn dense(&self) -> [f64; 5] {
        [self.c4, 0.0, self.c2, self.c1, self.c0]
    }

    /// Cauchy bound on the moduli of the roots.
    pub fn cauchy_bound(&self) -> f64 {
        1.0 + [self.c2, self.c1, self.c0].iter().map(|c| (c / self.c4).abs()).fold(0.0, f64::max)
    }
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated Horner evaluation, about twice working precision.
fn horner_comp(c: &[f64], t: f64) -> f64 {
    let mut s = c[0];
    let mut err = 0.0;
    for &ci in &c[1..] {
        let (p, ep) = two_prod(s, t);
        let (s2, es) = two_sum(p, ci);
        s = s2;
        err = err * t + (ep + es);
    }
    s + err
}

/// Evaluates the quartic with compensated arithmetic.
pub fn quartic_eval(q: &QuarticSpec, t: f64) -> f64 {
    horner_comp(&q.dense(), t)
}

fn quartic_deriv(q: &QuarticSpec, t: f64) -> f64 {
    horner_comp(&[4.0 * q.c4, 0.0, 2.0 * q.c2, q.c1], t)
}

/// Exact evaluation at a rational point; needs exact coefficients.
pub fn quartic_eval_exact(q: &QuarticSpec, t: Ratio<i64>) -> Result<Ratio<i64>> {
    let c = q.exact.ok_or_else(|| Error::Argument("quartic has no exact coefficients".into()))?;
    let mut acc = c[0];
    acc = mul(acc, t)?;
    acc = add(mul(acc, t)?, c[1])?;
    acc = add(mul(acc, t)?, c[2])?;
    add(mul(acc, t)?, c[3])
}

/// A located root with a certified sign-change bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub t: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct QuarticRoots {
    pub roots: Vec<Root>,
    /// Intervals where `|q|` nearly vanishes without a sign change.
    pub unresolved: Vec<(f64, f64)>,
    pub probe: (f64, f64),
}

impl QuarticRoots {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.t).collect()
    }

    /// `roots[0] < seps[0] < roots[1] < … < roots[k]` with exactly `k+1` roots.
    pub fn interlaces(&self, seps: &[f64]) -> bool {
        if !self.unresolved.is_empty() || self.roots.len() != seps.len() + 1 {
            return false;
        }
        seps.iter().enumerate().all(|(i, &s)| {
            self.roots[i].hi <= s && s <= self.roots[i + 1].lo && self.roots[i].t < s && s < self.roots[i + 1].t
        })
    }
}

pub const PROBE_POINTS: usize = 1 << 10;
pub const BRACKET_WIDTH: f64 = 1e-12;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> (f64, f64) {
    let flo = f(lo);
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return (mid, mid);
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// All real roots, isolated by sign changes on a probe grid over
/// `[−B, B]` with `B = max(10, Cauchy bound)`, refined by bisection to
/// width `1e−12` and polished by Newton steps kept inside the bracket.
pub fn quartic_roots(q: &QuarticSpec) -> QuarticRoots {
    let b = q.cauchy_bound().max(10.0);
    let f = |t: f64| quartic_eval(q, t);
    let df = |t: f64| quartic_deriv(q, t);
    let h = 2.0 * b / PROBE_POINTS as f64;
    let grid: Vec<f64> = (0..=PROBE_POINTS).map(|i| -b + i as f64 * h).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    let scale = |t: f64| {
        let a = t.abs();
        q.c4.abs() * a.powi(4) + q.c2.abs() * a * a + q.c1.abs() * a + q.c0.abs()
    };
    let mut roots = Vec::new();
    let mut unresolved = Vec::new();
    for i in 0..PROBE_POINTS {
        let (a, c) = (grid[i], grid[i + 1]);
        let (fa, fc) = (vals[i], vals[i + 1]);
        if fa == 0.0 {
            if i == 0 || vals[i - 1] != 0.0 {
                roots.push(Root { t: a, lo: a, hi: a });
            }
            continue;
        }
        if fc != 0.0 && (fa < 0.0) != (fc < 0.0) {
            let (lo, hi) = bisect(f, a, c, BRACKET_WIDTH);
            let mut t = 0.5 * (lo + hi);
            for _ in 0..3 {
                let d = df(t);
                if d == 0.0 {
                    break;
                }
                let next = t - f(t) / d;
                if next < lo || next > hi || f(next).abs() >= f(t).abs() {
                    break;
                }
                t = next;
            }
            roots.push(Root { t, lo, hi });
            continue;
        }
        // no sign change: look for a near-touching extremum
        let (da, dc) = (df(a), df(c));
        if da != 0.0 && dc != 0.0 && (da < 0.0) != (dc < 0.0) {
            let (lo, hi) = bisect(df, a, c, BRACKET_WIDTH);
            let t = 0.5 * (lo + hi);
            if f(t).abs() <= 1e-10 * scale(t).max(1.0) {
                unresolved.push((a, c));
            }
        }
    }
    if vals[PROBE_POINTS] == 0.0 {
        roots.push(Root { t: b, lo: b, hi: b });
    }
    QuarticRoots { roots, unresolved, probe: (-b, b) }
}
