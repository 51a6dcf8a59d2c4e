use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul};

use crate::error::{Error, Result};

/// Fixed `α` of the modified counterexample, `−36/25`.
pub const TILDE_ALPHA: f64 = -1.44;
/// Half-width of the band `s|p|² ∈ (−32/45, 32/45)` where `L̃` is replaced.
pub const BAND: f64 = 32.0 / 45.0;

pub fn tilde_alpha_exact() -> Ratio<i64> {
    Ratio::new(-36, 25)
}

pub fn band_exact() -> Ratio<i64> {
    Ratio::new(32, 45)
}

/// `g(σ) = −(σ³ + ασ + 1/100)`, so that `L̃(s, p) = |p|⁴ g(s|p|²) I`.
fn g(sigma: f64, alpha: f64) -> f64 {
    -(sigma * sigma * sigma + alpha * sigma + 0.01)
}

fn dg(sigma: f64, alpha: f64) -> f64 {
    -(3.0 * sigma * sigma + alpha)
}

/// Cubic Hermite basis on `[0, 1]`.
fn hermite(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [2.0 * t3 - 3.0 * t2 + 1.0, t3 - 2.0 * t2 + t, -2.0 * t3 + 3.0 * t2, t3 - t2]
}

/// Scalar `ℓ` with `L(s, p) = ℓ I`: equal to `L̃` for `|s|p|²| ≥ 32/45`
/// and a C¹ cubic Hermite in `s` across the band, matching values and
/// `s`-derivatives at both edges.
pub fn monotone_interp_l(p_norm: f64, s: f64, alpha: f64) -> f64 {
    let q2 = p_norm * p_norm;
    let q4 = q2 * q2;
    if q4 == 0.0 {
        return 0.0;
    }
    let sigma = s * q2;
    q4 * band_profile(sigma, alpha)
}

/// `ℓ / |p|⁴` as a function of `σ = s|p|²`.
pub fn band_profile(sigma: f64, alpha: f64) -> f64 {
    let c = BAND;
    if sigma.abs() >= c {
        return g(sigma, alpha);
    }
    let w = 2.0 * c;
    let t = (sigma + c) / w;
    let h = hermite(t);
    h[0] * g(-c, alpha) + h[1] * w * dg(-c, alpha) + h[2] * g(c, alpha) + h[3] * w * dg(c, alpha)
}

/// `∂_σ` of [`band_profile`].
pub fn band_profile_deriv(sigma: f64, alpha: f64) -> f64 {
    let c = BAND;
    if sigma.abs() >= c {
        return dg(sigma, alpha);
    }
    let w = 2.0 * c;
    let t = (sigma + c) / w;
    let t2 = t * t;
    let dh = [6.0 * t2 - 6.0 * t, 3.0 * t2 - 4.0 * t + 1.0, -6.0 * t2 + 6.0 * t, 3.0 * t2 - 2.0 * t];
    (dh[0] * g(-c, alpha) + dh[2] * g(c, alpha)) / w + dh[1] * dg(-c, alpha) + dh[3] * dg(c, alpha)
}

fn ck<T>(v: Option<T>) -> Result<T> {
    v.ok_or(Error::Overflow("interpolant arithmetic"))
}

/// Exact `−(σ³ + ασ + 1/100)`.
fn g_exact(sigma: Ratio<i64>, alpha: Ratio<i64>) -> Result<Ratio<i64>> {
    let s3 = ck(ck(sigma.checked_mul(&sigma))?.checked_mul(&sigma))?;
    let a = ck(alpha.checked_mul(&sigma))?;
    let sum = ck(ck(s3.checked_add(&a))?.checked_add(&Ratio::new(1, 100)))?;
    Ok(-sum)
}

fn dg_exact(sigma: Ratio<i64>, alpha: Ratio<i64>) -> Result<Ratio<i64>> {
    let s2 = ck(sigma.checked_mul(&sigma))?;
    Ok(-ck(ck(s2.checked_mul(&Ratio::from_integer(3)))?.checked_add(&alpha))?)
}

/// Exact `ℓ / |p|⁴` at `σ = s|p|²`, in rational arithmetic.
pub fn monotone_interp_l_exact(sigma: Ratio<i64>, alpha: Ratio<i64>) -> Result<Ratio<i64>> {
    let c = band_exact();
    if sigma >= c || sigma <= -c {
        return g_exact(sigma, alpha);
    }
    let w = c * 2;
    let t = ck(ck(sigma.checked_add(&c))?.checked_mul(&w.recip()))?;
    let t2 = ck(t.checked_mul(&t))?;
    let t3 = ck(t2.checked_mul(&t))?;
    let i = |v: i64| Ratio::from_integer(v);
    let lin = |a: i64, b: i64, cc: i64, d: i64| -> Result<Ratio<i64>> {
        let x = ck(ck(t3.checked_mul(&i(a)))?.checked_add(&ck(t2.checked_mul(&i(b)))?))?;
        ck(ck(x.checked_add(&ck(t.checked_mul(&i(cc)))?))?.checked_add(&i(d)))
    };
    let h00 = lin(2, -3, 0, 1)?;
    let h10 = lin(1, -2, 1, 0)?;
    let h01 = lin(-2, 3, 0, 0)?;
    let h11 = lin(1, -1, 0, 0)?;
    let terms = [
        ck(h00.checked_mul(&g_exact(-c, alpha)?))?,
        ck(ck(h10.checked_mul(&w))?.checked_mul(&dg_exact(-c, alpha)?))?,
        ck(h01.checked_mul(&g_exact(c, alpha)?))?,
        ck(ck(h11.checked_mul(&w))?.checked_mul(&dg_exact(c, alpha)?))?,
    ];
    terms.iter().try_fold(Ratio::from_integer(0), |acc, t| ck(acc.checked_add(t)))
}

/// Exact coefficients `ℓ / |p|⁴` at the band edges `σ = ∓32/45`.
pub fn interp_endpoints_exact() -> Result<(Ratio<i64>, Ratio<i64>)> {
    let c = band_exact();
    let a = tilde_alpha_exact();
    Ok((monotone_interp_l_exact(-c, a)?, monotone_interp_l_exact(c, a)?))
}

/// Slope of `L̃` in `σ` at the band edges; both negative, so `L̃` is
/// non-increasing outside the band while the edge values increase.
pub fn edge_slopes_exact() -> Result<(Ratio<i64>, Ratio<i64>)> {
    let c = band_exact();
    let a = tilde_alpha_exact();
    Ok((dg_exact(-c, a)?, dg_exact(c, a)?))
}
