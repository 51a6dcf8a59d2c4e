//! Parsing of numbers written as decimals or fractions.

use num_rational::Ratio;

use crate::error::{Error, Result};

/// Parses `"-36/25"`, `"-2.5"`, `"3"` or `"1e-3"` as a float.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num: f64 = a.trim().parse().map_err(|_| bad(s))?;
        let den: f64 = b.trim().parse().map_err(|_| bad(s))?;
        if den == 0.0 {
            return Err(bad(s));
        }
        return Ok(num / den);
    }
    let v: f64 = s.parse().map_err(|_| bad(s))?;
    if v.is_nan() {
        return Err(bad(s));
    }
    Ok(v)
}

/// Parses a fraction `p/q`, an integer or a finite decimal exactly.
pub fn parse_rational(s: &str) -> Result<Ratio<i64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let num: i64 = a.trim().parse().map_err(|_| bad(s))?;
        let den: i64 = b.trim().parse().map_err(|_| bad(s))?;
        if den == 0 {
            return Err(bad(s));
        }
        return Ok(Ratio::new(num, den));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(s));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad(s));
    }
    let digits = format!("{int_part}{frac_part}");
    let num: i64 = digits.parse().map_err(|_| bad(s))?;
    let den = 10i64.checked_pow(frac_part.len() as u32).ok_or(Error::Overflow("decimal denominator"))?;
    let r = Ratio::new(num, den);
    Ok(if neg { -r } else { r })
}

fn bad(s: &str) -> Error {
    Error::Parse(format!("not a number: '{s}'"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals() {
        assert_eq!(parse_real("-36/25").unwrap(), -1.44);
        assert_eq!(parse_real(" 2.5 ").unwrap(), 2.5);
        assert_eq!(parse_real("1e-3").unwrap(), 1e-3);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("x").is_err());
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("-2.5").unwrap(), Ratio::new(-5, 2));
        assert_eq!(parse_rational("-36/25").unwrap(), Ratio::new(-36, 25));
        assert_eq!(parse_rational("7").unwrap(), Ratio::from_integer(7));
        assert_eq!(parse_rational(".125").unwrap(), Ratio::new(1, 8));
        assert!(parse_rational("1e3").is_err());
        assert!(parse_rational("-").is_err());
    }
}
