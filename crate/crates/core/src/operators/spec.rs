use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{arg, Error, Result};
use crate::matcone::SymMatrix;
use crate::text::parse_real;

use super::jet::{dot, Jet2};

/// Coefficient `(x, s) ↦ c(x, s)`.
pub type CoeffFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Scalar function of `|p|`.
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Matrix-valued lower-order term `(x, s, p) ↦ L(x, s, p)`.
pub type LowerOrderFn = Arc<dyn Fn(&[f64], f64, &[f64]) -> SymMatrix + Send + Sync>;

#[derive(Clone)]
pub struct NamedCoeff {
    pub name: String,
    f: CoeffFn,
}

impl NamedCoeff {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        NamedCoeff { name: name.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: &[f64], s: f64) -> f64 {
        (self.f)(x, s)
    }
}

impl fmt::Debug for NamedCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone)]
pub struct NamedFn1 {
    pub name: String,
    f: RadialFn,
}

impl NamedFn1 {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        NamedFn1 { name: name.into(), f: Arc::new(f) }
    }

    /// Built-in functions addressable from text.
    pub fn builtin(name: &str) -> Result<Self> {
        let f: fn(f64) -> f64 = match name {
            "zero" => |_| 0.0,
            "one" => |_| 1.0,
            "negone" => |_| -1.0,
            "id" => |t| t,
            "neg" => |t| -t,
            "sq" => |t| t * t,
            "negsq" => |t| -t * t,
            _ => return Err(Error::Parse(format!("unknown radial function '{name}'"))),
        };
        Ok(NamedFn1::new(name, f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.f)(t)
    }
}

impl fmt::Debug for NamedFn1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Lower-order terms of the form `ℓ(s, |p|)·I` or user supplied.
#[derive(Clone)]
pub enum GeneralL {
    /// `−(s³|p|¹⁰ + α s|p|⁶ + |p|⁴) I`.
    BetaSign {
        alpha: f64,
    },
    /// `−(s³|p|¹⁰ + α s|p|⁶ + |p|⁴/100) I`.
    Tilde {
        alpha: f64,
    },
    /// The tilde term with its non-monotone band replaced by a C¹ cubic in `s`.
    NonDec,
    /// `−|p|^m I`.
    Sink {
        m: f64,
    },
    /// `−(|p|^γ / n) I`, whose trace is `−|p|^γ`.
    Holder {
        gamma: f64,
    },
    Custom {
        name: String,
        f: LowerOrderFn,
    },
}

impl GeneralL {
    /// Scalar `ℓ` with `L = ℓ I`, for the isotropic built-ins.
    fn isotropic(&self, s: f64, q: f64, n: usize) -> Option<f64> {
        Some(match self {
            GeneralL::BetaSign { alpha } => {
                let q2 = q * q;
                let q4 = q2 * q2;
                let q6 = q4 * q2;
                -(s * s * s * q6 * q4 + alpha * s * q6 + q4)
            }
            GeneralL::Tilde { alpha } => {
                let q2 = q * q;
                let q4 = q2 * q2;
                let q6 = q4 * q2;
                -(s * s * s * q6 * q4 + alpha * s * q6 + q4 / 100.0)
            }
            GeneralL::NonDec => crate::radial::monotone_interp_l(q, s, crate::radial::TILDE_ALPHA),
            GeneralL::Sink { m } => -q.powf(*m),
            GeneralL::Holder { gamma } => -q.powf(*gamma) / n as f64,
            GeneralL::Custom { .. } => return None,
        })
    }

    fn name(&self) -> String {
        match self {
            GeneralL::BetaSign { alpha } => format!("beta-sign:{alpha}"),
            GeneralL::Tilde { alpha } => {
                if *alpha == crate::radial::TILDE_ALPHA {
                    "tilde".into()
                } else {
                    format!("tilde:{alpha}")
                }
            }
            GeneralL::NonDec => "nondec".into(),
            GeneralL::Sink { m } => format!("sink:{m}"),
            GeneralL::Holder { gamma } => format!("holder:{gamma}"),
            GeneralL::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for GeneralL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Operator `F[ψ] = ∇²ψ + L(x, ψ, ∇ψ)`.
#[derive(Clone, Debug)]
pub enum OperatorSpec {
    /// `A[ψ]`.
    ConformalA,
    /// `L = α p⊗p − β|p|² I` with constant coefficients.
    QuadConst {
        alpha: f64,
        beta: f64,
    },
    /// `L = α(x, s) p⊗p − β(x, s)|p|^m I`.
    QuadVar {
        alpha: NamedCoeff,
        beta: NamedCoeff,
        m: f64,
    },
    GeneralL {
        l: GeneralL,
        m: f64,
    },
    /// `L = a(|p|) p⊗p + b(|p|) I`.
    RotInv {
        a: NamedFn1,
        b: NamedFn1,
    },
}

impl OperatorSpec {
    /// Monotone family with `α(s) = ½ + ¼ tanh s` non-decreasing and
    /// `β(s) = 1 − ¼ tanh s ≥ ¾` non-increasing, `m = 2`.
    pub fn quadvar_tanh() -> Self {
        OperatorSpec::QuadVar {
            alpha: NamedCoeff::new("tanh", |_, s| 0.5 + 0.25 * s.tanh()),
            beta: NamedCoeff::new("tanh", |_, s| 1.0 - 0.25 * s.tanh()),
            m: 2.0,
        }
    }

    pub fn general(l: GeneralL) -> Self {
        let m = match &l {
            GeneralL::Sink { m } => *m,
            GeneralL::Holder { gamma } => *gamma,
            _ => 2.0,
        };
        OperatorSpec::GeneralL { l, m }
    }

    pub fn rotinv(a: &str, b: &str) -> Result<Self> {
        Ok(OperatorSpec::RotInv { a: NamedFn1::builtin(a)?, b: NamedFn1::builtin(b)? })
    }

    /// `L(x, s, p)`.
    pub fn lower_order(&self, x: &[f64], s: f64, p: &[f64]) -> SymMatrix {
        let n = p.len();
        match self {
            OperatorSpec::ConformalA => quad(p, 1.0, 0.5, 2.0),
            OperatorSpec::QuadConst { alpha, beta } => quad(p, *alpha, *beta, 2.0),
            OperatorSpec::QuadVar { alpha, beta, m } => quad(p, alpha.eval(x, s), beta.eval(x, s), *m),
            OperatorSpec::GeneralL { l, .. } => match l {
                GeneralL::Custom { f, .. } => f(x, s, p),
                _ => {
                    let q = dot(p, p).sqrt();
                    SymMatrix::scaled_identity(n, l.isotropic(s, q, n).unwrap())
                }
            },
            OperatorSpec::RotInv { a, b } => {
                let q = dot(p, p).sqrt();
                let mut out = SymMatrix::scaled_identity(n, b.eval(q));
                out.add_outer(a.eval(q), p);
                out
            }
        }
    }

    /// `F = H + L(x, s, p)` at a jet.
    pub fn eval(&self, j: &Jet2) -> SymMatrix {
        let mut out = self.lower_order(&j.x, j.s, &j.p);
        out += &j.h;
        out
    }

    /// Eigenvalues of `L` along `p` and across it, for a point at radius
    /// `r` on the first axis with gradient of norm `q` along that axis.
    /// Returns `None` for user-supplied terms that are not known to be
    /// rotation invariant.
    pub fn radial_l(&self, r: f64, s: f64, q: f64, n: usize) -> Option<(f64, f64)> {
        let q2 = q * q;
        Some(match self {
            OperatorSpec::ConformalA => (0.5 * q2, -0.5 * q2),
            OperatorSpec::QuadConst { alpha, beta } => ((alpha - beta) * q2, -beta * q2),
            OperatorSpec::QuadVar { alpha, beta, m } => {
                let mut x = vec![0.0; n];
                x[0] = r;
                let (a, b) = (alpha.eval(&x, s), beta.eval(&x, s));
                let bm = b * q.abs().powf(*m);
                (a * q2 - bm, -bm)
            }
            OperatorSpec::GeneralL { l, .. } => {
                let v = l.isotropic(s, q.abs(), n)?;
                (v, v)
            }
            OperatorSpec::RotInv { a, b } => {
                let bb = b.eval(q.abs());
                (a.eval(q.abs()) * q2 + bb, bb)
            }
        })
    }

    /// Whether `L` can depend on `s`.
    pub fn depends_on_s(&self) -> bool {
        match self {
            OperatorSpec::ConformalA | OperatorSpec::QuadConst { .. } | OperatorSpec::RotInv { .. } => false,
            OperatorSpec::QuadVar { .. } => true,
            OperatorSpec::GeneralL { l, .. } => !matches!(l, GeneralL::Sink { .. } | GeneralL::Holder { .. }),
        }
    }

    /// Exponent `m` of this operator (2 for the quadratic kinds).
    pub fn exponent(&self) -> f64 {
        match self {
            OperatorSpec::QuadVar { m, .. } | OperatorSpec::GeneralL { m, .. } => *m,
            _ => 2.0,
        }
    }

    /// Whether this operator has a text form that parses back to itself.
    pub fn is_textual(&self) -> bool {
        match self {
            OperatorSpec::QuadVar { alpha, beta, m } => alpha.name == "tanh" && beta.name == "tanh" && *m == 2.0,
            OperatorSpec::GeneralL { l, .. } => !matches!(l, GeneralL::Custom { .. }),
            _ => true,
        }
    }
}

fn quad(p: &[f64], alpha: f64, beta: f64, m: f64) -> SymMatrix {
    let q2 = dot(p, p);
    let qm = if m == 2.0 { q2 } else { q2.sqrt().powf(m) };
    let mut out = SymMatrix::scaled_identity(p.len(), -beta * qm);
    out.add_outer(alpha, p);
    out
}

/// `F(j)`.
pub fn eval_f(j: &Jet2, f: &OperatorSpec) -> SymMatrix {
    f.eval(j)
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::ConformalA => write!(f, "conformal"),
            OperatorSpec::QuadConst { alpha, beta } => write!(f, "quad:{alpha}:{beta}"),
            OperatorSpec::QuadVar { alpha, beta, m } => {
                if self.is_textual() {
                    write!(f, "quadvar:tanh")
                } else {
                    write!(f, "quadvar:{}:{}:{m}", alpha.name, beta.name)
                }
            }
            OperatorSpec::GeneralL { l, .. } => write!(f, "genL:{}", l.name()),
            OperatorSpec::RotInv { a, b } => write!(f, "rotinv:{}:{}", a.name, b.name),
        }
    }
}

impl FromStr for OperatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parts: Vec<&str> = s.split(':').collect();
        let real = |t: &str| parse_real(t);
        match parts.as_slice() {
            ["conformal"] => Ok(OperatorSpec::ConformalA),
            ["quad", a, b] => Ok(OperatorSpec::QuadConst { alpha: real(a)?, beta: real(b)? }),
            ["quadvar", "tanh"] => Ok(OperatorSpec::quadvar_tanh()),
            ["rotinv", a, b] => OperatorSpec::rotinv(a, b),
            ["genL", rest @ ..] => {
                let l = match rest {
                    ["beta-sign"] => GeneralL::BetaSign { alpha: -3.0 },
                    ["beta-sign", a] => GeneralL::BetaSign { alpha: real(a)? },
                    ["tilde"] => GeneralL::Tilde { alpha: crate::radial::TILDE_ALPHA },
                    ["tilde", a] => GeneralL::Tilde { alpha: real(a)? },
                    ["nondec"] => GeneralL::NonDec,
                    ["sink", m] => GeneralL::Sink { m: real(m)? },
                    ["holder", g] => {
                        let gamma = real(g)?;
                        if !(gamma > 0.0 && gamma < 1.0) {
                            return arg(format!("holder exponent must lie in (0,1), got {gamma}"));
                        }
                        GeneralL::Holder { gamma }
                    }
                    _ => return Err(Error::Parse(format!("unknown lower-order term '{s}'"))),
                };
                Ok(OperatorSpec::general(l))
            }
            _ => Err(Error::Parse(format!("unknown operator '{s}'"))),
        }
    }
}
