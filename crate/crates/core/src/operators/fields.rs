use crate::error::{domain, Result};
use crate::matcone::SymMatrix;

use super::jet::{dot, Jet2};

/// Anything that can be evaluated at a point.
pub trait ScalarField {
    fn value(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> ScalarField for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Analytic fields with closed-form jets.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldOracle {
    Constant(f64),
    /// `|x|^{2−n} + μ`.
    ShiftedFundamental {
        n: usize,
        mu: f64,
    },
    /// `(1 + |x|²)^{−(n−2)/2}`.
    Bubble {
        n: usize,
    },
    /// `ψ_μ = ln(|x|^{2−n} + μ) / (α − nβ)`.
    LogSingular {
        n: usize,
        mu: f64,
        alpha: f64,
        beta: f64,
    },
    /// `c + g·x + ½ xᵀHx`.
    Quadratic {
        c: f64,
        g: Vec<f64>,
        h: SymMatrix,
    },
}

/// Value, gradient and Hessian of `x ↦ |x|^a`.
fn power_jet(x: &[f64], a: f64) -> (f64, Vec<f64>, SymMatrix) {
    let r2 = dot(x, x);
    let r = r2.sqrt();
    let v = r.powf(a);
    let c1 = a * v / r2;
    let p: Vec<f64> = x.iter().map(|xi| c1 * xi).collect();
    let mut h = SymMatrix::scaled_identity(x.len(), c1);
    h.add_outer(a * (a - 2.0) * v / (r2 * r2), x);
    (v, p, h)
}

impl FieldOracle {
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            FieldOracle::Constant(c) => *c,
            FieldOracle::ShiftedFundamental { n, mu } => dot(x, x).sqrt().powf(2.0 - *n as f64) + mu,
            FieldOracle::Bubble { n } => (1.0 + dot(x, x)).powf(-(*n as f64 - 2.0) / 2.0),
            FieldOracle::LogSingular { n, mu, alpha, beta } => {
                let k = alpha - *n as f64 * beta;
                (dot(x, x).sqrt().powf(2.0 - *n as f64) + mu).ln() / k
            }
            FieldOracle::Quadratic { c, g, h } => c + dot(g, x) + 0.5 * h.quad_form(x),
        }
    }

    /// Closed-form second-order jet.
    pub fn jet(&self, x: &[f64]) -> Result<Jet2> {
        let d = x.len();
        let singular_at_origin =
            !matches!(self, FieldOracle::Constant(_) | FieldOracle::Bubble { .. } | FieldOracle::Quadratic { .. });
        if singular_at_origin && dot(x, x) == 0.0 {
            return domain("field is singular at the origin");
        }
        let (s, p, h) = match self {
            FieldOracle::Constant(c) => (*c, vec![0.0; d], SymMatrix::zeros(d)),
            FieldOracle::ShiftedFundamental { n, mu } => {
                let (v, p, h) = power_jet(x, 2.0 - *n as f64);
                (v + mu, p, h)
            }
            FieldOracle::Bubble { n } => {
                let k = (*n as f64 - 2.0) / 2.0;
                let w = 1.0 + dot(x, x);
                let v = w.powf(-k);
                let c1 = -2.0 * k * v / w;
                let p: Vec<f64> = x.iter().map(|xi| c1 * xi).collect();
                let mut h = SymMatrix::scaled_identity(d, c1);
                h.add_outer(4.0 * k * (k + 1.0) * v / (w * w), x);
                (v, p, h)
            }
            FieldOracle::LogSingular { n, mu, alpha, beta } => {
                let k = alpha - *n as f64 * beta;
                let (v, dv, hv) = power_jet(x, 2.0 - *n as f64);
                let u = v + mu;
                if !(u > 0.0) {
                    return domain("log argument is not positive");
                }
                let p: Vec<f64> = dv.iter().map(|a| a / (k * u)).collect();
                let mut h = hv.scale(1.0 / (k * u));
                h.add_outer(-1.0 / (k * u * u), &dv);
                (u.ln() / k, p, h)
            }
            FieldOracle::Quadratic { c, g, h } => {
                let hx = h.mul_vec(x);
                let p: Vec<f64> = g.iter().zip(&hx).map(|(a, b)| a + b).collect();
                (c + dot(g, x) + 0.5 * dot(x, &hx), p, h.clone())
            }
        };
        Jet2::new(x.to_vec(), s, p, h)
    }

    /// Short name used in reports.
    pub fn label(&self) -> String {
        match self {
            FieldOracle::Constant(c) => format!("const:{c}"),
            FieldOracle::ShiftedFundamental { n, mu } => format!("fundamental:n={n}:mu={mu}"),
            FieldOracle::Bubble { n } => format!("bubble:n={n}"),
            FieldOracle::LogSingular { n, mu, alpha, beta } => {
                format!("log-singular:n={n}:mu={mu}:alpha={alpha}:beta={beta}")
            }
            FieldOracle::Quadratic { .. } => "quadratic".into(),
        }
    }
}

impl ScalarField for FieldOracle {
    fn value(&self, x: &[f64]) -> f64 {
        FieldOracle::value(self, x)
    }
}

/// Central-difference jet with step `h`, used to cross-check closed forms.
pub fn fd_jet(f: &impl ScalarField, x: &[f64], h: f64) -> Jet2 {
    let n = x.len();
    let s = f.value(x);
    let mut y = x.to_vec();
    let at = |y: &mut Vec<f64>, i: usize, di: f64, j: usize, dj: f64| {
        y[i] += di;
        y[j] += dj;
        let v = f.value(y);
        y[i] -= di;
        y[j] -= dj;
        v
    };
    let mut p = vec![0.0; n];
    let mut hess = SymMatrix::zeros(n);
    for i in 0..n {
        let fp = at(&mut y, i, h, i, 0.0);
        let fm = at(&mut y, i, -h, i, 0.0);
        p[i] = (fp - fm) / (2.0 * h);
        hess.set(i, i, (fp - 2.0 * s + fm) / (h * h));
        for j in 0..i {
            let v =
                at(&mut y, i, h, j, h) - at(&mut y, i, h, j, -h) - at(&mut y, i, -h, j, h) + at(&mut y, i, -h, j, -h);
            hess.set(i, j, v / (4.0 * h * h));
        }
    }
    Jet2 { x: x.to_vec(), s, p, h: hess }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;

    fn oracles() -> Vec<FieldOracle> {
        vec![
            FieldOracle::Constant(2.5),
            FieldOracle::ShiftedFundamental { n: 3, mu: 0.0 },
            FieldOracle::ShiftedFundamental { n: 4, mu: 1.0 },
            FieldOracle::Bubble { n: 3 },
            FieldOracle::Bubble { n: 5 },
            FieldOracle::LogSingular { n: 3, mu: 1.0, alpha: 1.0, beta: 0.0 },
            FieldOracle::Quadratic {
                c: 1.0,
                g: vec![0.5, -1.0, 2.0],
                h: SymMatrix::from_fn(3, |i, j| 1.0 + i as f64 - j as f64 * 0.5),
            },
        ]
    }

    #[test]
    fn jets_match_finite_differences() {
        let mut rng = seeded(3);
        let h = 1e-4;
        for o in oracles() {
            for _ in 0..20 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.3..1.2)).collect();
                let exact = o.jet(&x).unwrap();
                let fd = fd_jet(&o, &x, h);
                let scale = 1.0 + exact.h.max_abs();
                assert!((exact.s - fd.s).abs() < 1e-14 * scale);
                for (a, b) in exact.p.iter().zip(&fd.p) {
                    assert!((a - b).abs() < 1e-6 * scale, "{o:?}: {a} vs {b}");
                }
                assert!(exact.h.max_abs_diff(&fd.h) < 1e-4 * scale, "{o:?}");
            }
        }
    }

    #[test]
    fn fundamental_solution_is_harmonic() {
        let o = FieldOracle::ShiftedFundamental { n: 3, mu: 2.0 };
        let j = o.jet(&[0.3, -0.4, 0.5]).unwrap();
        assert!(j.h.trace().abs() < 1e-13);
    }

    #[test]
    fn singular_fields_reject_origin() {
        assert!(FieldOracle::ShiftedFundamental { n: 3, mu: 0.0 }.jet(&[0.0; 3]).is_err());
        assert!(FieldOracle::Bubble { n: 3 }.jet(&[0.0; 3]).is_ok());
    }
}
