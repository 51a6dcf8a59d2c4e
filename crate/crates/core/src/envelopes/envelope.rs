use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{arg, Error, Result};

use super::grid::{fmt_real, GridFn};

/// Upper envelopes maximize `v(y) − |y−x|²/ε`, lower ones minimize
/// `w(y) + |y−x|²/ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn label(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }

    pub fn flip(self) -> Side {
        match self {
            Side::Upper => Side::Lower,
            Side::Lower => Side::Upper,
        }
    }

    #[inline]
    fn combine(self, v: f64, pen: f64) -> f64 {
        match self {
            Side::Upper => v - pen,
            Side::Lower => v + pen,
        }
    }

    #[inline]
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Side::Upper => a > b,
            Side::Lower => a < b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            Side::Upper => f64::NEG_INFINITY,
            Side::Lower => f64::INFINITY,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "upper" => Ok(Side::Upper),
            "lower" => Ok(Side::Lower),
            other => Err(Error::Parse(format!("unknown side '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub env: GridFn,
    /// Node index of the extremizer for every node.
    pub argpt: Vec<usize>,
    pub eps: f64,
    pub side: Side,
}

impl EnvelopeResult {
    /// CSV with header `x[,y],value,env,argpt_index`.
    pub fn write_csv(&self, src: &GridFn, out: &mut impl Write) -> Result<()> {
        if !src.same_grid(&self.env) {
            return arg("source and envelope grids differ");
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        let mut head: Vec<&str> = if src.dim() == 1 { vec!["x"] } else { vec!["x", "y"] };
        head.extend(["value", "env", "argpt_index"]);
        w.write_record(&head).map_err(io)?;
        for i in 0..src.len() {
            let mut rec: Vec<String> = src.coords(i).iter().map(|c| fmt_real(*c)).collect();
            rec.push(fmt_real(src.value(i)));
            rec.push(fmt_real(self.env.value(i)));
            rec.push(self.argpt[i].to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `(k h)²/ε` for every index offset along one axis.
fn penalties(h: f64, count: usize, eps: f64) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let d = k as f64 * h;
            d * d / eps
        })
        .collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        arg("eps must be positive and finite")
    }
}

/// Envelope value and extremizer at a single node, by exhaustive search.
/// Ties go to the smallest node index.
pub fn envelope_at(src: &GridFn, eps: f64, side: Side, node: usize) -> Result<(f64, usize)> {
    check_eps(eps)?;
    if node >= src.len() {
        return arg("node index out of range");
    }
    let px = penalties(src.h()[0], src.shape()[0], eps);
    let py = if src.dim() == 2 { penalties(src.h()[1], src.shape()[1], eps) } else { vec![0.0] };
    Ok(extremum(src, side, &px, &py, node))
}

fn extremum(src: &GridFn, side: Side, px: &[f64], py: &[f64], node: usize) -> (f64, usize) {
    let nx = src.shape()[0];
    let ny = if src.dim() == 2 { src.shape()[1] } else { 1 };
    let [ix, iy] = src.multi(node);
    let vals = src.values();
    let mut best = side.worst();
    let mut arg = usize::MAX;
    for jy in 0..ny {
        let pen_y = py[jy.abs_diff(iy)];
        let row = &vals[jy * nx..(jy + 1) * nx];
        for (jx, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let c = if src.dim() == 2 {
                side.combine(side.combine(v, px[jx.abs_diff(ix)]), pen_y)
            } else {
                side.combine(v, px[jx.abs_diff(ix)])
            };
            if arg == usize::MAX || side.better(c, best) {
                best = c;
                arg = jx + nx * jy;
            }
        }
    }
    (best, arg)
}

fn exhaustive(src: &GridFn, eps: f64, side: Side) -> Result<EnvelopeResult> {
    check_eps(eps)?;
    let px = penalties(src.h()[0], src.shape()[0], eps);
    let py = if src.dim() == 2 { penalties(src.h()[1], src.shape()[1], eps) } else { vec![0.0] };
    let mut env = Vec::with_capacity(src.len());
    let mut argpt = Vec::with_capacity(src.len());
    for i in 0..src.len() {
        let (v, a) = extremum(src, side, &px, &py, i);
        env.push(v);
        argpt.push(a);
    }
    Ok(EnvelopeResult { env: src.with_values(env)?, argpt, eps, side })
}

/// `v^ε(x) = max_y { v(y) − |y−x|²/ε }` by exhaustive search over nodes.
/// Masked nodes never act as maximizers.
pub fn upper_envelope(v: &GridFn, eps: f64) -> Result<EnvelopeResult> {
    exhaustive(v, eps, Side::Upper)
}

/// `w_ε(x) = min_y { w(y) + |y−x|²/ε }`.
pub fn lower_envelope(w: &GridFn, eps: f64) -> Result<EnvelopeResult> {
    exhaustive(w, eps, Side::Lower)
}

pub fn envelope(src: &GridFn, eps: f64, side: Side) -> Result<EnvelopeResult> {
    exhaustive(src, eps, side)
}

/// Same contract as [`envelope`] computed one axis at a time. Values and
/// extremizers agree exactly with the exhaustive search.
pub fn envelope_separable(src: &GridFn, eps: f64, side: Side) -> Result<EnvelopeResult> {
    check_eps(eps)?;
    if src.dim() == 1 {
        return exhaustive(src, eps, side);
    }
    let (nx, ny) = (src.shape()[0], src.shape()[1]);
    let px = penalties(src.h()[0], nx, eps);
    let py = penalties(src.h()[1], ny, eps);
    let vals = src.values();
    // pass along x within each row
    let mut g = vec![side.worst(); nx * ny];
    let mut ga = vec![usize::MAX; nx * ny];
    for jy in 0..ny {
        let row = &vals[jy * nx..(jy + 1) * nx];
        for ix in 0..nx {
            let (mut best, mut arg) = (side.worst(), usize::MAX);
            for (jx, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    continue;
                }
                let c = side.combine(v, px[jx.abs_diff(ix)]);
                if arg == usize::MAX || side.better(c, best) {
                    best = c;
                    arg = jx;
                }
            }
            g[ix + nx * jy] = best;
            ga[ix + nx * jy] = arg;
        }
    }
    // pass along y
    let mut env = vec![0.0; nx * ny];
    let mut argpt = vec![0; nx * ny];
    for ix in 0..nx {
        for iy in 0..ny {
            let (mut best, mut arg) = (side.worst(), usize::MAX);
            for jy in 0..ny {
                let k = ix + nx * jy;
                if ga[k] == usize::MAX {
                    continue;
                }
                let c = side.combine(g[k], py[jy.abs_diff(iy)]);
                if arg == usize::MAX || side.better(c, best) {
                    best = c;
                    arg = ga[k] + nx * jy;
                }
            }
            env[ix + nx * iy] = best;
            argpt[ix + nx * iy] = arg;
        }
    }
    Ok(EnvelopeResult { env: src.with_values(env)?, argpt, eps, side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abs_grid(count: usize) -> GridFn {
        GridFn::new_1d(-1.0, 1.0, count, |x| -x.abs()).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let g = GridFn::new_2d([0.0, 0.0], [1.0, 1.0], [7, 5], |_| 2.5).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let e = envelope(&g, 0.3, side).unwrap();
            assert!(e.env.values().iter().all(|&v| v == 2.5));
            assert!(e.argpt.iter().enumerate().all(|(i, &a)| a == i));
        }
    }

    #[test]
    fn minus_abs_matches_calculus() {
        // max_y −|y| − (y−x)²/ε is attained at y = x ∓ ε/2, giving −|x| + ε/4
        let g = abs_grid(4001);
        let eps = 0.1;
        let e = upper_envelope(&g, eps).unwrap();
        let h = g.h()[0];
        for i in 0..g.len() {
            let x = g.coord(i, 0);
            if x.abs() >= eps / 2.0 && x.abs() <= 1.0 - eps / 2.0 {
                assert!((e.env.value(i) - (-x.abs() + eps / 4.0)).abs() <= 2.0 * h);
            }
        }
        let mid = g.len() / 2;
        assert_eq!(e.env.value(mid), 0.0);
    }

    #[test]
    fn kink_second_difference_is_tight() {
        let g = abs_grid(2001);
        let eps = 0.05;
        let e = upper_envelope(&g, eps).unwrap();
        let h = g.h()[0];
        let mid = g.len() / 2;
        let d2 = (e.env.value(mid + 1) - 2.0 * e.env.value(mid) + e.env.value(mid - 1)) / (h * h);
        assert!((d2 + 2.0 / eps).abs() <= 4.0 * h * (1.0 + 2.0 / eps));
    }

    #[test]
    fn masks_are_skipped() {
        let mut vals = vec![0.0; 9];
        vals[4] = f64::INFINITY;
        let g = GridFn::from_values(vec![0.0], vec![0.125], vec![9], vals).unwrap();
        let e = upper_envelope(&g, 0.5).unwrap();
        assert!(e.env.values().iter().all(|v| v.is_finite()));
        assert_ne!(e.argpt[4], 4);
    }

    #[test]
    fn single_node_agrees_with_full() {
        let g = GridFn::new_2d([-1.0, -1.0], [1.0, 1.0], [9, 7], |p| (3.0 * p[0]).sin() * p[1]).unwrap();
        let e = lower_envelope(&g, 0.2).unwrap();
        for i in 0..g.len() {
            assert_eq!(envelope_at(&g, 0.2, Side::Lower, i).unwrap(), (e.env.value(i), e.argpt[i]));
        }
    }

    fn grid2d() -> impl Strategy<Value = GridFn> {
        (3usize..9, 3usize..9, prop::collection::vec(-4.0f64..4.0, 81), 0.05f64..2.0).prop_map(|(nx, ny, pool, hy)| {
            let vals: Vec<f64> = (0..nx * ny).map(|k| pool[k % pool.len()].round() * 0.5).collect();
            GridFn::from_values(vec![0.0, 0.0], vec![0.25, hy], vec![nx, ny], vals).unwrap()
        })
    }

    proptest! {
        #[test]
        fn separable_is_bit_exact(g in grid2d(), eps in 0.01f64..3.0) {
            for side in [Side::Upper, Side::Lower] {
                let a = envelope(&g, eps, side).unwrap();
                let b = envelope_separable(&g, eps, side).unwrap();
                prop_assert_eq!(a.env.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                                b.env.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                prop_assert_eq!(a.argpt, b.argpt);
            }
        }

        #[test]
        fn lower_is_negated_upper(g in grid2d(), eps in 0.01f64..3.0) {
            let low = lower_envelope(&g, eps).unwrap();
            let up = upper_envelope(&g.map(|v| -v), eps).unwrap();
            for i in 0..g.len() {
                prop_assert_eq!(low.env.value(i), -up.env.value(i));
                prop_assert_eq!(low.argpt[i], up.argpt[i]);
            }
        }

        #[test]
        fn monotone_in_eps(g in grid2d(), e1 in 0.01f64..1.0, f in 1.0f64..4.0) {
            let a = upper_envelope(&g, e1).unwrap();
            let b = upper_envelope(&g, e1 * f).unwrap();
            for i in 0..g.len() {
                prop_assert!(a.env.value(i) <= b.env.value(i));
                prop_assert!(a.env.value(i) >= g.value(i));
            }
        }

        #[test]
        fn repetition_only_grows(g in grid2d(), eps in 0.01f64..2.0) {
            let a = upper_envelope(&g, eps).unwrap();
            let b = upper_envelope(&a.env, eps).unwrap();
            for i in 0..g.len() {
                prop_assert!(b.env.value(i) >= a.env.value(i));
            }
        }

        #[test]
        fn contact_nodes_keep_their_value(g in grid2d(), eps in 0.01f64..2.0) {
            let a = lower_envelope(&g, eps).unwrap();
            for i in 0..g.len() {
                if a.argpt[i] == i {
                    prop_assert_eq!(a.env.value(i), g.value(i));
                }
            }
        }

        #[test]
        fn argpt_attains_the_extremum(g in grid2d(), eps in 0.01f64..2.0) {
            let a = upper_envelope(&g, eps).unwrap();
            for i in 0..g.len() {
                let j = a.argpt[i];
                let direct = g.value(j) - g.dist2(i, j) / eps;
                prop_assert!((direct - a.env.value(i)).abs() <= 1e-12 * (1.0 + direct.abs()));
            }
        }
    }
}
