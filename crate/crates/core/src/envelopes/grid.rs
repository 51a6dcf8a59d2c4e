use std::io::{Read, Write};

use crate::error::{arg, Error, Result};
use crate::operators::ScalarField;

/// A scalar function sampled on a uniform 1D or 2D grid.
///
/// Nodes are indexed `ix + nx·iy`. Non-finite values mark masked nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    lo: Vec<f64>,
    h: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridFn {
    pub fn from_values(lo: Vec<f64>, h: Vec<f64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let dim = shape.len();
        if !(dim == 1 || dim == 2) || lo.len() != dim || h.len() != dim {
            return arg("grid must be 1D or 2D with matching lo/h/shape");
        }
        if shape.iter().any(|&c| c < 3) {
            return arg("need at least 3 nodes per axis");
        }
        if h.iter().any(|&s| !(s > 0.0 && s.is_finite())) || lo.iter().any(|v| !v.is_finite()) {
            return arg("grid spacing must be positive and finite");
        }
        if values.len() != shape.iter().product::<usize>() {
            return arg("value count does not match the grid shape");
        }
        if !values.iter().any(|v| v.is_finite()) {
            return arg("grid has no finite values");
        }
        if values.iter().any(|v| v.is_nan()) {
            return arg("NaN is not a valid grid value");
        }
        Ok(GridFn { lo, h, shape, values })
    }

    /// `count` nodes on `[lo, hi]`.
    pub fn new_1d(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if count < 3 || !(hi > lo) {
            return arg("need hi > lo and at least 3 nodes");
        }
        let h = (hi - lo) / (count - 1) as f64;
        let values = (0..count).map(|i| f(lo + i as f64 * h)).collect();
        GridFn::from_values(vec![lo], vec![h], vec![count], values)
    }

    pub fn new_2d(lo: [f64; 2], hi: [f64; 2], counts: [usize; 2], f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if counts.iter().any(|&c| c < 3) || !(hi[0] > lo[0] && hi[1] > lo[1]) {
            return arg("need hi > lo and at least 3 nodes per axis");
        }
        let h = [(hi[0] - lo[0]) / (counts[0] - 1) as f64, (hi[1] - lo[1]) / (counts[1] - 1) as f64];
        let mut values = Vec::with_capacity(counts[0] * counts[1]);
        for iy in 0..counts[1] {
            for ix in 0..counts[0] {
                values.push(f(&[lo[0] + ix as f64 * h[0], lo[1] + iy as f64 * h[1]]));
            }
        }
        GridFn::from_values(lo.to_vec(), h.to_vec(), counts.to_vec(), values)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    /// Largest spacing over the axes.
    pub fn h_max(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        self.values[i] = v;
    }

    pub fn is_masked(&self, i: usize) -> bool {
        !self.values[i].is_finite()
    }

    pub fn multi(&self, i: usize) -> [usize; 2] {
        let nx = self.shape[0];
        [i % nx, i / nx]
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.shape[0] * iy
    }

    pub fn coord(&self, i: usize, axis: usize) -> f64 {
        self.lo[axis] + self.multi(i)[axis] as f64 * self.h[axis]
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coord(i, a)).collect()
    }

    /// True when the node is not on the boundary of the box.
    pub fn is_interior(&self, i: usize) -> bool {
        let m = self.multi(i);
        (0..self.dim()).all(|a| m[a] > 0 && m[a] + 1 < self.shape[a])
    }

    /// The `2·dim` axis neighbours that exist.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let m = self.multi(i);
        let mut out = Vec::with_capacity(4);
        for a in 0..self.dim() {
            let stride = if a == 0 { 1 } else { self.shape[0] };
            if m[a] > 0 {
                out.push(i - stride);
            }
            if m[a] + 1 < self.shape[a] {
                out.push(i + stride);
            }
        }
        out
    }

    /// Neighbour pair `(i − e_a, i + e_a)` when both exist.
    pub fn axis_pair(&self, i: usize, axis: usize) -> Option<(usize, usize)> {
        let m = self.multi(i);
        let stride = if axis == 0 { 1 } else { self.shape[0] };
        if m[axis] > 0 && m[axis] + 1 < self.shape[axis] {
            Some((i - stride, i + stride))
        } else {
            None
        }
    }

    pub fn same_grid(&self, other: &GridFn) -> bool {
        self.lo == other.lo && self.h == other.h && self.shape == other.shape
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFn {
        GridFn { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<GridFn> {
        GridFn::from_values(self.lo.clone(), self.h.clone(), self.shape.clone(), values)
    }

    pub fn max_finite(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_finite(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).cloned().fold(f64::INFINITY, f64::min)
    }

    /// Squared Euclidean distance between two nodes.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.multi(i), self.multi(j));
        (0..self.dim())
            .map(|k| {
                let d = (a[k] as f64 - b[k] as f64) * self.h[k];
                d * d
            })
            .sum()
    }

    /// CSV with header `x[,y],value`.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        if self.dim() == 1 {
            w.write_record(["x", "value"]).map_err(io)?;
        } else {
            w.write_record(["x", "y", "value"]).map_err(io)?;
        }
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.coords(i).iter().map(|c| fmt_real(*c)).collect();
            rec.push(fmt_real(self.values[i]));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the format written by [`GridFn::write_csv`]; extra columns are
    /// ignored and `#` lines are comments.
    pub fn read_csv(input: impl Read) -> Result<Self> {
        Ok(GridFn::read_csv_columns(input, &["value"])?.remove(0))
    }

    /// One grid per named value column, all on the nodes given by the `x`
    /// (and optional `y`) columns.
    pub fn read_csv_columns(input: impl Read, names: &[&str]) -> Result<Vec<Self>> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
        let perr = |e: csv::Error| Error::Parse(e.to_string());
        let headers = r.headers().map_err(perr)?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let xc = col("x").ok_or_else(|| Error::Parse("grid CSV needs an x column".into()))?;
        let yc = col("y");
        let vcs = names
            .iter()
            .map(|n| col(n).ok_or_else(|| Error::Parse(format!("grid CSV needs a {n} column"))))
            .collect::<Result<Vec<_>>>()?;
        let mut pts: Vec<([f64; 2], Vec<f64>)> = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(perr)?;
            let num = |c: usize| -> Result<f64> {
                let s = rec.get(c).ok_or_else(|| Error::Parse("short CSV row".into()))?;
                crate::text::parse_real(s).map_err(|_| Error::Parse(format!("bad number '{s}'")))
            };
            let x = num(xc)?;
            let y = match yc {
                Some(c) => num(c)?,
                None => 0.0,
            };
            let vals = vcs.iter().map(|&c| num(c)).collect::<Result<Vec<_>>>()?;
            pts.push(([x, y], vals));
        }
        let dim = if yc.is_some() { 2 } else { 1 };
        let mut lo = Vec::new();
        let mut h = Vec::new();
        let mut shape = Vec::new();
        for a in 0..dim {
            let mut c: Vec<f64> = pts.iter().map(|p| p.0[a]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            if c.len() < 3 {
                return Err(Error::Parse("need at least 3 distinct coordinates per axis".into()));
            }
            let step = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
            for (k, v) in c.iter().enumerate() {
                if (c[0] + k as f64 * step - v).abs() > 1e-9 * (1.0 + v.abs()) {
                    return Err(Error::Parse("coordinates are not equispaced".into()));
                }
            }
            lo.push(c[0]);
            h.push(step);
            shape.push(c.len());
        }
        let total: usize = shape.iter().product();
        if pts.len() != total {
            return Err(Error::Parse(format!("expected {total} rows, found {}", pts.len())));
        }
        let mut values = vec![vec![f64::NAN; total]; names.len()];
        let mut seen = vec![false; total];
        for (p, v) in pts {
            let mut idx = 0;
            let mut stride = 1;
            for a in 0..dim {
                let k = ((p[a] - lo[a]) / h[a]).round() as usize;
                idx += k * stride;
                stride *= shape[a];
            }
            if seen[idx] {
                return Err(Error::Parse("duplicate grid node".into()));
            }
            seen[idx] = true;
            for (col, x) in values.iter_mut().zip(v) {
                col[idx] = x;
            }
        }
        values.into_iter().map(|v| GridFn::from_values(lo.clone(), h.clone(), shape.clone(), v)).collect()
    }
}

/// Shortest text that round-trips, with `inf`/`-inf` for masks.
pub fn fmt_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Multilinear interpolation; NaN outside the box or next to a mask.
impl ScalarField for GridFn {
    fn value(&self, x: &[f64]) -> f64 {
        let dim = self.dim();
        if x.len() < dim {
            return f64::NAN;
        }
        let mut base = [0usize; 2];
        let mut frac = [0.0f64; 2];
        for a in 0..dim {
            let t = (x[a] - self.lo[a]) / self.h[a];
            let last = (self.shape[a] - 1) as f64;
            if !(t >= -1e-12 && t <= last + 1e-12) {
                return f64::NAN;
            }
            let t = t.clamp(0.0, last);
            let k = (t.floor() as usize).min(self.shape[a] - 2);
            base[a] = k;
            frac[a] = t - k as f64;
        }
        let corners = 1usize << dim;
        let mut acc = 0.0;
        for c in 0..corners {
            let mut w = 1.0;
            let mut m = [0usize; 2];
            for a in 0..dim {
                let up = (c >> a) & 1 == 1;
                m[a] = base[a] + up as usize;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            if w == 0.0 {
                continue;
            }
            let v = self.values[self.index(m[0], m[1])];
            if !v.is_finite() {
                return f64::NAN;
            }
            acc += w * v;
        }
        acc
    }
}
