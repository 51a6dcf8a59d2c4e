use std::fmt;
use std::io::Write;

use crate::envelopes::GridFn;
use crate::error::{arg, Error, Result};

use super::discrete::Geometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TouchVerdict {
    PropagationConsistent,
    PropagationViolated,
}

impl TouchVerdict {
    pub fn label(self) -> &'static str {
        match self {
            TouchVerdict::PropagationConsistent => "propagation_consistent",
            TouchVerdict::PropagationViolated => "propagation_violated",
        }
    }
}

impl fmt::Display for TouchVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchComponent {
    pub nodes: Vec<usize>,
    pub boundary_contact: bool,
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchReport {
    pub components: Vec<TouchComponent>,
    pub verdict: TouchVerdict,
    /// Whether `w > v + tol` at every boundary node.
    pub strict_on_boundary: bool,
    /// Smallest `w − v` over nodes where both are finite.
    pub inf_gap: f64,
    pub inf_gap_node: usize,
}

impl TouchReport {
    pub fn interior_only(&self) -> usize {
        self.components.iter().filter(|c| !c.boundary_contact).count()
    }

    pub fn summary(&self) -> String {
        format!("verdict={} components={} interior_only={}", self.verdict, self.components.len(), self.interior_only())
    }

    /// CSV `component,node,boundary_contact,min_gap`, then the summary.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "component,node,boundary_contact,min_gap")?;
        for (k, c) in self.components.iter().enumerate() {
            for &i in &c.nodes {
                writeln!(out, "{k},{i},{},{:.17e}", c.boundary_contact, c.min_gap)?;
            }
        }
        writeln!(out, "# {}", self.summary())
    }
}

/// Components of `{w − v ≤ tol}` under axis adjacency. Propagation is
/// violated when `w > v` on the boundary yet some component never reaches
/// it. Nodes where either function is masked are left out, and nodes next
/// to a mask count as boundary nodes.
pub fn touching_experiment(w: &GridFn, v: &GridFn, geom: Geometry, tol: f64) -> Result<TouchReport> {
    if !w.same_grid(v) {
        return arg("w and v live on different grids");
    }
    geom.check(w)?;
    if !(tol >= 0.0) {
        return arg("tol must be non-negative");
    }
    let len = w.len();
    let live = |i: usize| !w.is_masked(i) && !v.is_masked(i);
    let gap = |i: usize| w.value(i) - v.value(i);
    let mut inf_gap = f64::INFINITY;
    let mut inf_gap_node = 0;
    for i in (0..len).filter(|&i| live(i)) {
        let d = gap(i);
        if d < -tol {
            return Err(Error::Precondition(format!("w < v − tol at node {i} (gap {d})")));
        }
        if d < inf_gap {
            inf_gap = d;
            inf_gap_node = i;
        }
    }
    if !inf_gap.is_finite() {
        return arg("no node where both functions are finite");
    }
    let on_boundary = |i: usize| geom.is_boundary(w, i) || w.neighbors(i).into_iter().any(|k| !live(k));
    let strict_on_boundary = (0..len).filter(|&i| live(i) && on_boundary(i)).all(|i| gap(i) > tol);
    let mut seen = vec![false; len];
    let mut components = Vec::new();
    for start in 0..len {
        if seen[start] || !live(start) || gap(start) > tol {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut nodes = Vec::new();
        while let Some(i) = stack.pop() {
            nodes.push(i);
            for k in w.neighbors(i) {
                if !seen[k] && live(k) && gap(k) <= tol {
                    seen[k] = true;
                    stack.push(k);
                }
            }
        }
        nodes.sort_unstable();
        let boundary_contact = nodes.iter().any(|&i| on_boundary(i));
        let min_gap = nodes.iter().map(|&i| gap(i)).fold(f64::INFINITY, f64::min);
        components.push(TouchComponent { nodes, boundary_contact, min_gap });
    }
    let violated = strict_on_boundary && components.iter().any(|c| !c.boundary_contact);
    let verdict = if violated { TouchVerdict::PropagationViolated } else { TouchVerdict::PropagationConsistent };
    Ok(TouchReport { components, verdict, strict_on_boundary, inf_gap, inf_gap_node })
}
