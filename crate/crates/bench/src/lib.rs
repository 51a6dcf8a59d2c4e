//! Fixtures shared by the benchmarks.

pub use touchpoint_core;

use touchpoint_core::{GridFn, SymMatrix};

/// Deterministic well-spread symmetric matrix.
pub fn test_matrix(n: usize, k: usize) -> SymMatrix {
    SymMatrix::from_fn(n, |i, j| {
        ((i * 7 + j * 7 + k * 13 + 1) as f64 * 0.37).sin() + if i == j { 0.1 * i as f64 } else { 0.0 }
    })
}

/// Square grid on `[−1, 1]²` with a kink and a jump.
pub fn rough_grid_2d(count: usize) -> GridFn {
    GridFn::new_2d([-1.0, -1.0], [1.0, 1.0], [count, count], |x| {
        (x[0] - 0.2).abs() + if x[1] > 0.3 { 0.5 } else { 0.0 } + (4.0 * x[0] * x[1]).sin()
    })
    .expect("valid grid")
}

/// The same profile along one axis.
pub fn rough_grid_1d(count: usize) -> GridFn {
    GridFn::new_1d(-1.0, 1.0, count, |x| (x - 0.2).abs() + if x > 0.3 { 0.5 } else { 0.0 }).expect("valid grid")
}
