//! Finite-difference stencils on tensor grids.

/// Second-order derivative along one axis at a node whose coordinate along
/// that axis is `i` (of `n`); one-sided second-order at the ends.
#[inline]
pub fn diff(values: &[f64], idx: usize, i: usize, n: usize, stride: usize, h: f64) -> f64 {
    if i == 0 {
        (-3.0 * values[idx] + 4.0 * values[idx + stride] - values[idx + 2 * stride]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * values[idx] - 4.0 * values[idx - stride] + values[idx - 2 * stride]) / (2.0 * h)
    } else {
        (values[idx + stride] - values[idx - stride]) / (2.0 * h)
    }
}

/// Stencil `(offset in strides, coefficient·h)` for the derivative at
/// coordinate `i` of `n`.
#[inline]
pub fn diff_stencil(i: usize, n: usize) -> [(isize, f64); 3] {
    if i == 0 {
        [(0, -1.5), (1, 2.0), (2, -0.5)]
    } else if i == n - 1 {
        [(0, 1.5), (-1, -2.0), (-2, 0.5)]
    } else {
        [(1, 0.5), (-1, -0.5), (0, 0.0)]
    }
}
