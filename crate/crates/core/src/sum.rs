//! Deterministic pairwise summation.

const BLOCK: usize = 64;

/// Pairwise sum with a fixed split pattern, independent of thread count.
pub fn pairwise(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise(&values[..mid]) + pairwise(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n` without materializing large buffers.
pub fn pairwise_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= BLOCK {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

/// Parallel version of [`pairwise_by`]: chunks are evaluated concurrently but
/// combined in the same order as the sequential pairwise tree.
pub fn par_pairwise_by<F: Fn(usize) -> f64 + Sync>(n: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64 + Sync>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 4096 {
            return pairwise_by(hi - lo, &|i| f(lo + i));
        }
        let mid = lo + (hi - lo) / 2;
        let (a, b) = rayon::join(|| rec(lo, mid, f), || rec(mid, hi, f));
        a + b
    }
    rec(0, n, f)
}
