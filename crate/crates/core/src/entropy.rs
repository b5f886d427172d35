//! Binary entropy and its inverse.

/// Shannon binary entropy `h2(x) = -x log2 x - (1-x) log2 (1-x)`.
///
/// Defined as 0 at the endpoints.
pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Largest `x` in `[0, 0.5]` with `h2(x) <= y`, by bisection.
pub fn h2_inverse(y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if h2(mid) <= y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
