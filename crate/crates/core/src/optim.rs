//! Scalar derivative-free helpers: golden-section search, scan-then-refine and
//! bisection.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize `f` on [a, b] assuming unimodality. Returns (argmax, max).
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Evaluate `f` on `points` equispaced nodes of [a, b], then golden-refine
/// inside the two cells around the best node. Endpoints are kept as
/// candidates so boundary maxima are returned exactly.
pub(crate) fn scan_max(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    if b <= a {
        return (a, f(a));
    }
    let h = (b - a) / (points - 1) as f64;
    let mut best = (0, f64::NEG_INFINITY);
    let mut values = Vec::with_capacity(points);
    for i in 0..points {
        let x = if i == points - 1 { b } else { a + i as f64 * h };
        let v = f(x);
        values.push((x, v));
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    let lo = if i == 0 { a } else { values[i - 1].0 };
    let hi = if i == points - 1 { b } else { values[i + 1].0 };
    let (x, v) = golden_max(&mut f, lo, hi, tol);
    if v > best.1 {
        (x, v)
    } else {
        values[i]
    }
}

/// Smallest x in [lo, hi] with `pred(x)` true, for a predicate that is false
/// below some threshold and true above it. Requires `pred(hi)`.
pub(crate) fn bisect_threshold(
    mut pred: impl FnMut(f64) -> bool,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Root of a function that is positive at `lo` and ≤ 0 at `hi` (or vice
/// versa), to full floating-point resolution.
pub(crate) fn bisect_root(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo_positive = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == f_lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
