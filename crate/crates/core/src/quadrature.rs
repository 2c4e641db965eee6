//! Gauss–Legendre rules and log-space integration.
//!
//! Rules are built by Newton iteration on the three-term Legendre recurrence
//! and cached per size. Only power-of-two sizes up to [`MAX_NODES`] are
//! supported, which is all the adaptive doubling in this crate ever asks for.

use std::sync::OnceLock;

pub const MIN_NODES: usize = 256;
pub const MAX_NODES: usize = 16384;

const LEVELS: usize = 15; // 2^0 ..= 2^14

/// Nodes and weights on [-1, 1].
#[derive(Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn build(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..half {
            // Tricomi initial guess for the i-th largest root.
            let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut x = theta.cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[half - 1] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Plain (linear-space) integral of `f` over [a, b].
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule with `n` nodes. Panics unless `n` is a power of two ≤ [`MAX_NODES`].
pub fn rule(n: usize) -> &'static GaussLegendre {
    static CACHE: [OnceLock<GaussLegendre>; LEVELS] = [const { OnceLock::new() }; LEVELS];
    assert!(
        n.is_power_of_two() && n <= MAX_NODES,
        "unsupported Gauss-Legendre size {n}"
    );
    CACHE[n.trailing_zeros() as usize].get_or_init(|| GaussLegendre::build(n))
}

/// Numerically stable log(sum(exp(xs))).
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// log ∫ exp(log_f(x)) dx over the concatenation of `segments`, using an
/// `n`-node rule on each segment. Returns the log of the integral together with
/// the per-node (abscissa, log-weighted-integrand) pairs so that callers can
/// form normalized expectations with the same discretization.
pub fn log_integrate_segments(
    segments: &[(f64, f64)],
    n: usize,
    log_f: impl Fn(f64) -> f64,
) -> (f64, Vec<(f64, f64)>) {
    let gl = rule(n);
    let mut terms = Vec::with_capacity(segments.len() * n);
    for &(a, b) in segments {
        if b <= a {
            continue;
        }
        for (x, w) in gl.mapped(a, b) {
            terms.push((x, log_f(x) + w.ln()));
        }
    }
    let log_total = log_sum_exp(terms.iter().map(|t| t.1));
    (log_total, terms)
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 16, 256, 1024] {
            let s: f64 = rule(n).weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn exact_for_polynomials() {
        let gl = rule(16);
        // exact up to degree 31
        let v = gl.integrate(-1.0, 1.0, |x| x.powi(30));
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        let v = gl.integrate(0.0, 2.0, |x| x * x * x);
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_sorted_descending_and_symmetric() {
        let gl = rule(64);
        for w in gl.nodes.windows(2) {
            assert!(w[0] > w[1]);
        }
        for i in 0..32 {
            assert_eq!(gl.nodes[i], -gl.nodes[63 - i]);
        }
    }

    #[test]
    fn log_integrate_matches_plain() {
        let (l, _) = log_integrate_segments(&[(0.0, 1.0), (1.0, 3.0)], 32, |x| -x);
        assert!((l.exp() - (1.0 - (-3.0f64).exp())).abs() < 1e-14);
        // huge exponents stay finite in log space
        // e^{2000x} overflows f64 on [0.99, 1]
        let (l, _) = log_integrate_segments(&[(0.99, 1.0)], 64, |x| 2000.0 * x);
        let expected = 2000.0 + (1.0 - (-20.0f64).exp()).ln() - 2000f64.ln();
        assert!((l - expected).abs() < 1e-10);
    }

    #[test]
    fn log_sum_exp_handles_empty_and_infinite() {
        assert_eq!(log_sum_exp(Vec::new()), f64::NEG_INFINITY);
        assert_eq!(
            log_sum_exp(vec![f64::NEG_INFINITY, f64::NEG_INFINITY]),
            f64::NEG_INFINITY
        );
        assert!((log_sum_exp(vec![0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pairwise_sum_small_and_large() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499500.0);
    }
}
