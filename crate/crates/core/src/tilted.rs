//! Tilted recommendations θ = v·m + √(1-v²)·Y with a deterministic weight v on
//! the message and Y uniform on the sphere orthogonal to it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::asymptotic::{pure_channel_z, ScaledCosts};
use crate::directional::{
    check_rho, kl_divergence, marginal_moments, Marginal, Precision, SphereDim,
};
use crate::error::{Error, Result};
use crate::quadrature::{self, pairwise_sum};
use crate::sampling::{FidelitySampler, RngStream};

const TAIL_RULE: usize = 16;
const MIN_PANELS: usize = 128;
const MAX_PANELS: usize = 16384;
const MAX_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TiltedPolicy {
    rho: f64,
    alpha: f64,
    v: f64,
}

impl TiltedPolicy {
    pub fn new(rho: f64, alpha: f64, v: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::domain("alpha", alpha, "must be finite and >= 0"));
        }
        check_tilt(v)?;
        Ok(TiltedPolicy { rho, alpha, v })
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn v(self) -> f64 {
        self.v
    }
}

fn check_tilt(v: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(Error::domain("v", v, "must lie in [-1, 1]"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TiltRegime {
    PureCommunication,
    PureSearch,
    Boundary,
}

impl TiltRegime {
    pub fn code(self) -> u8 {
        match self {
            TiltRegime::PureCommunication => 0,
            TiltRegime::PureSearch => 1,
            TiltRegime::Boundary => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TiltedSolution {
    pub policy: TiltedPolicy,
    pub value: f64,
    pub regime: TiltRegime,
    /// On the boundary c_s = c_c, the pure-search optimum; `policy` then holds
    /// the pure-communication one.
    pub alternate: Option<TiltedPolicy>,
}

/// T_∞(ρ, α, v) = ρv + √(1-ρ²)√(1-v²)√(1-e^{-2α}) - c_s·α + ½·c_c·log(1-ρ²).
pub fn tilt_utility_asymptotic(policy: TiltedPolicy, costs: ScaledCosts) -> f64 {
    let TiltedPolicy { rho, alpha, v } = policy;
    let search = (-(-2.0 * alpha).exp_m1()).sqrt();
    rho * v + ((1.0 - rho * rho) * (1.0 - v * v)).sqrt() * search - costs.c_s() * alpha
        + 0.5 * costs.c_c() * (-rho * rho).ln_1p()
}

/// v*(ρ, α) = ρ / √(1 - (1-ρ²)e^{-2α}).
pub fn optimal_tilt(rho: f64, alpha: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::domain("alpha", alpha, "must be finite and >= 0"));
    }
    if rho == 0.0 && alpha == 0.0 {
        return Err(Error::Degenerate("optimal tilt is 0/0 at rho = alpha = 0"));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let denom = (-((-rho * rho).ln_1p() - 2.0 * alpha).exp_m1()).sqrt();
    Ok((rho / denom).min(1.0))
}

/// Closed-form optimum: only the cheaper channel is ever used.
pub fn solve_tilted(costs: ScaledCosts) -> TiltedSolution {
    let c_min = costs.c_s().min(costs.c_c());
    let z = pure_channel_z(c_min);
    let value = (1.0 - z).sqrt() + 0.5 * c_min * z.ln();
    let comm = TiltedPolicy {
        rho: (1.0 - z).sqrt(),
        alpha: 0.0,
        v: 1.0,
    };
    let search = TiltedPolicy {
        rho: 0.0,
        alpha: -0.5 * z.ln(),
        v: 0.0,
    };
    let (policy, regime, alternate) = if costs.c_c() < costs.c_s() {
        (comm, TiltRegime::PureCommunication, None)
    } else if costs.c_c() > costs.c_s() {
        (search, TiltRegime::PureSearch, None)
    } else {
        (comm, TiltRegime::Boundary, Some(search))
    };
    TiltedSolution {
        policy,
        value,
        regime,
        alternate,
    }
}

/// E[max_{i≤n} X_i] for X_i i.i.d. with the (d-1)-dimensional uniform
/// alignment law, by order-statistic quadrature.
pub fn expected_max_orthogonal(n: u64, dim: SphereDim) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, "must be >= 1"));
    }
    if n == 1 {
        return Ok(0.0);
    }
    let d = dim.get() - 1;
    let log_z = Marginal::new(0.0, d)?.log_partition();
    let power = (d - 2) as f64;
    let log_g = |phi: f64| power * phi.sin().ln() - log_z;
    let mut prev = order_statistic_mean(n, log_g, MIN_PANELS);
    let mut panels = MIN_PANELS;
    while panels < MAX_PANELS {
        panels *= 2;
        let next = order_statistic_mean(n, log_g, panels);
        let done = (next - prev).abs() < MAX_TOL;
        prev = next;
        if done {
            break;
        }
    }
    if !prev.is_finite() {
        return Err(Error::Numeric {
            kappa: 0.0,
            d: dim.get(),
            what: format!("expected maximum of {n} draws is not finite"),
        });
    }
    Ok(prev.clamp(0.0, 1.0))
}

/// ∫_0^π cos φ · n (1 - S(φ))^{n-1} g(φ) dφ, with S(φ) = ∫_0^φ g the upper tail
/// of X = cos φ accumulated panel by panel so that tiny tails keep full
/// relative accuracy.
fn order_statistic_mean(n: u64, log_g: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let gl = quadrature::rule(TAIL_RULE);
    let h = PI / panels as f64;
    let nf = n as f64;
    let mut upper = 0.0;
    let mut terms = Vec::with_capacity(panels * TAIL_RULE);
    for k in 0..panels {
        let a = k as f64 * h;
        let b = a + h;
        for (t, w) in gl.mapped(a, b) {
            let partial = gl.integrate(a, t, |s| log_g(s).exp());
            let tail = (upper + partial).min(1.0);
            let log_cdf_pow = (nf - 1.0) * (-tail).ln_1p();
            terms.push(w * t.cos() * nf * (log_cdf_pow + log_g(t)).exp());
        }
        upper += gl.integrate(a, b, |s| log_g(s).exp());
    }
    pairwise_sum(&terms)
}

/// Monte Carlo estimate of E[max_{i≤n} X_i] with its standard error.
pub fn expected_max_orthogonal_mc(
    n: u64,
    dim: SphereDim,
    replications: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if n == 0 || replications < 2 {
        return Err(Error::domain(
            "n / replications",
            n.min(replications) as f64,
            "too small",
        ));
    }
    let sampler = FidelitySampler::new(0.0, dim.get() - 1);
    let maxima = (0..replications)
        .map(|r| {
            let mut rng = RngStream::new(seed, r);
            let mut best = f64::NEG_INFINITY;
            for _ in 0..n {
                best = best.max(sampler.sample(&mut rng)?);
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let rf = replications as f64;
    let mean = pairwise_sum(&maxima) / rf;
    let sq: Vec<f64> = maxima.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&sq) / (rf - 1.0);
    Ok((mean, (var / rf).sqrt()))
}

/// Deterministic finite-d tilted payoff
/// v·E[W] + √(1-v²)·E[√(1-W²)]·E[max X_i] - λ_s log n - λ_c·KL(κ).
pub fn tilted_payoff_finite(
    kappa: Precision,
    n: u64,
    v: f64,
    lambda_s: f64,
    lambda_c: f64,
    dim: SphereDim,
) -> Result<f64> {
    check_tilt(v)?;
    for (name, x) in [("lambda_s", lambda_s), ("lambda_c", lambda_c)] {
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::domain(name, x, "must be finite and >= 0"));
        }
    }
    if n == 0 {
        return Err(Error::domain("n", 0.0, "must be >= 1"));
    }
    let moments = marginal_moments(kappa, dim)?;
    let s = (1.0 - v * v).max(0.0).sqrt();
    let search = if s == 0.0 {
        0.0
    } else {
        s * moments.mean_sqrt * expected_max_orthogonal(n, dim)?
    };
    let kl = if lambda_c == 0.0 {
        0.0
    } else {
        kl_divergence(kappa, dim)?
    };
    Ok(v * moments.mean_w + search - lambda_s * (n as f64).ln() - lambda_c * kl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotic::{solve_joint, solve_search_only};

    fn costs(c_s: f64, c_c: f64) -> ScaledCosts {
        ScaledCosts::new(c_s, c_c).unwrap()
    }

    fn dim(d: usize) -> SphereDim {
        SphereDim::new(d).unwrap()
    }

    #[test]
    fn tilt_utility_examples() {
        let zero = TiltedPolicy::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(tilt_utility_asymptotic(zero, costs(3.0, 2.0)), 0.0);
        let p = TiltedPolicy::new(0.5, 0.0, 1.0).unwrap();
        let v = tilt_utility_asymptotic(p, costs(7.0, 1.0));
        assert!((v - (0.5 + 0.5 * 0.75f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn optimal_tilt_examples() {
        assert_eq!(optimal_tilt(0.7, 0.0).unwrap(), 1.0);
        assert_eq!(optimal_tilt(0.0, 0.3).unwrap(), 0.0);
        let v = optimal_tilt(0.6, 0.5).unwrap();
        assert!((v - 0.6 / (1.0 - 0.64 * (-1.0f64).exp()).sqrt()).abs() < 1e-15);
        assert!((v - 0.6862).abs() < 1e-4);
        assert!(matches!(optimal_tilt(0.0, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn optimal_tilt_beats_grid_and_simplifies() {
        let c = costs(0.8, 1.3);
        for &(rho, alpha) in &[(0.2, 0.1), (0.6, 0.5), (0.9, 0.05), (0.3, 2.0)] {
            let v_star = optimal_tilt(rho, alpha).unwrap();
            assert!(v_star >= rho);
            let at = |v| tilt_utility_asymptotic(TiltedPolicy::new(rho, alpha, v).unwrap(), c);
            let best = at(v_star);
            for i in 0..=10_000 {
                let v = -1.0 + 2.0 * i as f64 / 10_000.0;
                assert!(at(v) <= best + 1e-8);
            }
            let simplified = (rho * rho + (1.0 - rho * rho) * (1.0 - (-2.0 * alpha).exp())).sqrt()
                - c.c_s() * alpha
                + 0.5 * c.c_c() * (1.0 - rho * rho).ln();
            assert!((best - simplified).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_tilted_examples() {
        let s = solve_tilted(costs(2.0, 1.0));
        assert_eq!(s.regime, TiltRegime::PureCommunication);
        assert!((s.policy.rho() - 0.618_033_988_749_895).abs() < 1e-12);
        assert_eq!((s.policy.alpha(), s.policy.v()), (0.0, 1.0));

        let s = solve_tilted(costs(1.0, 2.0));
        assert_eq!(s.regime, TiltRegime::PureSearch);
        assert_eq!((s.policy.rho(), s.policy.v()), (0.0, 0.0));
        let search = solve_search_only(1.0).unwrap();
        assert!((s.policy.alpha() - search.alpha).abs() < 1e-12);
        assert!((s.value - search.value).abs() < 1e-12);

        let s = solve_tilted(costs(1.0, 1.0));
        assert_eq!(s.regime, TiltRegime::Boundary);
        let alt = s.alternate.unwrap();
        let c = costs(1.0, 1.0);
        let (a, b) = (
            tilt_utility_asymptotic(s.policy, c),
            tilt_utility_asymptotic(alt, c),
        );
        assert!((a - b).abs() < 1e-12 && (a - s.value).abs() < 1e-12);
    }

    #[test]
    fn tilted_dominates_posterior_sampling() {
        for &(c_s, c_c) in &[(1.0, 0.5), (1.5, 1.0), (0.5, 1.0)] {
            let t = solve_tilted(costs(c_s, c_c));
            let p = solve_joint(costs(c_s, c_c));
            assert!(t.value >= p.value - 1e-9);
        }
    }

    #[test]
    fn expected_max_examples() {
        assert_eq!(expected_max_orthogonal(1, dim(7)).unwrap(), 0.0);
        let v = expected_max_orthogonal(2, dim(4)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10, "{v}");
        // uniform on [-1, 1]: E[max of n] = (n-1)/(n+1)
        let v = expected_max_orthogonal(9, dim(4)).unwrap();
        assert!((v - 0.8).abs() < 1e-10, "{v}");
        let n = (0.2f64 * 60.0).exp().floor() as u64;
        let v = expected_max_orthogonal(n, dim(60)).unwrap();
        assert!((v - (1.0 - (-0.4f64).exp()).sqrt()).abs() < 0.1, "{v}");
    }

    #[test]
    fn expected_max_is_monotone_and_matches_monte_carlo() {
        let mut prev = 0.0;
        for n in [1, 2, 3, 5, 10, 50, 1000, 100_000] {
            let v = expected_max_orthogonal(n, dim(12)).unwrap();
            assert!(v >= prev && v <= 1.0);
            prev = v;
        }
        let exact = expected_max_orthogonal(20, dim(12)).unwrap();
        let (mc, se) = expected_max_orthogonal_mc(20, dim(12), 20_000, 5).unwrap();
        assert!((exact - mc).abs() < 4.0 * se, "{exact} vs {mc} ± {se}");
    }

    #[test]
    fn finite_payoff_examples() {
        let d = dim(30);
        let k = Precision::new(12.0).unwrap();
        let m = marginal_moments(k, d).unwrap();
        let kl = kl_divergence(k, d).unwrap();
        let v = tilted_payoff_finite(k, 40, 1.0, 0.01, 0.02, d).unwrap();
        assert!((v - (m.mean_w - 0.01 * 40f64.ln() - 0.02 * kl)).abs() < 1e-12);
        assert_eq!(
            tilted_payoff_finite(Precision::ZERO, 1, 0.0, 3.0, 1.0, d).unwrap(),
            0.0
        );

        let d = dim(80);
        let k = Precision::from_mode(0.5, d).unwrap();
        let alpha = 30f64.ln() / 80.0;
        let tilt = optimal_tilt(0.5, alpha).unwrap();
        let tilted = tilted_payoff_finite(k, 30, tilt, 0.0, 0.0, d).unwrap();
        let proxy = tilted_payoff_finite(k, 30, 0.5, 0.0, 0.0, d).unwrap();
        assert!(tilted > proxy, "{tilted} vs {proxy}");
        assert!(tilted_payoff_finite(k, 30, 1.5, 0.0, 0.0, d).is_err());
    }
}
