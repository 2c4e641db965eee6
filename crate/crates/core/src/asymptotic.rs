//! High-dimensional limit of the joint communication/search problem.
//!
//! With κ = ρ/(1-ρ²)·(d-3) and n = ⌊e^{dα}⌋, the normalized payoff converges
//! to `f(ρ, α) - c_s·α + ½·c_c·log(1-ρ²)` where `f` is the utility frontier: the
//! largest `ρw + √(1-ρ²)√(1-w²)·x` over the rate-function sublevel set
//! `I_ρ(w, x) ≤ α`.

use serde::Serialize;

use crate::directional::{check_rho, Precision, SphereDim};
use crate::error::{Error, Result};
use crate::optim::{bisect_root, bisect_threshold, golden_max, scan_max};

const FRONTIER_SCAN: usize = 65;
const GRID: usize = 101;
const ALPHA_SCAN: usize = 21;
const REFINE_TOL: f64 = 1e-10;
const RHO_MARGIN: f64 = 1e-9;
/// Hybrid solutions that beat search-only by less than this are reported as
/// search-only.
pub const TIE_TOL: f64 = 1e-9;
/// ρ* below this counts as "no communication".
pub const SWITCH_RHO_TOL: f64 = 1e-6;
const FRICTIONLESS_ALPHA_TOL: f64 = 1e-9;

/// Scaled costs c_s = d·λ_s and c_c = λ_c·d.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaledCosts {
    c_s: f64,
    c_c: f64,
}

impl ScaledCosts {
    pub fn new(c_s: f64, c_c: f64) -> Result<Self> {
        if !(c_s.is_finite() && c_s > 0.0) {
            return Err(Error::domain("c_s", c_s, "must be finite and > 0"));
        }
        if !(c_c.is_finite() && c_c > 0.0) {
            return Err(Error::domain("c_c", c_c, "must be finite and > 0"));
        }
        Ok(ScaledCosts { c_s, c_c })
    }

    pub fn c_s(self) -> f64 {
        self.c_s
    }

    pub fn c_c(self) -> f64 {
        self.c_c
    }

    /// Both costs divided by `w`.
    pub fn scaled_by(self, w: f64) -> Result<Self> {
        ScaledCosts::new(self.c_s / w, self.c_c / w)
    }
}

/// Limit policy: message-precision mode ρ and set-size exponent α.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymptoticPolicy {
    rho: f64,
    alpha: f64,
}

impl AsymptoticPolicy {
    pub fn new(rho: f64, alpha: f64) -> Result<Self> {
        check_rho(rho)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::domain("alpha", alpha, "must be finite and >= 0"));
        }
        Ok(AsymptoticPolicy { rho, alpha })
    }

    pub fn rho(self) -> f64 {
        self.rho
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }
}

/// Finite-dimensional policy (κ, n).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InteractionPolicy {
    pub kappa: f64,
    pub n: u64,
}

impl InteractionPolicy {
    pub fn new(kappa: Precision, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n", 0.0, "must be >= 1"));
        }
        Ok(InteractionPolicy {
            kappa: kappa.get(),
            n,
        })
    }

    pub fn precision(self) -> Precision {
        Precision::new(self.kappa).expect("kappa validated on construction")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    Hybrid,
    SearchOnly,
    FrictionlessBoundary,
}

impl Regime {
    /// Stable numeric code used in tabular output.
    pub fn code(self) -> u8 {
        match self {
            Regime::Hybrid => 0,
            Regime::SearchOnly => 1,
            Regime::FrictionlessBoundary => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointSolution {
    pub policy: AsymptoticPolicy,
    pub value: f64,
    pub regime: Regime,
}

/// Value of the utility frontier together with its maximizer (w, x).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrontierPoint {
    pub value: f64,
    pub w: f64,
    pub x: f64,
}

/// Large-deviation rate I_ρ(w, x) of the pair (alignment, best orthogonal
/// coordinate). Returns +∞ on the boundary |w| = 1 or |x| = 1.
pub fn rate_function(rho: f64, w: f64, x: f64) -> Result<f64> {
    check_rho(rho)?;
    for (name, v) in [("w", w), ("x", x)] {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::domain(name, v, "must lie in [-1, 1]"));
        }
    }
    if w.abs() == 1.0 || x.abs() == 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok((rate_w(rho, w) - 0.5 * (-x * x).ln_1p()).max(0.0))
}

/// The w-part of the rate function; convex with minimum 0 at w = ρ.
fn rate_w(rho: f64, w: f64) -> f64 {
    let one_minus = 1.0 - rho * rho;
    -rho * (w - rho) / one_minus - 0.5 * ((1.0 - w) * (1.0 + w)).ln() + 0.5 * one_minus.ln()
}

/// f(ρ, α) with its maximizer, by maximizing over w with the constraint active
/// in x.
pub fn utility_frontier(rho: f64, alpha: f64) -> Result<FrontierPoint> {
    check_rho(rho)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::domain("alpha", alpha, "must be finite and >= 0"));
    }
    Ok(frontier(rho, alpha))
}

fn frontier(rho: f64, alpha: f64) -> FrontierPoint {
    if alpha == 0.0 {
        return FrontierPoint {
            value: rho * rho,
            w: rho,
            x: 0.0,
        };
    }
    let s = (1.0 - rho * rho).sqrt();
    let x_of = |w: f64| {
        let slack = alpha - rate_w(rho, w);
        if slack <= 0.0 {
            0.0
        } else {
            (-(-2.0 * slack).exp_m1()).sqrt()
        }
    };
    let g = |w: f64| rho * w + s * ((1.0 - w) * (1.0 + w)).sqrt() * x_of(w);
    let lo = bisect_root(|w| rate_w(rho, w) - alpha, -1.0, rho);
    let hi = bisect_root(|w| rate_w(rho, w) - alpha, rho, 1.0);
    let (mut w, mut value) = scan_max(g, lo, hi, FRONTIER_SCAN, 1e-13);
    let at_mode = g(rho);
    if at_mode > value {
        w = rho;
        value = at_mode;
    }
    FrontierPoint {
        value,
        w,
        x: x_of(w),
    }
}

/// f(ρ, α) - c_s·α + ½·c_c·log(1-ρ²).
pub fn joint_objective(policy: AsymptoticPolicy, costs: ScaledCosts) -> f64 {
    objective(policy.rho, policy.alpha, costs)
}

fn objective(rho: f64, alpha: f64, costs: ScaledCosts) -> f64 {
    frontier(rho, alpha).value - costs.c_s * alpha + 0.5 * costs.c_c * (-rho * rho).ln_1p()
}

/// Best α for a fixed ρ.
fn best_alpha(rho: f64, alpha_max: f64, costs: ScaledCosts) -> (f64, f64) {
    scan_max(
        |a| objective(rho, a, costs),
        0.0,
        alpha_max,
        ALPHA_SCAN,
        REFINE_TOL,
    )
}

/// Global maximizer of the limit objective over the compact box where the
/// optimum must lie: coarse grid, then nested golden-section refinement.
pub fn solve_joint(costs: ScaledCosts) -> JointSolution {
    let rho_max = ((-(-2.0 / costs.c_c).exp_m1()).sqrt() - RHO_MARGIN)
        .min((1.0 - crate::directional::MIN_ONE_MINUS_RHO_SQ).sqrt() - RHO_MARGIN);
    let alpha_max = 1.0 / costs.c_s;
    let step_r = rho_max / (GRID - 1) as f64;
    let step_a = alpha_max / (GRID - 1) as f64;

    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..GRID {
        let rho = i as f64 * step_r;
        for j in 0..GRID {
            let v = objective(rho, j as f64 * step_a, costs);
            if v > best.1 {
                best = (i, v);
            }
        }
    }

    let (alpha0, value0) = best_alpha(0.0, alpha_max, costs);
    let i = best.0;
    let lo = i.saturating_sub(1) as f64 * step_r;
    let hi = ((i + 1).min(GRID - 1) as f64 * step_r).min(rho_max);
    let (mut rho, mut value) =
        golden_max(|r| best_alpha(r, alpha_max, costs).1, lo, hi, REFINE_TOL);
    let mut alpha = best_alpha(rho, alpha_max, costs).0;
    if value - value0 < TIE_TOL {
        rho = 0.0;
        alpha = alpha0;
        value = value0;
    }

    let regime = if rho == 0.0 {
        Regime::SearchOnly
    } else if alpha < FRICTIONLESS_ALPHA_TOL {
        Regime::FrictionlessBoundary
    } else {
        Regime::Hybrid
    };
    JointSolution {
        policy: AsymptoticPolicy { rho, alpha },
        value: value.max(0.0),
        regime,
    }
}

/// κ = ρ/(1-ρ²)·(d-3) and n = ⌊e^{dα}⌋ (saturating at u64::MAX).
pub fn map_to_finite(policy: AsymptoticPolicy, dim: SphereDim) -> InteractionPolicy {
    let kappa = policy.rho / (1.0 - policy.rho * policy.rho) * dim.reduced();
    // e^{log k} may round just below k.
    let raw = (dim.get() as f64 * policy.alpha).exp() * (1.0 + 4.0 * f64::EPSILON);
    let n = if raw >= u64::MAX as f64 {
        u64::MAX
    } else {
        (raw.floor() as u64).max(1)
    };
    InteractionPolicy { kappa, n }
}

/// Search without communication: ρ = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchOnlySolution {
    pub alpha: f64,
    pub value: f64,
}

/// A single recommendation with communication: α = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommOnlySolution {
    pub rho: f64,
    pub value: f64,
}

/// z* = ½(√(c⁴ + 4c²) - c²), the optimal e^{-2α} (or 1 - ρ²) for a single
/// channel with cost c.
pub(crate) fn pure_channel_z(c: f64) -> f64 {
    let c2 = c * c;
    // rationalized to avoid cancellation
    2.0 * c2 / ((c2 * c2 + 4.0 * c2).sqrt() + c2)
}

pub fn solve_search_only(c_s: f64) -> Result<SearchOnlySolution> {
    if !(c_s.is_finite() && c_s > 0.0) {
        return Err(Error::domain("c_s", c_s, "must be finite and > 0"));
    }
    let alpha = 0.5 * (0.5 + (0.25 + 1.0 / (c_s * c_s)).sqrt()).ln();
    let value = (-(-2.0 * alpha).exp_m1()).sqrt() - c_s * alpha;
    Ok(SearchOnlySolution { alpha, value })
}

pub fn solve_comm_only(c_c: f64) -> Result<CommOnlySolution> {
    if !(c_c.is_finite() && c_c > 0.0) {
        return Err(Error::domain("c_c", c_c, "must be finite and > 0"));
    }
    if c_c >= 2.0 {
        return Ok(CommOnlySolution {
            rho: 0.0,
            value: 0.0,
        });
    }
    let rho = (1.0 - 0.5 * c_c).sqrt();
    let value = 1.0 - 0.5 * c_c * (2.0 * std::f64::consts::E / c_c).ln();
    Ok(CommOnlySolution { rho, value })
}

/// Smallest c_c at which the joint optimum stops communicating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwitchingThreshold {
    pub threshold: f64,
    /// False when ρ* was already zero at the smallest probed c_c; the
    /// threshold is then reported as 0.
    pub bracketed: bool,
}

pub fn switching_threshold(c_s: f64) -> Result<SwitchingThreshold> {
    if !(c_s.is_finite() && c_s > 0.0) {
        return Err(Error::domain("c_s", c_s, "must be finite and > 0"));
    }
    let search_only = |c_c: f64| {
        let costs = ScaledCosts { c_s, c_c };
        solve_joint(costs).policy.rho < SWITCH_RHO_TOL
    };
    let lo = 1e-6 * c_s;
    if search_only(lo) {
        return Ok(SwitchingThreshold {
            threshold: 0.0,
            bracketed: false,
        });
    }
    let threshold = bisect_threshold(search_only, lo, c_s, 1e-7 * c_s.max(1.0));
    Ok(SwitchingThreshold {
        threshold,
        bracketed: true,
    })
}

/// Two independent subspaces with alignment weights μ² and 1-μ².
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedSolution {
    pub first: JointSolution,
    pub second: JointSolution,
    pub first_policy: InteractionPolicy,
    pub second_policy: InteractionPolicy,
    /// μ²·value₁ + (1-μ²)·value₂
    pub value: f64,
}

/// Solve each subspace with its costs divided by its weight.
pub fn weighted_solve(
    mu: f64,
    d1: usize,
    d2: usize,
    costs1: ScaledCosts,
    costs2: ScaledCosts,
) -> Result<WeightedSolution> {
    if mu == 0.0 || mu == 1.0 {
        return Err(Error::Degenerate(
            "mu in {0, 1} leaves a single subspace; use solve_joint",
        ));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::domain("mu", mu, "must lie in (0, 1)"));
    }
    let dim1 = SphereDim::new(d1)?;
    let dim2 = SphereDim::new(d2)?;
    let w1 = mu * mu;
    let w2 = 1.0 - w1;
    let first = solve_joint(costs1.scaled_by(w1)?);
    let second = solve_joint(costs2.scaled_by(w2)?);
    Ok(WeightedSolution {
        first,
        second,
        first_policy: map_to_finite(first.policy, dim1),
        second_policy: map_to_finite(second.policy, dim2),
        value: w1 * first.value + w2 * second.value,
    })
}
