//! Deterministic numerics for the von Mises–Fisher alignment marginal.
//!
//! For a vMF law on S^{d-1} with concentration κ, the alignment W = ⟨h, m⟩ has
//! density proportional to `exp(κw) (1 - w²)^((d-3)/2)` on [-1, 1]. All
//! quantities here are integrals against that density. We integrate in the
//! angle φ = arccos w, where the integrand becomes `exp(κ cos φ) sin^(d-2) φ`,
//! which is smooth up to both endpoints. The angular domain is cut into
//! segments graded geometrically toward the peak, every segment gets the same
//! Gauss–Legendre rule, and the rule is doubled until log Z settles.
//!
//! Only log-partitions and differences of them are exposed; the surface-area
//! prefactor of the normalizing constant cancels everywhere it is used.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{self, MAX_NODES, MIN_NODES};

/// Segments per side of the peak; the innermost one spans 2^-32 of the side.
const GRADING_LEVELS: usize = 32;
const CONVERGENCE_TOL: f64 = 1e-11;
/// Smallest admissible 1 - ρ².
pub const MIN_ONE_MINUS_RHO_SQ: f64 = 1e-12;

/// Ambient dimension d of the sphere S^{d-1}; at least 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SphereDim(usize);

impl SphereDim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 4 {
            return Err(Error::Dimension(d));
        }
        Ok(SphereDim(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// d - 3, the effective dimension that appears in κ = ρ/(1-ρ²)·(d-3).
    pub fn reduced(self) -> f64 {
        (self.0 - 3) as f64
    }
}

/// Concentration κ ≥ 0 of the message channel.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct Precision(f64);

impl Precision {
    pub const ZERO: Precision = Precision(0.0);

    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::domain("kappa", kappa, "must be finite and >= 0"));
        }
        Ok(Precision(kappa))
    }

    /// The precision whose alignment density has its mode at `rho`:
    /// κ = ρ/(1-ρ²)·(d-3).
    pub fn from_mode(rho: f64, dim: SphereDim) -> Result<Self> {
        check_rho(rho)?;
        Ok(Precision(rho / (1.0 - rho * rho) * dim.reduced()))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub(crate) fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::domain("rho", rho, "must be in [0, 1)"));
    }
    if rho >= 1.0 || 1.0 - rho * rho < MIN_ONE_MINUS_RHO_SQ {
        return Err(Error::domain("rho", rho, "1 - rho^2 is below 1e-12"));
    }
    Ok(())
}

/// First moments of the alignment marginal together with its log-partition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginalMoments {
    /// E[W]
    pub mean_w: f64,
    /// E[√(1 - W²)]
    pub mean_sqrt: f64,
    /// log ∫ e^{κw}(1-w²)^{(d-3)/2} dw
    pub log_partition: f64,
}

/// The alignment marginal for a given (κ, d). Internally `d` may be as small
/// as 2 so that the (d-1)-dimensional orthogonal law at d = 4 is available.
#[derive(Clone, Debug)]
pub(crate) struct Marginal {
    kappa: f64,
    d: usize,
    mode_phi: f64,
    log_z: f64,
    per_segment: usize,
}

impl Marginal {
    pub(crate) fn new(kappa: f64, d: usize) -> Result<Self> {
        debug_assert!(d >= 2);
        let mode_phi = mode_angle(kappa, d);
        let mut m = Marginal {
            kappa,
            d,
            mode_phi,
            log_z: f64::NAN,
            per_segment: 0,
        };
        let segments_total = 2 * GRADING_LEVELS;
        let mut per_segment = MIN_NODES / segments_total;
        let mut prev = m.log_mass(0.0, PI, mode_phi, per_segment);
        loop {
            let next_per = per_segment * 2;
            if next_per * segments_total > MAX_NODES {
                break;
            }
            let next = m.log_mass(0.0, PI, mode_phi, next_per);
            per_segment = next_per;
            let converged = (next - prev).abs() < CONVERGENCE_TOL;
            prev = next;
            if converged {
                break;
            }
        }
        if !prev.is_finite() {
            return Err(Error::Numeric {
                kappa,
                d,
                what: "log-partition is not finite".into(),
            });
        }
        m.log_z = prev;
        m.per_segment = per_segment;
        Ok(m)
    }

    pub(crate) fn log_partition(&self) -> f64 {
        self.log_z
    }

    /// Unnormalized log integrand in the angle variable.
    fn log_integrand(&self, phi: f64) -> f64 {
        let s = phi.sin();
        let power = (self.d - 2) as f64;
        let angular = if power == 0.0 { 0.0 } else { power * s.ln() };
        self.kappa * phi.cos() + angular
    }

    fn log_mass(&self, a: f64, b: f64, peak: f64, per_segment: usize) -> f64 {
        let segs = graded_segments(a, b, peak);
        quadrature::log_integrate_segments(&segs, per_segment, |phi| self.log_integrand(phi)).0
    }

    pub(crate) fn moments(&self) -> MarginalMoments {
        let segs = graded_segments(0.0, PI, self.mode_phi);
        let (log_total, terms) =
            quadrature::log_integrate_segments(&segs, self.per_segment, |phi| {
                self.log_integrand(phi)
            });
        let mut mean_w = 0.0;
        let mut mean_sqrt = 0.0;
        for &(phi, lw) in &terms {
            let p = (lw - log_total).exp();
            mean_w += p * phi.cos();
            mean_sqrt += p * phi.sin();
        }
        MarginalMoments {
            mean_w,
            mean_sqrt,
            log_partition: self.log_z,
        }
    }

    /// P(W ≤ x).
    pub(crate) fn cdf(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 1.0;
        }
        if x <= -1.0 {
            return 0.0;
        }
        let phi = x.acos();
        if phi >= self.mode_phi {
            self.tail(phi, PI, phi).clamp(0.0, 1.0)
        } else {
            (1.0 - self.tail(0.0, phi, phi)).clamp(0.0, 1.0)
        }
    }

    /// P(W > x), computed from the short side so that tiny tails keep their
    /// relative accuracy.
    pub(crate) fn sf(&self, x: f64) -> f64 {
        if x >= 1.0 {
            return 0.0;
        }
        if x <= -1.0 {
            return 1.0;
        }
        let phi = x.acos();
        if phi <= self.mode_phi {
            self.tail(0.0, phi, phi).clamp(0.0, 1.0)
        } else {
            (1.0 - self.tail(phi, PI, phi)).clamp(0.0, 1.0)
        }
    }

    /// Probability mass of φ ∈ [a, b], graded toward `toward`.
    fn tail(&self, a: f64, b: f64, toward: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.log_mass(a, b, toward, self.per_segment) - self.log_z).exp()
    }
}

/// Location of the maximum of `κ cos φ + (d-2) log sin φ` on [0, π].
fn mode_angle(kappa: f64, d: usize) -> f64 {
    if kappa == 0.0 {
        return FRAC_PI_2;
    }
    let p = (d - 2) as f64;
    let c = 2.0 * kappa / (p + (p * p + 4.0 * kappa * kappa).sqrt());
    c.clamp(-1.0, 1.0).acos()
}

/// Split [a, b] at `peak` (clamped into the interval) and grade each side
/// geometrically toward it.
fn graded_segments(a: f64, b: f64, peak: f64) -> Vec<(f64, f64)> {
    let p = peak.clamp(a, b);
    let mut segs = Vec::with_capacity(2 * GRADING_LEVELS);
    let left = p - a;
    if left > 0.0 {
        let mut outer = a;
        for k in 1..GRADING_LEVELS {
            let inner = p - left * 0.5f64.powi(k as i32);
            segs.push((outer, inner));
            outer = inner;
        }
        segs.push((outer, p));
    }
    let right = b - p;
    if right > 0.0 {
        let mut inner = p;
        for k in (1..GRADING_LEVELS).rev() {
            let outer = p + right * 0.5f64.powi(k as i32);
            segs.push((inner, outer));
            inner = outer;
        }
        segs.push((inner, b));
    }
    segs
}

/// log ∫_{-1}^{1} e^{κw} (1-w²)^{(d-3)/2} dw.
pub fn log_partition(kappa: Precision, dim: SphereDim) -> Result<f64> {
    Ok(Marginal::new(kappa.get(), dim.get())?.log_partition())
}

/// E[W], E[√(1-W²)] and log Z under the alignment marginal.
pub fn marginal_moments(kappa: Precision, dim: SphereDim) -> Result<MarginalMoments> {
    let m = Marginal::new(kappa.get(), dim.get())?.moments();
    if !(m.mean_w.is_finite() && m.mean_sqrt.is_finite()) {
        return Err(Error::Numeric {
            kappa: kappa.get(),
            d: dim.get(),
            what: "non-finite moment".into(),
        });
    }
    Ok(m)
}

/// Expected KL divergence of the vMF posterior from the uniform prior:
/// κ·E[W] - (log Z(κ) - log Z(0)).
pub fn kl_divergence(kappa: Precision, dim: SphereDim) -> Result<f64> {
    if kappa.get() == 0.0 {
        return Ok(0.0);
    }
    let moments = marginal_moments(kappa, dim)?;
    let log_z0 = log_partition(Precision::ZERO, dim)?;
    let kl = kappa.get() * moments.mean_w - (moments.log_partition - log_z0);
    if !kl.is_finite() || kl < -1e-9 {
        return Err(Error::Numeric {
            kappa: kappa.get(),
            d: dim.get(),
            what: format!("KL divergence evaluated to {kl}"),
        });
    }
    Ok(kl.max(0.0))
}

/// Large-dimension KL asymptote (d-2)/2 · log(1/(1-ρ²)).
pub fn kl_asymptotic(rho: f64, dim: SphereDim) -> Result<f64> {
    check_rho(rho)?;
    Ok(0.5 * (dim.get() as f64 - 2.0) * -(-rho * rho).ln_1p())
}

/// P(W ≤ x) for the alignment marginal.
pub fn marginal_cdf(x: f64, kappa: Precision, dim: SphereDim) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain("x", x, "must lie in [-1, 1]"));
    }
    Ok(Marginal::new(kappa.get(), dim.get())?.cdf(x))
}

/// P(W > x), accurate in the far upper tail.
pub fn marginal_sf(x: f64, kappa: Precision, dim: SphereDim) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain("x", x, "must lie in [-1, 1]"));
    }
    Ok(Marginal::new(kappa.get(), dim.get())?.sf(x))
}
