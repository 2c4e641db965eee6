//! Monte Carlo evaluation of the finite-d payoff
//! P_d(κ, n) = E[max_i ⟨h, θ_i⟩] - λ_s·log n - λ_c·KL(κ).
//!
//! Replication r always draws from the stream (seed, r): first W, then the
//! pairs (W_i, X_i) in order. The maximum over the first n pairs is therefore
//! a prefix maximum, so one pass to the largest n on a grid yields every
//! smaller n as well, and all cells share common random numbers.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotic::{
    map_to_finite, solve_comm_only, solve_joint, solve_search_only, AsymptoticPolicy,
    InteractionPolicy, ScaledCosts,
};
use crate::directional::{kl_divergence, Precision, SphereDim};
use crate::error::{Error, Result};
use crate::quadrature::pairwise_sum;
use crate::sampling::{AlignmentSampler, RngStream, MAX_SET_SIZE};

/// Offset applied to the seed of the second subspace in [`weighted_payoff`].
pub const SECOND_SUBSPACE_SEED_XOR: u64 = 0x9E37_79B9_7F4A_7C15;
pub const MIN_REPLICATIONS: u64 = 100;
const KAPPA_GRID_POINTS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    dim: SphereDim,
    replications: u64,
    seed: u64,
    max_n: u64,
}

impl SimConfig {
    pub fn new(dim: SphereDim, replications: u64, seed: u64, max_n: u64) -> Result<Self> {
        if replications < MIN_REPLICATIONS {
            return Err(Error::domain(
                "replications",
                replications as f64,
                "must be at least 100",
            ));
        }
        if max_n == 0 || max_n > MAX_SET_SIZE as u64 {
            return Err(Error::domain("max_n", max_n as f64, "must be in [1, 1e6]"));
        }
        Ok(SimConfig {
            dim,
            replications,
            seed,
            max_n,
        })
    }

    pub fn dim(&self) -> SphereDim {
        self.dim
    }

    pub fn replications(&self) -> u64 {
        self.replications
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_n(&self) -> u64 {
        self.max_n
    }

    pub fn with_dim(self, dim: SphereDim) -> Self {
        SimConfig { dim, ..self }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SimConfig { seed, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UtilityEstimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PayoffComponents {
    pub utility: f64,
    pub search_cost: f64,
    pub comm_cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PayoffEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub components: PayoffComponents,
}

impl PayoffEstimate {
    fn new(utility: UtilityEstimate, search_cost: f64, comm_cost: f64) -> Self {
        PayoffEstimate {
            mean: utility.mean - search_cost - comm_cost,
            std_error: utility.std_error,
            components: PayoffComponents {
                utility: utility.mean,
                search_cost,
                comm_cost,
            },
        }
    }
}

/// One evaluated cell of a (κ, n) grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridCell {
    pub policy: InteractionPolicy,
    pub estimate: PayoffEstimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GapMode {
    Joint,
    SearchOnly,
    CommOnly,
}

impl GapMode {
    pub fn code(self) -> u8 {
        match self {
            GapMode::Joint => 0,
            GapMode::SearchOnly => 1,
            GapMode::CommOnly => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub d: usize,
    pub mode: GapMode,
    pub policy_opt: InteractionPolicy,
    pub p_opt: PayoffEstimate,
    pub policy_asym: InteractionPolicy,
    pub p_asym: PayoffEstimate,
    pub gap: f64,
    /// True when the mapped set size exceeded `max_n` and was capped.
    pub asym_capped: bool,
}

impl GapReport {
    pub fn combined_std_error(&self) -> f64 {
        self.p_opt.std_error + self.p_asym.std_error
    }
}

fn mean_and_se(xs: &[f64]) -> UtilityEstimate {
    let r = xs.len() as f64;
    let mean = pairwise_sum(xs) / r;
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = if xs.len() > 1 {
        pairwise_sum(&sq) / (r - 1.0)
    } else {
        0.0
    };
    UtilityEstimate {
        mean,
        std_error: (var / r).sqrt(),
    }
}

fn check_n(n: u64, cfg: &SimConfig) -> Result<()> {
    if n == 0 || n > cfg.max_n {
        return Err(Error::domain("n", n as f64, "must be in [1, max_n]"));
    }
    Ok(())
}

fn check_lambda(name: &'static str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::domain(name, x, "must be finite and >= 0"));
    }
    Ok(())
}

/// Per-replication prefix maxima of the utility at each n in `sorted_ns`.
fn prefix_max_utilities(
    kappa: Precision,
    sorted_ns: &[u64],
    cfg: &SimConfig,
) -> Result<Vec<Vec<f64>>> {
    let sampler = AlignmentSampler::new(kappa, cfg.dim);
    let n_max = *sorted_ns.last().expect("nonempty n grid");
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(cfg.seed, r);
            let mut run = || -> Result<Vec<f64>> {
                let w = sampler.fidelity(&mut rng)?;
                let s = (1.0 - w * w).max(0.0).sqrt();
                let mut out = Vec::with_capacity(sorted_ns.len());
                let mut next = 0;
                let mut best = f64::NEG_INFINITY;
                for i in 1..=n_max {
                    let (wi, xi) = sampler.pair(&mut rng)?;
                    best = best.max(w * wi + s * (1.0 - wi * wi).max(0.0).sqrt() * xi);
                    while next < sorted_ns.len() && sorted_ns[next] == i {
                        out.push(best);
                        next += 1;
                    }
                }
                Ok(out)
            };
            run().map_err(|e| e.at_replication(r))
        })
        .collect()
}

/// Mean of the per-replication best utility max_i ⟨h, θ_i⟩.
pub fn estimate_max_utility(kappa: Precision, n: u64, cfg: &SimConfig) -> Result<UtilityEstimate> {
    check_n(n, cfg)?;
    let per_rep = prefix_max_utilities(kappa, &[n], cfg)?;
    let xs: Vec<f64> = per_rep.iter().map(|v| v[0]).collect();
    Ok(mean_and_se(&xs))
}

pub fn payoff(
    kappa: Precision,
    n: u64,
    lambda_s: f64,
    lambda_c: f64,
    cfg: &SimConfig,
) -> Result<PayoffEstimate> {
    check_lambda("lambda_s", lambda_s)?;
    check_lambda("lambda_c", lambda_c)?;
    let utility = estimate_max_utility(kappa, n, cfg)?;
    let kl = kl_divergence(kappa, cfg.dim)?;
    Ok(PayoffEstimate::new(
        utility,
        lambda_s * (n as f64).ln(),
        lambda_c * kl,
    ))
}

/// Payoff estimates on the full product grid, ordered by κ then n as given.
pub fn evaluate_grid(
    lambda_s: f64,
    lambda_c: f64,
    cfg: &SimConfig,
    kappa_grid: &[Precision],
    n_grid: &[u64],
) -> Result<Vec<GridCell>> {
    check_lambda("lambda_s", lambda_s)?;
    check_lambda("lambda_c", lambda_c)?;
    if kappa_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::domain(
            "grid",
            0.0,
            "kappa and n grids must be nonempty",
        ));
    }
    for &n in n_grid {
        check_n(n, cfg)?;
    }
    let mut sorted_ns = n_grid.to_vec();
    sorted_ns.sort_unstable();
    sorted_ns.dedup();
    let mut cells = Vec::with_capacity(kappa_grid.len() * n_grid.len());
    for &kappa in kappa_grid {
        let per_rep = prefix_max_utilities(kappa, &sorted_ns, cfg)?;
        let comm_cost = lambda_c * kl_divergence(kappa, cfg.dim)?;
        for &n in n_grid {
            let j = sorted_ns.binary_search(&n).expect("n drawn from grid");
            let xs: Vec<f64> = per_rep.iter().map(|v| v[j]).collect();
            let estimate =
                PayoffEstimate::new(mean_and_se(&xs), lambda_s * (n as f64).ln(), comm_cost);
            cells.push(GridCell {
                policy: InteractionPolicy {
                    kappa: kappa.get(),
                    n,
                },
                estimate,
            });
        }
    }
    Ok(cells)
}

/// Index and value of the highest mean payoff; ties go to smaller n, then
/// smaller κ.
pub fn optimize_from_cells(cells: &[GridCell]) -> (usize, GridCell) {
    let mut best = 0;
    for (i, c) in cells.iter().enumerate().skip(1) {
        let b = &cells[best];
        let preferred = (c.policy.n, c.policy.kappa) < (b.policy.n, b.policy.kappa);
        if c.estimate.mean > b.estimate.mean || (c.estimate.mean == b.estimate.mean && preferred) {
            best = i;
        }
    }
    (best, cells[best])
}

/// Grid-search the finite-d optimum under common random numbers.
pub fn optimize_policy(
    lambda_s: f64,
    lambda_c: f64,
    cfg: &SimConfig,
    kappa_grid: &[Precision],
    n_grid: &[u64],
) -> Result<(InteractionPolicy, PayoffEstimate)> {
    let cells = evaluate_grid(lambda_s, lambda_c, cfg, kappa_grid, n_grid)?;
    let (_, best) = optimize_from_cells(&cells);
    Ok((best.policy, best.estimate))
}

/// {0} together with a geometric ladder from 0.02·(d-3) to 4·(d-3).
pub fn default_kappa_grid(dim: SphereDim) -> Vec<Precision> {
    let lo = 0.02 * dim.reduced();
    let hi = 4.0 * dim.reduced();
    let ratio = (hi / lo).powf(1.0 / (KAPPA_GRID_POINTS - 1) as f64);
    std::iter::once(0.0)
        .chain((0..KAPPA_GRID_POINTS).map(|i| lo * ratio.powi(i as i32)))
        .map(|k| Precision::new(k).expect("grid values are finite"))
        .collect()
}

/// 1, 2, 3, 5, 8, 12, ... (×1.5, rounded) up to min(e^{d/2}, max_n).
pub fn default_n_grid(dim: SphereDim, max_n: u64) -> Vec<u64> {
    let cap = (0.5 * dim.get() as f64)
        .exp()
        .floor()
        .min(max_n as f64)
        .max(1.0) as u64;
    let mut grid = vec![1];
    let mut n = 1u64;
    loop {
        n = (n + 1).max((1.5 * n as f64).round() as u64);
        if n > cap {
            break;
        }
        grid.push(n);
    }
    grid
}

/// Gap between the grid-searched finite optimum and the mapped asymptotic
/// policy. The mapped policy is added to the grid, so under common random
/// numbers the gap is never negative.
pub fn performance_gap(costs: ScaledCosts, cfg: &SimConfig, mode: GapMode) -> Result<GapReport> {
    let dim = cfg.dim;
    let d = dim.get() as f64;
    let lambda_s = costs.c_s() / d;
    let lambda_c = costs.c_c() / d;

    let limit = match mode {
        GapMode::Joint => solve_joint(costs).policy,
        GapMode::SearchOnly => AsymptoticPolicy::new(0.0, solve_search_only(costs.c_s())?.alpha)?,
        GapMode::CommOnly => AsymptoticPolicy::new(solve_comm_only(costs.c_c())?.rho, 0.0)?,
    };
    let mapped = map_to_finite(limit, dim);
    let asym_capped = mapped.n > cfg.max_n;
    let asym = InteractionPolicy {
        kappa: mapped.kappa,
        n: mapped.n.min(cfg.max_n),
    };

    let mut kappas: Vec<Precision> = match mode {
        GapMode::SearchOnly => vec![Precision::ZERO],
        _ => default_kappa_grid(dim),
    };
    let mut ns = match mode {
        GapMode::CommOnly => vec![1],
        _ => default_n_grid(dim, cfg.max_n),
    };
    let asym_kappa = Precision::new(asym.kappa)?;
    if !kappas.contains(&asym_kappa) {
        kappas.push(asym_kappa);
        kappas.sort_by(|a, b| a.get().total_cmp(&b.get()));
    }
    if !ns.contains(&asym.n) {
        ns.push(asym.n);
        ns.sort_unstable();
    }

    let cells = evaluate_grid(lambda_s, lambda_c, cfg, &kappas, &ns)?;
    let (_, best) = optimize_from_cells(&cells);
    let at_asym = cells
        .iter()
        .find(|c| c.policy == asym)
        .expect("mapped policy is on the grid");
    Ok(GapReport {
        d: dim.get(),
        mode,
        policy_opt: best.policy,
        p_opt: best.estimate,
        policy_asym: asym,
        p_asym: at_asym.estimate,
        gap: best.estimate.mean - at_asym.estimate.mean,
        asym_capped,
    })
}

/// Payoffs of the two subspaces and their μ²-weighted combination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightedPayoff {
    /// P_{d1}(κ₁, n₁) with costs divided by μ².
    pub first: PayoffEstimate,
    /// P_{d2}(κ₂, n₂) with costs divided by 1-μ².
    pub second: PayoffEstimate,
    pub combined: PayoffEstimate,
}

/// Two-subspace payoff μ²·P_{d1} + (1-μ²)·P_{d2}. The second subspace draws
/// from seed `cfg.seed ^ SECOND_SUBSPACE_SEED_XOR` so the two are independent.
pub fn weighted_payoff(
    mu: f64,
    kappas: (Precision, Precision),
    ns: (u64, u64),
    lambdas: (f64, f64, f64),
    dims: (SphereDim, SphereDim),
    cfg: &SimConfig,
) -> Result<WeightedPayoff> {
    if mu == 0.0 || mu == 1.0 {
        return Err(Error::Degenerate(
            "mu in {0, 1} leaves a single subspace; use payoff",
        ));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::domain("mu", mu, "must lie in (0, 1)"));
    }
    if ns.0.saturating_mul(ns.1) > cfg.max_n {
        return Err(Error::domain(
            "n1 * n2",
            ns.0 as f64 * ns.1 as f64,
            "must not exceed max_n",
        ));
    }
    let (lambda_s, lambda_1c, lambda_2c) = lambdas;
    let w1 = mu * mu;
    let w2 = 1.0 - w1;
    let first = payoff(
        kappas.0,
        ns.0,
        lambda_s / w1,
        lambda_1c / w1,
        &cfg.with_dim(dims.0),
    )?;
    let cfg2 = cfg
        .with_dim(dims.1)
        .with_seed(cfg.seed ^ SECOND_SUBSPACE_SEED_XOR);
    let second = payoff(kappas.1, ns.1, lambda_s / w2, lambda_2c / w2, &cfg2)?;

    let mix = |a: f64, b: f64| w1 * a + w2 * b;
    let utility = UtilityEstimate {
        mean: mix(first.components.utility, second.components.utility),
        std_error: (w1 * w1 * first.std_error.powi(2) + w2 * w2 * second.std_error.powi(2)).sqrt(),
    };
    let combined = PayoffEstimate::new(
        utility,
        mix(first.components.search_cost, second.components.search_cost),
        mix(first.components.comm_cost, second.components.comm_cost),
    );
    Ok(WeightedPayoff {
        first,
        second,
        combined,
    })
}
