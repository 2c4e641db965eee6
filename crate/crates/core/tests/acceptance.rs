//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime
//! budget. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use recsize::asymptotic::{
    solve_comm_only, solve_joint, solve_search_only, switching_threshold, utility_frontier,
    ScaledCosts,
};
use recsize::directional::{kl_asymptotic, kl_divergence, Precision, SphereDim};
use recsize::finite_sim::{
    default_kappa_grid, default_n_grid, estimate_max_utility, optimize_policy, payoff,
    performance_gap, weighted_payoff, GapMode, SimConfig,
};
use recsize::sampling::{sample_full_interaction, sample_w, RngStream};
use recsize::tilted::{solve_tilted, TiltRegime};

type Outcome = Result<String, String>;
type Criterion = (&'static str, u64, fn() -> Outcome);

fn dim(d: usize) -> SphereDim {
    SphereDim::new(d).unwrap()
}

fn costs(c_s: f64, c_c: f64) -> ScaledCosts {
    ScaledCosts::new(c_s, c_c).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Independent 1-D maximizer: dense grid then golden section around the best
/// node.
fn grid_refine_max(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 20_000;
    let h = (b - a) / m as f64;
    let (mut best_i, mut best) = (0usize, f(a));
    for i in 1..=m {
        let v = f(a + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = (
        a + best_i.saturating_sub(1) as f64 * h,
        (a + (best_i + 1) as f64 * h).min(b),
    );
    let r = 0.5 * (5f64.sqrt() - 1.0);
    while hi - lo > 1e-13 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

fn c1_frontier_anchors() -> Outcome {
    let mut worst_a: f64 = 0.0;
    for rho in [0.0, 0.3, 0.5, 0.7] {
        let v = utility_frontier(rho, 0.0).map_err(|e| e.to_string())?.value;
        worst_a = worst_a.max((v - rho * rho).abs());
    }
    let mut worst_b: f64 = 0.0;
    for alpha in [0.1, 0.5, 1.0] {
        let v = utility_frontier(0.0, alpha)
            .map_err(|e| e.to_string())?
            .value;
        worst_b = worst_b.max((v - (1.0 - (-2.0 * alpha).exp()).sqrt()).abs());
    }
    check(
        worst_a <= 1e-9 && worst_b <= 1e-6,
        format!("max |f(rho,0)-rho^2| = {worst_a:.1e}, max |f(0,a)-sqrt(1-e^-2a)| = {worst_b:.1e}"),
    )
}

fn c2_pure_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for c in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let search = grid_refine_max(|a| (1.0 - (-2.0 * a).exp()).sqrt() - c * a, 0.0, 5.0);
        let comm = grid_refine_max(|r| r * r + 0.5 * c * (-r * r).ln_1p(), 0.0, 1.0 - 1e-12);
        worst = worst
            .max((solve_search_only(c).unwrap().value - search).abs())
            .max((solve_comm_only(c).unwrap().value - comm).abs());
    }
    let zero = [2.0, 2.5, 10.0]
        .iter()
        .all(|&c| solve_comm_only(c).unwrap().value == 0.0);
    check(
        worst <= 1e-6 && zero,
        format!("max oracle discrepancy {worst:.1e}; OPT_Comm(c>=2) == 0: {zero}"),
    )
}

fn c3_regime_identity() -> Outcome {
    let grid = linspace(0.3, 2.0, 5);
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    for &c_s in &grid {
        for &c_c in &grid {
            if c_c > c_s {
                let joint = solve_joint(costs(c_s, c_c)).value;
                worst = worst.max((joint - solve_search_only(c_s).unwrap().value).abs());
                cells += 1;
            }
        }
    }
    check(
        worst <= 1e-6,
        format!("{cells} cells, max |joint - search| = {worst:.1e}"),
    )
}

fn c4_monotonicity() -> Outcome {
    let grid = linspace(0.3, 2.0, 5);
    let sol: Vec<Vec<(f64, f64)>> = grid
        .iter()
        .map(|&c_s| {
            grid.iter()
                .map(|&c_c| {
                    let s = solve_joint(costs(c_s, c_c));
                    (s.policy.rho(), s.policy.alpha())
                })
                .collect()
        })
        .collect();
    let tol = 1e-6;
    let mut violations = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            if j + 1 < 5 {
                // along c_c
                if sol[i][j + 1].0 - sol[i][j].0 > tol {
                    violations.push(format!("rho up in c_c at ({i},{j})"));
                }
                if sol[i][j + 1].1 - sol[i][j].1 < -tol {
                    violations.push(format!("alpha down in c_c at ({i},{j})"));
                }
            }
            if i + 1 < 5 {
                // along c_s
                if sol[i + 1][j].0 - sol[i][j].0 < -tol {
                    violations.push(format!("rho down in c_s at ({i},{j})"));
                }
                if sol[i + 1][j].1 - sol[i][j].1 > tol {
                    violations.push(format!("alpha up in c_s at ({i},{j})"));
                }
            }
        }
    }
    check(
        violations.is_empty(),
        if violations.is_empty() {
            "all 80 finite-difference signs hold".into()
        } else {
            violations.join("; ")
        },
    )
}

fn c5_tilted_phase_transition() -> Outcome {
    let grid = linspace(0.25, 2.0, 7);
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for &c_s in &grid {
        for &c_c in &grid {
            if c_s == c_c {
                continue;
            }
            let s = solve_tilted(costs(c_s, c_c));
            let p = s.policy;
            match s.regime {
                TiltRegime::PureSearch => {
                    if p.rho() != 0.0 || p.v() != 0.0 {
                        bad += 1;
                    }
                    worst = worst.max((p.alpha() - solve_search_only(c_s).unwrap().alpha).abs());
                }
                TiltRegime::PureCommunication => {
                    if p.alpha() != 0.0 || p.v() != 1.0 {
                        bad += 1;
                    }
                }
                TiltRegime::Boundary => bad += 1,
            }
        }
    }
    check(
        bad == 0 && worst <= 1e-9,
        format!("42 cells, non-pure = {bad}, max |alpha - alpha_search| = {worst:.1e}"),
    )
}

fn c6_tilted_dominance() -> Outcome {
    let grid = linspace(0.25, 2.0, 7);
    let mut min_margin = f64::INFINITY;
    let mut best_strict: f64 = 0.0;
    for &c_s in &grid {
        let threshold = switching_threshold(c_s)
            .map_err(|e| e.to_string())?
            .threshold;
        for &c_c in &grid {
            let c = costs(c_s, c_c);
            let diff = solve_tilted(c).value - solve_joint(c).value;
            min_margin = min_margin.min(diff);
            if threshold < c_c && c_c < c_s {
                best_strict = best_strict.max(diff);
            }
        }
    }
    check(
        min_margin >= -1e-9 && best_strict > 1e-3,
        format!(
            "min(tilted - posterior) = {min_margin:.2e}, best gain in switching band = {best_strict:.4}"
        ),
    )
}

fn c7_monte_carlo_frontier() -> Outcome {
    let (rho, alpha) = (0.4, 0.1);
    let f = utility_frontier(rho, alpha).unwrap().value;
    let mut errs = Vec::new();
    for d in [10, 40] {
        let dm = dim(d);
        let n = (alpha * d as f64).exp().floor() as u64;
        let cfg = SimConfig::new(dm, 20_000, 7, 1000).unwrap();
        let k = Precision::from_mode(rho, dm).unwrap();
        let u = estimate_max_utility(k, n, &cfg).map_err(|e| e.to_string())?;
        errs.push(((u.mean - f).abs(), u.std_error, n));
    }
    let (e10, s10, _) = errs[0];
    let (e40, s40, n40) = errs[1];
    check(
        e40 <= 0.15 && e40 <= e10 + 2.0 * (s10 + s40),
        format!("f = {f:.5}; |err| d=10: {e10:.4}, d=40 (n={n40}): {e40:.4}"),
    )
}

fn c8_kl_asymptote() -> Outcome {
    let d = dim(200);
    let kl = kl_divergence(Precision::from_mode(0.5, d).unwrap(), d).map_err(|e| e.to_string())?;
    let asym = kl_asymptotic(0.5, d).unwrap();
    let rel = (kl - asym).abs() / asym;
    let zero = kl_divergence(Precision::ZERO, d).unwrap();
    check(
        rel <= 0.05 && zero == 0.0,
        format!("KL = {kl:.4}, asymptote = {asym:.4}, rel = {rel:.4}; KL(0) = {zero}"),
    )
}

fn c9_decomposition() -> Outcome {
    let d = dim(20);
    let k = Precision::from_mode(0.5, d).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..1000 {
        let mut rng = RngStream::new(9, r);
        let full = sample_full_interaction(k, d, 5, &mut rng).map_err(|e| e.to_string())?;
        let direct = full.utilities();
        let recon: Vec<f64> = full.alignment().utilities().collect();
        for (a, b) in direct.iter().zip(&recon) {
            worst = worst.max((a - b).abs());
        }
    }
    check(
        worst <= 1e-10,
        format!("max discrepancy {worst:.1e} over 1000 draws"),
    )
}

fn c10_concentration() -> Outcome {
    let d = dim(50);
    let k = Precision::from_mode(0.5, d).unwrap();
    let n = 10_000;
    let mut rng = RngStream::new(10, 0);
    let mut hits = 0;
    for _ in 0..n {
        let w = sample_w(k, d, &mut rng).map_err(|e| e.to_string())?;
        if (w - 0.5).abs() >= 0.2 {
            hits += 1;
        }
    }
    let freq = hits as f64 / n as f64;
    let bound = 2.0 * (-47.0f64 * 0.02).exp();
    let se = (bound * (1.0 - bound) / n as f64).sqrt();
    check(
        freq <= bound + 3.0 * se,
        format!(
            "tail frequency {freq:.4} vs bound {bound:.4} + 3se {:.4}",
            3.0 * se
        ),
    )
}

fn c11_finite_phase_transitions() -> Outcome {
    let d = dim(10);
    let cfg = SimConfig::new(d, 5000, 11, 1000).unwrap();
    let ks = default_kappa_grid(d);
    let ns = default_n_grid(d, cfg.max_n());
    let lambda_s = 1.1 / 2f64.ln();
    let (p1, _) = optimize_policy(lambda_s, 0.05, &cfg, &ks, &ns).map_err(|e| e.to_string())?;
    let (p2, _) = optimize_policy(0.05, 1e3, &cfg, &ks, &ns).map_err(|e| e.to_string())?;
    check(
        p1.n == 1 && p2.kappa == 0.0,
        format!(
            "lambda_s = {lambda_s:.3}: n* = {}; lambda_c = 1e3: kappa* = {}, n* = {}",
            p1.n, p2.kappa, p2.n
        ),
    )
}

fn c12_gap_sign() -> Outcome {
    let c = costs(1.0, 0.5);
    let mut lines = Vec::new();
    let mut ok = true;
    for d in [10, 20, 40] {
        let cfg = SimConfig::new(dim(d), 2000, 12, 1000).unwrap();
        let g = performance_gap(c, &cfg, GapMode::Joint).map_err(|e| e.to_string())?;
        ok &= g.gap >= -2.0 * g.combined_std_error();
        lines.push(format!(
            "d={d}: gap {:.4} (se {:.4})",
            g.gap,
            g.combined_std_error()
        ));
    }
    check(ok, lines.join(", "))
}

fn c13_weighted() -> Outcome {
    let d = dim(20);
    let cfg = SimConfig::new(d, 5000, 13, 1000).unwrap();
    let k1 = Precision::from_mode(0.5, d).unwrap();
    let lambdas = (0.01, 0.01, 0.1);
    let mu = 0.999;
    let w = weighted_payoff(mu, (k1, Precision::ZERO), (10, 1), lambdas, (d, d), &cfg)
        .map_err(|e| e.to_string())?;
    let w2 = mu * mu;
    let book = (w.combined.mean - (w2 * w.first.mean + (1.0 - w2) * w.second.mean)).abs();
    let single = payoff(k1, 10, lambdas.0, lambdas.1, &cfg).map_err(|e| e.to_string())?;
    let collapse = (w.combined.mean - single.mean).abs();
    let tol = 3.0 * (w.combined.std_error + single.std_error);
    check(
        book <= 1e-12 && collapse <= tol,
        format!("bookkeeping {book:.1e}; |combined - single| = {collapse:.4} vs 3se {tol:.4}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("frontier closed-form anchors", 1, c1_frontier_anchors),
        (
            "pure-policy closed forms vs brute force",
            5,
            c2_pure_closed_forms,
        ),
        ("joint-solver regime identity", 30, c3_regime_identity),
        ("joint-solver monotonicity", 60, c4_monotonicity),
        ("tilted phase transition", 1, c5_tilted_phase_transition),
        ("tilted dominance", 60, c6_tilted_dominance),
        ("Monte Carlo vs frontier", 120, c7_monte_carlo_frontier),
        ("KL asymptote", 1, c8_kl_asymptote),
        ("decomposition identity", 10, c9_decomposition),
        ("concentration of fidelity", 5, c10_concentration),
        (
            "finite-d phase transitions",
            120,
            c11_finite_phase_transitions,
        ),
        ("performance-gap sign", 300, c12_gap_sign),
        ("weighted decomposition", 60, c13_weighted),
    ];
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(*budget);
        let (pass, detail) = match outcome {
            Ok(d) => (in_budget, d),
            Err(d) => (false, d),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2}s / {budget}s budget]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
        );
    }
    println!("{} of 13 criteria passed", 13 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
