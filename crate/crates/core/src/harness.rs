//! Experiment configs, dispatch and tabular output.
//!
//! A config is a kind plus a flat `key = value` map. Every parameter a run
//! reads, including defaults, is echoed into the table metadata, so the
//! metadata alone reproduces the table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{
    map_to_finite, solve_comm_only, solve_joint, solve_search_only, switching_threshold,
    weighted_solve, ScaledCosts,
};
use crate::directional::{Precision, SphereDim};
use crate::error::{Error, Result};
use crate::finite_sim::{
    default_kappa_grid, default_n_grid, evaluate_grid, payoff, performance_gap, weighted_payoff,
    GapMode, SimConfig,
};
use crate::tilted::solve_tilted;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    AsymptoticSolve,
    AsymptoticHeatmap,
    TiltedSolve,
    TiltedCompare,
    Simulate,
    FiniteSweep,
    GapSweep,
    WeightedSolve,
    SwitchingCurve,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::AsymptoticSolve,
        ExperimentKind::AsymptoticHeatmap,
        ExperimentKind::TiltedSolve,
        ExperimentKind::TiltedCompare,
        ExperimentKind::Simulate,
        ExperimentKind::FiniteSweep,
        ExperimentKind::GapSweep,
        ExperimentKind::WeightedSolve,
        ExperimentKind::SwitchingCurve,
    ];

    /// Subcommand name.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AsymptoticSolve => "solve-joint",
            ExperimentKind::AsymptoticHeatmap => "heatmap",
            ExperimentKind::TiltedSolve => "solve-tilted",
            ExperimentKind::TiltedCompare => "compare-tilt",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::FiniteSweep => "optimize",
            ExperimentKind::GapSweep => "gap",
            ExperimentKind::WeightedSolve => "weighted",
            ExperimentKind::SwitchingCurve => "switching-curve",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::config("kind", format!("unknown experiment kind `{name}`")))
    }

    fn keys(self) -> &'static [&'static str] {
        const SIM: [&str; 3] = ["reps", "seed", "max_n"];
        match self {
            ExperimentKind::AsymptoticSolve => &["c_s", "c_c", "d"],
            ExperimentKind::AsymptoticHeatmap | ExperimentKind::TiltedCompare => {
                &["c_s_grid", "c_c_grid"]
            }
            ExperimentKind::TiltedSolve => &["c_s", "c_c"],
            ExperimentKind::Simulate => &[
                "d", "kappa", "rho", "n", "lambda_s", "lambda_c", SIM[0], SIM[1], SIM[2],
            ],
            ExperimentKind::FiniteSweep => &[
                "d",
                "lambda_s",
                "lambda_c",
                "kappa_grid",
                "n_grid",
                SIM[0],
                SIM[1],
                SIM[2],
            ],
            ExperimentKind::GapSweep => &["c_s", "c_c", "d_list", "mode", SIM[0], SIM[1], SIM[2]],
            ExperimentKind::WeightedSolve => &[
                "mu",
                "d1",
                "d2",
                "lambda_s",
                "lambda_1c",
                "lambda_2c",
                "simulate",
                SIM[0],
                SIM[1],
                SIM[2],
            ],
            ExperimentKind::SwitchingCurve => &["c_s_grid", "mode"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub parameters: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            parameters: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.parameters.insert(key.into(), value.into());
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    /// Parse `key = value` lines; `#` starts a comment. A `kind` entry is
    /// returned separately.
    pub fn parse_pairs(text: &str) -> Result<(Option<String>, BTreeMap<String, String>)> {
        let mut kind = None;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::config(format!("line {}", lineno + 1), "empty key"));
            }
            if k == "kind" {
                kind = Some(v.to_string());
            } else {
                map.insert(k.to_string(), v.to_string());
            }
        }
        Ok((kind, map))
    }

    /// Build a config with precedence overrides > file > defaults.
    pub fn resolve(
        kind: ExperimentKind,
        file: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut config = ExperimentConfig::new(kind);
        if let Some(text) = file {
            let (file_kind, map) = ExperimentConfig::parse_pairs(text)?;
            if let Some(k) = file_kind {
                if ExperimentKind::from_name(&k)? != kind {
                    return Err(Error::config(
                        "kind",
                        format!("config file is for `{k}`, not `{}`", kind.name()),
                    ));
                }
            }
            config.parameters.extend(map);
        }
        for (k, v) in overrides {
            config.set(k.clone(), v.clone());
        }
        Ok(config)
    }

    fn validate_keys(&self) -> Result<()> {
        let allowed = self.kind.keys();
        for key in self.parameters.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::config(
                    key.clone(),
                    format!("not a parameter of `{}`", self.kind.name()),
                ));
            }
        }
        Ok(())
    }
}

/// Run metadata written to the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: ExperimentConfig,
    pub version: String,
    pub seed: Option<u64>,
    pub header: Vec<String>,
    pub rows: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Resolved config, including defaults.
    pub config: ExperimentConfig,
    pub seed: Option<u64>,
}

impl ResultTable {
    fn new(header: &[&str], config: ExperimentConfig, seed: Option<u64>) -> Self {
        ResultTable {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            config,
            seed,
        }
    }

    fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn metadata(&self) -> Metadata {
        Metadata {
            config: self.config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            header: self.header.clone(),
            rows: self.rows.len(),
        }
    }

    /// Header row plus one line per row; floats use shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{x}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    /// Parse CSV produced by [`ResultTable::to_csv`] into (header, rows).
    pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Io("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .map(|line| {
                let row = line
                    .split(',')
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|e| Error::Io(format!("bad cell `{s}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if row.len() != header.len() {
                    return Err(Error::Io(format!("row `{line}` has wrong width")));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((header, rows))
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata()).expect("metadata serializes")
    }

    /// Write `path` as CSV and the metadata next to it with a `.json`
    /// extension. Returns the sidecar path.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        let sidecar = sidecar_path(path);
        std::fs::write(path, self.to_csv())?;
        std::fs::write(&sidecar, self.metadata_json() + "\n")?;
        Ok(sidecar)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "json") {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    } else {
        path.with_extension("json")
    }
}

/// Typed access to config values that records every value it hands out.
struct Params<'a> {
    raw: &'a BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

impl<'a> Params<'a> {
    fn new(raw: &'a BTreeMap<String, String>) -> Self {
        Params {
            raw,
            echo: BTreeMap::new(),
        }
    }

    fn text(&mut self, key: &str, default: Option<&str>) -> Result<String> {
        let v = match (self.raw.get(key), default) {
            (Some(v), _) => v.clone(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(Error::config(key, "required parameter is missing")),
        };
        self.echo.insert(key.to_string(), v.clone());
        Ok(v)
    }

    fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    fn parse<T: std::str::FromStr>(key: &str, s: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        s.trim()
            .parse::<T>()
            .map_err(|e| Error::config(key, format!("cannot parse `{s}`: {e}")))
    }

    fn real(&mut self, key: &str, default: Option<&str>) -> Result<f64> {
        let s = self.text(key, default)?;
        let v: f64 = Self::parse(key, &s)?;
        if !v.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &str, default: Option<&str>) -> Result<f64> {
        let v = self.real(key, default)?;
        if v <= 0.0 {
            return Err(Error::config(key, format!("must be > 0, got {v}")));
        }
        Ok(v)
    }

    fn nonnegative(&mut self, key: &str, default: Option<&str>) -> Result<f64> {
        let v = self.real(key, default)?;
        if v < 0.0 {
            return Err(Error::config(key, format!("must be >= 0, got {v}")));
        }
        Ok(v)
    }

    fn integer(&mut self, key: &str, default: Option<&str>) -> Result<u64> {
        let s = self.text(key, default)?;
        Self::parse(key, &s)
    }

    fn dim(&mut self, key: &str, default: Option<&str>) -> Result<SphereDim> {
        let d = self.integer(key, default)?;
        to_dim(key, d)
    }

    fn positive_list(&mut self, key: &str, default: Option<&str>) -> Result<Vec<f64>> {
        let s = self.text(key, default)?;
        let xs = s
            .split(',')
            .map(|x| Self::parse::<f64>(key, x))
            .collect::<Result<Vec<_>>>()?;
        if xs.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
            return Err(Error::config(key, "all entries must be finite and > 0"));
        }
        Ok(xs)
    }

    fn choice(&mut self, key: &str, default: &str, choices: &[&str]) -> Result<String> {
        let s = self.text(key, Some(default))?;
        if !choices.contains(&s.as_str()) {
            return Err(Error::config(
                key,
                format!("expected one of {choices:?}, got `{s}`"),
            ));
        }
        Ok(s)
    }

    fn sim(&mut self, dim: SphereDim, reps: &str, max_n: &str) -> Result<SimConfig> {
        let r = self.integer("reps", Some(reps))?;
        let seed = self.integer("seed", Some("0"))?;
        let max_n = self.integer("max_n", Some(max_n))?;
        SimConfig::new(dim, r, seed, max_n).map_err(|e| as_config("reps / max_n", e))
    }

    fn into_config(self, kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            parameters: self.echo,
        }
    }
}

fn to_dim(key: &str, d: u64) -> Result<SphereDim> {
    SphereDim::new(d as usize).map_err(|e| as_config(key, e))
}

fn as_config(key: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        other => Error::config(key, other.to_string()),
    }
}

const COST_GRID: &str = "0.25,0.5,0.75,1,1.25,1.5,1.75,2";

fn costs(c_s: f64, c_c: f64) -> Result<ScaledCosts> {
    ScaledCosts::new(c_s, c_c).map_err(|e| as_config("c_s / c_c", e))
}

fn bool_code(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Execute one experiment.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate_keys()?;
    let mut p = Params::new(&config.parameters);
    let kind = config.kind;
    match kind {
        ExperimentKind::AsymptoticSolve => {
            let c = costs(p.positive("c_s", None)?, p.positive("c_c", None)?)?;
            let dim = if p.has("d") {
                Some(p.dim("d", None)?)
            } else {
                None
            };
            let s = solve_joint(c);
            let search = solve_search_only(c.c_s())?;
            let comm = solve_comm_only(c.c_c())?;
            let mut header = vec![
                "c_s",
                "c_c",
                "rho_star",
                "alpha_star",
                "value",
                "regime",
                "search_only_value",
                "comm_only_value",
            ];
            let mut row = vec![
                c.c_s(),
                c.c_c(),
                s.policy.rho(),
                s.policy.alpha(),
                s.value,
                s.regime.code() as f64,
                search.value,
                comm.value,
            ];
            if let Some(dim) = dim {
                let f = map_to_finite(s.policy, dim);
                header.extend(["d", "kappa", "n"]);
                row.extend([dim.get() as f64, f.kappa, f.n as f64]);
            }
            let mut t = ResultTable::new(&header, p.into_config(kind), None);
            t.push(row);
            Ok(t)
        }
        ExperimentKind::AsymptoticHeatmap => {
            let cs = p.positive_list("c_s_grid", Some(COST_GRID))?;
            let cc = p.positive_list("c_c_grid", Some(COST_GRID))?;
            let cells = product(&cs, &cc);
            let rows: Vec<Vec<f64>> = cells
                .par_iter()
                .map(|&(c_s, c_c)| {
                    let s = solve_joint(ScaledCosts::new(c_s, c_c)?);
                    Ok(vec![
                        c_s,
                        c_c,
                        s.policy.rho(),
                        s.policy.alpha(),
                        s.value,
                        s.regime.code() as f64,
                    ])
                })
                .collect::<Result<_>>()?;
            let mut t = ResultTable::new(
                &["c_s", "c_c", "rho_star", "alpha_star", "value", "regime"],
                p.into_config(kind),
                None,
            );
            rows.into_iter().for_each(|r| t.push(r));
            Ok(t)
        }
        ExperimentKind::TiltedSolve => {
            let c = costs(p.positive("c_s", None)?, p.positive("c_c", None)?)?;
            let s = solve_tilted(c);
            let mut t = ResultTable::new(
                &[
                    "c_s",
                    "c_c",
                    "rho_star",
                    "alpha_star",
                    "v_star",
                    "value",
                    "regime",
                ],
                p.into_config(kind),
                None,
            );
            t.push(vec![
                c.c_s(),
                c.c_c(),
                s.policy.rho(),
                s.policy.alpha(),
                s.policy.v(),
                s.value,
                s.regime.code() as f64,
            ]);
            Ok(t)
        }
        ExperimentKind::TiltedCompare => {
            let cs = p.positive_list("c_s_grid", Some(COST_GRID))?;
            let cc = p.positive_list("c_c_grid", Some(COST_GRID))?;
            let rows: Vec<Vec<f64>> = product(&cs, &cc)
                .par_iter()
                .map(|&(c_s, c_c)| {
                    let c = ScaledCosts::new(c_s, c_c)?;
                    let tilt = solve_tilted(c);
                    let post = solve_joint(c);
                    Ok(vec![
                        c_s,
                        c_c,
                        tilt.value,
                        post.value,
                        tilt.value - post.value,
                        tilt.regime.code() as f64,
                        post.regime.code() as f64,
                    ])
                })
                .collect::<Result<_>>()?;
            let mut t = ResultTable::new(
                &[
                    "c_s",
                    "c_c",
                    "tilted_value",
                    "posterior_value",
                    "improvement",
                    "tilted_regime",
                    "posterior_regime",
                ],
                p.into_config(kind),
                None,
            );
            rows.into_iter().for_each(|r| t.push(r));
            Ok(t)
        }
        ExperimentKind::Simulate => {
            let dim = p.dim("d", Some("20"))?;
            let kappa = if p.has("kappa") {
                if p.has("rho") {
                    return Err(Error::config("rho", "give either kappa or rho, not both"));
                }
                let k = p.nonnegative("kappa", None)?;
                Precision::new(k).map_err(|e| as_config("kappa", e))?
            } else {
                let rho = p.nonnegative("rho", Some("0.5"))?;
                Precision::from_mode(rho, dim).map_err(|e| as_config("rho", e))?
            };
            let n = p.integer("n", Some("10"))?;
            let lambda_s = p.nonnegative("lambda_s", Some("0"))?;
            let lambda_c = p.nonnegative("lambda_c", Some("0"))?;
            let sim = p.sim(dim, "20000", "1000000")?;
            if n == 0 || n > sim.max_n() {
                return Err(Error::config("n", "must be in [1, max_n]"));
            }
            let est = payoff(kappa, n, lambda_s, lambda_c, &sim)?;
            let mut t = ResultTable::new(
                &[
                    "d",
                    "kappa",
                    "n",
                    "utility",
                    "std_error",
                    "search_cost",
                    "comm_cost",
                    "payoff",
                ],
                p.into_config(kind),
                Some(sim.seed()),
            );
            t.push(vec![
                dim.get() as f64,
                kappa.get(),
                n as f64,
                est.components.utility,
                est.std_error,
                est.components.search_cost,
                est.components.comm_cost,
                est.mean,
            ]);
            Ok(t)
        }
        ExperimentKind::FiniteSweep => {
            let dim = p.dim("d", Some("10"))?;
            let lambda_s = p.nonnegative("lambda_s", Some("0.1"))?;
            let lambda_c = p.nonnegative("lambda_c", Some("0.05"))?;
            let sim = p.sim(dim, "5000", "1000")?;
            let kappas = if p.has("kappa_grid") {
                p.text("kappa_grid", None)?
                    .split(',')
                    .map(|s| {
                        let k = Params::parse::<f64>("kappa_grid", s)?;
                        Precision::new(k).map_err(|e| as_config("kappa_grid", e))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                default_kappa_grid(dim)
            };
            let ns = if p.has("n_grid") {
                p.text("n_grid", None)?
                    .split(',')
                    .map(|s| Params::parse::<u64>("n_grid", s))
                    .collect::<Result<Vec<_>>>()?
            } else {
                default_n_grid(dim, sim.max_n())
            };
            if ns.iter().any(|&n| n == 0 || n > sim.max_n()) {
                return Err(Error::config("n_grid", "entries must be in [1, max_n]"));
            }
            let cells = evaluate_grid(lambda_s, lambda_c, &sim, &kappas, &ns)?;
            let (best, _) = crate::finite_sim::optimize_from_cells(&cells);
            let mut t = ResultTable::new(
                &[
                    "kappa",
                    "n",
                    "payoff",
                    "std_error",
                    "utility",
                    "search_cost",
                    "comm_cost",
                    "is_optimal",
                ],
                p.into_config(kind),
                Some(sim.seed()),
            );
            for (i, c) in cells.iter().enumerate() {
                t.push(vec![
                    c.policy.kappa,
                    c.policy.n as f64,
                    c.estimate.mean,
                    c.estimate.std_error,
                    c.estimate.components.utility,
                    c.estimate.components.search_cost,
                    c.estimate.components.comm_cost,
                    bool_code(i == best),
                ]);
            }
            Ok(t)
        }
        ExperimentKind::GapSweep => {
            let c = costs(
                p.positive("c_s", Some("1"))?,
                p.positive("c_c", Some("0.5"))?,
            )?;
            let ds = p
                .text("d_list", Some("10,20,40"))?
                .split(',')
                .map(|s| to_dim("d_list", Params::parse::<u64>("d_list", s)?))
                .collect::<Result<Vec<_>>>()?;
            let mode = match p
                .choice("mode", "joint", &["joint", "search", "comm"])?
                .as_str()
            {
                "joint" => GapMode::Joint,
                "search" => GapMode::SearchOnly,
                _ => GapMode::CommOnly,
            };
            let sim = p.sim(ds[0], "2000", "1000")?;
            let mut t = ResultTable::new(
                &[
                    "d",
                    "mode",
                    "kappa_opt",
                    "n_opt",
                    "p_opt",
                    "se_opt",
                    "kappa_asym",
                    "n_asym",
                    "p_asym",
                    "se_asym",
                    "gap",
                    "asym_capped",
                ],
                p.into_config(kind),
                Some(sim.seed()),
            );
            for dim in ds {
                let g = performance_gap(c, &sim.with_dim(dim), mode)?;
                t.push(vec![
                    g.d as f64,
                    mode.code() as f64,
                    g.policy_opt.kappa,
                    g.policy_opt.n as f64,
                    g.p_opt.mean,
                    g.p_opt.std_error,
                    g.policy_asym.kappa,
                    g.policy_asym.n as f64,
                    g.p_asym.mean,
                    g.p_asym.std_error,
                    g.gap,
                    bool_code(g.asym_capped),
                ]);
            }
            Ok(t)
        }
        ExperimentKind::WeightedSolve => {
            let mu = p.real("mu", Some("0.7071067811865476"))?;
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::config("mu", "must lie strictly between 0 and 1"));
            }
            let d1 = p.dim("d1", Some("20"))?;
            let d2 = p.dim("d2", Some("20"))?;
            let lambda_s = p.positive("lambda_s", Some("0.05"))?;
            let l1 = p.positive("lambda_1c", Some("0.0025"))?;
            let l2 = p.positive("lambda_2c", Some("1"))?;
            let simulate = p.choice("simulate", "false", &["true", "false"])? == "true";
            let (f1, f2) = (d1.get() as f64, d2.get() as f64);
            let s = weighted_solve(
                mu,
                d1.get(),
                d2.get(),
                costs(f1 * lambda_s, f1 * l1)?,
                costs(f2 * lambda_s, f2 * l2)?,
            )?;
            let mut header = vec![
                "subspace",
                "weight",
                "c_s",
                "c_c",
                "rho_star",
                "alpha_star",
                "value",
                "regime",
                "kappa",
                "n",
            ];
            let w1 = mu * mu;
            let mut rows = vec![
                vec![
                    1.0,
                    w1,
                    f1 * lambda_s / w1,
                    f1 * l1 / w1,
                    s.first.policy.rho(),
                    s.first.policy.alpha(),
                    s.first.value,
                    s.first.regime.code() as f64,
                    s.first_policy.kappa,
                    s.first_policy.n as f64,
                ],
                vec![
                    2.0,
                    1.0 - w1,
                    f2 * lambda_s / (1.0 - w1),
                    f2 * l2 / (1.0 - w1),
                    s.second.policy.rho(),
                    s.second.policy.alpha(),
                    s.second.value,
                    s.second.regime.code() as f64,
                    s.second_policy.kappa,
                    s.second_policy.n as f64,
                ],
            ];
            let mut seed = None;
            if simulate {
                let sim = p.sim(d1, "2000", "1000000")?;
                seed = Some(sim.seed());
                let est = weighted_payoff(
                    mu,
                    (s.first_policy.precision(), s.second_policy.precision()),
                    (s.first_policy.n, s.second_policy.n),
                    (lambda_s, l1, l2),
                    (d1, d2),
                    &sim,
                )?;
                header.extend(["mc_payoff", "mc_std_error"]);
                rows[0].extend([est.first.mean, est.first.std_error]);
                rows[1].extend([est.second.mean, est.second.std_error]);
                rows.push(vec![
                    0.0,
                    1.0,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    s.value,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    est.combined.mean,
                    est.combined.std_error,
                ]);
            } else {
                rows.push(vec![
                    0.0,
                    1.0,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                    s.value,
                    f64::NAN,
                    f64::NAN,
                    f64::NAN,
                ]);
            }
            let mut t = ResultTable::new(&header, p.into_config(kind), seed);
            rows.into_iter().for_each(|r| t.push(r));
            Ok(t)
        }
        ExperimentKind::SwitchingCurve => {
            let cs = p.positive_list("c_s_grid", Some("0.5,1,1.5,2"))?;
            let mode = match p
                .choice("mode", "posterior", &["posterior", "tilted"])?
                .as_str()
            {
                "posterior" => SwitchMode::Posterior,
                _ => SwitchMode::Tilted,
            };
            let mut t = emit_switching_curve(&cs, mode)?;
            t.config = p.into_config(kind);
            Ok(t)
        }
    }
}

fn product(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchMode {
    Posterior,
    Tilted,
}

/// Communication-cost threshold above which the optimum stops communicating,
/// per c_s. Columns: c_s, threshold, bracketed.
pub fn emit_switching_curve(c_s_grid: &[f64], mode: SwitchMode) -> Result<ResultTable> {
    if c_s_grid.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(Error::config(
            "c_s_grid",
            "all entries must be finite and > 0",
        ));
    }
    if c_s_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::config("c_s_grid", "must be sorted ascending"));
    }
    let grid = c_s_grid
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mode_name = match mode {
        SwitchMode::Posterior => "posterior",
        SwitchMode::Tilted => "tilted",
    };
    let config = ExperimentConfig::new(ExperimentKind::SwitchingCurve)
        .with("c_s_grid", grid)
        .with("mode", mode_name);
    let rows: Vec<Vec<f64>> = c_s_grid
        .par_iter()
        .map(|&c_s| match mode {
            SwitchMode::Tilted => Ok(vec![c_s, c_s, 1.0]),
            SwitchMode::Posterior => {
                let t = switching_threshold(c_s)?;
                Ok(vec![c_s, t.threshold, bool_code(t.bracketed)])
            }
        })
        .collect::<Result<_>>()?;
    let mut t = ResultTable::new(&["c_s", "threshold", "bracketed"], config, None);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}
