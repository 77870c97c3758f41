//! Grids of configurations and their Pareto fronts.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::InputDistribution;
use crate::error::{Error, Result};
use crate::metrics::{report_exhaustive, ErrorReport, Method};
use crate::montecarlo::{report_monte_carlo, SamplingPlan};
use crate::multiplier::MultiplierConfig;
use crate::report::{row_config, Row};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TRule {
    Explicit(Vec<u32>),
    /// Every `t` in `2..=n/2`.
    All,
    /// `t = n/2`.
    Halved,
}

impl TRule {
    pub fn splits(&self, n: u32) -> Vec<u32> {
        match self {
            TRule::Explicit(ts) => ts.clone(),
            TRule::All => (2..=n / 2).collect(),
            TRule::Halved => vec![n / 2],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub ns: Vec<u32>,
    pub t_rule: TRule,
    pub fix_settings: Vec<bool>,
    /// Widths up to the ceiling run exhaustively, wider ones by Monte Carlo.
    pub ceiling: u32,
    pub samples: u64,
    pub seed: u64,
}

impl SweepSpec {
    /// Configurations sorted by `(n, t, fix)`.
    pub fn configs(&self) -> Result<Vec<MultiplierConfig>> {
        let mut out = Vec::new();
        for &n in &self.ns {
            for t in self.t_rule.splits(n) {
                for &fix in &self.fix_settings {
                    out.push(MultiplierConfig::new(n, t, fix).map_err(|e| {
                        Error::Sweep(format!("invalid sweep entry n={n} t={t}: {e}"))
                    })?);
                }
            }
        }
        out.sort_by_key(|c| (c.n, c.t, c.fix_to_1));
        out.dedup();
        if out.is_empty() {
            return Err(Error::Sweep("sweep specification selects no configuration".into()));
        }
        Ok(out)
    }

    pub fn method_for(&self, n: u32) -> Method {
        if n <= self.ceiling {
            Method::Exhaustive
        } else {
            Method::MonteCarlo
        }
    }
}

pub fn evaluate_config(spec: &SweepSpec, cfg: &MultiplierConfig) -> Result<ErrorReport> {
    match spec.method_for(cfg.n) {
        Method::Exhaustive => {
            let u = InputDistribution::uniform(cfg.n)?;
            report_exhaustive(cfg, &u, &u, spec.ceiling)
        }
        _ => {
            let plan = SamplingPlan::uniform(cfg.n, spec.samples, spec.seed)?;
            Ok(report_monte_carlo(cfg, &plan)?.report)
        }
    }
}

/// Evaluates every configuration concurrently; the result is in
/// configuration order regardless of completion order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ErrorReport>> {
    spec.configs()?
        .par_iter()
        .map(|cfg| evaluate_config(spec, cfg))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParetoPoint {
    pub config: MultiplierConfig,
    pub method: String,
    pub er: f64,
    pub mae: f64,
    pub nmed: f64,
}

impl ParetoPoint {
    pub fn from_report(r: &ErrorReport) -> Self {
        Self {
            config: r.config,
            method: r.method.as_str().into(),
            er: r.er,
            mae: r.mae as f64,
            nmed: r.nmed,
        }
    }

    fn metrics(&self) -> [f64; 3] {
        [self.er, self.mae, self.nmed]
    }

    /// No worse in every metric and strictly better in one.
    pub fn dominates(&self, other: &ParetoPoint) -> bool {
        let (a, b) = (self.metrics(), other.metrics());
        a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
    }
}

fn sort_key(p: &ParetoPoint) -> (u32, u32, bool, bool, String) {
    (p.config.n, p.config.t, p.config.segmented, p.config.fix_to_1, p.method.clone())
}

/// Non-dominated points under minimisation of `(er, mae, nmed)`, ordered by
/// `(n, t)`.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut front: Vec<ParetoPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| q.dominates(p)))
        .cloned()
        .collect();
    front.sort_by_key(sort_key);
    front
}

/// Collects `er`, `mae` and `nmed` per configuration from tidy rows.
pub fn points_from_rows(rows: &[Row]) -> Result<Vec<ParetoPoint>> {
    let mut grouped: BTreeMap<(u32, u32, String, String), [Option<f64>; 3]> = BTreeMap::new();
    for row in rows {
        let slot = match row.metric.as_str() {
            "er" => 0,
            "mae" => 1,
            "nmed" => 2,
            _ => continue,
        };
        let value: f64 = row
            .value
            .parse()
            .map_err(|_| Error::Sweep(format!("bad value {:?} for {}", row.value, row.metric)))?;
        grouped
            .entry((row.n, row.t, row.fix.clone(), row.method.clone()))
            .or_default()[slot] = Some(value);
    }
    if grouped.is_empty() {
        return Err(Error::Sweep("table holds no er/mae/nmed rows".into()));
    }
    grouped
        .into_iter()
        .map(|((n, t, fix, method), m)| {
            let [Some(er), Some(mae), Some(nmed)] = m else {
                return Err(Error::Sweep(format!(
                    "n={n} t={t} fix={fix} {method}: needs er, mae and nmed"
                )));
            };
            let row = Row {
                n,
                t,
                fix,
                method: method.clone(),
                metric: String::new(),
                value: String::new(),
                samples: None,
                seed: None,
            };
            Ok(ParetoPoint { config: row_config(&row)?, method, er, mae, nmed })
        })
        .collect()
}
