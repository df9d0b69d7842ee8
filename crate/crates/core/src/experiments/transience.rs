//! Effective resistance growth in three regimes.
//!
//! Each trial samples a WUSF `F` on `B_{2 max n}` (from a padded wired tree),
//! a second independent forest `F'` and box percolation φ on the same box,
//! then measures `R(r) = R_eff(0 ↔ ∂B_r)` for `r ∈ {n, 2n}` in
//! (a) `F`, (b) `F ∪ F'` and (c) `F ∪ φ`. Bounded increments
//! `R(2n) − R(n)` indicate transience, growing ones recurrence.

use std::fmt;

use serde::Serialize;
use serde_json::json;

use super::scaling::check_common;
use super::{num, precondition, run_trials, ExperimentError, Report, TrialRecord};
use crate::boxperc::{open_edges, CellLaw};
use crate::forest::sample_wusf;
use crate::lattice::{EdgeSet, Point, Window};
use crate::resistance::{reff_to_boundary, SolverOptions};
use crate::seed::{self, tag};
use crate::stats::{bootstrap_median, MedianEstimate};

const RESAMPLES: usize = 2000;
const LEVEL: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SingleForest,
    TwoForests,
    ForestAndBoxes,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::SingleForest, Regime::TwoForests, Regime::ForestAndBoxes];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SingleForest => "single-forest",
            Regime::TwoForests => "two-forests",
            Regime::ForestAndBoxes => "forest-and-boxes",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransienceConfig {
    pub dim: usize,
    pub k: i64,
    pub eps: f64,
    pub n_list: Vec<i64>,
    /// Padding of the wired tree around `B_{2 max n}`; `None` means `max n`.
    pub padding: Option<i64>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for TransienceConfig {
    fn default() -> Self {
        TransienceConfig {
            dim: 3,
            k: 1,
            eps: 0.25,
            n_list: vec![8, 16, 32],
            padding: None,
            trials: 50,
            seed: 0,
            tol: 1e-8,
        }
    }
}

/// One resistance pair for one regime and one `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub regime: Regime,
    pub n: i64,
    pub r_n: f64,
    pub r_2n: f64,
    pub increment: f64,
    pub iterations: usize,
    pub unknowns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransienceOutcome {
    pub measurements: Vec<Measurement>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub regime: Regime,
    pub n: i64,
    pub r_n: MedianEstimate,
    pub r_2n: MedianEstimate,
    pub increment: MedianEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransienceReport {
    pub config: TransienceConfig,
    pub radius: i64,
    pub padding: i64,
    pub rows: Vec<RegimeRow>,
    pub records: Vec<TrialRecord<TransienceOutcome>>,
}

impl TransienceReport {
    pub fn row(&self, regime: Regime, n: i64) -> Option<&RegimeRow> {
        self.rows.iter().find(|r| r.regime == regime && r.n == n)
    }
}

fn measure(edges: &EdgeSet, regime: Regime, n: i64, opts: &SolverOptions) -> Result<Measurement, ExperimentError> {
    let origin = Point::origin(edges.window().dim());
    let a = reff_to_boundary(edges, &origin, n, opts)?;
    let b = reff_to_boundary(edges, &origin, 2 * n, opts)?;
    if a.is_infinite() || b.is_infinite() {
        return Err(ExperimentError::Stranded(origin));
    }
    Ok(Measurement {
        regime,
        n,
        r_n: a.resistance,
        r_2n: b.resistance,
        increment: b.resistance - a.resistance,
        iterations: a.iterations + b.iterations,
        unknowns: a.unknowns.max(b.unknowns),
    })
}

pub fn run_transience_probe(cfg: &TransienceConfig) -> Result<TransienceReport, ExperimentError> {
    check_common(cfg.dim, cfg.k, cfg.eps)?;
    precondition(cfg.dim >= 3, || format!("transience needs d >= 3, got {}", cfg.dim))?;
    precondition(!cfg.n_list.is_empty(), || "empty n list".into())?;
    precondition(cfg.n_list.iter().all(|&n| n >= 1), || {
        "every n must be at least 1".into()
    })?;
    precondition(cfg.tol > 0.0, || format!("tolerance {} must be positive", cfg.tol))?;
    let max_n = *cfg.n_list.iter().max().expect("non-empty");
    let radius = 2 * max_n;
    let padding = cfg.padding.unwrap_or(max_n);
    precondition(padding >= 0, || format!("padding {padding} must be non-negative"))?;
    let window = Window::cube(cfg.dim, radius);
    let opts = SolverOptions {
        tol: cfg.tol,
        ..SolverOptions::default()
    };

    let records = run_trials(cfg.trials, cfg.seed, &[tag::FOREST], |i, ts| {
        log::debug!("transience trial {i}");
        let single = sample_wusf(&window, padding, seed::derive(ts, &[tag::FOREST]));
        let mut two = single.clone();
        two.union_with(&sample_wusf(&window, padding, seed::derive(ts, &[tag::SECOND_FOREST])));
        let mut boxes = single.clone();
        boxes.union_with(&open_edges(
            &window,
            cfg.k,
            cfg.eps,
            seed::derive(ts, &[tag::PHI]),
            CellLaw::Lattice,
        )?);
        let mut measurements = Vec::new();
        for &n in &cfg.n_list {
            for (regime, edges) in Regime::ALL.iter().zip([&single, &two, &boxes]) {
                measurements.push(measure(edges, *regime, n, &opts)?);
            }
        }
        Ok(TransienceOutcome { measurements })
    })?;

    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        for regime in Regime::ALL {
            let pick = |f: fn(&Measurement) -> f64| -> Vec<f64> {
                records
                    .iter()
                    .flat_map(|r| r.outcome.measurements.iter())
                    .filter(|m| m.regime == regime && m.n == n)
                    .map(f)
                    .collect()
            };
            let boot = |what: u64, v: Vec<f64>| {
                bootstrap_median(
                    &v,
                    RESAMPLES,
                    LEVEL,
                    seed::derive(cfg.seed, &[tag::BOOTSTRAP, n as u64, regime as u64, what]),
                )
            };
            rows.push(RegimeRow {
                regime,
                n,
                r_n: boot(0, pick(|m| m.r_n)),
                r_2n: boot(1, pick(|m| m.r_2n)),
                increment: boot(2, pick(|m| m.increment)),
            });
        }
    }
    Ok(TransienceReport {
        config: cfg.clone(),
        radius,
        padding,
        rows,
        records,
    })
}

impl Report for TransienceReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "d",
            "k",
            "eps",
            "n",
            "regime",
            "trials",
            "median_r_n",
            "r_n_ci_low",
            "r_n_ci_high",
            "median_r_2n",
            "median_increment",
            "increment_ci_low",
            "increment_ci_high",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let c = &self.config;
        self.rows
            .iter()
            .map(|r| {
                vec![
                    c.dim.to_string(),
                    c.k.to_string(),
                    num(c.eps),
                    r.n.to_string(),
                    r.regime.to_string(),
                    c.trials.to_string(),
                    num(r.r_n.median),
                    num(r.r_n.ci_low),
                    num(r.r_n.ci_high),
                    num(r.r_2n.median),
                    num(r.increment.median),
                    num(r.increment.ci_low),
                    num(r.increment.ci_high),
                ]
            })
            .collect()
    }

    fn summary(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "radius": self.radius,
            "padding": self.padding,
            "rows": self.rows,
            "trials": self.records,
        })
    }
}
