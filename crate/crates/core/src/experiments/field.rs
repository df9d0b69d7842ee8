//! Renormalized site field.
//!
//! For a coarse site `s`, `X_s = 1` when `ns` is joined to every
//! `ns ± n e_i` inside `B^{ns}_{2n}` using only Λ ∪ φ. Box percolation is
//! drawn once per trial with the Z^d cell law and each box sees its
//! restriction, so overlapping boxes share cells and the field carries its
//! true finite-range dependence. Sites sit on the first coordinate axis at
//! `s = 0, e_1, 2e_1, …`.

use serde::Serialize;
use serde_json::json;

use super::scaling::check_common;
use super::{generate_lambda, num, precondition, run_trials, union_find_of, ExperimentError};
use super::{LambdaSpec, Report, TrialRecord};
use crate::boxperc::{open_edges, CellLaw};
use crate::lattice::{EdgeSet, Point, Window};
use crate::seed::{self, tag};
use crate::stats::{pearson, Proportion};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldConfig {
    pub lambda: LambdaSpec,
    pub dim: usize,
    pub k: i64,
    pub eps: f64,
    pub n: i64,
    /// Number of coarse sites along the first axis.
    pub sites: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            lambda: LambdaSpec::default(),
            dim: 3,
            k: 1,
            eps: 0.25,
            n: 8,
            sites: 6,
            trials: 1000,
            seed: 0,
        }
    }
}

/// One draw of the field on the coarse sites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RenormalizedFieldSample {
    pub n: i64,
    pub sites: Vec<Point>,
    pub bits: Vec<bool>,
}

pub type FieldOutcome = RenormalizedFieldSample;

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationRow {
    pub distance: usize,
    pub pairs: usize,
    pub correlation: f64,
    pub threshold: f64,
    pub below_threshold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub config: FieldConfig,
    pub marginals: Vec<Proportion>,
    /// Smallest per-site marginal.
    pub p_hat: f64,
    pub correlations: Vec<CorrelationRow>,
    pub records: Vec<TrialRecord<FieldOutcome>>,
}

/// Λ-components of one site box, reused across trials.
struct SiteBox {
    center: Point,
    local: Window,
    base: UnionFind,
}

impl SiteBox {
    fn new(lambda: &EdgeSet, center: Point, n: i64) -> Self {
        let local = Window::ball(&center, 2 * n);
        let base = union_find_of(&lambda.reindexed(&local));
        SiteBox { center, local, base }
    }

    /// `X_s` given the open box-percolation edges `phi` (on any window).
    fn bit(&self, phi: &EdgeSet, n: i64) -> bool {
        let mut uf = self.base.clone();
        for e in phi.iter() {
            if let (Some(a), Some(b)) = (self.local.index_of(&e.base()), self.local.index_of(&e.tip())) {
                uf.union(a, b);
            }
        }
        let root = uf.find(self.local.index_of(&self.center).expect("centre of its own box"));
        (0..self.center.dim()).all(|axis| {
            [-n, n].iter().all(|&delta| {
                let y = self
                    .local
                    .index_of(&self.center.shifted(axis, delta))
                    .expect("neighbour inside the box");
                uf.find(y) == root
            })
        })
    }
}

pub fn run_renormalized_field(cfg: &FieldConfig) -> Result<FieldReport, ExperimentError> {
    check_common(cfg.dim, cfg.k, cfg.eps)?;
    precondition(cfg.n > 2 * cfg.k, || {
        format!("need n > 2k, got n = {} and k = {}", cfg.n, cfg.k)
    })?;
    precondition(cfg.sites >= 1, || "at least one site is needed".into())?;
    let n = cfg.n;
    let d = cfg.dim;
    let sites: Vec<Point> = (0..cfg.sites as i64).map(|j| Point::origin(d).with(0, j)).collect();
    let lo = Point::splat(d, -2 * n);
    let hi = Point::splat(d, 2 * n).with(0, n * (cfg.sites as i64 - 1) + 2 * n);
    let window = Window::new(lo, hi)?;
    let lambda = generate_lambda(&cfg.lambda, &window, seed::derive(cfg.seed, &[tag::LAMBDA]))?;
    let boxes: Vec<SiteBox> = sites.iter().map(|s| SiteBox::new(&lambda, s.scaled(n), n)).collect();

    let records = run_trials(cfg.trials, cfg.seed, &[tag::PHI], |_, ts| {
        // The Z^d cell law makes this the restriction of one sample on Z^d.
        let phi = open_edges(&window, cfg.k, cfg.eps, ts, CellLaw::Lattice)?;
        Ok(RenormalizedFieldSample {
            n,
            sites: sites.clone(),
            bits: boxes.iter().map(|b| b.bit(&phi, n)).collect(),
        })
    })?;

    let t = cfg.trials as u64;
    let marginals: Vec<Proportion> = (0..cfg.sites)
        .map(|i| Proportion::new(records.iter().filter(|r| r.outcome.bits[i]).count() as u64, t))
        .collect();
    let p_hat = marginals.iter().map(|p| p.estimate).fold(f64::INFINITY, f64::min);
    let threshold = 3.0 / (cfg.trials as f64).sqrt();
    let correlations = (1..cfg.sites)
        .map(|dist| {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for r in &records {
                for i in 0..cfg.sites - dist {
                    xs.push(r.outcome.bits[i] as u8 as f64);
                    ys.push(r.outcome.bits[i + dist] as u8 as f64);
                }
            }
            let correlation = pearson(&xs, &ys);
            CorrelationRow {
                distance: dist,
                pairs: cfg.sites - dist,
                correlation,
                threshold,
                below_threshold: correlation.abs() < threshold,
            }
        })
        .collect();
    Ok(FieldReport {
        config: cfg.clone(),
        marginals,
        p_hat,
        correlations,
        records,
    })
}

impl FieldReport {
    pub fn correlation_at(&self, distance: usize) -> Option<&CorrelationRow> {
        self.correlations.iter().find(|c| c.distance == distance)
    }
}

impl Report for FieldReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "lambda",
            "d",
            "k",
            "eps",
            "n",
            "sites",
            "trials",
            "p_hat",
            "distance",
            "pairs",
            "correlation",
            "threshold",
            "below_threshold",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let c = &self.config;
        self.correlations
            .iter()
            .map(|r| {
                vec![
                    c.lambda.to_string(),
                    c.dim.to_string(),
                    c.k.to_string(),
                    num(c.eps),
                    c.n.to_string(),
                    c.sites.to_string(),
                    c.trials.to_string(),
                    num(self.p_hat),
                    r.distance.to_string(),
                    r.pairs.to_string(),
                    num(r.correlation),
                    num(r.threshold),
                    r.below_threshold.to_string(),
                ]
            })
            .collect()
    }

    fn summary(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "p_hat": self.p_hat,
            "marginals": self.marginals,
            "correlations": self.correlations,
            "trials": self.records,
        })
    }
}
