//! Experiment drivers.
//!
//! Every driver takes a config, runs independent trials keyed by derived
//! seeds (possibly in parallel), and aggregates them in trial order, so the
//! same config and seed always produce the same report. Reports render as CSV
//! rows and a JSON summary; neither contains timings.

mod domination;
mod field;
mod lambda;
mod scaling;
mod sprinkling;
mod transience;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::boxperc::BoxPercError;
use crate::connect::ConnectError;
use crate::forest::ForestError;
use crate::lattice::{EdgeSet, LatticeError, Point};
use crate::oracles::OracleError;
use crate::resistance::ResistanceError;
use crate::seed;
use crate::text::TextError;
use crate::unionfind::UnionFind;

pub use domination::{run_domination_coupling, DominationConfig, DominationOutcome, DominationReport};
pub use field::{
    run_renormalized_field, CorrelationRow, FieldConfig, FieldOutcome, FieldReport, RenormalizedFieldSample,
};
pub use lambda::{generate_lambda, validate_everywhere_percolating, LambdaSpec};
pub use scaling::{run_connection_scaling, ScalingConfig, ScalingOutcome, ScalingReport, ScalingRow};
pub use sprinkling::{
    run_special_component, run_sprinkling, LayerRow, SpecialConfig, SpecialOutcome, SpecialReport, SprinklingConfig,
    SprinklingOutcome, SprinklingReport,
};
pub use transience::{
    run_transience_probe, Measurement, Regime, RegimeRow, TransienceConfig, TransienceOutcome, TransienceReport,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("lambda is not everywhere percolating: {0} does not reach the window boundary")]
    Stranded(Point),
    #[error("cannot read lambda file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    BoxPerc(#[from] BoxPercError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Connect(#[from] ConnectError),
    #[error(transparent)]
    Resistance(#[from] ResistanceError),
}

pub(crate) fn precondition(ok: bool, what: impl FnOnce() -> String) -> Result<(), ExperimentError> {
    if ok {
        Ok(())
    } else {
        Err(ExperimentError::Precondition(what()))
    }
}

/// One trial's outcome with the seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord<T> {
    pub trial: usize,
    pub seed: u64,
    pub outcome: T,
}

/// Seed of trial `index` in the stream `tags` under `seed`.
pub fn trial_seed(seed: u64, tags: &[u64], index: usize) -> u64 {
    let mut path = tags.to_vec();
    path.push(seed::tag::TRIAL);
    path.push(index as u64);
    seed::derive(seed, &path)
}

/// Run `trials` independent trials on the current rayon pool, in trial order.
pub fn run_trials<T, F>(trials: usize, seed: u64, tags: &[u64], f: F) -> Result<Vec<TrialRecord<T>>, ExperimentError>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T, ExperimentError> + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, tags, i);
            f(i, s).map(|outcome| TrialRecord {
                trial: i,
                seed: s,
                outcome,
            })
        })
        .collect()
}

/// Common rendering of experiment reports.
pub trait Report {
    /// Column names of the CSV body.
    fn csv_header(&self) -> Vec<&'static str>;
    /// CSV rows, one per (config, n, layer) combination.
    fn csv_rows(&self) -> Vec<Vec<String>>;
    /// Full JSON summary, config first.
    fn summary(&self) -> serde_json::Value;

    fn csv(&self) -> String {
        let mut out = self.csv_header().join(",");
        out.push('\n');
        for row in self.csv_rows() {
            writeln!(out, "{}", row.join(",")).expect("writing to a String");
        }
        out
    }
}

/// Union-find over the window of `edges` with those edges merged.
pub(crate) fn union_find_of(edges: &EdgeSet) -> UnionFind {
    let mut uf = UnionFind::new(edges.window().num_vertices());
    merge_edges(&mut uf, edges);
    uf
}

/// Merge `edges` into `uf`, whose elements are indices of `edges.window()`.
pub(crate) fn merge_edges(uf: &mut UnionFind, edges: &EdgeSet) {
    let w = edges.window();
    for slot in edges.slots() {
        let (a, b) = w.slot_endpoints(slot);
        uf.union(a, b);
    }
}

/// Shortest round-tripping text for a float in CSV cells.
pub(crate) fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x}")
    }
}

/// Integer square root, if `n` is a perfect square.
pub(crate) fn exact_sqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt().round() as i64;
    (r - 1..=r + 1).find(|&s| s >= 0 && s * s == n)
}
