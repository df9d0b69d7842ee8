//! Probability that `B_n` is connected inside `(Λ ∪ φ_k(ε)) ∩ B_{2n}`.
//!
//! Λ is built once per `n` and kept fixed; trials resample only the box
//! percolation, drawn with the Z^d cell law.

use serde::Serialize;
use serde_json::json;

use super::{
    generate_lambda, merge_edges, num, precondition, run_trials, union_find_of, ExperimentError, LambdaSpec, Report,
    TrialRecord,
};
use crate::boxperc::{open_edges, CellLaw};
use crate::lattice::{Point, Window};
use crate::seed::{self, tag};
use crate::stats::Proportion;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingConfig {
    pub lambda: LambdaSpec,
    pub dim: usize,
    pub k: i64,
    pub eps: f64,
    pub n_list: Vec<i64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            lambda: LambdaSpec::default(),
            dim: 3,
            k: 1,
            eps: 0.25,
            n_list: vec![8, 16, 32],
            trials: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingOutcome {
    pub connected: bool,
    pub open_edges: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub n: i64,
    pub lambda_edges: usize,
    pub connection: Proportion,
    pub failure: Proportion,
    pub records: Vec<TrialRecord<ScalingOutcome>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub rows: Vec<ScalingRow>,
}

pub(crate) fn check_common(dim: usize, k: i64, eps: f64) -> Result<(), ExperimentError> {
    precondition((2..=crate::lattice::MAX_DIM).contains(&dim), || {
        format!("dimension {dim} outside 2..=5")
    })?;
    precondition(k >= 1, || format!("k = {k} must be at least 1"))?;
    precondition((0.0..=1.0).contains(&eps), || format!("eps = {eps} outside [0, 1]"))
}

pub fn run_connection_scaling(cfg: &ScalingConfig) -> Result<ScalingReport, ExperimentError> {
    check_common(cfg.dim, cfg.k, cfg.eps)?;
    precondition(!cfg.n_list.is_empty(), || "empty n list".into())?;
    precondition(cfg.n_list.iter().all(|&n| n >= 1), || {
        "every n must be at least 1".into()
    })?;
    let origin = Point::origin(cfg.dim);
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        log::info!("connection scaling: n = {n}");
        let outer = Window::ball(&origin, 2 * n);
        let inner = Window::ball(&origin, n);
        let lambda = generate_lambda(&cfg.lambda, &outer, seed::derive(cfg.seed, &[tag::LAMBDA, n as u64]))?;
        let base = union_find_of(&lambda);
        let inner_ids: Vec<usize> = inner
            .vertices()
            .map(|p| outer.index_of(&p).expect("inner box inside outer box"))
            .collect();
        let records = run_trials(cfg.trials, cfg.seed, &[tag::PHI, n as u64], |_, ts| {
            let phi = open_edges(&outer, cfg.k, cfg.eps, ts, CellLaw::Lattice)?;
            let mut uf = base.clone();
            merge_edges(&mut uf, &phi);
            let root = uf.find(inner_ids[0]);
            let connected = inner_ids.iter().all(|&i| uf.find(i) == root);
            Ok(ScalingOutcome {
                connected,
                open_edges: phi.len(),
            })
        })?;
        let ok = records.iter().filter(|r| r.outcome.connected).count() as u64;
        let t = cfg.trials as u64;
        rows.push(ScalingRow {
            n,
            lambda_edges: lambda.len(),
            connection: Proportion::new(ok, t),
            failure: Proportion::new(t - ok, t),
            records,
        });
    }
    Ok(ScalingReport {
        config: cfg.clone(),
        rows,
    })
}

impl Report for ScalingReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "lambda",
            "d",
            "k",
            "eps",
            "n",
            "trials",
            "connected",
            "p_connect",
            "failures",
            "p_fail",
            "fail_ci_low",
            "fail_ci_high",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let c = &self.config;
        self.rows
            .iter()
            .map(|r| {
                vec![
                    c.lambda.to_string(),
                    c.dim.to_string(),
                    c.k.to_string(),
                    num(c.eps),
                    r.n.to_string(),
                    c.trials.to_string(),
                    r.connection.successes.to_string(),
                    num(r.connection.estimate),
                    r.failure.successes.to_string(),
                    num(r.failure.estimate),
                    num(r.failure.ci_low),
                    num(r.failure.ci_high),
                ]
            })
            .collect()
    }

    fn summary(&self) -> serde_json::Value {
        json!({ "config": self.config, "rows": self.rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lambda: LambdaSpec, eps: f64) -> ScalingConfig {
        ScalingConfig {
            lambda,
            dim: 2,
            k: 1,
            eps,
            n_list: vec![1, 2, 3],
            trials: 20,
            seed: 11,
        }
    }

    #[test]
    fn full_lattice_always_connects() {
        let r = run_connection_scaling(&cfg(LambdaSpec::FullLattice, 0.3)).unwrap();
        assert!(r.rows.iter().all(|row| row.connection.successes == 20));
    }

    #[test]
    fn parallel_lines_never_connect_alone() {
        let r = run_connection_scaling(&cfg(LambdaSpec::AxisLines { axis: 0 }, 0.0)).unwrap();
        assert!(r.rows.iter().all(|row| row.connection.successes == 0));
    }

    #[test]
    fn reproducible_and_renders_one_row_per_n() {
        let c = cfg(LambdaSpec::AxisLines { axis: 1 }, 0.8);
        let a = run_connection_scaling(&c).unwrap();
        let b = run_connection_scaling(&c).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.csv().lines().count(), 1 + 3);
    }

    #[test]
    fn bad_parameters() {
        let mut c = cfg(LambdaSpec::FullLattice, 0.5);
        c.k = 0;
        assert!(run_connection_scaling(&c).is_err());
        c.k = 1;
        c.eps = 2.0;
        assert!(run_connection_scaling(&c).is_err());
    }
}
