//! Coupling of the thinned forest with box percolation on one edge per cell.
//!
//! `H` holds one uniform edge per cell, hence is acyclic. Its edges are
//! revealed in fresh-endpoint order; at step `n` the exact conditional
//! probability `p_n` that the edge lies in the wired tree, given the earlier
//! answers, is compared against the same uniform `u_n` as the box-percolation
//! rule `u_n < 1/(2d)`. Whenever `p_n ≥ 1/(2d)` the box-percolation sample is
//! contained in the forest sample.
//!
//! Probabilities are screened in floating point; any comparison closer than
//! [`MARGIN`] is settled with exact rational arithmetic.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::RngCore;
use serde::Serialize;
use serde_json::json;

use super::{num, precondition, run_trials, ExperimentError, Report, TrialRecord};
use crate::boxperc::sample_box_percolation;
use crate::forest::{order_forest_edges, Boundary};
use crate::lattice::{Edge, Window};
use crate::oracles::{conditional_edge_probability, conditional_edge_probability_f64, DenseNetwork};
use crate::seed::{self, tag};
use crate::stats::{binomial_band, Proportion};

/// Float comparisons closer than this are redone exactly.
pub const MARGIN: f64 = 1e-9;

const TWO_53: u64 = 1 << 53;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationConfig {
    pub dim: usize,
    /// The window is `[-radius, radius]^dim`.
    pub radius: i64,
    pub k: i64,
    /// Thinning parameter of the forest; box percolation runs at `eps / (2d)`.
    pub eps: f64,
    pub trials: usize,
    pub seed: u64,
    /// Decide every step with exact arithmetic instead of screening.
    pub exact: bool,
}

impl Default for DominationConfig {
    fn default() -> Self {
        DominationConfig {
            dim: 2,
            radius: 4,
            k: 1,
            eps: 1.0,
            trials: 10_000,
            seed: 0,
            exact: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominationOutcome {
    pub h_size: usize,
    pub forest_open: usize,
    pub phi_open: usize,
    /// Smallest conditional probability met along the ordering.
    pub min_p: f64,
    /// Steps whose exact probability fell below `1/(2d)`.
    pub below_bound: usize,
    pub contained: bool,
    /// Steps that needed exact arithmetic.
    pub exact_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub config: DominationConfig,
    pub bound: f64,
    pub steps: u64,
    pub containment: Proportion,
    pub min_p: f64,
    pub below_bound: u64,
    pub phi_open: u64,
    pub phi_band: (f64, f64),
    pub phi_within_band: bool,
    pub records: Vec<TrialRecord<DominationOutcome>>,
}

/// `m / 2^53 < p` exactly.
fn unit_below(m: u64, p: &BigRational) -> bool {
    BigInt::from(m) * p.denom() < p.numer() * BigInt::from(TWO_53)
}

pub fn run_domination_coupling(cfg: &DominationConfig) -> Result<DominationReport, ExperimentError> {
    let d = cfg.dim;
    precondition((2..=crate::lattice::MAX_DIM).contains(&d), || {
        format!("dimension {d} outside 2..=5")
    })?;
    precondition(cfg.k >= 1, || format!("k = {} must be at least 1", cfg.k))?;
    precondition((0.0..=1.0).contains(&cfg.eps), || {
        format!("eps = {} outside [0, 1]", cfg.eps)
    })?;
    let window = Window::cube(d, cfg.radius);
    let inside = crate::lattice::cell_centers_meeting(&window, cfg.k)
        .iter()
        .filter(|z| (0..d).all(|l| z.get(l) - cfg.k >= -cfg.radius && z.get(l) + cfg.k <= cfg.radius))
        .count();
    precondition(inside >= 4, || {
        format!(
            "window radius {} holds {inside} whole cells, need at least 4",
            cfg.radius
        )
    })?;
    let net = DenseNetwork::from_window(&window, Boundary::Wired);
    precondition(net.num_vertices() <= crate::oracles::DEFAULT_LIMIT, || {
        format!("{} vertices exceed the oracle limit", net.num_vertices())
    })?;
    let ids: HashMap<Edge, usize> = (0..net.num_edges())
        .map(|id| (net.label(id).expect("window network edges are labelled"), id))
        .collect();
    let bound = BigRational::new(1.into(), (2 * d as i64).into());
    let bound_f = 1.0 / (2 * d) as f64;

    let records = run_trials(cfg.trials, cfg.seed, &[tag::COUPLING], |_, ts| {
        let h = sample_box_percolation(&window, cfg.k, 1.0, seed::derive(ts, &[tag::PHI]))?;
        let h_edges: Vec<Edge> = h.cells().iter().map(|c| c.edge).collect();
        let order = order_forest_edges(&h_edges)?;
        let mut rng = seed::rng(seed::derive(ts, &[tag::COUPLING]));
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let mut out = DominationOutcome {
            h_size: order.len(),
            forest_open: 0,
            phi_open: 0,
            min_p: f64::INFINITY,
            below_bound: 0,
            contained: true,
            exact_steps: 0,
        };
        for e in &order {
            let id = ids[e];
            let m = rng.next_u64() >> 11;
            let thin = rng.next_u64() >> 11;
            let keep = (thin as f64) / (TWO_53 as f64) < cfg.eps;
            let u = m as f64 / TWO_53 as f64;

            let mut exact: Option<BigRational> = None;
            let mut get_exact = |out: &mut DominationOutcome| -> Result<BigRational, ExperimentError> {
                if exact.is_none() {
                    out.exact_steps += 1;
                    exact = Some(conditional_edge_probability(&net, id, &a, &b)?);
                }
                Ok(exact.clone().expect("just computed"))
            };
            let p_f = if cfg.exact {
                get_exact(&mut out)?.to_f64().unwrap_or(f64::NAN)
            } else {
                conditional_edge_probability_f64(&net, id, &a, &b)?
            };
            let in_forest = if cfg.exact || (u - p_f).abs() <= MARGIN {
                unit_below(m, &get_exact(&mut out)?)
            } else {
                u < p_f
            };
            let min_here = if cfg.exact || p_f <= bound_f + MARGIN {
                let p = get_exact(&mut out)?;
                if p < bound {
                    out.below_bound += 1;
                }
                p.to_f64().unwrap_or(f64::NAN)
            } else {
                p_f
            };
            out.min_p = out.min_p.min(min_here);
            let in_phi = m * (2 * d as u64) < TWO_53;

            let f_open = in_forest && keep;
            let phi_open = in_phi && keep;
            out.forest_open += f_open as usize;
            out.phi_open += phi_open as usize;
            if phi_open && !f_open {
                out.contained = false;
            }
            if in_forest {
                a.push(id);
            } else {
                b.push(id);
            }
        }
        Ok(out)
    })?;

    let steps: u64 = records.iter().map(|r| r.outcome.h_size as u64).sum();
    let phi_open: u64 = records.iter().map(|r| r.outcome.phi_open as u64).sum();
    let rate = cfg.eps / (2 * d) as f64;
    let phi_band = binomial_band(steps, rate, 0.999);
    let contained = records.iter().filter(|r| r.outcome.contained).count() as u64;
    Ok(DominationReport {
        config: cfg.clone(),
        bound: bound_f,
        steps,
        containment: Proportion::new(contained, cfg.trials as u64),
        min_p: records.iter().map(|r| r.outcome.min_p).fold(f64::INFINITY, f64::min),
        below_bound: records.iter().map(|r| r.outcome.below_bound as u64).sum(),
        phi_open,
        phi_band,
        phi_within_band: phi_band.0 <= phi_open as f64 && phi_open as f64 <= phi_band.1,
        records,
    })
}

impl Report for DominationReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "d",
            "radius",
            "k",
            "eps",
            "trials",
            "steps",
            "contained",
            "containment_rate",
            "ci_low",
            "ci_high",
            "min_p",
            "bound",
            "below_bound",
            "phi_open",
            "phi_band_low",
            "phi_band_high",
            "phi_within_band",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let c = &self.config;
        vec![vec![
            c.dim.to_string(),
            c.radius.to_string(),
            c.k.to_string(),
            num(c.eps),
            c.trials.to_string(),
            self.steps.to_string(),
            self.containment.successes.to_string(),
            num(self.containment.estimate),
            num(self.containment.ci_low),
            num(self.containment.ci_high),
            num(self.min_p),
            num(self.bound),
            self.below_bound.to_string(),
            self.phi_open.to_string(),
            num(self.phi_band.0),
            num(self.phi_band.1),
            self.phi_within_band.to_string(),
        ]]
    }

    fn summary(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "bound": self.bound,
            "steps": self.steps,
            "containment": self.containment,
            "min_p": self.min_p,
            "below_bound": self.below_bound,
            "phi_open": self.phi_open,
            "phi_band": self.phi_band,
            "phi_within_band": self.phi_within_band,
            "trials": self.records,
        })
    }
}
