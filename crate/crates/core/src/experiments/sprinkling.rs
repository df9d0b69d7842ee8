//! Spatial sprinkling across annuli.
//!
//! `H` keeps the components of Λ ∩ `B_{m+√n}` that meet `B_m` and reach
//! `∂B_{m+√n}`. Box percolation is then added one annulus at a time, with
//! `A_ℓ = A_{m + ℓ√n/L + 2k, m + (ℓ+1)√n/L}` for `ℓ = 0..L`, so that
//! `H_0 = H` and `H_{ℓ+1} = H_ℓ ∪ (φ ∩ A_ℓ)`. `K` counts the components that
//! contain a vertex of `H`; vertices touched only by φ do not count.
//!
//! The special-component driver works on `X = Λ ∩ B_{m+2√n}`, merges every
//! component avoiding `B_m` into one vertex and sprinkles the shifted annuli
//! `A'_ℓ`. Its headline event compares `U_{0,m}` after sprinkling
//! `A_{m+2k, m+2√n}` with `U_{m, m+2√n}(X)`.

use serde::Serialize;
use serde_json::json;

use super::scaling::check_common;
use super::{
    exact_sqrt, generate_lambda, merge_edges, num, precondition, run_trials, union_find_of, ExperimentError,
    LambdaSpec, Report, TrialRecord,
};
use crate::boxperc::{open_edges, CellLaw};
use crate::connect::{count_u, label_components, ISOLATED};
use crate::lattice::{Annulus, EdgeSet, Point, Window};
use crate::seed::{self, tag};
use crate::stats::Proportion;
use crate::unionfind::UnionFind;

/// Fresh Λ draws tried by the special-component driver before giving up.
const LAMBDA_ATTEMPTS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprinklingConfig {
    pub lambda: LambdaSpec,
    pub dim: usize,
    pub k: i64,
    pub eps: f64,
    pub m: i64,
    /// A perfect square.
    pub n: i64,
    /// Number of annuli; `None` means `4d`.
    pub layers: Option<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SprinklingConfig {
    fn default() -> Self {
        SprinklingConfig {
            lambda: LambdaSpec::default(),
            dim: 2,
            k: 1,
            eps: 1.0,
            m: 16,
            n: 16,
            layers: None,
            trials: 200,
            seed: 0,
        }
    }
}

impl SprinklingConfig {
    pub fn num_layers(&self) -> usize {
        self.layers.unwrap_or(4 * self.dim)
    }
}

pub type SpecialConfig = SprinklingConfig;

/// `A_ℓ` shifted outward by `shift`.
fn layer(origin: &Point, m: i64, shift: i64, root: i64, layers: usize, k: i64, l: usize) -> Annulus {
    let width = root as f64 / layers as f64;
    let base = (m + shift) as f64;
    Annulus::from_real(
        *origin,
        base + l as f64 * width + (2 * k) as f64,
        base + (l + 1) as f64 * width,
    )
}

/// `K(H_{ℓ+1}) ≤ max(K(H_ℓ) / n^{1/4}, 1)`, decided in integers.
fn decay_holds(before: usize, after: usize, n: i64) -> bool {
    after <= 1 || (after as u128).pow(4) * n as u128 <= (before as u128).pow(4)
}

/// Components of `uf` containing a marked vertex.
fn count_marked(uf: &mut UnionFind, marked: &[usize]) -> usize {
    let mut roots: Vec<usize> = marked.iter().map(|&v| uf.find(v)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Sprinkle `layers` annuli of `phi` into `uf`, returning `K` before and after each.
fn sprinkle(uf: &mut UnionFind, marked: &[usize], phi: &EdgeSet, annuli: &[Annulus]) -> Vec<usize> {
    let mut ks = vec![count_marked(uf, marked)];
    for a in annuli {
        merge_edges(uf, &phi.restricted(a));
        ks.push(count_marked(uf, marked));
    }
    ks
}

fn check_geometry(cfg: &SprinklingConfig, reach: i64) -> Result<i64, ExperimentError> {
    check_common(cfg.dim, cfg.k, cfg.eps)?;
    let root = exact_sqrt(cfg.n).filter(|_| cfg.n >= 1);
    let Some(root) = root else {
        return Err(ExperimentError::Precondition(format!(
            "n = {} is not a positive perfect square",
            cfg.n
        )));
    };
    precondition(cfg.n <= cfg.m, || {
        format!("need n <= m, got n = {} and m = {}", cfg.n, cfg.m)
    })?;
    let top = cfg.m + reach * root;
    let cap = 8 * cfg.dim as i64 * cfg.n;
    precondition(top <= cap, || format!("m + {reach}√n = {top} exceeds 8dn = {cap}"))?;
    precondition(cfg.num_layers() >= 1, || "at least one layer is needed".into())?;
    Ok(root)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprinklingOutcome {
    /// `K(H_0), …, K(H_L)`.
    pub k_seq: Vec<usize>,
    pub holds: Vec<bool>,
    pub connected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerRow {
    pub layer: usize,
    pub inner: i64,
    pub outer: i64,
    pub violations: Proportion,
    pub mean_k_before: f64,
    pub mean_k_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SprinklingReport {
    pub config: SprinklingConfig,
    pub layers: usize,
    pub h_components: usize,
    pub dropped_components: usize,
    /// Layers too thin to hold any edge once the `2k` buffer is removed.
    pub empty_layers: usize,
    pub rows: Vec<LayerRow>,
    pub connected: Proportion,
    pub records: Vec<TrialRecord<SprinklingOutcome>>,
}

fn layer_rows(annuli: &[Annulus], trials: usize, seqs: impl Fn(usize) -> (Vec<usize>, Vec<bool>)) -> Vec<LayerRow> {
    let t = trials as u64;
    let per: Vec<(Vec<usize>, Vec<bool>)> = (0..trials).map(seqs).collect();
    annuli
        .iter()
        .enumerate()
        .map(|(l, a)| {
            let bad = per.iter().filter(|(_, h)| !h[l]).count() as u64;
            let mean = |i: usize| per.iter().map(|(k, _)| k[i] as f64).sum::<f64>() / trials.max(1) as f64;
            LayerRow {
                layer: l,
                inner: a.inner,
                outer: a.outer,
                violations: Proportion::new(bad, t),
                mean_k_before: mean(l),
                mean_k_after: mean(l + 1),
            }
        })
        .collect()
}

pub fn run_sprinkling(cfg: &SprinklingConfig) -> Result<SprinklingReport, ExperimentError> {
    let root = check_geometry(cfg, 1)?;
    let d = cfg.dim;
    let origin = Point::origin(d);
    let radius = cfg.m + root;
    let window = Window::ball(&origin, radius);
    let lambda = generate_lambda(&cfg.lambda, &window, seed::derive(cfg.seed, &[tag::LAMBDA]))?;
    let lab = label_components(&lambda);
    let keep: Vec<bool> = (0..lab.count() as u32)
        .map(|c| lab.min_norm(c) <= cfg.m && lab.max_norm(c) == radius)
        .collect();
    let mut h = EdgeSet::new(window.clone());
    for slot in lambda.slots() {
        let (a, _) = window.slot_endpoints(slot);
        if keep[lab.labels()[a] as usize] {
            h.insert_slot(slot);
        }
    }
    let marked: Vec<usize> = (0..window.num_vertices())
        .filter(|&v| lab.labels()[v] != ISOLATED && keep[lab.labels()[v] as usize])
        .collect();
    let h_components = keep.iter().filter(|&&x| x).count();
    let base = union_find_of(&h);
    let layers = cfg.num_layers();
    let annuli: Vec<Annulus> = (0..layers)
        .map(|l| layer(&origin, cfg.m, 0, root, layers, cfg.k, l))
        .collect();

    let records = run_trials(cfg.trials, cfg.seed, &[tag::PHI], |_, ts| {
        let phi = open_edges(&window, cfg.k, cfg.eps, ts, CellLaw::Lattice)?;
        let mut uf = base.clone();
        let k_seq = sprinkle(&mut uf, &marked, &phi, &annuli);
        let holds = k_seq.windows(2).map(|w| decay_holds(w[0], w[1], cfg.n)).collect();
        Ok(SprinklingOutcome {
            connected: k_seq.last() == Some(&1),
            k_seq,
            holds,
        })
    })?;
    let rows = layer_rows(&annuli, cfg.trials, |i| {
        (records[i].outcome.k_seq.clone(), records[i].outcome.holds.clone())
    });
    let ok = records.iter().filter(|r| r.outcome.connected).count() as u64;
    Ok(SprinklingReport {
        config: cfg.clone(),
        layers,
        h_components,
        dropped_components: lab.count() - h_components,
        empty_layers: annuli.iter().filter(|a| a.is_empty()).count(),
        rows,
        connected: Proportion::new(ok, cfg.trials as u64),
        records,
    })
}

impl Report for SprinklingReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "lambda",
            "d",
            "k",
            "eps",
            "m",
            "n",
            "layer",
            "inner",
            "outer",
            "trials",
            "violations",
            "p_violation",
            "ci_low",
            "ci_high",
            "mean_k_before",
            "mean_k_after",
            "p_connected",
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
                    c.m.to_string(),
                    c.n.to_string(),
                    r.layer.to_string(),
                    r.inner.to_string(),
                    r.outer.to_string(),
                    c.trials.to_string(),
                    r.violations.successes.to_string(),
                    num(r.violations.estimate),
                    num(r.violations.ci_low),
                    num(r.violations.ci_high),
                    num(r.mean_k_before),
                    num(r.mean_k_after),
                    num(self.connected.estimate),
                ]
            })
            .collect()
    }

    fn summary(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "layers": self.layers,
            "h_components": self.h_components,
            "dropped_components": self.dropped_components,
            "empty_layers": self.empty_layers,
            "rows": self.rows,
            "connected": self.connected,
            "trials": self.records,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpecialOutcome {
    /// `K(H'_0), …, K(H'_L)` with the special component counted once.
    pub k_seq: Vec<usize>,
    pub holds: Vec<bool>,
    /// `U_{0,m}` after sprinkling `A_{m+2k, m+2√n}`.
    pub u_inner: usize,
    pub event: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpecialReport {
    pub config: SpecialConfig,
    /// No Λ draw had a component confined to the shell `[m, m+√n]`.
    pub vacuous: bool,
    pub lambda_attempts: u64,
    /// `U_{m, m+√n}(X)`.
    pub u_shell: usize,
    /// `U_{m, m+2√n}(X)`, the allowance of the event.
    pub u_allowance: usize,
    pub special_members: usize,
    pub rows: Vec<LayerRow>,
    pub event: Proportion,
    pub records: Vec<TrialRecord<SpecialOutcome>>,
}

fn lambda_is_random(spec: &LambdaSpec) -> bool {
    matches!(spec, LambdaSpec::IndependentWusf { .. })
}

pub fn run_special_component(cfg: &SpecialConfig) -> Result<SpecialReport, ExperimentError> {
    let root = check_geometry(cfg, 2)?;
    let origin = Point::origin(cfg.dim);
    let radius = cfg.m + 2 * root;
    let window = Window::ball(&origin, radius);
    let attempts = if lambda_is_random(&cfg.lambda) {
        LAMBDA_ATTEMPTS
    } else {
        1
    };

    let mut found = None;
    let mut used = 0;
    for a in 0..attempts {
        used = a + 1;
        let x = generate_lambda(&cfg.lambda, &window, seed::derive(cfg.seed, &[tag::LAMBDA, a]))?;
        let lab = label_components(&x);
        let u_shell = count_u(&lab, cfg.m, cfg.m + root)?;
        if u_shell >= 1 {
            found = Some((x, lab, u_shell));
            break;
        }
    }
    let layers = cfg.num_layers();
    let annuli: Vec<Annulus> = (0..layers)
        .map(|l| layer(&origin, cfg.m, root, root, layers, cfg.k, l))
        .collect();
    let Some((x, lab, u_shell)) = found else {
        return Ok(SpecialReport {
            config: cfg.clone(),
            vacuous: true,
            lambda_attempts: used,
            u_shell: 0,
            u_allowance: 0,
            special_members: 0,
            rows: Vec::new(),
            event: Proportion::new(0, 0),
            records: Vec::new(),
        });
    };
    let u_allowance = count_u(&lab, cfg.m, radius)?;
    let allowed = u_allowance.max(1);

    // H': every component avoiding B_m becomes one vertex.
    let mut base = union_find_of(&x);
    let labels = lab.labels();
    let far: Vec<usize> = (0..window.num_vertices())
        .filter(|&v| labels[v] != ISOLATED && lab.min_norm(labels[v]) > cfg.m)
        .collect();
    for w in far.windows(2) {
        base.union(w[0], w[1]);
    }
    let special_members = (0..lab.count() as u32).filter(|&c| lab.min_norm(c) > cfg.m).count();
    let marked: Vec<usize> = (0..window.num_vertices()).filter(|&v| labels[v] != ISOLATED).collect();
    let outer_ring = Annulus::new(origin, cfg.m + 2 * cfg.k, radius);

    let records = run_trials(cfg.trials, cfg.seed, &[tag::PHI, used - 1], |_, ts| {
        let phi = open_edges(&window, cfg.k, cfg.eps, ts, CellLaw::Lattice)?;
        let mut uf = base.clone();
        let k_seq = sprinkle(&mut uf, &marked, &phi, &annuli);
        let holds = k_seq.windows(2).map(|w| decay_holds(w[0], w[1], cfg.n)).collect();
        let mut y = x.clone();
        y.union_with(&phi.restricted(&outer_ring));
        let u_inner = count_u(&label_components(&y), 0, cfg.m)?;
        Ok(SpecialOutcome {
            k_seq,
            holds,
            u_inner,
            event: u_inner <= allowed,
        })
    })?;
    let rows = layer_rows(&annuli, cfg.trials, |i| {
        (records[i].outcome.k_seq.clone(), records[i].outcome.holds.clone())
    });
    let ok = records.iter().filter(|r| r.outcome.event).count() as u64;
    Ok(SpecialReport {
        config: cfg.clone(),
        vacuous: false,
        lambda_attempts: used,
        u_shell,
        u_allowance,
        special_members,
        rows,
        event: Proportion::new(ok, cfg.trials as u64),
        records,
    })
}

impl Report for SpecialReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec![
            "lambda",
            "d",
            "k",
            "eps",
            "m",
            "n",
            "vacuous",
            "u_shell",
            "u_allowance",
            "special_members",
            "trials",
            "event",
            "p_event",
            "ci_low",
            "ci_high",
        ]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        let c = &self.config;
        vec![vec![
            c.lambda.to_string(),
            c.dim.to_string(),
            c.k.to_string(),
            num(c.eps),
            c.m.to_string(),
            c.n.to_string(),
            self.vacuous.to_string(),
            self.u_shell.to_string(),
            self.u_allowance.to_string(),
            self.special_members.to_string(),
            self.event.trials.to_string(),
            self.event.successes.to_string(),
            num(self.event.estimate),
            num(self.event.ci_low),
            num(self.event.ci_high),
        ]]
    }

    fn summary(&self) -> serde_json::Value {
        json!({
            "config": self.config,
            "vacuous": self.vacuous,
            "lambda_attempts": self.lambda_attempts,
            "u_shell": self.u_shell,
            "u_allowance": self.u_allowance,
            "special_members": self.special_members,
            "rows": self.rows,
            "event": self.event,
            "trials": self.records,
        })
    }
}
