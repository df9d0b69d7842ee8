//! Quick self-check of the combinatorial and exact machinery.
//!
//! Each check compares a sampler or solver against an exact answer on a small
//! instance. The helpers are public so the larger acceptance runs can reuse
//! them at full scale.

use std::collections::{HashMap, HashSet};

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::boxperc::{open_edges, CellLaw};
use crate::experiments::{run_domination_coupling, DominationConfig};
use crate::forest::{sample_ust, verify_fresh_endpoint_order, Boundary, Network};
use crate::lattice::{cell_centers_meeting, cell_edges, cell_of_edge, cell_size, Edge, EdgeSet, Point, Window};
use crate::oracles::{
    conditional_edge_probability, edge_in_ust_probability, effective_resistance_exact, spanning_tree_count,
    spanning_tree_count_bareiss, DenseNetwork, OracleError,
};
use crate::resistance::{reff_to_boundary, SolverOptions};
use crate::seed::{self, TrialRng};
use crate::unionfind::UnionFind;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Scan a window covering several cells and confirm that every edge lies in
/// exactly one cell, the one named by `cell_of_edge`, and that every cell has
/// `d (2k)^d` edges.
pub fn check_cell_partition(dim: usize, k: i64) -> Result<usize, String> {
    let window = Window::cube(dim, 3 * k);
    let mut owner: HashMap<Edge, Point> = HashMap::new();
    for z in cell_centers_meeting(&window, k) {
        let edges = cell_edges(&z, k);
        if edges.len() != cell_size(dim, k) {
            return Err(format!("cell {z} has {} edges", edges.len()));
        }
        for e in edges {
            if let Some(other) = owner.insert(e, z) {
                return Err(format!("edge {e} lies in cells {other} and {z}"));
            }
        }
    }
    for e in window.edges() {
        match owner.get(&e) {
            None => return Err(format!("edge {e} lies in no cell")),
            Some(z) if *z != cell_of_edge(&e, k) => {
                return Err(format!(
                    "edge {e} is in cell {z} but cell_of_edge says {}",
                    cell_of_edge(&e, k)
                ))
            }
            _ => {}
        }
    }
    Ok(window.num_edges())
}

/// A random simple cycle of Z^d near the origin: grow a self-avoiding
/// walk until it steps onto an earlier vertex other than its predecessor
/// and close the loop there.
pub fn random_cycle(dim: usize, rng: &mut TrialRng) -> Vec<Edge> {
    loop {
        let mut path = vec![Point::origin(dim)];
        let mut at: HashMap<Point, usize> = HashMap::from([(path[0], 0)]);
        for _ in 0..10_000 {
            let cur = *path.last().expect("non-empty path");
            let axis = rng.gen_range(0..dim);
            let next = cur.shifted(axis, if rng.gen_bool(0.5) { 1 } else { -1 });
            if path.len() >= 2 && next == path[path.len() - 2] {
                continue;
            }
            if let Some(&i) = at.get(&next) {
                let mut cycle: Vec<Edge> = path[i..]
                    .windows(2)
                    .map(|w| Edge::between(w[0], w[1]).expect("unit step"))
                    .collect();
                cycle.push(Edge::between(cur, next).expect("unit step"));
                return cycle;
            }
            at.insert(next, path.len());
            path.push(next);
        }
    }
}

/// Whether two edges of `cycle` share a cell.
pub fn cycle_shares_cell(cycle: &[Edge], k: i64) -> bool {
    let mut seen = HashSet::new();
    cycle.iter().any(|e| !seen.insert(cell_of_edge(e, k)))
}

/// A uniformly shuffled acyclic subset of `window`'s edges: random Kruskal
/// followed by independent deletion with probability `drop`.
pub fn random_forest(window: &Window, drop: f64, rng: &mut TrialRng) -> Vec<Edge> {
    let mut slots: Vec<usize> = window.edge_slots().collect();
    slots.shuffle(rng);
    let mut uf = UnionFind::new(window.num_vertices());
    let mut out = Vec::new();
    for slot in slots {
        let (a, b) = window.slot_endpoints(slot);
        if uf.union(a, b) && !rng.gen_bool(drop) {
            out.push(window.slot_edge(slot));
        }
    }
    out
}

/// A random ordering of a forest in which every edge brings a new vertex.
/// Trees are started from random vertices and grown by random frontier edges.
pub fn random_fresh_order(forest: &[Edge], rng: &mut TrialRng) -> Vec<Edge> {
    let mut left: Vec<Edge> = forest.to_vec();
    let mut seen: HashSet<Point> = HashSet::new();
    let mut order = Vec::with_capacity(left.len());
    while !left.is_empty() {
        let frontier: Vec<usize> = (0..left.len())
            .filter(|&i| seen.contains(&left[i].base()) || seen.contains(&left[i].tip()))
            .collect();
        if frontier.is_empty() {
            let e = left[rng.gen_range(0..left.len())];
            seen.insert(if rng.gen_bool(0.5) { e.base() } else { e.tip() });
            continue;
        }
        let e = left.swap_remove(frontier[rng.gen_range(0..frontier.len())]);
        seen.insert(e.base());
        seen.insert(e.tip());
        order.push(e);
    }
    order
}

/// Tally of conditional probabilities met by [`kirchhoff_instance`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KirchhoffTally {
    pub steps: usize,
    /// Steps whose conditioning event has probability zero.
    pub null_events: usize,
    pub below_bound: usize,
    pub min_p: Option<BigRational>,
    pub bad_orders: usize,
}

impl KirchhoffTally {
    pub fn merge(&mut self, other: &KirchhoffTally) {
        self.steps += other.steps;
        self.null_events += other.null_events;
        self.below_bound += other.below_bound;
        self.bad_orders += other.bad_orders;
        if let Some(p) = &other.min_p {
            if self.min_p.as_ref().is_none_or(|m| p < m) {
                self.min_p = Some(p.clone());
            }
        }
    }
}

/// One random (forest, ordering, partitions) instance on the wired network
/// `net` of `window`: every revealed step gets a fresh random split of the
/// earlier edges into contracted and deleted ones.
pub fn kirchhoff_instance(
    net: &DenseNetwork,
    window: &Window,
    rng: &mut TrialRng,
) -> Result<KirchhoffTally, OracleError> {
    let d = window.dim();
    let bound = BigRational::new(1.into(), (2 * d as i64).into());
    let forest = random_forest(window, 0.3, rng);
    let order = random_fresh_order(&forest, rng);
    let mut tally = KirchhoffTally {
        bad_orders: (!verify_fresh_endpoint_order(&order)) as usize,
        ..KirchhoffTally::default()
    };
    let ids: Vec<usize> = order
        .iter()
        .map(|e| net.edge_id(e).ok_or(OracleError::NoSuchEdge(usize::MAX)))
        .collect::<Result<_, _>>()?;
    for n in 0..ids.len() {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for &id in &ids[..n] {
            if rng.gen_bool(0.5) {
                a.push(id);
            } else {
                b.push(id);
            }
        }
        match conditional_edge_probability(net, ids[n], &a, &b) {
            Ok(p) => {
                tally.steps += 1;
                if p < bound {
                    tally.below_bound += 1;
                }
                if tally.min_p.as_ref().is_none_or(|m| &p < m) {
                    tally.min_p = Some(p);
                }
            }
            Err(OracleError::Disconnected) => tally.null_events += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(tally)
}

/// Canonical key of a tree for frequency counts.
pub fn tree_key(edges: &EdgeSet) -> Vec<usize> {
    edges.slots().collect()
}

fn check_cells() -> Check {
    let mut total = 0;
    for d in 2..=3 {
        for k in 1..=3 {
            match check_cell_partition(d, k) {
                Ok(n) => total += n,
                Err(msg) => return Check::new("cells partition the edges", false, format!("d={d} k={k}: {msg}")),
            }
        }
    }
    Check::new(
        "cells partition the edges",
        true,
        format!("{total} edges over d in {{2,3}}, k in {{1,2,3}}"),
    )
}

fn check_cycles(seed: u64) -> Check {
    let mut rng = seed::rng(seed);
    let mut tried = 0;
    let mut failures = 0;
    for d in 2..=3 {
        for k in 1..=3 {
            for _ in 0..300 {
                tried += 1;
                if !cycle_shares_cell(&random_cycle(d, &mut rng), k) {
                    failures += 1;
                }
            }
        }
    }
    Check::new(
        "cycles revisit a cell",
        failures == 0,
        format!("{failures} failures in {tried} cycles"),
    )
}

fn check_counts() -> Check {
    let run = || -> Result<String, OracleError> {
        let square = DenseNetwork::from_window(&Window::grid(2, 2), Boundary::Free);
        let grid = DenseNetwork::from_window(&Window::grid(2, 3), Boundary::Free);
        let wired = DenseNetwork::from_window(&Window::cube(2, 2), Boundary::Wired);
        let a = spanning_tree_count(&square)?;
        let b = spanning_tree_count(&grid)?;
        let c = spanning_tree_count(&wired)?;
        let c2 = spanning_tree_count_bareiss(&wired)?;
        if a != 4u32.into() || b != 192u32.into() || c != c2 {
            return Ok(format!("FAIL {a} {b} {c} {c2}"));
        }
        Ok(format!("4-cycle 4, 3x3 grid 192, wired 5x5 {c} both ways"))
    };
    match run() {
        Ok(s) => Check::new("matrix-tree counts", !s.starts_with("FAIL"), s),
        Err(e) => Check::new("matrix-tree counts", false, e.to_string()),
    }
}

fn check_ust_uniform(seed: u64) -> Check {
    let net = Network::new(Window::grid(2, 2), Boundary::Free);
    let samples = 20_000;
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for i in 0..samples {
        let f = sample_ust(&net, seed::derive(seed, &[i])).expect("connected");
        *counts.entry(tree_key(f.edges())).or_default() += 1;
    }
    let tv = 0.5
        * counts
            .values()
            .map(|&c| (c as f64 / samples as f64 - 0.25).abs())
            .sum::<f64>();
    let ok = counts.len() == 4 && tv < 0.02;
    Check::new(
        "UST uniform on the 4-cycle",
        ok,
        format!("{} trees, total variation {tv:.4}", counts.len()),
    )
}

fn check_ust_marginals(seed: u64) -> Check {
    let window = Window::grid(2, 3);
    let net = Network::new(window.clone(), Boundary::Free);
    let g = DenseNetwork::from_window(&window, Boundary::Free);
    let samples = 20_000u64;
    let mut hits = vec![0u64; g.num_edges()];
    for i in 0..samples {
        let f = sample_ust(&net, seed::derive(seed, &[i])).expect("connected");
        for e in f.edges().iter() {
            hits[g.edge_id(&e).expect("window edge")] += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for (id, &h) in hits.iter().enumerate() {
        let p = crate::oracles::ratio_to_f64(&edge_in_ust_probability(&g, id).expect("small network"));
        let sd = (p * (1.0 - p) / samples as f64).sqrt();
        worst = worst.max((h as f64 / samples as f64 - p).abs() / sd);
    }
    Check::new(
        "UST edge marginals",
        worst < 4.0,
        format!("largest deviation {worst:.2} sd on the 3x3 grid"),
    )
}

fn check_kirchhoff(seed: u64) -> Check {
    let mut tally = KirchhoffTally::default();
    let mut rng = seed::rng(seed);
    for w in [Window::grid(2, 5), Window::grid(3, 2)] {
        let net = DenseNetwork::from_window(&w, Boundary::Wired);
        for _ in 0..20 {
            match kirchhoff_instance(&net, &w, &mut rng) {
                Ok(t) => tally.merge(&t),
                Err(e) => return Check::new("conditional probabilities >= 1/2d", false, e.to_string()),
            }
        }
    }
    let ok = tally.below_bound == 0 && tally.bad_orders == 0 && tally.steps > 0;
    let min = tally.min_p.map(|p| p.to_string()).unwrap_or_else(|| "none".into());
    Check::new(
        "conditional probabilities >= 1/2d",
        ok,
        format!(
            "{} steps, {} below, minimum {min}, {} null events",
            tally.steps, tally.below_bound, tally.null_events
        ),
    )
}

fn check_box_marginal(seed: u64) -> Check {
    let (d, k, eps) = (2usize, 1i64, 0.5);
    let w = Window::cube(d, 40);
    let per_cell = cell_size(d, k) as f64;
    let rate = eps / per_cell;
    let reps = 20;
    let mut opened = 0u64;
    let mut total = 0u64;
    for r in 0..reps {
        let es = open_edges(&w, k, eps, seed::derive(seed, &[r]), CellLaw::Lattice).expect("valid parameters");
        opened += es.len() as u64;
        total += w.num_edges() as u64;
    }
    let p = opened as f64 / total as f64;
    // Edges of one cell are exclusive, so the count is less spread than a binomial.
    let sd = (rate * (1.0 - rate) / total as f64).sqrt();
    let z = (p - rate).abs() / sd;
    Check::new(
        "box percolation marginal",
        z < 4.0,
        format!("rate {p:.5} vs {rate:.5} ({z:.2} sd)"),
    )
}

fn check_resistance() -> Check {
    let mut worst: f64 = 0.0;
    for (d, n) in [(2usize, 2i64), (2, 3), (3, 2)] {
        let w = Window::cube(d, n);
        let r = reff_to_boundary(&EdgeSet::full(w), &Point::origin(d), n, &SolverOptions::default())
            .map(|r| r.resistance)
            .unwrap_or(f64::NAN);
        let inner = Window::cube(d, n - 1);
        let g = DenseNetwork::from_window(&inner, Boundary::Wired);
        let exact = effective_resistance_exact(
            &g,
            inner.index_of(&Point::origin(d)).expect("origin"),
            inner.num_vertices(),
        )
        .map(|x| x.to_f64())
        .unwrap_or(f64::NAN);
        worst = worst.max((r - exact).abs() / exact);
    }
    Check::new(
        "resistance solver vs exact",
        worst < 1e-7,
        format!("largest relative error {worst:.2e}"),
    )
}

fn check_domination(seed: u64) -> Check {
    let cfg = DominationConfig {
        radius: 3,
        trials: 40,
        seed,
        ..DominationConfig::default()
    };
    match run_domination_coupling(&cfg) {
        Ok(r) => Check::new(
            "domination coupling",
            r.containment.successes == r.containment.trials && r.below_bound == 0,
            format!(
                "{}/{} contained, min p {:.4}",
                r.containment.successes, r.containment.trials, r.min_p
            ),
        ),
        Err(e) => Check::new("domination coupling", false, e.to_string()),
    }
}

/// Run every quick check.
pub fn run_verify(seed: u64) -> Vec<Check> {
    vec![
        check_cells(),
        check_cycles(seed::derive(seed, &[1])),
        check_counts(),
        check_ust_uniform(seed::derive(seed, &[2])),
        check_ust_marginals(seed::derive(seed, &[3])),
        check_kirchhoff(seed::derive(seed, &[4])),
        check_box_marginal(seed::derive(seed, &[5])),
        check_resistance(),
        check_domination(seed::derive(seed, &[6])),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycles_are_simple_and_closed() {
        let mut rng = seed::rng(1);
        for d in 2..=4 {
            for _ in 0..200 {
                let c = random_cycle(d, &mut rng);
                assert!(c.len() >= 4 && c.len().is_multiple_of(2));
                let mut deg: HashMap<Point, usize> = HashMap::new();
                for e in &c {
                    *deg.entry(e.base()).or_default() += 1;
                    *deg.entry(e.tip()).or_default() += 1;
                }
                assert!(deg.values().all(|&x| x == 2));
                assert_eq!(deg.len(), c.len());
            }
        }
    }

    #[test]
    fn random_orders_are_fresh() {
        let mut rng = seed::rng(2);
        let w = Window::grid(3, 4);
        for _ in 0..20 {
            let f = random_forest(&w, 0.3, &mut rng);
            let o = random_fresh_order(&f, &mut rng);
            assert_eq!(o.len(), f.len());
            assert!(verify_fresh_endpoint_order(&o));
        }
    }

    #[test]
    fn quick_suite_passes() {
        for c in run_verify(0) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
