//! Property tests over random windows, edge sets and seeds.

use std::collections::{HashMap, HashSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use usf_core::boxperc::{sample_box_percolation, sample_box_percolation_with, CellLaw};
use usf_core::connect::{connection_event, count_u, label_components};
use usf_core::forest::{bernoulli_thin, sample_ust, Boundary, Forest, Network};
use usf_core::lattice::{cell_contains, cell_edges, cell_of_edge, is_cell_center, Edge, EdgeSet, Point, Window};
use usf_core::oracles::{edge_in_ust_probability, effective_resistance_exact, DenseNetwork, Resistance};
use usf_core::resistance::{reff_to_boundary, SolverOptions};
use usf_core::seed;
use usf_core::stats::{binomial_band, chi_square_p_value, chi_square_uniform};
use usf_core::unionfind::UnionFind;
use usf_core::verify::random_forest;

fn small_grid() -> impl Strategy<Value = Window> {
    prop_oneof![
        (2i64..=5).prop_map(|s| Window::grid(2, s)),
        (2i64..=3).prop_map(|s| Window::grid(3, s))
    ]
}

fn acyclic(edges: &EdgeSet) -> bool {
    let w = edges.window();
    let mut uf = UnionFind::new(w.num_vertices());
    edges.slots().all(|s| {
        let (a, b) = w.slot_endpoints(s);
        uf.union(a, b)
    })
}

/// A window with a random subset of its edges.
fn window_and_edges(radius: i64) -> impl Strategy<Value = (Window, EdgeSet)> {
    (2usize..=3, any::<u64>(), 0.2f64..0.9).prop_map(move |(d, s, keep)| {
        let w = Window::cube(d, radius);
        let mut rng = seed::rng(s);
        let mut es = EdgeSet::new(w.clone());
        for slot in w.edge_slots() {
            if rand::Rng::gen_bool(&mut rng, keep) {
                es.insert_slot(slot);
            }
        }
        (w, es)
    })
}

/// Exact resistance from the origin to the identified boundary of `B_n`
/// for the edges of `es` inside `B_n`.
fn exact_to_boundary(es: &EdgeSet, n: i64) -> Resistance {
    let d = es.window().dim();
    let inner = Window::cube(d, n - 1);
    let ghost = inner.num_vertices();
    let id = |p: &Point| inner.index_of(p).unwrap_or(ghost);
    let mut g = DenseNetwork::new(ghost + 1);
    for e in es.iter() {
        let (a, b) = e.endpoints();
        if a.linf_norm() > n || b.linf_norm() > n {
            continue;
        }
        let (u, v) = (id(&a), id(&b));
        if u != v {
            g.add_edge(u, v);
        }
    }
    effective_resistance_exact(&g, id(&Point::origin(d)), ghost).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_edge_has_exactly_one_cell(
        coords in proptest::collection::vec(-20i64..20, 2..=3),
        axis_seed in any::<usize>(),
        k in 1i64..=3,
    ) {
        let e = Edge::new(Point::new(&coords), axis_seed % coords.len());
        let z = cell_of_edge(&e, k);
        prop_assert!(is_cell_center(&z, k));
        prop_assert!(cell_contains(&z, k, &e));
        prop_assert!(cell_edges(&z, k).contains(&e));
        let d = coords.len();
        let others = Window::cube(d, 2 * k + 2)
            .vertices()
            .map(|off| off.add(&e.base()))
            .filter(|c| is_cell_center(c, k) && *c != z && cell_contains(c, k, &e))
            .count();
        prop_assert_eq!(others, 0);
    }

    #[test]
    fn ust_is_a_spanning_tree(w in small_grid(), s in any::<u64>()) {
        let t = sample_ust(&Network::new(w.clone(), Boundary::Free), s).unwrap();
        prop_assert_eq!(t.len(), w.num_vertices() - 1);
        prop_assert!(acyclic(t.edges()));
        prop_assert_eq!(label_components(t.edges()).count(), 1);
    }

    #[test]
    fn wired_ust_components_all_reach_the_boundary(r in 1i64..=4, d in 2usize..=3, s in any::<u64>()) {
        let w = Window::cube(d, r);
        let t = sample_ust(&Network::new(w.clone(), Boundary::Wired), s).unwrap();
        prop_assert!(t.is_acyclic());
        let lab = label_components(t.edges());
        for p in w.vertices() {
            match lab.label_of(&p) {
                Some(c) => prop_assert_eq!(lab.max_norm(c), r),
                None => prop_assert!(w.on_boundary(&p)),
            }
        }
    }

    #[test]
    fn constrained_ust_keeps_a_and_avoids_b(w in small_grid(), s in any::<u64>()) {
        let mut rng = seed::rng(s);
        let tree: Vec<Edge> = random_forest(&w, 0.0, &mut rng);
        let in_tree: HashSet<Edge> = tree.iter().copied().collect();
        let a: Vec<Edge> = tree.iter().copied().filter(|_| rand::Rng::gen_bool(&mut rng, 0.4)).collect();
        let b: Vec<Edge> = w.edges().filter(|e| !in_tree.contains(e) && rand::Rng::gen_bool(&mut rng, 0.5)).collect();
        let net = Network::new(w.clone(), Boundary::Free).with_constraints(&a, &b).unwrap();
        let t = sample_ust(&net, s ^ 1).unwrap();
        prop_assert!(a.iter().all(|e| t.contains(e)));
        prop_assert!(b.iter().all(|e| !t.contains(e)));
        prop_assert_eq!(t.len(), w.num_vertices() - 1);
    }

    #[test]
    fn edge_probabilities_sum_to_tree_size(w in small_grid()) {
        let g = DenseNetwork::from_window(&w, Boundary::Free);
        let total = (0..g.num_edges())
            .map(|e| edge_in_ust_probability(&g, e).unwrap())
            .fold(BigRational::zero(), |acc, p| acc + p);
        prop_assert_eq!(total, BigRational::from_integer((w.num_vertices() as i64 - 1).into()));
    }

    #[test]
    fn thinning_keeps_a_subset(s in any::<u64>(), eps in 0.0f64..=1.0) {
        let t = sample_ust(&Network::new(Window::cube(2, 6), Boundary::Wired), s).unwrap();
        let thin = bernoulli_thin(&t, eps, s ^ 7).unwrap();
        prop_assert!(thin.edges().iter().all(|e| t.contains(&e)));
        prop_assert!(thin.exterior().iter().all(|e| t.exterior().contains(e)));
    }

    #[test]
    fn thinned_count_is_binomial(s in any::<u64>(), eps in 0.05f64..0.95) {
        let line = Forest::new(EdgeSet::full(Window::grid(1, 2001)), Vec::new());
        let kept = bernoulli_thin(&line, eps, s).unwrap().len() as f64;
        // A band wide enough that a correct sampler essentially never leaves it.
        let (lo, hi) = binomial_band(2000, eps, 1.0 - 1e-9);
        prop_assert!(lo <= kept && kept <= hi, "{} outside [{}, {}]", kept, lo, hi);
    }

    #[test]
    fn box_percolation_opens_one_edge_per_cell_at_most(
        d in 2usize..=3, r in 2i64..=6, k in 1i64..=2, eps in 0.0f64..=1.0, s in any::<u64>(), lattice in any::<bool>(),
    ) {
        let law = if lattice { CellLaw::Lattice } else { CellLaw::Clipped };
        let sample = sample_box_percolation_with(&Window::cube(d, r), k, eps, s, law).unwrap();
        let mut per_cell: HashMap<Point, usize> = HashMap::new();
        for e in sample.open().iter() {
            *per_cell.entry(cell_of_edge(&e, k)).or_default() += 1;
        }
        prop_assert!(per_cell.values().all(|&c| c == 1));
        prop_assert!(acyclic(sample.open()));
    }

    #[test]
    fn box_percolation_grows_with_eps(s in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let small = sample_box_percolation(&Window::cube(2, 6), 1, lo, s).unwrap();
        let large = small.with_eps(hi).unwrap();
        prop_assert!(small.open().iter().all(|e| large.open().contains(&e)));
    }

    #[test]
    fn adding_edges_never_splits((w, es) in window_and_edges(3), s in any::<u64>()) {
        let mut more = es.clone();
        let mut rng = seed::rng(s);
        for slot in w.edge_slots() {
            if rand::Rng::gen_bool(&mut rng, 0.2) {
                more.insert_slot(slot);
            }
        }
        // Isolated vertices are not counted, so only the union can be compared
        // component by component: every old component lies inside a new one.
        let (old, new) = (label_components(&es), label_components(&more));
        for p in w.vertices() {
            if let Some(c) = old.label_of(&p) {
                prop_assert!(new.label_of(&p).is_some());
                let members: Vec<Point> = w.vertices().filter(|q| old.label_of(q) == Some(c)).collect();
                let target = new.label_of(&p);
                prop_assert!(members.iter().all(|q| new.label_of(q) == target));
            }
        }
        prop_assert!(!connection_event(&es, 1) || connection_event(&more, 1));
    }

    #[test]
    fn shells_decompose_the_ball_count((_, es) in window_and_edges(6), m in 0i64..=4) {
        let lab = label_components(&es);
        let whole = count_u(&lab, 0, 6).unwrap();
        let shells: usize = (m + 1..=6).map(|t| count_u(&lab, t, t).unwrap()).sum();
        prop_assert_eq!(whole, count_u(&lab, 0, m).unwrap() + shells);
    }

    #[test]
    fn solver_matches_exact_resistance((_, es) in window_and_edges(3), n in 1i64..=3) {
        let opts = SolverOptions::default();
        let d = es.window().dim();
        let got = reff_to_boundary(&es, &Point::origin(d), n, &opts).unwrap();
        match exact_to_boundary(&es, n) {
            Resistance::Infinite => prop_assert!(got.is_infinite()),
            exact => {
                let x = exact.to_f64();
                prop_assert!((got.resistance - x).abs() <= 1e-7 * x, "{} vs {}", got.resistance, x);
            }
        }
    }

    #[test]
    fn adding_edges_never_raises_resistance((w, es) in window_and_edges(4), s in any::<u64>()) {
        let opts = SolverOptions::default();
        let o = Point::origin(w.dim());
        let mut more = es.clone();
        let mut rng = seed::rng(s);
        for slot in w.edge_slots() {
            if rand::Rng::gen_bool(&mut rng, 0.15) {
                more.insert_slot(slot);
            }
        }
        let a = reff_to_boundary(&es, &o, 4, &opts).unwrap().resistance;
        let b = reff_to_boundary(&more, &o, 4, &opts).unwrap().resistance;
        prop_assert!(b <= a * (1.0 + 2.0 * opts.tol) || a.is_infinite());
    }
}

#[test]
fn wired_probabilities_sum_to_vertex_count() {
    for (d, r) in [(2usize, 1i64), (2, 2), (2, 3), (3, 1)] {
        // With the boundary node the wired network has |window| + 1 vertices.
        let g = DenseNetwork::from_window(&Window::cube(d, r), Boundary::Wired);
        let probs: Vec<BigRational> = (0..g.num_edges())
            .map(|e| edge_in_ust_probability(&g, e).unwrap())
            .collect();
        let total = probs.iter().fold(BigRational::zero(), |acc, p| acc + p);
        assert_eq!(total, BigRational::from_integer((g.num_vertices() as i64 - 1).into()));
        assert!(probs.iter().all(|p| *p <= BigRational::one()));
    }
}

#[test]
fn ust_is_uniform_on_a_small_grid() {
    // The 2x3 grid has 15 spanning trees.
    let w = Window::new(Point::new(&[0, 0]), Point::new(&[1, 2])).unwrap();
    let net = Network::new(w, Boundary::Free);
    let samples = 60_000u64;
    let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
    for i in 0..samples {
        let t = sample_ust(&net, seed::derive(77, &[i])).unwrap();
        *counts.entry(t.edges().slots().collect()).or_default() += 1;
    }
    assert_eq!(counts.len(), 15);
    let freq: Vec<u64> = counts.values().copied().collect();
    let p = chi_square_p_value(chi_square_uniform(&freq), freq.len() - 1);
    assert!(p > 1e-3, "chi-square p = {p}");
}
