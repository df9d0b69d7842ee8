//! Worked examples for the public operations, each checked against a value
//! computed independently in this file.

use num_rational::BigRational;
use usf_core::boxperc::{restrict, sample_box_percolation};
use usf_core::connect::{connection_event, count_u, label_components};
use usf_core::forest::{
    bernoulli_thin, order_forest_edges, sample_ust, verify_fresh_endpoint_order, Boundary, Forest, Network,
};
use usf_core::lattice::{
    boundary_edges, cell_edges, cell_of_edge, coordinate_rank, Annulus, Edge, EdgeSet, Point, Window,
};
use usf_core::oracles::{
    conditional_edge_probability, edge_in_ust_probability, effective_resistance_exact, spanning_tree_count,
    DenseNetwork, Resistance,
};
use usf_core::resistance::{reff_to_boundary, SolverOptions};
use usf_core::stats::binomial_band;

fn p(c: &[i64]) -> Point {
    Point::new(c)
}

fn edge(a: &[i64], b: &[i64]) -> Edge {
    Edge::between(p(a), p(b)).unwrap()
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn four_cycle() -> DenseNetwork {
    let mut g = DenseNetwork::new(4);
    for i in 0..4 {
        g.add_edge(i, (i + 1) % 4);
    }
    g
}

#[test]
fn coordinate_ranks() {
    assert_eq!(coordinate_rank(&p(&[0, 0]), 1), 0);
    assert_eq!(coordinate_rank(&p(&[1, 0]), 1), 1);
    assert_eq!(coordinate_rank(&p(&[-1, 1]), 1), 2);
}

/// The cells containing `e`, found by scanning every nearby centre.
fn cells_by_scan(e: &Edge, k: i64) -> Vec<Point> {
    let d = e.dim();
    let span = Window::cube(d, 2 * k + 2);
    span.vertices()
        .map(|off| off.add(&e.base()))
        .filter(|z| z.coords().all(|c| c.rem_euclid(2 * k) == 0))
        .filter(|z| cell_edges(z, k).contains(e))
        .collect()
}

#[test]
fn cell_of_edge_examples() {
    for (e, z) in [
        (edge(&[0, 0, 0], &[1, 0, 0]), p(&[0, 0, 0])),
        (edge(&[-1, 0], &[-1, 1]), p(&[-2, 0])),
        (edge(&[1, 0], &[2, 0]), p(&[2, 0])),
    ] {
        assert_eq!(cell_of_edge(&e, 1), z);
        assert_eq!(cells_by_scan(&e, 1), vec![z]);
    }
}

#[test]
fn cell_sizes() {
    // Twelve edges of [-1, 1]^2 minus the four on the lower faces.
    assert_eq!(cell_edges(&p(&[0, 0]), 1).len(), 8);
    assert_eq!(cell_edges(&p(&[2, -4, 6]), 1).len(), 24);
    assert_eq!(cell_edges(&p(&[0]), 1).len(), 2);
}

#[test]
fn boundary_edge_examples() {
    let w = Window::cube(2, 2);
    assert!(boundary_edges(&[], &w, false).is_empty());
    let all: Vec<Point> = w.vertices().collect();
    assert!(boundary_edges(&all, &w, false).is_empty());
    assert_eq!(boundary_edges(&[p(&[0, 0])], &w, false).len(), 4);
}

#[test]
fn ust_of_a_single_edge() {
    let net = Network::new(Window::grid(1, 2), Boundary::Free);
    for seed in 0..10 {
        let t = sample_ust(&net, seed).unwrap();
        assert_eq!(t.all_edges(), vec![edge(&[0], &[1])]);
    }
}

#[test]
fn thinning_examples() {
    let w = Window::cube(2, 20);
    let tree = sample_ust(&Network::new(w, Boundary::Free), 1).unwrap();
    assert_eq!(bernoulli_thin(&tree, 1.0, 2).unwrap().all_edges(), tree.all_edges());
    assert!(bernoulli_thin(&tree, 0.0, 2).unwrap().is_empty());

    // A path of 1000 edges thinned at 1/2 keeps a Binomial(1000, 1/2) count.
    let line = Forest::new(EdgeSet::full(Window::grid(1, 1001)), Vec::new());
    assert_eq!(line.len(), 1000);
    let (lo, hi) = binomial_band(1000, 0.5, 0.999);
    let inside = (0..200)
        .filter(|&s| {
            let kept = bernoulli_thin(&line, 0.5, s).unwrap().len() as f64;
            lo <= kept && kept <= hi
        })
        .count();
    assert!(inside >= 198, "{inside} of 200 counts inside the band");
}

#[test]
fn ordering_examples() {
    let path = [edge(&[1, 0], &[2, 0]), edge(&[0, 0], &[1, 0])];
    assert_eq!(order_forest_edges(&path).unwrap(), vec![path[1], path[0]]);

    let star: Vec<Edge> = p(&[0, 0])
        .neighbors()
        .map(|q| Edge::between(p(&[0, 0]), q).unwrap())
        .collect();
    let mut perm = star.clone();
    for _ in 0..4 {
        perm.rotate_left(1);
        assert!(verify_fresh_endpoint_order(&perm));
    }
    assert!(verify_fresh_endpoint_order(&order_forest_edges(&star).unwrap()));

    let w = Window::cube(2, 6);
    let forest = sample_ust(&Network::new(w, Boundary::Wired), 5).unwrap();
    assert!(verify_fresh_endpoint_order(
        &order_forest_edges(&forest.edges().iter().collect::<Vec<_>>()).unwrap()
    ));

    let square = [
        edge(&[0, 0], &[1, 0]),
        edge(&[1, 0], &[1, 1]),
        edge(&[0, 1], &[1, 1]),
        edge(&[0, 0], &[0, 1]),
    ];
    assert!(order_forest_edges(&square).is_err());
}

#[test]
fn box_percolation_full_strength_opens_one_edge_per_cell() {
    let w = Window::cube(2, 3);
    let s = sample_box_percolation(&w, 1, 1.0, 4).unwrap();
    for c in s.cells().iter().filter(|c| !c.clipped) {
        assert!(c.open && s.open().contains(&c.edge));
        let in_cell = cell_edges(&c.center, 1).iter().filter(|e| s.open().contains(e)).count();
        assert_eq!(in_cell, 1);
    }

    let none = sample_box_percolation(&w, 1, 0.0, 4).unwrap();
    assert!(none.open().is_empty());
    assert!(!none.cells().is_empty());
}

#[test]
fn box_percolation_chooses_uniformly_within_a_cell() {
    let w = Window::cube(2, 3);
    let z = p(&[0, 0]);
    let edges = cell_edges(&z, 1);
    let trials = 100_000u64;
    let mut hits = vec![0u64; edges.len()];
    for seed in 0..trials {
        let s = sample_box_percolation(&w, 1, 1.0, seed).unwrap();
        let c = s.cells().iter().find(|c| c.center == z).unwrap();
        hits[edges.iter().position(|e| *e == c.edge).unwrap()] += 1;
    }
    let q = 1.0 / 8.0;
    let sd = (q * (1.0 - q) / trials as f64).sqrt();
    for h in hits {
        assert!((h as f64 / trials as f64 - q).abs() < 3.0 * sd, "{h}");
    }
}

#[test]
fn restriction_examples() {
    let w = Window::cube(2, 5);
    let s = sample_box_percolation(&w, 1, 0.7, 8).unwrap();
    assert_eq!(restrict(&s, &w), *s.open());
    let far = Window::new(p(&[20, 20]), p(&[25, 25])).unwrap();
    assert!(restrict(&s, &far).is_empty());
    let ring = Annulus::new(Point::origin(2), 1, 3);
    for e in restrict(&s, &ring).iter() {
        let (a, b) = e.endpoints();
        assert!([a, b].iter().all(|q| (2..=3).contains(&q.linf_norm())));
    }
}

#[test]
fn spanning_tree_counts() {
    assert_eq!(spanning_tree_count(&four_cycle()).unwrap(), 4u32.into());
    assert_eq!(
        spanning_tree_count(&DenseNetwork::from_window(&Window::grid(2, 3), Boundary::Free)).unwrap(),
        192u32.into()
    );
    let mut path = DenseNetwork::new(5);
    for i in 0..4 {
        path.add_edge(i, i + 1);
    }
    assert_eq!(spanning_tree_count(&path).unwrap(), 1u32.into());
}

#[test]
fn edge_probability_examples() {
    let c = four_cycle();
    for e in 0..4 {
        assert_eq!(edge_in_ust_probability(&c, e).unwrap(), ratio(3, 4));
    }
    let mut bridge = DenseNetwork::new(5);
    for i in 0..4 {
        bridge.add_edge(i, (i + 1) % 4);
    }
    bridge.add_edge(4, 0);
    let pendant = bridge.num_edges() - 1;
    assert_eq!(edge_in_ust_probability(&bridge, pendant).unwrap(), ratio(1, 1));
    let mut double = DenseNetwork::new(2);
    let a = double.add_edge(0, 1);
    let b = double.add_edge(0, 1);
    assert_eq!(edge_in_ust_probability(&double, a).unwrap(), ratio(1, 2));
    assert_eq!(edge_in_ust_probability(&double, b).unwrap(), ratio(1, 2));
}

#[test]
fn conditional_probability_examples() {
    let c = four_cycle();
    assert_eq!(
        conditional_edge_probability(&c, 0, &[], &[]).unwrap(),
        edge_in_ust_probability(&c, 0).unwrap()
    );
    // Contracting the opposite edge leaves a triangle.
    assert_eq!(conditional_edge_probability(&c, 0, &[2], &[]).unwrap(), ratio(2, 3));
}

#[test]
fn resistance_examples() {
    let mut single = DenseNetwork::new(2);
    single.add_edge(0, 1);
    assert_eq!(
        effective_resistance_exact(&single, 0, 1).unwrap(),
        Resistance::Finite(ratio(1, 1))
    );
    let mut paths = DenseNetwork::new(4);
    for (u, v) in [(0, 1), (1, 3), (0, 2), (2, 3)] {
        paths.add_edge(u, v);
    }
    assert_eq!(
        effective_resistance_exact(&paths, 0, 3).unwrap(),
        Resistance::Finite(ratio(1, 1))
    );
    assert_eq!(
        effective_resistance_exact(&four_cycle(), 0, 1).unwrap(),
        Resistance::Finite(ratio(3, 4))
    );
}

#[test]
fn component_count_examples() {
    let w = Window::cube(2, 4);
    assert_eq!(label_components(&EdgeSet::new(w.clone())).count(), 0);
    let tree = sample_ust(&Network::new(w.clone(), Boundary::Free), 3).unwrap();
    assert_eq!(label_components(tree.edges()).count(), 1);
    let mut two = EdgeSet::new(w.clone());
    for x in -4..4 {
        two.insert(&edge(&[x, 0], &[x + 1, 0]));
        two.insert(&edge(&[x, 2], &[x + 1, 2]));
    }
    assert_eq!(label_components(&two).count(), 2);
}

#[test]
fn shell_count_examples() {
    let w = Window::cube(2, 10);
    assert_eq!(count_u(&label_components(&EdgeSet::new(w.clone())), 0, 5).unwrap(), 0);

    let mut line = EdgeSet::new(w.clone());
    for x in 0..10 {
        line.insert(&edge(&[x, 0], &[x + 1, 0]));
    }
    let lab = label_components(&line);
    for l in 0..=10 {
        assert_eq!(count_u(&lab, 0, l).unwrap(), 1);
        if l >= 1 {
            assert_eq!(count_u(&lab, 1, l).unwrap(), 0);
        }
    }

    let mut shell = EdgeSet::new(w);
    for x in 5..9 {
        shell.insert(&edge(&[x, 5], &[x + 1, 5]));
    }
    let lab = label_components(&shell);
    assert_eq!(count_u(&lab, 5, 9).unwrap(), 1);
    assert_eq!(count_u(&lab, 6, 9).unwrap(), 0);
    assert!(count_u(&lab, 7, 6).is_err());
}

#[test]
fn connection_event_examples() {
    let n = 3;
    let w = Window::cube(2, 2 * n);
    assert!(connection_event(&EdgeSet::full(w.clone()), n));
    assert!(!connection_event(&EdgeSet::new(w.clone()), n));
    let tree = sample_ust(&Network::new(w, Boundary::Free), 9).unwrap();
    assert!(connection_event(tree.edges(), n));
}

#[test]
fn resistance_solver_examples() {
    let opts = SolverOptions::default();
    let n = 6;
    let w = Window::cube(2, n);
    let mut path = EdgeSet::new(w.clone());
    for x in 0..n {
        path.insert(&edge(&[x, 0], &[x + 1, 0]));
    }
    let r = reff_to_boundary(&path, &Point::origin(2), n, &opts).unwrap();
    assert!((r.resistance - n as f64).abs() < 1e-6);

    // In B_1 the centre has four unit edges to the boundary.
    let r = reff_to_boundary(&EdgeSet::full(Window::cube(2, 1)), &Point::origin(2), 1, &opts).unwrap();
    assert!((r.resistance - 0.25).abs() < 1e-9);

    // Full d = 3 boxes: R(n) grows towards a finite limit with shrinking steps,
    // and matches the exact wired resistance.
    let mut values = Vec::new();
    for n in 1..=4 {
        let r = reff_to_boundary(&EdgeSet::full(Window::cube(3, n)), &Point::origin(3), n, &opts).unwrap();
        let inner = Window::cube(3, n - 1);
        let g = DenseNetwork::from_window(&inner, Boundary::Wired);
        let o = inner.index_of(&Point::origin(3)).unwrap();
        let exact = effective_resistance_exact(&g, o, inner.num_vertices())
            .unwrap()
            .to_f64();
        assert!(
            (r.resistance - exact).abs() <= 1e-7 * exact,
            "n={n}: {} vs {exact}",
            r.resistance
        );
        values.push(r.resistance);
    }
    let steps: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|&s| s > 0.0));
    assert!(steps.windows(2).all(|w| w[1] < w[0]));
}
