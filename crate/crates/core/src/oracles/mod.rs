//! Exact ground truth on small networks.
//!
//! All quantities reduce to Laplacian minors: the spanning-tree count is any
//! principal cofactor, and for vertices `a ≠ b` the number of spanning trees
//! of the network with `a` and `b` identified is the minor with both rows and
//! columns removed. Hence
//!
//! * `R_eff(a, b) = det L[−a,−b] / det L[−a]`,
//! * `Pr(e ∈ T) = R_eff(e)` for every copy of a (possibly parallel) edge.
//!
//! Conditioning on `A ⊆ T` and `B ∩ T = ∅` contracts `A` and deletes `B`.
//! Above the size limit the oracles refuse instead of approximating.

pub mod determinant;

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::forest::{Boundary, MultiGraph};
use crate::lattice::{Edge, Point, Window};
use crate::unionfind::UnionFind;

pub const DEFAULT_LIMIT: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("network has {vertices} vertices, above the oracle limit {limit}")]
    TooLarge { vertices: usize, limit: usize },
    #[error("no edge with id {0}")]
    NoSuchEdge(usize),
    #[error("no vertex with id {0}")]
    NoSuchVertex(usize),
    #[error("network is disconnected")]
    Disconnected,
    #[error("edge {0} is both contracted and deleted")]
    Overlap(usize),
    #[error("contracted edges close a cycle at edge {0}")]
    ContractedCycle(usize),
    #[error("edge {0} is itself constrained")]
    ConstrainedTarget(usize),
    #[error("terminals coincide")]
    SameVertex,
}

/// Undirected multigraph with unit conductances and an optional wired vertex.
/// Edges built from a lattice window remember their lattice edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseNetwork {
    num_vertices: usize,
    ends: Vec<(u32, u32)>,
    labels: Vec<Option<Edge>>,
    wired: Option<usize>,
    limit: usize,
    window: Option<Window>,
}

/// An effective resistance, possibly infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resistance {
    Finite(BigRational),
    Infinite,
}

impl Resistance {
    pub fn to_f64(&self) -> f64 {
        match self {
            Resistance::Finite(r) => ratio_to_f64(r),
            Resistance::Infinite => f64::INFINITY,
        }
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

impl DenseNetwork {
    pub fn new(num_vertices: usize) -> Self {
        DenseNetwork {
            num_vertices,
            ends: Vec::new(),
            labels: Vec::new(),
            wired: None,
            limit: DEFAULT_LIMIT,
            window: None,
        }
    }

    /// The network of a lattice window. Window vertices keep their indices;
    /// the wired boundary, if any, is the last vertex.
    pub fn from_window(window: &Window, boundary: Boundary) -> Self {
        let g = MultiGraph::build(window, boundary);
        DenseNetwork {
            num_vertices: g.num_nodes,
            ends: g.ends,
            labels: g.labels.into_iter().map(Some).collect(),
            wired: g.boundary_node,
            limit: DEFAULT_LIMIT,
            window: Some(window.clone()),
        }
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_wired(mut self, v: usize) -> Self {
        self.wired = Some(v);
        self
    }

    pub fn add_edge(&mut self, u: usize, v: usize) -> usize {
        assert!(u < self.num_vertices && v < self.num_vertices, "vertex out of range");
        self.ends.push((u as u32, v as u32));
        self.labels.push(None);
        self.ends.len() - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    pub fn wired(&self) -> Option<usize> {
        self.wired
    }

    pub fn endpoints(&self, id: usize) -> (usize, usize) {
        let (u, v) = self.ends[id];
        (u as usize, v as usize)
    }

    pub fn label(&self, id: usize) -> Option<Edge> {
        self.labels[id]
    }

    /// Id of a lattice edge in a window network.
    pub fn edge_id(&self, e: &Edge) -> Option<usize> {
        self.labels.iter().position(|l| l.as_ref() == Some(e))
    }

    /// Id of a lattice point in a window network.
    pub fn vertex_id(&self, p: &Point) -> Option<usize> {
        self.window.as_ref()?.index_of(p)
    }

    /// Edge list dump, one `u v` pair per line (lattice label appended when
    /// known).
    pub fn dump(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# vertices {} wired {:?}", self.num_vertices, self.wired).unwrap();
        for (i, &(u, v)) in self.ends.iter().enumerate() {
            match self.labels[i] {
                Some(e) => writeln!(out, "{u} {v} {e}").unwrap(),
                None => writeln!(out, "{u} {v}").unwrap(),
            }
        }
        out
    }

    fn check_size(&self) -> Result<(), OracleError> {
        if self.num_vertices > self.limit {
            return Err(OracleError::TooLarge {
                vertices: self.num_vertices,
                limit: self.limit,
            });
        }
        Ok(())
    }

    fn check_edge(&self, id: usize) -> Result<(), OracleError> {
        if id >= self.ends.len() {
            return Err(OracleError::NoSuchEdge(id));
        }
        Ok(())
    }
}

/// Multigraph on merged classes after contracting `A` and deleting `B`.
/// Loops are dropped; parallel edges are kept.
struct Reduced {
    size: usize,
    class: Vec<usize>,
    ends: Vec<(usize, usize)>,
}

impl Reduced {
    fn build(g: &DenseNetwork, contracted: &[usize], deleted: &[usize]) -> Result<Self, OracleError> {
        let mut uf = UnionFind::new(g.num_vertices);
        for &id in contracted {
            g.check_edge(id)?;
            if deleted.contains(&id) {
                return Err(OracleError::Overlap(id));
            }
            let (u, v) = g.endpoints(id);
            if !uf.union(u, v) {
                return Err(OracleError::ContractedCycle(id));
            }
        }
        for &id in deleted {
            g.check_edge(id)?;
        }
        let mut class = vec![usize::MAX; g.num_vertices];
        let mut roots = vec![usize::MAX; g.num_vertices];
        let mut size = 0;
        for v in 0..g.num_vertices {
            let r = uf.find(v);
            if roots[r] == usize::MAX {
                roots[r] = size;
                size += 1;
            }
            class[v] = roots[r];
        }
        let mut gone = vec![false; g.ends.len()];
        for &id in contracted.iter().chain(deleted) {
            gone[id] = true;
        }
        let ends = g
            .ends
            .iter()
            .enumerate()
            .filter(|(id, _)| !gone[*id])
            .map(|(_, &(u, v))| (class[u as usize], class[v as usize]))
            .filter(|(a, b)| a != b)
            .collect();
        Ok(Reduced { size, class, ends })
    }

    fn whole(g: &DenseNetwork) -> Self {
        Reduced {
            size: g.num_vertices,
            class: (0..g.num_vertices).collect(),
            ends: g
                .ends
                .iter()
                .map(|&(u, v)| (u as usize, v as usize))
                .filter(|(a, b)| a != b)
                .collect(),
        }
    }

    fn component_of(&self, v: usize) -> Vec<bool> {
        let mut uf = UnionFind::new(self.size);
        for &(a, b) in &self.ends {
            uf.union(a, b);
        }
        let r = uf.find(v);
        (0..self.size).map(|x| uf.find(x) == r).collect()
    }

    fn connected(&self) -> bool {
        self.size == 0 || self.component_of(0).iter().all(|&x| x)
    }

    /// Laplacian restricted to `keep`, with the listed vertices removed.
    /// Returns the matrix, its order and the product of its diagonal.
    fn minor(&self, keep: &[bool], removed: &[usize]) -> (Vec<i64>, usize, BigUint) {
        let mut index = vec![usize::MAX; self.size];
        let mut m = 0;
        for v in 0..self.size {
            if keep[v] && !removed.contains(&v) {
                index[v] = m;
                m += 1;
            }
        }
        let mut lap = vec![0i64; m * m];
        for &(a, b) in &self.ends {
            if !keep[a] {
                continue;
            }
            let (ia, ib) = (index[a], index[b]);
            if ia != usize::MAX {
                lap[ia * m + ia] += 1;
            }
            if ib != usize::MAX {
                lap[ib * m + ib] += 1;
            }
            if ia != usize::MAX && ib != usize::MAX {
                lap[ia * m + ib] -= 1;
                lap[ib * m + ia] -= 1;
            }
        }
        let bound = (0..m).fold(BigUint::one(), |acc, i| acc * lap[i * m + i] as u64);
        (lap, m, bound)
    }

    fn tree_count(&self, keep: &[bool], removed: &[usize]) -> BigUint {
        let (lap, m, bound) = self.minor(keep, removed);
        if bound.is_zero() {
            return if m == 0 { BigUint::one() } else { BigUint::zero() };
        }
        determinant::det_nonneg_bounded(&lap, m, &bound)
    }

    /// `R_eff(a, b)` inside the component of `a`, which must contain `b`.
    fn resistance(&self, a: usize, b: usize) -> BigRational {
        let keep = self.component_of(a);
        debug_assert!(keep[b]);
        let num = self.tree_count(&keep, &[a, b]);
        let den = self.tree_count(&keep, &[a]);
        BigRational::new(num.into(), den.into())
    }
}

/// Number of spanning trees (zero when disconnected).
pub fn spanning_tree_count(g: &DenseNetwork) -> Result<BigUint, OracleError> {
    g.check_size()?;
    let r = Reduced::whole(g);
    if r.size == 0 {
        return Ok(BigUint::one());
    }
    if !r.connected() {
        return Ok(BigUint::zero());
    }
    let keep = vec![true; r.size];
    Ok(r.tree_count(&keep, &[r.size - 1]))
}

/// Same count through Bareiss elimination, for cross-checking.
pub fn spanning_tree_count_bareiss(g: &DenseNetwork) -> Result<BigUint, OracleError> {
    g.check_size()?;
    let r = Reduced::whole(g);
    if r.size == 0 {
        return Ok(BigUint::one());
    }
    let keep = vec![true; r.size];
    let (lap, m, _) = r.minor(&keep, &[r.size - 1]);
    Ok(determinant::det_bareiss_nonneg(&lap, m))
}

/// `Pr(e ∈ T)` for the uniform spanning tree `T` of a connected network.
pub fn edge_in_ust_probability(g: &DenseNetwork, e: usize) -> Result<BigRational, OracleError> {
    conditional_edge_probability(g, e, &[], &[])
}

/// `Pr(e ∈ T | A ⊆ T, B ∩ T = ∅)`, computed on `(G / A) \ B`. An edge whose
/// endpoints are already joined by `A` has probability zero.
pub fn conditional_edge_probability(
    g: &DenseNetwork,
    e: usize,
    contracted: &[usize],
    deleted: &[usize],
) -> Result<BigRational, OracleError> {
    g.check_size()?;
    g.check_edge(e)?;
    if contracted.contains(&e) || deleted.contains(&e) {
        return Err(OracleError::ConstrainedTarget(e));
    }
    let r = Reduced::build(g, contracted, deleted)?;
    if !r.connected() {
        return Err(OracleError::Disconnected);
    }
    let (u, v) = g.endpoints(e);
    let (a, b) = (r.class[u], r.class[v]);
    if a == b {
        return Ok(BigRational::zero());
    }
    Ok(r.resistance(a, b))
}

/// Exact effective resistance between two vertices.
pub fn effective_resistance_exact(g: &DenseNetwork, a: usize, b: usize) -> Result<Resistance, OracleError> {
    g.check_size()?;
    for v in [a, b] {
        if v >= g.num_vertices {
            return Err(OracleError::NoSuchVertex(v));
        }
    }
    if a == b {
        return Err(OracleError::SameVertex);
    }
    let r = Reduced::whole(g);
    if !r.component_of(a)[b] {
        return Ok(Resistance::Infinite);
    }
    Ok(Resistance::Finite(r.resistance(a, b)))
}

/// Floating-point `Pr(e ∈ T | A, B)` by Cholesky on the grounded Laplacian.
/// Meant for screening; callers needing exact answers fall back to
/// [`conditional_edge_probability`] when a comparison is too close to call.
pub fn conditional_edge_probability_f64(
    g: &DenseNetwork,
    e: usize,
    contracted: &[usize],
    deleted: &[usize],
) -> Result<f64, OracleError> {
    g.check_size()?;
    g.check_edge(e)?;
    let r = Reduced::build(g, contracted, deleted)?;
    let (u, v) = g.endpoints(e);
    let (a, b) = (r.class[u], r.class[v]);
    if a == b {
        return Ok(0.0);
    }
    let ground = g.wired.map_or(r.size - 1, |w| r.class[w]);
    // Index classes other than the ground.
    let idx = |c: usize| if c < ground { c } else { c - 1 };
    let m = r.size - 1;
    let mut lap = vec![0f64; m * m];
    for &(x, y) in &r.ends {
        if x != ground {
            lap[idx(x) * m + idx(x)] += 1.0;
        }
        if y != ground {
            lap[idx(y) * m + idx(y)] += 1.0;
        }
        if x != ground && y != ground {
            lap[idx(x) * m + idx(y)] -= 1.0;
            lap[idx(y) * m + idx(x)] -= 1.0;
        }
    }
    // In-place Cholesky, lower triangle.
    for j in 0..m {
        let mut s = lap[j * m + j];
        for t in 0..j {
            s -= lap[j * m + t] * lap[j * m + t];
        }
        if s <= 0.0 {
            return Err(OracleError::Disconnected);
        }
        let djj = s.sqrt();
        lap[j * m + j] = djj;
        for i in j + 1..m {
            let mut s = lap[i * m + j];
            for t in 0..j {
                s -= lap[i * m + t] * lap[j * m + t];
            }
            lap[i * m + j] = s / djj;
        }
    }
    let mut rhs = vec![0f64; m];
    if a != ground {
        rhs[idx(a)] += 1.0;
    }
    if b != ground {
        rhs[idx(b)] -= 1.0;
    }
    for i in 0..m {
        let mut s = rhs[i];
        for t in 0..i {
            s -= lap[i * m + t] * rhs[t];
        }
        rhs[i] = s / lap[i * m + i];
    }
    for i in (0..m).rev() {
        let mut s = rhs[i];
        for t in i + 1..m {
            s -= lap[t * m + i] * rhs[t];
        }
        rhs[i] = s / lap[i * m + i];
    }
    let pot = |c: usize| if c == ground { 0.0 } else { rhs[idx(c)] };
    Ok(pot(a) - pot(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> DenseNetwork {
        let mut g = DenseNetwork::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n);
        }
        g
    }

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn counts() {
        assert_eq!(spanning_tree_count(&cycle(4)).unwrap(), BigUint::from(4u32));
        let grid = DenseNetwork::from_window(&Window::grid(2, 3), Boundary::Free);
        assert_eq!(spanning_tree_count(&grid).unwrap(), BigUint::from(192u32));
        assert_eq!(spanning_tree_count_bareiss(&grid).unwrap(), BigUint::from(192u32));
        let mut path = DenseNetwork::new(3);
        path.add_edge(0, 1);
        path.add_edge(1, 2);
        assert_eq!(spanning_tree_count(&path).unwrap(), BigUint::one());
        let apart = DenseNetwork::new(2);
        assert_eq!(spanning_tree_count(&apart).unwrap(), BigUint::zero());
    }

    #[test]
    fn edge_probabilities() {
        let c = cycle(4);
        for e in 0..4 {
            assert_eq!(edge_in_ust_probability(&c, e).unwrap(), ratio(3, 4));
        }
        let mut bridge = cycle(3);
        let x = bridge.num_vertices;
        bridge.num_vertices += 1;
        let b = bridge.add_edge(0, x);
        assert_eq!(edge_in_ust_probability(&bridge, b).unwrap(), ratio(1, 1));
        let mut dbl = DenseNetwork::new(2);
        dbl.add_edge(0, 1);
        dbl.add_edge(0, 1);
        assert_eq!(edge_in_ust_probability(&dbl, 0).unwrap(), ratio(1, 2));
        assert_eq!(edge_in_ust_probability(&dbl, 1).unwrap(), ratio(1, 2));
    }

    #[test]
    fn conditioning() {
        let c = cycle(4);
        assert_eq!(
            conditional_edge_probability(&c, 0, &[], &[]).unwrap(),
            edge_in_ust_probability(&c, 0).unwrap()
        );
        assert_eq!(conditional_edge_probability(&c, 0, &[2], &[]).unwrap(), ratio(2, 3));
        assert_eq!(conditional_edge_probability(&c, 0, &[], &[2]).unwrap(), ratio(1, 1));
        assert_eq!(
            conditional_edge_probability(&c, 0, &[1, 2, 3], &[]).unwrap(),
            ratio(0, 1)
        );
        assert_eq!(
            conditional_edge_probability(&c, 0, &[], &[1, 2]).unwrap_err(),
            OracleError::Disconnected
        );
        assert_eq!(
            conditional_edge_probability(&c, 0, &[1], &[1]).unwrap_err(),
            OracleError::Overlap(1)
        );
        assert_eq!(
            conditional_edge_probability(&c, 0, &[0], &[]).unwrap_err(),
            OracleError::ConstrainedTarget(0)
        );
    }

    #[test]
    fn resistances() {
        let mut one = DenseNetwork::new(2);
        one.add_edge(0, 1);
        assert_eq!(
            effective_resistance_exact(&one, 0, 1).unwrap(),
            Resistance::Finite(ratio(1, 1))
        );
        // Two parallel paths of length two.
        let c = cycle(4);
        assert_eq!(
            effective_resistance_exact(&c, 0, 2).unwrap(),
            Resistance::Finite(ratio(1, 1))
        );
        assert_eq!(
            effective_resistance_exact(&c, 0, 1).unwrap(),
            Resistance::Finite(ratio(3, 4))
        );
        let apart = DenseNetwork::new(2);
        assert_eq!(effective_resistance_exact(&apart, 0, 1).unwrap(), Resistance::Infinite);
        assert_eq!(
            effective_resistance_exact(&c, 1, 1).unwrap_err(),
            OracleError::SameVertex
        );
    }

    #[test]
    fn wired_window_edges_sum_to_vertex_count() {
        let w = Window::grid(2, 3);
        let g = DenseNetwork::from_window(&w, Boundary::Wired);
        let total: BigRational = (0..g.num_edges())
            .map(|e| edge_in_ust_probability(&g, e).unwrap())
            .sum();
        assert_eq!(total, ratio(g.num_vertices() as i64 - 1, 1));
        // Every vertex has degree 4 in the wired network.
        let mut deg = vec![0; g.num_vertices()];
        for e in 0..g.num_edges() {
            let (u, v) = g.endpoints(e);
            deg[u] += 1;
            deg[v] += 1;
        }
        assert!(deg[..w.num_vertices()].iter().all(|&x| x == 4));
    }

    #[test]
    fn float_screen_matches_exact() {
        let w = Window::cube(2, 2);
        let g = DenseNetwork::from_window(&w, Boundary::Wired);
        let a = [g.edge_id(&Edge::new(Point::new(&[0, 0]), 0)).unwrap()];
        let b = [g.edge_id(&Edge::new(Point::new(&[-1, -1]), 1)).unwrap()];
        for e in (0..g.num_edges()).filter(|e| !a.contains(e) && !b.contains(e)) {
            let exact = ratio_to_f64(&conditional_edge_probability(&g, e, &a, &b).unwrap());
            let approx = conditional_edge_probability_f64(&g, e, &a, &b).unwrap();
            assert!((exact - approx).abs() < 1e-12, "{e}: {exact} vs {approx}");
        }
    }

    #[test]
    fn refuses_large_networks() {
        let g = DenseNetwork::new(10).with_limit(5);
        assert!(matches!(spanning_tree_count(&g), Err(OracleError::TooLarge { .. })));
    }
}
