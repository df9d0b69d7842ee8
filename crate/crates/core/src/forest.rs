//! Uniform spanning trees and forests on windows.
//!
//! A [`Network`] is a window with a boundary condition and optional
//! constraints: a set `A` of edges forced into the tree (contracted) and a set
//! `B` forbidden from it (deleted). With a wired boundary every lattice edge
//! leaving the window is kept and its outer endpoint is identified with a
//! single boundary vertex, so each window vertex has degree exactly `2d`.
//!
//! Sampling uses Wilson's algorithm rooted at the boundary vertex (wired) or
//! at the first window vertex (free). Conditioning on `A ⊆ T, B ∩ T = ∅` is
//! handled by walking on `(G / A) \ B`, where each step picks uniformly among
//! the surviving incident edges of the merged vertex.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use rand::Rng;
use thiserror::Error;

use crate::lattice::{Edge, EdgeSet, Point, Window};
use crate::seed;
use crate::text::ForestSnapshot;
use crate::unionfind::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("vertex {0} is separated from the root of the network")]
    Separated(Point),
    #[error("edge set contains a cycle through {0}")]
    Cycle(Edge),
    #[error("constraint edge {0} is not an edge of the network")]
    NotInNetwork(Edge),
    #[error("edge {0} is both contracted and deleted")]
    Overlap(Edge),
    #[error("contracted set closes a cycle at {0}")]
    ContractedCycle(Edge),
    #[error("retention probability {0} outside [0, 1]")]
    BadProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Wired,
    Free,
}

/// A window with boundary condition and contraction/deletion constraints.
#[derive(Debug, Clone)]
pub struct Network {
    window: Window,
    boundary: Boundary,
    contracted: Vec<Edge>,
    deleted: Vec<Edge>,
}

impl Network {
    pub fn new(window: Window, boundary: Boundary) -> Self {
        Network {
            window,
            boundary,
            contracted: Vec::new(),
            deleted: Vec::new(),
        }
    }

    /// Attach constraints. `contracted` must be acyclic in the network and
    /// disjoint from `deleted`.
    pub fn with_constraints(mut self, contracted: &[Edge], deleted: &[Edge]) -> Result<Self, ForestError> {
        let mut a = contracted.to_vec();
        a.sort();
        a.dedup();
        let mut b = deleted.to_vec();
        b.sort();
        b.dedup();
        for e in a.iter().chain(&b) {
            if !self.has_edge(e) {
                return Err(ForestError::NotInNetwork(*e));
            }
        }
        let b_set: HashSet<Edge> = b.iter().copied().collect();
        if let Some(e) = a.iter().find(|e| b_set.contains(e)) {
            return Err(ForestError::Overlap(*e));
        }
        let graph = MultiGraph::build(&self.window, self.boundary);
        let mut uf = UnionFind::new(graph.num_nodes);
        for e in &a {
            let (u, v) = graph.endpoints_of(&self.window, e);
            if !uf.union(u, v) {
                return Err(ForestError::ContractedCycle(*e));
            }
        }
        self.contracted = a;
        self.deleted = b;
        Ok(self)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn contracted(&self) -> &[Edge] {
        &self.contracted
    }

    pub fn deleted(&self) -> &[Edge] {
        &self.deleted
    }

    pub fn is_constrained(&self) -> bool {
        !self.contracted.is_empty() || !self.deleted.is_empty()
    }

    /// In-window edges, plus the edges leaving the window when wired.
    pub fn has_edge(&self, e: &Edge) -> bool {
        let (u, v) = e.endpoints();
        let (iu, iv) = (self.window.contains_point(&u), self.window.contains_point(&v));
        match self.boundary {
            Boundary::Free => iu && iv,
            Boundary::Wired => iu || iv,
        }
    }

    /// Every edge of the network in canonical order.
    pub fn lattice_edges(&self) -> Vec<Edge> {
        let mut out = MultiGraph::build(&self.window, self.boundary).labels;
        out.sort();
        out
    }
}

/// Node-and-edge view of a network: window vertices keep their indices and the
/// wired boundary, if any, is node `|V|`.
#[derive(Debug, Clone)]
pub(crate) struct MultiGraph {
    pub num_nodes: usize,
    pub ends: Vec<(u32, u32)>,
    pub labels: Vec<Edge>,
    pub boundary_node: Option<usize>,
}

impl MultiGraph {
    pub fn build(window: &Window, boundary: Boundary) -> Self {
        let n = window.num_vertices();
        let d = window.dim();
        let wired = boundary == Boundary::Wired;
        let bnode = n;
        let mut ends = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            for a in 0..d {
                match window.step(i, a, true) {
                    Some(j) => {
                        ends.push((i as u32, j as u32));
                        labels.push(window.slot_edge(i * d + a));
                    }
                    None if wired => {
                        ends.push((i as u32, bnode as u32));
                        labels.push(Edge::new(window.point(i), a));
                    }
                    None => {}
                }
                if wired && window.step(i, a, false).is_none() {
                    let p = window.point(i);
                    ends.push((i as u32, bnode as u32));
                    labels.push(Edge::new(p.shifted(a, -1), a));
                }
            }
        }
        MultiGraph {
            num_nodes: n + wired as usize,
            ends,
            labels,
            boundary_node: wired.then_some(bnode),
        }
    }

    /// Node ids of an edge's endpoints (exterior endpoints map to the boundary).
    pub fn endpoints_of(&self, window: &Window, e: &Edge) -> (usize, usize) {
        let node = |p: &Point| {
            window
                .index_of(p)
                .or(self.boundary_node)
                .expect("edge endpoint outside a free network")
        };
        (node(&e.base()), node(&e.tip()))
    }
}

/// A graph Wilson's algorithm can walk on. Tokens identify the edge used by a
/// step so that parallel edges stay distinguishable.
trait WalkGraph {
    fn num_nodes(&self) -> usize;
    fn root(&self) -> usize;
    fn step<R: Rng>(&self, node: usize, rng: &mut R) -> u32;
    fn follow(&self, node: usize, token: u32) -> usize;
}

/// Loop-erased random walks into the growing tree; returns the token of each
/// node's parent edge (`u32::MAX` at the root).
fn wilson<G: WalkGraph, R: Rng>(g: &G, rng: &mut R) -> Vec<u32> {
    let n = g.num_nodes();
    let mut in_tree = vec![false; n];
    let mut token = vec![u32::MAX; n];
    in_tree[g.root()] = true;
    for start in 0..n {
        let mut u = start;
        while !in_tree[u] {
            let t = g.step(u, rng);
            token[u] = t;
            u = g.follow(u, t);
        }
        u = start;
        while !in_tree[u] {
            in_tree[u] = true;
            u = g.follow(u, token[u]);
        }
    }
    token
}

/// Unconstrained lattice window; tokens are directions `2 * axis + up`.
struct LatticeWalk<'a> {
    window: &'a Window,
    wired: bool,
}

impl WalkGraph for LatticeWalk<'_> {
    fn num_nodes(&self) -> usize {
        self.window.num_vertices() + self.wired as usize
    }

    fn root(&self) -> usize {
        if self.wired {
            self.window.num_vertices()
        } else {
            0
        }
    }

    #[inline]
    fn step<R: Rng>(&self, node: usize, rng: &mut R) -> u32 {
        let dirs = 2 * self.window.dim() as u32;
        loop {
            let t = rng.gen_range(0..dirs);
            if self.wired || self.window.step(node, (t / 2) as usize, t % 2 == 1).is_some() {
                return t;
            }
        }
    }

    #[inline]
    fn follow(&self, node: usize, token: u32) -> usize {
        self.window
            .step(node, (token / 2) as usize, token % 2 == 1)
            .unwrap_or(self.window.num_vertices())
    }
}

/// Contracted multigraph in CSR form; tokens are edge ids.
struct ContractedWalk {
    root: usize,
    offsets: Vec<usize>,
    incident: Vec<(u32, u32)>,
    other_end: Vec<(u32, u32)>,
}

impl WalkGraph for ContractedWalk {
    fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    fn root(&self) -> usize {
        self.root
    }

    fn step<R: Rng>(&self, node: usize, rng: &mut R) -> u32 {
        let (lo, hi) = (self.offsets[node], self.offsets[node + 1]);
        self.incident[rng.gen_range(lo..hi)].0
    }

    fn follow(&self, node: usize, token: u32) -> usize {
        let (a, b) = self.other_end[token as usize];
        if a as usize == node {
            b as usize
        } else {
            a as usize
        }
    }
}

/// An acyclic set of lattice edges over a window. Edges leaving the window
/// (present in wired samples) are kept separately.
#[derive(Debug, Clone)]
pub struct Forest {
    edges: EdgeSet,
    exterior: Vec<Edge>,
    components: OnceLock<Vec<u32>>,
}

impl PartialEq for Forest {
    fn eq(&self, other: &Self) -> bool {
        self.edges == other.edges && self.exterior == other.exterior
    }
}

impl Forest {
    pub fn new(edges: EdgeSet, mut exterior: Vec<Edge>) -> Self {
        exterior.sort();
        exterior.dedup();
        Forest {
            edges,
            exterior,
            components: OnceLock::new(),
        }
    }

    pub fn window(&self) -> &Window {
        self.edges.window()
    }

    /// In-window edges.
    pub fn edges(&self) -> &EdgeSet {
        &self.edges
    }

    pub fn into_edges(self) -> EdgeSet {
        self.edges
    }

    /// Edges joining the window to the wired exterior.
    pub fn exterior(&self) -> &[Edge] {
        &self.exterior
    }

    pub fn len(&self) -> usize {
        self.edges.len() + self.exterior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e) || self.exterior.binary_search(e).is_ok()
    }

    /// All edges in canonical order.
    pub fn all_edges(&self) -> Vec<Edge> {
        let mut v: Vec<Edge> = self.edges.iter().chain(self.exterior.iter().copied()).collect();
        v.sort();
        v
    }

    /// Component id of each window vertex under the in-window edges, numbered
    /// by first appearance in index order. Isolated vertices get their own id.
    pub fn components(&self) -> &[u32] {
        self.components.get_or_init(|| {
            let w = self.window();
            let mut uf = UnionFind::new(w.num_vertices());
            for slot in self.edges.slots() {
                let (a, b) = w.slot_endpoints(slot);
                uf.union(a, b);
            }
            let mut label = vec![u32::MAX; w.num_vertices()];
            let mut out = vec![0u32; w.num_vertices()];
            let mut next = 0u32;
            for (i, o) in out.iter_mut().enumerate() {
                let r = uf.find(i);
                if label[r] == u32::MAX {
                    label[r] = next;
                    next += 1;
                }
                *o = label[r];
            }
            out
        })
    }

    pub fn num_components(&self) -> usize {
        self.components().iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// No cycle among the in-window edges.
    pub fn is_acyclic(&self) -> bool {
        let w = self.window();
        let mut uf = UnionFind::new(w.num_vertices());
        self.edges.slots().all(|slot| {
            let (a, b) = w.slot_endpoints(slot);
            uf.union(a, b)
        })
    }

    pub fn snapshot(&self, k: i64, seed: u64) -> ForestSnapshot {
        ForestSnapshot {
            dim: self.window().dim(),
            k,
            seed,
            edges: self.all_edges(),
        }
    }
}

/// Uniform spanning tree of the constrained network.
///
/// The result contains every contracted edge and no deleted edge; restricted
/// to the window it is a spanning forest, each of whose trees reaches the
/// boundary when wired.
pub fn sample_ust(net: &Network, seed: u64) -> Result<Forest, ForestError> {
    let mut rng = seed::rng(seed);
    let window = net.window();
    if !net.is_constrained() {
        let walk = LatticeWalk {
            window,
            wired: net.boundary() == Boundary::Wired,
        };
        let tokens = wilson(&walk, &mut rng);
        let d = window.dim();
        let mut edges = EdgeSet::new(window.clone());
        let mut exterior = Vec::new();
        for (i, &t) in tokens.iter().enumerate().take(window.num_vertices()) {
            if t == u32::MAX {
                continue;
            }
            let (axis, up) = ((t / 2) as usize, t % 2 == 1);
            match window.step(i, axis, up) {
                Some(j) => {
                    let base = if up { i } else { j };
                    edges.insert_slot(base * d + axis);
                }
                None => {
                    let p = window.point(i);
                    let q = p.shifted(axis, if up { 1 } else { -1 });
                    exterior.push(Edge::between(p, q).expect("neighbours"));
                }
            }
        }
        return Ok(Forest::new(edges, exterior));
    }

    let graph = MultiGraph::build(window, net.boundary());
    let mut uf = UnionFind::new(graph.num_nodes);
    for e in net.contracted() {
        let (u, v) = graph.endpoints_of(window, e);
        uf.union(u, v);
    }
    // Compact class ids in order of first node.
    let mut class = vec![usize::MAX; graph.num_nodes];
    let mut rep_class = HashMap::new();
    let mut representative = Vec::new();
    for (node, c) in class.iter_mut().enumerate() {
        let r = uf.find(node);
        let next = rep_class.len();
        *c = *rep_class.entry(r).or_insert_with(|| {
            representative.push(node);
            next
        });
    }
    let num_classes = rep_class.len();
    let deleted: HashSet<Edge> = net.deleted().iter().copied().collect();
    let mut other_end = Vec::with_capacity(graph.ends.len());
    let mut degree = vec![0usize; num_classes];
    let mut live = Vec::new();
    for (id, (&(u, v), label)) in graph.ends.iter().zip(&graph.labels).enumerate() {
        let (cu, cv) = (class[u as usize], class[v as usize]);
        other_end.push((cu as u32, cv as u32));
        if cu == cv || deleted.contains(label) {
            continue;
        }
        degree[cu] += 1;
        degree[cv] += 1;
        live.push(id);
    }
    let mut offsets = vec![0usize; num_classes + 1];
    for c in 0..num_classes {
        offsets[c + 1] = offsets[c] + degree[c];
    }
    let mut fill = offsets.clone();
    let mut incident = vec![(0u32, 0u32); offsets[num_classes]];
    for &id in &live {
        let (cu, cv) = other_end[id];
        incident[fill[cu as usize]] = (id as u32, cv);
        fill[cu as usize] += 1;
        incident[fill[cv as usize]] = (id as u32, cu);
        fill[cv as usize] += 1;
    }
    let root = class[graph.boundary_node.unwrap_or(0)];
    let walk = ContractedWalk {
        root,
        offsets,
        incident,
        other_end,
    };

    // Wilson's walk would never terminate on a disconnected graph.
    let mut seen = vec![false; num_classes];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(c) = queue.pop_front() {
        for &(_, nb) in &walk.incident[walk.offsets[c]..walk.offsets[c + 1]] {
            if !seen[nb as usize] {
                seen[nb as usize] = true;
                queue.push_back(nb as usize);
            }
        }
    }
    if let Some(c) = seen.iter().position(|s| !s) {
        return Err(ForestError::Separated(window.point(representative[c])));
    }

    let tokens = wilson(&walk, &mut rng);
    let mut edges = EdgeSet::new(window.clone());
    let mut exterior = Vec::new();
    let mut push = |e: &Edge| {
        if !edges.insert_clipped(e) {
            exterior.push(*e);
        }
    };
    for e in net.contracted() {
        push(e);
    }
    for &t in tokens.iter().filter(|&&t| t != u32::MAX) {
        push(&graph.labels[t as usize]);
    }
    Ok(Forest::new(edges, exterior))
}

/// Half of the window's radius, at least 1.
pub fn default_padding(window: &Window) -> i64 {
    let radius = (0..window.dim())
        .map(|a| (window.extent(a) as i64 - 1) / 2)
        .max()
        .unwrap_or(0);
    (radius / 2).max(1)
}

/// Approximate WUSF of Z^d on `window`: a wired UST on the window grown by
/// `padding`, restricted back to `window`.
pub fn sample_wusf(window: &Window, padding: i64, seed: u64) -> EdgeSet {
    let outer = window.padded(padding);
    let f =
        sample_ust(&Network::new(outer, Boundary::Wired), seed).expect("unconstrained lattice networks are connected");
    f.edges().reindexed(window)
}

/// Keep each edge independently with probability `eps`.
pub fn bernoulli_thin(f: &Forest, eps: f64, seed: u64) -> Result<Forest, ForestError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(ForestError::BadProbability(eps));
    }
    let mut rng = seed::rng(seed);
    let mut edges = EdgeSet::new(f.window().clone());
    for slot in f.edges().slots() {
        if rng.gen::<f64>() < eps {
            edges.insert_slot(slot);
        }
    }
    let exterior = f
        .exterior()
        .iter()
        .filter(|_| rng.gen::<f64>() < eps)
        .copied()
        .collect();
    Ok(Forest::new(edges, exterior))
}

/// Order the edges of an acyclic set so that every edge has an endpoint not
/// touched by any earlier edge.
///
/// Each tree is explored breadth-first from its lexicographically smallest
/// vertex, visiting neighbours in lexicographic order; trees follow one
/// another in the order of their roots.
pub fn order_forest_edges(edges: &[Edge]) -> Result<Vec<Edge>, ForestError> {
    let mut sorted = edges.to_vec();
    sorted.sort();
    sorted.dedup();

    let mut adj: BTreeMap<Point, Vec<(Point, Edge)>> = BTreeMap::new();
    for e in &sorted {
        let (u, v) = e.endpoints();
        adj.entry(u).or_default().push((v, *e));
        adj.entry(v).or_default().push((u, *e));
    }
    let ids: HashMap<Point, usize> = adj.keys().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut uf = UnionFind::new(ids.len());
    for e in &sorted {
        if !uf.union(ids[&e.base()], ids[&e.tip()]) {
            return Err(ForestError::Cycle(*e));
        }
    }
    for list in adj.values_mut() {
        list.sort();
    }

    let mut visited: HashSet<Point> = HashSet::new();
    let mut order = Vec::with_capacity(sorted.len());
    for root in adj.keys() {
        if !visited.insert(*root) {
            continue;
        }
        let mut queue = VecDeque::from([*root]);
        while let Some(v) = queue.pop_front() {
            for (w, e) in &adj[&v] {
                if visited.insert(*w) {
                    order.push(*e);
                    queue.push_back(*w);
                }
            }
        }
    }
    debug_assert_eq!(order.len(), sorted.len());
    Ok(order)
}

/// Whether every edge of `order` has an endpoint untouched by earlier edges.
pub fn verify_fresh_endpoint_order(order: &[Edge]) -> bool {
    let mut touched: HashSet<Point> = HashSet::new();
    order.iter().all(|e| {
        let (u, v) = e.endpoints();
        let fresh = !touched.contains(&u) || !touched.contains(&v);
        touched.insert(u);
        touched.insert(v);
        fresh
    })
}
