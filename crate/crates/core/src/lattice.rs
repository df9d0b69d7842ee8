//! Geometry of finite windows of Z^d.
//!
//! Vertices are [`Point`]s, edges are stored in canonical form (lower endpoint
//! plus axis), and a [`Window`] assigns every vertex a dense index in
//! lexicographic order so that per-vertex and per-edge data can live in flat
//! vectors. An edge whose lower endpoint has index `i` along axis `a` occupies
//! *slot* `i * d + a`; [`EdgeSet`] is a bitset over those slots.
//!
//! The box-percolation cell structure lives here as well: for half-width `k`
//! and a center `z` in `(2kZ)^d`, the cell `Q_k^z` holds the edges of the box
//! `[-k, k]^d + z` except those lying in one of its lower faces. Every edge of
//! Z^d belongs to exactly one cell, and [`cell_of_edge`] finds it.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Largest supported dimension.
pub const MAX_DIM: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    BadDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("window bounds are inverted along axis {0}")]
    InvertedWindow(usize),
    #[error("points {0} and {1} are not nearest neighbours")]
    NotAdjacent(Point, Point),
    #[error("cannot parse {what} from {input:?}")]
    Parse { what: &'static str, input: String },
    #[error("half-width k must be at least 1, got {0}")]
    BadHalfWidth(i64),
}

/// A vertex of Z^d. Unused trailing coordinates are kept at zero so the derived
/// ordering is lexicographic within a dimension.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[i64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "dimension {} unsupported",
            coords.len()
        );
        let mut c = [0i32; MAX_DIM];
        for (dst, &src) in c.iter_mut().zip(coords) {
            *dst = i32::try_from(src).expect("coordinate out of i32 range");
        }
        Point {
            dim: coords.len() as u8,
            coords: c,
        }
    }

    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Point {
            dim: dim as u8,
            coords: [0; MAX_DIM],
        }
    }

    /// `value` on every coordinate.
    pub fn splat(dim: usize, value: i64) -> Self {
        Point::new(&vec![value; dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn get(&self, axis: usize) -> i64 {
        debug_assert!(axis < self.dim());
        self.coords[axis] as i64
    }

    pub fn coords(&self) -> impl Iterator<Item = i64> + '_ {
        self.coords[..self.dim()].iter().map(|&c| c as i64)
    }

    #[inline]
    pub fn with(&self, axis: usize, value: i64) -> Self {
        let mut p = *self;
        p.coords[axis] = i32::try_from(value).expect("coordinate out of i32 range");
        p
    }

    #[inline]
    pub fn shifted(&self, axis: usize, delta: i64) -> Self {
        self.with(axis, self.get(axis) + delta)
    }

    pub fn add(&self, other: &Point) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut p = *self;
        for i in 0..self.dim() {
            p.coords[i] += other.coords[i];
        }
        p
    }

    pub fn scaled(&self, factor: i64) -> Self {
        let v: Vec<i64> = self.coords().map(|c| c * factor).collect();
        Point::new(&v)
    }

    /// ∞-norm.
    pub fn linf_norm(&self) -> i64 {
        self.coords().map(i64::abs).max().unwrap_or(0)
    }

    pub fn linf_dist(&self, other: &Point) -> i64 {
        debug_assert_eq!(self.dim, other.dim);
        self.coords()
            .zip(other.coords())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    /// The 2d nearest neighbours, ordered by axis then direction (−, +).
    pub fn neighbors(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.dim()).flat_map(move |a| [self.shifted(a, -1), self.shifted(a, 1)])
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Point {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LatticeError::Parse {
            what: "vertex",
            input: s.to_string(),
        };
        let coords = s
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| err()))
            .collect::<Result<Vec<_>, _>>()?;
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(err());
        }
        if coords.iter().any(|&c| i32::try_from(c).is_err()) {
            return Err(err());
        }
        Ok(Point::new(&coords))
    }
}

/// A nearest-neighbour edge in canonical form: the lexicographically smaller
/// endpoint and the axis along which the other endpoint sits one step up.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    base: Point,
    axis: u8,
}

impl Edge {
    pub fn new(base: Point, axis: usize) -> Self {
        assert!(axis < base.dim(), "axis {axis} out of range");
        Edge { base, axis: axis as u8 }
    }

    /// The canonical edge joining two neighbouring points, in either order.
    pub fn between(u: Point, v: Point) -> Result<Self, LatticeError> {
        if u.dim != v.dim {
            return Err(LatticeError::DimensionMismatch {
                expected: u.dim(),
                got: v.dim(),
            });
        }
        let mut diff_axis = None;
        for a in 0..u.dim() {
            match v.get(a) - u.get(a) {
                0 => {}
                1 | -1 if diff_axis.is_none() => diff_axis = Some(a),
                _ => return Err(LatticeError::NotAdjacent(u, v)),
            }
        }
        let a = diff_axis.ok_or(LatticeError::NotAdjacent(u, v))?;
        let base = if u.get(a) < v.get(a) { u } else { v };
        Ok(Edge::new(base, a))
    }

    #[inline]
    pub fn base(&self) -> Point {
        self.base
    }

    #[inline]
    pub fn axis(&self) -> usize {
        self.axis as usize
    }

    #[inline]
    pub fn tip(&self) -> Point {
        self.base.shifted(self.axis(), 1)
    }

    #[inline]
    pub fn endpoints(&self) -> (Point, Point) {
        (self.base, self.tip())
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn has_endpoint(&self, p: &Point) -> bool {
        self.base == *p || self.tip() == *p
    }
}

impl fmt::Debug for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.base, self.tip())
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for Edge {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (u, v) = s.split_once(';').ok_or_else(|| LatticeError::Parse {
            what: "edge",
            input: s.to_string(),
        })?;
        Edge::between(u.parse()?, v.parse()?)
    }
}

/// A membership test on vertices.
pub trait Region {
    fn contains(&self, p: &Point) -> bool;

    /// An edge lies in a region when both endpoints do.
    fn contains_edge(&self, e: &Edge) -> bool {
        self.contains(&e.base()) && self.contains(&e.tip())
    }
}

/// An axis-aligned box `lo ≤ v ≤ hi` of Z^d with dense vertex indexing.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Window {
    lo: Point,
    hi: Point,
    extent: [usize; MAX_DIM],
    stride: [usize; MAX_DIM],
    count: usize,
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Window[{} .. {}]", self.lo, self.hi)
    }
}

impl Window {
    pub fn new(lo: Point, hi: Point) -> Result<Self, LatticeError> {
        if lo.dim() != hi.dim() {
            return Err(LatticeError::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        let d = lo.dim();
        let mut extent = [1usize; MAX_DIM];
        for a in 0..d {
            if hi.get(a) < lo.get(a) {
                return Err(LatticeError::InvertedWindow(a));
            }
            extent[a] = (hi.get(a) - lo.get(a) + 1) as usize;
        }
        // Last axis varies fastest, so index order is lexicographic order.
        let mut stride = [0usize; MAX_DIM];
        let mut s = 1usize;
        for a in (0..d).rev() {
            stride[a] = s;
            s *= extent[a];
        }
        Ok(Window {
            lo,
            hi,
            extent,
            stride,
            count: s,
        })
    }

    /// `B_n = [-n, n]^d`.
    pub fn cube(dim: usize, n: i64) -> Self {
        Window::ball(&Point::origin(dim), n)
    }

    /// `B_n^z = [-n, n]^d + z`.
    pub fn ball(center: &Point, n: i64) -> Self {
        assert!(n >= 0, "negative radius");
        let lo: Vec<i64> = center.coords().map(|c| c - n).collect();
        let hi: Vec<i64> = center.coords().map(|c| c + n).collect();
        Window::new(Point::new(&lo), Point::new(&hi)).expect("valid ball")
    }

    /// `[0, side-1]^d`.
    pub fn grid(dim: usize, side: i64) -> Self {
        assert!(side >= 1);
        Window::new(Point::origin(dim), Point::splat(dim, side - 1)).expect("valid grid")
    }

    /// Grow by `pad` on every side.
    pub fn padded(&self, pad: i64) -> Self {
        let lo: Vec<i64> = self.lo.coords().map(|c| c - pad).collect();
        let hi: Vec<i64> = self.hi.coords().map(|c| c + pad).collect();
        Window::new(Point::new(&lo), Point::new(&hi)).expect("padding keeps bounds ordered")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> Point {
        self.lo
    }

    pub fn hi(&self) -> Point {
        self.hi
    }

    pub fn extent(&self, axis: usize) -> usize {
        self.extent[axis]
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.count
    }

    /// Number of slots in an edge bitset over this window (`|V| * d`).
    #[inline]
    pub fn num_edge_slots(&self) -> usize {
        self.count * self.dim()
    }

    /// Number of nearest-neighbour edges with both endpoints inside.
    pub fn num_edges(&self) -> usize {
        (0..self.dim())
            .map(|a| {
                let mut prod = 1usize;
                for b in 0..self.dim() {
                    prod *= if a == b { self.extent[b] - 1 } else { self.extent[b] };
                }
                prod
            })
            .sum()
    }

    pub fn contains_point(&self, p: &Point) -> bool {
        p.dim() == self.dim() && (0..self.dim()).all(|a| self.lo.get(a) <= p.get(a) && p.get(a) <= self.hi.get(a))
    }

    /// True when `other` lies entirely inside `self`.
    pub fn contains_window(&self, other: &Window) -> bool {
        self.contains_point(&other.lo) && self.contains_point(&other.hi)
    }

    #[inline]
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        if !self.contains_point(p) {
            return None;
        }
        let mut idx = 0usize;
        for a in 0..self.dim() {
            idx += (p.get(a) - self.lo.get(a)) as usize * self.stride[a];
        }
        Some(idx)
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Point {
        debug_assert!(idx < self.count);
        let mut p = self.lo;
        let mut rest = idx;
        for a in 0..self.dim() {
            let q = rest / self.stride[a];
            rest -= q * self.stride[a];
            p.coords[a] += q as i32;
        }
        p
    }

    /// Coordinate of vertex `idx` along `axis`, relative to `lo`.
    #[inline]
    pub fn offset_along(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride[axis]) % self.extent[axis]
    }

    /// Index of the neighbour of `idx` one step along `axis` in direction
    /// `up`, or `None` if it leaves the window.
    #[inline]
    pub fn step(&self, idx: usize, axis: usize, up: bool) -> Option<usize> {
        let off = self.offset_along(idx, axis);
        if up {
            (off + 1 < self.extent[axis]).then(|| idx + self.stride[axis])
        } else {
            (off > 0).then(|| idx - self.stride[axis])
        }
    }

    pub fn on_boundary(&self, p: &Point) -> bool {
        self.contains_point(p) && (0..self.dim()).any(|a| p.get(a) == self.lo.get(a) || p.get(a) == self.hi.get(a))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    /// Slot of an edge with both endpoints inside the window.
    #[inline]
    pub fn edge_slot(&self, e: &Edge) -> Option<usize> {
        let i = self.index_of(&e.base())?;
        self.step(i, e.axis(), true)?;
        Some(i * self.dim() + e.axis())
    }

    /// Whether `slot` names an in-window edge.
    #[inline]
    pub fn slot_is_edge(&self, slot: usize) -> bool {
        let d = self.dim();
        self.step(slot / d, slot % d, true).is_some()
    }

    #[inline]
    pub fn slot_endpoints(&self, slot: usize) -> (usize, usize) {
        let d = self.dim();
        let i = slot / d;
        (i, i + self.stride[slot % d])
    }

    pub fn slot_edge(&self, slot: usize) -> Edge {
        let d = self.dim();
        Edge::new(self.point(slot / d), slot % d)
    }

    /// In-window edges in canonical (lexicographic) order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edge_slots().map(move |s| self.slot_edge(s))
    }

    pub fn edge_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edge_slots()).filter(move |&s| self.slot_is_edge(s))
    }
}

impl Region for Window {
    fn contains(&self, p: &Point) -> bool {
        self.contains_point(p)
    }
}

/// `A_{m,n}` around `center`: vertices with `m < ‖v − center‖_∞ ≤ n`. A negative
/// inner radius gives the full ball `B_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annulus {
    pub center: Point,
    pub inner: i64,
    pub outer: i64,
}

impl Annulus {
    pub fn new(center: Point, inner: i64, outer: i64) -> Self {
        Annulus { center, inner, outer }
    }

    /// Annulus with real radii; integer norms satisfy `a < r ≤ b` iff
    /// `⌊a⌋ < r ≤ ⌊b⌋`.
    pub fn from_real(center: Point, inner: f64, outer: f64) -> Self {
        Annulus::new(center, inner.floor() as i64, outer.floor() as i64)
    }

    pub fn is_empty(&self) -> bool {
        self.outer <= self.inner.max(-1)
    }
}

impl Region for Annulus {
    fn contains(&self, p: &Point) -> bool {
        let r = p.linf_dist(&self.center);
        r <= self.outer && r > self.inner
    }
}

/// Set of in-window edges of a fixed window, stored as a bitset over slots.
#[derive(Clone, PartialEq, Eq)]
pub struct EdgeSet {
    window: Window,
    words: Vec<u64>,
    len: usize,
}

impl fmt::Debug for EdgeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeSet")
            .field("window", &self.window)
            .field("len", &self.len)
            .finish()
    }
}

impl EdgeSet {
    pub fn new(window: Window) -> Self {
        let words = vec![0u64; window.num_edge_slots().div_ceil(64)];
        EdgeSet { window, words, len: 0 }
    }

    /// All edges of the window.
    pub fn full(window: Window) -> Self {
        let mut s = EdgeSet::new(window);
        for slot in 0..s.window.num_edge_slots() {
            if s.window.slot_is_edge(slot) {
                s.insert_slot(slot);
            }
        }
        s
    }

    pub fn from_edges<'a>(window: Window, edges: impl IntoIterator<Item = &'a Edge>) -> Self {
        let mut s = EdgeSet::new(window);
        for e in edges {
            s.insert(e);
        }
        s
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains_slot(&self, slot: usize) -> bool {
        self.words[slot >> 6] >> (slot & 63) & 1 == 1
    }

    #[inline]
    pub fn insert_slot(&mut self, slot: usize) -> bool {
        debug_assert!(self.window.slot_is_edge(slot));
        let w = &mut self.words[slot >> 6];
        let bit = 1u64 << (slot & 63);
        let fresh = *w & bit == 0;
        *w |= bit;
        self.len += fresh as usize;
        fresh
    }

    #[inline]
    pub fn remove_slot(&mut self, slot: usize) -> bool {
        let w = &mut self.words[slot >> 6];
        let bit = 1u64 << (slot & 63);
        let present = *w & bit != 0;
        *w &= !bit;
        self.len -= present as usize;
        present
    }

    /// Insert an edge of the window; panics if an endpoint lies outside.
    pub fn insert(&mut self, e: &Edge) -> bool {
        let slot = self
            .window
            .edge_slot(e)
            .unwrap_or_else(|| panic!("edge {e} outside {:?}", self.window));
        self.insert_slot(slot)
    }

    /// Insert if the edge lies in the window; returns whether it was added.
    pub fn insert_clipped(&mut self, e: &Edge) -> bool {
        match self.window.edge_slot(e) {
            Some(slot) => self.insert_slot(slot),
            None => false,
        }
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.window.edge_slot(e).is_some_and(|slot| self.contains_slot(slot))
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let t = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + t)
            })
        })
    }

    /// Edges in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Edge> + '_ {
        self.slots().map(|s| self.window.slot_edge(s))
    }

    pub fn union_with(&mut self, other: &EdgeSet) {
        assert_eq!(self.window, other.window, "edge sets over different windows");
        let mut len = 0usize;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
            len += a.count_ones() as usize;
        }
        self.len = len;
    }

    /// Edges of `self` with both endpoints in `region`.
    pub fn restricted<R: Region + ?Sized>(&self, region: &R) -> EdgeSet {
        let mut out = EdgeSet::new(self.window.clone());
        for slot in self.slots() {
            if region.contains_edge(&self.window.slot_edge(slot)) {
                out.insert_slot(slot);
            }
        }
        out
    }

    /// Re-index onto another window, keeping the edges that fit inside it.
    pub fn reindexed(&self, window: &Window) -> EdgeSet {
        let mut out = EdgeSet::new(window.clone());
        if self.window.contains_window(window) {
            // Fast path: rows along the last axis are contiguous in both windows.
            let d = window.dim();
            let len = window.extent[d - 1];
            let mut valid = vec![false; d];
            for start in (0..window.count).step_by(len) {
                let src = self
                    .window
                    .index_of(&window.point(start))
                    .expect("inside the source window");
                for (a, v) in valid.iter_mut().enumerate().take(d - 1) {
                    *v = window.offset_along(start, a) + 1 < window.extent[a];
                }
                for j in 0..len {
                    valid[d - 1] = j + 1 < len;
                    for (a, &ok) in valid.iter().enumerate() {
                        if ok && self.contains_slot((src + j) * d + a) {
                            out.insert_slot((start + j) * d + a);
                        }
                    }
                }
            }
        } else {
            for e in self.iter() {
                out.insert_clipped(&e);
            }
        }
        out
    }
}

/// ∞-norm of `p`.
pub fn linf_norm(p: &Point) -> i64 {
    p.linf_norm()
}

/// Number of coordinates of `u` lying in `k + 2kZ`.
pub fn coordinate_rank(u: &Point, k: i64) -> usize {
    assert!(k >= 1, "half-width must be positive");
    u.coords().filter(|&c| (c - k).rem_euclid(2 * k) == 0).count()
}

/// Center of the unique cell `Q_k^z` containing `e`.
///
/// Take the endpoint `u` of smaller coordinate rank; each coordinate of the
/// center is the multiple of `2k` whose window `(z_l − k, z_l + k]` holds `u_l`.
pub fn cell_of_edge(e: &Edge, k: i64) -> Point {
    assert!(k >= 1, "half-width must be positive");
    let (a, b) = e.endpoints();
    let u = if coordinate_rank(&a, k) <= coordinate_rank(&b, k) {
        a
    } else {
        b
    };
    let z: Vec<i64> = u.coords().map(|c| 2 * k * (c + k - 1).div_euclid(2 * k)).collect();
    Point::new(&z)
}

/// Definition-level membership: `e ⊂ B_k^z` and no axis `l` has both endpoints
/// on the lower face `x_l = z_l − k`.
pub fn cell_contains(z: &Point, k: i64, e: &Edge) -> bool {
    let (u, v) = e.endpoints();
    let in_box = |p: &Point| (0..p.dim()).all(|l| (p.get(l) - z.get(l)).abs() <= k);
    if !in_box(&u) || !in_box(&v) {
        return false;
    }
    !(0..z.dim()).any(|l| u.get(l) == z.get(l) - k && v.get(l) == z.get(l) - k)
}

/// Whether `z` is a cell center for half-width `k`.
pub fn is_cell_center(z: &Point, k: i64) -> bool {
    z.coords().all(|c| c.rem_euclid(2 * k) == 0)
}

/// Number of edges in every cell: `d (2k)^d`.
pub fn cell_size(dim: usize, k: i64) -> usize {
    dim * (2 * k as usize).pow(dim as u32)
}

/// The `d (2k)^d` canonical edges of `Q_k^z`, in canonical order.
pub fn cell_edges(z: &Point, k: i64) -> Vec<Edge> {
    let mut out = Vec::with_capacity(cell_size(z.dim(), k));
    for_each_cell_edge(z, k, |e| out.push(e));
    out.sort();
    out
}

/// Visit the edges of `Q_k^z` (axis-major order, not sorted).
///
/// Along its own axis an edge base ranges over `[z_a − k, z_a + k − 1]`; on
/// every other axis the lower face `z_l − k` is excluded, leaving
/// `[z_l − k + 1, z_l + k]`.
pub fn for_each_cell_edge(z: &Point, k: i64, mut f: impl FnMut(Edge)) {
    let d = z.dim();
    let side = (2 * k) as usize;
    let total = side.pow(d as u32);
    for axis in 0..d {
        for t in 0..total {
            let mut rest = t;
            let mut base = *z;
            for l in (0..d).rev() {
                let off = (rest % side) as i64;
                rest /= side;
                let lo = if l == axis { z.get(l) - k } else { z.get(l) - k + 1 };
                base = base.with(l, lo + off);
            }
            f(Edge::new(base, axis));
        }
    }
}

/// A cell center together with the half-width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub k: i64,
    pub center: Point,
}

impl Cell {
    pub fn new(center: Point, k: i64) -> Result<Self, LatticeError> {
        if k < 1 {
            return Err(LatticeError::BadHalfWidth(k));
        }
        assert!(is_cell_center(&center, k), "{center} is not in (2kZ)^d");
        Ok(Cell { k, center })
    }

    pub fn edges(&self) -> Vec<Edge> {
        cell_edges(&self.center, self.k)
    }

    pub fn contains(&self, e: &Edge) -> bool {
        cell_contains(&self.center, self.k, e)
    }
}

/// Centers of all cells whose box meets `window`, in lexicographic order.
/// Every cell with an in-window edge is among them.
pub fn cell_centers_meeting(window: &Window, k: i64) -> Vec<Point> {
    let d = window.dim();
    let two_k = 2 * k;
    // z_l − k ≤ hi_l and z_l + k ≥ lo_l.
    let ranges: Vec<(i64, i64)> = (0..d)
        .map(|l| {
            let lo =
                (window.lo().get(l) - k).div_euclid(two_k) + ((window.lo().get(l) - k).rem_euclid(two_k) != 0) as i64;
            let hi = (window.hi().get(l) + k).div_euclid(two_k);
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return out;
    }
    loop {
        out.push(Point::new(&cur.iter().map(|c| c * two_k).collect::<Vec<_>>()));
        let mut l = d;
        loop {
            if l == 0 {
                return out;
            }
            l -= 1;
            if cur[l] < ranges[l].1 {
                cur[l] += 1;
                for (m, c) in cur.iter_mut().enumerate().skip(l + 1) {
                    *c = ranges[m].0;
                }
                break;
            }
        }
    }
}

/// Edges with exactly one endpoint in `vertices`. Edges leaving the window
/// from a vertex of `vertices` are included when `wired` is set, since the
/// exterior then stands for the rest of Z^d.
pub fn boundary_edges(vertices: &[Point], window: &Window, wired: bool) -> Vec<Edge> {
    let inside: std::collections::HashSet<Point> = vertices.iter().copied().collect();
    let mut out = Vec::new();
    for v in &inside {
        debug_assert!(window.contains_point(v));
        for w in v.neighbors() {
            if inside.contains(&w) {
                continue;
            }
            if window.contains_point(&w) || wired {
                out.push(Edge::between(*v, w).expect("neighbours"));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
