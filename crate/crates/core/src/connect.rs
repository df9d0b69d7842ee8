//! Component structure of edge sets: labels, counts, norm extrema, the
//! `U_{j,ℓ}` counts and the local connection event.
//!
//! Isolated vertices are not components. Everything counted here is a
//! component with at least one edge.

use thiserror::Error;

use crate::lattice::{EdgeSet, Point, Window};
use crate::unionfind::UnionFind;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConnectError {
    #[error("empty shell: inner radius {j} exceeds outer radius {l}")]
    EmptyShell { j: i64, l: i64 },
}

pub const ISOLATED: u32 = u32::MAX;

/// Component labels of an edge set over its window, with per-component
/// ∞-norm extrema measured from `center`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    window: Window,
    center: Point,
    labels: Vec<u32>,
    min_norm: Vec<i64>,
    max_norm: Vec<i64>,
    sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Number of components (isolated vertices excluded).
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Label of a vertex index, `None` when isolated.
    pub fn label(&self, idx: usize) -> Option<u32> {
        let l = self.labels[idx];
        (l != ISOLATED).then_some(l)
    }

    pub fn label_of(&self, p: &Point) -> Option<u32> {
        self.window.index_of(p).and_then(|i| self.label(i))
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn min_norm(&self, c: u32) -> i64 {
        self.min_norm[c as usize]
    }

    pub fn max_norm(&self, c: u32) -> i64 {
        self.max_norm[c as usize]
    }

    /// Vertex count of a component.
    pub fn size(&self, c: u32) -> usize {
        self.sizes[c as usize]
    }
}

/// Label the components of `edges` over its window, norms taken from the
/// origin.
pub fn label_components(edges: &EdgeSet) -> ComponentLabeling {
    let center = Point::origin(edges.window().dim());
    label_components_from(edges, &center)
}

/// As [`label_components`], with norms measured from `center`. Labels are
/// numbered in order of each component's first vertex index.
pub fn label_components_from(edges: &EdgeSet, center: &Point) -> ComponentLabeling {
    let window = edges.window().clone();
    let n = window.num_vertices();
    let mut uf = UnionFind::new(n);
    let mut touched = vec![false; n];
    for slot in edges.slots() {
        let (a, b) = window.slot_endpoints(slot);
        uf.union(a, b);
        touched[a] = true;
        touched[b] = true;
    }
    let mut root_label = vec![ISOLATED; n];
    let mut labels = vec![ISOLATED; n];
    let mut min_norm = Vec::new();
    let mut max_norm = Vec::new();
    let mut sizes = Vec::new();
    for i in 0..n {
        if !touched[i] {
            continue;
        }
        let r = uf.find(i);
        if root_label[r] == ISOLATED {
            root_label[r] = sizes.len() as u32;
            min_norm.push(i64::MAX);
            max_norm.push(i64::MIN);
            sizes.push(0);
        }
        let c = root_label[r] as usize;
        labels[i] = c as u32;
        let norm = window.point(i).linf_dist(center);
        min_norm[c] = min_norm[c].min(norm);
        max_norm[c] = max_norm[c].max(norm);
        sizes[c] += 1;
    }
    ComponentLabeling {
        window,
        center: *center,
        labels,
        min_norm,
        max_norm,
        sizes,
    }
}

/// Components reaching ∞-norm `≤ ℓ` while staying at ∞-norm `≥ j`, i.e. with
/// minimal norm in `[j, ℓ]`. `U_{0,ℓ}` counts the components meeting `B_ℓ`.
pub fn count_u(labeling: &ComponentLabeling, j: i64, l: i64) -> Result<usize, ConnectError> {
    if j > l {
        return Err(ConnectError::EmptyShell { j, l });
    }
    Ok(labeling.min_norm.iter().filter(|&&m| j <= m && m <= l).count())
}

/// Whether every vertex of `B_n` lies in one component of `edges ∩ B_{2n}`.
pub fn connection_event(edges: &EdgeSet, n: i64) -> bool {
    connection_event_at(edges, &Point::origin(edges.window().dim()), n)
}

/// [`connection_event`] for boxes centered at `center`.
pub fn connection_event_at(edges: &EdgeSet, center: &Point, n: i64) -> bool {
    let outer = Window::ball(center, 2 * n);
    let local = edges.reindexed(&outer);
    let mut uf = UnionFind::new(outer.num_vertices());
    for slot in local.slots() {
        let (a, b) = outer.slot_endpoints(slot);
        uf.union(a, b);
    }
    let inner = Window::ball(center, n);
    let mut root = None;
    let connected = inner.vertices().all(|p| {
        let r = uf.find(outer.index_of(&p).expect("inner box inside outer box"));
        *root.get_or_insert(r) == r
    });
    connected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Edge;
    use proptest::prelude::*;

    fn p(c: &[i64]) -> Point {
        Point::new(c)
    }

    fn path(pts: &[[i64; 2]]) -> Vec<Edge> {
        pts.windows(2)
            .map(|s| Edge::between(p(&s[0]), p(&s[1])).unwrap())
            .collect()
    }

    #[test]
    fn simple_counts() {
        let w = Window::cube(2, 3);
        assert_eq!(label_components(&EdgeSet::new(w.clone())).count(), 0);
        let mut all = EdgeSet::full(w.clone());
        assert_eq!(label_components(&all).count(), 1);
        all = EdgeSet::new(w.clone());
        for e in path(&[[0, 0], [0, 1], [0, 2]]).iter().chain(&path(&[[2, 0], [2, 1]])) {
            all.insert(e);
        }
        let lab = label_components(&all);
        assert_eq!(lab.count(), 2);
        assert_eq!(lab.label_of(&p(&[1, 1])), None);
        assert_eq!(lab.label_of(&p(&[0, 0])), lab.label_of(&p(&[0, 2])));
        assert_ne!(lab.label_of(&p(&[0, 0])), lab.label_of(&p(&[2, 0])));
    }

    #[test]
    fn line_through_origin() {
        let w = Window::cube(2, 6);
        let pts: Vec<[i64; 2]> = (0..=6).map(|x| [x, 0]).collect();
        let es = EdgeSet::from_edges(w.clone(), &path(&pts));
        let lab = label_components(&es);
        for l in 0..=6 {
            assert_eq!(count_u(&lab, 0, l).unwrap(), 1);
            for j in 1..=l {
                assert_eq!(count_u(&lab, j, l).unwrap(), 0);
            }
        }
    }

    #[test]
    fn shell_component() {
        let w = Window::cube(2, 10);
        // A path along the positive first axis at norms 5..=9.
        let pts: Vec<[i64; 2]> = (5..=9).map(|x| [x, 0]).collect();
        let es = EdgeSet::from_edges(w.clone(), &path(&pts));
        let lab = label_components(&es);
        assert_eq!(count_u(&lab, 5, 9).unwrap(), 1);
        assert_eq!(count_u(&lab, 6, 9).unwrap(), 0);
        assert_eq!(count_u(&lab, 0, 4).unwrap(), 0);
        assert_eq!(
            count_u(&lab, 7, 6).unwrap_err(),
            ConnectError::EmptyShell { j: 7, l: 6 }
        );
    }

    #[test]
    fn connection_examples() {
        for n in 1..4 {
            let w = Window::cube(2, 2 * n);
            assert!(connection_event(&EdgeSet::full(w.clone()), n));
            assert!(!connection_event(&EdgeSet::new(w.clone()), n));
        }
        let tree = crate::forest::sample_ust(
            &crate::forest::Network::new(Window::cube(2, 4), crate::forest::Boundary::Free),
            1,
        )
        .unwrap();
        assert!(connection_event(tree.edges(), 2));
    }

    fn random_edges(side: i64) -> impl Strategy<Value = (Window, Vec<usize>)> {
        let w = Window::cube(2, side);
        let slots: Vec<usize> = w.edge_slots().collect();
        (Just(w), proptest::sample::subsequence(slots.clone(), 0..slots.len()))
    }

    proptest! {
        #[test]
        fn adding_edges_is_monotone((w, slots) in random_edges(4), extra in 0usize..1000) {
            let mut es = EdgeSet::new(w.clone());
            for &s in &slots { es.insert_slot(s); }
            let before = label_components(&es);
            let conn_before = connection_event(&es, 2);
            let all: Vec<usize> = w.edge_slots().collect();
            let add = all[extra % all.len()];
            let mut more = es.clone();
            more.insert_slot(add);
            let after = label_components(&more);
            // Counting only non-isolated vertices an edge can create one new
            // component from two isolated vertices; merging never increases K.
            let (a, b) = w.slot_endpoints(add);
            let fresh = before.label(a).is_none() && before.label(b).is_none();
            prop_assert!(after.count() <= before.count() + fresh as usize);
            if !fresh {
                prop_assert!(after.count() <= before.count());
            }
            prop_assert!(!conn_before || connection_event(&more, 2));
        }

        #[test]
        fn shell_decomposition((w, slots) in random_edges(8), m in 0i64..3, width in 1i64..3) {
            let mut es = EdgeSet::new(w.clone());
            for &s in &slots { es.insert_slot(s); }
            let lab = label_components(&es);
            // Consecutive shells [m + 1 + t w, m + (t + 1) w] up to 8.
            let mut total = count_u(&lab, 0, m).unwrap();
            let mut lo = m + 1;
            while lo <= 8 {
                let hi = (lo + width - 1).min(8);
                total += count_u(&lab, lo, hi).unwrap();
                lo = hi + 1;
            }
            prop_assert_eq!(total, count_u(&lab, 0, 8).unwrap());
        }
    }
}
