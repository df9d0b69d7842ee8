//! Everywhere-percolating base graphs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::ExperimentError;
use crate::forest::{default_padding, sample_wusf};
use crate::lattice::{EdgeSet, Window};
use crate::text::parse_edges;
use crate::unionfind::UnionFind;

/// How the base graph Λ is produced on a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaSpec {
    /// Every edge parallel to one axis (0-based here, 1-based in text).
    AxisLines { axis: usize },
    /// A wired uniform spanning forest sampled on a padded window.
    IndependentWusf { padding: Option<i64> },
    /// Edges read from a file in the edge-list format.
    File(PathBuf),
    /// Every edge of the window.
    FullLattice,
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::AxisLines { axis: 0 }
    }
}

impl fmt::Display for LambdaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSpec::AxisLines { axis } => write!(f, "axis-lines:{}", axis + 1),
            LambdaSpec::IndependentWusf { padding: None } => write!(f, "independent-wusf"),
            LambdaSpec::IndependentWusf { padding: Some(p) } => write!(f, "independent-wusf:{p}"),
            LambdaSpec::File(p) => write!(f, "file:{}", p.display()),
            LambdaSpec::FullLattice => write!(f, "full-lattice"),
        }
    }
}

impl FromStr for LambdaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, arg) = match s.split_once(':') {
            Some((t, a)) => (t, Some(a)),
            None => (s, None),
        };
        match (tag, arg) {
            ("axis-lines", None) => Ok(LambdaSpec::AxisLines { axis: 0 }),
            ("axis-lines", Some(a)) => match a.parse::<usize>() {
                Ok(axis) if axis >= 1 => Ok(LambdaSpec::AxisLines { axis: axis - 1 }),
                _ => Err(format!("axis-lines expects an axis in 1..=d, got {a:?}")),
            },
            ("independent-wusf", None) => Ok(LambdaSpec::IndependentWusf { padding: None }),
            ("independent-wusf", Some(a)) => match a.parse::<i64>() {
                Ok(p) if p >= 0 => Ok(LambdaSpec::IndependentWusf { padding: Some(p) }),
                _ => Err(format!("independent-wusf expects a padding >= 0, got {a:?}")),
            },
            ("file", Some(path)) if !path.is_empty() => Ok(LambdaSpec::File(PathBuf::from(path))),
            ("full-lattice", None) => Ok(LambdaSpec::FullLattice),
            _ => Err(format!(
                "unknown lambda {s:?}; expected axis-lines[:axis], independent-wusf[:padding], file:<path> or full-lattice"
            )),
        }
    }
}

impl Serialize for LambdaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Build Λ on `window` and check that it is everywhere percolating there.
pub fn generate_lambda(spec: &LambdaSpec, window: &Window, seed: u64) -> Result<EdgeSet, ExperimentError> {
    let d = window.dim();
    let edges = match spec {
        LambdaSpec::AxisLines { axis } => {
            super::precondition(*axis < d, || format!("axis {} exceeds dimension {d}", axis + 1))?;
            let mut es = EdgeSet::new(window.clone());
            for slot in window.edge_slots().filter(|s| s % d == *axis) {
                es.insert_slot(slot);
            }
            es
        }
        LambdaSpec::IndependentWusf { padding } => {
            let pad = padding.unwrap_or_else(|| default_padding(window));
            sample_wusf(window, pad, seed)
        }
        LambdaSpec::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let list = parse_edges(&text)?;
            if let Some(e) = list.iter().find(|e| e.dim() != d) {
                return Err(ExperimentError::Precondition(format!(
                    "lambda file edge {e} is not {d}-dimensional"
                )));
            }
            let mut es = EdgeSet::new(window.clone());
            for e in &list {
                es.insert_clipped(e);
            }
            es
        }
        LambdaSpec::FullLattice => EdgeSet::full(window.clone()),
    };
    validate_everywhere_percolating(&edges)?;
    Ok(edges)
}

/// Every window vertex must reach the window boundary inside `edges`.
pub fn validate_everywhere_percolating(edges: &EdgeSet) -> Result<(), ExperimentError> {
    let w = edges.window();
    let mut uf = UnionFind::new(w.num_vertices());
    for slot in edges.slots() {
        let (a, b) = w.slot_endpoints(slot);
        uf.union(a, b);
    }
    let mut anchored = vec![false; w.num_vertices()];
    for (i, p) in w.vertices().enumerate() {
        if w.on_boundary(&p) {
            let r = uf.find(i);
            anchored[r] = true;
        }
    }
    for i in 0..w.num_vertices() {
        if !anchored[uf.find(i)] {
            return Err(ExperimentError::Stranded(w.point(i)));
        }
    }
    Ok(())
}
