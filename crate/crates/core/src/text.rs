//! Plain-text edge lists.
//!
//! Vertices are written as comma-separated integer tuples and edges as `u;v`
//! with `u` the canonical (lower) endpoint, one edge per line in canonical
//! order. Lines starting with `#` are comments. Snapshots add a single
//! whitespace-separated header line in front of the edges.

use std::fmt::Write as _;

use thiserror::Error;

use crate::lattice::{Edge, LatticeError};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {source}")]
    Edge {
        line: usize,
        #[source]
        source: LatticeError,
    },
    #[error("missing or malformed header: {0:?}")]
    Header(String),
    #[error("edge {edge} has dimension {got}, header says {expected}")]
    Dimension { edge: Edge, expected: usize, got: usize },
}

/// Canonical, sorted, deduplicated edge lines.
pub fn format_edges<'a>(edges: impl IntoIterator<Item = &'a Edge>) -> String {
    let mut sorted: Vec<Edge> = edges.into_iter().copied().collect();
    sorted.sort();
    sorted.dedup();
    let mut out = String::new();
    for e in &sorted {
        writeln!(out, "{e}").expect("writing to a String");
    }
    out
}

/// Parse edge lines, skipping blanks and `#` comments. Either endpoint order
/// is accepted; the result is canonical and sorted.
pub fn parse_edges(text: &str) -> Result<Vec<Edge>, TextError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let e: Edge = line.parse().map_err(|source| TextError::Edge { line: i + 1, source })?;
        out.push(e);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// A forest written as `d k seed` followed by its edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestSnapshot {
    pub dim: usize,
    pub k: i64,
    pub seed: u64,
    pub edges: Vec<Edge>,
}

impl ForestSnapshot {
    pub fn to_text(&self) -> String {
        format!("{} {} {}\n{}", self.dim, self.k, self.seed, format_edges(&self.edges))
    }

    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let (head, body) = text.split_once('\n').unwrap_or((text, ""));
        let fields: Vec<&str> = head.split_whitespace().collect();
        let bad = || TextError::Header(head.to_string());
        if fields.len() != 3 {
            return Err(bad());
        }
        let dim = fields[0].parse().map_err(|_| bad())?;
        let k = fields[1].parse().map_err(|_| bad())?;
        let seed = fields[2].parse().map_err(|_| bad())?;
        let edges = parse_edges(body)?;
        check_dims(&edges, dim)?;
        Ok(ForestSnapshot { dim, k, seed, edges })
    }
}

/// Open edges of a box-percolation sample, headed by `d k eps seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxPercolationSnapshot {
    pub dim: usize,
    pub k: i64,
    pub eps: f64,
    pub seed: u64,
    pub edges: Vec<Edge>,
}

impl BoxPercolationSnapshot {
    pub fn to_text(&self) -> String {
        format!(
            "{} {} {} {}\n{}",
            self.dim,
            self.k,
            self.eps,
            self.seed,
            format_edges(&self.edges)
        )
    }

    pub fn from_text(text: &str) -> Result<Self, TextError> {
        let (head, body) = text.split_once('\n').unwrap_or((text, ""));
        let fields: Vec<&str> = head.split_whitespace().collect();
        let bad = || TextError::Header(head.to_string());
        if fields.len() != 4 {
            return Err(bad());
        }
        let dim = fields[0].parse().map_err(|_| bad())?;
        let k = fields[1].parse().map_err(|_| bad())?;
        let eps = fields[2].parse().map_err(|_| bad())?;
        let seed = fields[3].parse().map_err(|_| bad())?;
        let edges = parse_edges(body)?;
        check_dims(&edges, dim)?;
        Ok(BoxPercolationSnapshot {
            dim,
            k,
            eps,
            seed,
            edges,
        })
    }
}

fn check_dims(edges: &[Edge], dim: usize) -> Result<(), TextError> {
    match edges.iter().find(|e| e.dim() != dim) {
        Some(e) => Err(TextError::Dimension {
            edge: *e,
            expected: dim,
            got: e.dim(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Point;
    use proptest::prelude::*;

    #[test]
    fn parse_skips_comments_and_canonicalizes() {
        let text = "# lambda\n\n0,1;0,0\n0,0;1,0\n0,0;0,1\n";
        let edges = parse_edges(text).unwrap();
        assert_eq!(edges.len(), 2);
        assert_eq!(format_edges(&edges), "0,0;1,0\n0,0;0,1\n");
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_edges("0,0;0,1\n0,0;2,2\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"));
    }

    #[test]
    fn snapshot_header_errors() {
        assert!(ForestSnapshot::from_text("3 1\n").is_err());
        assert!(ForestSnapshot::from_text("2 1 5\n0,0,0;0,0,1\n").is_err());
        assert!(BoxPercolationSnapshot::from_text("2 1 x 3\n").is_err());
    }

    fn edge_strategy() -> impl Strategy<Value = Edge> {
        (-20i64..20, -20i64..20, -20i64..20, 0usize..3).prop_map(|(x, y, z, a)| Edge::new(Point::new(&[x, y, z]), a))
    }

    proptest! {
        #[test]
        fn forest_snapshot_round_trips(edges in proptest::collection::vec(edge_strategy(), 0..60),
                                       k in 0i64..5, seed in any::<u64>()) {
            let snap = ForestSnapshot { dim: 3, k, seed, edges: {
                let mut e = edges.clone(); e.sort(); e.dedup(); e } };
            let text = snap.to_text();
            let back = ForestSnapshot::from_text(&text).unwrap();
            prop_assert_eq!(&back, &snap);
            prop_assert_eq!(back.to_text(), text);
        }

        #[test]
        fn box_snapshot_round_trips(edges in proptest::collection::vec(edge_strategy(), 0..40),
                                    eps in 0.0f64..=1.0, seed in any::<u64>()) {
            let mut e = edges.clone(); e.sort(); e.dedup();
            let snap = BoxPercolationSnapshot { dim: 3, k: 2, eps, seed, edges: e };
            let text = snap.to_text();
            let back = BoxPercolationSnapshot::from_text(&text).unwrap();
            prop_assert_eq!(back.eps.to_bits(), eps.to_bits());
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
