//! Effective resistance from a vertex to the boundary of a box.
//!
//! The box boundary is one grounded node. Unit current enters at the source
//! and the resistance is the source potential, found by Jacobi-preconditioned
//! conjugate gradients on the Laplacian of the source's component. Dangling
//! trees carry no current, so vertices of degree one are pruned first; this
//! changes nothing in the answer and shrinks tree-like inputs a lot.

use std::collections::VecDeque;

use thiserror::Error;

use crate::lattice::{EdgeSet, Point, Window};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResistanceError {
    #[error("source {0} lies outside the box")]
    SourceOutside(Point),
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap; `None` uses `20 √N + 1000` with `N` the box vertex count.
    pub max_iter: Option<usize>,
    pub prune_leaves: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: None,
            prune_leaves: true,
        }
    }
}

/// Outcome of one solve. An infinite resistance means the source does not
/// reach the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReffReport {
    pub resistance: f64,
    pub iterations: usize,
    pub residual: f64,
    pub unknowns: usize,
}

impl ReffReport {
    pub fn is_infinite(&self) -> bool {
        self.resistance.is_infinite()
    }
}

/// `R_eff(source ↔ ∂B_n)` in the part of `subgraph` inside `B_n`.
pub fn reff_to_boundary(
    subgraph: &EdgeSet,
    source: &Point,
    n: i64,
    opts: &SolverOptions,
) -> Result<ReffReport, ResistanceError> {
    let dim = subgraph.window().dim();
    reff_to_box_boundary(subgraph, source, &Window::ball(&Point::origin(dim), n), opts)
}

/// As [`reff_to_boundary`] for an arbitrary box.
pub fn reff_to_box_boundary(
    subgraph: &EdgeSet,
    source: &Point,
    bx: &Window,
    opts: &SolverOptions,
) -> Result<ReffReport, ResistanceError> {
    let Some(src) = bx.index_of(source) else {
        return Err(ResistanceError::SourceOutside(*source));
    };
    let done = |r: f64| ReffReport {
        resistance: r,
        iterations: 0,
        residual: 0.0,
        unknowns: 0,
    };
    if bx.on_boundary(source) {
        return Ok(done(0.0));
    }
    let edges = subgraph.reindexed(bx);
    let nv = bx.num_vertices();
    let d = bx.dim();
    let grounded = |i: usize| bx.on_boundary(&bx.point(i));
    let neighbours = |i: usize, out: &mut Vec<usize>| {
        out.clear();
        for a in 0..d {
            if let Some(j) = bx.step(i, a, true) {
                if edges.contains_slot(i * d + a) {
                    out.push(j);
                }
            }
            if let Some(j) = bx.step(i, a, false) {
                if edges.contains_slot(j * d + a) {
                    out.push(j);
                }
            }
        }
    };

    // Source component, not walking through the ground.
    const UNSEEN: u32 = u32::MAX;
    const GROUND: u32 = u32::MAX - 1;
    let mut id = vec![UNSEEN; nv];
    let mut order = vec![src];
    id[src] = 0;
    let mut reached_ground = false;
    let mut queue = VecDeque::from([src]);
    let mut nb = Vec::with_capacity(2 * d);
    while let Some(v) = queue.pop_front() {
        neighbours(v, &mut nb);
        for &w in &nb {
            if id[w] != UNSEEN {
                continue;
            }
            if grounded(w) {
                id[w] = GROUND;
                reached_ground = true;
            } else {
                id[w] = order.len() as u32;
                order.push(w);
                queue.push_back(w);
            }
        }
    }
    if !reached_ground {
        return Ok(done(f64::INFINITY));
    }
    // Window order keeps neighbours close in memory.
    order.sort_unstable();
    for (k, &v) in order.iter().enumerate() {
        id[v] = k as u32;
    }
    let s0 = id[src] as usize;

    // Local adjacency; ground edges only add to the diagonal.
    let m = order.len();
    let mut offsets = Vec::with_capacity(m + 1);
    let mut adj: Vec<u32> = Vec::new();
    let mut degree = vec![0u32; m];
    offsets.push(0usize);
    for (k, &v) in order.iter().enumerate() {
        neighbours(v, &mut nb);
        degree[k] = nb.len() as u32;
        for &w in &nb {
            if id[w] != GROUND {
                adj.push(id[w]);
            }
        }
        offsets.push(adj.len());
    }

    let mut alive = vec![true; m];
    if opts.prune_leaves {
        let mut live_deg: Vec<u32> = degree.clone();
        let mut stack: Vec<usize> = (0..m).filter(|&k| k != s0 && live_deg[k] == 1).collect();
        while let Some(k) = stack.pop() {
            if !alive[k] || live_deg[k] != 1 {
                continue;
            }
            // A degree-one vertex attached to the ground would carry current
            // only if it were the source; here its single edge leads inward.
            let Some(&parent) = adj[offsets[k]..offsets[k + 1]].iter().find(|&&p| alive[p as usize]) else {
                // Its only edge goes to the ground: a dead end as well.
                alive[k] = false;
                continue;
            };
            alive[k] = false;
            let p = parent as usize;
            live_deg[p] -= 1;
            degree[p] -= 1;
            if p != s0 && live_deg[p] == 1 {
                stack.push(p);
            }
        }
    }

    // Compact the surviving unknowns.
    let mut new_id = vec![u32::MAX; m];
    let mut keep = Vec::new();
    for k in 0..m {
        if alive[k] {
            new_id[k] = keep.len() as u32;
            keep.push(k);
        }
    }
    let size = keep.len();
    let s0 = new_id[s0] as usize;
    let mut off = Vec::with_capacity(size + 1);
    let mut nbrs = Vec::new();
    let mut diag = Vec::with_capacity(size);
    off.push(0);
    for &k in &keep {
        for &w in &adj[offsets[k]..offsets[k + 1]] {
            if alive[w as usize] {
                nbrs.push(new_id[w as usize]);
            }
        }
        off.push(nbrs.len());
        diag.push(degree[k] as f64);
    }

    let cap = opts
        .max_iter
        .unwrap_or_else(|| 20 * (nv as f64).sqrt().ceil() as usize + 1000);
    let inv: Vec<f64> = diag.iter().map(|v| 1.0 / v).collect();

    // Three fused passes per iteration; the solve is memory bound.
    let mut x = vec![0.0; size];
    let mut r = vec![0.0; size];
    r[s0] = 1.0;
    let mut p: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut ap = vec![0.0; size];
    let mut rz = inv[s0];
    let mut residual = 1.0;
    for it in 0..cap {
        let mut pap = 0.0;
        for (i, (w, out)) in off.windows(2).zip(ap.iter_mut()).enumerate() {
            let pi = p[i];
            let s = diag[i] * pi - nbrs[w[0]..w[1]].iter().map(|&j| p[j as usize]).sum::<f64>();
            *out = s;
            pap += pi * s;
        }
        let alpha = rz / pap;
        let (mut rr, mut rz_new) = (0.0, 0.0);
        for i in 0..size {
            x[i] += alpha * p[i];
            let ri = r[i] - alpha * ap[i];
            r[i] = ri;
            rr += ri * ri;
            rz_new += ri * ri * inv[i];
        }
        residual = rr.sqrt();
        if residual <= opts.tol {
            return Ok(ReffReport {
                resistance: x[s0],
                iterations: it + 1,
                residual,
                unknowns: size,
            });
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..size {
            p[i] = r[i] * inv[i] + beta * p[i];
        }
    }
    Err(ResistanceError::NoConvergence {
        iterations: cap,
        residual,
    })
}
