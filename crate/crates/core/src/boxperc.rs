//! (k, ε)-box percolation.
//!
//! Every cell `Q_k^z` picks one of its edges uniformly and opens it with
//! probability ε, independently of all other cells. Each cell draws from its
//! own stream keyed by `(seed, z)`, so any sub-window sees the same cells as
//! the full window and the result does not depend on iteration order.
//!
//! Cells cut by the window are handled in one of two ways (see [`CellLaw`]).

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::lattice::{cell_centers_meeting, for_each_cell_edge, Edge, EdgeSet, LatticeError, Point, Region, Window};
use crate::seed;
use crate::text::BoxPercolationSnapshot;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxPercError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("opening probability {0} outside [0, 1]")]
    BadProbability(f64),
}

/// How a cell that sticks out of the window chooses its edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CellLaw {
    /// Uniform over the cell's in-window edges; every cell meeting the window
    /// makes an in-window choice.
    #[default]
    Clipped,
    /// Uniform over the whole cell as on Z^d; choices outside the window are
    /// simply not seen.
    Lattice,
}

/// The draw of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellChoice {
    pub center: Point,
    pub edge: Edge,
    /// The uniform deciding whether the edge opens.
    pub u: f64,
    pub open: bool,
    /// Some edge of the cell lies outside the window.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxPercolationSample {
    window: Window,
    k: i64,
    eps: f64,
    seed: u64,
    law: CellLaw,
    cells: Vec<CellChoice>,
    open: EdgeSet,
}

impl BoxPercolationSample {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law(&self) -> CellLaw {
        self.law
    }

    /// One entry per cell with an in-window edge, by center.
    pub fn cells(&self) -> &[CellChoice] {
        &self.cells
    }

    /// Open in-window edges.
    pub fn open(&self) -> &EdgeSet {
        &self.open
    }

    /// The same cell draws thresholded at another ε. Open sets grow with ε.
    pub fn with_eps(&self, eps: f64) -> Result<Self, BoxPercError> {
        check_eps(eps)?;
        let mut open = EdgeSet::new(self.window.clone());
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let now = CellChoice { open: c.u < eps, ..*c };
                if now.open {
                    open.insert_clipped(&now.edge);
                }
                now
            })
            .collect();
        Ok(BoxPercolationSample {
            eps,
            cells,
            open,
            ..self.clone()
        })
    }

    pub fn snapshot(&self) -> BoxPercolationSnapshot {
        BoxPercolationSnapshot {
            dim: self.window.dim(),
            k: self.k,
            eps: self.eps,
            seed: self.seed,
            edges: self.open.iter().collect(),
        }
    }
}

fn check_eps(eps: f64) -> Result<(), BoxPercError> {
    if (0.0..=1.0).contains(&eps) {
        Ok(())
    } else {
        Err(BoxPercError::BadProbability(eps))
    }
}

/// Edge number `i` of `Q_k^z` in the order of [`for_each_cell_edge`].
fn nth_cell_edge(z: &Point, k: i64, i: usize) -> Edge {
    let d = z.dim();
    let side = (2 * k) as usize;
    let total = side.pow(d as u32);
    let axis = i / total;
    let mut rest = i % total;
    let mut base = *z;
    for l in (0..d).rev() {
        let off = (rest % side) as i64;
        rest /= side;
        let lo = if l == axis { z.get(l) - k } else { z.get(l) - k + 1 };
        base = base.with(l, lo + off);
    }
    Edge::new(base, axis)
}

fn box_inside(window: &Window, z: &Point, k: i64) -> bool {
    (0..z.dim()).all(|l| z.get(l) - k >= window.lo().get(l) && z.get(l) + k <= window.hi().get(l))
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Visit the draw of every cell that has an in-window edge.
fn for_each_choice(window: &Window, k: i64, eps: f64, seed: u64, law: CellLaw, mut f: impl FnMut(CellChoice)) {
    let cell_len = crate::lattice::cell_size(window.dim(), k);
    let mut inside = Vec::new();
    for z in cell_centers_meeting(window, k) {
        let mut rng = seed::cell_rng(seed, &z);
        let full = box_inside(window, &z, k);
        let edge = if full {
            nth_cell_edge(&z, k, rng.gen_range(0..cell_len))
        } else {
            inside.clear();
            for_each_cell_edge(&z, k, |e| {
                if window.contains_edge(&e) {
                    inside.push(e)
                }
            });
            if inside.is_empty() {
                continue;
            }
            match law {
                CellLaw::Clipped => inside[rng.gen_range(0..inside.len())],
                CellLaw::Lattice => nth_cell_edge(&z, k, rng.gen_range(0..cell_len)),
            }
        };
        let u = unit(&mut rng);
        f(CellChoice {
            center: z,
            edge,
            u,
            open: u < eps,
            clipped: !full,
        });
    }
}

/// Box percolation on `window` with clipped cells choosing among their
/// in-window edges.
pub fn sample_box_percolation(
    window: &Window,
    k: i64,
    eps: f64,
    seed: u64,
) -> Result<BoxPercolationSample, BoxPercError> {
    sample_box_percolation_with(window, k, eps, seed, CellLaw::Clipped)
}

pub fn sample_box_percolation_with(
    window: &Window,
    k: i64,
    eps: f64,
    seed: u64,
    law: CellLaw,
) -> Result<BoxPercolationSample, BoxPercError> {
    if k < 1 {
        return Err(LatticeError::BadHalfWidth(k).into());
    }
    check_eps(eps)?;
    let mut cells = Vec::new();
    let mut open = EdgeSet::new(window.clone());
    for_each_choice(window, k, eps, seed, law, |c| {
        if c.open {
            open.insert_clipped(&c.edge);
        }
        cells.push(c);
    });
    Ok(BoxPercolationSample {
        window: window.clone(),
        k,
        eps,
        seed,
        law,
        cells,
        open,
    })
}

/// Only the open in-window edges, without keeping per-cell records.
pub fn open_edges(window: &Window, k: i64, eps: f64, seed: u64, law: CellLaw) -> Result<EdgeSet, BoxPercError> {
    if k < 1 {
        return Err(LatticeError::BadHalfWidth(k).into());
    }
    check_eps(eps)?;
    let mut open = EdgeSet::new(window.clone());
    for_each_choice(window, k, eps, seed, law, |c| {
        if c.open {
            open.insert_clipped(&c.edge);
        }
    });
    Ok(open)
}

/// Open edges with both endpoints in `region`.
pub fn restrict<R: Region + ?Sized>(sample: &BoxPercolationSample, region: &R) -> EdgeSet {
    sample.open.restricted(region)
}
