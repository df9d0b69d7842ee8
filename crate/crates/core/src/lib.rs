//! Uniform spanning forests and box percolation on windows of Z^d.
//!
//! The crate samples wired uniform spanning forests with Wilson's algorithm,
//! samples (k, ε)-box percolation cell by cell, and analyses unions of the two:
//! connection events, component counts across annuli, renormalized block
//! fields and effective resistance to the boundary of a box. Small networks
//! have exact oracles (spanning-tree counts, edge probabilities, resistances)
//! built on integer determinants.

pub mod boxperc;
pub mod connect;
pub mod experiments;
pub mod forest;
pub mod lattice;
pub mod oracles;
pub mod resistance;
pub mod seed;
pub mod stats;
pub mod text;
pub mod unionfind;
pub mod verify;

pub use lattice::{Edge, EdgeSet, Point, Window};
