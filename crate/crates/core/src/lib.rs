//! Weighted 2-means clustering on small coresets, cast as Ising Hamiltonians
//! and solved by brute force or simulated QAOA.
//!
//! The pipeline runs in four steps:
//!
//! 1. [`coreset`] summarizes a [`dataio::DataSet`] into `m` weighted points.
//! 2. [`hamiltonian`] turns the weighted points into a diagonal objective over
//!    the `2^m` two-way partitions (Taylor order 0, 1, 2, ... or exact).
//! 3. [`solver`] finds the energy-maximizing partitions exhaustively, and
//!    [`qaoa`] approximates them with a depth-`p` statevector simulation.
//! 4. [`clustering`] turns a partition back into two centers and scores them
//!    on the full data set.
//!
//! [`circuit`] compiles the quadratic Hamiltonians to linear-connectivity
//! SWAP-network circuits, and [`bench`] drives the whole evaluation grid.
//!
//! # Conventions
//!
//! A [`Partition`] over `m` points stores bit `i` for point `i`. Bit 0 puts the
//! point in `S_{-1}` and corresponds to spin `Z_i = +1`; bit 1 puts it in
//! `S_{+1}` with `Z_i = -1`. Basis state index `z` of a statevector uses the
//! same bits, so the spin of qubit `i` in `|z>` is `1 - 2 * ((z >> i) & 1)`.

pub mod bench;
pub mod circuit;
pub mod clustering;
pub mod coreset;
pub mod dataio;
mod error;
pub mod hamiltonian;
mod linalg;
mod partition;
pub mod qaoa;
pub mod seed;
pub mod solver;

pub use error::{Error, Result};
pub use partition::Partition;
