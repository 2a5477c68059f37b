//! Faddeev and Yakubovsky component decompositions of few-body Hamiltonians,
//! realized as block operators on finite lattices and checked against
//! brute-force diagonalization.

pub mod blockops;
pub mod combinatorics;
pub mod error;
pub mod faddeev;
pub mod hardcore;
pub mod lattice;
pub mod potential;
pub mod yakubovsky;

pub use error::{FyError, Result};
