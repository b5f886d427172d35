//! Sparse parity-check matrices for syndrome-based reconciliation.
//!
//! A [`ParityCheckMatrix`] stores both row and column adjacency of the Tanner
//! graph and the ordered set of untainted columns usable for puncturing.
//! Matrices are built with [`peg_construct`] and grouped by rate in a
//! [`CodePool`], which can be cached on disk.

mod degree;
mod matrix;
mod peg;
mod pool;

pub use degree::DegreeDistribution;
pub use matrix::{select_untainted, ParityCheckMatrix};
pub use peg::peg_construct;
pub use pool::{cache_path, default_threshold, pool_distribution, CodePool, CodeRate};
