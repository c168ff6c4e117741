//! Critical-percolation laboratory: lattice duality, crossing-cluster
//! counts, arm events, interface exploration with revealment tracking,
//! exact small-box enumeration oracles, and Monte Carlo exponent
//! estimation across dyadic scales.

pub mod arm;
pub mod cluster;
pub mod config;
pub mod error;
pub mod explore;
pub mod lattice;
pub mod mc;
pub mod oracle;
pub mod records;
pub mod rng;

pub use error::{Error, Result};
