//! Executable companions to thin-tree and shortcut-matrix constructions on
//! small multigraphs: effective resistance, cut dominance, locally connected
//! hierarchies, the three cut-preserving convex programs and their duals, the
//! good-edge extraction pipeline, greedy disjoint balls and bucketing.

pub mod balls;
pub mod cli;
pub mod cp;
pub mod error;
pub mod generators;
pub mod graph;
pub mod io;
pub mod lch;
pub mod pipeline;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Cut, Decomposition, MultiGraph};
pub use lch::Hierarchy;


/// Largest vertex count accepted by exhaustive cut scans.
pub const EXHAUSTIVE_MAX_N: usize = 20;

/// Crate version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
