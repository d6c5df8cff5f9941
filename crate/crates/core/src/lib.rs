//! Exact combinatorics of the dot-product hypothesis classes
//! `H_t(E) = {h_y : y ∈ E}`, `h_y(x) = [x·y = t]`, for point sets `E ⊆ F_q^d`.
//!
//! The crate counts incidences and stars in the dot-product graph, checks
//! shattering two independent ways, computes VC-dimensions, and runs seeded
//! experiment sweeps that compare measured counts with the closed-form bounds.
//!
//! ```
//! use ffvc_core::{geometry::Space, incidence::DotGraph, pointset::PointSet};
//!
//! let e = PointSet::full(Space::with(3, 3).unwrap());
//! let g = DotGraph::new(&e, 1).unwrap();
//! assert_eq!(g.edge_count(), 234);
//! ```

pub mod error;
pub mod ffield;
pub mod geometry;
pub mod incidence;
pub mod lab;
pub mod pointset;
pub mod shatter;
pub mod stars;

pub use error::{Error, Result};
