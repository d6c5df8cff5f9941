//! Degrees and edge counts in the dot-product graph `G_t(E)`, and the exact
//! residual check for the incidence bound with indicator functions:
//!
//! `| #{(x,y) ∈ E² : x·y = t} − |E|²/q | ≤ |E|·q^((d−1)/2)`.

use num_bigint::BigInt;
use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::FieldElement;
use crate::geometry::{Point, Space};
use crate::pointset::PointSet;

/// The graph on `E` with an edge `x ~ y` whenever `x·y = t`, for nonzero `t`.
///
/// Loops are allowed: `y` is its own neighbour when `y·y = t`.
#[derive(Debug, Clone, Copy)]
pub struct DotGraph<'a> {
    set: &'a PointSet,
    t: FieldElement,
}

/// How [`DotGraph::psi`] enumerates candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiStrategy {
    /// Walk the `q^(d−1)` solutions of `x·y = t` and test membership.
    Hyperplane,
    /// Scan the members of `E`.
    Members,
}

impl<'a> DotGraph<'a> {
    pub fn new(set: &'a PointSet, t: u64) -> Result<Self> {
        let field = set.space().field();
        if t == 0 {
            return Err(Error::ZeroThreshold);
        }
        let t = field.canonical(t)?;
        Ok(DotGraph { set, t })
    }

    #[inline]
    pub fn set(&self) -> &'a PointSet {
        self.set
    }

    #[inline]
    pub fn space(&self) -> Space {
        self.set.space()
    }

    #[inline]
    pub fn t(&self) -> FieldElement {
        self.t
    }

    /// The strategy [`DotGraph::psi`] picks: hyperplane walk when `q^(d−1) < |E|`.
    pub fn strategy(&self) -> PsiStrategy {
        let s = self.space();
        if s.q_pow(s.dim() - 1) < self.set.len() as u64 {
            PsiStrategy::Hyperplane
        } else {
            PsiStrategy::Members
        }
    }

    /// `ψ(y) = |{x ∈ E : x·y = t}|`. `y` need not belong to `E`.
    pub fn psi(&self, y: &Point) -> Result<u64> {
        self.space().check(y)?;
        Ok(self.psi_with(y.coords(), self.strategy()))
    }

    pub fn psi_with(&self, y: &[u32], strategy: PsiStrategy) -> u64 {
        if y.iter().all(|&c| c == 0) {
            return 0;
        }
        match strategy {
            PsiStrategy::Hyperplane => self
                .hyperplane(y)
                .filter(|&i| self.set.contains_index(i))
                .count() as u64,
            PsiStrategy::Members => (0..self.set.len())
                .filter(|&k| self.is_edge(self.set.member_coords(k), y))
                .count() as u64,
        }
    }

    fn hyperplane(&self, y: &[u32]) -> crate::geometry::HyperplaneIndices {
        self.space()
            .hyperplane_indices(&Point::from_raw(y.to_vec()), self.t)
            .expect("nonzero normal")
    }

    #[inline]
    pub fn is_edge(&self, x: &[u32], y: &[u32]) -> bool {
        self.space().dot_raw(x, y) == self.t.value()
    }

    /// Positions (into `E.members()`) of the neighbours of `y`, increasing.
    pub fn neighbors(&self, y: &[u32]) -> Vec<usize> {
        if y.iter().all(|&c| c == 0) {
            return Vec::new();
        }
        match self.strategy() {
            PsiStrategy::Hyperplane => self
                .hyperplane(y)
                .filter_map(|i| self.set.position(i))
                .collect(),
            PsiStrategy::Members => (0..self.set.len())
                .filter(|&k| self.is_edge(self.set.member_coords(k), y))
                .collect(),
        }
    }

    /// `ψ` of every member, in member order. Runs on the ambient rayon pool.
    pub fn degrees(&self) -> Vec<u64> {
        let strategy = self.strategy();
        (0..self.set.len())
            .into_par_iter()
            .map(|k| self.psi_with(self.set.member_coords(k), strategy))
            .collect()
    }

    /// Ordered pairs `(x, y) ∈ E²` with `x·y = t`.
    pub fn edge_count(&self) -> u64 {
        self.degrees().iter().sum()
    }

    pub fn residual_check(&self) -> IncidenceSummary {
        IncidenceSummary::new(self.space(), self.t, self.set.len() as u64, self.edge_count())
    }
}

/// Exact comparison of the edge count against `|E|²/q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceSummary {
    pub q: u32,
    pub d: usize,
    pub t: u32,
    pub size: u64,
    pub edge_count: u64,
    /// `edge_count − |E|²/q` in lowest terms.
    pub residual_num: i128,
    pub residual_den: u64,
    /// `residual² ≤ |E|²·q^(d−1)`.
    pub bound_holds: bool,
}

impl IncidenceSummary {
    pub fn new(space: Space, t: FieldElement, size: u64, edge_count: u64) -> Self {
        let q = space.q() as i128;
        let raw_num = edge_count as i128 * q - (size as i128) * (size as i128);
        let g = raw_num.gcd(&q);
        let (residual_num, residual_den) = (raw_num / g, (q / g) as u64);

        // (raw_num/q)² ≤ size²·q^(d−1)  ⇔  raw_num² ≤ size²·q^(d+1)
        let lhs = BigInt::from(raw_num).pow(2);
        let rhs = BigInt::from(size).pow(2) * BigInt::from(space.q()).pow(space.dim() as u32 + 1);
        IncidenceSummary {
            q: space.q(),
            d: space.dim(),
            t: t.value(),
            size,
            edge_count,
            residual_num,
            residual_den,
            bound_holds: lhs <= rhs,
        }
    }

    /// `|E|²/q` as a float, for display.
    pub fn main_term(&self) -> f64 {
        (self.size as f64).powi(2) / self.q as f64
    }

    /// `|E|·q^((d−1)/2)` as a float, for display.
    pub fn error_bound(&self) -> f64 {
        self.size as f64 * (self.q as f64).powf((self.d as f64 - 1.0) / 2.0)
    }
}
