//! Exact k-star counts in `G_t(E)`.
//!
//! All counts are of ordered tuples `(y, x_1, …, x_k)` with pairwise distinct
//! leaves. The center may coincide with a leaf when `y·y = t`.

use std::ops::ControlFlow;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Basis, Point};
use crate::incidence::DotGraph;
use crate::lab::{self, Constants};
use crate::pointset::PointSet;

/// A center and an ordered list of leaves, each adjacent to the center.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarTuple {
    center: Point,
    leaves: Vec<Point>,
}

impl StarTuple {
    pub fn new(graph: &DotGraph<'_>, center: Point, leaves: Vec<Point>) -> Result<Self> {
        let s = graph.space();
        s.check(&center)?;
        for leaf in &leaves {
            s.check(leaf)?;
            if !graph.is_edge(center.coords(), leaf.coords()) {
                return Err(Error::Invalid(format!("{center}·{leaf} != t")));
            }
        }
        Ok(StarTuple { center, leaves })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn leaves(&self) -> &[Point] {
        &self.leaves
    }

    pub fn k(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_nondegenerate(&self) -> bool {
        let mut sorted = self.leaves.clone();
        sorted.sort();
        sorted.windows(2).all(|w| w[0] != w[1])
    }
}

/// `n (n−1) ⋯ (n−k+1)`; `None` on u128 overflow.
pub fn falling_factorial(n: u64, k: usize) -> Option<u128> {
    if k as u64 > n {
        return Some(0);
    }
    (0..k as u64).try_fold(1u128, |acc, i| acc.checked_mul((n - i) as u128))
}

pub fn factorial(k: usize) -> Option<u128> {
    falling_factorial(k as u64, k)
}

/// Non-degenerate ordered k-stars, `N_k(E) = Σ_y ψ(y)(ψ(y)−1)⋯(ψ(y)−k+1)`.
///
/// `k` may exceed `d`; the identity does not care.
pub fn count_kstars(graph: &DotGraph<'_>, k: usize) -> Result<u128> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    graph
        .degrees()
        .into_iter()
        .try_fold(0u128, |acc, psi| {
            falling_factorial(psi, k).and_then(|f| acc.checked_add(f))
        })
        .ok_or(Error::Overflow)
}

/// Calls `visit` on every `size`-subset of `candidates` (positions into `set`,
/// visited in lexicographic order) whose points are linearly independent.
/// Branches are cut as soon as the next point falls into the current span.
///
/// Returns `ControlFlow::Break` if `visit` asked to stop.
pub fn visit_independent_subsets<F>(
    set: &PointSet,
    candidates: &[usize],
    size: usize,
    mut visit: F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    fn rec<F: FnMut(&[usize]) -> ControlFlow<()>>(
        set: &PointSet,
        candidates: &[usize],
        size: usize,
        start: usize,
        basis: &mut Basis,
        chosen: &mut Vec<usize>,
        visit: &mut F,
    ) -> ControlFlow<()> {
        if chosen.len() == size {
            return visit(chosen);
        }
        let need = size - chosen.len();
        if candidates.len() < need {
            return ControlFlow::Continue(());
        }
        for i in start..=candidates.len() - need {
            let pos = candidates[i];
            if basis.try_push(set.member_coords(pos)) {
                chosen.push(pos);
                let flow = rec(set, candidates, size, i + 1, basis, chosen, visit);
                chosen.pop();
                basis.pop();
                flow?;
            }
        }
        ControlFlow::Continue(())
    }

    if size > set.space().dim() {
        return ControlFlow::Continue(());
    }
    let mut basis = Basis::new(set.space());
    let mut chosen = Vec::with_capacity(size);
    rec(set, candidates, size, 0, &mut basis, &mut chosen, &mut visit)
}

/// Unordered independent `d`-subsets of the neighbourhood of each member.
pub fn independent_leafsets_per_center(graph: &DotGraph<'_>) -> Vec<u64> {
    let set = graph.set();
    let d = graph.space().dim();
    (0..set.len())
        .into_par_iter()
        .map(|c| {
            let nbrs = graph.neighbors(set.member_coords(c));
            let mut n = 0u64;
            let _ = visit_independent_subsets(set, &nbrs, d, |_| {
                n += 1;
                ControlFlow::Continue(())
            });
            n
        })
        .collect()
}

/// `𝒩_d(E)`: ordered d-stars whose leaves are linearly independent.
///
/// Each unordered independent leaf set contributes `d!` orderings.
pub fn count_indep_dstars(graph: &DotGraph<'_>) -> Result<u128> {
    let d_fact = factorial(graph.space().dim()).ok_or(Error::Overflow)?;
    independent_leafsets_per_center(graph)
        .into_iter()
        .try_fold(0u128, |acc, n| {
            (n as u128).checked_mul(d_fact).and_then(|x| acc.checked_add(x))
        })
        .ok_or(Error::Overflow)
}

/// Counts plus the lower bounds they are compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarCensus {
    pub k: usize,
    pub n_k: u128,
    /// Present when `k = d`.
    pub n_indep: Option<u128>,
    pub n_dep: Option<u128>,
    /// `|E|^(k+1) / (2 q^k)`.
    #[serde(with = "lab::rational_string")]
    pub kstar_bound: BigRational,
    pub kstar_bound_met: bool,
    /// `|E| ≥ C_k q^((d+1)/2)`, the size hypothesis under which the k-star bound is a theorem.
    pub kstar_hypothesis_met: bool,
    /// `|E|^(d+1) / (3 q^d)`, present when `k = d`.
    #[serde(with = "lab::opt_rational_string")]
    pub indep_bound: Option<BigRational>,
    pub indep_bound_met: Option<bool>,
    /// `|E| ≥ C_d q^(d − 1/(d−1))`.
    pub indep_hypothesis_met: bool,
}

pub fn star_census(graph: &DotGraph<'_>, k: usize, constants: &Constants) -> Result<StarCensus> {
    let s = graph.space();
    let size = graph.set().len() as u64;
    let (q, d) = (s.q() as u64, s.dim());
    let n_k = count_kstars(graph, k)?;
    let kstar_bound = lab::kstar_rhs(q, k, size);
    let (n_indep, n_dep, indep_bound, indep_bound_met) = if k == d {
        let n_indep = count_indep_dstars(graph)?;
        let bound = lab::indep_rhs(q, d, size);
        let met = lab::count_meets(n_indep, &bound);
        (Some(n_indep), Some(n_k - n_indep), Some(bound), Some(met))
    } else {
        (None, None, None, None)
    };
    Ok(StarCensus {
        k,
        n_k,
        n_indep,
        n_dep,
        kstar_bound_met: lab::count_meets(n_k, &kstar_bound),
        kstar_bound,
        kstar_hypothesis_met: lab::kstar_hypothesis_met(q, d, size, &constants.c_k),
        indep_bound,
        indep_bound_met,
        indep_hypothesis_met: lab::main_threshold_met(q, d, size, &constants.c_d),
    })
}
