//! Shattering for the class `{h_y : y ∈ E}`, `h_y(x) = [x·y = t]`, on domain `E`.
//!
//! Two independent routes decide whether a `d`-set `C ⊆ E` is shattered:
//! the direct one tabulates the labelling of `C` produced by every `y ∈ E`,
//! the star one asks whether `Q(C)` is nonempty and no proper subset of `C`
//! (the empty set included) is bad.
//!
//! Subsets of a candidate set are encoded as bitmasks over the candidate
//! sorted by point index: bit `i` stands for the `i`-th smallest point.

use std::collections::HashMap;
use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Basis, Point, Space};
use crate::incidence::DotGraph;
use crate::pointset::{stream_rng, PointSet};
use crate::stars::{factorial, visit_independent_subsets, StarTuple};

/// `Q(B) = {z ∈ E : z·b = t for all b ∈ B}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSet {
    space: Space,
    constraints: Vec<Point>,
    /// Point indices, increasing.
    members: Vec<u32>,
}

impl WitnessSet {
    pub fn constraints(&self) -> &[Point] {
        &self.constraints
    }

    pub fn member_indices(&self) -> &[u32] {
        &self.members
    }

    pub fn members(&self) -> impl Iterator<Item = Point> + '_ {
        self.members
            .iter()
            .map(|&i| self.space.index_point(i as u64).expect("member index in range"))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.space
            .point_index(p)
            .map(|i| self.members.binary_search(&(i as u32)).is_ok())
            .unwrap_or(false)
    }
}

pub fn witness_set(graph: &DotGraph<'_>, constraints: &[Point]) -> Result<WitnessSet> {
    let set = graph.set();
    let space = graph.space();
    for b in constraints {
        space.check(b)?;
    }
    let members = match constraints.split_first() {
        None => set.members().to_vec(),
        Some((first, rest)) => graph
            .neighbors(first.coords())
            .into_iter()
            .filter(|&k| {
                let z = set.member_coords(k);
                rest.iter().all(|b| graph.is_edge(z, b.coords()))
            })
            .map(|k| set.members()[k])
            .collect(),
    };
    Ok(WitnessSet {
        space,
        constraints: constraints.to_vec(),
        members,
    })
}

fn sorted_distinct(space: Space, pts: &[Point]) -> Result<Vec<Point>> {
    let mut keyed = Vec::with_capacity(pts.len());
    for p in pts {
        keyed.push((space.point_index(p)?, p.clone()));
    }
    keyed.sort_by_key(|(i, _)| *i);
    if keyed.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Invalid("candidate points must be distinct".into()));
    }
    Ok(keyed.into_iter().map(|(_, p)| p).collect())
}

fn require_subset(set: &PointSet, pts: &[Point]) -> Result<()> {
    match pts.iter().find(|p| !set.contains(p)) {
        Some(p) => Err(Error::Invalid(format!("{p} is not a member of E"))),
        None => Ok(()),
    }
}

/// Is `A ⊊ L` bad: does every `z ∈ Q(A)` also satisfy `z·x = t` for some `x ∈ L ∖ A`?
/// Vacuously true when `Q(A)` is empty. `A = ∅` is allowed.
pub fn is_bad(graph: &DotGraph<'_>, subset: &[Point], leaves: &[Point]) -> Result<bool> {
    let space = graph.space();
    let leaves = sorted_distinct(space, leaves)?;
    let subset = sorted_distinct(space, subset)?;
    if let Some(p) = subset.iter().find(|p| !leaves.contains(p)) {
        return Err(Error::Invalid(format!("{p} is not a leaf")));
    }
    if subset.len() == leaves.len() {
        return Err(Error::Invalid("the bad-set test needs a proper subset of the leaves".into()));
    }
    let rest: Vec<&Point> = leaves.iter().filter(|x| !subset.contains(x)).collect();
    let q = witness_set(graph, &subset)?;
    let set = graph.set();
    Ok(q.member_indices().iter().all(|&z| {
        let z = set.member_coords(set.position(z as u64).expect("witness is a member"));
        rest.iter().any(|x| graph.is_edge(z, x.coords()))
    }))
}

/// Outcome of a direct shattering check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ShatterOutcome {
    /// `witnesses[mask]` realises exactly the subset `mask`; smallest index wins.
    Shattered { witnesses: Vec<Point> },
    /// The first subset, in mask order, no hypothesis realises.
    NotShattered { failing_mask: u64, failing: Vec<Point> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShatterCertificate {
    /// The candidate set, sorted by point index.
    pub candidate: Vec<Point>,
    pub outcome: ShatterOutcome,
}

impl ShatterCertificate {
    pub fn is_shattered(&self) -> bool {
        matches!(self.outcome, ShatterOutcome::Shattered { .. })
    }

    /// Re-evaluates every witness (or re-confirms the failure) from scratch.
    pub fn validate(&self, graph: &DotGraph<'_>) -> bool {
        let space = graph.space();
        let t = graph.t().value();
        let realises = |y: &Point, mask: u64| {
            self.candidate
                .iter()
                .enumerate()
                .all(|(i, x)| (space.dot_raw(x.coords(), y.coords()) == t) == (mask >> i & 1 == 1))
        };
        match &self.outcome {
            ShatterOutcome::Shattered { witnesses } => {
                witnesses.len() == 1 << self.candidate.len()
                    && witnesses
                        .iter()
                        .enumerate()
                        .all(|(mask, y)| graph.set().contains(y) && realises(y, mask as u64))
            }
            ShatterOutcome::NotShattered { failing_mask, .. } => {
                !graph.set().points().any(|y| realises(&y, *failing_mask))
            }
        }
    }
}

#[inline]
fn label_mask(graph: &DotGraph<'_>, y: &[u32], candidate: &[&[u32]]) -> u64 {
    candidate
        .iter()
        .enumerate()
        .fold(0u64, |m, (i, x)| m | (graph.is_edge(x, y) as u64) << i)
}

/// Tabulates which labellings of `C` the class realises.
pub fn is_shattered_direct(graph: &DotGraph<'_>, candidate: &[Point]) -> Result<ShatterCertificate> {
    let set = graph.set();
    let candidate = sorted_distinct(graph.space(), candidate)?;
    require_subset(set, &candidate)?;
    if candidate.len() > 63 {
        return Err(Error::Invalid("candidate sets are limited to 63 points".into()));
    }
    let coords: Vec<&[u32]> = candidate.iter().map(|p| p.coords()).collect();
    let mut first_witness: HashMap<u64, usize> = HashMap::new();
    for k in 0..set.len() {
        first_witness.entry(label_mask(graph, set.member_coords(k), &coords)).or_insert(k);
    }
    let full = 1u64 << candidate.len();
    let outcome = match (0..full).find(|m| !first_witness.contains_key(m)) {
        Some(mask) => ShatterOutcome::NotShattered {
            failing_mask: mask,
            failing: candidate
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect(),
        },
        None => ShatterOutcome::Shattered {
            witnesses: (0..full)
                .map(|m| Point::from_raw(set.member_coords(first_witness[&m]).to_vec()))
                .collect(),
        },
    };
    Ok(ShatterCertificate { candidate, outcome })
}

/// Shattering of a `d`-set through stars: `Q(C) ≠ ∅` and no `A ⊊ C` is bad.
pub fn is_shattered_stars(graph: &DotGraph<'_>, candidate: &[Point]) -> Result<bool> {
    let d = graph.space().dim();
    if candidate.len() != d {
        return Err(Error::Invalid(format!(
            "star characterisation needs exactly d = {d} points, got {}",
            candidate.len()
        )));
    }
    let candidate = sorted_distinct(graph.space(), candidate)?;
    require_subset(graph.set(), &candidate)?;
    if witness_set(graph, &candidate)?.is_empty() {
        return Ok(false);
    }
    for mask in 0..(1u64 << d) - 1 {
        let subset: Vec<Point> = candidate
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect();
        if is_bad(graph, &subset, &candidate)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All bad subsets of a d-star's leaf set, including `∅` when it is bad.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadSetReport {
    pub star: StarTuple,
    pub bad_subsets: Vec<Vec<Point>>,
    pub is_good: bool,
}

pub fn bad_set_report(graph: &DotGraph<'_>, star: StarTuple) -> Result<BadSetReport> {
    let d = graph.space().dim();
    if star.k() != d || !star.is_nondegenerate() {
        return Err(Error::Invalid("expected a non-degenerate d-star".into()));
    }
    let leaves = sorted_distinct(graph.space(), star.leaves())?;
    let mut bad_subsets = Vec::new();
    for mask in 0..(1u64 << d) - 1 {
        let subset: Vec<Point> = leaves
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect();
        if is_bad(graph, &subset, &leaves)? {
            bad_subsets.push(subset);
        }
    }
    Ok(BadSetReport {
        is_good: bad_subsets.is_empty(),
        star,
        bad_subsets,
    })
}

/// Greedy choice of `J ⊆ Q(B) ∖ {y}`, `|J| = r`, with `{y} ∪ J` independent.
///
/// Needs `B ≠ ∅` (so `Q(B)` sits in an affine hyperplane missing the origin),
/// `y ∈ Q(B)`, `r ≤ d − 1` and `|Q(B)| > q^(r−1)`. Under those hypotheses the
/// greedy scan cannot run dry; if it does, [`Error::Invariant`] is returned.
pub fn greedy_independent_subset(witness: &WitnessSet, y: &Point, r: usize) -> Result<Vec<Point>> {
    let space = witness.space;
    let d = space.dim();
    if witness.constraints.is_empty() {
        return Err(Error::Invalid("Q(B) must be built from a nonempty B".into()));
    }
    if !witness.contains(y) {
        return Err(Error::Invalid(format!("{y} is not in Q(B)")));
    }
    if r > d - 1 {
        return Err(Error::Invalid(format!("r = {r} exceeds d − 1 = {}", d - 1)));
    }
    // |Q| > q^(r−1); for r = 0 this is |Q| > 1/q, implied by y ∈ Q
    if r >= 1 && witness.len() as u64 <= space.q_pow(r - 1) {
        return Err(Error::Invalid(format!(
            "|Q(B)| = {} does not exceed q^(r−1) = {}",
            witness.len(),
            space.q_pow(r - 1)
        )));
    }
    let mut basis = Basis::new(space);
    basis.try_push(y.coords());
    let mut chosen = Vec::with_capacity(r);
    for z in witness.members() {
        if chosen.len() == r {
            break;
        }
        if z != *y && basis.try_push(z.coords()) {
            chosen.push(z);
        }
    }
    if chosen.len() < r {
        return Err(Error::Invariant(format!(
            "greedy found only {} of {r} independent witnesses in Q(B) of size {}",
            chosen.len(),
            witness.len()
        )));
    }
    Ok(chosen)
}

/// Which subsets of a leaf set are bad, as a bitmask over the `2^d` masks.
/// `A` (mask `a ≠ full`) is bad iff no `z ∈ E` has label pattern exactly `a`.
fn realised_patterns(graph: &DotGraph<'_>, leaves: &[&[u32]]) -> Vec<bool> {
    let mut seen = vec![false; 1 << leaves.len()];
    let set = graph.set();
    for k in 0..set.len() {
        seen[label_mask(graph, set.member_coords(k), leaves) as usize] = true;
    }
    seen
}

fn all_realised(graph: &DotGraph<'_>, leaves: &[&[u32]]) -> bool {
    let total = 1usize << leaves.len();
    let mut seen = vec![false; total];
    let mut count = 0;
    let set = graph.set();
    for k in 0..set.len() {
        let m = label_mask(graph, set.member_coords(k), leaves) as usize;
        if !seen[m] {
            seen[m] = true;
            count += 1;
            if count == total {
                return true;
            }
        }
    }
    false
}

/// Ordered d-stars with independent leaves, broken down by bad-subset size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadStarCensus {
    /// `by_size[k]`: stars with at least one bad subset of size exactly `k`, `k = 0..d−1`.
    pub by_size: Vec<u128>,
    /// Stars with a bad subset of some size `1..d−1`.
    pub any_nonempty: u128,
    /// Stars with a bad subset of some size `0..d−1`; these are exactly the
    /// independent stars whose leaf set is not shattered.
    pub any: u128,
    /// All ordered d-stars with independent leaves.
    pub independent: u128,
}

/// Upper estimate of the work `bad_star_census` performs.
pub fn bad_star_work(graph: &DotGraph<'_>) -> u128 {
    let set = graph.set();
    let d = graph.space().dim();
    graph
        .degrees()
        .into_iter()
        .map(|psi| binomial(psi, d))
        .sum::<u128>()
        .saturating_mul(set.len() as u128 * d as u128)
}

pub fn binomial(n: u64, k: usize) -> u128 {
    if k as u64 > n {
        return 0;
    }
    let mut acc = 1u128;
    for i in 0..k as u64 {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Exact census of bad stars. Refuses to run when [`bad_star_work`] exceeds `budget`.
///
/// Since `d` independent leaves pin down the center (`Q(L)` is a single point
/// of `F_q^d`), enumerating leaf sets per center visits each leaf set once.
pub fn bad_star_census(graph: &DotGraph<'_>, budget: u128) -> Result<BadStarCensus> {
    let estimate = bad_star_work(graph);
    if estimate > budget {
        return Err(Error::Budget { estimate, budget });
    }
    let set = graph.set();
    let d = graph.space().dim();
    if d > 20 {
        return Err(Error::Invalid("bad-star census supports d <= 20".into()));
    }
    let d_fact = factorial(d).ok_or(Error::Overflow)?;
    let full = (1usize << d) - 1;
    let per_center: Vec<(Vec<u64>, u64, u64, u64)> = (0..set.len())
        .into_par_iter()
        .map(|c| {
            let nbrs = graph.neighbors(set.member_coords(c));
            let mut by_size = vec![0u64; d];
            let (mut any_nonempty, mut any, mut total) = (0u64, 0u64, 0u64);
            let _ = visit_independent_subsets(set, &nbrs, d, |leaf_pos| {
                let leaves: Vec<&[u32]> = leaf_pos.iter().map(|&p| set.member_coords(p)).collect();
                let seen = realised_patterns(graph, &leaves);
                let mut has = vec![false; d];
                for (mask, &hit) in seen.iter().enumerate().take(full) {
                    if !hit {
                        has[mask.count_ones() as usize] = true;
                    }
                }
                for k in 0..d {
                    by_size[k] += has[k] as u64;
                }
                any_nonempty += has[1..].iter().any(|&b| b) as u64;
                any += has.iter().any(|&b| b) as u64;
                total += 1;
                ControlFlow::Continue(())
            });
            (by_size, any_nonempty, any, total)
        })
        .collect();
    let scale = |n: u64| -> Result<u128> { (n as u128).checked_mul(d_fact).ok_or(Error::Overflow) };
    let mut census = BadStarCensus {
        by_size: vec![0; d],
        any_nonempty: 0,
        any: 0,
        independent: 0,
    };
    for (by_size, any_nonempty, any, total) in per_center {
        for k in 0..d {
            census.by_size[k] += scale(by_size[k])?;
        }
        census.any_nonempty += scale(any_nonempty)?;
        census.any += scale(any)?;
        census.independent += scale(total)?;
    }
    Ok(census)
}

/// Ordered d-stars with independent leaves having a bad subset of size exactly `k`.
/// `k = 0` counts stars whose empty subset is bad.
pub fn count_bad_stars(graph: &DotGraph<'_>, k: usize, budget: u128) -> Result<u128> {
    let d = graph.space().dim();
    if k >= d {
        return Err(Error::Invalid(format!("k = {k} must be below d = {d}")));
    }
    Ok(bad_star_census(graph, budget)?.by_size[k])
}

/// Result of a good-star search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarSearch {
    pub certificate: Option<ShatterCertificate>,
    pub star: Option<StarTuple>,
    /// Independent leaf sets examined, including the successful one.
    pub stars_explored: u64,
    /// True when every independent d-star was examined without hitting the budget.
    pub exhausted_space: bool,
}

struct CenterScan {
    found: Option<Vec<usize>>,
    explored: u64,
    completed: bool,
}

/// Examines the independent leaf sets of one center, at most `limit` of them.
fn scan_center(graph: &DotGraph<'_>, center: usize, limit: u64) -> CenterScan {
    let set = graph.set();
    let d = graph.space().dim();
    let nbrs = graph.neighbors(set.member_coords(center));
    let mut explored = 0u64;
    let mut found = None;
    let flow = visit_independent_subsets(set, &nbrs, d, |leaf_pos| {
        if explored == limit {
            return ControlFlow::Break(());
        }
        explored += 1;
        let leaves: Vec<&[u32]> = leaf_pos.iter().map(|&p| set.member_coords(p)).collect();
        if all_realised(graph, &leaves) {
            found = Some(leaf_pos.to_vec());
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    CenterScan {
        completed: flow.is_continue(),
        found,
        explored,
    }
}

const SEARCH_BATCH: usize = 32;

/// Looks for a d-star with independent leaves and no bad subset.
///
/// Centers are visited in an order shuffled by `seed`, leaf sets in
/// lexicographic order of member positions. At most `budget` leaf sets are
/// examined. The result is the one a sequential scan would return: centers are
/// evaluated in parallel batches and reconciled in order.
pub fn find_shattered_dset(graph: &DotGraph<'_>, budget: u64, seed: u64) -> Result<StarSearch> {
    let set = graph.set();
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut stream_rng(seed, 1));

    let mut used = 0u64;
    for batch in order.chunks(SEARCH_BATCH) {
        let limit = budget - used;
        let scans: Vec<CenterScan> = batch
            .par_iter()
            .map(|&c| scan_center(graph, c, limit))
            .collect();
        for (&center, scan) in batch.iter().zip(scans) {
            let remaining = budget - used;
            if scan.explored > remaining || !(scan.completed || scan.found.is_some()) {
                return Ok(StarSearch {
                    certificate: None,
                    star: None,
                    stars_explored: budget,
                    exhausted_space: false,
                });
            }
            used += scan.explored;
            if let Some(leaf_pos) = scan.found {
                let leaves: Vec<Point> = leaf_pos
                    .iter()
                    .map(|&p| Point::from_raw(set.member_coords(p).to_vec()))
                    .collect();
                let certificate = is_shattered_direct(graph, &leaves)?;
                if !certificate.is_shattered() {
                    return Err(Error::Invariant(
                        "good star leaf set failed the direct shattering check".into(),
                    ));
                }
                let center = Point::from_raw(set.member_coords(center).to_vec());
                let star = StarTuple::new(graph, center, leaves)?;
                return Ok(StarSearch {
                    certificate: Some(certificate),
                    star: Some(star),
                    stars_explored: used,
                    exhausted_space: false,
                });
            }
        }
    }
    Ok(StarSearch {
        certificate: None,
        star: None,
        stars_explored: used,
        exhausted_space: true,
    })
}

/// How [`vc_dimension`] searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcMode {
    Exhaustive,
    StarGuided,
}

impl VcMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VcMode::Exhaustive => "exhaustive",
            VcMode::StarGuided => "star_guided",
        }
    }
}

impl std::str::FromStr for VcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(VcMode::Exhaustive),
            "star_guided" => Ok(VcMode::StarGuided),
            _ => Err(Error::Invalid(format!("unknown vc mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum VcValue {
    Exact(usize),
    /// The search ran out of budget; at least this many points are shattered.
    AtLeast(usize),
}

impl std::fmt::Display for VcValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VcValue::Exact(n) => write!(f, "{n}"),
            VcValue::AtLeast(n) => write!(f, "unresolved(>={n})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcResult {
    pub value: VcValue,
    pub mode: VcMode,
    /// A shattered set of the reported size (absent for size 0).
    pub certificate: Option<ShatterCertificate>,
    pub stars_explored: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcOptions {
    /// Ceiling on the exhaustive work estimate.
    pub work_budget: u128,
    /// Ceiling on leaf sets examined by the star search.
    pub star_budget: u64,
    pub seed: u64,
}

impl Default for VcOptions {
    fn default() -> Self {
        VcOptions {
            work_budget: 2_000_000_000,
            star_budget: 1_000_000,
            seed: 0,
        }
    }
}

/// `Σ_{n=1}^{max_n} C(|E|, n) · 2^n · |E|`.
pub fn exhaustive_work(size: u64, max_n: usize) -> u128 {
    (1..=max_n)
        .map(|n| binomial(size, n).saturating_mul(1u128 << n.min(127)).saturating_mul(size as u128))
        .fold(0u128, |a, b| a.saturating_add(b))
}

/// First shattered `n`-subset of `E` in lexicographic order of member positions.
pub fn first_shattered_subset(graph: &DotGraph<'_>, n: usize) -> Option<Vec<usize>> {
    let set = graph.set();
    let len = set.len();
    if n == 0 {
        return (!set.is_empty()).then(Vec::new);
    }
    if n > len || n >= 63 || (1u128 << n) > len as u128 {
        return None;
    }
    (0..=len - n).into_par_iter().find_map_first(|first| {
        let mut chosen = vec![first];
        first_shattered_from(graph, n, &mut chosen)
    })
}

fn first_shattered_from(graph: &DotGraph<'_>, n: usize, chosen: &mut Vec<usize>) -> Option<Vec<usize>> {
    let set = graph.set();
    if chosen.len() == n {
        let pts: Vec<&[u32]> = chosen.iter().map(|&p| set.member_coords(p)).collect();
        return all_realised(graph, &pts).then(|| chosen.clone());
    }
    let start = chosen.last().map_or(0, |&l| l + 1);
    let need = n - chosen.len();
    if set.len() < start + need {
        return None;
    }
    for next in start..=set.len() - need {
        chosen.push(next);
        if let Some(found) = first_shattered_from(graph, n, chosen) {
            return Some(found);
        }
        chosen.pop();
    }
    None
}

fn certificate_for(graph: &DotGraph<'_>, positions: &[usize]) -> Result<Option<ShatterCertificate>> {
    if positions.is_empty() {
        return Ok(None);
    }
    let set = graph.set();
    let pts: Vec<Point> = positions
        .iter()
        .map(|&p| Point::from_raw(set.member_coords(p).to_vec()))
        .collect();
    Ok(Some(is_shattered_direct(graph, &pts)?))
}

/// Upward exhaustive search over sizes `1..=max_n`.
/// Returns the largest shattered size found, its positions, and whether a size
/// with no shattered set was reached.
fn exhaustive_upto(graph: &DotGraph<'_>, max_n: usize) -> (usize, Vec<usize>, bool) {
    let mut best = (0, Vec::new());
    if graph.set().is_empty() {
        return (0, Vec::new(), true);
    }
    for n in 1..=max_n {
        match first_shattered_subset(graph, n) {
            Some(found) => best = (n, found),
            None => return (best.0, best.1, true),
        }
    }
    (best.0, best.1, false)
}

/// VC-dimension of `{h_y : y ∈ E}` on `E`.
///
/// Exhaustive mode searches sizes upward and stops at the first size with no
/// shattered subset. Star-guided mode reports `d` as soon as a good star is
/// found: no `d + 1` points are ever shattered by a hyperplane class, a cap the
/// test-suite checks exhaustively at small scale.
pub fn vc_dimension(graph: &DotGraph<'_>, mode: VcMode, opts: &VcOptions) -> Result<VcResult> {
    let d = graph.space().dim();
    let size = graph.set().len() as u64;
    match mode {
        VcMode::Exhaustive => {
            let estimate = exhaustive_work(size, d + 1);
            if estimate > opts.work_budget {
                return Err(Error::Budget {
                    estimate,
                    budget: opts.work_budget,
                });
            }
            // the cap is not assumed here: search up to |E|, stopping at the first empty size
            let (n, pos, resolved) = exhaustive_upto(graph, size as usize);
            debug_assert!(resolved);
            Ok(VcResult {
                value: VcValue::Exact(n),
                mode,
                certificate: certificate_for(graph, &pos)?,
                stars_explored: 0,
            })
        }
        VcMode::StarGuided => {
            let search = find_shattered_dset(graph, opts.star_budget, opts.seed)?;
            if let Some(cert) = search.certificate {
                return Ok(VcResult {
                    value: VcValue::Exact(d),
                    mode,
                    certificate: Some(cert),
                    stars_explored: search.stars_explored,
                });
            }
            // dependent d-sets are never shattered when t ≠ 0, so a completed
            // search rules out d; fall back to exhaustive search below d
            let below = d.saturating_sub(1);
            let estimate = exhaustive_work(size, below);
            let (n, pos, resolved) = if estimate > opts.work_budget {
                (0, Vec::new(), false)
            } else {
                exhaustive_upto(graph, below)
            };
            let value = if resolved || (search.exhausted_space && n == below) {
                VcValue::Exact(n)
            } else {
                VcValue::AtLeast(n)
            };
            Ok(VcResult {
                value,
                mode,
                certificate: certificate_for(graph, &pos)?,
                stars_explored: search.stars_explored,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::{generate, GenKind, GenSpec};

    fn sp(q: u64, d: usize) -> Space {
        Space::with(q, d).unwrap()
    }

    fn p(s: &Space, c: &[u64]) -> Point {
        s.point(c).unwrap()
    }

    fn three_point_set() -> PointSet {
        let s = sp(3, 2);
        PointSet::from_points(s, &[p(&s, &[2, 2]), p(&s, &[1, 1]), p(&s, &[2, 0])]).unwrap()
    }

    #[test]
    fn witness_set_examples() {
        let s = sp(3, 3);
        let e = PointSet::full(s);
        let g = DotGraph::new(&e, 1).unwrap();
        let q = witness_set(&g, &[s.unit(0)]).unwrap();
        assert_eq!(q.len(), 9);
        assert!(q.members().all(|z| z.coords()[0] == 1));
        assert_eq!(witness_set(&g, &[]).unwrap().len(), 27);

        let e3 = three_point_set();
        let s2 = e3.space();
        let g3 = DotGraph::new(&e3, 1).unwrap();
        let q = witness_set(&g3, &[p(&s2, &[1, 1])]).unwrap();
        assert_eq!(q.members().collect::<Vec<_>>(), vec![p(&s2, &[2, 2])]);
    }

    #[test]
    fn is_bad_examples() {
        let s = sp(3, 3);
        let e = PointSet::full(s);
        let g = DotGraph::new(&e, 1).unwrap();
        let leaves = [s.unit(0), s.unit(1), s.unit(2)];
        assert!(!is_bad(&g, &[s.unit(0)], &leaves).unwrap());
        assert!(is_bad(&g, &leaves, &leaves).is_err());

        let e3 = three_point_set();
        let s2 = e3.space();
        let g3 = DotGraph::new(&e3, 1).unwrap();
        let l = [p(&s2, &[1, 1]), p(&s2, &[2, 0])];
        assert!(is_bad(&g3, &[p(&s2, &[1, 1])], &l).unwrap());

        // Q(A) empty: (1,1)·z = 1 and (2,0)·z = 1 in E = {(1,1)} has no solution
        let lone = PointSet::from_points(s2, &[p(&s2, &[1, 1]), p(&s2, &[0, 1])]).unwrap();
        let gl = DotGraph::new(&lone, 1).unwrap();
        assert!(is_bad(&gl, &[p(&s2, &[1, 1])], &[p(&s2, &[1, 1]), p(&s2, &[0, 1])]).unwrap());
    }

    #[test]
    fn direct_examples() {
        let s = sp(3, 3);
        let e = PointSet::full(s);
        let g = DotGraph::new(&e, 1).unwrap();
        let c = [s.unit(0), s.unit(1), s.unit(2)];
        let cert = is_shattered_direct(&g, &c).unwrap();
        assert!(cert.is_shattered());
        assert!(cert.validate(&g));
        // for F_3^3 the smallest-index witness of S is its indicator vector
        if let ShatterOutcome::Shattered { witnesses } = &cert.outcome {
            for (mask, w) in witnesses.iter().enumerate() {
                let want: Vec<u32> = (0..3).map(|i| (mask >> i & 1) as u32).collect();
                assert_eq!(w.coords(), &want[..]);
            }
        }

        let e3 = three_point_set();
        let s2 = e3.space();
        let g3 = DotGraph::new(&e3, 1).unwrap();
        let cert = is_shattered_direct(&g3, &[p(&s2, &[1, 1]), p(&s2, &[2, 0])]).unwrap();
        assert_eq!(
            cert.outcome,
            ShatterOutcome::NotShattered {
                failing_mask: 2,
                failing: vec![p(&s2, &[1, 1])]
            }
        );
        assert!(cert.validate(&g3));
        assert!(is_shattered_direct(&g3, &[p(&s2, &[0, 0])]).is_err());
        assert!(is_shattered_direct(&g3, &[p(&s2, &[1, 1]), p(&s2, &[1, 1])]).is_err());
    }

    #[test]
    fn stars_examples() {
        let s = sp(3, 3);
        let e = PointSet::full(s);
        let g = DotGraph::new(&e, 1).unwrap();
        assert!(is_shattered_stars(&g, &[s.unit(0), s.unit(1), s.unit(2)]).unwrap());
        assert!(is_shattered_stars(&g, &[s.unit(0), s.unit(1)]).is_err());

        let e3 = three_point_set();
        let s2 = e3.space();
        let g3 = DotGraph::new(&e3, 1).unwrap();
        assert!(!is_shattered_stars(&g3, &[p(&s2, &[1, 1]), p(&s2, &[2, 0])]).unwrap());
    }

    #[test]
    fn bad_set_report_lists_subsets() {
        let e3 = three_point_set();
        let s2 = e3.space();
        let g3 = DotGraph::new(&e3, 1).unwrap();
        let star = StarTuple::new(&g3, p(&s2, &[2, 2]), vec![p(&s2, &[1, 1]), p(&s2, &[2, 0])]);
        // (2,2)·(2,0) = 1 and (2,2)·(1,1) = 1
        let report = bad_set_report(&g3, star.unwrap()).unwrap();
        assert!(!report.is_good);
        assert_eq!(report.bad_subsets, vec![vec![p(&s2, &[1, 1])]]);
    }

    #[test]
    fn greedy_examples() {
        let s = sp(3, 3);
        let e = PointSet::full(s);
        let g = DotGraph::new(&e, 1).unwrap();
        let q = witness_set(&g, &[s.unit(0)]).unwrap();
        let y = s.unit(0);
        let j = greedy_independent_subset(&q, &y, 2).unwrap();
        assert_eq!(j, vec![p(&s, &[1, 1, 0]), p(&s, &[1, 0, 1])]);
        assert!(greedy_independent_subset(&q, &y, 0).unwrap().is_empty());

        // |Q| = q^(r−1) exactly is rejected: Q({e1, e2}) in F_3^3 is the line (1,1,*)
        let line = witness_set(&g, &[s.unit(0), s.unit(1)]).unwrap();
        assert_eq!(line.len(), 3);
        let y = p(&s, &[1, 1, 0]);
        assert!(matches!(greedy_independent_subset(&line, &y, 2), Err(Error::Invalid(_))));
        assert_eq!(greedy_independent_subset(&line, &y, 1).unwrap().len(), 1);
        assert!(greedy_independent_subset(&q, &p(&s, &[0, 1, 0]), 1).is_err());
        assert!(greedy_independent_subset(&q, &s.unit(0), 3).is_err());
    }

    #[test]
    fn bad_star_examples() {
        let e = PointSet::full(sp(3, 2));
        let g = DotGraph::new(&e, 1).unwrap();
        assert_eq!(count_bad_stars(&g, 1, u128::MAX).unwrap(), 0);
        let c = bad_star_census(&g, u128::MAX).unwrap();
        assert_eq!(c.independent, 48);
        let empty = PointSet::empty(sp(3, 3));
        let ge = DotGraph::new(&empty, 1).unwrap();
        assert_eq!(count_bad_stars(&ge, 1, u128::MAX).unwrap(), 0);
        assert!(count_bad_stars(&g, 2, u128::MAX).is_err());
        assert!(matches!(bad_star_census(&g, 0), Err(Error::Budget { .. })));
    }

    /// Second enumeration: walks ordered leaf tuples in reverse member order and
    /// decides badness through `is_bad`.
    fn bad_stars_reversed(g: &DotGraph<'_>, k: usize) -> u128 {
        let set = g.set();
        let s = g.space();
        let d = s.dim();
        let n = set.len();
        let mut count = 0u128;
        let pts: Vec<Point> = set.points().collect();
        for y in (0..n).rev() {
            let nbrs: Vec<usize> = (0..n).rev().filter(|&x| g.is_edge(set.member_coords(y), set.member_coords(x))).collect();
            let m = nbrs.len();
            let total = m.pow(d as u32);
            for mut code in 0..total {
                let mut tuple = Vec::with_capacity(d);
                for _ in 0..d {
                    tuple.push(nbrs[code % m]);
                    code /= m;
                }
                let leaves: Vec<Point> = tuple.iter().map(|&i| pts[i].clone()).collect();
                if s.rank_of(&leaves).unwrap() != d {
                    continue;
                }
                let mut hit = false;
                for mask in 0u64..(1 << d) - 1 {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    let a: Vec<Point> = (0..d).filter(|i| mask >> i & 1 == 1).map(|i| leaves[i].clone()).collect();
                    if is_bad(g, &a, &leaves).unwrap() {
                        hit = true;
                        break;
                    }
                }
                count += hit as u128;
            }
        }
        count
    }

    #[test]
    fn bad_star_counts_match_reversed_enumeration() {
        let s = sp(3, 3);
        for seed in 0..6 {
            let e = generate(&GenSpec::new(GenKind::RandomExact { size: 8 + seed % 5 }, seed), s).unwrap();
            let g = DotGraph::new(&e, 1).unwrap();
            let census = bad_star_census(&g, u128::MAX).unwrap();
            for k in 0..3 {
                assert_eq!(census.by_size[k], bad_stars_reversed(&g, k), "seed {seed} k {k}");
            }
            let max = census.by_size[1..].iter().copied().max().unwrap();
            let sum: u128 = census.by_size[1..].iter().sum();
            assert!(max <= census.any_nonempty && census.any_nonempty <= sum);
            assert!(census.any <= census.independent);
        }
    }

    #[test]
    fn star_route_equals_direct_route() {
        for &(q, d) in &[(3u64, 2usize), (5, 2), (3, 3)] {
            let s = sp(q, d);
            for seed in 0..60u64 {
                let size = 3 + seed % (s.size().min(30) - 3);
                let e = generate(&GenSpec::new(GenKind::RandomExact { size }, seed), s).unwrap();
                let g = DotGraph::new(&e, 1 + seed % (q - 1)).unwrap();
                let mut rng = stream_rng(seed, 9);
                let pos = rand::seq::index::sample(&mut rng, e.len(), d.min(e.len()));
                if pos.len() < d {
                    continue;
                }
                let c: Vec<Point> = pos.iter().map(|k| Point::from_raw(e.member_coords(k).to_vec())).collect();
                let direct = is_shattered_direct(&g, &c).unwrap();
                assert!(direct.validate(&g));
                assert_eq!(is_shattered_stars(&g, &c).unwrap(), direct.is_shattered());
            }
        }
    }

    #[test]
    fn find_examples() {
        let s = sp(3, 3);
        let e = PointSet::full(s);
        let g = DotGraph::new(&e, 1).unwrap();
        let found = find_shattered_dset(&g, 1000, 1).unwrap();
        let cert = found.certificate.unwrap();
        assert!(cert.is_shattered() && cert.validate(&g));
        assert_eq!(cert.candidate.len(), 3);
        let none = find_shattered_dset(&g, 0, 1).unwrap();
        assert!(none.certificate.is_none());
        assert_eq!(none.stars_explored, 0);
    }

    #[test]
    fn find_is_thread_count_independent() {
        let s = sp(7, 3);
        let e = generate(&GenSpec::new(GenKind::RandomExact { size: 150 }, 4), s).unwrap();
        let g = DotGraph::new(&e, 1).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    (0..6)
                        .map(|seed| find_shattered_dset(&g, 50, seed).unwrap())
                        .collect::<Vec<_>>()
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn find_respects_budget_exactly() {
        // sequential reference: walk centers in the same order, count leaf sets
        let s = sp(5, 3);
        let e = generate(&GenSpec::new(GenKind::RandomExact { size: 40 }, 2), s).unwrap();
        let g = DotGraph::new(&e, 1).unwrap();
        let mut order: Vec<usize> = (0..e.len()).collect();
        order.shuffle(&mut stream_rng(3, 1));
        let mut used = 0u64;
        let mut first_success = None;
        'outer: for &c in &order {
            let nbrs = g.neighbors(e.member_coords(c));
            let mut stop = false;
            let _ = visit_independent_subsets(&e, &nbrs, 3, |leaf_pos| {
                used += 1;
                let leaves: Vec<&[u32]> = leaf_pos.iter().map(|&p| e.member_coords(p)).collect();
                if all_realised(&g, &leaves) {
                    stop = true;
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            });
            if stop {
                first_success = Some(used);
                break 'outer;
            }
        }
        let total = used;
        match first_success {
            Some(at) => {
                assert!(find_shattered_dset(&g, at, 3).unwrap().certificate.is_some());
                assert_eq!(find_shattered_dset(&g, at, 3).unwrap().stars_explored, at);
                if at > 0 {
                    assert!(find_shattered_dset(&g, at - 1, 3).unwrap().certificate.is_none());
                }
            }
            None => {
                let r = find_shattered_dset(&g, total + 10, 3).unwrap();
                assert!(r.certificate.is_none());
                assert!(r.exhausted_space);
            }
        }
    }

    #[test]
    fn vc_examples() {
        let opts = VcOptions::default();
        let e = PointSet::full(sp(3, 3));
        let g = DotGraph::new(&e, 1).unwrap();
        let r = vc_dimension(&g, VcMode::Exhaustive, &opts).unwrap();
        assert_eq!(r.value, VcValue::Exact(3));
        assert!(r.certificate.unwrap().validate(&g));
        assert_eq!(vc_dimension(&g, VcMode::StarGuided, &opts).unwrap().value, VcValue::Exact(3));

        let e3 = three_point_set();
        let g3 = DotGraph::new(&e3, 1).unwrap();
        assert_eq!(vc_dimension(&g3, VcMode::Exhaustive, &opts).unwrap().value, VcValue::Exact(1));
        assert_eq!(vc_dimension(&g3, VcMode::StarGuided, &opts).unwrap().value, VcValue::Exact(1));

        let s2 = sp(3, 2);
        let lone = PointSet::from_points(s2, &[p(&s2, &[1, 1])]).unwrap();
        let gl = DotGraph::new(&lone, 1).unwrap();
        let r = vc_dimension(&gl, VcMode::Exhaustive, &opts).unwrap();
        assert_eq!(r.value, VcValue::Exact(0));
        assert!(r.certificate.is_none());

        let tight = VcOptions { work_budget: 10, ..opts };
        assert!(matches!(vc_dimension(&g, VcMode::Exhaustive, &tight), Err(Error::Budget { .. })));
    }

    #[test]
    fn star_guided_without_budget_is_unresolved() {
        let e = PointSet::full(sp(3, 3));
        let g = DotGraph::new(&e, 1).unwrap();
        let opts = VcOptions { star_budget: 0, ..VcOptions::default() };
        assert_eq!(vc_dimension(&g, VcMode::StarGuided, &opts).unwrap().value, VcValue::AtLeast(2));
    }

    #[test]
    fn shattering_is_downward_closed() {
        let e = PointSet::full(sp(3, 3));
        let g = DotGraph::new(&e, 1).unwrap();
        let s = e.space();
        let c = [s.unit(0), p(&s, &[1, 1, 0]), p(&s, &[2, 0, 1])];
        let cert = is_shattered_direct(&g, &c).unwrap();
        assert!(cert.is_shattered());
        for mask in 0..7u32 {
            let sub: Vec<Point> = (0..3).filter(|i| mask >> i & 1 == 1).map(|i| cert.candidate[i].clone()).collect();
            assert!(is_shattered_direct(&g, &sub).unwrap().is_shattered());
        }
    }

    #[test]
    fn no_four_set_shattered_in_f3_cubed_plane_example() {
        // E = {x : x_1 = 1} in F_3^3: compare the star search with brute force over independent triples
        let s = sp(3, 3);
        let plane = generate(
            &GenSpec::new(GenKind::UnionHyperplanes { planes: vec![(s.unit(0), 1)] }, 0),
            s,
        )
        .unwrap();
        let g = DotGraph::new(&plane, 1).unwrap();
        let pts: Vec<Point> = plane.points().collect();
        let mut any = false;
        for a in 0..pts.len() {
            for b in a + 1..pts.len() {
                for c in b + 1..pts.len() {
                    let trip = [pts[a].clone(), pts[b].clone(), pts[c].clone()];
                    if s.rank_of(&trip).unwrap() == 3 && is_shattered_direct(&g, &trip).unwrap().is_shattered() {
                        any = true;
                    }
                }
            }
        }
        let found = find_shattered_dset(&g, u64::MAX, 0).unwrap();
        assert_eq!(found.certificate.is_some(), any);
        let exact = vc_dimension(&g, VcMode::Exhaustive, &VcOptions::default()).unwrap();
        let guided = vc_dimension(&g, VcMode::StarGuided, &VcOptions::default()).unwrap();
        assert_eq!(exact.value, guided.value);
    }
}
