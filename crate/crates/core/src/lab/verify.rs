//! Self-check driver: compares the kernels against [`super::oracle`] and
//! checks closed forms, reporting one named result per invariant.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::oracle;
use crate::error::Result;
use crate::ffield::FieldSpec;
use crate::geometry::{Point, Space};
use crate::incidence::{DotGraph, PsiStrategy};
use crate::pointset::{generate, stream_rng, GenKind, GenSpec, PointSet};
use crate::shatter::{
    bad_star_census, find_shattered_dset, first_shattered_subset, is_shattered_direct, is_shattered_stars,
    vc_dimension, VcMode, VcOptions, VcValue,
};
use crate::stars::{count_indep_dstars, count_kstars};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyLevel {
    Fast,
    Full,
}

impl std::str::FromStr for VerifyLevel {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(VerifyLevel::Fast),
            "full" => Ok(VerifyLevel::Full),
            _ => Err(crate::Error::Invalid(format!("unknown verify level `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: VerifyLevel,
    pub fault: Option<u64>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{tag} {}: {}\n", c.name, c.detail));
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!("{} checks, {failed} failed\n", self.checks.len()));
        out
    }
}

/// Builds test sets, corrupting each one's membership mask when a fault seed is given.
struct Fixtures {
    fault: Option<u64>,
}

impl Fixtures {
    fn prep(&self, set: PointSet) -> PointSet {
        match self.fault {
            None => set,
            Some(seed) => {
                // index 0 is the origin, which is never adjacent to anything
                let n = set.space().size();
                let idx = stream_rng(seed, 7).gen_range(1..n);
                set.with_flipped_mask_bit(idx)
            }
        }
    }

    fn full(&self, q: u64, d: usize) -> PointSet {
        self.prep(PointSet::full(Space::with(q, d).expect("small space")))
    }

    fn random(&self, q: u64, d: usize, size: u64, seed: u64) -> PointSet {
        let space = Space::with(q, d).expect("small space");
        let set = generate(&GenSpec::new(GenKind::RandomExact { size }, seed), space).expect("size fits");
        self.prep(set)
    }

    /// Full spaces plus random sets over `(q, d) ∈ {3,5} × {2,3}`.
    fn standard(&self, per_shape: u64, max_size: u64) -> Vec<PointSet> {
        let mut out = vec![self.full(3, 2), self.full(5, 2), self.full(3, 3)];
        for (q, d) in [(3u64, 2usize), (5, 2), (3, 3), (5, 3)] {
            for s in 0..per_shape {
                let cap = max_size.min(q.pow(d as u32));
                let size = 1 + (mix(q, d as u64, s) % cap);
                out.push(self.random(q, d, size, 1000 * q + 100 * d as u64 + s));
            }
        }
        out
    }
}

fn mix(a: u64, b: u64, c: u64) -> u64 {
    crate::pointset::mix64(a.wrapping_mul(0x9e37) ^ b.rotate_left(17) ^ c.rotate_left(41))
}

fn describe(set: &PointSet) -> String {
    let s = set.space();
    format!("q={} d={} |E|={}", s.q(), s.dim(), set.len())
}

struct Runner {
    checks: Vec<CheckResult>,
}

impl Runner {
    fn check(&mut self, name: &str, body: impl FnOnce() -> std::result::Result<String, String>) {
        let (passed, detail) = match body() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

fn field_axioms() -> std::result::Result<String, String> {
    let mut primes = 0;
    for q in 2..=31u64 {
        let Ok(f) = FieldSpec::new(q) else { continue };
        primes += 1;
        let q = q as u32;
        for a in 0..q {
            if a != 0 && f.mul(a, f.inv(a).map_err(|e| e.to_string())?) != 1 {
                return Err(format!("inverse of {a} in F_{q}"));
            }
            for b in 0..q {
                if f.add(a, b) != (a + b) % q || f.mul(a, b) != (a * b) % q {
                    return Err(format!("add/mul of {a},{b} in F_{q}"));
                }
                if f.sub(f.add(a, b), b) != a {
                    return Err(format!("sub of {a},{b} in F_{q}"));
                }
            }
        }
    }
    Ok(format!("{primes} prime fields"))
}

fn psi_strategies_agree(sets: &[PointSet], t: u64) -> std::result::Result<String, String> {
    let mut probes = 0u64;
    for set in sets {
        let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
        let space = set.space();
        let mut y = vec![0u32; space.dim()];
        for i in 0..space.size() {
            space.decode_into(i, &mut y);
            let a = g.psi_with(&y, PsiStrategy::Hyperplane);
            let b = g.psi_with(&y, PsiStrategy::Members);
            if a != b {
                return Err(format!("{}: psi differs at index {i} ({a} vs {b})", describe(set)));
            }
            probes += 1;
        }
    }
    Ok(format!("{probes} normals"))
}

fn edges_match_oracle(sets: &[PointSet], t: u64) -> std::result::Result<String, String> {
    for set in sets {
        let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
        let fast = g.edge_count() as u128;
        let slow = oracle::edges(set, t as u32);
        if fast != slow {
            return Err(format!("{}: {fast} edges vs oracle {slow}", describe(set)));
        }
    }
    Ok(format!("{} sets", sets.len()))
}

fn full_space_edges(fx: &Fixtures) -> std::result::Result<String, String> {
    // every nonzero y has exactly q^(d−1) solutions of x·y = t
    for (q, d) in [(3u64, 2usize), (3, 3), (5, 2), (5, 3), (7, 3)] {
        let set = fx.full(q, d);
        let g = DotGraph::new(&set, 1).map_err(|e| e.to_string())?;
        let expect = (q.pow(d as u32) - 1) * q.pow(d as u32 - 1);
        if g.edge_count() != expect {
            return Err(format!("F_{q}^{d}: {} edges, expected {expect}", g.edge_count()));
        }
    }
    Ok("5 full spaces".into())
}

fn residual_bound(sets: &[PointSet]) -> std::result::Result<String, String> {
    for set in sets {
        let q = set.space().q() as u64;
        for t in 1..q {
            let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
            let s = g.residual_check();
            if !s.bound_holds {
                return Err(format!("{} t={t}: residual {}/{}", describe(set), s.residual_num, s.residual_den));
            }
        }
    }
    Ok(format!("{} sets, every t", sets.len()))
}

fn star_counts_match_oracle(sets: &[PointSet], t: u64) -> std::result::Result<String, String> {
    let mut n = 0;
    for set in sets.iter().filter(|s| s.len() <= 27) {
        let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
        let d = set.space().dim();
        for k in 1..=3 {
            let fast = count_kstars(&g, k).map_err(|e| e.to_string())?;
            let slow = oracle::kstars(set, t as u32, k, false);
            if fast != slow {
                return Err(format!("{} k={k}: {fast} vs oracle {slow}", describe(set)));
            }
        }
        let fast = count_indep_dstars(&g).map_err(|e| e.to_string())?;
        let slow = oracle::kstars(set, t as u32, d, true);
        if fast != slow {
            return Err(format!("{}: independent {fast} vs oracle {slow}", describe(set)));
        }
        n += 1;
    }
    Ok(format!("{n} sets, k = 1..3 and independent d-stars"))
}

fn shatter_routes_agree(sets: &[PointSet], t: u64, per_set: usize) -> std::result::Result<String, String> {
    let mut n = 0;
    let mut shattered = 0;
    for (i, set) in sets.iter().enumerate() {
        let d = set.space().dim();
        if set.len() < d {
            continue;
        }
        let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
        let mut rng = stream_rng(i as u64, 3);
        for _ in 0..per_set {
            let pick = sample(&mut rng, set.len(), d);
            let raw: Vec<Vec<u32>> = pick.iter().map(|p| set.member_coords(p).to_vec()).collect();
            let pts: Vec<Point> = raw.iter().cloned().map(Point::from_raw).collect();
            let direct = is_shattered_direct(&g, &pts).map_err(|e| e.to_string())?.is_shattered();
            let stars = is_shattered_stars(&g, &pts).map_err(|e| e.to_string())?;
            let slow = oracle::shattered(set, t as u32, &raw);
            if direct != stars || direct != slow {
                return Err(format!(
                    "{}: direct={direct} stars={stars} oracle={slow} on {:?}",
                    describe(set),
                    raw
                ));
            }
            n += 1;
            shattered += direct as usize;
        }
    }
    Ok(format!("{n} candidates, {shattered} shattered"))
}

fn vc_matches_oracle(sets: &[PointSet], t: u64) -> std::result::Result<String, String> {
    let mut n = 0;
    for set in sets.iter().filter(|s| s.len() <= 30) {
        let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
        let got = vc_dimension(&g, VcMode::Exhaustive, &VcOptions::default()).map_err(|e| e.to_string())?;
        let expect = oracle::vc_dimension(set, t as u32);
        if got.value != VcValue::Exact(expect) {
            return Err(format!("{}: {} vs oracle {expect}", describe(set), got.value));
        }
        n += 1;
    }
    Ok(format!("{n} sets"))
}

fn constructive_consistency(sets: &[PointSet], t: u64) -> std::result::Result<String, String> {
    let mut positive = 0;
    for set in sets {
        let g = DotGraph::new(set, t).map_err(|e| e.to_string())?;
        let census = bad_star_census(&g, 50_000_000).map_err(|e| e.to_string())?;
        let n_indep = count_indep_dstars(&g).map_err(|e| e.to_string())?;
        if n_indep > census.any {
            positive += 1;
            let found = find_shattered_dset(&g, u64::MAX, 0).map_err(|e| e.to_string())?;
            match found.certificate {
                Some(c) if c.validate(&g) => {}
                _ => return Err(format!("{}: N_d − M > 0 but no good star", describe(set))),
            }
        }
    }
    Ok(format!("{} sets, {positive} with a positive margin", sets.len()))
}

fn full_space_vc(fx: &Fixtures, q: u64, d: usize, mode: VcMode) -> std::result::Result<String, String> {
    let set = fx.full(q, d);
    let g = DotGraph::new(&set, 1).map_err(|e| e.to_string())?;
    let opts = VcOptions {
        work_budget: u128::MAX,
        ..VcOptions::default()
    };
    let r = vc_dimension(&g, mode, &opts).map_err(|e| e.to_string())?;
    if r.value != VcValue::Exact(d) {
        return Err(format!("F_{q}^{d} {}: got {}", mode.as_str(), r.value));
    }
    if mode == VcMode::Exhaustive && first_shattered_subset(&g, d + 1).is_some() {
        return Err(format!("F_{q}^{d}: a {}-set is shattered", d + 1));
    }
    Ok(format!("F_{q}^{d} {}: {}", mode.as_str(), r.value))
}

/// Runs the self-check suite. `fault` corrupts one membership bit of every
/// test set, chosen from the given seed, so that the suite must fail.
pub fn verify_suite(level: VerifyLevel, fault: Option<u64>) -> VerifyReport {
    let fx = Fixtures { fault };
    let full = level == VerifyLevel::Full;
    let sets = fx.standard(if full { 12 } else { 4 }, 15);
    let mut r = Runner { checks: Vec::new() };

    r.check("field_axioms", field_axioms);
    r.check("psi_strategies_agree", || psi_strategies_agree(&sets, 1));
    r.check("edge_count_matches_oracle", || edges_match_oracle(&sets, 1));
    r.check("full_space_edge_count", || full_space_edges(&fx));
    r.check("incidence_residual_bound", || residual_bound(&sets));
    r.check("star_counts_match_oracle", || star_counts_match_oracle(&sets, 1));
    r.check("shatter_routes_agree", || shatter_routes_agree(&sets, 1, if full { 40 } else { 10 }));
    r.check("vc_matches_oracle", || vc_matches_oracle(&sets, 1));
    r.check("constructive_consistency", || constructive_consistency(&sets, 1));
    r.check("full_space_vc_star_guided", || full_space_vc(&fx, 5, 3, VcMode::StarGuided));
    if full {
        r.check("full_space_vc_exhaustive", || full_space_vc(&fx, 3, 3, VcMode::Exhaustive));
        r.check("full_space_vc_exhaustive_plane", || full_space_vc(&fx, 5, 2, VcMode::Exhaustive));
        let more: Vec<PointSet> = (0..20).map(|s| fx.random(7, 2, 10 + s % 15, 50 + s)).collect();
        r.check("edge_count_matches_oracle_q7", || edges_match_oracle(&more, 3));
        r.check("vc_matches_oracle_q7", || vc_matches_oracle(&more, 3));
        r.check("shatter_routes_agree_q7", || shatter_routes_agree(&more, 3, 40));
    }

    let passed = r.checks.iter().all(|c| c.passed);
    VerifyReport {
        level,
        fault,
        checks: r.checks,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let rep = verify_suite(VerifyLevel::Fast, None);
        assert!(rep.passed, "{}", rep.to_text());
        assert!(rep.checks.len() >= 10);
    }

    #[test]
    fn fault_is_detected() {
        for seed in [1, 2, 3, 99] {
            let rep = verify_suite(VerifyLevel::Fast, Some(seed));
            assert!(!rep.passed, "seed {seed}");
            let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
            assert!(failed.contains(&"edge_count_matches_oracle"), "{failed:?}");
            assert!(failed.contains(&"full_space_edge_count"), "{failed:?}");
        }
    }

    #[test]
    fn report_serialises() {
        let rep = VerifyReport {
            level: VerifyLevel::Fast,
            fault: None,
            checks: vec![CheckResult {
                name: "x".into(),
                passed: true,
                detail: "ok".into(),
            }],
            passed: true,
        };
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"level\":\"fast\""));
        assert_eq!(rep.to_text(), "PASS x: ok\n1 checks, 0 failed\n");
    }
}
