//! Seeded experiment sweeps over `(q, d, t, size, seed)` grids.
//!
//! Config files are `key = value` lines with `#` comments. Lists are comma
//! separated; seeds also accept inclusive ranges `a..b`. Sizes are integers or
//! `q^a/b`, meaning `⌈q^(a/b)⌉` for the cell's `q`.
//!
//! ```text
//! q = 11, 13
//! d = 3
//! t = 1
//! gen = random_exact
//! size = q^5/2
//! seeds = 1..10
//! vc_mode = star_guided
//! ```

use std::fmt::Write as _;
use std::time::Instant;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{self, Constants};
use crate::error::{Error, Result};
use crate::geometry::Space;
use crate::incidence::DotGraph;
use crate::pointset::{generate, GenKind, GenSpec};
use crate::shatter::{vc_dimension, VcMode, VcOptions};
use crate::stars::{count_indep_dstars, count_kstars};

pub const CSV_HEADER: &str = "q,d,t,gen,size,seed,edges,residual_num,residual_den,n1,n2,n3,n_indep_d,vc,vc_mode,thm21_holds,l24_holds,l25_holds,l28_rhs,elapsed_ms";

/// A size entry of the grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeSpec {
    Absolute(u64),
    /// `⌈q^(num/den)⌉`.
    QPower { num: u64, den: u64 },
}

impl SizeSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(exp) = text.strip_prefix("q^") {
            let (num, den) = match exp.split_once('/') {
                Some((n, d)) => (n.trim(), d.trim()),
                None => (exp.trim(), "1"),
            };
            let bad = || Error::Invalid(format!("bad size exponent `{text}`"));
            let num: u64 = num.parse().map_err(|_| bad())?;
            let den: u64 = den.parse().map_err(|_| bad())?;
            if den == 0 {
                return Err(bad());
            }
            return Ok(SizeSpec::QPower { num, den });
        }
        text.parse()
            .map(SizeSpec::Absolute)
            .map_err(|_| Error::Invalid(format!("bad size `{text}`")))
    }

    pub fn resolve(&self, q: u64) -> u64 {
        match *self {
            SizeSpec::Absolute(n) => n,
            SizeSpec::QPower { num, den } => ceil_power(q, num, den),
        }
    }
}

/// Smallest integer `s` with `s ≥ q^(num/den)`, decided exactly.
pub fn ceil_power(q: u64, num: u64, den: u64) -> u64 {
    let one = BigRational::from_integer(1.into());
    let guess = (q as f64).powf(num as f64 / den as f64).ceil() as u64;
    let mut s = guess.saturating_sub(2);
    while !bounds::meets_power_threshold(s, &one, q, num, den) {
        s += 1;
    }
    while s > 0 && bounds::meets_power_threshold(s - 1, &one, q, num, den) {
        s -= 1;
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepGen {
    Full,
    RandomExact,
    RandomDensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub q: Vec<u64>,
    pub d: Vec<usize>,
    pub t: Vec<u64>,
    pub gen: SweepGen,
    pub sizes: Vec<SizeSpec>,
    pub densities: Vec<f64>,
    pub seeds: Vec<u64>,
    pub vc_mode: VcMode,
    pub star_budget: u64,
    pub work_budget: u128,
    /// Compute the independent-leaf d-star count.
    pub indep: bool,
    pub constants: Constants,
    /// Record wall time; off yields `elapsed_ms = 0` and byte-stable output.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            q: Vec::new(),
            d: Vec::new(),
            t: vec![1],
            gen: SweepGen::Full,
            sizes: Vec::new(),
            densities: Vec::new(),
            seeds: vec![0],
            vc_mode: VcMode::StarGuided,
            star_budget: 1_000_000,
            work_budget: VcOptions::default().work_budget,
            indep: true,
            constants: Constants::default(),
            timing: true,
        }
    }
}

fn parse_list<T>(value: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str) -> impl Fn(&str) -> Result<T> + '_ {
    move |s| s.parse().map_err(|_| Error::Invalid(format!("{key}: cannot parse `{s}`")))
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Invalid(format!("{key}: expected a boolean, got `{other}`"))),
    }
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = parse_num("seeds")(a.trim())?;
            let b: u64 = parse_num("seeds")(b.trim())?;
            if b < a {
                return Err(Error::Invalid(format!("seeds: empty range `{item}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(parse_num("seeds")(item)?);
        }
    }
    Ok(out)
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let wrap = |e: Error| Error::Parse {
                line: lineno + 1,
                msg: e.to_string(),
            };
            match key {
                "q" => cfg.q = parse_list(value, parse_num("q")).map_err(wrap)?,
                "d" => cfg.d = parse_list(value, parse_num("d")).map_err(wrap)?,
                "t" => cfg.t = parse_list(value, parse_num("t")).map_err(wrap)?,
                "gen" => {
                    cfg.gen = match value {
                        "full" => SweepGen::Full,
                        "random_exact" => SweepGen::RandomExact,
                        "random_density" => SweepGen::RandomDensity,
                        other => return Err(wrap(Error::Invalid(format!("unknown gen `{other}`")))),
                    }
                }
                "size" | "sizes" => cfg.sizes = parse_list(value, SizeSpec::parse).map_err(wrap)?,
                "density" | "densities" => {
                    cfg.densities = parse_list(value, parse_num("density")).map_err(wrap)?
                }
                "seed" | "seeds" => cfg.seeds = parse_seeds(value).map_err(wrap)?,
                "vc_mode" | "mode" => cfg.vc_mode = value.parse().map_err(wrap)?,
                "star_budget" | "budget" => cfg.star_budget = parse_num("star_budget")(value).map_err(wrap)?,
                "work_budget" => cfg.work_budget = parse_num("work_budget")(value).map_err(wrap)?,
                "indep" => cfg.indep = parse_bool(key, value).map_err(wrap)?,
                "timing" => cfg.timing = parse_bool(key, value).map_err(wrap)?,
                "c_d" => cfg.constants.c_d = bounds::parse_rational(value).map_err(wrap)?,
                "c_k" => cfg.constants.c_k = bounds::parse_rational(value).map_err(wrap)?,
                "c_prime" => cfg.constants.c_prime = bounds::parse_rational(value).map_err(wrap)?,
                other => return Err(wrap(Error::Invalid(format!("unknown key `{other}`")))),
            }
        }
        Ok(cfg)
    }

    /// Expands the grid, validating every cell before anything runs.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.constants.validate()?;
        let mut cells = Vec::new();
        for &q in &self.q {
            for &d in &self.d {
                let space = Space::with(q, d)?;
                for &t in &self.t {
                    if t == 0 {
                        return Err(Error::ZeroThreshold);
                    }
                    space.field().canonical(t)?;
                    let kinds: Vec<GenKind> = match self.gen {
                        SweepGen::Full => vec![GenKind::Full],
                        SweepGen::RandomExact => self
                            .sizes
                            .iter()
                            .map(|s| GenKind::RandomExact { size: s.resolve(q) })
                            .collect(),
                        SweepGen::RandomDensity => self
                            .densities
                            .iter()
                            .map(|&density| GenKind::RandomDensity { density })
                            .collect(),
                    };
                    for kind in kinds {
                        match &kind {
                            GenKind::RandomExact { size } if *size > space.size() => {
                                return Err(Error::Invalid(format!(
                                    "size {size} exceeds q^d = {} for q={q} d={d}",
                                    space.size()
                                )))
                            }
                            GenKind::RandomDensity { density } if !(0.0..=1.0).contains(density) => {
                                return Err(Error::Invalid(format!("density {density} not in [0,1]")))
                            }
                            _ => {}
                        }
                        for &seed in &self.seeds {
                            cells.push(Cell {
                                q,
                                d,
                                t,
                                gen: GenSpec::new(kind.clone(), seed),
                            });
                        }
                    }
                }
            }
        }
        Ok(cells)
    }
}

/// One grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub q: u64,
    pub d: usize,
    pub t: u64,
    pub gen: GenSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub q: u64,
    pub d: usize,
    pub t: u64,
    pub gen: String,
    pub size: u64,
    pub seed: u64,
    pub edges: u64,
    pub residual_num: i128,
    pub residual_den: u64,
    pub n1: Option<u128>,
    pub n2: Option<u128>,
    pub n3: Option<u128>,
    pub n_indep_d: Option<u128>,
    pub vc: String,
    pub vc_mode: String,
    pub thm21_holds: bool,
    /// Every computed `N_k` meets `|E|^(k+1)/(2q^k)`.
    pub l24_holds: bool,
    /// `𝒩_d ≥ |E|^(d+1)/(3q^d)`; absent when the count was skipped.
    pub l25_holds: Option<bool>,
    /// Bad-star bound at `k = d − 1`; absent for `d = 1`.
    pub l28_rhs: Option<String>,
    pub elapsed_ms: u64,
}

impl ExperimentRecord {
    fn sort_key(&self) -> (u64, usize, u64, u64, u64, String) {
        (self.q, self.d, self.size, self.seed, self.t, self.gen.clone())
    }

    pub fn csv_row(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(T::to_string).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.q,
            self.d,
            self.t,
            self.gen,
            self.size,
            self.seed,
            self.edges,
            self.residual_num,
            self.residual_den,
            opt(&self.n1),
            opt(&self.n2),
            opt(&self.n3),
            opt(&self.n_indep_d),
            self.vc,
            self.vc_mode,
            self.thm21_holds,
            self.l24_holds,
            opt(&self.l25_holds),
            opt(&self.l28_rhs),
            self.elapsed_ms
        )
    }
}

/// Runs one cell. Budget refusals are recorded in the `vc` field.
pub fn run_cell(cell: &Cell, cfg: &SweepConfig) -> Result<ExperimentRecord> {
    let start = Instant::now();
    let space = Space::with(cell.q, cell.d)?;
    let set = generate(&cell.gen, space)?;
    let graph = DotGraph::new(&set, cell.t)?;
    let size = set.len() as u64;

    let incidence = graph.residual_check();
    let mut n = [None; 3];
    let mut l24 = true;
    for k in 1..=cell.d.min(3) {
        let count = count_kstars(&graph, k)?;
        l24 &= bounds::count_meets(count, &bounds::kstar_rhs(cell.q, k, size));
        n[k - 1] = Some(count);
    }
    let n_indep = if cfg.indep {
        Some(count_indep_dstars(&graph)?)
    } else {
        None
    };
    let l25 = n_indep.map(|c| bounds::count_meets(c, &bounds::indep_rhs(cell.q, cell.d, size)));
    let l28 = (cell.d >= 2).then(|| {
        bounds::format_rational(&bounds::bad_rhs(cell.q, cell.d, cell.d - 1, size, &cfg.constants.c_prime))
    });

    let opts = VcOptions {
        work_budget: cfg.work_budget,
        star_budget: cfg.star_budget,
        seed: cell.gen.seed,
    };
    let vc = match vc_dimension(&graph, cfg.vc_mode, &opts) {
        Ok(r) => r.value.to_string(),
        Err(Error::Budget { .. }) => "refused(budget)".to_string(),
        Err(e) => return Err(e),
    };

    Ok(ExperimentRecord {
        q: cell.q,
        d: cell.d,
        t: cell.t,
        gen: cell.gen.digest(),
        size,
        seed: cell.gen.seed,
        edges: incidence.edge_count,
        residual_num: incidence.residual_num,
        residual_den: incidence.residual_den,
        n1: n[0],
        n2: n[1],
        n3: n[2],
        n_indep_d: n_indep,
        vc,
        vc_mode: cfg.vc_mode.as_str().to_string(),
        thm21_holds: incidence.bound_holds,
        l24_holds: l24,
        l25_holds: l25,
        l28_rhs: l28,
        elapsed_ms: if cfg.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    })
}

/// Runs every cell on the ambient rayon pool and sorts by `(q, d, size, seed)`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ExperimentRecord>> {
    let cells = cfg.cells()?;
    let mut records = cells
        .par_iter()
        .map(|c| run_cell(c, cfg))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(ExperimentRecord::sort_key);
    Ok(records)
}

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    let _ = writeln!(out, "{CSV_HEADER}");
    for r in records {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn records_to_json(records: &[ExperimentRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialise");
    s.push('\n');
    s
}
