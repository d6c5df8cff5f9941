//! Immutable point sets `E ⊆ F_q^d`, seeded generators and the text file format.
//!
//! File format (`ffvc-pointset v1`):
//!
//! ```text
//! ffvc-pointset v1
//! q=3 d=2 n=3
//! 2,0
//! 1,1
//! 2,2
//! ```
//!
//! Line 1 may carry a trailing `# comment`; nothing else may. Members are
//! written in increasing point-index order, one per line, LF terminated.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Space};

pub const FORMAT_MAGIC: &str = "ffvc-pointset v1";

/// SplitMix64 finaliser; used to derive independent RNG streams.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic RNG for `(master seed, stream id)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(stream)))
}

/// A subset of `F_q^d` with a membership bitmask and a sorted member list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    space: Space,
    mask: Vec<u64>,
    members: Vec<u32>,
    // members.len() * d coordinates, row-major, for the counting kernels
    coords: Vec<u32>,
}

impl PointSet {
    /// Builds a set from point indices; duplicates are dropped.
    pub fn from_indices(space: Space, mut indices: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i as u64 >= space.size()) {
            return Err(Error::IndexOutOfRange {
                index: bad as u64,
                limit: space.size(),
            });
        }
        indices.sort_unstable();
        indices.dedup();
        Ok(Self::from_sorted_unchecked(space, indices))
    }

    fn from_sorted_unchecked(space: Space, members: Vec<u32>) -> Self {
        let words = (space.size() as usize).div_ceil(64);
        let mut mask = vec![0u64; words];
        let d = space.dim();
        let mut coords = vec![0u32; members.len() * d];
        for (k, &i) in members.iter().enumerate() {
            mask[i as usize / 64] |= 1 << (i % 64);
            space.decode_into(i as u64, &mut coords[k * d..(k + 1) * d]);
        }
        PointSet {
            space,
            mask,
            members,
            coords,
        }
    }

    /// Builds a set from explicit points, deduplicating.
    pub fn from_points(space: Space, points: &[Point]) -> Result<Self> {
        let mut idx = Vec::with_capacity(points.len());
        for p in points {
            idx.push(space.point_index(p)? as u32);
        }
        Self::from_indices(space, idx)
    }

    pub fn full(space: Space) -> Self {
        Self::from_sorted_unchecked(space, (0..space.size() as u32).collect())
    }

    pub fn empty(space: Space) -> Self {
        Self::from_sorted_unchecked(space, Vec::new())
    }

    #[inline]
    pub fn space(&self) -> Space {
        self.space
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member point indices, strictly increasing.
    #[inline]
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// Coordinates of the `k`-th member.
    #[inline]
    pub fn member_coords(&self, k: usize) -> &[u32] {
        let d = self.space.dim();
        &self.coords[k * d..(k + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|k| Point::from_raw(self.member_coords(k).to_vec()))
    }

    #[inline]
    pub fn contains_index(&self, index: u64) -> bool {
        index < self.space.size() && self.mask[(index / 64) as usize] >> (index % 64) & 1 == 1
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.space
            .point_index(x)
            .map(|i| self.contains_index(i))
            .unwrap_or(false)
    }

    /// Position of `index` in the member list.
    pub fn position(&self, index: u64) -> Option<usize> {
        u32::try_from(index)
            .ok()
            .and_then(|i| self.members.binary_search(&i).ok())
    }

    pub fn is_subset_of(&self, other: &PointSet) -> bool {
        self.space == other.space && self.members.iter().all(|&i| other.contains_index(i as u64))
    }

    /// Copy with one mask bit flipped while the member list is left alone.
    /// Only useful for fault-injection checks: the result violates the
    /// mask/member agreement on purpose.
    #[doc(hidden)]
    pub fn with_flipped_mask_bit(&self, index: u64) -> PointSet {
        let mut out = self.clone();
        out.mask[(index / 64) as usize] ^= 1 << (index % 64);
        out
    }

    pub fn popcount(&self) -> usize {
        self.mask.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// What to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GenKind {
    Full,
    RandomExact { size: u64 },
    RandomDensity { density: f64 },
    /// Union of hyperplanes `x·y = t`; `t` given as an integer reduced mod q.
    UnionHyperplanes { planes: Vec<(Point, u32)> },
    Explicit { points: Vec<Point> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: GenKind,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: GenKind, seed: u64) -> Self {
        GenSpec { kind, seed }
    }

    /// Short tag used in experiment records.
    pub fn digest(&self) -> String {
        match &self.kind {
            GenKind::Full => "full".into(),
            GenKind::RandomExact { .. } => "random_exact".into(),
            GenKind::RandomDensity { density } => format!("random_density({density})"),
            GenKind::UnionHyperplanes { planes } => format!("union_hyperplanes({})", planes.len()),
            GenKind::Explicit { points } => format!("explicit({})", points.len()),
        }
    }
}

/// Uniform `size`-subset of `[0, n)` by a sparse partial Fisher–Yates shuffle.
fn sample_exact(n: u64, size: u64, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut swapped: HashMap<u64, u64> = HashMap::with_capacity(size as usize * 2);
    let mut out = Vec::with_capacity(size as usize);
    for i in 0..size {
        let j = rng.gen_range(i..n);
        let vj = *swapped.get(&j).unwrap_or(&j);
        let vi = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, vi);
        out.push(vj as u32);
    }
    out
}

pub fn generate(spec: &GenSpec, space: Space) -> Result<PointSet> {
    match &spec.kind {
        GenKind::Full => Ok(PointSet::full(space)),
        GenKind::RandomExact { size } => {
            if *size > space.size() {
                return Err(Error::Invalid(format!(
                    "requested size {size} exceeds q^d = {}",
                    space.size()
                )));
            }
            let mut rng = stream_rng(spec.seed, 0);
            PointSet::from_indices(space, sample_exact(space.size(), *size, &mut rng))
        }
        GenKind::RandomDensity { density } => {
            if !(0.0..=1.0).contains(density) {
                return Err(Error::Invalid(format!("density {density} not in [0,1]")));
            }
            let mut rng = stream_rng(spec.seed, 0);
            let members = (0..space.size() as u32)
                .filter(|_| rng.gen_bool(*density))
                .collect();
            Ok(PointSet::from_sorted_unchecked(space, members))
        }
        GenKind::UnionHyperplanes { planes } => {
            let mut idx = Vec::new();
            for (y, t) in planes {
                space.check(y)?;
                if y.is_zero() {
                    return Err(Error::ZeroNormal);
                }
                let t = space.field().element(*t as u64);
                idx.extend(space.hyperplane_indices(y, t)?.map(|i| i as u32));
            }
            PointSet::from_indices(space, idx)
        }
        GenKind::Explicit { points } => PointSet::from_points(space, points),
    }
}

pub fn write_pointset(set: &PointSet) -> String {
    let s = set.space();
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_MAGIC}");
    let _ = writeln!(out, "q={} d={} n={}", s.q(), s.dim(), set.len());
    for k in 0..set.len() {
        let row: Vec<String> = set.member_coords(k).iter().map(|c| c.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<(u64, usize, usize)> {
    let mut q = None;
    let mut d = None;
    let mut n = None;
    let fields: Vec<&str> = line.split(' ').collect();
    if fields.len() != 3 {
        return Err(parse_err(2, "expected `q=<int> d=<int> n=<int>`"));
    }
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(2, format!("malformed field `{field}`")))?;
        let value: u64 = value
            .parse()
            .map_err(|_| parse_err(2, format!("bad integer in `{field}`")))?;
        let slot = match key {
            "q" => &mut q,
            "d" => &mut d,
            "n" => &mut n,
            _ => return Err(parse_err(2, format!("unknown key `{key}`"))),
        };
        if slot.replace(value).is_some() {
            return Err(parse_err(2, format!("duplicate key `{key}`")));
        }
    }
    match (q, d, n) {
        (Some(q), Some(d), Some(n)) => Ok((q, d as usize, n as usize)),
        _ => Err(parse_err(2, "header must define q, d and n")),
    }
}

pub fn read_pointset(text: &str) -> Result<PointSet> {
    if text.contains('\r') {
        return Err(parse_err(1, "CR characters are not allowed (LF line endings only)"));
    }
    let mut lines: Vec<&str> = text.split('\n').collect();
    // a terminating LF leaves one empty trailing piece
    if lines.last() == Some(&"") {
        lines.pop();
    }
    let first = lines.first().ok_or_else(|| parse_err(1, "empty input"))?;
    let magic = match first.split_once('#') {
        Some((head, _comment)) => head.trim_end(),
        None => first,
    };
    if magic != FORMAT_MAGIC {
        return Err(parse_err(1, format!("expected `{FORMAT_MAGIC}`")));
    }
    let header = lines.get(1).ok_or_else(|| parse_err(2, "missing header line"))?;
    let (q, d, n) = parse_header(header)?;
    let space = Space::with(q, d).map_err(|e| parse_err(2, e.to_string()))?;
    let body = &lines[2..];
    if body.len() != n {
        return Err(parse_err(
            2,
            format!("header declares n={n} but {} point lines follow", body.len()),
        ));
    }
    let mut indices = Vec::with_capacity(n);
    let mut seen = vec![false; 0];
    if n > 0 {
        seen = vec![false; space.size() as usize];
    }
    let mut coords = Vec::with_capacity(d);
    for (k, line) in body.iter().enumerate() {
        let lineno = k + 3;
        coords.clear();
        for tok in line.split(',') {
            let v: u64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad coordinate `{tok}`")))?;
            coords.push(v);
        }
        let p = space.point(&coords).map_err(|e| parse_err(lineno, e.to_string()))?;
        let idx = space.point_index(&p)? as usize;
        if seen[idx] {
            return Err(parse_err(lineno, format!("duplicate point {p}")));
        }
        seen[idx] = true;
        indices.push(idx as u32);
    }
    PointSet::from_indices(space, indices)
}
