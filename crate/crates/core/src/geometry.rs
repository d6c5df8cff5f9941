//! Vectors in `F_q^d`: dot products, mixed-radix indexing, incremental rank
//! testing and enumeration of affine hyperplanes `{x : x·y = t}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{FieldElement, FieldSpec};

/// Largest ambient space we are willing to index, `q^d <= 2^31`.
pub const MAX_SPACE_SIZE: u64 = 1 << 31;

/// The ambient space `F_q^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    field: FieldSpec,
    dim: usize,
    size: u64,
}

/// A point of `F_q^d`, coordinates stored as canonical residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<u32>,
}

impl Point {
    /// Wraps raw coordinates without range checks; use [`Space::point`] to validate.
    pub fn from_raw(coords: Vec<u32>) -> Self {
        Point { coords }
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Space {
    pub fn new(field: FieldSpec, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        let mut size: u128 = 1;
        for _ in 0..dim {
            size *= field.q() as u128;
            if size > MAX_SPACE_SIZE as u128 {
                return Err(Error::SpaceTooLarge(size));
            }
        }
        Ok(Space {
            field,
            dim,
            size: size as u64,
        })
    }

    /// Convenience constructor validating both `q` and `d`.
    pub fn with(q: u64, dim: usize) -> Result<Self> {
        Space::new(FieldSpec::new(q)?, dim)
    }

    #[inline]
    pub fn field(&self) -> FieldSpec {
        self.field
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.field.q()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `q^d`.
    #[inline]
    pub fn size(&self) -> u64 {
        self.size
    }

    /// `q^e` as u64; callers guarantee `e <= d`.
    pub fn q_pow(&self, e: usize) -> u64 {
        (self.q() as u64).pow(e as u32)
    }

    /// Validates coordinates and builds a point.
    pub fn point(&self, coords: &[u64]) -> Result<Point> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        let mut out = Vec::with_capacity(self.dim);
        for &c in coords {
            out.push(self.field.canonical(c)?.value());
        }
        Ok(Point { coords: out })
    }

    pub fn zero_point(&self) -> Point {
        Point {
            coords: vec![0; self.dim],
        }
    }

    /// Unit vector `e_i` (0-based).
    pub fn unit(&self, i: usize) -> Point {
        let mut coords = vec![0; self.dim];
        coords[i] = 1;
        Point { coords }
    }

    pub fn check(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        if let Some(&c) = x.coords.iter().find(|&&c| c >= self.q()) {
            return Err(Error::CoordinateOutOfRange {
                value: c as u64,
                q: self.q(),
            });
        }
        Ok(())
    }

    pub fn dot(&self, x: &Point, y: &Point) -> Result<FieldElement> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.field.element(self.dot_raw(&x.coords, &y.coords) as u64))
    }

    /// Unchecked dot product on coordinate slices of equal length.
    #[inline]
    pub fn dot_raw(&self, x: &[u32], y: &[u32]) -> u32 {
        // q < 2^16 so each product is < 2^32 and up to 2^32 terms fit in u64
        let s: u64 = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| a as u64 * b as u64)
            .sum();
        (s % self.q() as u64) as u32
    }

    /// Little-endian mixed-radix index: coordinate 0 is the least significant digit.
    pub fn point_index(&self, x: &Point) -> Result<u64> {
        self.check(x)?;
        Ok(self.index_of_raw(&x.coords))
    }

    #[inline]
    pub fn index_of_raw(&self, coords: &[u32]) -> u64 {
        let q = self.q() as u64;
        coords.iter().rev().fold(0u64, |acc, &c| acc * q + c as u64)
    }

    pub fn index_point(&self, index: u64) -> Result<Point> {
        if index >= self.size {
            return Err(Error::IndexOutOfRange {
                index,
                limit: self.size,
            });
        }
        let mut coords = vec![0; self.dim];
        self.decode_into(index, &mut coords);
        Ok(Point { coords })
    }

    /// Writes the coordinates of `index` into `out` (length `d`).
    #[inline]
    pub fn decode_into(&self, mut index: u64, out: &mut [u32]) {
        let q = self.q() as u64;
        for c in out.iter_mut() {
            *c = (index % q) as u32;
            index /= q;
        }
    }

    pub fn rank_of(&self, vs: &[Point]) -> Result<usize> {
        let mut basis = Basis::new(*self);
        for v in vs {
            self.check(v)?;
            basis.try_push(&v.coords);
        }
        Ok(basis.rank())
    }

    /// Solutions of `x·y = t` in increasing index order.
    pub fn hyperplane_solutions(&self, y: &Point, t: FieldElement) -> Result<impl Iterator<Item = Point> + '_> {
        let space = *self;
        Ok(self
            .hyperplane_indices(y, t)?
            .map(move |i| space.index_point(i).expect("hyperplane index in range")))
    }

    /// Like [`Space::hyperplane_solutions`] but yields point indices.
    pub fn hyperplane_indices(&self, y: &Point, t: FieldElement) -> Result<HyperplaneIndices> {
        self.check(y)?;
        if t.field() != self.field {
            return Err(Error::FieldMismatch {
                left: self.q(),
                right: t.field().q(),
            });
        }
        HyperplaneIndices::new(*self, &y.coords, t.value())
    }
}

/// Iterator over the point indices of `{x : x·y = t}`, sorted ascending.
///
/// With `p` the first nonzero coordinate of `y`, the coordinates below `p` do
/// not enter the equation, so the solved digit `x_p` depends only on the digits
/// above `p`. Iterating the high digits as a counter and the low block as a
/// contiguous range therefore produces indices in increasing order.
#[derive(Debug, Clone)]
pub struct HyperplaneIndices {
    field: FieldSpec,
    normal: Vec<u32>,
    pivot: usize,
    pivot_inv: u32,
    t: u32,
    low_span: u64,
    // digits for coordinates pivot+1..d, least significant first
    high: Vec<u32>,
    high_weight: u64,
    high_done: bool,
    block_base: u64,
    low: u64,
}

impl HyperplaneIndices {
    fn new(space: Space, normal: &[u32], t: u32) -> Result<Self> {
        let pivot = normal.iter().position(|&c| c != 0).ok_or(Error::ZeroNormal)?;
        let field = space.field();
        let pivot_inv = field.inv(normal[pivot])?;
        let mut it = HyperplaneIndices {
            field,
            normal: normal.to_vec(),
            pivot,
            pivot_inv,
            t,
            low_span: space.q_pow(pivot),
            high: vec![0; space.dim() - pivot - 1],
            high_weight: space.q_pow(pivot + 1),
            high_done: false,
            block_base: 0,
            low: 0,
        };
        it.block_base = it.compute_block_base();
        Ok(it)
    }

    fn compute_block_base(&self) -> u64 {
        let f = self.field;
        let q = f.q() as u64;
        let mut s = 0u32;
        let mut high_index = 0u64;
        for (j, &digit) in self.high.iter().enumerate().rev() {
            s = f.add(s, f.mul(digit, self.normal[self.pivot + 1 + j]));
            high_index = high_index * q + digit as u64;
        }
        let xp = f.mul(f.sub(self.t, s), self.pivot_inv);
        high_index * self.high_weight + xp as u64 * self.low_span
    }

    fn advance_high(&mut self) -> bool {
        let q = self.field.q();
        for digit in self.high.iter_mut() {
            *digit += 1;
            if *digit < q {
                return true;
            }
            *digit = 0;
        }
        false
    }
}

impl Iterator for HyperplaneIndices {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        if self.high_done {
            return None;
        }
        let out = self.block_base + self.low;
        self.low += 1;
        if self.low == self.low_span {
            self.low = 0;
            if self.advance_high() {
                self.block_base = self.compute_block_base();
            } else {
                self.high_done = true;
            }
        }
        Some(out)
    }
}

/// Incrementally maintained echelon basis of a subspace of `F_q^d`.
///
/// Rows are kept in insertion order; each row is monic at its pivot (its first
/// nonzero coordinate) and vanishes at the pivots of all earlier rows. Reducing
/// a vector against the rows in order therefore yields zero iff the vector lies
/// in the span, and removing the most recent row keeps the invariant, which is
/// what the backtracking counters rely on.
#[derive(Debug, Clone)]
pub struct Basis {
    space: Space,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
    scratch: Vec<u32>,
}

impl Basis {
    pub fn new(space: Space) -> Self {
        Basis {
            space,
            rows: Vec::with_capacity(space.dim()),
            pivots: Vec::with_capacity(space.dim()),
            scratch: vec![0; space.dim()],
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> impl Iterator<Item = Point> + '_ {
        self.rows.iter().map(|r| Point::from_raw(r.clone()))
    }

    fn reduce_into_scratch(&mut self, v: &[u32]) {
        let f = self.space.field();
        self.scratch.copy_from_slice(v);
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let c = self.scratch[p];
            if c != 0 {
                for (s, &r) in self.scratch.iter_mut().zip(row) {
                    *s = f.sub(*s, f.mul(c, r));
                }
            }
        }
    }

    /// True iff `v` lies in the current span.
    pub fn contains(&mut self, v: &[u32]) -> bool {
        self.reduce_into_scratch(v);
        self.scratch.iter().all(|&c| c == 0)
    }

    /// Inserts `v` if it enlarges the span; returns whether it did.
    pub fn try_push(&mut self, v: &[u32]) -> bool {
        self.reduce_into_scratch(v);
        let Some(p) = self.scratch.iter().position(|&c| c != 0) else {
            return false;
        };
        let f = self.space.field();
        let inv = f.inv(self.scratch[p]).expect("pivot is nonzero");
        let row: Vec<u32> = self.scratch.iter().map(|&c| f.mul(c, inv)).collect();
        self.rows.push(row);
        self.pivots.push(p);
        true
    }

    /// Removes the most recently inserted row.
    pub fn pop(&mut self) {
        self.rows.pop();
        self.pivots.pop();
    }

    pub fn truncate(&mut self, rank: usize) {
        self.rows.truncate(rank);
        self.pivots.truncate(rank);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp(q: u64, d: usize) -> Space {
        Space::with(q, d).unwrap()
    }

    fn pt(s: &Space, c: &[u64]) -> Point {
        s.point(c).unwrap()
    }

    fn random_point(s: &Space, rng: &mut ChaCha8Rng) -> Point {
        let idx = rng.gen_range(0..s.size());
        s.index_point(idx).unwrap()
    }

    /// Gaussian elimination on a full matrix, independent of `Basis`.
    fn rank_oracle(s: &Space, vs: &[Point]) -> usize {
        let f = s.field();
        let mut m: Vec<Vec<u32>> = vs.iter().map(|v| v.coords().to_vec()).collect();
        let mut rank = 0;
        for col in 0..s.dim() {
            let Some(r) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
                continue;
            };
            m.swap(rank, r);
            let inv = f.inv(m[rank][col]).unwrap();
            for r in 0..m.len() {
                if r != rank && m[r][col] != 0 {
                    let c = f.mul(m[r][col], inv);
                    for j in 0..s.dim() {
                        let sub = f.mul(c, m[rank][j]);
                        m[r][j] = f.sub(m[r][j], sub);
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn dot_examples() {
        let s = sp(5, 3);
        let one = s.field().one();
        assert_eq!(s.dot(&pt(&s, &[1, 2, 3]), &pt(&s, &[1, 1, 1])).unwrap(), one);
        assert!(s.dot(&pt(&s, &[4, 3, 2]), &s.zero_point()).unwrap().is_zero());
        let s3 = sp(3, 2);
        assert_eq!(s3.dot(&pt(&s3, &[2, 2]), &pt(&s3, &[2, 2])).unwrap().value(), 2);
        let bad = Point::from_raw(vec![1, 1]);
        assert!(matches!(s.dot(&bad, &pt(&s, &[1, 1, 1])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dot_symmetric_bilinear() {
        let s = sp(7, 3);
        let f = s.field();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let (x, y, z) = (random_point(&s, &mut rng), random_point(&s, &mut rng), random_point(&s, &mut rng));
            let a = rng.gen_range(0..7u32);
            let xy = s.dot(&x, &y).unwrap();
            assert_eq!(xy, s.dot(&y, &x).unwrap());
            let ax_plus_z: Vec<u32> = x.coords().iter().zip(z.coords()).map(|(&xi, &zi)| f.add(f.mul(a, xi), zi)).collect();
            let lhs = s.dot_raw(&ax_plus_z, y.coords());
            let rhs = f.add(f.mul(a, xy.value()), s.dot_raw(z.coords(), y.coords()));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn index_examples() {
        let s = sp(3, 3);
        assert_eq!(s.point_index(&s.zero_point()).unwrap(), 0);
        let s2 = sp(3, 2);
        assert_eq!(s2.point_index(&pt(&s2, &[1, 2])).unwrap(), 7);
        assert_eq!(s2.index_point(7).unwrap(), pt(&s2, &[1, 2]));
        assert!(matches!(s2.index_point(9), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn index_round_trip_random() {
        let s = sp(13, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = Point::from_raw((0..4).map(|_| rng.gen_range(0..13)).collect());
            assert_eq!(s.index_point(s.point_index(&x).unwrap()).unwrap(), x);
        }
    }

    #[test]
    fn rank_examples() {
        let s = sp(3, 3);
        assert_eq!(s.rank_of(&[s.unit(0), s.unit(1)]).unwrap(), 2);
        let s5 = sp(5, 2);
        assert_eq!(s5.rank_of(&[pt(&s5, &[1, 2]), pt(&s5, &[2, 4])]).unwrap(), 1);
        assert_eq!(s.rank_of(&[]).unwrap(), 0);
    }

    #[test]
    fn rank_matches_oracle_and_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(q, d) in &[(2u64, 4usize), (3, 3), (5, 3), (7, 4)] {
            let s = sp(q, d);
            for _ in 0..300 {
                let n = rng.gen_range(0..=d + 2);
                let mut vs: Vec<Point> = (0..n).map(|_| random_point(&s, &mut rng)).collect();
                // bias toward dependence
                if n >= 2 && rng.gen_bool(0.3) {
                    let c = rng.gen_range(0..q as u32);
                    let scaled = vs[0].coords().iter().map(|&x| s.field().mul(c, x)).collect();
                    vs[1] = Point::from_raw(scaled);
                }
                let r = s.rank_of(&vs).unwrap();
                assert_eq!(r, rank_oracle(&s, &vs));
                assert!(r <= n.min(d));
                vs.reverse();
                assert_eq!(s.rank_of(&vs).unwrap(), r);
            }
        }
    }

    #[test]
    fn basis_push_pop() {
        let s = sp(5, 3);
        let mut b = Basis::new(s);
        assert!(b.try_push(&[1, 2, 0]));
        assert!(b.try_push(&[0, 1, 1]));
        assert!(!b.try_push(&[1, 3, 1]));
        assert!(b.contains(&[2, 4, 0]));
        assert_eq!(b.rank(), 2);
        for row in b.rows().collect::<Vec<_>>() {
            assert!(!b.try_push(row.coords()));
        }
        b.pop();
        assert!(!b.contains(&[0, 1, 1]));
        assert!(b.contains(&[3, 1, 0]));
    }

    #[test]
    fn hyperplane_examples() {
        let s = sp(3, 3);
        let t = s.field().one();
        let pts: Vec<Point> = s.hyperplane_solutions(&s.unit(0), t).unwrap().collect();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|p| p.coords()[0] == 1));
        assert!(matches!(s.hyperplane_indices(&s.zero_point(), t), Err(Error::ZeroNormal)));
    }

    #[test]
    fn hyperplane_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &(q, d) in &[(2u64, 3usize), (3, 3), (5, 2), (5, 4), (7, 3), (11, 3), (3, 5)] {
            let s = sp(q, d);
            for _ in 0..20 {
                let y = loop {
                    let y = random_point(&s, &mut rng);
                    if !y.is_zero() {
                        break y;
                    }
                };
                let t = s.field().element(rng.gen_range(0..q));
                let got: Vec<u64> = s.hyperplane_indices(&y, t).unwrap().collect();
                let want: Vec<u64> = (0..s.size())
                    .filter(|&i| s.dot(&s.index_point(i).unwrap(), &y).unwrap() == t)
                    .collect();
                assert_eq!(got.len() as u64, s.q_pow(d - 1));
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn space_guard() {
        assert!(matches!(Space::with(2, 32), Err(Error::SpaceTooLarge(_))));
        assert!(Space::with(2, 31).is_ok());
        assert!(Space::with(3, 0).is_err());
    }
}
