//! Brute-force reference implementations.
//!
//! Nothing here touches the counting kernels: every function enumerates
//! tuples straight from the definitions and does its own elimination, so the
//! verification suite can compare two unrelated code paths.

use crate::pointset::PointSet;

fn dot(q: u32, x: &[u32], y: &[u32]) -> u32 {
    x.iter().zip(y).fold(0u32, |acc, (&a, &b)| ((acc as u64 + a as u64 * b as u64) % q as u64) as u32)
}

fn inv(q: u32, a: u32) -> u32 {
    // linear search, independent of the Fermat inverse in ffield
    (1..q).find(|&b| (a as u64 * b as u64) % q as u64 == 1).expect("nonzero")
}

/// Rank by full Gauss–Jordan elimination on a copy.
pub fn rank(q: u32, rows: &[Vec<u32>]) -> usize {
    let mut m = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, p);
        let iv = inv(q, m[r][c]);
        for j in 0..cols {
            m[r][j] = (m[r][j] as u64 * iv as u64 % q as u64) as u32;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c] as u64;
                for j in 0..cols {
                    m[i][j] = ((m[i][j] as u64 + (q as u64 - f) * m[r][j] as u64) % q as u64) as u32;
                }
            }
        }
        r += 1;
    }
    r
}

fn rows(set: &PointSet) -> Vec<Vec<u32>> {
    (0..set.len()).map(|k| set.member_coords(k).to_vec()).collect()
}

/// Ordered pairs with `x·y = t`, by double loop.
pub fn edges(set: &PointSet, t: u32) -> u128 {
    let q = set.space().q();
    let pts = rows(set);
    let mut n = 0;
    for x in &pts {
        for y in &pts {
            n += (dot(q, x, y) == t) as u128;
        }
    }
    n
}

/// Ordered `(y, x_1..x_k)` with distinct leaves adjacent to `y`; with
/// `independent`, the leaves must also have full rank `k`.
pub fn kstars(set: &PointSet, t: u32, k: usize, independent: bool) -> u128 {
    let q = set.space().q();
    let pts = rows(set);
    let n = pts.len();
    let mut count = 0u128;
    let mut tuple = vec![0usize; k];
    for y in &pts {
        let total = (n as u128).pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for slot in tuple.iter_mut() {
                *slot = (c % n as u128) as usize;
                c /= n as u128;
            }
            if (0..k).any(|i| (i + 1..k).any(|j| tuple[i] == tuple[j])) {
                continue;
            }
            if !tuple.iter().all(|&x| dot(q, y, &pts[x]) == t) {
                continue;
            }
            if independent {
                let leaf_rows: Vec<Vec<u32>> = tuple.iter().map(|&x| pts[x].clone()).collect();
                if rank(q, &leaf_rows) != k {
                    continue;
                }
            }
            count += 1;
        }
    }
    count
}

/// Direct reading of the shattering definition: every subset `S` of `cand`
/// must have some `y ∈ E` labelling exactly `S`.
pub fn shattered(set: &PointSet, t: u32, cand: &[Vec<u32>]) -> bool {
    let q = set.space().q();
    let pts = rows(set);
    (0u64..1 << cand.len()).all(|s| {
        pts.iter().any(|y| {
            cand.iter()
                .enumerate()
                .all(|(i, x)| (dot(q, x, y) == t) == (s >> i & 1 == 1))
        })
    })
}

/// Largest `n` such that some `n`-subset of `E` is shattered, by trying every subset.
pub fn vc_dimension(set: &PointSet, t: u32) -> usize {
    let pts = rows(set);
    let n = pts.len();
    let mut best = 0;
    let mut size = 1;
    while size <= n && (1usize << size) <= n {
        let mut any = false;
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let cand: Vec<Vec<u32>> = idx.iter().map(|&i| pts[i].clone()).collect();
            if shattered(set, t, &cand) {
                any = true;
                break;
            }
            // next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
        if !any {
            break;
        }
        best = size;
        size += 1;
    }
    best
}
