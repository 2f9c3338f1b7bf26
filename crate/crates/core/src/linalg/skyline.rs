//! Skyline (profile) Cholesky factorization for symmetric positive definite
//! matrices.
//!
//! Cholesky fill stays inside the envelope `[first_col(i), i]` of each row,
//! so for the ring-ordered meshes produced by the built-in mesher the packed
//! profile is close to a fixed band and factorization costs `O(n b^2)`.
//! Ingested meshes with arbitrary numbering are re-ordered with reverse
//! Cuthill-McKee when that shrinks the profile.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::sparse::SparseSym;

/// Guard against accidental near-dense profiles exhausting memory.
const MAX_PROFILE_ENTRIES: u64 = 400_000_000;

/// Cholesky factor `A = P^T L L^T P` stored by packed row segments.
#[derive(Debug, Clone)]
pub struct SkylineChol<T> {
    n: usize,
    /// `perm[factor_index] = natural_index`.
    perm: Vec<u32>,
    /// First column of each factor row's segment.
    first: Vec<u32>,
    /// Offset of each row segment in `vals`; length `n + 1`.
    ptr: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SkylineChol<T> {
    /// Factors a symmetric positive definite matrix.
    ///
    /// Tries the natural ordering and reverse Cuthill-McKee, keeps whichever
    /// profile is smaller, and fails with a numerics error on any
    /// non-positive pivot.
    pub fn factor(a: &SparseSym<T>) -> Result<Self> {
        let n = a.n();
        let natural: Vec<u32> = (0..n as u32).collect();
        let nat_size = profile_size(a, &natural);
        let rcm = rcm_order(a);
        let rcm_size = profile_size(a, &rcm);
        let perm = if rcm_size < nat_size { rcm } else { natural };
        let total = profile_size(a, &perm);
        if total > MAX_PROFILE_ENTRIES {
            return Err(Error::Numerics(format!(
                "factorization profile too large ({total} entries)"
            )));
        }

        let mut iperm = vec![0u32; n];
        for (f, &nat) in perm.iter().enumerate() {
            iperm[nat as usize] = f as u32;
        }

        // Profile under the chosen ordering.
        let mut first: Vec<u32> = (0..n as u32).collect();
        for (i, j, _) in a.entries() {
            let (fi, fj) = (iperm[i] as u32, iperm[j] as u32);
            let (r, c) = if fi >= fj { (fi, fj) } else { (fj, fi) };
            if c < first[r as usize] {
                first[r as usize] = c;
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - first[i] as usize + 1);
        }
        let mut vals = vec![T::zero(); ptr[n]];
        for (i, j, v) in a.entries() {
            let (fi, fj) = (iperm[i] as usize, iperm[j] as usize);
            let (r, c) = if fi >= fj { (fi, fj) } else { (fj, fi) };
            vals[ptr[r] + (c - first[r] as usize)] += v;
        }

        // Row-oriented factorization. Row segments strictly above row i are
        // finished; split the storage so they can be read while row i is
        // updated in place.
        for i in 0..n {
            let (done, active) = vals.split_at_mut(ptr[i]);
            let fi = first[i] as usize;
            let row_i = &mut active[..(i - fi + 1)];
            for j in fi..i {
                let fj = first[j] as usize;
                let start = fi.max(fj);
                let dot: T = row_i[(start - fi)..(j - fi)]
                    .iter()
                    .zip(&done[ptr[j] + (start - fj)..ptr[j] + (j - fj)])
                    .map(|(&x, &y)| x * y)
                    .sum();
                let ljj = done[ptr[j] + (j - fj)];
                row_i[j - fi] = (row_i[j - fi] - dot) / ljj;
            }
            let dot: T = row_i[..(i - fi)].iter().map(|&x| x * x).sum();
            let pivot = row_i[i - fi] - dot;
            if !(pivot > T::zero()) || !pivot.is_finite() {
                return Err(Error::Numerics(format!(
                    "matrix is not positive definite (pivot {pivot} at elimination step {i})"
                )));
            }
            row_i[i - fi] = pivot.sqrt();
        }

        Ok(Self {
            n,
            perm,
            first,
            ptr,
            vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Reorders a natural-indexed vector into factor order.
    pub fn to_factor_order(&self, x: &[T], out: &mut [T]) {
        for (f, &nat) in self.perm.iter().enumerate() {
            out[f] = x[nat as usize];
        }
    }

    /// Reorders a factor-ordered vector back to natural indexing.
    pub fn from_factor_order(&self, xf: &[T], out: &mut [T]) {
        for (f, &nat) in self.perm.iter().enumerate() {
            out[nat as usize] = xf[f];
        }
    }

    /// Solves `L y = x` in place; `x` must be in factor order.
    pub fn solve_l_in_place(&self, x: &mut [T]) {
        for i in 0..self.n {
            let fi = self.first[i] as usize;
            let seg = &self.vals[self.ptr[i]..self.ptr[i + 1]];
            let dot: T = seg[..(i - fi)]
                .iter()
                .zip(&x[fi..i])
                .map(|(&l, &v)| l * v)
                .sum();
            x[i] = (x[i] - dot) / seg[i - fi];
        }
    }

    /// Solves `L^T y = x` in place; `x` must be in factor order.
    pub fn solve_lt_in_place(&self, x: &mut [T]) {
        for i in (0..self.n).rev() {
            let fi = self.first[i] as usize;
            let seg = &self.vals[self.ptr[i]..self.ptr[i + 1]];
            let xi = x[i] / seg[i - fi];
            x[i] = xi;
            for (k, &l) in (fi..i).zip(seg.iter()) {
                x[k] -= l * xi;
            }
        }
    }

    /// Solves `A x = b` with natural indexing on both sides.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut xf = vec![T::zero(); self.n];
        self.to_factor_order(b, &mut xf);
        self.solve_l_in_place(&mut xf);
        self.solve_lt_in_place(&mut xf);
        let mut out = vec![T::zero(); self.n];
        self.from_factor_order(&xf, &mut out);
        out
    }
}

fn profile_size<T: Real>(a: &SparseSym<T>, perm: &[u32]) -> u64 {
    let n = a.n();
    let mut iperm = vec![0u32; n];
    for (f, &nat) in perm.iter().enumerate() {
        iperm[nat as usize] = f as u32;
    }
    let mut first: Vec<u32> = (0..n as u32).collect();
    for (i, j, _) in a.entries() {
        let (fi, fj) = (iperm[i], iperm[j]);
        let (r, c) = if fi >= fj { (fi, fj) } else { (fj, fi) };
        if c < first[r as usize] {
            first[r as usize] = c;
        }
    }
    (0..n).map(|i| (i as u64) - first[i] as u64 + 1).sum()
}

/// Reverse Cuthill-McKee ordering; returns `order[factor_index] = node`.
fn rcm_order<T: Real>(a: &SparseSym<T>) -> Vec<u32> {
    let n = a.n();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, j, _) in a.entries() {
        if i != j {
            adj[i].push(j as u32);
            adj[j].push(i as u32);
        }
    }
    for nbrs in &mut adj {
        nbrs.sort_unstable();
        nbrs.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let bfs = |start: u32, visited: &mut [bool], order: &mut Vec<u32>| {
        let base = order.len();
        visited[start as usize] = true;
        order.push(start);
        let mut head = base;
        while head < order.len() {
            let u = order[head] as usize;
            head += 1;
            let mut next: Vec<u32> = adj[u]
                .iter()
                .copied()
                .filter(|&v| !visited[v as usize])
                .collect();
            next.sort_unstable_by_key(|&v| (degree[v as usize], v));
            for v in next {
                if !visited[v as usize] {
                    visited[v as usize] = true;
                    order.push(v);
                }
            }
        }
    };

    let mut order: Vec<u32> = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    loop {
        // Pseudo-peripheral start: min-degree unvisited node, then hop to the
        // far end of a trial BFS.
        let Some(start) = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
        else {
            break;
        };
        let mut trial_visited = visited.clone();
        let mut trial = Vec::new();
        bfs(start as u32, &mut trial_visited, &mut trial);
        let far = *trial.last().expect("component is non-empty");
        bfs(far, &mut visited, &mut order);
    }
    order.reverse();
    order
}
