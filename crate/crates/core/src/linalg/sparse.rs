//! Symmetric sparse matrices in merged lower-triangular CSR form.
//!
//! Assembly accumulates duplicate triplets (the natural output of
//! element-by-element finite element loops); `SymBuilder::build` sorts and
//! merges them deterministically. Only the lower triangle is stored; all
//! operations account for the implicit transpose.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Triplet accumulator for a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymBuilder<T> {
    n: usize,
    triplets: Vec<(u32, u32, T)>,
}

impl<T: Real> SymBuilder<T> {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            triplets: Vec::new(),
        }
    }

    /// Accumulates `v` at `(i, j)`; the symmetric counterpart is implicit.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.n && j < self.n);
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.triplets.push((r as u32, c as u32, v));
    }

    /// Sorts, merges duplicates, and freezes the matrix.
    pub fn build(mut self) -> SparseSym<T> {
        self.triplets
            .sort_unstable_by_key(|&(r, c, _)| ((r as u64) << 32) | c as u64);
        let mut row_counts = vec![0usize; self.n];
        let mut cols: Vec<u32> = Vec::with_capacity(self.triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in self.triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists when last matches") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_counts[r as usize] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        for i in 0..self.n {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        SparseSym {
            n: self.n,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Frozen symmetric matrix (lower triangle, rows sorted by column).
#[derive(Debug, Clone)]
pub struct SparseSym<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Real> SparseSym<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored (lower-triangle) entry count.
    pub fn nnz_lower(&self) -> usize {
        self.vals.len()
    }

    /// Iterates stored entries `(i, j, v)` with `i >= j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(move |p| (i, self.cols[p] as usize, self.vals[p]))
        })
    }

    /// `y = A x` with the full symmetric matrix.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..self.n {
            let mut acc = T::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p] as usize;
                let v = self.vals[p];
                acc += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
            y[i] += acc;
        }
    }

    /// Convenience allocating form of [`SparseSym::matvec`].
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// Quadratic/bilinear form `x^T A y` without scratch storage.
    pub fn quad(&self, x: &[T], y: &[T]) -> T {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        let mut acc = T::zero();
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[p] as usize;
                let v = self.vals[p];
                if j == i {
                    acc += v * x[i] * y[i];
                } else {
                    acc += v * (x[i] * y[j] + x[j] * y[i]);
                }
            }
        }
        acc
    }

    /// Returns `self + alpha * other` (pattern union).
    pub fn add_scaled(&self, other: &SparseSym<T>, alpha: T) -> Result<SparseSym<T>> {
        if self.n != other.n {
            return Err(Error::Shape(format!(
                "cannot combine symmetric matrices of sizes {} and {}",
                self.n, other.n
            )));
        }
        let mut b = SymBuilder::new(self.n);
        for (i, j, v) in self.entries() {
            b.add(i, j, v);
        }
        for (i, j, v) in other.entries() {
            b.add(i, j, alpha * v);
        }
        Ok(b.build())
    }

    /// Returns `alpha * self`.
    pub fn scaled(&self, alpha: T) -> SparseSym<T> {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Diagonal of the matrix (zeros where absent).
    pub fn diag(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for (i, j, v) in self.entries() {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseSym<f64> {
        // [[4, 1, 0], [1, 3, -1], [0, -1, 2]]
        let mut b = SymBuilder::new(3);
        b.add(0, 0, 4.0);
        b.add(0, 1, 0.5);
        b.add(1, 0, 0.5); // duplicate of the same symmetric slot: accumulates
        b.add(1, 1, 3.0);
        b.add(2, 1, -1.0);
        b.add(2, 2, 2.0);
        b.build()
    }

    #[test]
    fn duplicates_accumulate_and_matvec_is_symmetric() {
        let a = sample();
        assert_eq!(a.nnz_lower(), 5);
        let y = a.apply(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![4.0 + 2.0, 1.0 + 6.0 - 3.0, -2.0 + 6.0]);
    }

    #[test]
    fn quad_matches_matvec() {
        let a = sample();
        let x = [1.0, -2.0, 0.5];
        let y = [0.3, 0.7, -1.1];
        let ax = a.apply(&y);
        let direct: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        assert!((a.quad(&x, &y) - direct).abs() < 1e-14);
    }

    #[test]
    fn add_scaled_unions_patterns() {
        let a = sample();
        let mut b = SymBuilder::new(3);
        b.add(0, 2, 1.0);
        let b = b.build();
        let c = a.add_scaled(&b, 2.0).unwrap();
        let y = c.apply(&[0.0, 0.0, 1.0]);
        assert_eq!(y[0], 2.0);
        let mismatched = SymBuilder::<f64>::new(2).build();
        assert!(a.add_scaled(&mismatched, 1.0).is_err());
    }
}
