//! Dense symmetric eigensolver: Householder tridiagonalization followed by
//! implicit-shift QL iteration.
//!
//! Serves two roles: the full-accuracy fallback for small generalized
//! eigenproblems, and the Rayleigh-Ritz step inside the Lanczos solver
//! (via [`sym_tridiag_eigen`]).

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct DenseMat<T> {
    n: usize,
    a: Vec<T>,
}

impl<T: Real> DenseMat<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            a: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order; when `want_vectors` is set, the
/// second component holds orthonormal eigenvectors as matching columns.
pub fn sym_eigen<T: Real>(
    mat: &DenseMat<T>,
    want_vectors: bool,
) -> Result<(Vec<T>, Option<DenseMat<T>>)> {
    let n = mat.n();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| DenseMat::zeros(0))));
    }
    let mut z = mat.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tred2(&mut z, &mut d, &mut e);
    // Shift the subdiagonal down for the QL sweep.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    tql2(&mut d, &mut e, Some(&mut z))?;
    sort_ascending(&mut d, want_vectors.then_some(&mut z));
    Ok((d, want_vectors.then_some(z)))
}

/// Eigen-decomposition of a symmetric tridiagonal matrix given its diagonal
/// `diag` and subdiagonal `sub` (length `n - 1`).
pub fn sym_tridiag_eigen<T: Real>(
    diag: &[T],
    sub: &[T],
    want_vectors: bool,
) -> Result<(Vec<T>, Option<DenseMat<T>>)> {
    let n = diag.len();
    assert!(n == 0 || sub.len() == n - 1, "subdiagonal length mismatch");
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| DenseMat::zeros(0))));
    }
    let mut d = diag.to_vec();
    let mut e = vec![T::zero(); n];
    e[..n - 1].copy_from_slice(sub);
    let mut z = want_vectors.then(|| DenseMat::identity(n));
    tql2(&mut d, &mut e, z.as_mut())?;
    sort_ascending(&mut d, z.as_mut());
    Ok((d, z))
}

fn sort_ascending<T: Real>(d: &mut [T], z: Option<&mut DenseMat<T>>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("eigenvalue is not NaN"));
    let sorted: Vec<T> = order.iter().map(|&k| d[k]).collect();
    d.copy_from_slice(&sorted);
    if let Some(z) = z {
        let old = z.clone();
        for (new_col, &old_col) in order.iter().enumerate() {
            for i in 0..n {
                z.set(i, new_col, old.get(i, old_col));
            }
        }
    }
}

/// Householder reduction to tridiagonal form with transform accumulation.
///
/// On exit `d` holds the diagonal, `e[1..]` the subdiagonal, and `z` the
/// orthogonal matrix carrying the original basis to the tridiagonal one.
fn tred2<T: Real>(z: &mut DenseMat<T>, d: &mut [T], e: &mut [T]) {
    let n = z.n();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = T::zero();
        if l > 0 {
            let scale: T = (0..=l).map(|k| z.get(i, k).abs()).sum();
            if scale == T::zero() {
                e[i] = z.get(i, l);
            } else {
                for k in 0..=l {
                    let v = z.get(i, k) / scale;
                    z.set(i, k, v);
                    h += v * v;
                }
                let f = z.get(i, l);
                let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z.set(i, l, f - g);
                let mut fsum = T::zero();
                for j in 0..=l {
                    z.set(j, i, z.get(i, j) / h);
                    let mut g = T::zero();
                    for k in 0..=j {
                        g += z.get(j, k) * z.get(i, k);
                    }
                    for k in (j + 1)..=l {
                        g += z.get(k, j) * z.get(i, k);
                    }
                    e[j] = g / h;
                    fsum += e[j] * z.get(i, j);
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = z.get(i, j);
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        let v = z.get(j, k) - (f * e[k] + g * z.get(i, k));
                        z.set(j, k, v);
                    }
                }
            }
        } else {
            e[i] = z.get(i, l);
        }
        d[i] = h;
    }
    d[0] = T::zero();
    e[0] = T::zero();
    for i in 0..n {
        if d[i] != T::zero() {
            for j in 0..i {
                let mut g = T::zero();
                for k in 0..i {
                    g += z.get(i, k) * z.get(k, j);
                }
                for k in 0..i {
                    let v = z.get(k, j) - g * z.get(k, i);
                    z.set(k, j, v);
                }
            }
        }
        d[i] = z.get(i, i);
        z.set(i, i, T::one());
        for j in 0..i {
            z.set(j, i, T::zero());
            z.set(i, j, T::zero());
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix.
///
/// `d` is the diagonal, `e` the subdiagonal stored in `e[0..n-1]` with
/// `e[n-1]` scratch. Accumulates rotations into `z` columns when present.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut DenseMat<T>>) -> Result<()> {
    let n = d.len();
    let tiny = T::min_positive_value();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd + tiny {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Numerics(format!(
                    "tridiagonal QL failed to converge at row {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (e[l] + e[l]);
            let mut r = g.hypot(T::one());
            // Shift uses the root closer to d[l]: g + sign(r, g).
            let sign_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = T::one();
            let mut c = T::one();
            let mut p = T::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    // Deflate without completing the sweep.
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + real::<T>(2.0) * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        f = z.get(k, i + 1);
                        z.set(k, i + 1, s * z.get(k, i) + c * f);
                        z.set(k, i, c * z.get(k, i) - s * f);
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
