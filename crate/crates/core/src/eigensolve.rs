//! Generalized symmetric eigensolver for pencils `K u = lambda M u` with
//! positive semidefinite `K` and `M`.
//!
//! Both solvers work on the bounded operator `C = L^{-1} M L^{-T}` where
//! `K + M = L L^T`: its eigenvalues are `1/(1 + lambda)`, so the smallest
//! pencil eigenvalues are the largest, well-separated end of `C`'s spectrum,
//! and a singular `M` needs no special casing. Lanczos with full
//! reorthogonalization and locking restarts recovers multiple copies of
//! degenerate eigenvalues one restart at a time; a dense path serves small
//! problems and doubles as the oracle for the iterative one.

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen, sym_tridiag_eigen, unit_vector, DenseMat, SkylineChol, SparseSym};
use crate::scalar::{real, Real};

/// Deterministic Lanczos start vectors.
const LANCZOS_SEED: u64 = 0x5EED;
/// Restart budget; each restart locks at least one pair or counts as
/// stagnation.
const MAX_RESTARTS: usize = 500;
/// Consecutive fruitless restarts tolerated before giving up.
const MAX_STAGNANT: usize = 12;
/// Ritz values below this are treated as the semidefinite tail of `C`, not as
/// candidate pencil eigenvalues.
const THETA_FLOOR: f64 = 1e-9;

/// Solved eigenpairs of a symmetric pencil, ascending.
#[derive(Debug, Clone)]
pub struct EigenSet<T> {
    /// Eigenvalues, ascending.
    pub values: Vec<T>,
    /// M-orthonormal eigenvectors matching `values`.
    pub vectors: Vec<Vec<T>>,
    /// True residuals `|K u - lambda M u| / |u|` per pair.
    pub residuals: Vec<T>,
    /// Pairs whose neighbor gap is below `1e-8 * max(1, |lambda|)`; such
    /// values are reliable but the individual vectors span the cluster only
    /// up to rotation.
    pub near_degenerate: Vec<bool>,
}

/// Factorized resolvent `(K + M)^{-1}`, applied as the compact operator
/// `f -> (K + M)^{-1} M f` and reused across solves.
pub struct Resolvent<T> {
    chol: SkylineChol<T>,
    m: SparseSym<T>,
}

impl<T: Real> Resolvent<T> {
    pub fn new(k: &SparseSym<T>, m: &SparseSym<T>) -> Result<Self> {
        if k.n() != m.n() {
            return Err(Error::Shape(format!(
                "pencil dimensions differ: {} vs {}",
                k.n(),
                m.n()
            )));
        }
        let shifted = k.add_scaled(m, T::one())?;
        let chol = SkylineChol::factor(&shifted)?;
        Ok(Self { chol, m: m.clone() })
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    /// `(K + M)^{-1} (M f)`: one application of the compact operator whose
    /// eigenvalues are `1/(1 + lambda)`.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        self.chol.solve(&self.m.apply(f))
    }

    /// `(K + M)^{-1} b` for an arbitrary right side.
    pub fn solve_shifted(&self, b: &[T]) -> Vec<T> {
        self.chol.solve(b)
    }

    /// Symmetrized operator `C y = L^{-1} M L^{-T} y` in factor ordering; the
    /// Lanczos workhorse.
    fn apply_sym(&self, y: &[T]) -> Vec<T> {
        let n = self.n();
        let mut zf = y.to_vec();
        self.chol.solve_lt_in_place(&mut zf);
        let mut z = vec![T::zero(); n];
        self.chol.from_factor_order(&zf, &mut z);
        let w = self.m.apply(&z);
        let mut wf = vec![T::zero(); n];
        self.chol.to_factor_order(&w, &mut wf);
        self.chol.solve_l_in_place(&mut wf);
        wf
    }

    /// Maps a unit eigenvector `y` of `C` (factor order) with eigenvalue
    /// `theta` to the M-normalized pencil eigenvector in natural order.
    fn eigenvector_from_sym(&self, y: &[T], theta: T) -> Vec<T> {
        let n = self.n();
        let mut uf = y.to_vec();
        self.chol.solve_lt_in_place(&mut uf);
        let mut u = vec![T::zero(); n];
        self.chol.from_factor_order(&uf, &mut u);
        let scale = theta.sqrt().recip();
        for v in &mut u {
            *v *= scale;
        }
        u
    }
}

/// The `k` smallest eigenpairs of `K u = lambda M u`.
///
/// Dispatches to the dense solver up to dimension 2000 and to shift-invert
/// Lanczos beyond.
pub fn smallest_eigenpairs<T: Real>(
    k_mat: &SparseSym<T>,
    m_mat: &SparseSym<T>,
    n_pairs: usize,
    tol: T,
) -> Result<EigenSet<T>> {
    if k_mat.n() <= 2000 {
        solve_dense(k_mat, m_mat, n_pairs)
    } else {
        solve_lanczos(k_mat, m_mat, n_pairs, tol)
    }
}

fn check_request<T: Real>(k: &SparseSym<T>, m: &SparseSym<T>, n_pairs: usize) -> Result<()> {
    if k.n() != m.n() {
        return Err(Error::Shape(format!(
            "pencil dimensions differ: {} vs {}",
            k.n(),
            m.n()
        )));
    }
    if n_pairs == 0 || n_pairs > k.n() {
        return Err(Error::Config(format!(
            "requested {n_pairs} pairs from a dimension-{} pencil",
            k.n()
        )));
    }
    Ok(())
}

/// Dense path: materializes `C` column by column and calls the dense
/// symmetric eigensolver. Exact up to roundoff; also the oracle for Lanczos.
pub fn solve_dense<T: Real>(
    k_mat: &SparseSym<T>,
    m_mat: &SparseSym<T>,
    n_pairs: usize,
) -> Result<EigenSet<T>> {
    check_request(k_mat, m_mat, n_pairs)?;
    let res = Resolvent::new(k_mat, m_mat)?;
    let n = res.n();
    let mut c = DenseMat::zeros(n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = res.apply_sym(&e);
        e[j] = T::zero();
        for i in 0..n {
            c.set(i, j, col[i]);
        }
    }
    let (theta, z) = sym_eigen(&c, true)?;
    let z = z.expect("eigenvectors requested");
    let floor = real::<T>(THETA_FLOOR);
    let mut pairs = Vec::with_capacity(n_pairs);
    for idx in (0..n).rev().take(n_pairs) {
        let th = theta[idx];
        if th <= floor {
            return Err(Error::Numerics(format!(
                "pencil has fewer than {n_pairs} finite eigenvalues"
            )));
        }
        pairs.push((th, z.col(idx)));
    }
    finish(k_mat, m_mat, &res, pairs)
}

/// Iterative path: shift-invert Lanczos with full reorthogonalization.
///
/// Each restart runs a fresh Krylov sweep orthogonal to everything already
/// locked, so clustered and exactly degenerate eigenvalues are picked up one
/// copy per restart.
pub fn solve_lanczos<T: Real>(
    k_mat: &SparseSym<T>,
    m_mat: &SparseSym<T>,
    n_pairs: usize,
    tol: T,
) -> Result<EigenSet<T>> {
    check_request(k_mat, m_mat, n_pairs)?;
    let res = Resolvent::new(k_mat, m_mat)?;
    let n = res.n();
    let floor = real::<T>(THETA_FLOOR);
    let mut m_steps = (3 * n_pairs + 40).max(60).min(n);

    let mut locked_theta: Vec<T> = Vec::new();
    let mut locked_y: Vec<Vec<T>> = Vec::new();
    let mut stagnant = 0usize;

    for restart in 0..MAX_RESTARTS {
        if locked_theta.len() >= n_pairs {
            break;
        }
        // Fresh start vector, deflated against the locked invariant subspace.
        let mut v = unit_vector::<T>(n, LANCZOS_SEED.wrapping_add(restart as u64));
        orthogonalize(&mut v, &locked_y);
        if normalize(&mut v) < real::<T>(1e-8) {
            continue;
        }

        let mut basis: Vec<Vec<T>> = vec![v];
        let mut alpha: Vec<T> = Vec::new();
        let mut beta: Vec<T> = Vec::new();
        let mut final_beta = T::zero();
        for step in 0..m_steps {
            let mut w = res.apply_sym(&basis[step]);
            let a: T = dot(&w, &basis[step]);
            alpha.push(a);
            axpy(&mut w, -a, &basis[step]);
            if step > 0 {
                let b = beta[step - 1];
                axpy(&mut w, -b, &basis[step - 1]);
            }
            // Full reorthogonalization against the basis and the locked set;
            // two passes make the basis orthogonal to working precision.
            for _ in 0..2 {
                orthogonalize(&mut w, &basis);
                orthogonalize(&mut w, &locked_y);
            }
            let b = normalize(&mut w);
            final_beta = b;
            if b < real::<T>(1e-13) {
                // Krylov space exhausted: Ritz data below is exact.
                break;
            }
            if step + 1 < m_steps {
                beta.push(b);
                basis.push(w);
            }
        }

        let m = alpha.len();
        let (theta, z) = sym_tridiag_eigen(&alpha, &beta[..m - 1], true)?;
        let z = z.expect("eigenvectors requested");

        let mut locked_this_round = 0usize;
        for idx in (0..m).rev() {
            if locked_theta.len() >= n_pairs {
                break;
            }
            let th = theta[idx];
            if th <= floor {
                break;
            }
            let est = final_beta * z.get(m - 1, idx).abs();
            if est > tol * th {
                // An unconverged pair blocks everything below it: a converged
                // Ritz value further down may belong outside the wanted set.
                break;
            }
            // Assemble the Ritz vector and insure it against drift into the
            // locked subspace.
            let mut y = vec![T::zero(); n];
            for (k, bk) in basis.iter().enumerate() {
                axpy(&mut y, z.get(k, idx), bk);
            }
            orthogonalize(&mut y, &locked_y);
            if normalize(&mut y) < real::<T>(0.5) {
                continue;
            }
            locked_theta.push(th);
            locked_y.push(y);
            locked_this_round += 1;
        }

        if locked_this_round == 0 {
            stagnant += 1;
            m_steps = (m_steps * 3 / 2).min(n);
            if stagnant > MAX_STAGNANT {
                return Err(Error::Numerics(format!(
                    "eigensolver stalled with {} of {n_pairs} pairs converged",
                    locked_theta.len()
                )));
            }
        } else {
            stagnant = 0;
        }
    }

    if locked_theta.len() < n_pairs {
        return Err(Error::Numerics(format!(
            "eigensolver restart budget exhausted with {} of {n_pairs} pairs",
            locked_theta.len()
        )));
    }

    // Largest theta = smallest lambda first.
    let mut order: Vec<usize> = (0..locked_theta.len()).collect();
    order.sort_by(|&i, &j| {
        locked_theta[j]
            .partial_cmp(&locked_theta[i])
            .expect("theta is not NaN")
    });
    let pairs: Vec<(T, Vec<T>)> = order
        .into_iter()
        .map(|i| (locked_theta[i], std::mem::take(&mut locked_y[i])))
        .collect();
    finish(k_mat, m_mat, &res, pairs)
}

/// Common tail: map symmetrized eigenpairs `(theta, y)` (theta descending)
/// back to the pencil, compute true residuals, flag near-degeneracies.
fn finish<T: Real>(
    k_mat: &SparseSym<T>,
    m_mat: &SparseSym<T>,
    res: &Resolvent<T>,
    pairs: Vec<(T, Vec<T>)>,
) -> Result<EigenSet<T>> {
    let mut values = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    for (theta, y) in pairs {
        let lambda = theta.recip() - T::one();
        let u = res.eigenvector_from_sym(&y, theta);
        let ku = k_mat.apply(&u);
        let mu = m_mat.apply(&u);
        let mut r2 = T::zero();
        let mut u2 = T::zero();
        for i in 0..u.len() {
            let ri = ku[i] - lambda * mu[i];
            r2 += ri * ri;
            u2 += u[i] * u[i];
        }
        values.push(lambda);
        vectors.push(u);
        residuals.push((r2 / u2).sqrt());
    }
    let n = values.len();
    let mut near_degenerate = vec![false; n];
    for i in 1..n {
        let scale = T::one().max(values[i].abs());
        if (values[i] - values[i - 1]).abs() < real::<T>(1e-8) * scale {
            near_degenerate[i] = true;
            near_degenerate[i - 1] = true;
        }
    }
    Ok(EigenSet {
        values,
        vectors,
        residuals,
        near_degenerate,
    })
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize<T: Real>(w: &mut [T], basis: &[Vec<T>]) {
    for q in basis {
        let c = dot(w, q);
        axpy(w, -c, q);
    }
}

fn normalize<T: Real>(w: &mut [T]) -> T {
    let nrm = dot(w, w).sqrt();
    if nrm > T::zero() {
        let inv = nrm.recip();
        for v in w.iter_mut() {
            *v *= inv;
        }
    }
    nrm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_boundary_mass, assemble_plain_mass, assemble_stiffness, eps_inner};
    use crate::geometry::{BoundaryCurve, CurveKind};
    use crate::linalg::{symmetric_unit, SymBuilder};
    use crate::mesh::mesh_star_domain;

    fn two_by_two() -> (SparseSym<f64>, SparseSym<f64>) {
        let mut k = SymBuilder::<f64>::new(2);
        k.add(0, 0, 2.0);
        k.add(1, 0, -1.0);
        k.add(1, 1, 2.0);
        let mut m = SymBuilder::new(2);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        (k.build(), m.build())
    }

    #[test]
    fn small_pencil_is_exact() {
        let (k, m) = two_by_two();
        let set = smallest_eigenpairs(&k, &m, 2, 1e-12).unwrap();
        assert!((set.values[0] - 1.0).abs() < 1e-12);
        assert!((set.values[1] - 3.0).abs() < 1e-12);
        for r in &set.residuals {
            assert!(*r < 1e-10);
        }
    }

    #[test]
    fn repeated_eigenvalues_are_fully_recovered() {
        // diag(1,1,2) vs identity: multiplicity 2 must yield two orthonormal
        // copies, through the restart-deflation path as well.
        let mut k = SymBuilder::<f64>::new(3);
        k.add(0, 0, 1.0);
        k.add(1, 1, 1.0);
        k.add(2, 2, 2.0);
        let mut m = SymBuilder::new(3);
        for i in 0..3 {
            m.add(i, i, 1.0);
        }
        let (k, m) = (k.build(), m.build());
        for set in [
            solve_dense(&k, &m, 3).unwrap(),
            solve_lanczos(&k, &m, 3, 1e-12).unwrap(),
        ] {
            assert!((set.values[0] - 1.0).abs() < 1e-11);
            assert!((set.values[1] - 1.0).abs() < 1e-11);
            assert!((set.values[2] - 2.0).abs() < 1e-11);
            assert!(set.near_degenerate[0] && set.near_degenerate[1]);
            assert!(!set.near_degenerate[2]);
            let cross = dot(&set.vectors[0], &set.vectors[1]);
            assert!(cross.abs() < 1e-8);
        }
    }

    /// Random diagonally dominant SPD pencil; the two solver paths must
    /// agree to tight tolerance.
    #[test]
    fn lanczos_matches_dense_oracle_on_random_pencil() {
        let n = 300;
        let mut state = 0xD15C_u64;
        let mut kb = SymBuilder::new(n);
        let mut mb = SymBuilder::new(n);
        for i in 0..n {
            kb.add(i, i, 6.0 + symmetric_unit::<f64>(&mut state));
            mb.add(i, i, 2.0 + symmetric_unit::<f64>(&mut state));
            if i + 1 < n {
                kb.add(i + 1, i, symmetric_unit::<f64>(&mut state));
                mb.add(i + 1, i, 0.3 * symmetric_unit::<f64>(&mut state));
            }
            if i + 7 < n {
                kb.add(i + 7, i, 0.5 * symmetric_unit::<f64>(&mut state));
            }
        }
        let (k, m) = (kb.build(), mb.build());
        let dense = solve_dense(&k, &m, 6).unwrap();
        let lan = solve_lanczos(&k, &m, 6, 1e-12).unwrap();
        for (a, b) in dense.values.iter().zip(&lan.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        // M-orthonormality of the iterative vectors.
        for i in 0..6 {
            for j in 0..=i {
                let mij = m.quad(&lan.vectors[i], &lan.vectors[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((mij - expect).abs() < 1e-8, "M[{i}{j}] = {mij}");
            }
        }
    }

    #[test]
    fn boundary_mass_pencil_has_constant_ground_state() {
        let c = BoundaryCurve::<f64>::new(CurveKind::Disk { r: 1.0 }).unwrap();
        let mesh = mesh_star_domain(&c, 0.1, 24, 1, 5).unwrap();
        let k = assemble_stiffness(&mesh).unwrap();
        let b = assemble_boundary_mass(&mesh).unwrap();
        let set = smallest_eigenpairs(&k, &b, 3, 1e-10).unwrap();
        assert!(set.values[0].abs() < 1e-9, "ground state {}", set.values[0]);
        let v = &set.vectors[0];
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        for x in v {
            assert!((x - mean).abs() < 1e-6 * mean.abs().max(1.0));
        }
        // The pencil values must ascend.
        for w in set.values.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn resolvent_contract() {
        let c = BoundaryCurve::<f64>::new(CurveKind::Disk { r: 1.0 }).unwrap();
        let mesh = mesh_star_domain(&c, 0.1, 16, 1, 4).unwrap();
        let n = mesh.n_nodes();
        let k = assemble_stiffness(&mesh).unwrap();
        let m = assemble_plain_mass(&mesh).unwrap();
        let res = Resolvent::new(&k, &m).unwrap();

        // Constants are a fixed point.
        let ones = vec![1.0; n];
        let u = res.apply(&ones);
        for v in &u {
            assert!((v - 1.0).abs() < 1e-10);
        }

        // Spectral mapping on a computed eigenpair.
        let set = smallest_eigenpairs(&k, &m, 3, 1e-12).unwrap();
        let lam = set.values[2];
        let vec = &set.vectors[2];
        let mapped = res.apply(vec);
        for i in 0..n {
            assert!((mapped[i] - vec[i] / (1.0 + lam)).abs() < 1e-8);
        }

        // Direct residual of the defining system on a random right side.
        let mut state = 3u64;
        let f: Vec<f64> = (0..n).map(|_| symmetric_unit(&mut state)).collect();
        let u = res.apply(&f);
        let lhs = k.apply(&u).iter().zip(m.apply(&u)).map(|(a, b)| a + b).collect::<Vec<_>>();
        let rhs = m.apply(&f);
        let err = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10, "system residual {err}");

        // Self-adjointness and positivity in the energy inner product.
        for _ in 0..5 {
            let f: Vec<f64> = (0..n).map(|_| symmetric_unit(&mut state)).collect();
            let g: Vec<f64> = (0..n).map(|_| symmetric_unit(&mut state)).collect();
            let af = res.apply(&f);
            let ag = res.apply(&g);
            let left = eps_inner(&af, &g, &k, &m).unwrap();
            let right = eps_inner(&f, &ag, &k, &m).unwrap();
            assert!((left - right).abs() < 1e-9, "{left} vs {right}");
            let pos = eps_inner(&af, &f, &k, &m).unwrap();
            assert!(pos >= -1e-12);
        }
    }

    #[test]
    fn request_validation() {
        let (k, m) = two_by_two();
        assert!(matches!(
            smallest_eigenpairs(&k, &m, 0, 1e-10),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            smallest_eigenpairs(&k, &m, 3, 1e-10),
            Err(Error::Config(_))
        ));
    }
}
