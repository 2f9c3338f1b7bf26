//! The limit problem: harmonic functions whose normal derivative on the
//! boundary is proportional to the trace, `K u = mu (M/|bnd|) B u`.
//!
//! Mass `M` enters only through the pencil scale, so eigenvalues scale as
//! `1/M` exactly. The boundary length in the pencil is the mesh polygon's,
//! not the smooth curve's: the discrete problem is then exactly the small-eps
//! limit of the perturbed-density problem on the same mesh, which keeps
//! mesh-level offsets out of eps-derivative estimates.

use crate::eigensolve::smallest_eigenpairs;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_boundary_weighted_mass, assemble_plain_mass,
    assemble_stiffness,
};
use crate::geometry::BoundaryCurve;
use crate::mesh::TriMesh;
use crate::scalar::{real, Real};

/// Relative neighbor gap below which an eigenvalue is flagged as part of a
/// cluster.
const GAP_TOL: f64 = 1e-6;
/// Pencil solve tolerance.
const SOLVE_TOL: f64 = 1e-10;

/// One boundary-spectrum eigenpair with unit boundary norm.
#[derive(Debug, Clone)]
pub struct SteklovPair<T> {
    pub mu: T,
    pub u: Vec<T>,
    /// Recomputed boundary integral of `u^2`; 1 up to roundoff.
    pub boundary_norm: T,
    /// False when a neighboring eigenvalue sits within `1e-6` relative.
    pub simple_flag: bool,
}

/// The two eigenfunction integrals consumed by the first-order eigenvalue
/// correction.
#[derive(Debug, Clone, Copy)]
pub struct SteklovIntegrals<T> {
    /// Interior integral of `u^2`.
    pub vol_int: T,
    /// Boundary integral of `u^2 kappa`.
    pub bnd_curv_int: T,
}

/// Solves for the `k` smallest eigenpairs, `mu_0 = 0` first, each rescaled to
/// unit boundary norm and sign-fixed.
pub fn solve_steklov<T: Real>(
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    mass_m: T,
    k: usize,
) -> Result<Vec<SteklovPair<T>>> {
    let _ = curve;
    if mass_m <= T::zero() {
        return Err(Error::Config("mass must be positive".into()));
    }
    let n_bnd = mesh.boundary_edges.len();
    if k > n_bnd {
        return Err(Error::Config(format!(
            "requested {k} pairs but the boundary pencil has rank {n_bnd}"
        )));
    }
    let stiff = assemble_stiffness(mesh)?;
    let bnd = assemble_boundary_mass(mesh)?;
    let p_poly = mesh.boundary_len();
    let pencil_m = bnd.scaled(mass_m / p_poly);
    // One extra pair gives the topmost requested value its upper gap.
    let want = (k + 1).min(n_bnd);
    let set = smallest_eigenpairs(&stiff, &pencil_m, want, real::<T>(SOLVE_TOL))?;

    let gap_tol = real::<T>(GAP_TOL);
    let rescale = (mass_m / p_poly).sqrt();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mu = set.values[i];
        let mut u: Vec<T> = set.vectors[i].iter().map(|&x| x * rescale).collect();
        fix_sign(mesh, &mut u);
        let boundary_norm = bnd.quad(&u, &u);
        let mut rel_gap = T::infinity();
        if i > 0 {
            rel_gap = rel_gap.min((set.values[i] - set.values[i - 1]).abs());
        }
        if i + 1 < set.values.len() {
            rel_gap = rel_gap.min((set.values[i + 1] - set.values[i]).abs());
        }
        let simple_flag = rel_gap / T::one().max(mu.abs()) > gap_tol;
        out.push(SteklovPair {
            mu,
            u,
            boundary_norm,
            simple_flag,
        });
    }
    Ok(out)
}

/// Flips `u` so that the first boundary node (in arc order) carrying at least
/// a tenth of the peak trace amplitude is positive. Keeps one representative
/// stable across mesh levels and eps.
pub(crate) fn fix_sign<T: Real>(mesh: &TriMesh<T>, u: &mut [T]) {
    let tenth = real::<T>(0.1);
    let mut peak = T::zero();
    for e in &mesh.boundary_edges {
        peak = peak.max(u[e[0] as usize].abs());
    }
    for e in &mesh.boundary_edges {
        let v = u[e[0] as usize];
        if v.abs() > tenth * peak {
            if v < T::zero() {
                for x in u.iter_mut() {
                    *x = -*x;
                }
            }
            return;
        }
    }
}

/// Interior and curvature-weighted boundary integrals of the squared
/// eigenfunction.
pub fn steklov_integrals<T: Real>(
    pair: &SteklovPair<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
) -> Result<SteklovIntegrals<T>> {
    let mass = assemble_plain_mass(mesh)?;
    let vol_int = mass.quad(&pair.u, &pair.u);
    let curv = assemble_boundary_weighted_mass(mesh, curve.len(), |s| curve.curvature(s))?;
    let bnd_curv_int = curv.quad(&pair.u, &pair.u);
    Ok(SteklovIntegrals {
        vol_int,
        bnd_curv_int,
    })
}

/// Picks the even member (cosine class about the x-axis) of a two-dimensional
/// disk eigenspace: the combination whose boundary sine component vanishes.
///
/// Disk meshes only; general domains have simple eigenvalues generically and
/// never call this.
pub fn disk_even_representative<T: Real>(
    p1: &SteklovPair<T>,
    p2: &SteklovPair<T>,
    mesh: &TriMesh<T>,
    j: usize,
) -> Result<SteklovPair<T>> {
    if p1.u.len() != p2.u.len() || p1.u.len() != mesh.n_nodes() {
        return Err(Error::Shape("eigenvector/mesh size mismatch".into()));
    }
    let bnd = assemble_boundary_mass(mesh)?;
    let jt = real::<T>(j as f64);
    // Nodal interpolant of sin(j theta) on the boundary, zero inside.
    let mut g = vec![T::zero(); mesh.n_nodes()];
    for e in &mesh.boundary_edges {
        let p = mesh.nodes[e[0] as usize];
        g[e[0] as usize] = (jt * p[1].atan2(p[0])).sin();
    }
    let s1 = bnd.quad(&p1.u, &g);
    let s2 = bnd.quad(&p2.u, &g);
    let scale = s1.hypot(s2);
    if scale < real::<T>(1e-12) {
        return Err(Error::Degeneracy("eigenspace projection collapsed".into()));
    }
    let (c1, c2) = (s2 / scale, -s1 / scale);
    let mut u: Vec<T> = p1
        .u
        .iter()
        .zip(&p2.u)
        .map(|(&a, &b)| c1 * a + c2 * b)
        .collect();
    let nrm = bnd.quad(&u, &u);
    if nrm < real::<T>(1e-12) {
        return Err(Error::Degeneracy("eigenspace projection collapsed".into()));
    }
    let inv = nrm.sqrt().recip();
    for x in &mut u {
        *x *= inv;
    }
    fix_sign(mesh, &mut u);
    let boundary_norm = bnd.quad(&u, &u);
    Ok(SteklovPair {
        mu: (p1.mu + p2.mu) * real::<T>(0.5),
        u,
        boundary_norm,
        simple_flag: false,
    })
}
