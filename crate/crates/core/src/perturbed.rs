//! The eps-family of eigenvalue problems: a density that is large in the
//! width-eps boundary strip and small (equal to eps) in the bulk, with total
//! mass held fixed, `K u = lambda M_rho u`.

use crate::eigensolve::{smallest_eigenpairs, EigenSet};
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness};
use crate::geometry::BoundaryCurve;
use crate::mesh::{check_layer_conforming, classify_strip, mesh_star_domain, TriMesh};
use crate::scalar::{real, Real};
use crate::steklov::{fix_sign, solve_steklov};

const SOLVE_TOL: f64 = 1e-10;

/// The two-level density: `strip_value` on the strip, `eps` in the bulk.
///
/// Values here come from the smooth curve's areas and feed the asymptotic
/// formulas; matrix assembly recomputes the strip level from polygon areas so
/// the discrete total mass is exact on the mesh actually used.
#[derive(Debug, Clone, Copy)]
pub struct DensitySpec<T> {
    pub mass_m: T,
    pub eps: T,
    /// `(M - eps * |bulk|) / |strip|`.
    pub strip_value: T,
    /// Bulk density, equal to eps.
    pub bulk_value: T,
    /// `eps * strip_value - eps^2`; the eigenvalue-scale density parameter.
    pub rho_tilde: T,
}

/// Builds the density for a curve, mass and layer width.
pub fn make_density<T: Real>(
    curve: &BoundaryCurve<T>,
    mass_m: T,
    eps: T,
) -> Result<DensitySpec<T>> {
    if mass_m <= T::zero() {
        return Err(Error::Config("mass must be positive".into()));
    }
    curve.check_eps(eps)?;
    let strip = curve.strip_area(eps)?;
    let bulk = curve.area() - strip;
    let strip_value = (mass_m - eps * bulk) / strip;
    let rho_tilde = eps * strip_value - eps * eps;
    if rho_tilde <= T::zero() {
        return Err(Error::Config(format!(
            "density degenerates: rho_tilde <= 0 at eps = {eps:?} (layer too wide for this mass)"
        )));
    }
    Ok(DensitySpec {
        mass_m,
        eps,
        strip_value,
        bulk_value: eps,
        rho_tilde,
    })
}

/// Per-triangle density weights, with the strip level recomputed from the
/// mesh's own areas: the discrete total mass `u^T M_rho u` at `u = 1` is then
/// `mass_m` to roundoff, and the eps -> 0 limit of the discrete pencil is the
/// discrete boundary-spectrum pencil on the same mesh.
pub fn density_weights<T: Real>(mesh: &TriMesh<T>, dens: &DensitySpec<T>) -> Result<Vec<T>> {
    let strip = mesh.strip_area();
    if strip <= T::zero() {
        return Err(Error::Config("mesh has no strip triangles".into()));
    }
    let bulk = mesh.area() - strip;
    let strip_w = (dens.mass_m - dens.eps * bulk) / strip;
    if strip_w <= T::zero() {
        return Err(Error::Config("nonpositive strip density on this mesh".into()));
    }
    Ok(mesh
        .tri_in_strip
        .iter()
        .map(|&s| if s { strip_w } else { dens.eps })
        .collect())
}

/// Checks that the mesh's strip marking describes the depth-`eps` collar: no
/// element straddles the interface, and every triangle whose centroid sits
/// clear of it carries the geometric label.
///
/// A conforming mesh's interface is a polyline whose chords dip below the
/// smooth offset curve by up to `kappa * L^2 / 8` (L the local edge length),
/// so centroids within `kappa * L^2` of depth `eps` may land on either side;
/// those triangles are legitimately labeled by construction, not by depth.
fn check_strip_consistency<T: Real>(
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    eps: T,
) -> Result<()> {
    check_layer_conforming(mesh, curve, eps)
        .map_err(|e| Error::Config(format!("mesh does not conform to eps = {eps:?}: {e}")))?;
    let mut scratch = mesh.clone();
    classify_strip(&mut scratch, curve, eps)?;
    let third = real::<T>(3.0);
    for (t, (&built, &geo)) in mesh
        .tri_in_strip
        .iter()
        .zip(scratch.tri_in_strip.iter())
        .enumerate()
    {
        if built == geo {
            continue;
        }
        let [a, b, c] = mesh.tris[t].map(|v| mesh.nodes[v as usize]);
        let centroid = [(a[0] + b[0] + c[0]) / third, (a[1] + b[1] + c[1]) / third];
        let edge2 = |p: [T; 2], q: [T; 2]| {
            let d = [p[0] - q[0], p[1] - q[1]];
            d[0] * d[0] + d[1] * d[1]
        };
        let l2 = edge2(a, b).max(edge2(b, c)).max(edge2(c, a));
        let band = (curve.sup_curvature() * l2).max(l2.sqrt() * real(1e-6));
        let near_interface = match curve.depth_within_reach(centroid)? {
            Some(depth) => (depth - eps).abs() <= band,
            None => false,
        };
        if !near_interface {
            return Err(Error::Config(
                "strip marking disagrees with geometric classification".into(),
            ));
        }
    }
    Ok(())
}

/// The `k` smallest eigenpairs of the density problem, ascending from
/// `lambda_0 = 0`, eigenvectors rescaled to `u^T M_rho u = M / |bnd|` and
/// sign-fixed.
pub fn solve_perturbed<T: Real>(
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    dens: &DensitySpec<T>,
    k: usize,
) -> Result<EigenSet<T>> {
    check_strip_consistency(mesh, curve, dens.eps)?;
    let stiff = assemble_stiffness(mesh)?;
    let weights = density_weights(mesh, dens)?;
    let m_rho = assemble_mass(mesh, &weights)?;
    let mut set = smallest_eigenpairs(&stiff, &m_rho, k, real::<T>(SOLVE_TOL))?;
    let rescale = (dens.mass_m / mesh.boundary_len()).sqrt();
    for v in &mut set.vectors {
        for x in v.iter_mut() {
            *x *= rescale;
        }
        fix_sign(mesh, v);
    }
    Ok(set)
}

/// Mesh resolution parameters shared by every eps in a curve study.
#[derive(Debug, Clone, Copy)]
pub struct MeshParams {
    pub n_t: usize,
    pub n_layer: usize,
    pub n_interior: usize,
}

/// One tracked sample of an eigenvalue branch.
#[derive(Debug, Clone, Copy)]
pub struct CurvePoint<T> {
    pub eps: T,
    pub lambda: T,
    /// Mass-weighted overlap with the previous tracked eigenvector.
    pub overlap: T,
}

/// A branch `lambda_j(eps)` over a descending eps list, with its limit value.
#[derive(Debug, Clone)]
pub struct EigenCurve<T> {
    pub j: usize,
    /// Discrete limit eigenvalue on the same tangential resolution.
    pub mu: T,
    pub points: Vec<CurvePoint<T>>,
}

/// Follows the branch starting at the limit eigenvalue `mu_j` through the
/// eps list, building one layer-conforming mesh per eps.
///
/// All meshes share one topology (resolution is fixed; only collar depths
/// move), so eigenvectors from consecutive eps live on the same node set and
/// the mass-weighted overlap between them is well defined.
pub fn eigenvalue_curve<T: Real>(
    curve: &BoundaryCurve<T>,
    mass_m: T,
    j: usize,
    eps_list: &[T],
    params: MeshParams,
) -> Result<EigenCurve<T>> {
    if eps_list.is_empty() {
        return Err(Error::Config("empty eps list".into()));
    }
    for w in eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config("eps list must be strictly descending".into()));
        }
    }
    let k_solve = j + 3;

    // Limit problem on a mesh of the same resolution for mu_j and the
    // tracking seed (boundary nodes coincide across the family).
    let seed_mesh = mesh_star_domain(
        curve,
        eps_list[0],
        params.n_t,
        params.n_layer,
        params.n_interior,
    )?;
    let limit_pairs = solve_steklov(&seed_mesh, curve, mass_m, j + 2)?;
    let mu = limit_pairs[j].mu;
    let mut prev_lambda = mu;
    let mut prev_vec: Vec<T> = limit_pairs[j].u.clone();

    let mut points = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mesh = mesh_star_domain(curve, eps, params.n_t, params.n_layer, params.n_interior)?;
        let dens = make_density(curve, mass_m, eps)?;
        let weights = density_weights(&mesh, &dens)?;
        let m_rho = assemble_mass(&mesh, &weights)?;
        let set = solve_perturbed(&mesh, curve, &dens, k_solve)?;

        let (idx, overlap) = pick_branch(&set, &m_rho, prev_lambda, &prev_vec)?;
        points.push(CurvePoint {
            eps,
            lambda: set.values[idx],
            overlap,
        });
        prev_lambda = set.values[idx];
        prev_vec = set.vectors[idx].clone();
    }
    Ok(EigenCurve { j, mu, points })
}

/// Nearest-value match against the previous branch sample, refined by
/// eigenvector overlap when two candidates are equidistant.
///
/// Equidistant candidates that are themselves degenerate (a rotationally
/// symmetric cluster) are interchangeable for the value curve: the one with
/// the better overlap wins. Equidistant candidates with distinct values are a
/// real ambiguity unless the overlap separates them.
fn pick_branch<T: Real>(
    set: &EigenSet<T>,
    m_rho: &crate::linalg::SparseSym<T>,
    prev_lambda: T,
    prev_vec: &[T],
) -> Result<(usize, T)> {
    let mut order: Vec<usize> = (0..set.values.len()).collect();
    order.sort_by(|&a, &b| {
        (set.values[a] - prev_lambda)
            .abs()
            .partial_cmp(&(set.values[b] - prev_lambda).abs())
            .expect("eigenvalues are finite")
    });
    let best = order[0];
    let overlap_with = |i: usize| -> T {
        let num = m_rho.quad(&set.vectors[i], prev_vec).abs();
        let a = m_rho.quad(&set.vectors[i], &set.vectors[i]).sqrt();
        let b = m_rho.quad(prev_vec, prev_vec).sqrt();
        num / (a * b)
    };
    if order.len() >= 2 {
        let second = order[1];
        let d_best = (set.values[best] - prev_lambda).abs();
        let d_second = (set.values[second] - prev_lambda).abs();
        if (d_second - d_best).abs() < real::<T>(1e-9) {
            let scale = T::one().max(set.values[best].abs());
            let cluster = (set.values[second] - set.values[best]).abs() < real::<T>(1e-8) * scale;
            let o_best = overlap_with(best);
            let o_second = overlap_with(second);
            let half = real::<T>(0.5);
            if cluster {
                return if o_second > o_best {
                    Ok((second, o_second))
                } else {
                    Ok((best, o_best))
                };
            }
            return match (o_best > half, o_second > half) {
                (true, false) => Ok((best, o_best)),
                (false, true) => Ok((second, o_second)),
                _ => Err(Error::Tracking(format!(
                    "equidistant branch candidates {:?} and {:?} near {:?}",
                    set.values[best], set.values[second], prev_lambda
                ))),
            };
        }
    }
    let o = overlap_with(best);
    Ok((best, o))
}
