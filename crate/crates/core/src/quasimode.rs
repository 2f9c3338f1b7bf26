//! Spectral-proximity verification of the two-term expansion: a symmetric
//! operator with a small residual at an approximate eigenpair must have a
//! true eigenvalue at least as close, and the quasimodes built from the
//! limit eigenfunction plus strip correctors must show residuals of order
//! eps (two terms) and eps^2 (three terms plus second corrector).

use crate::asymptotics::{corrector, first_order_data, FirstOrderData, ModeSelect};
use crate::eigensolve::{smallest_eigenpairs, EigenSet, Resolvent};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_mass, assemble_plain_mass, assemble_stiffness, eps_inner,
};
use crate::fitting::fit_loglog;
use crate::geometry::{BoundaryCurve, CurveKind};
use crate::mesh::{mesh_star_domain, TriMesh};
use crate::perturbed::{density_weights, make_density, solve_perturbed, MeshParams};
use crate::scalar::{real, Real};
use crate::steklov::fix_sign;

const SOLVE_TOL: f64 = 1e-10;
/// Slack on the gap-vs-residual comparison; covers round-off when the two
/// sides coincide exactly.
const GAP_SLACK: f64 = 1e-12;

/// Outcome of one spectral-proximity check.
#[derive(Debug, Clone, Copy)]
pub struct OleinikCheck<T> {
    /// `|A u - eta u|` in the operator's own norm.
    pub residual: T,
    /// Distance from `eta` to the nearest known eigenvalue.
    pub nearest_gap: T,
    pub pass: bool,
}

/// Checks that a residual bound forces a nearby eigenvalue: for a symmetric
/// operator (given as `apply` in the inner product `inner`) with eigenvalues
/// `spectrum`, a unit vector `u`, and a guess `eta`, the distance from `eta`
/// to the spectrum can never exceed the residual.
///
/// `spectrum` may be partial as long as it contains the eigenvalues nearest
/// to `eta`; `u` must be normalized in `inner` to 1e-10.
pub fn check_oleinik<T: Real>(
    apply: &dyn Fn(&[T]) -> Vec<T>,
    inner: &dyn Fn(&[T], &[T]) -> T,
    spectrum: &[T],
    u: &[T],
    eta: T,
) -> Result<OleinikCheck<T>> {
    if spectrum.is_empty() {
        return Err(Error::Config("empty spectrum".into()));
    }
    let norm = inner(u, u).sqrt();
    if (norm - T::one()).abs() > real::<T>(1e-10) {
        return Err(Error::Contract(format!(
            "test vector norm {norm:?} is not 1"
        )));
    }
    let au = apply(u);
    let r: Vec<T> = au.iter().zip(u).map(|(&a, &b)| a - eta * b).collect();
    let residual = inner(&r, &r).max(T::zero()).sqrt();
    let nearest_gap = spectrum
        .iter()
        .map(|&s| (eta - s).abs())
        .fold(T::infinity(), T::min);
    Ok(OleinikCheck {
        residual,
        nearest_gap,
        pass: nearest_gap <= residual + real::<T>(GAP_SLACK),
    })
}

/// One seeded instance of the proximity check on a dense random operator:
/// a symmetric 50x50 matrix rescaled to a PSD contraction, a random unit
/// vector, and its Rayleigh quotient as the eigenvalue guess.
pub fn oleinik_random_trial<T: Real>(n: usize, seed: u64) -> Result<OleinikCheck<T>> {
    use crate::linalg::{splitmix64, sym_eigen, unit_vector, DenseMat};
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut s = DenseMat::<T>::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let r = splitmix64(&mut state) as f64 / u64::MAX as f64;
            let v = real::<T>(2.0 * r - 1.0);
            s.set(i, j, v);
            s.set(j, i, v);
        }
    }
    let (raw, _) = sym_eigen(&s, false)?;
    let (lo, hi) = (raw[0], raw[n - 1]);
    let span = hi - lo;
    // Spectrum mapped affinely into [0, 1].
    let spectrum: Vec<T> = raw.iter().map(|&d| (d - lo) / span).collect();
    let apply = move |x: &[T]| -> Vec<T> {
        (0..n)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..n {
                    acc += s.get(i, j) * x[j];
                }
                (acc - lo * x[i]) / span
            })
            .collect()
    };
    let inner = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x * y).fold(T::zero(), |p, q| p + q);
    let u = unit_vector::<T>(n, seed ^ 0xABCD_EF01);
    let au = apply(&u);
    let eta = inner(&u, &au);
    check_oleinik(&apply, &inner, &spectrum, &u, eta)
}

/// Per-eps record of one quasimode evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QuasimodeReport<T> {
    pub eps: T,
    pub order: u8,
    /// Residual of the quasimode in the eps-norm.
    pub residual: T,
    /// Distance from the predicted resolvent eigenvalue to the computed
    /// spectrum.
    pub nearest_gap: T,
    /// Deviation of the raw quasimode's squared eps-norm from its limit
    /// value `(M/P)(1 + mu)` resp. `(M/P)(1 + mu + eps mu1)`.
    pub norm_check: T,
    /// Set when this point sits past the discretization floor; such points
    /// are excluded from the slope fits.
    pub floor_flag: bool,
    /// eps-norm distance from the quasimode to the nearest normalized
    /// element of the matched eigenspace.
    pub mode_distance: T,
    /// The proximity bound `2 residual / r*` with `r*` half the spectral
    /// gap around the matched cluster; infinite when the residual is too
    /// large for the bound to apply.
    pub mode_distance_bound: T,
}

/// Residual-order study output: per-eps reports plus the fitted slopes of
/// `log residual` and `log norm_check` against `log eps`.
#[derive(Debug, Clone)]
pub struct ResidualStudy<T> {
    pub reports: Vec<QuasimodeReport<T>>,
    pub residual_slope: T,
    pub norm_slope: T,
    pub floor_warning: bool,
}

/// Branch selector for eigenvalue index `j`: disk spectra come in double
/// pairs reduced to the even representative; every other curve expands the
/// simple eigenvalue at that position.
pub fn branch_select<T: Real>(curve: &BoundaryCurve<T>, j: usize) -> ModeSelect {
    if matches!(curve.kind(), CurveKind::Disk { .. }) {
        ModeSelect::DiskPair { j }
    } else {
        ModeSelect::Simple { index: j }
    }
}

/// Raw quasimode field, resolvent eigenvalue guess, and the limit value of
/// the squared eps-norm, for one eps.
fn quasimode_fields<T: Real + 'static>(
    order: u8,
    data: &FirstOrderData<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    eps: T,
) -> Result<(Vec<T>, T, T)> {
    let v0 = corrector(0, data, mesh, curve)?.extension(mesh, curve, eps)?;
    let mut q = data.pair.u.clone();
    let mass_ratio = data.geom.mass_m / mesh.boundary_len();
    if order == 0 {
        for i in 0..q.len() {
            q[i] += eps * v0[i];
        }
        let eta = (T::one() + data.mu).recip();
        Ok((q, eta, mass_ratio * (T::one() + data.mu)))
    } else {
        let v1 = corrector(1, data, mesh, curve)?.extension(mesh, curve, eps)?;
        for i in 0..q.len() {
            q[i] += eps * (data.u1[i] + v0[i]) + eps * eps * v1[i];
        }
        let lam = data.mu + eps * data.mu1;
        let eta = (T::one() + lam).recip();
        Ok((q, eta, mass_ratio * (T::one() + lam)))
    }
}

/// Distance from the normalized quasimode to the eigenspace matched to
/// `eta` (the `cluster` nearest eigenvalues), and the bound the residual
/// imposes on it.
fn mode_proximity<T: Real>(
    q: &[T],
    eta: T,
    set: &EigenSet<T>,
    etas: &[T],
    cluster: usize,
    residual: T,
    inner: &dyn Fn(&[T], &[T]) -> T,
) -> (T, T) {
    let mut idx: Vec<usize> = (0..etas.len()).collect();
    idx.sort_by(|&a, &b| {
        (eta - etas[a])
            .abs()
            .partial_cmp(&(eta - etas[b]).abs())
            .unwrap()
    });
    let cut = cluster.min(idx.len());
    let r_star = idx[cut..]
        .iter()
        .map(|&i| (eta - etas[i]).abs())
        .fold(T::infinity(), T::min)
        * real::<T>(0.5);
    let mut p = vec![T::zero(); q.len()];
    for &i in &idx[..cut] {
        // Solver vectors are M_rho-orthonormal, so dividing by
        // sqrt(1 + lambda) makes them eps-orthonormal.
        let scale = (T::one() + set.values[i]).sqrt();
        let psi: Vec<T> = set.vectors[i].iter().map(|&v| v / scale).collect();
        let c = inner(q, &psi);
        for (pk, &vk) in p.iter_mut().zip(&psi) {
            *pk += c * vk;
        }
    }
    let pn = inner(&p, &p).max(T::zero()).sqrt();
    if pn < real::<T>(1e-12) {
        return (real::<T>(2.0), T::infinity());
    }
    let d: Vec<T> = q.iter().zip(&p).map(|(&a, &b)| a - b / pn).collect();
    let dist = inner(&d, &d).max(T::zero()).sqrt();
    let bound = if r_star > residual {
        real::<T>(2.0) * residual / r_star
    } else {
        T::infinity()
    };
    (dist, bound)
}

/// Length of the strictly decreasing prefix; everything after it is treated
/// as floor-dominated.
fn monotone_prefix<T: Real>(vals: &[T]) -> usize {
    let mut k = 1;
    while k < vals.len() && vals[k] < vals[k - 1] {
        k += 1;
    }
    k
}

fn check_eps_list<T: Real>(eps_list: &[T], min_len: usize, min_span: f64) -> Result<()> {
    if eps_list.len() < min_len {
        return Err(Error::Config(format!(
            "need at least {min_len} eps points, got {}",
            eps_list.len()
        )));
    }
    for w in eps_list.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config("eps_list must be strictly decreasing".into()));
        }
    }
    let span = eps_list[0] / eps_list[eps_list.len() - 1];
    if span < real::<T>(min_span * (1.0 - 1e-9)) {
        return Err(Error::Config(format!(
            "eps_list must span at least a factor of {min_span}, got {span:?}"
        )));
    }
    Ok(())
}

/// Builds the quasimode of the requested order on a fresh layer-conforming
/// mesh for each eps, measures its residual against the discrete resolvent,
/// and fits the observed orders.
///
/// The gap-vs-residual invariant is enforced on every point; a violation is
/// a solver defect, not data.
pub fn residual_order_study<T: Real + 'static>(
    curve: &BoundaryCurve<T>,
    mass_m: T,
    j: usize,
    order: u8,
    eps_list: &[T],
    params: MeshParams,
) -> Result<ResidualStudy<T>> {
    if order > 1 {
        return Err(Error::Config(format!("no order-{order} quasimode")));
    }
    if j == 0 {
        return Err(Error::Config("the constant branch has no quasimode".into()));
    }
    check_eps_list(eps_list, 4, 8.0)?;
    let select = branch_select(curve, j);
    let cluster = if matches!(curve.kind(), CurveKind::Disk { .. }) {
        2
    } else {
        1
    };
    let mut reports = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mesh = mesh_star_domain(curve, eps, params.n_t, params.n_layer, params.n_interior)?;
        let data = first_order_data(&mesh, curve, mass_m, select)?;
        let (q_raw, eta, norm_target) = quasimode_fields(order, &data, &mesh, curve, eps)?;

        let stiff = assemble_stiffness(&mesh)?;
        let dens = make_density(curve, mass_m, eps)?;
        let m_rho = assemble_mass(&mesh, &density_weights(&mesh, &dens)?)?;
        let norm_sq = eps_inner(&q_raw, &q_raw, &stiff, &m_rho)?;
        let norm_check = (norm_sq - norm_target).abs();
        let scale = norm_sq.sqrt();
        let q: Vec<T> = q_raw.iter().map(|&v| v / scale).collect();

        let set = smallest_eigenpairs(&stiff, &m_rho, 2 * j + 4, real::<T>(SOLVE_TOL))?;
        let etas: Vec<T> = set
            .values
            .iter()
            .map(|&l| (T::one() + l).recip())
            .collect();
        let resolvent = Resolvent::new(&stiff, &m_rho)?;
        let apply = |x: &[T]| resolvent.apply(x);
        let inner =
            |a: &[T], b: &[T]| eps_inner(a, b, &stiff, &m_rho).expect("fields share the mesh");
        let check = check_oleinik(&apply, &inner, &etas, &q, eta)?;
        if !check.pass {
            return Err(Error::Contract(format!(
                "spectral proximity failed at eps={eps:?}: gap {:?} exceeds residual {:?}",
                check.nearest_gap, check.residual
            )));
        }
        let (dist, bound) = mode_proximity(&q, eta, &set, &etas, cluster, check.residual, &inner);
        reports.push(QuasimodeReport {
            eps,
            order,
            residual: check.residual,
            nearest_gap: check.nearest_gap,
            norm_check,
            floor_flag: false,
            mode_distance: dist,
            mode_distance_bound: bound,
        });
    }

    let residuals: Vec<T> = reports.iter().map(|r| r.residual).collect();
    let keep = monotone_prefix(&residuals);
    for r in &mut reports[keep..] {
        r.floor_flag = true;
    }
    if keep < 2 {
        return Err(Error::Numerics(
            "quasimode residuals sit at the discretization floor; refine the mesh".into(),
        ));
    }
    let eps_kept: Vec<T> = reports[..keep].iter().map(|r| r.eps).collect();
    let res_kept: Vec<T> = reports[..keep].iter().map(|r| r.residual).collect();
    let norm_kept: Vec<T> = reports[..keep].iter().map(|r| r.norm_check).collect();
    let residual_slope = fit_loglog(&eps_kept, &res_kept)?.slope;
    let norm_slope = fit_loglog(&eps_kept, &norm_kept)?.slope;
    Ok(ResidualStudy {
        floor_warning: keep < reports.len(),
        reports,
        residual_slope,
        norm_slope,
    })
}

/// Kills the sine-class component of a degenerate disk pair, preserving the
/// input normalization (the two vectors must be orthogonal with equal norm
/// in the solve's mass matrix).
fn even_combination<T: Real>(
    v1: &[T],
    v2: &[T],
    mesh: &TriMesh<T>,
    j: usize,
) -> Result<Vec<T>> {
    let bnd = assemble_boundary_mass(mesh)?;
    let mut g = vec![T::zero(); mesh.n_nodes()];
    for e in &mesh.boundary_edges {
        let i = e[0] as usize;
        let th = mesh.nodes[i][1].atan2(mesh.nodes[i][0]);
        g[i] = (real::<T>(j as f64) * th).sin();
    }
    let s1 = bnd.quad(v1, &g);
    let s2 = bnd.quad(v2, &g);
    let sc = s1.hypot(s2);
    if sc < real::<T>(1e-12) {
        return Err(Error::Degeneracy(
            "eigenspace projection collapsed".into(),
        ));
    }
    let mut out: Vec<T> = v1
        .iter()
        .zip(v2)
        .map(|(&a, &b)| (s2 * a - s1 * b) / sc)
        .collect();
    fix_sign(mesh, &mut out);
    Ok(out)
}

/// One eps-sample of the eigenfunction comparison.
#[derive(Debug, Clone, Copy)]
pub struct RemainderRow<T> {
    pub eps: T,
    /// The tracked perturbed eigenvalue.
    pub lambda: T,
    /// L2 distance between the perturbed eigenfunction and the two-term
    /// prediction, both renormalized in L2 and sign-aligned.
    pub remainder: T,
    /// Same distance with each field kept in its own normalization (the
    /// perturbed one in the weighted mass, the prediction as assembled).
    pub paper_distance: T,
    pub floor_flag: bool,
}

/// Remainder study output.
#[derive(Debug, Clone)]
pub struct RemainderStudy<T> {
    pub rows: Vec<RemainderRow<T>>,
    /// Fitted exponent of the renormalized L2 remainder.
    pub slope: T,
    pub floor_warning: bool,
}

/// Measures `u_eps - (u + eps u1 + eps v)` in L2 across eps and fits its
/// decay exponent.
pub fn eigenfunction_remainder_study<T: Real + 'static>(
    curve: &BoundaryCurve<T>,
    mass_m: T,
    j: usize,
    eps_list: &[T],
    params: MeshParams,
) -> Result<RemainderStudy<T>> {
    if j == 0 {
        return Err(Error::Config("the constant branch has no expansion".into()));
    }
    check_eps_list(eps_list, 3, 2.0)?;
    let select = branch_select(curve, j);
    let disk = matches!(curve.kind(), CurveKind::Disk { .. });
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mesh = mesh_star_domain(curve, eps, params.n_t, params.n_layer, params.n_interior)?;
        let data = first_order_data(&mesh, curve, mass_m, select)?;
        let dens = make_density(curve, mass_m, eps)?;
        let set = solve_perturbed(&mesh, curve, &dens, 2 * j + 2)?;
        let (u_eps, lambda) = if disk {
            let (a, b) = (set.values[2 * j - 1], set.values[2 * j]);
            if (a - b).abs() > real::<T>(1e-6) * T::one().max(a.abs()) {
                return Err(Error::Degeneracy(format!(
                    "expected a double eigenvalue, got {a:?} and {b:?}"
                )));
            }
            let v = even_combination(
                &set.vectors[2 * j - 1],
                &set.vectors[2 * j],
                &mesh,
                j,
            )?;
            (v, (a + b) * real::<T>(0.5))
        } else {
            (set.vectors[j].clone(), set.values[j])
        };

        let v0 = corrector(0, &data, &mesh, curve)?.extension(&mesh, curve, eps)?;
        let pred: Vec<T> = (0..mesh.n_nodes())
            .map(|i| data.pair.u[i] + eps * (data.u1[i] + v0[i]))
            .collect();
        let mass = assemble_plain_mass(&mesh)?;
        let sign = if mass.quad(&u_eps, &pred) < T::zero() {
            -T::one()
        } else {
            T::one()
        };
        let un = mass.quad(&u_eps, &u_eps).sqrt();
        let pn = mass.quad(&pred, &pred).sqrt();
        let d: Vec<T> = u_eps
            .iter()
            .zip(&pred)
            .map(|(&a, &b)| sign * a / un - b / pn)
            .collect();
        let remainder = mass.quad(&d, &d).max(T::zero()).sqrt();
        let d2: Vec<T> = u_eps
            .iter()
            .zip(&pred)
            .map(|(&a, &b)| sign * a - b)
            .collect();
        let paper_distance = mass.quad(&d2, &d2).max(T::zero()).sqrt();
        rows.push(RemainderRow {
            eps,
            lambda,
            remainder,
            paper_distance,
            floor_flag: false,
        });
    }
    let rems: Vec<T> = rows.iter().map(|r| r.remainder).collect();
    let keep = monotone_prefix(&rems);
    for r in &mut rows[keep..] {
        r.floor_flag = true;
    }
    if keep < 2 {
        return Err(Error::Numerics(
            "eigenfunction remainders sit at the discretization floor; refine the mesh".into(),
        ));
    }
    let eps_kept: Vec<T> = rows[..keep].iter().map(|r| r.eps).collect();
    let slope = fit_loglog(&eps_kept, &rems[..keep])?.slope;
    Ok(RemainderStudy {
        floor_warning: keep < rows.len(),
        rows,
        slope,
    })
}
