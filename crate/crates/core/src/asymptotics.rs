//! First-order eigenvalue correction for the boundary-concentration family:
//! the closed formula for the derivative of `lambda_j(eps)` at zero, the
//! auxiliary field `u_j^1` it pairs with, the strip corrector profiles, and
//! the two-term prediction they assemble into.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_boundary_mass, assemble_boundary_weighted_mass, assemble_plain_mass,
    assemble_stiffness,
};
use crate::geometry::BoundaryCurve;
use crate::linalg::{minres_deflated, SkylineChol, SparseSym};
use crate::mesh::TriMesh;
use crate::scalar::{real, Real};
use crate::steklov::{
    disk_even_representative, solve_steklov, steklov_integrals, SteklovIntegrals, SteklovPair,
};

/// The domain scalars entering the correction formulas, taken from the
/// smooth curve.
#[derive(Debug, Clone, Copy)]
pub struct GeomScalars<T> {
    pub mass_m: T,
    pub area: T,
    pub perimeter: T,
    /// Integral of the curvature over the boundary (2 pi for these curves).
    pub total_curv: T,
}

impl<T: Real> GeomScalars<T> {
    pub fn from_curve(curve: &BoundaryCurve<T>, mass_m: T) -> Self {
        Self {
            mass_m,
            area: curve.area(),
            perimeter: curve.len(),
            total_curv: curve.total_curvature(),
        }
    }
}

/// The five terms of the first-order coefficient, kept separate for
/// reporting.
#[derive(Debug, Clone, Copy)]
pub struct Mu1Breakdown<T> {
    /// `|area| mu / M`.
    pub area_term: T,
    /// `-(perimeter mu / M) * vol_int`.
    pub vol_term: T,
    /// `2 M mu^2 / (3 perimeter)`.
    pub mu_sq_term: T,
    /// `(mu / 2) * bnd_curv_int`.
    pub curv_term: T,
    /// `-total_curv * mu / (2 perimeter)`.
    pub curv_total_term: T,
    pub total: T,
}

/// First-order eigenvalue coefficient from the closed formula.
pub fn mu1_formula<T: Real>(
    pair: &SteklovPair<T>,
    integrals: &SteklovIntegrals<T>,
    geom: &GeomScalars<T>,
) -> Result<Mu1Breakdown<T>> {
    if (pair.boundary_norm - T::one()).abs() > real::<T>(1e-6) {
        return Err(Error::Contract(format!(
            "eigenfunction boundary norm {:?} is not 1",
            pair.boundary_norm
        )));
    }
    if pair.mu <= T::zero() {
        return Err(Error::Config("correction needs a positive eigenvalue".into()));
    }
    let mu = pair.mu;
    let (m, p) = (geom.mass_m, geom.perimeter);
    let half = real::<T>(0.5);
    let area_term = geom.area * mu / m;
    let vol_term = -(p * mu / m) * integrals.vol_int;
    let mu_sq_term = real::<T>(2.0 / 3.0) * m * mu * mu / p;
    let curv_term = half * mu * integrals.bnd_curv_int;
    let curv_total_term = -geom.total_curv * mu * half / p;
    Ok(Mu1Breakdown {
        area_term,
        vol_term,
        mu_sq_term,
        curv_term,
        curv_total_term,
        total: area_term + vol_term + mu_sq_term + curv_term + curv_total_term,
    })
}

/// Solvability constant of the singular auxiliary problem from already
/// evaluated integrals: `-(int_fu + int_g1u) / int_g2u`.
pub fn compatibility_lambda_from_integrals<T: Real>(
    int_fu: T,
    int_g1u: T,
    int_g2u: T,
) -> Result<T> {
    if int_g2u.abs() < real::<T>(1e-12) {
        return Err(Error::Compatibility(
            "boundary pairing of g2 with the eigenfunction vanishes".into(),
        ));
    }
    Ok(-(int_fu + int_g1u) / int_g2u)
}

/// Solvability constant from nodal data: `f` an interior field, `g1`, `g2`
/// boundary fields (values off the boundary are ignored by the quadrature).
pub fn compatibility_lambda<T: Real>(
    f: &[T],
    g1: &[T],
    g2: &[T],
    pair: &SteklovPair<T>,
    mesh: &TriMesh<T>,
) -> Result<T> {
    let n = mesh.n_nodes();
    if f.len() != n || g1.len() != n || g2.len() != n || pair.u.len() != n {
        return Err(Error::Shape("field size does not match the mesh".into()));
    }
    let mass = assemble_plain_mass(mesh)?;
    let bnd = assemble_boundary_mass(mesh)?;
    compatibility_lambda_from_integrals(
        mass.quad(f, &pair.u),
        bnd.quad(g1, &pair.u),
        bnd.quad(g2, &pair.u),
    )
}

/// Boundary coefficient of the auxiliary problem's inhomogeneous data at arc
/// length `s` (the factor multiplying the eigenfunction trace).
fn aux_boundary_coefficient<T: Real>(geom: &GeomScalars<T>, mu: T, kappa_s: T) -> T {
    let (m, p) = (geom.mass_m, geom.perimeter);
    let half = real::<T>(0.5);
    m * mu * half / (p * p) * (geom.total_curv - p * kappa_s)
        - real::<T>(2.0 / 3.0) * m * m * mu * mu / (p * p)
        - geom.area * mu / p
}

/// Assembles the singular operator `K - (M mu / P_mesh) B` and the right
/// side of the auxiliary problem with `lambda` as the multiplier of the
/// `(M/P) u` boundary datum. Uses the pair's own discrete eigenvalue and the
/// mesh perimeter so the operator kernel contains `u` exactly.
fn aux_system<T: Real>(
    pair: &SteklovPair<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    geom: &GeomScalars<T>,
    lambda: T,
) -> Result<(SparseSym<T>, SparseSym<T>, Vec<T>)> {
    let mu = pair.mu;
    let stiff = assemble_stiffness(mesh)?;
    let bnd = assemble_boundary_mass(mesh)?;
    let mass = assemble_plain_mass(mesh)?;
    let op = stiff.add_scaled(&bnd, -geom.mass_m * mu / mesh.boundary_len())?;
    let coef = assemble_boundary_weighted_mass(mesh, curve.len(), |s| {
        aux_boundary_coefficient(geom, mu, curve.curvature(s))
    })?;
    let mut rhs = mass.apply(&pair.u);
    for x in &mut rhs {
        *x *= mu;
    }
    let coef_part = coef.apply(&pair.u);
    let bnd_part = bnd.apply(&pair.u);
    let g2_scale = lambda * geom.mass_m / geom.perimeter;
    for i in 0..rhs.len() {
        rhs[i] += coef_part[i] + g2_scale * bnd_part[i];
    }
    Ok((op, bnd, rhs))
}

/// The exact solvability constant of the discrete system assembled by
/// [`aux_system`]: the value of `lambda` that puts the right side in the
/// operator's range.
fn aux_discrete_lambda<T: Real>(
    pair: &SteklovPair<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    geom: &GeomScalars<T>,
) -> Result<T> {
    let mu = pair.mu;
    let mass = assemble_plain_mass(mesh)?;
    let bnd = assemble_boundary_mass(mesh)?;
    let coef = assemble_boundary_weighted_mass(mesh, curve.len(), |s| {
        aux_boundary_coefficient(geom, mu, curve.curvature(s))
    })?;
    let int_fu = mu * mass.quad(&pair.u, &pair.u);
    let int_g1u = coef.quad(&pair.u, &pair.u);
    let int_g2u = geom.mass_m / geom.perimeter * bnd.quad(&pair.u, &pair.u);
    compatibility_lambda_from_integrals(int_fu, int_g1u, int_g2u)
}

/// Solves the auxiliary problem for the first-order eigenfunction term.
///
/// The system is singular with kernel spanned by the eigenfunction; the
/// right side is made exactly compatible by re-deriving the multiplier from
/// the discrete data (it must agree with the supplied `mu1` to 1e-6, else
/// the inputs are inconsistent). The kernel component is then fixed by the
/// boundary-pairing condition `int u1 u = mu1/(2 mu) + M mu / (3 P)`.
pub fn solve_aux<T: Real>(
    pair: &SteklovPair<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    geom: &GeomScalars<T>,
    mu1: T,
) -> Result<Vec<T>> {
    if !pair.simple_flag && !matches!(curve.kind(), crate::geometry::CurveKind::Disk { .. }) {
        return Err(Error::Degeneracy(
            "auxiliary problem needs a simple eigenvalue outside disk mode".into(),
        ));
    }
    let lambda = aux_discrete_lambda(pair, mesh, curve, geom)?;
    if (lambda - mu1).abs() > real::<T>(1e-6) * T::one().max(mu1.abs()) {
        return Err(Error::Compatibility(format!(
            "solvability constant {lambda:?} disagrees with the supplied coefficient {mu1:?}"
        )));
    }
    let (op, bnd, rhs) = aux_system(pair, mesh, curve, geom, lambda)?;

    // Positive-definite shift of the same operator as preconditioner.
    let shifted = op.add_scaled(
        &bnd,
        T::one() + geom.mass_m * pair.mu / mesh.boundary_len(),
    )?;
    let chol = SkylineChol::factor(&shifted)?;
    let apply_op = |x: &[T], out: &mut [T]| out.copy_from_slice(&op.apply(x));
    let precond = |x: &[T], out: &mut [T]| out.copy_from_slice(&chol.solve(x));
    let deflate = vec![pair.u.clone()];
    let mut u1 = minres_deflated(
        &apply_op,
        Some(&precond),
        &deflate,
        &rhs,
        real::<T>(1e-11),
        4000,
    )?;

    // Kernel direction: shift by alpha * u to hit the pairing condition.
    let mu = pair.mu;
    let target = lambda / (real::<T>(2.0) * mu)
        + geom.mass_m * mu / (real::<T>(3.0) * geom.perimeter);
    let have = bnd.quad(&u1, &pair.u);
    let alpha = (target - have) / pair.boundary_norm;
    for (x, &b) in u1.iter_mut().zip(&pair.u) {
        *x += alpha * b;
    }
    Ok(u1)
}

/// Everything the two-term expansion of one eigenvalue branch needs.
#[derive(Debug, Clone)]
pub struct FirstOrderData<T> {
    pub mu: T,
    pub mu1: T,
    pub breakdown: Mu1Breakdown<T>,
    pub pair: SteklovPair<T>,
    /// First-order eigenfunction term on the mesh.
    pub u1: Vec<T>,
    pub integrals: SteklovIntegrals<T>,
    pub geom: GeomScalars<T>,
}

/// Post-solve identity checks on [`FirstOrderData`]: the solvability
/// constant re-derived from the discrete integrals against the closed-form
/// coefficient, and the kernel-fixing boundary pairing of `u1`.
#[derive(Debug, Clone, Copy)]
pub struct FirstOrderChecks<T> {
    /// Solvability constant of the discrete auxiliary system.
    pub compat_lambda: T,
    /// `|compat_lambda - mu1|`.
    pub compat_residual: T,
    /// Boundary pairing `int u1 u` as solved.
    pub pairing: T,
    /// Its prescribed value `mu1/(2 mu) + M mu/(3 P)`.
    pub pairing_target: T,
}

pub fn first_order_checks<T: Real>(
    data: &FirstOrderData<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
) -> Result<FirstOrderChecks<T>> {
    let lambda = aux_discrete_lambda(&data.pair, mesh, curve, &data.geom)?;
    let bnd = assemble_boundary_mass(mesh)?;
    let mu = data.pair.mu;
    let target = data.mu1 / (real::<T>(2.0) * mu)
        + data.geom.mass_m * mu / (real::<T>(3.0) * data.geom.perimeter);
    Ok(FirstOrderChecks {
        compat_lambda: lambda,
        compat_residual: (lambda - data.mu1).abs(),
        pairing: bnd.quad(&data.u1, &data.pair.u),
        pairing_target: target,
    })
}

/// Which eigenvalue branch to expand.
#[derive(Debug, Clone, Copy)]
pub enum ModeSelect {
    /// A simple eigenvalue by index in the ascending spectrum (0 is the
    /// constant mode and is not expandable).
    Simple { index: usize },
    /// The j-th double disk eigenvalue, reduced to its even (cosine-class)
    /// representative.
    DiskPair { j: usize },
}

/// Solves the limit problem, evaluates the correction formula, and solves
/// the auxiliary problem on one mesh.
pub fn first_order_data<T: Real>(
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    mass_m: T,
    select: ModeSelect,
) -> Result<FirstOrderData<T>> {
    let pair = match select {
        ModeSelect::Simple { index } => {
            if index == 0 {
                return Err(Error::Config("the constant mode has no expansion".into()));
            }
            let pairs = solve_steklov(mesh, curve, mass_m, index + 2)?;
            let p = pairs[index].clone();
            if !p.simple_flag {
                return Err(Error::Degeneracy(format!(
                    "eigenvalue {:?} at index {index} is not simple",
                    p.mu
                )));
            }
            p
        }
        ModeSelect::DiskPair { j } => {
            if j == 0 {
                return Err(Error::Config("the constant mode has no expansion".into()));
            }
            let pairs = solve_steklov(mesh, curve, mass_m, 2 * j + 2)?;
            disk_even_representative(&pairs[2 * j - 1], &pairs[2 * j], mesh, j)?
        }
    };
    let integrals = steklov_integrals(&pair, mesh, curve)?;
    let geom = GeomScalars::from_curve(curve, mass_m);
    let breakdown = mu1_formula(&pair, &integrals, &geom)?;
    let u1 = solve_aux(&pair, mesh, curve, &geom, breakdown.total)?;
    Ok(FirstOrderData {
        mu: pair.mu,
        mu1: breakdown.total,
        breakdown,
        pair,
        u1,
        integrals,
        geom,
    })
}

/// Periodic linear interpolant of a boundary field in arc length.
pub struct BoundaryTrace<T> {
    s: Vec<T>,
    v: Vec<T>,
    total_len: T,
}

impl<T: Real> BoundaryTrace<T> {
    /// Samples `field` at the mesh's boundary nodes in arc order.
    pub fn from_field(mesh: &TriMesh<T>, field: &[T], total_len: T) -> Result<Self> {
        if field.len() != mesh.n_nodes() {
            return Err(Error::Shape("field size does not match the mesh".into()));
        }
        let s = mesh.boundary_s.clone();
        let v = mesh
            .boundary_edges
            .iter()
            .map(|e| field[e[0] as usize])
            .collect();
        Ok(Self { s, v, total_len })
    }

    pub fn eval(&self, s: T) -> T {
        let n = self.s.len();
        let mut s = s % self.total_len;
        if s < T::zero() {
            s += self.total_len;
        }
        // Last segment wraps around to the first node.
        let idx = self.s.partition_point(|&a| a <= s);
        let (i0, s0) = if idx == 0 {
            (n - 1, self.s[n - 1] - self.total_len)
        } else {
            (idx - 1, self.s[idx - 1])
        };
        let i1 = (i0 + 1) % n;
        let s1 = if i1 == 0 {
            self.s[0] + self.total_len
        } else {
            self.s[i1]
        };
        let w = (s - s0) / (s1 - s0);
        self.v[i0] + (self.v[i1] - self.v[i0]) * w
    }
}

type TraceFn<T> = Box<dyn Fn(T) -> T>;

/// A strip profile in boundary-fitted coordinates: arc length `s` along the
/// boundary and scaled depth `xi` in `[0, 1]`.
pub struct CorrectorField<T> {
    pub order: u8,
    mu: T,
    mu1: T,
    geom: GeomScalars<T>,
    u0: TraceFn<T>,
    u1t: Option<TraceFn<T>>,
    kappa: TraceFn<T>,
}

/// Builds the corrector from a solved data record, sampling the traces from
/// the discrete fields.
pub fn corrector<T: Real + 'static>(
    order: u8,
    data: &FirstOrderData<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
) -> Result<CorrectorField<T>> {
    let len = curve.len();
    let u0 = BoundaryTrace::from_field(mesh, &data.pair.u, len)?;
    let u1t = if order == 1 {
        Some(BoundaryTrace::from_field(mesh, &data.u1, len)?)
    } else {
        None
    };
    let curve_kappa = curve.clone();
    corrector_from_traces(
        order,
        data.mu,
        data.mu1,
        data.geom,
        Box::new(move |s| u0.eval(s)),
        u1t.map(|t| Box::new(move |s| t.eval(s)) as TraceFn<T>),
        Box::new(move |s| curve_kappa.curvature(s)),
    )
}

/// Builds the corrector from explicit trace closures (analytic traces in
/// disk mode, synthetic data in tests).
pub fn corrector_from_traces<T: Real>(
    order: u8,
    mu: T,
    mu1: T,
    geom: GeomScalars<T>,
    u0: TraceFn<T>,
    u1t: Option<TraceFn<T>>,
    kappa: TraceFn<T>,
) -> Result<CorrectorField<T>> {
    if order > 1 {
        return Err(Error::Config(format!("no order-{order} corrector")));
    }
    if order == 1 && u1t.is_none() {
        return Err(Error::Config(
            "order-1 corrector needs the first-order trace".into(),
        ));
    }
    Ok(CorrectorField {
        order,
        mu,
        mu1,
        geom,
        u0,
        u1t,
        kappa,
    })
}

impl<T: Real> CorrectorField<T> {
    /// Polynomial coefficients in `xi` at fixed `s`: the order-0 quadratic
    /// coefficient and, at order 1, the cubic/quartic/quadratic trio.
    fn coeffs(&self, s: T) -> (T, T, T, T) {
        let u0 = (self.u0)(s);
        let (m, p) = (self.geom.mass_m, self.geom.perimeter);
        let half = real::<T>(0.5);
        let c0 = -m * self.mu * half / p * u0;
        if self.order == 0 {
            return (c0, T::zero(), T::zero(), T::zero());
        }
        let u1v = self.u1t.as_ref().map(|f| f(s)).unwrap_or_else(T::zero);
        let kap = (self.kappa)(s);
        let a = -kap * m * self.mu / (real::<T>(6.0) * p) * u0;
        let b = m * m * self.mu * self.mu / (real::<T>(24.0) * p * p) * u0;
        let c = self.geom.area * self.mu * half / p * u0
            - m * half / p * (self.mu * u1v + self.mu1 * u0)
            - self.geom.total_curv * m * self.mu / (real::<T>(4.0) * p * p) * u0;
        (c0, a, b, c)
    }

    pub fn eval(&self, s: T, xi: T) -> T {
        let (c0, a, b, c) = self.coeffs(s);
        let d = xi - T::one();
        if self.order == 0 {
            return c0 * d * d;
        }
        let two = real::<T>(2.0);
        let nine = real::<T>(9.0);
        a * d * d * d + (b * (xi * xi + two * xi + nine) + c) * d * d
    }

    pub fn eval_dxi(&self, s: T, xi: T) -> T {
        let (c0, a, b, c) = self.coeffs(s);
        let d = xi - T::one();
        let two = real::<T>(2.0);
        if self.order == 0 {
            return two * c0 * d;
        }
        let three = real::<T>(3.0);
        // d/dxi of (xi^2+2xi+9)(xi-1)^2 = 4 xi^3 + 12 xi - 16.
        let quart = real::<T>(4.0) * xi * xi * xi + real::<T>(12.0) * xi - real::<T>(16.0);
        three * a * d * d + b * quart + two * c * d
    }

    pub fn eval_dxi2(&self, s: T, xi: T) -> T {
        let (c0, a, b, c) = self.coeffs(s);
        let two = real::<T>(2.0);
        if self.order == 0 {
            return two * c0;
        }
        let twelve = real::<T>(12.0);
        real::<T>(6.0) * a * (xi - T::one()) + b * (twelve * xi * xi + twelve) + two * c
    }

    /// The balance the order-1 profile's second derivative must close: the
    /// curvature transport of the order-0 profile plus the mass-scaled
    /// zero-order data. Returns the value that `-d^2/dxi^2` must equal.
    pub fn order1_balance(&self, s: T, xi: T) -> Result<T> {
        if self.order != 1 {
            return Err(Error::Config("balance is defined for order 1".into()));
        }
        let u0 = (self.u0)(s);
        let u1v = self.u1t.as_ref().map(|f| f(s)).unwrap_or_else(T::zero);
        let kap = (self.kappa)(s);
        let (m, p) = (self.geom.mass_m, self.geom.perimeter);
        let half = real::<T>(0.5);
        let c0 = -m * self.mu * half / p * u0;
        let w0 = c0 * (xi - T::one()) * (xi - T::one());
        let dw0 = real::<T>(2.0) * c0 * (xi - T::one());
        Ok(-kap * dw0
            + m / p
                * (self.mu * u1v + self.mu * w0 + self.mu1 * u0
                    - xi * m * self.mu * self.mu / p * u0
                    - self.geom.area * self.mu / m * u0
                    + self.geom.total_curv * self.mu * half / p * u0))
    }

    /// Nodal extension to the mesh: profile value inside the strip, zero at
    /// depth eps and beyond.
    pub fn extension(
        &self,
        mesh: &TriMesh<T>,
        curve: &BoundaryCurve<T>,
        eps: T,
    ) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); mesh.n_nodes()];
        for (i, &node) in mesh.nodes.iter().enumerate() {
            if let Some(c) = curve.strip_project(node, eps)? {
                out[i] = self.eval(c.s, c.xi);
            }
        }
        Ok(out)
    }
}

/// Two-term prediction of one branch at a given eps: the scalar value and
/// the eigenfunction with its strip correction.
#[derive(Debug, Clone)]
pub struct Expansion<T> {
    pub lambda_pred: T,
    pub u_pred: Vec<T>,
}

pub fn expansion_predict<T: Real + 'static>(
    data: &FirstOrderData<T>,
    mesh: &TriMesh<T>,
    curve: &BoundaryCurve<T>,
    eps: T,
) -> Result<Expansion<T>> {
    if eps < T::zero() {
        return Err(Error::Config("negative eps".into()));
    }
    let lambda_pred = data.mu + eps * data.mu1;
    let mut u_pred = data.pair.u.clone();
    if eps > T::zero() {
        curve.check_eps(eps)?;
        let w = corrector(0, data, mesh, curve)?;
        let v = w.extension(mesh, curve, eps)?;
        for i in 0..u_pred.len() {
            u_pred[i] += eps * (data.u1[i] + v[i]);
        }
    }
    Ok(Expansion { lambda_pred, u_pred })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, eps_inner};
    use crate::mesh::mesh_star_domain;
    use crate::perturbed::{density_weights, make_density};
    use std::f64::consts::PI;

    fn analytic_disk_breakdown(j: usize, mass_m: f64) -> Mu1Breakdown<f64> {
        let mu = 2.0 * PI * j as f64 / mass_m;
        let pair = SteklovPair {
            mu,
            u: Vec::new(),
            boundary_norm: 1.0,
            simple_flag: false,
        };
        let ints = SteklovIntegrals {
            vol_int: 1.0 / (2.0 * j as f64 + 2.0),
            bnd_curv_int: 1.0,
        };
        let geom = GeomScalars {
            mass_m,
            area: PI,
            perimeter: 2.0 * PI,
            total_curv: 2.0 * PI,
        };
        mu1_formula(&pair, &ints, &geom).unwrap()
    }

    #[test]
    fn disk_closed_forms_agree() {
        // Independent oracle: the radial closed form 2 j mu / 3
        // + mu^2 / (2 (j + 1)) for the unit disk.
        for mass_m in [PI, 2.0 * PI] {
            for j in 1..=5usize {
                let mu = 2.0 * PI * j as f64 / mass_m;
                let oracle = 2.0 * j as f64 * mu / 3.0 + mu * mu / (2.0 * (j as f64 + 1.0));
                let got = analytic_disk_breakdown(j, mass_m);
                assert!(
                    (got.total - oracle).abs() < 1e-10,
                    "j={j} M={mass_m}: {} vs {oracle}",
                    got.total
                );
                let sum = got.area_term
                    + got.vol_term
                    + got.mu_sq_term
                    + got.curv_term
                    + got.curv_total_term;
                assert!((sum - got.total).abs() < 1e-14);
                // Unit circle: the two curvature terms cancel exactly.
                assert!((got.curv_term + got.curv_total_term).abs() < 1e-12);
            }
        }
        assert!((analytic_disk_breakdown(1, PI).total - 7.0 / 3.0).abs() < 1e-12);
        assert!((analytic_disk_breakdown(2, PI).total - 8.0).abs() < 1e-12);
    }

    #[test]
    fn formula_rejects_unnormalized_pairs() {
        let pair = SteklovPair {
            mu: 2.0,
            u: Vec::new(),
            boundary_norm: 1.01,
            simple_flag: true,
        };
        let ints = SteklovIntegrals {
            vol_int: 0.25,
            bnd_curv_int: 1.0,
        };
        let geom = GeomScalars {
            mass_m: PI,
            area: PI,
            perimeter: 2.0 * PI,
            total_curv: 2.0 * PI,
        };
        assert!(matches!(
            mu1_formula(&pair, &ints, &geom),
            Err(Error::Contract(_))
        ));
    }

    fn disk_data(n_t: usize) -> (TriMesh<f64>, BoundaryCurve<f64>, FirstOrderData<f64>) {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        let mesh = mesh_star_domain(&c, 0.05, n_t, 1, (n_t / 6).max(3)).unwrap();
        let data = first_order_data(&mesh, &c, PI, ModeSelect::DiskPair { j: 1 }).unwrap();
        (mesh, c, data)
    }

    #[test]
    fn first_order_disk_matches_seven_thirds() {
        let (mesh, c, data) = disk_data(64);
        assert!((data.mu - 2.0).abs() < 0.02);
        assert!((data.mu1 - 7.0 / 3.0).abs() < 0.02 * 7.0 / 3.0, "mu1 {}", data.mu1);

        // The nodal-data route must reproduce the closed formula.
        let n = mesh.n_nodes();
        let f: Vec<f64> = data.pair.u.iter().map(|&v| data.mu * v).collect();
        let mut g1 = vec![0.0; n];
        let mut g2 = vec![0.0; n];
        for (k, e) in mesh.boundary_edges.iter().enumerate() {
            let i = e[0] as usize;
            let coef = aux_boundary_coefficient(&data.geom, data.mu, c.curvature(mesh.boundary_s[k]));
            g1[i] = coef * data.pair.u[i];
            g2[i] = data.geom.mass_m / data.geom.perimeter * data.pair.u[i];
        }
        let lam = compatibility_lambda(&f, &g1, &g2, &data.pair, &mesh).unwrap();
        assert!(
            (lam - data.mu1).abs() < 5e-3 * data.mu1,
            "ratio route {lam} vs formula {}",
            data.mu1
        );
    }

    #[test]
    fn first_order_checks_report_the_identities() {
        let (mesh, c, data) = disk_data(48);
        let checks = first_order_checks(&data, &mesh, &c).unwrap();
        assert!(checks.compat_residual < 1e-6 * data.mu1.max(1.0));
        assert!((checks.pairing - checks.pairing_target).abs() < 1e-10);
        // Exact disk pairing value 11/12, reached at FEM accuracy.
        assert!((checks.pairing_target - 11.0 / 12.0).abs() < 0.02);
    }

    #[test]
    fn aux_solution_satisfies_system_and_pairing() {
        let (mesh, c, data) = disk_data(48);
        let lambda = aux_discrete_lambda(&data.pair, &mesh, &c, &data.geom).unwrap();
        let (op, bnd, rhs) = aux_system(&data.pair, &mesh, &c, &data.geom, lambda).unwrap();
        let au = op.apply(&data.u1);
        let r2: f64 = au
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(r2 < 1e-8 * scale.max(1.0), "weak residual {r2}");

        // Pairing condition after the kernel shift.
        let target = lambda / (2.0 * data.mu)
            + data.geom.mass_m * data.mu / (3.0 * data.geom.perimeter);
        let have = bnd.quad(&data.u1, &data.pair.u);
        assert!((have - target).abs() < 1e-10);
        // Discrete value tracks the exact 11/12 at FEM accuracy.
        assert!((have - 11.0 / 12.0).abs() < 0.02, "pairing {have}");

        // Kernel direction: adding the eigenfunction leaves the residual.
        let shifted: Vec<f64> = data
            .u1
            .iter()
            .zip(&data.pair.u)
            .map(|(a, b)| a + 0.7 * b)
            .collect();
        let au2 = op.apply(&shifted);
        let r2b: f64 = au2
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(r2b < 1e-7 * scale.max(1.0), "kernel-shifted residual {r2b}");
    }

    #[test]
    fn compatibility_trivial_cases() {
        let (mesh, _c, data) = disk_data(24);
        let n = mesh.n_nodes();
        let zero = vec![0.0; n];
        let lam = compatibility_lambda(&zero, &zero, &data.pair.u, &data.pair, &mesh).unwrap();
        assert_eq!(lam, 0.0);
        // Homogeneity: scaling g2 by c scales lambda by 1/c.
        let f: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let l1 = compatibility_lambda(&f, &zero, &data.pair.u, &data.pair, &mesh).unwrap();
        let g2c: Vec<f64> = data.pair.u.iter().map(|&v| 4.0 * v).collect();
        let l4 = compatibility_lambda(&f, &zero, &g2c, &data.pair, &mesh).unwrap();
        assert!((l1 / l4 - 4.0).abs() < 1e-12);
        // Vanishing pairing is rejected.
        assert!(matches!(
            compatibility_lambda(&f, &zero, &zero, &data.pair, &mesh),
            Err(Error::Compatibility(_))
        ));
    }

    #[test]
    fn order0_profile_invariants() {
        let geom = GeomScalars {
            mass_m: PI,
            area: PI,
            perimeter: 2.0 * PI,
            total_curv: 2.0 * PI,
        };
        let mu = 2.0;
        let w = corrector_from_traces(
            0,
            mu,
            7.0 / 3.0,
            geom,
            Box::new(|s: f64| s.cos() / PI.sqrt()),
            None,
            Box::new(|_| 1.0),
        )
        .unwrap();
        let mut state = 7u64;
        for _ in 0..50 {
            let s = crate::linalg::splitmix64(&mut state) as f64 / u64::MAX as f64 * 2.0 * PI;
            let xi = crate::linalg::splitmix64(&mut state) as f64 / u64::MAX as f64;
            let u0 = s.cos() / PI.sqrt();
            // Flat profile with zero slope at the interface.
            assert!(w.eval(s, 1.0).abs() < 1e-14);
            assert!(w.eval_dxi(s, 1.0).abs() < 1e-14);
            // The defining balance and the inflow slope.
            let load = PI * mu / (2.0 * PI) * u0;
            assert!((-w.eval_dxi2(s, xi) - load).abs() < 1e-12);
            assert!((w.eval_dxi(s, 0.0) - load).abs() < 1e-12);
        }
        // Boundary value pinned: -cos(s) / (2 sqrt(pi)) at xi = 0.
        let s = 0.7f64;
        assert!((w.eval(s, 0.0) + s.cos() / (2.0 * PI.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn order1_profile_closes_its_balance() {
        // The identity is coefficient algebra, so arbitrary smooth traces
        // exercise it fully.
        let geom = GeomScalars {
            mass_m: 2.3,
            area: 2.9,
            perimeter: 6.1,
            total_curv: 2.0 * PI,
        };
        let (mu, mu1) = (1.7, 0.9);
        let w = corrector_from_traces(
            1,
            mu,
            mu1,
            geom,
            Box::new(|s: f64| (2.0 * PI * s / 6.1).cos() + 0.3),
            Some(Box::new(|s: f64| 0.4 * (4.0 * PI * s / 6.1).sin() - 0.1)),
            Box::new(|s: f64| 1.0 + 0.2 * (2.0 * PI * s / 6.1).sin()),
        )
        .unwrap();
        let mut state = 11u64;
        for _ in 0..100 {
            let s = crate::linalg::splitmix64(&mut state) as f64 / u64::MAX as f64 * 6.1;
            let xi = crate::linalg::splitmix64(&mut state) as f64 / u64::MAX as f64;
            let lhs = -w.eval_dxi2(s, xi);
            let rhs = w.order1_balance(s, xi).unwrap();
            assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
            assert!(w.eval(s, 1.0).abs() < 1e-13);
            assert!(w.eval_dxi(s, 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn extension_is_zero_outside_the_strip() {
        let (mesh, c, data) = disk_data(32);
        let w = corrector(0, &data, &mesh, &c).unwrap();
        let eps = 0.05;
        let v = w.extension(&mesh, &c, eps).unwrap();
        let mut inside = 0usize;
        for (i, &node) in mesh.nodes.iter().enumerate() {
            let r = node[0].hypot(node[1]);
            let depth = 1.0 - r;
            if depth > eps + 1e-9 {
                assert_eq!(v[i], 0.0, "bulk node {i} got {}", v[i]);
            } else if depth < eps - 1e-9 {
                let s = node[1].atan2(node[0]).rem_euclid(2.0 * PI);
                let expect = w.eval(s, depth / eps);
                assert!((v[i] - expect).abs() < 1e-10);
                inside += 1;
            }
        }
        assert!(inside >= mesh.boundary_edges.len());
    }

    #[test]
    fn corrector_norms_scale_with_sqrt_eps() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        let eps_list = [0.2, 0.1, 0.05, 0.025];
        let mut l2 = Vec::new();
        let mut en = Vec::new();
        for &eps in &eps_list {
            let mesh = mesh_star_domain(&c, eps, 48, 2, 8).unwrap();
            let data = first_order_data(&mesh, &c, PI, ModeSelect::DiskPair { j: 1 }).unwrap();
            let w = corrector(0, &data, &mesh, &c).unwrap();
            let v = w.extension(&mesh, &c, eps).unwrap();
            let mass = assemble_plain_mass(&mesh).unwrap();
            l2.push(mass.quad(&v, &v).sqrt());
            let stiff = assemble_stiffness(&mesh).unwrap();
            let dens = make_density(&c, PI, eps).unwrap();
            let wts = density_weights(&mesh, &dens).unwrap();
            let m_rho = assemble_mass(&mesh, &wts).unwrap();
            en.push(eps_inner(&v, &v, &stiff, &m_rho).unwrap().sqrt());
        }
        let slope_l2 = (l2[0] / l2[3]).ln() / 8.0f64.ln();
        assert!((slope_l2 - 0.5).abs() < 0.15, "L2 exponent {slope_l2}");
        // sqrt(eps) * energy norm stays bounded: its fitted slope is not
        // decaying worse than eps^{-0.1}.
        let g: Vec<f64> = en
            .iter()
            .zip(&eps_list)
            .map(|(e, &x)| e * x.sqrt())
            .collect();
        let slope_g = (g[0] / g[3]).ln() / 8.0f64.ln();
        assert!(slope_g >= -0.1, "energy slope {slope_g}");
    }

    #[test]
    fn prediction_assembles_two_terms() {
        let (mesh, c, data) = disk_data(48);
        let e = expansion_predict(&data, &mesh, &c, 0.1).unwrap();
        assert!((e.lambda_pred - (data.mu + 0.1 * data.mu1)).abs() < 1e-14);
        assert!((e.lambda_pred - 2.2333).abs() < 0.02);
        let e0 = expansion_predict(&data, &mesh, &c, 0.0).unwrap();
        assert_eq!(e0.lambda_pred, data.mu);
        assert_eq!(e0.u_pred, data.pair.u);
    }

    #[test]
    fn simple_mode_rejects_degenerate_pairs() {
        let (mesh, c, _) = disk_data(24);
        assert!(matches!(
            first_order_data(&mesh, &c, PI, ModeSelect::Simple { index: 1 }),
            Err(Error::Degeneracy(_))
        ));
        assert!(matches!(
            first_order_data(&mesh, &c, PI, ModeSelect::DiskPair { j: 0 }),
            Err(Error::Config(_))
        ));
    }
}
