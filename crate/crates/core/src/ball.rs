//! Exact eigenvalue oracle on the unit disk.
//!
//! Separation of variables turns the two-density Neumann problem into a
//! radial ODE with piecewise-constant coefficient, solvable by Bessel
//! functions: `J_k` inside the bulk, a `J_k`/`Y_k` combination in the strip.
//! Every eigenvalue branch `lambda_{k,l}(eps)` is then a root of a 3x3
//! matching determinant, refined here to near machine precision. The module
//! also carries the closed-form first-order slope of the convergent branches,
//! which the mesh-based pipeline must reproduce.

use crate::error::{Error, Result};
use crate::fitting::richardson_limit;
use crate::scalar::{real, Real};

/// `J_k`, `Y_k` and their first derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct BesselJY<T> {
    pub j: T,
    pub y: T,
    pub jp: T,
    pub yp: T,
}

/// Below this the ascending series converges without harmful cancellation;
/// above it the large-argument trigonometric forms are already at full
/// accuracy.
const ASYMPTOTIC_CUTOFF: f64 = 14.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Bessel functions of integer order with derivatives, accurate to about
/// 1e-10 relative (to the envelope) for `x` in (0, 100].
pub fn bessel_jy<T: Real>(k: usize, x: T) -> Result<BesselJY<T>> {
    if !x.is_finite() || x <= T::zero() {
        return Err(Error::Domain(format!(
            "Bessel evaluation needs finite x > 0, got {x:?}"
        )));
    }
    let (j, j_up, y, y_up) = if x < real(ASYMPTOTIC_CUTOFF) {
        let j = series_j(k, x);
        let j_up = series_j(k + 1, x);
        let (y, y_up) = y_small(k, x);
        (j, j_up, y, y_up)
    } else {
        jy_large(k, x)
    };
    let kx = real::<T>(k as f64) / x;
    Ok(BesselJY {
        j,
        y,
        jp: kx * j - j_up,
        yp: kx * y - y_up,
    })
}

/// Ascending power series for `J_k`; every order is summed independently, so
/// three-term recurrence residuals are a genuine accuracy check.
fn series_j<T: Real>(k: usize, x: T) -> T {
    let half = x * real(0.5);
    let mut lead = T::one();
    for m in 1..=k {
        lead = lead * half / real(m as f64);
        if lead == T::zero() {
            return T::zero();
        }
    }
    let q = half * half;
    let mut term = lead;
    let mut sum = lead;
    for m in 1..400 {
        term = -term * q / real((m * (m + k)) as f64);
        sum += term;
        if term.abs() <= sum.abs() * T::epsilon() && m > 2 {
            break;
        }
    }
    sum
}

/// `Y_k` and `Y_{k+1}` for small arguments: logarithmic series at orders 0
/// and 1, then the (stable, dominant-solution) upward recurrence.
fn y_small<T: Real>(k: usize, x: T) -> (T, T) {
    let two_over_pi = real::<T>(2.0) / T::PI();
    let log_half_x = (x * real(0.5)).ln();
    let gamma = real::<T>(EULER_GAMMA);
    let q = x * x * real(0.25);

    // Y_0 = (2/pi)[(ln(x/2)+gamma) J_0 + sum_{m>=1} (-1)^{m+1} H_m q^m/(m!)^2]
    let j0 = series_j(0, x);
    let mut term = T::one();
    let mut harmonic = T::zero();
    let mut sum = T::zero();
    for m in 1..400 {
        let mf = real::<T>(m as f64);
        term = term * q / (mf * mf);
        harmonic += T::one() / mf;
        let contrib = if m % 2 == 1 { term * harmonic } else { -term * harmonic };
        sum += contrib;
        if term * harmonic <= sum.abs().max(T::one()) * T::epsilon() && m > 2 {
            break;
        }
    }
    let y0 = two_over_pi * ((log_half_x + gamma) * j0 + sum);

    // Y_1 = (2/pi) ln(x/2) J_1 - 2/(pi x)
    //       - (x/(2 pi)) sum_{m>=0} (-1)^m (H_m + H_{m+1} - 2 gamma) q^m / (m!(m+1)!)
    let j1 = series_j(1, x);
    let mut term = T::one();
    let mut h_m = T::zero();
    let mut h_m1 = T::one();
    let mut sum = h_m + h_m1 - real::<T>(2.0) * gamma;
    for m in 1..400 {
        let mf = real::<T>(m as f64);
        term = term * q / (mf * (mf + T::one()));
        h_m += T::one() / mf;
        h_m1 += T::one() / (mf + T::one());
        let coef = h_m + h_m1 - real::<T>(2.0) * gamma;
        let contrib = if m % 2 == 0 { term * coef } else { -term * coef };
        sum += contrib;
        if (term * coef).abs() <= sum.abs().max(T::one()) * T::epsilon() && m > 2 {
            break;
        }
    }
    let y1 = two_over_pi * log_half_x * j1 - two_over_pi / x
        - x / (real::<T>(2.0) * T::PI()) * sum;

    upward(k, x, y0, y1)
}

/// Upward three-term recurrence from orders 0 and 1 to orders `k`, `k+1`.
fn upward<T: Real>(k: usize, x: T, f0: T, f1: T) -> (T, T) {
    let (mut a, mut b) = (f0, f1);
    for m in 1..=k {
        let next = real::<T>(2.0 * m as f64) / x * b - a;
        a = b;
        b = next;
    }
    (a, b)
}

/// Large-argument evaluation: Hankel's trigonometric expansions at orders 0
/// and 1, plus recurrences. Returns `(J_k, J_{k+1}, Y_k, Y_{k+1})`.
fn jy_large<T: Real>(k: usize, x: T) -> (T, T, T, T) {
    let (j0, y0) = hankel(0, x);
    let (j1, y1) = hankel(1, x);
    let (yk, yk1) = upward(k, x, y0, y1);
    // Upward recurrence for J is only stable below the turning point; with
    // the cutoff at 14 that covers every order k + 1 < x. Beyond it, Miller's
    // normalized downward recurrence takes over.
    let (jk, jk1) = if real::<T>((k + 1) as f64) < x - T::one() {
        upward(k, x, j0, j1)
    } else {
        (miller_j(k, x), miller_j(k + 1, x))
    };
    (jk, jk1, yk, yk1)
}

/// One order of the Hankel asymptotic expansion: `(J_nu, Y_nu)`, `nu` 0 or 1.
fn hankel<T: Real>(nu: usize, x: T) -> (T, T) {
    let mu4 = real::<T>(4.0 * (nu * nu) as f64);
    let mut term = T::one();
    let mut p = T::one();
    let mut q = T::zero();
    let mut prev = T::infinity();
    for m in 1..40 {
        let tm = real::<T>(2.0 * m as f64 - 1.0);
        term = term * (mu4 - tm * tm) / (real::<T>(8.0 * m as f64) * x);
        if term.abs() >= prev {
            break; // asymptotic series: stop at the smallest term
        }
        prev = term.abs();
        let signed = if (m / 2) % 2 == 0 { term } else { -term };
        if m % 2 == 1 {
            q += signed;
        } else {
            p += signed;
        }
        if term.abs() <= T::epsilon() {
            break;
        }
    }
    let omega = x - (real::<T>(nu as f64) * real(0.5) + real(0.25)) * T::PI();
    let amp = (real::<T>(2.0) / (T::PI() * x)).sqrt();
    let (sin_o, cos_o) = omega.sin_cos();
    (amp * (p * cos_o - q * sin_o), amp * (p * sin_o + q * cos_o))
}

/// Miller's algorithm: downward recurrence from a padded start order,
/// normalized by `J_0 + 2 J_2 + 2 J_4 + ... = 1`.
fn miller_j<T: Real>(k: usize, x: T) -> T {
    let start = ((k as f64).max(x.as_f64()) as usize + 32) & !1;
    let big = real::<T>(1e100);
    let mut above = T::zero();
    let mut here = real::<T>(1e-30);
    let mut norm = T::zero();
    let mut out = T::zero();
    for m in (0..=start).rev() {
        let below = real::<T>(2.0 * (m + 1) as f64) / x * here - above;
        above = here;
        here = below;
        if m == k {
            out = here;
        }
        if m % 2 == 0 && m > 0 {
            norm += here + here;
        }
        if here.abs() > big {
            here = here / big;
            above = above / big;
            norm = norm / big;
            out = out / big;
        }
    }
    norm += here;
    out / norm
}

/// Radial reduction of the two-density problem at angular order `k`: bulk
/// density `eps` on `r < 1 - eps`, strip density `(M - eps |bulk|)/|strip|`
/// on the annulus, Neumann condition at `r = 1`.
#[derive(Debug, Clone, Copy)]
pub struct RadialProblem<T> {
    pub k: usize,
    pub mass_m: T,
    pub eps: T,
    pub rho_bulk: T,
    pub rho_strip: T,
    /// Matching radius `1 - eps`.
    pub r0: T,
}

impl<T: Real> RadialProblem<T> {
    /// Closed-form disk areas keep this valid on all of `eps` in (0, 1),
    /// past the collar-chart reach that limits the mesh pipeline.
    pub fn new(k: usize, mass_m: T, eps: T) -> Result<Self> {
        if mass_m <= T::zero() {
            return Err(Error::Config("mass must be positive".into()));
        }
        if !(eps > T::zero() && eps < T::one()) {
            return Err(Error::Config(format!(
                "strip width must lie in (0, 1), got {eps:?}"
            )));
        }
        let r0 = T::one() - eps;
        let strip = T::PI() * (T::one() - r0 * r0);
        let bulk = T::PI() * r0 * r0;
        let rho_strip = (mass_m - eps * bulk) / strip;
        if rho_strip <= T::zero() {
            return Err(Error::Config(format!(
                "density degenerates: strip level <= 0 at eps = {eps:?}"
            )));
        }
        Ok(RadialProblem {
            k,
            mass_m,
            eps,
            rho_bulk: eps,
            rho_strip,
            r0,
        })
    }

    /// Matching determinant whose positive roots are the eigenvalues.
    ///
    /// Rows: value and derivative continuity of `c J_k(alpha r)` against
    /// `a J_k(beta r) + b Y_k(beta r)` at `r0`, and the Neumann row at 1.
    pub fn det(&self, lambda: T) -> Result<T> {
        if lambda <= T::zero() {
            return Err(Error::Domain("determinant defined for lambda > 0".into()));
        }
        let alpha = (lambda * self.rho_bulk).sqrt();
        let beta = (lambda * self.rho_strip).sqrt();
        let inner = bessel_jy(self.k, alpha * self.r0)?;
        let mid = bessel_jy(self.k, beta * self.r0)?;
        let outer = bessel_jy(self.k, beta)?;
        let w_val = mid.j * outer.yp - mid.y * outer.jp;
        let w_der = mid.jp * outer.yp - mid.yp * outer.jp;
        Ok(alpha * inner.jp * w_val - beta * inner.j * w_der)
    }

    /// First `l_max` positive roots of the determinant, ascending.
    ///
    /// The scan walks a grid of at least 400 points per unit near the origin
    /// and stretches with the local Bessel phase speed once both arguments
    /// oscillate, so no sign change is stepped over; each bracket is then
    /// polished by Brent to 1e-12 relative.
    pub fn branches(&self, l_max: usize) -> Result<Vec<T>> {
        if l_max == 0 {
            return Err(Error::Config("need at least one branch".into()));
        }
        let floor_step = real::<T>(1.0 / 400.0);
        let budget = real::<T>(0.25);
        let cap_step = real::<T>(10.0);
        let lp = real::<T>((l_max + 2) as f64) * T::PI();
        let cap_lambda = lp * lp
            * (T::one() / (self.rho_strip * self.eps * self.eps)
                + T::one() / (self.rho_bulk * self.r0 * self.r0))
            + real(50.0);

        let mut roots = Vec::with_capacity(l_max);
        let mut lam = real::<T>(1e-6);
        let mut f_prev = self.det(lam)?;
        while roots.len() < l_max {
            let rate = (self.r0 * (self.rho_bulk / lam).sqrt()
                + self.eps * (self.rho_strip / lam).sqrt())
                * real(0.5);
            let step = (budget / rate).max(floor_step).min(cap_step);
            let lam_next = lam + step;
            let f_next = self.det(lam_next)?;
            if f_next == T::zero() {
                roots.push(lam_next);
            } else if f_prev.signum() != f_next.signum() {
                roots.push(self.brent(lam, lam_next, f_prev, f_next)?);
            }
            lam = lam_next;
            f_prev = f_next;
            if lam > cap_lambda {
                return Err(Error::Root(format!(
                    "found {} of {l_max} branches below lambda = {cap_lambda:?} (k = {}, eps = {:?})",
                    roots.len(),
                    self.k,
                    self.eps
                )));
            }
        }
        Ok(roots)
    }

    /// Brent root refinement of a sign-change bracket.
    fn brent(&self, mut a: T, mut b: T, mut fa: T, mut fb: T) -> Result<T> {
        let (mut c, mut fc) = (a, fa);
        let (mut d, mut e) = (b - a, b - a);
        for _ in 0..200 {
            if fb.abs() > fc.abs() {
                a = b;
                b = c;
                c = a;
                fa = fb;
                fb = fc;
                fc = fa;
            }
            let tol = real::<T>(2.0) * T::epsilon() * b.abs() + real(1e-13);
            let mid = (c - b) * real(0.5);
            if mid.abs() <= tol || fb == T::zero() {
                return Ok(b);
            }
            if e.abs() >= tol && fa.abs() > fb.abs() {
                // Inverse quadratic interpolation, falling back to secant.
                let s = fb / fa;
                let (mut p, mut q) = if a == c {
                    (real::<T>(2.0) * mid * s, T::one() - s)
                } else {
                    let qq = fa / fc;
                    let r = fb / fc;
                    (
                        s * (real::<T>(2.0) * mid * qq * (qq - r)
                            - (b - a) * (r - T::one())),
                        (qq - T::one()) * (r - T::one()) * (s - T::one()),
                    )
                };
                if p > T::zero() {
                    q = -q;
                }
                p = p.abs();
                let ok = real::<T>(2.0) * p
                    < (real::<T>(3.0) * mid * q - (tol * q).abs()).min((e * q).abs());
                if ok {
                    e = d;
                    d = p / q;
                } else {
                    d = mid;
                    e = mid;
                }
            } else {
                d = mid;
                e = mid;
            }
            a = b;
            fa = fb;
            b = if d.abs() > tol {
                b + d
            } else if mid > T::zero() {
                b + tol
            } else {
                b - tol
            };
            fb = self.det(b)?;
            if (fb > T::zero()) == (fc > T::zero()) {
                c = a;
                fc = fa;
                d = b - a;
                e = d;
            }
        }
        Err(Error::Root("bracket refinement did not converge".into()))
    }
}

/// The `l`-th eigenvalue branch at angular order `k`: `l = 1` converges to
/// the boundary-spectrum value `2 pi k / M`, higher `l` diverge as the strip
/// narrows.
pub fn disk_lambda<T: Real>(k: usize, l: usize, mass_m: T, eps: T) -> Result<T> {
    if l == 0 {
        return Err(Error::Config("branch index starts at 1".into()));
    }
    let problem = RadialProblem::new(k, mass_m, eps)?;
    Ok(problem.branches(l)?[l - 1])
}

/// Closed-form first-order slope of the convergent branch at angular order
/// `j`: with `mu = 2 pi j / M`, the slope is `2 j mu / 3 + mu^2 / (2(j+1))`.
pub fn disk_mu1_closed_form<T: Real>(j: usize, mass_m: T) -> Result<T> {
    if j == 0 {
        return Err(Error::Config("the constant branch has slope zero".into()));
    }
    if mass_m <= T::zero() {
        return Err(Error::Config("mass must be positive".into()));
    }
    let jf = real::<T>(j as f64);
    let mu = real::<T>(2.0) * T::PI() * jf / mass_m;
    Ok(real::<T>(2.0) / real(3.0) * jf * mu
        + mu * mu / (real::<T>(2.0) * (jf + T::one())))
}

/// First-order slope extracted from the oracle itself: Richardson limit of
/// the difference quotients `(lambda(eps) - mu) / eps` on a geometric grid.
/// Independent of [`disk_mu1_closed_form`], so the two must agree.
pub fn disk_mu1_richardson<T: Real>(k: usize, mass_m: T, eps_list: &[T]) -> Result<T> {
    if k == 0 {
        return Err(Error::Config("the constant branch has slope zero".into()));
    }
    let mu = real::<T>(2.0) * T::PI() * real(k as f64) / mass_m;
    let mut slopes = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let lambda = disk_lambda(k, 1, mass_m, eps)?;
        slopes.push((lambda - mu) / eps);
    }
    richardson_limit(eps_list, &slopes)
}

/// One sampled point of an eigenvalue branch.
#[derive(Debug, Clone, Copy)]
pub struct BallPoint<T> {
    pub k: usize,
    pub l: usize,
    pub eps: T,
    pub lambda: T,
}

/// Samples every branch `(k, l)` with `1 <= k <= k_max`, `1 <= l <= l_max`
/// over the given strip widths; rows ordered by `k`, then `eps`, then `l`.
pub fn ball_curves<T: Real>(
    mass_m: T,
    k_max: usize,
    l_max: usize,
    eps_list: &[T],
) -> Result<Vec<BallPoint<T>>> {
    if k_max == 0 || l_max == 0 {
        return Err(Error::Config("need k_max >= 1 and l_max >= 1".into()));
    }
    let mut rows = Vec::with_capacity(k_max * l_max * eps_list.len());
    for k in 1..=k_max {
        for &eps in eps_list {
            let branches = RadialProblem::new(k, mass_m, eps)?.branches(l_max)?;
            for (i, &lambda) in branches.iter().enumerate() {
                rows.push(BallPoint {
                    k,
                    l: i + 1,
                    eps,
                    lambda,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbed::make_density;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn j1_at_one_matches_reference() {
        let b = bessel_jy(1, 1.0f64).unwrap();
        assert_relative_eq!(b.j, 0.4400505857449335, epsilon = 1e-10);
    }

    #[test]
    fn j0_vanishes_at_its_first_zero() {
        let b = bessel_jy(0, 2.404825557695773f64).unwrap();
        assert!(b.j.abs() < 1e-9, "J0 at its zero: {}", b.j);
    }

    #[test]
    fn y_values_at_one_match_reference() {
        let b = bessel_jy(0, 1.0f64).unwrap();
        assert_relative_eq!(b.y, 0.08825696421567696, epsilon = 1e-10);
        let b = bessel_jy(1, 1.0f64).unwrap();
        assert_relative_eq!(b.y, -0.7812128213002887, epsilon = 1e-10);
    }

    #[test]
    fn wronskian_holds_across_orders_and_arguments() {
        // J_k Y_k' - J_k' Y_k = 2/(pi x), sampled over both algorithm
        // branches with a deterministic generator.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for k in 0..=8usize {
            for _ in 0..24 {
                let x = 0.03 + 99.9 * next();
                let b = bessel_jy(k, x).unwrap();
                let w = b.j * b.yp - b.jp * b.y;
                let exact = 2.0 / (PI * x);
                assert!(
                    (w - exact).abs() < 1e-9,
                    "Wronskian off at k={k}, x={x}: {w} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn series_orders_satisfy_three_term_recurrence() {
        // Each order is summed independently below the cutoff, so the
        // recurrence J_{k+1} = (2k/x) J_k - J_{k-1} is a real consistency
        // check of the series, not an identity of the construction.
        for &x in &[0.4f64, 2.1, 6.3, 9.7, 12.9] {
            for k in 1..=7usize {
                let a = series_j(k - 1, x);
                let b = series_j(k, x);
                let c = series_j(k + 1, x);
                let resid = c - (2.0 * k as f64 / x) * b + a;
                assert!(resid.abs() < 1e-11, "recurrence at k={k}, x={x}: {resid}");
            }
        }
    }

    #[test]
    fn branches_agree_at_the_algorithm_crossover() {
        // Taylor-step the series value across the cutoff and compare with
        // the asymptotic branch; the ODE supplies the second derivative.
        for k in [0usize, 3] {
            let (xa, xb) = (13.9995f64, 14.0005f64);
            let lo = bessel_jy(k, xa).unwrap();
            let hi = bessel_jy(k, xb).unwrap();
            let dx = xb - xa;
            let kk = (k * k) as f64;
            for (f, fp, target) in [(lo.j, lo.jp, hi.j), (lo.y, lo.yp, hi.y)] {
                let fpp = -fp / xa - (1.0 - kk / (xa * xa)) * f;
                let step = f + dx * fp + 0.5 * dx * dx * fpp;
                assert!(
                    (step - target).abs() < 1e-9,
                    "crossover mismatch at k={k}: {step} vs {target}"
                );
            }
        }
    }

    #[test]
    fn miller_matches_series_at_high_order() {
        for &(k, x) in &[(15usize, 10.0f64), (20, 13.0), (12, 5.5)] {
            let m = miller_j(k, x);
            let s = series_j(k, x);
            assert_relative_eq!(m, s, max_relative = 1e-12);
        }
    }

    #[test]
    fn x_at_or_below_zero_is_rejected() {
        assert!(matches!(bessel_jy(0, 0.0f64), Err(Error::Domain(_))));
        assert!(matches!(bessel_jy(2, -1.0f64), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_slope_reference_values() {
        let v: f64 = disk_mu1_closed_form(1, PI).unwrap();
        assert_relative_eq!(v, 7.0 / 3.0, epsilon = 1e-10);
        let v: f64 = disk_mu1_closed_form(2, PI).unwrap();
        assert_relative_eq!(v, 8.0, epsilon = 1e-10);
        for j in 1..=20 {
            for &m in &[0.7, PI, 11.0] {
                assert!(disk_mu1_closed_form::<f64>(j, m).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn radial_densities_match_the_mesh_pipeline_definition() {
        let curve = crate::geometry::BoundaryCurve::<f64>::disk(1.0).unwrap();
        for &eps in &[0.05, 0.1, 0.2] {
            let p = RadialProblem::new(1, PI, eps).unwrap();
            let d = make_density(&curve, PI, eps).unwrap();
            assert_relative_eq!(p.rho_strip, d.strip_value, epsilon = 1e-12);
            assert_relative_eq!(p.rho_bulk, d.bulk_value, epsilon = 1e-12);
        }
    }

    #[test]
    fn convergent_branch_tracks_the_two_term_prediction() {
        // lambda(eps) = 2 + (7/3) eps + O(eps^2) for k = 1, M = pi.
        let l1: f64 = disk_lambda(1, 1, PI, 0.1).unwrap();
        assert!((l1 - (2.0 + 7.0 / 30.0)).abs() < 0.02, "lambda(0.1) = {l1}");
        let l2: f64 = disk_lambda(1, 1, PI, 0.05).unwrap();
        assert!((l2 - (2.0 + 7.0 / 60.0)).abs() < 0.006, "lambda(0.05) = {l2}");
    }

    #[test]
    fn richardson_slope_agrees_with_closed_form() {
        let grid = [0.02f64, 0.01, 0.005];
        let slope = disk_mu1_richardson(1, PI, &grid).unwrap();
        assert_relative_eq!(slope, 7.0 / 3.0, max_relative = 1e-4);
        let slope = disk_mu1_richardson(2, PI, &grid).unwrap();
        let exact: f64 = disk_mu1_closed_form(2, PI).unwrap();
        assert_relative_eq!(slope, exact, max_relative = 1e-4);
    }

    #[test]
    fn branch_limit_is_the_boundary_spectrum_value() {
        // Richardson limit of lambda itself as eps -> 0: 2 pi k / M.
        let grid = [0.04f64, 0.02, 0.01, 0.005];
        for k in [1usize, 2] {
            let vals: Vec<f64> =
                grid.iter().map(|&e| disk_lambda(k, 1, PI, e).unwrap()).collect();
            let limit = richardson_limit(&grid, &vals).unwrap();
            assert_relative_eq!(limit, 2.0 * k as f64, epsilon = 1e-6);
        }
    }

    #[test]
    fn branches_are_ordered_and_positive() {
        for k in [0usize, 2] {
            let b = RadialProblem::new(k, PI, 0.1).unwrap().branches(3).unwrap();
            assert!(b[0] > 0.0);
            assert!(b[0] < b[1] && b[1] < b[2], "ordering at k={k}: {b:?}");
        }
    }

    #[test]
    fn convergent_branches_sit_above_their_limits() {
        for k in [1usize, 2, 3] {
            for &m in &[PI, 2.0 * PI] {
                for &eps in &[0.02, 0.06, 0.1, 0.14, 0.2] {
                    let lam: f64 = disk_lambda(k, 1, m, eps).unwrap();
                    let mu = 2.0 * PI * k as f64 / m;
                    assert!(lam > mu, "k={k}, M={m}, eps={eps}: {lam} <= {mu}");
                }
            }
        }
    }

    #[test]
    fn divergent_branches_fall_as_the_strip_widens() {
        // l >= 2 branches blow up as eps -> 0; on a coarse grid they must
        // decrease in eps and stay above the convergent branch.
        let p2 = |eps: f64| disk_lambda(2, 2, PI, eps).unwrap();
        let seq: Vec<f64> = [0.05, 0.1, 0.2].iter().map(|&e| p2(e)).collect();
        assert!(seq[0] > seq[1] && seq[1] > seq[2], "{seq:?}");
        for &eps in &[0.05, 0.1, 0.2] {
            assert!(disk_lambda(2, 2, PI, eps).unwrap() > disk_lambda(2, 1, PI, eps).unwrap());
        }
    }

    #[test]
    fn curve_rows_cover_the_grid_in_order() {
        let rows = ball_curves(PI, 2, 2, &[0.1f64, 0.3]).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        assert_eq!((rows[0].k, rows[0].l, rows[0].eps), (1, 1, 0.1));
        assert_eq!((rows[1].k, rows[1].l, rows[1].eps), (1, 2, 0.1));
        assert_eq!((rows[4].k, rows[4].l), (2, 1));
        for r in &rows {
            assert!(r.lambda > 0.0);
        }
    }

    #[test]
    fn inadmissible_strip_widths_are_rejected() {
        assert!(matches!(
            RadialProblem::<f64>::new(1, PI, 0.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            RadialProblem::<f64>::new(1, PI, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(disk_lambda::<f64>(1, 0, PI, 0.1), Err(Error::Config(_))));
        // Tiny mass with a wide strip drives the strip level negative:
        // M = 0.2 < eps |bulk| = 0.5 * pi/4.
        assert!(matches!(
            RadialProblem::<f64>::new(1, 0.2, 0.5),
            Err(Error::Config(_))
        ));
    }
}
