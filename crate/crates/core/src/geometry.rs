//! Smooth closed boundary curves and tubular-strip coordinates.
//!
//! A [`BoundaryCurve`] is a simple, counterclockwise, arc-length-addressable
//! C^2 curve enclosing a star-shaped domain. Three families are supported:
//! circles, axis-aligned ellipses, and Fourier radius graphs
//! `r(theta) = r0 + sum_m (c_m cos m theta + s_m sin m theta)`.
//!
//! The inward coordinates used throughout the crate are `(s, t)` with
//! `psi(s, t) = gamma(s) - t * normal(s)`: `s` is arc length along the
//! boundary, `t` the depth below it. For a strip of width `eps` the scaled
//! depth is `xi = t / eps`, and the area element picks up the factor
//! `1 - t * kappa(s)` (so `eps * (1 - eps * xi * kappa)` in `(s, xi)`).
//! All of that is only valid below the reach of the curve; admissible strip
//! widths are capped at `0.9 / sup |kappa|` and checked at every entry point.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::scalar::{real, Real};

/// Planar point or vector.
pub type Point<T> = [T; 2];

#[inline]
pub(crate) fn dot<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cross<T: Real>(a: Point<T>, b: Point<T>) -> T {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn sub<T: Real>(a: Point<T>, b: Point<T>) -> Point<T> {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn norm<T: Real>(a: Point<T>) -> T {
    dot(a, a).sqrt()
}

/// Strip coordinates of a point lying within depth `eps` of the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripCoords<T> {
    /// Arc length of the closest boundary point, in `[0, len)`.
    pub s: T,
    /// Depth below the boundary, `0 <= t < eps`.
    pub t: T,
    /// Scaled depth `t / eps` in `[0, 1)`.
    pub xi: T,
    /// Area-element factor `1 - t * kappa(s)` at the point.
    pub jacobian: T,
}

/// Supported analytic curve families.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind<T: Real> {
    /// Circle of radius `r` centered at the origin.
    Disk { r: T },
    /// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
    Ellipse { a: T, b: T },
    /// Polar graph `r(theta) = r0 + sum_m (cos_coeffs[m-1] cos m theta
    /// + sin_coeffs[m-1] sin m theta)`.
    Fourier {
        r0: T,
        cos_coeffs: Vec<T>,
        sin_coeffs: Vec<T>,
    },
}

impl<T: Real> CurveKind<T> {
    fn radius_terms(r0: T, c: &[T], s: &[T], theta: T) -> (T, T, T) {
        let mut r = r0;
        let mut r1 = T::zero();
        let mut r2 = T::zero();
        let n = c.len().max(s.len());
        for m in 1..=n {
            let fm = real::<T>(m as f64);
            let (sin_m, cos_m) = (fm * theta).sin_cos();
            let cm = c.get(m - 1).copied().unwrap_or_else(T::zero);
            let sm = s.get(m - 1).copied().unwrap_or_else(T::zero);
            r += cm * cos_m + sm * sin_m;
            r1 += fm * (sm * cos_m - cm * sin_m);
            r2 -= fm * fm * (cm * cos_m + sm * sin_m);
        }
        (r, r1, r2)
    }

    /// Position at parameter `theta`.
    fn point(&self, theta: T) -> Point<T> {
        let (sin_t, cos_t) = theta.sin_cos();
        match self {
            CurveKind::Disk { r } => [*r * cos_t, *r * sin_t],
            CurveKind::Ellipse { a, b } => [*a * cos_t, *b * sin_t],
            CurveKind::Fourier {
                r0,
                cos_coeffs,
                sin_coeffs,
            } => {
                let (r, _, _) = Self::radius_terms(*r0, cos_coeffs, sin_coeffs, theta);
                [r * cos_t, r * sin_t]
            }
        }
    }

    /// First derivative with respect to `theta`.
    fn d1(&self, theta: T) -> Point<T> {
        let (sin_t, cos_t) = theta.sin_cos();
        match self {
            CurveKind::Disk { r } => [-*r * sin_t, *r * cos_t],
            CurveKind::Ellipse { a, b } => [-*a * sin_t, *b * cos_t],
            CurveKind::Fourier {
                r0,
                cos_coeffs,
                sin_coeffs,
            } => {
                let (r, r1, _) = Self::radius_terms(*r0, cos_coeffs, sin_coeffs, theta);
                [r1 * cos_t - r * sin_t, r1 * sin_t + r * cos_t]
            }
        }
    }

    /// Second derivative with respect to `theta`.
    fn d2(&self, theta: T) -> Point<T> {
        let (sin_t, cos_t) = theta.sin_cos();
        match self {
            CurveKind::Disk { r } => [-*r * cos_t, -*r * sin_t],
            CurveKind::Ellipse { a, b } => [-*a * cos_t, -*b * sin_t],
            CurveKind::Fourier {
                r0,
                cos_coeffs,
                sin_coeffs,
            } => {
                let (r, r1, r2) = Self::radius_terms(*r0, cos_coeffs, sin_coeffs, theta);
                let two = real::<T>(2.0);
                [
                    (r2 - r) * cos_t - two * r1 * sin_t,
                    (r2 - r) * sin_t + two * r1 * cos_t,
                ]
            }
        }
    }
}

/// Number of uniform parameter segments in the cumulative arc-length table.
const ARCLEN_SEGMENTS: usize = 2048;
/// Samples cached for seeding closest-point searches.
const SCAN_SAMPLES: usize = 256;
/// Samples used to validate simplicity and bound the curvature.
const VALIDATION_SAMPLES: usize = 512;
const CURVATURE_SAMPLES: usize = 4096;

/// Safety factor keeping admissible strips strictly below the reach bound
/// `1 / sup |kappa|`.
const EPS_SAFETY: f64 = 0.9;

/// A validated, arc-length-addressable simple closed curve.
#[derive(Debug, Clone)]
pub struct BoundaryCurve<T: Real> {
    kind: CurveKind<T>,
    /// Cumulative arc length at `theta_k = 2 pi k / ARCLEN_SEGMENTS`,
    /// `k = 0..=ARCLEN_SEGMENTS`.
    seg_s: Vec<T>,
    /// Cached boundary samples (uniform in `theta`) for projection seeding.
    scan: Vec<Point<T>>,
    len: T,
    area: T,
    total_curvature: T,
    sup_curvature: T,
    max_eps: T,
}

impl<T: Real> BoundaryCurve<T> {
    /// Builds and validates a curve of the given family.
    ///
    /// Rejects non-positive radii/axes, parametrizations whose speed
    /// degenerates, and sampled polygons that self-intersect or are traversed
    /// clockwise.
    pub fn new(kind: CurveKind<T>) -> Result<Self> {
        match &kind {
            CurveKind::Disk { r } => {
                if !r.is_finite() || *r <= T::zero() {
                    return Err(Error::Geometry(format!("disk radius must be positive, got {r}")));
                }
            }
            CurveKind::Ellipse { a, b } => {
                if !(a.is_finite() && b.is_finite()) || *a <= T::zero() || *b <= T::zero() {
                    return Err(Error::Geometry(format!(
                        "ellipse semi-axes must be positive, got a={a}, b={b}"
                    )));
                }
            }
            CurveKind::Fourier {
                r0,
                cos_coeffs,
                sin_coeffs,
            } => {
                let all_finite = r0.is_finite()
                    && cos_coeffs.iter().all(|c| c.is_finite())
                    && sin_coeffs.iter().all(|c| c.is_finite());
                if !all_finite || *r0 <= T::zero() {
                    return Err(Error::Geometry(
                        "fourier radius needs a positive finite r0 and finite coefficients".into(),
                    ));
                }
            }
        }

        let two_pi = T::PI() * real(2.0);

        // Speed must stay bounded away from zero for the arc-length
        // parametrization (and the curvature formula) to make sense.
        let mut max_speed = T::zero();
        let mut min_speed = T::infinity();
        for k in 0..VALIDATION_SAMPLES {
            let theta = two_pi * real(k as f64) / real(VALIDATION_SAMPLES as f64);
            let sp = norm(kind.d1(theta));
            max_speed = max_speed.max(sp);
            min_speed = min_speed.min(sp);
        }
        if !(max_speed.is_finite() && min_speed > max_speed * real(1e-8)) {
            return Err(Error::Geometry(
                "parametrization speed vanishes or is unbounded on samples".into(),
            ));
        }

        let poly: Vec<Point<T>> = (0..VALIDATION_SAMPLES)
            .map(|k| kind.point(two_pi * real(k as f64) / real(VALIDATION_SAMPLES as f64)))
            .collect();
        if polygon_self_intersects(&poly) {
            return Err(Error::Geometry(
                "sampled boundary polygon self-intersects; curve is not simple".into(),
            ));
        }
        let signed_area = polygon_signed_area(&poly);
        if signed_area <= T::zero() {
            return Err(Error::Geometry(
                "curve must be traversed counterclockwise and enclose positive area".into(),
            ));
        }

        let mut sup_curvature = T::zero();
        for k in 0..CURVATURE_SAMPLES {
            let theta = two_pi * real(k as f64) / real(CURVATURE_SAMPLES as f64);
            let kappa = curvature_theta(&kind, theta);
            if !kappa.is_finite() {
                return Err(Error::Geometry("curvature is unbounded on samples".into()));
            }
            sup_curvature = sup_curvature.max(kappa.abs());
        }
        let max_eps = if sup_curvature > real(1e-12) {
            real::<T>(EPS_SAFETY) / sup_curvature
        } else {
            T::infinity()
        };

        // Cumulative arc-length table over a uniform theta grid. Each segment
        // is integrated adaptively; the summed error stays near roundoff.
        let n = ARCLEN_SEGMENTS;
        let seg_tol = (max_speed * two_pi / real(n as f64)) * T::epsilon() * real(4.0);
        let speed = |theta: T| norm(kind.d1(theta));
        let mut seg_s = Vec::with_capacity(n + 1);
        seg_s.push(T::zero());
        let mut acc = T::zero();
        for k in 0..n {
            let a = two_pi * real(k as f64) / real(n as f64);
            let b = two_pi * real((k + 1) as f64) / real(n as f64);
            acc += adaptive_simpson(&speed, a, b, seg_tol);
            seg_s.push(acc);
        }
        let len = acc;

        let quad_tol = T::epsilon() * real(32.0) * len.max(T::one());
        let area = adaptive_simpson(
            &|theta: T| cross(kind.point(theta), kind.d1(theta)),
            T::zero(),
            two_pi,
            quad_tol,
        ) * real(0.5);
        let total_curvature = adaptive_simpson(
            &|theta: T| {
                let d1 = kind.d1(theta);
                cross(d1, kind.d2(theta)) / dot(d1, d1)
            },
            T::zero(),
            two_pi,
            quad_tol,
        );

        let scan = (0..SCAN_SAMPLES)
            .map(|k| kind.point(two_pi * real(k as f64) / real(SCAN_SAMPLES as f64)))
            .collect();

        Ok(Self {
            kind,
            seg_s,
            scan,
            len,
            area,
            total_curvature,
            sup_curvature,
            max_eps,
        })
    }

    /// Circle of radius `r`.
    pub fn disk(r: T) -> Result<Self> {
        Self::new(CurveKind::Disk { r })
    }

    /// Axis-aligned ellipse with semi-axes `a`, `b`.
    pub fn ellipse(a: T, b: T) -> Result<Self> {
        Self::new(CurveKind::Ellipse { a, b })
    }

    /// Polar Fourier graph; see [`CurveKind::Fourier`].
    pub fn fourier(r0: T, cos_coeffs: Vec<T>, sin_coeffs: Vec<T>) -> Result<Self> {
        Self::new(CurveKind::Fourier {
            r0,
            cos_coeffs,
            sin_coeffs,
        })
    }

    pub fn kind(&self) -> &CurveKind<T> {
        &self.kind
    }

    /// Total arc length of the boundary.
    pub fn len(&self) -> T {
        self.len
    }

    /// Area enclosed by the curve.
    pub fn area(&self) -> T {
        self.area
    }

    /// Integral of the signed curvature over one traversal (`2 pi` for any
    /// simple counterclockwise curve; computed, not assumed).
    pub fn total_curvature(&self) -> T {
        self.total_curvature
    }

    /// Supremum of `|kappa|` over the sampled boundary.
    pub fn sup_curvature(&self) -> T {
        self.sup_curvature
    }

    /// Largest admissible strip width, `0.9 / sup |kappa|`.
    pub fn max_eps(&self) -> T {
        self.max_eps
    }

    /// Validates a strip width against the admissible range `(0, max_eps]`.
    pub fn check_eps(&self, eps: T) -> Result<()> {
        if !(eps > T::zero() && eps <= self.max_eps) {
            return Err(Error::Geometry(format!(
                "strip width {eps} outside admissible range (0, {}]",
                self.max_eps
            )));
        }
        Ok(())
    }

    fn wrap_s(&self, s: T) -> T {
        let mut s = s % self.len;
        if s < T::zero() {
            s += self.len;
        }
        s
    }

    /// Native parameter of the boundary point at arc length `s`.
    pub fn theta_of_s(&self, s: T) -> T {
        let s = self.wrap_s(s);
        let n = ARCLEN_SEGMENTS;
        let two_pi = T::PI() * real(2.0);
        let h = two_pi / real(n as f64);
        // Locate the table segment, then polish with Newton on the cumulative
        // length; the integrand is the parametrization speed.
        let k = match self.seg_s.binary_search_by(|probe| {
            probe.partial_cmp(&s).expect("arc lengths are ordered")
        }) {
            Ok(idx) => idx.min(n - 1),
            Err(idx) => idx.saturating_sub(1).min(n - 1),
        };
        let theta_k = h * real(k as f64);
        let ds = self.seg_s[k + 1] - self.seg_s[k];
        let mut theta = theta_k + h * ((s - self.seg_s[k]) / ds).max(T::zero()).min(T::one());
        let tol = h * T::epsilon() * real(64.0);
        let seg_tol = self.len * T::epsilon();
        for _ in 0..8 {
            let arc = self.seg_s[k]
                + adaptive_simpson(&|u: T| norm(self.kind.d1(u)), theta_k, theta, seg_tol);
            let step = (arc - s) / norm(self.kind.d1(theta));
            theta -= step;
            if step.abs() <= tol {
                break;
            }
        }
        theta
    }

    /// Arc length of the boundary point at native parameter `theta`.
    pub fn s_of_theta(&self, theta: T) -> T {
        let two_pi = T::PI() * real(2.0);
        let mut theta = theta % two_pi;
        if theta < T::zero() {
            theta += two_pi;
        }
        let n = ARCLEN_SEGMENTS;
        let h = two_pi / real(n as f64);
        let kf = (theta / h).floor();
        let k = kf.to_usize().unwrap_or(0).min(n - 1);
        let theta_k = h * real(k as f64);
        let seg_tol = self.len * T::epsilon();
        self.seg_s[k] + adaptive_simpson(&|u: T| norm(self.kind.d1(u)), theta_k, theta, seg_tol)
    }

    /// Boundary point at arc length `s`.
    pub fn gamma(&self, s: T) -> Point<T> {
        self.kind.point(self.theta_of_s(s))
    }

    /// Unit tangent at arc length `s` (counterclockwise direction).
    pub fn tangent(&self, s: T) -> Point<T> {
        let d1 = self.kind.d1(self.theta_of_s(s));
        let sp = norm(d1);
        [d1[0] / sp, d1[1] / sp]
    }

    /// Outward unit normal at arc length `s`.
    pub fn normal(&self, s: T) -> Point<T> {
        let t = self.tangent(s);
        [t[1], -t[0]]
    }

    /// Signed curvature at arc length `s` (positive where the domain is
    /// locally convex; identically `1/r` on a disk of radius `r`).
    pub fn curvature(&self, s: T) -> T {
        curvature_theta(&self.kind, self.theta_of_s(s))
    }

    /// Inward strip chart `psi(s, t) = gamma(s) - t * normal(s)`.
    pub fn psi(&self, s: T, t: T) -> Point<T> {
        let theta = self.theta_of_s(s);
        let p = self.kind.point(theta);
        let d1 = self.kind.d1(theta);
        let sp = norm(d1);
        let nu = [d1[1] / sp, -d1[0] / sp];
        [p[0] - t * nu[0], p[1] - t * nu[1]]
    }

    /// Projects `x` onto strip coordinates if it lies within depth `eps` of
    /// the boundary (on the enclosed side); `None` otherwise.
    ///
    /// The closest-point parameter is seeded from cached boundary samples and
    /// polished with Newton on the stationarity condition
    /// `(x - gamma(theta)) . gamma'(theta) = 0`, which is uniquely solvable
    /// below the reach.
    pub fn strip_project(&self, x: Point<T>, eps: T) -> Result<Option<StripCoords<T>>> {
        self.check_eps(eps)?;
        let Some((theta, t)) = self.project_with_cap(x, eps)? else {
            return Ok(None);
        };
        // Open strip: points at depth eps (the conforming mesh ring) belong
        // to the bulk. The guard bands absorb the roundoff in t itself; a
        // node sitting exactly on the boundary can report depth -1 ulp.
        let edge = eps * (T::one() - T::epsilon() * real(4096.0));
        let slack = eps * T::epsilon() * real(4096.0);
        if !(t >= -slack && t < edge) {
            return Ok(None);
        }
        let t = t.max(T::zero());
        let s = self.wrap_s(self.s_of_theta(theta));
        let kappa = curvature_theta(&self.kind, theta);
        Ok(Some(StripCoords {
            s,
            t,
            xi: t / eps,
            jacobian: T::one() - t * kappa,
        }))
    }

    /// Depth of `x` below the boundary when `x` lies within the curve's
    /// trusted collar (depth at most [`Self::max_eps`]); `None` for deeper or
    /// exterior points. Points on the boundary itself report depth zero.
    pub fn depth_within_reach(&self, x: Point<T>) -> Result<Option<T>> {
        let cap = self.max_eps;
        let Some((_, t)) = self.project_with_cap(x, cap)? else {
            return Ok(None);
        };
        let slack = cap * T::epsilon() * real(4096.0);
        if t >= -slack && t <= cap {
            Ok(Some(t.max(T::zero())))
        } else {
            Ok(None)
        }
    }

    /// Closest-point solve shared by the strip chart and the depth probe.
    ///
    /// Seeds Newton on `(x - gamma(theta)) . gamma'(theta) = 0` from cached
    /// boundary samples, which is uniquely solvable below the reach. Points
    /// whose sampled distance already exceeds `cap` are rejected cheaply.
    fn project_with_cap(&self, x: Point<T>, cap: T) -> Result<Option<(T, T)>> {
        let two_pi = T::PI() * real(2.0);

        let mut best = 0usize;
        let mut best_d2 = T::infinity();
        for (k, p) in self.scan.iter().enumerate() {
            let d = sub(x, *p);
            let d2 = dot(d, d);
            if d2 < best_d2 {
                best_d2 = d2;
                best = k;
            }
        }
        // Sampled distance is within half a sample gap of the true distance.
        let gap = self.len / real(SCAN_SAMPLES as f64);
        if best_d2.sqrt() - gap * real(0.5) > cap {
            return Ok(None);
        }

        let mut theta = two_pi * real(best as f64) / real(SCAN_SAMPLES as f64);
        let tol = two_pi * T::epsilon() * real(64.0);
        let mut converged = false;
        for _ in 0..32 {
            let p = self.kind.point(theta);
            let d1 = self.kind.d1(theta);
            let d2v = self.kind.d2(theta);
            let r = sub(x, p);
            let g = dot(r, d1);
            let gp = dot(r, d2v) - dot(d1, d1);
            let step = g / gp;
            theta -= step;
            if step.abs() <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerics(
                "closest-point iteration on the boundary did not converge".into(),
            ));
        }

        let p = self.kind.point(theta);
        let d1 = self.kind.d1(theta);
        let sp = norm(d1);
        let nu = [d1[1] / sp, -d1[0] / sp];
        let diff = sub(p, x);
        Ok(Some((theta, dot(diff, nu))))
    }

    /// Area of the strip `{ 0 < dist(x, boundary) < eps }` inside the domain:
    /// `eps * len - eps^2 * total_curvature / 2`, exact below the reach.
    pub fn strip_area(&self, eps: T) -> Result<T> {
        self.check_eps(eps)?;
        Ok(eps * self.len - eps * eps * self.total_curvature * real(0.5))
    }
}

fn curvature_theta<T: Real>(kind: &CurveKind<T>, theta: T) -> T {
    let d1 = kind.d1(theta);
    let d2 = kind.d2(theta);
    let sp2 = dot(d1, d1);
    cross(d1, d2) / (sp2 * sp2.sqrt())
}

fn polygon_signed_area<T: Real>(poly: &[Point<T>]) -> T {
    let n = poly.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc += cross(poly[i], poly[(i + 1) % n]);
    }
    acc * real(0.5)
}

fn polygon_self_intersects<T: Real>(poly: &[Point<T>]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a1, a2) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 2)..n {
            // Skip adjacent segments (shared vertex), including the wrap pair.
            if i == 0 && j == n - 1 {
                continue;
            }
            let (b1, b2) = (poly[j], poly[(j + 1) % n]);
            if segments_properly_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}

fn segments_properly_intersect<T: Real>(p1: Point<T>, p2: Point<T>, p3: Point<T>, p4: Point<T>) -> bool {
    let d1 = cross(sub(p4, p3), sub(p1, p3));
    let d2 = cross(sub(p4, p3), sub(p2, p3));
    let d3 = cross(sub(p2, p1), sub(p3, p1));
    let d4 = cross(sub(p2, p1), sub(p4, p1));
    ((d1 > T::zero() && d2 < T::zero()) || (d1 < T::zero() && d2 > T::zero()))
        && ((d3 > T::zero() && d4 < T::zero()) || (d3 < T::zero() && d4 > T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TWO_PI: f64 = std::f64::consts::TAU;

    /// Independent arc-length oracle: composite Simpson with step doubling
    /// until two consecutive refinements agree to 1e-13.
    fn arclen_oracle(speed: impl Fn(f64) -> f64) -> f64 {
        let mut n = 64;
        let mut prev = f64::INFINITY;
        loop {
            let h = TWO_PI / n as f64;
            let mut acc = speed(0.0) + speed(TWO_PI);
            for k in 1..n {
                let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += w * speed(k as f64 * h);
            }
            let val = acc * h / 3.0;
            if (val - prev).abs() < 1e-13 {
                return val;
            }
            prev = val;
            n *= 2;
            assert!(n <= 1 << 22, "oracle failed to converge");
        }
    }

    #[test]
    fn disk_exact_quantities() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        assert_relative_eq!(c.len(), TWO_PI, epsilon = 1e-12);
        assert_relative_eq!(c.area(), std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(c.total_curvature(), TWO_PI, epsilon = 1e-12);
        assert_relative_eq!(c.curvature(1.234), 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.max_eps(), 0.9, epsilon = 1e-9);

        let g = c.gamma(std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(g[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 1.0, epsilon = 1e-12);
        let nu = c.normal(0.0);
        assert_relative_eq!(nu[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(nu[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn disk_strip_projection_known_point() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        let sc = c.strip_project([0.95, 0.0], 0.1).unwrap().unwrap();
        assert_relative_eq!(sc.s, 0.0, epsilon = 1e-12);
        assert_relative_eq!(sc.t, 0.05, epsilon = 1e-12);
        assert_relative_eq!(sc.xi, 0.5, epsilon = 1e-12);
        assert_relative_eq!(sc.jacobian, 0.95, epsilon = 1e-12);
    }

    #[test]
    fn disk_strip_area_closed_form() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        // Annulus 0.9 < r < 1 has area pi (1 - 0.81) = 0.19 pi.
        assert_relative_eq!(
            c.strip_area(0.1).unwrap(),
            0.19 * std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn points_outside_strip_are_rejected() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        assert!(c.strip_project([0.0, 0.0], 0.1).unwrap().is_none());
        assert!(c.strip_project([0.85, 0.0], 0.1).unwrap().is_none());
        // Depth exactly eps lies on the closed edge of the strip: excluded.
        assert!(c.strip_project([0.9, 0.0], 0.1).unwrap().is_none());
        // Outside the domain entirely.
        assert!(c.strip_project([1.05, 0.0], 0.1).unwrap().is_none());
    }

    #[test]
    fn boundary_node_rounding_above_radius_stays_in_strip() {
        // Mesh boundary nodes can round a few ulp outside the curve; such a
        // node must still project to the strip edge at depth zero, not None.
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        let th = 2.0 * std::f64::consts::PI * 11.0 / 192.0;
        let r = 1.0 + 2.0 * f64::EPSILON;
        let x = [r * th.cos(), r * th.sin()];
        let sc = c.strip_project(x, 0.1).unwrap().expect("boundary node");
        assert_eq!(sc.t, 0.0);
        assert_eq!(sc.xi, 0.0);
        assert_relative_eq!(sc.s, th, epsilon = 1e-12);
    }

    #[test]
    fn inadmissible_eps_is_an_error() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        assert!(matches!(c.strip_project([0.5, 0.0], 0.95), Err(Error::Geometry(_))));
        assert!(matches!(c.strip_area(0.0), Err(Error::Geometry(_))));
        assert!(matches!(c.strip_area(-0.1), Err(Error::Geometry(_))));
    }

    #[test]
    fn ellipse_arclength_matches_oracle() {
        let (a, b) = (1.3, 0.8);
        let c = BoundaryCurve::<f64>::ellipse(a, b).unwrap();
        let oracle = arclen_oracle(|th| {
            let (s, co) = th.sin_cos();
            (a * a * s * s + b * b * co * co).sqrt()
        });
        assert_relative_eq!(c.len(), oracle, epsilon = 1e-10);
        assert_relative_eq!(c.area(), std::f64::consts::PI * a * b, epsilon = 1e-10);
        assert_relative_eq!(c.total_curvature(), TWO_PI, epsilon = 1e-10);
    }

    #[test]
    fn ellipse_curvature_extremes() {
        let (a, b) = (1.3, 0.8);
        let c = BoundaryCurve::<f64>::ellipse(a, b).unwrap();
        // kappa = a b / (a^2 sin^2 + b^2 cos^2)^(3/2); max at theta = 0.
        let kmax = a / (b * b);
        assert_relative_eq!(c.curvature(0.0), kmax, epsilon = 1e-10);
        assert_relative_eq!(c.sup_curvature(), kmax, epsilon = 1e-6);
        assert_relative_eq!(c.max_eps(), 0.9 / kmax, epsilon = 1e-6);
    }

    #[test]
    fn fourier_flower_is_valid() {
        let c = BoundaryCurve::<f64>::fourier(1.0, vec![0.0, 0.0, 0.1], vec![]).unwrap();
        assert_relative_eq!(c.total_curvature(), TWO_PI, epsilon = 1e-10);
        assert!(c.len() > TWO_PI);
        // r(theta) = 1 + 0.1 cos 3theta encloses slightly more than the unit
        // disk: area = pi (1 + 0.01/2).
        assert_relative_eq!(c.area(), std::f64::consts::PI * 1.005, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_curves_are_rejected() {
        assert!(matches!(
            BoundaryCurve::<f64>::disk(-1.0),
            Err(Error::Geometry(_))
        ));
        // Radius dips through zero: the sampled polygon self-intersects (or
        // the speed degenerates); either way construction must fail.
        assert!(BoundaryCurve::<f64>::fourier(1.0, vec![0.0, 1.4], vec![]).is_err());
    }

    #[test]
    fn arclength_inversion_round_trips() {
        let c = BoundaryCurve::<f64>::ellipse(1.3, 0.8).unwrap();
        for k in 0..23 {
            let s = c.len() * k as f64 / 23.0;
            let theta = c.theta_of_s(s);
            assert_relative_eq!(c.s_of_theta(theta), s, epsilon = 1e-11, max_relative = 1e-11);
        }
    }

    #[test]
    fn strip_chart_jacobian_matches_finite_differences() {
        let c = BoundaryCurve::<f64>::ellipse(1.3, 0.8).unwrap();
        let eps = 0.2;
        let h = 1e-5;
        let mut state = 0x5EED_u64;
        for _ in 0..100 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = (state >> 11) as f64 / (1u64 << 53) as f64;
            let s = u * c.len();
            let xi = 0.05 + 0.9 * v;
            let t = eps * xi;

            let dpds = {
                let p1 = c.psi(s + h, t);
                let p0 = c.psi(s - h, t);
                [(p1[0] - p0[0]) / (2.0 * h), (p1[1] - p0[1]) / (2.0 * h)]
            };
            let dpdt = {
                let p1 = c.psi(s, t + h);
                let p0 = c.psi(s, t - h);
                [(p1[0] - p0[0]) / (2.0 * h), (p1[1] - p0[1]) / (2.0 * h)]
            };
            let det = (dpds[0] * dpdt[1] - dpds[1] * dpdt[0]).abs();
            let expected = 1.0 - t * c.curvature(s);
            assert_relative_eq!(det, expected, epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    fn curve_strategy() -> impl Strategy<Value = BoundaryCurve<f64>> {
        prop_oneof![
            Just(BoundaryCurve::disk(1.0).unwrap()),
            Just(BoundaryCurve::ellipse(1.3, 0.8).unwrap()),
            Just(BoundaryCurve::fourier(1.0, vec![0.0, 0.0, 0.1], vec![]).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// psi followed by strip_project recovers (s, t) within the strip.
        #[test]
        fn strip_round_trip(curve in curve_strategy(), su in 0.0..1.0f64, xi in 0.01..0.99f64) {
            let eps = 0.8 * curve.max_eps().min(0.5);
            let s = su * curve.len();
            let t = eps * xi;
            let x = curve.psi(s, t);
            let sc = curve.strip_project(x, eps).unwrap().expect("point lies inside the strip");
            let mut ds = (sc.s - s).abs();
            ds = ds.min(curve.len() - ds);
            prop_assert!(ds <= 1e-9 * curve.len());
            prop_assert!((sc.t - t).abs() <= 1e-10);
            prop_assert!((sc.jacobian - (1.0 - t * curve.curvature(s))).abs() <= 1e-8);
        }
    }
}
