//! Log-log slope fitting and Richardson extrapolation: the two estimators
//! that turn eigenvalue sequences into observed convergence orders.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Least-squares line with a confidence half-width on the slope.
#[derive(Debug, Clone, Copy)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    /// Two standard errors of the slope; infinite when the fit has no
    /// residual degrees of freedom (2 points).
    pub half_width: T,
}

/// Ordinary least squares of `y` against `x`.
fn fit_line<T: Real>(x: &[T], y: &[T]) -> LineFit<T> {
    let n = real::<T>(x.len() as f64);
    let mx = x.iter().fold(T::zero(), |a, &b| a + b) / n;
    let my = y.iter().fold(T::zero(), |a, &b| a + b) / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for i in 0..x.len() {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let half_width = if x.len() > 2 {
        let mut ss = T::zero();
        for i in 0..x.len() {
            let r = y[i] - intercept - slope * x[i];
            ss += r * r;
        }
        let dof = real::<T>((x.len() - 2) as f64);
        real::<T>(2.0) * (ss / dof / sxx).sqrt()
    } else {
        T::infinity()
    };
    LineFit {
        slope,
        intercept,
        half_width,
    }
}

/// Slope of `log y` against `log x`. Both sequences must be positive and
/// at least two points long.
pub fn fit_loglog<T: Real>(x: &[T], y: &[T]) -> Result<LineFit<T>> {
    if x.len() != y.len() {
        return Err(Error::Shape("x and y lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 points for a slope, got {}",
            x.len()
        )));
    }
    if x.iter().any(|&v| v <= T::zero()) || y.iter().any(|&v| v <= T::zero()) {
        return Err(Error::Fit("log-log fit needs positive data".into()));
    }
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lx, &ly))
}

/// Observed order of the two-term eigenvalue expansion: fits
/// `log |lambda - mu - eps mu1|` against `log eps`.
///
/// The remainders must be uniformly signed and clear of round-off; mixed
/// signs mean the data straddles a noise floor and the order is not
/// measurable from it.
pub fn fit_two_term<T: Real>(rows: &[(T, T)], mu: T, mu1: T) -> Result<LineFit<T>> {
    if rows.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 (eps, lambda) rows, got {}",
            rows.len()
        )));
    }
    let mut eps = Vec::with_capacity(rows.len());
    let mut rem = Vec::with_capacity(rows.len());
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for &(e, lam) in rows {
        if e <= T::zero() {
            return Err(Error::Fit("eps must be positive".into()));
        }
        let r = lam - mu - e * mu1;
        let floor = real::<T>(1e-13) * (T::one() + lam.abs());
        if r.abs() <= floor {
            return Err(Error::Fit(format!(
                "remainder at eps={e:?} is at round-off; two-term model is exact there"
            )));
        }
        if r > T::zero() {
            n_pos += 1;
        } else {
            n_neg += 1;
        }
        eps.push(e);
        rem.push(r.abs());
    }
    if n_pos > 0 && n_neg > 0 {
        return Err(Error::Fit(format!(
            "mixed-sign remainders ({n_pos} positive, {n_neg} negative) straddle the noise floor"
        )));
    }
    fit_loglog(&eps, &rem)
}

/// Richardson extrapolation to `h = 0` of samples `y[i] = f(h[i])` on a
/// geometric grid, assuming an error expansion in integer powers of `h`.
/// `h` must decrease by a constant ratio.
pub fn richardson_limit<T: Real>(h: &[T], y: &[T]) -> Result<T> {
    if h.len() != y.len() {
        return Err(Error::Shape("h and y lengths differ".into()));
    }
    if h.len() < 2 {
        return Err(Error::Fit("extrapolation needs at least 2 samples".into()));
    }
    let ratio = h[0] / h[1];
    if ratio <= T::one() {
        return Err(Error::Fit("h must be strictly decreasing".into()));
    }
    for i in 1..h.len() - 1 {
        if (h[i] / h[i + 1] / ratio - T::one()).abs() > real::<T>(1e-9) {
            return Err(Error::Fit("h grid is not geometric".into()));
        }
    }
    // Column k of the tableau cancels the h^k term.
    let mut col = y.to_vec();
    let mut pow = T::one();
    for k in 1..h.len() {
        pow *= ratio;
        let denom = pow - T::one();
        for i in 0..h.len() - k {
            col[i] = col[i + 1] + (col[i + 1] - col[i]) / denom;
        }
        col.truncate(h.len() - k);
    }
    Ok(col[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_remainder_fits_slope_two() {
        let rows: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&e| (e, 3.0 + 2.0 * e + 5.0 * e * e))
            .collect();
        let fit = fit_two_term(&rows, 3.0, 2.0).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10, "slope {}", fit.slope);
        assert!((fit.intercept - 5.0f64.ln()).abs() < 1e-9);
        assert!(fit.half_width < 1e-9);
    }

    #[test]
    fn roundoff_remainders_are_rejected() {
        let rows: Vec<(f64, f64)> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| (e, 3.0 + 2.0 * e))
            .collect();
        assert!(matches!(fit_two_term(&rows, 3.0, 2.0), Err(Error::Fit(_))));
    }

    #[test]
    fn mixed_sign_remainders_are_rejected() {
        let rows = vec![(0.2, 3.0 + 0.6 + 0.01), (0.1, 3.0 + 0.3 - 0.01), (0.05, 3.0 + 0.15 + 0.01)];
        let err = fit_two_term(&rows, 3.0, 3.0).unwrap_err();
        match err {
            Error::Fit(msg) => assert!(msg.contains("mixed-sign"), "{msg}"),
            other => panic!("wrong variant {other:?}"),
        }
    }

    #[test]
    fn loglog_recovers_power_law() {
        let x = [0.5, 0.25, 0.125, 0.0625];
        let y: Vec<f64> = x.iter().map(|&v: &f64| 3.0 * v.powf(1.7)).collect();
        let fit = fit_loglog(&x, &y).unwrap();
        assert!((fit.slope - 1.7).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        // Two points: slope defined, no confidence.
        let f2 = fit_loglog(&x[..2], &y[..2]).unwrap();
        assert!((f2.slope - 1.7).abs() < 1e-12);
        assert!(f2.half_width.is_infinite());
        assert!(matches!(
            fit_loglog(&x[..1], &y[..1]),
            Err(Error::Fit(_))
        ));
        assert!(matches!(
            fit_loglog(&[1.0, -1.0], &[1.0, 1.0]),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn noisy_fit_reports_nonzero_half_width() {
        let x = [0.4, 0.2, 0.1, 0.05, 0.025];
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &v): (usize, &f64)| v * v * if i % 2 == 0 { 1.02 } else { 0.98 })
            .collect();
        let fit = fit_loglog(&x, &y).unwrap();
        assert!(fit.half_width > 1e-3);
        assert!((fit.slope - 2.0).abs() < fit.half_width);
    }

    #[test]
    fn richardson_cancels_low_order_terms() {
        let f = |h: f64| 5.0 + 3.0 * h + 2.0 * h * h + h * h * h;
        let h = [0.4, 0.2, 0.1, 0.05];
        let y: Vec<f64> = h.iter().map(|&v| f(v)).collect();
        let lim = richardson_limit(&h, &y).unwrap();
        assert!((lim - 5.0).abs() < 1e-12, "limit {lim}");
        // Two samples only cancel the linear term.
        let lim2 = richardson_limit(&h[..2], &y[..2]).unwrap();
        assert!((lim2 - 5.0).abs() < 0.5);
        assert!((lim2 - 5.0).abs() > 1e-3);
        assert!(matches!(
            richardson_limit(&[0.4, 0.2, 0.13], &[1.0, 1.0, 1.0]),
            Err(Error::Fit(_))
        ));
    }
}
