//! Study drivers shared by the command-line harness and the acceptance
//! suite: eigenvalue branches against their two-term prediction, from the
//! mesh pipeline and from the exact disk oracle.

use crate::asymptotics::first_order_data;
use crate::ball::{disk_lambda, disk_mu1_closed_form};
use crate::error::{Error, Result};
use crate::fitting::{fit_two_term, LineFit};
use crate::geometry::BoundaryCurve;
use crate::mesh::mesh_star_domain;
use crate::perturbed::{eigenvalue_curve, MeshParams};
use crate::quasimode::branch_select;
use crate::scalar::{real, Real};

/// One eigenvalue sample against the two-term prediction.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionRow<T> {
    pub eps: T,
    pub lambda: T,
    pub predicted: T,
    /// Exactly `lambda - predicted`, no rounding of its own.
    pub remainder: T,
}

/// An eigenvalue branch, its expansion coefficients, and the log-log fit of
/// the remainder, which should show the second-order decay.
#[derive(Debug, Clone)]
pub struct ExpansionStudy<T> {
    pub mu: T,
    pub mu1: T,
    pub rows: Vec<ExpansionRow<T>>,
    pub fit: LineFit<T>,
}

fn build_study<T: Real>(
    mu: T,
    mu1: T,
    samples: &[(T, T)],
) -> Result<ExpansionStudy<T>> {
    let rows = samples
        .iter()
        .map(|&(eps, lambda)| {
            let predicted = mu + eps * mu1;
            ExpansionRow {
                eps,
                lambda,
                predicted,
                remainder: lambda - predicted,
            }
        })
        .collect();
    let fit = fit_two_term(samples, mu, mu1)?;
    Ok(ExpansionStudy { mu, mu1, rows, fit })
}

/// Tracked mesh eigenvalues of branch `j` against the formula prediction,
/// without the remainder fit: `(mu, mu1, rows)`.
///
/// `mu` is the limit eigenvalue on the same tangential resolution, so its
/// discretization offset cancels against the one in `lambda(eps)` instead of
/// flooring the remainder. On the disk, `j` is the angular index of the
/// double pair; elsewhere it is the position in the ascending spectrum.
pub fn expansion_rows_fem<T: Real>(
    curve: &BoundaryCurve<T>,
    mass_m: T,
    j: usize,
    eps_list: &[T],
    params: MeshParams,
) -> Result<(T, T, Vec<ExpansionRow<T>>)> {
    if j == 0 {
        return Err(Error::Config("the constant branch has no expansion".into()));
    }
    let select = branch_select(curve, j);
    let track_j = match select {
        crate::asymptotics::ModeSelect::DiskPair { j } => 2 * j - 1,
        crate::asymptotics::ModeSelect::Simple { index } => index,
    };
    let seed_mesh = mesh_star_domain(
        curve,
        eps_list.first().copied().ok_or_else(|| Error::Config("empty eps list".into()))?,
        params.n_t,
        params.n_layer,
        params.n_interior,
    )?;
    let data = first_order_data(&seed_mesh, curve, mass_m, select)?;
    let branch = eigenvalue_curve(curve, mass_m, track_j, eps_list, params)?;
    let rows = branch
        .points
        .iter()
        .map(|p| {
            let predicted = data.mu + p.eps * data.mu1;
            ExpansionRow {
                eps: p.eps,
                lambda: p.lambda,
                predicted,
                remainder: p.lambda - predicted,
            }
        })
        .collect();
    Ok((data.mu, data.mu1, rows))
}

/// [`expansion_rows_fem`] plus the log-log remainder fit.
pub fn expansion_study_fem<T: Real>(
    curve: &BoundaryCurve<T>,
    mass_m: T,
    j: usize,
    eps_list: &[T],
    params: MeshParams,
) -> Result<ExpansionStudy<T>> {
    let (mu, mu1, rows) = expansion_rows_fem(curve, mass_m, j, eps_list, params)?;
    let samples: Vec<(T, T)> = rows.iter().map(|r| (r.eps, r.lambda)).collect();
    let fit = fit_two_term(&samples, mu, mu1)?;
    Ok(ExpansionStudy { mu, mu1, rows, fit })
}

/// Exact disk eigenvalues of the convergent branch at angular order `k`
/// against the closed-form prediction; fully mesh-free.
pub fn expansion_study_oracle<T: Real>(
    k: usize,
    mass_m: T,
    eps_list: &[T],
) -> Result<ExpansionStudy<T>> {
    let mu = real::<T>(2.0) * T::PI() * real(k as f64) / mass_m;
    let mu1 = disk_mu1_closed_form(k, mass_m)?;
    let mut samples = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        samples.push((eps, disk_lambda(k, 1, mass_m, eps)?));
    }
    build_study(mu, mu1, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn oracle_study_remainder_is_quadratic() {
        let study =
            expansion_study_oracle(1, PI, &[0.04f64, 0.02, 0.01, 0.005]).unwrap();
        assert_relative_eq!(study.mu, 2.0, epsilon = 1e-14);
        assert_relative_eq!(study.mu1, 7.0 / 3.0, epsilon = 1e-12);
        assert!(
            (study.fit.slope - 2.0).abs() < 0.1,
            "oracle slope {}",
            study.fit.slope
        );
        for r in &study.rows {
            assert_eq!(r.remainder, r.lambda - r.predicted);
            assert!(r.remainder > 0.0);
        }
    }

    #[test]
    fn fem_study_tracks_the_prediction_on_the_disk() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        // The collar rings must resolve the strip profile (the eigenvalue
        // carries an eps/n_layer^2 discretization offset), and the eps window
        // must sit where the quadratic term dominates the sizable cubic one;
        // wider windows honestly fit ~1.7.
        let params = MeshParams {
            n_t: 192,
            n_layer: 32,
            n_interior: 8,
        };
        let study =
            expansion_study_fem(&c, PI, 1, &[0.04f64, 0.02, 0.01, 0.005], params).unwrap();
        assert!((study.mu - 2.0).abs() < 5e-3, "mu {}", study.mu);
        assert!((study.mu1 - 7.0 / 3.0).abs() < 0.02, "mu1 {}", study.mu1);
        assert!(
            study.fit.slope > 1.7 && study.fit.slope < 2.1,
            "slope {}",
            study.fit.slope
        );
        for r in &study.rows {
            assert!(r.remainder > 0.0, "remainder {}", r.remainder);
        }
    }

    #[test]
    fn constant_branch_is_rejected() {
        let c = BoundaryCurve::<f64>::disk(1.0).unwrap();
        let params = MeshParams {
            n_t: 48,
            n_layer: 2,
            n_interior: 4,
        };
        assert!(matches!(
            expansion_study_fem(&c, PI, 0, &[0.1f64, 0.05, 0.025], params),
            Err(Error::Config(_))
        ));
    }
}
