//! Deterministic text artifacts: CSV with a fixed column order and a
//! key-value comment header. Rendering is pure string assembly, so identical
//! inputs give identical bytes on every run and platform.

use crate::ball::BallPoint;
use crate::pipeline::ExpansionRow;
use crate::quasimode::ResidualStudy;
use crate::scalar::Real;

/// Full-precision scientific notation; the fixed width keeps files
/// byte-stable and round-trips every f64 exactly.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Assembles a CSV: `# key: value` comment lines, one header row, then data.
pub fn render_csv(meta: &[(&str, String)], columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (key, value) in meta {
        out.push_str("# ");
        out.push_str(key);
        out.push_str(": ");
        out.push_str(value);
        out.push('\n');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Eigenvalue branches of the disk oracle, one row per `(k, eps, l)` sample.
pub fn ball_csv<T: Real>(meta: &[(&str, String)], points: &[BallPoint<T>]) -> String {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.k.to_string(),
                p.l.to_string(),
                fmt_real(p.eps),
                fmt_real(p.lambda),
            ]
        })
        .collect();
    render_csv(meta, &["k", "l", "eps", "lambda"], &rows)
}

/// Branch samples of the density problem against the two-term prediction,
/// one row per eps for the tracked index `j`.
pub fn neumann_csv<T: Real>(
    meta: &[(&str, String)],
    j: usize,
    mu: T,
    rows_in: &[ExpansionRow<T>],
) -> String {
    let rows: Vec<Vec<String>> = rows_in
        .iter()
        .map(|r| {
            vec![
                fmt_real(r.eps),
                j.to_string(),
                fmt_real(r.lambda),
                fmt_real(mu),
                fmt_real(r.predicted),
                fmt_real(r.remainder),
            ]
        })
        .collect();
    render_csv(
        meta,
        &["eps", "j", "lambda", "mu", "predicted", "remainder"],
        &rows,
    )
}

/// Per-eps quasimode diagnostics. `norm_dev` is the deviation of the
/// eps-norm identity at the study's order; `floor_flag` marks samples past
/// the FEM noise floor.
pub fn quasimode_csv<T: Real>(meta: &[(&str, String)], study: &ResidualStudy<T>) -> String {
    let rows: Vec<Vec<String>> = study
        .reports
        .iter()
        .map(|r| {
            vec![
                fmt_real(r.eps),
                fmt_real(r.residual),
                fmt_real(r.nearest_gap),
                fmt_real(r.norm_check),
                (r.floor_flag as u8).to_string(),
            ]
        })
        .collect();
    render_csv(
        meta,
        &["eps", "residual", "nearest_gap", "norm_dev", "floor_flag"],
        &rows,
    )
}

/// Boundary spectrum with per-pair gaps and first-order integrals, one row
/// per eigenvalue index.
pub fn steklov_csv<T: Real>(meta: &[(&str, String)], rows_in: &[(usize, T, T, T, T)]) -> String {
    let rows: Vec<Vec<String>> = rows_in
        .iter()
        .map(|&(index, mu, gap, vol_int, bnd_curv_int)| {
            vec![
                index.to_string(),
                fmt_real(mu),
                fmt_real(gap),
                fmt_real(vol_int),
                fmt_real(bnd_curv_int),
            ]
        })
        .collect();
    render_csv(
        meta,
        &["index", "mu", "gap", "vol_int", "bnd_curv_int"],
        &rows,
    )
}
