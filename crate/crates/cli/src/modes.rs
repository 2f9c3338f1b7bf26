//! One function per subcommand, plus the shared plumbing for configs,
//! meshes, and deterministic artifact files.

use crate::config::{hex_sha256, load_config, merge_tol, CurveConfig, LoadedConfig, RunConfig};
use crate::{Cli, Cmd, Failure};
use log::info;
use serde_json::json;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use steklov_core::asymptotics::{first_order_checks, first_order_data};
use steklov_core::ball::{ball_curves, disk_lambda, BallPoint, RadialProblem};
use steklov_core::mesh::{mesh_star_domain, TriMesh};
use steklov_core::msh::{read_msh, write_msh};
use steklov_core::pipeline::{expansion_rows_fem, expansion_study_fem, ExpansionRow};
use steklov_core::perturbed::eigenvalue_curve;
use steklov_core::quasimode::{branch_select, residual_order_study};
use steklov_core::report::{ball_csv, fmt_real, neumann_csv, quasimode_csv, steklov_csv};
use steklov_core::steklov::{solve_steklov, steklov_integrals};
use steklov_core::{Curve, Error, Result};

pub fn run(cli: &Cli) -> std::result::Result<(), Failure> {
    match &cli.cmd {
        Cmd::Steklov => mode_steklov(cli).map_err(Into::into),
        Cmd::Neumann => mode_neumann(cli).map_err(Into::into),
        Cmd::Expand => mode_expand(cli).map_err(Into::into),
        Cmd::Quasimode { order } => mode_quasimode(cli, *order).map_err(Into::into),
        Cmd::Ball { mass_m, kmax, lmax, eps_grid } => {
            mode_ball(cli, *mass_m, *kmax, *lmax, eps_grid).map_err(Into::into)
        }
        Cmd::Converge => mode_converge(cli),
        Cmd::Mesh => mode_mesh(cli).map_err(Into::into),
    }
}

fn need_config(cli: &Cli, mode: &str) -> Result<LoadedConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{mode} needs --config")))?;
    // Every mode validates its overrides even when it consumes none, so a
    // typo fails loudly instead of silently changing nothing.
    let loaded = load_config(path)?;
    merge_tol(&loaded.config.tol, &cli.tol_override)?;
    Ok(loaded)
}

fn need_out<'a>(cli: &'a Cli, mode: &str) -> Result<&'a Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| Error::Config(format!("{mode} needs --out")))
}

fn no_mesh_file(cli: &Cli, mode: &str, why: &str) -> Result<()> {
    if cli.mesh_file.is_some() {
        return Err(Error::Config(format!("{mode} {why}; --mesh-file does not apply")));
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// The mesh a single-mesh mode works on: the given file, or the built-in
/// mesher at the widest strip in the eps list.
fn build_mesh(cli: &Cli, curve: &Curve, cfg: &RunConfig) -> Result<(TriMesh<f64>, String)> {
    match cli.mesh_file.as_deref() {
        Some(path) => {
            let file =
                File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mesh = read_msh::<f64, _>(BufReader::new(file))?;
            Ok((mesh, path.display().to_string()))
        }
        None => {
            let eps = cfg.eps_list[0];
            let mesh = mesh_star_domain(
                curve,
                eps,
                cfg.mesh.n_tangential,
                cfg.mesh.n_layer,
                cfg.mesh.n_interior,
            )?;
            let label = format!(
                "star nt={} nl={} ni={} eps={}",
                cfg.mesh.n_tangential,
                cfg.mesh.n_layer,
                cfg.mesh.n_interior,
                fmt_real(eps)
            );
            Ok((mesh, label))
        }
    }
}

fn base_meta(mode: &str, sha256: &str) -> Vec<(&'static str, String)> {
    vec![
        ("mode", mode.to_string()),
        ("tool_version", env!("CARGO_PKG_VERSION").to_string()),
        ("config_sha256", sha256.to_string()),
    ]
}

fn warn_threads(cli: &Cli, mode: &str) {
    if cli.threads > 1 {
        info!("{mode} runs single-threaded; --threads only splits the ball mode");
    }
}

fn mode_steklov(cli: &Cli) -> Result<()> {
    let loaded = need_config(cli, "steklov")?;
    let out = need_out(cli, "steklov")?;
    warn_threads(cli, "steklov");
    let cfg = &loaded.config;
    let curve = cfg.curve.build()?;
    let (mesh, mesh_label) = build_mesh(cli, &curve, cfg)?;
    let k = cfg.k_pairs.unwrap_or(cfg.j + 3).max(2);
    let pairs = solve_steklov(&mesh, &curve, cfg.mass_m, k)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        // Same normalization as the solver's simpleness flag.
        let mut gap = f64::INFINITY;
        if i > 0 {
            gap = gap.min((pair.mu - pairs[i - 1].mu).abs());
        }
        if i + 1 < pairs.len() {
            gap = gap.min((pairs[i + 1].mu - pair.mu).abs());
        }
        gap /= pair.mu.abs().max(1.0);
        let ints = steklov_integrals(pair, &mesh, &curve)?;
        rows.push((i, pair.mu, gap, ints.vol_int, ints.bnd_curv_int));
    }
    let mut meta = base_meta("steklov", &loaded.sha256);
    meta.push(("mass_M", fmt_real(cfg.mass_m)));
    meta.push(("mesh", mesh_label));
    write_text(out, &steklov_csv(&meta, &rows))
}

fn mode_neumann(cli: &Cli) -> Result<()> {
    let loaded = need_config(cli, "neumann")?;
    let out = need_out(cli, "neumann")?;
    no_mesh_file(cli, "neumann", "builds one layer-conforming mesh per eps")?;
    warn_threads(cli, "neumann");
    let cfg = &loaded.config;
    let curve = cfg.curve.build()?;
    let (mu, rows) = if cfg.j == 0 {
        // The constant branch: zero at every eps, so the prediction is zero
        // and the remainder is the raw discrete eigenvalue.
        let branch = eigenvalue_curve(&curve, cfg.mass_m, 0, &cfg.eps_list, cfg.mesh.params())?;
        let rows = branch
            .points
            .iter()
            .map(|p| ExpansionRow { eps: p.eps, lambda: p.lambda, predicted: 0.0, remainder: p.lambda })
            .collect();
        (0.0, rows)
    } else {
        let (mu, mu1, rows) =
            expansion_rows_fem(&curve, cfg.mass_m, cfg.j, &cfg.eps_list, cfg.mesh.params())?;
        info!("branch {} expands around mu={mu} with mu1={mu1}", cfg.j);
        (mu, rows)
    };
    let mut meta = base_meta("neumann", &loaded.sha256);
    meta.push(("mass_M", fmt_real(cfg.mass_m)));
    meta.push(("mesh", format!(
        "star nt={} nl={} ni={}",
        cfg.mesh.n_tangential, cfg.mesh.n_layer, cfg.mesh.n_interior
    )));
    write_text(out, &neumann_csv(&meta, cfg.j, mu, &rows))
}

fn mode_expand(cli: &Cli) -> Result<()> {
    let loaded = need_config(cli, "expand")?;
    let out = need_out(cli, "expand")?;
    warn_threads(cli, "expand");
    let cfg = &loaded.config;
    let curve = cfg.curve.build()?;
    let (mesh, mesh_label) = build_mesh(cli, &curve, cfg)?;
    let data = first_order_data(&mesh, &curve, cfg.mass_m, branch_select(&curve, cfg.j))?;
    let checks = first_order_checks(&data, &mesh, &curve)?;
    let report = json!({
        "mode": "expand",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": loaded.sha256,
        "mass_M": cfg.mass_m,
        "j": cfg.j,
        "mesh": mesh_label,
        "mu": data.mu,
        "mu1": data.mu1,
        "breakdown": {
            "area_term": data.breakdown.area_term,
            "vol_term": data.breakdown.vol_term,
            "mu_sq_term": data.breakdown.mu_sq_term,
            "curv_term": data.breakdown.curv_term,
            "curv_total_term": data.breakdown.curv_total_term,
            "total": data.breakdown.total,
        },
        "integrals": {
            "vol_int": data.integrals.vol_int,
            "bnd_curv_int": data.integrals.bnd_curv_int,
        },
        "geometry": {
            "area": data.geom.area,
            "perimeter": data.geom.perimeter,
            "total_curvature": data.geom.total_curv,
        },
        "pairing": {
            "value": checks.pairing,
            "target": checks.pairing_target,
            "deviation": (checks.pairing - checks.pairing_target).abs(),
        },
        "compatibility": {
            "lambda": checks.compat_lambda,
            "residual": checks.compat_residual,
        },
    });
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Io(format!("render report: {e}")))?;
    text.push('\n');
    write_text(out, &text)
}

fn mode_quasimode(cli: &Cli, order_flag: Option<u8>) -> Result<()> {
    let loaded = need_config(cli, "quasimode")?;
    let out = need_out(cli, "quasimode")?;
    no_mesh_file(cli, "quasimode", "builds one layer-conforming mesh per eps")?;
    warn_threads(cli, "quasimode");
    let cfg = &loaded.config;
    let order = order_flag.or(cfg.order).unwrap_or(0);
    let curve = cfg.curve.build()?;
    let study = residual_order_study(
        &curve,
        cfg.mass_m,
        cfg.j,
        order,
        &cfg.eps_list,
        cfg.mesh.params(),
    )?;
    let mut meta = base_meta("quasimode", &loaded.sha256);
    meta.push(("mass_M", fmt_real(cfg.mass_m)));
    meta.push(("j", cfg.j.to_string()));
    meta.push(("order", order.to_string()));
    meta.push(("residual_slope", fmt_real(study.residual_slope)));
    meta.push(("norm_slope", fmt_real(study.norm_slope)));
    meta.push(("floor_warning", (study.floor_warning as u8).to_string()));
    write_text(out, &quasimode_csv(&meta, &study))
}

/// `start:end:step`, end exclusive, all strictly positive, step > 0.
fn parse_eps_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts[..] else {
        return Err(Error::Config(format!("eps grid `{spec}` is not start:end:step")));
    };
    let parse = |name: &str, s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Config(format!("eps grid {name} `{s}` is not a number")))
    };
    let (start, end, step) = (parse("start", start)?, parse("end", end)?, parse("step", step)?);
    if !(start > 0.0 && step > 0.0 && end > start) {
        return Err(Error::Config(format!(
            "eps grid `{spec}` needs 0 < start < end and step > 0"
        )));
    }
    // floor with a relative nudge so exact multiples land inside the grid.
    let n = ((end - start) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n)
        .map(|i| start + step * i as f64)
        .filter(|&v| v < end - step * 1e-9)
        .collect();
    if grid.is_empty() {
        return Err(Error::Config(format!("eps grid `{spec}` is empty")));
    }
    Ok(grid)
}

fn mode_ball(cli: &Cli, mass_m: f64, kmax: usize, lmax: usize, eps_grid: &str) -> Result<()> {
    let out = need_out(cli, "ball")?;
    if cli.config.is_some() {
        return Err(Error::Config("ball takes direct flags, not --config".into()));
    }
    no_mesh_file(cli, "ball", "is mesh-free")?;
    if !(mass_m > 0.0 && mass_m.is_finite()) {
        return Err(Error::Config("--M must be positive".into()));
    }
    if kmax == 0 || lmax == 0 {
        return Err(Error::Config("--kmax and --lmax must be at least 1".into()));
    }
    if cli.threads == 0 {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let grid = parse_eps_grid(eps_grid)?;
    let points = if cli.threads <= 1 || kmax == 1 {
        ball_curves(mass_m, kmax, lmax, &grid)?
    } else {
        ball_parallel(mass_m, kmax, lmax, &grid, cli.threads)?
    };
    // No config file here; the hash covers the canonical parameter line so
    // reruns with the same flags stamp the same header.
    let params = format!(
        "ball M={} kmax={kmax} lmax={lmax} eps-grid={eps_grid}",
        fmt_real(mass_m)
    );
    let mut meta = base_meta("ball", &hex_sha256(params.as_bytes()));
    meta.push(("mass_M", fmt_real(mass_m)));
    meta.push(("kmax", kmax.to_string()));
    meta.push(("lmax", lmax.to_string()));
    meta.push(("eps_grid", eps_grid.to_string()));
    write_text(out, &ball_csv(&meta, &points))
}

/// Splits the angular indices across workers and reassembles the rows in
/// the same k-major order the serial path produces.
fn ball_parallel(
    mass_m: f64,
    kmax: usize,
    lmax: usize,
    grid: &[f64],
    threads: usize,
) -> Result<Vec<BallPoint<f64>>> {
    let workers = threads.min(kmax);
    let chunks: Vec<Result<Vec<(usize, Vec<BallPoint<f64>>)>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut done = Vec::new();
                    for k in (w + 1..=kmax).step_by(workers) {
                        let mut rows = Vec::with_capacity(grid.len() * lmax);
                        for &eps in grid {
                            let branches = RadialProblem::new(k, mass_m, eps)?.branches(lmax)?;
                            for (i, &lambda) in branches.iter().enumerate() {
                                rows.push(BallPoint { k, l: i + 1, eps, lambda });
                            }
                        }
                        done.push((k, rows));
                    }
                    Ok(done)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ball worker panicked")).collect()
    });
    let mut by_k: Vec<Option<Vec<BallPoint<f64>>>> = vec![None; kmax];
    for chunk in chunks {
        for (k, rows) in chunk? {
            by_k[k - 1] = Some(rows);
        }
    }
    let mut points = Vec::with_capacity(kmax * lmax * grid.len());
    for rows in by_k {
        points.extend(rows.expect("worker stride covers every k"));
    }
    Ok(points)
}

fn mode_converge(cli: &Cli) -> std::result::Result<(), Failure> {
    let loaded = need_config(cli, "converge")?;
    let out = need_out(cli, "converge")?;
    no_mesh_file(cli, "converge", "builds one layer-conforming mesh per eps")?;
    warn_threads(cli, "converge");
    let cfg = &loaded.config;
    let tol = merge_tol(&cfg.tol, &cli.tol_override)?;
    let slope_min = tol.get("slope_min").copied().unwrap_or(1.7);
    let curve = cfg.curve.build()?;
    let study = expansion_study_fem(&curve, cfg.mass_m, cfg.j, &cfg.eps_list, cfg.mesh.params())?;
    // The exact transcendental curve exists only on the unit disk; stamp it
    // into the rows there so the report carries its own ground truth.
    let oracle = match cfg.curve {
        CurveConfig::Disk { r } if (r - 1.0).abs() < 1e-12 => Some(cfg.j),
        _ => None,
    };
    let mut rows = Vec::with_capacity(study.rows.len());
    for r in &study.rows {
        let mut row = json!({
            "eps": r.eps,
            "lambda": r.lambda,
            "predicted": r.predicted,
            "remainder": r.remainder,
        });
        if let Some(k) = oracle {
            let exact = disk_lambda(k, 1, cfg.mass_m, r.eps).map_err(Failure::Core)?;
            row["oracle_lambda"] = json!(exact);
            row["oracle_gap"] = json!((r.lambda - exact).abs());
        }
        rows.push(row);
    }
    let met = study.fit.slope >= slope_min;
    let report = json!({
        "mode": "converge",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_sha256": loaded.sha256,
        "mass_M": cfg.mass_m,
        "j": cfg.j,
        "mesh": format!(
            "star nt={} nl={} ni={}",
            cfg.mesh.n_tangential, cfg.mesh.n_layer, cfg.mesh.n_interior
        ),
        "mu": study.mu,
        "mu1": study.mu1,
        "fit": {
            "slope": study.fit.slope,
            "intercept": study.fit.intercept,
            "half_width": study.fit.half_width,
        },
        "slope_min": slope_min,
        "claim_met": met,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| Failure::Core(Error::Io(format!("render report: {e}"))))?;
    text.push('\n');
    write_text(out, &text)?;
    if !met {
        return Err(Failure::Claim(format!(
            "fitted remainder slope {} is below the required {slope_min}",
            study.fit.slope
        )));
    }
    Ok(())
}

fn mode_mesh(cli: &Cli) -> Result<()> {
    let loaded = need_config(cli, "mesh")?;
    let out = need_out(cli, "mesh")?;
    no_mesh_file(cli, "mesh", "exports the built-in mesher")?;
    warn_threads(cli, "mesh");
    let cfg = &loaded.config;
    let curve = cfg.curve.build()?;
    let (mesh, _) = build_mesh(cli, &curve, cfg)?;
    let mut bytes = Vec::new();
    write_msh(&mesh, &mut bytes)?;
    std::fs::write(out, bytes).map_err(|e| Error::Io(format!("{}: {e}", out.display())))
}
