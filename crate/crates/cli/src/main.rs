//! Command line front end: parses flags, dispatches to a mode, and maps
//! failures onto process exit codes with a JSON error report on stderr.
//!
//! Exit codes: 0 success, 2 bad input (config, flags, files, geometry),
//! 3 numerical failure inside a solver, 4 a finished run whose claimed
//! convergence order was not met (the report file is still written).

mod config;
mod modes;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use steklov_core::Error;

#[derive(Parser)]
#[command(name = "steklov", version, about = "Steklov and two-density Neumann eigenvalue studies on smooth planar domains")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output artifact path.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Read the mesh from a v2.2 ASCII .msh file instead of running the
    /// built-in mesher. Only modes that work on a single fixed mesh take it.
    #[arg(long = "mesh-file", global = true, value_name = "PATH")]
    pub mesh_file: Option<PathBuf>,

    /// Worker threads; only the ball mode splits work (across k).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,

    /// Tolerance override, repeatable; wins over the config `tol` table.
    #[arg(long = "tol-override", global = true, value_name = "KEY=VALUE")]
    pub tol_override: Vec<String>,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Boundary spectrum with per-pair gaps and first-order integrals (CSV).
    Steklov,
    /// Tracked eigenvalue branch of the two-density problem per eps (CSV).
    Neumann,
    /// First-order coefficient with identity checks on one mesh (JSON).
    Expand,
    /// Quasimode residual decay across the eps list (CSV).
    Quasimode {
        /// Expansion order, 0 or 1; falls back to the config `order` field.
        #[arg(long)]
        order: Option<u8>,
    },
    /// Exact radial eigenvalue curves on the unit disk; takes direct flags
    /// instead of a config file (CSV).
    Ball {
        /// Total mass of the density.
        #[arg(long = "M")]
        mass_m: f64,
        /// Largest angular index.
        #[arg(long)]
        kmax: usize,
        /// Branches per angular index.
        #[arg(long)]
        lmax: usize,
        /// Eps grid as start:end:step, end exclusive.
        #[arg(long = "eps-grid")]
        eps_grid: String,
    },
    /// Two-term expansion with a fitted remainder order; exits 4 when the
    /// fitted slope misses the `slope_min` tolerance (JSON).
    Converge,
    /// Export the built-in layered mesh as v2.2 ASCII .msh.
    Mesh,
}

pub enum Failure {
    Core(Error),
    /// The run finished and its report is on disk, but the convergence
    /// claim it was asked to certify did not hold.
    Claim(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn describe(e: &Error) -> (&'static str, u8) {
    match e {
        Error::Config(_) => ("config", 2),
        Error::Parse { .. } => ("parse", 2),
        Error::Io(_) => ("io", 2),
        Error::Geometry(_) => ("geometry", 2),
        Error::Domain(_) => ("domain", 2),
        Error::Shape(_) => ("shape", 2),
        Error::Numerics(_) => ("numerics", 3),
        Error::Root(_) => ("root", 3),
        Error::Fit(_) => ("fit", 3),
        Error::Degeneracy(_) => ("degeneracy", 3),
        Error::Compatibility(_) => ("compatibility", 3),
        Error::Tracking(_) => ("tracking", 3),
        Error::Contract(_) => ("contract", 3),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STEKLOV_LOG", "error"))
        .format_timestamp(None)
        .init();
    match modes::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (kind, message, code) = match &failure {
                Failure::Core(e) => {
                    let (kind, code) = describe(e);
                    (kind, e.to_string(), code)
                }
                Failure::Claim(msg) => ("claim", msg.clone(), 4),
            };
            let body = serde_json::json!({
                "error": { "kind": kind, "message": message, "exit": code }
            });
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
