//! JSON run configuration: parsing, validation, and the hash stamped into
//! every artifact header.

use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use steklov_core::geometry::BoundaryCurve;
use steklov_core::perturbed::MeshParams;
use steklov_core::{Error, Result};

/// Curve grammar: `{"kind":"disk","r":1.0}`, `{"kind":"ellipse","a":1.3,
/// "b":0.8}`, or `{"kind":"fourier","r0":1.0,"cos":[0,0,0.1],"sin":[]}` with
/// coefficient m at index m-1.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveConfig {
    Disk {
        r: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Fourier {
        r0: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl CurveConfig {
    pub fn build(&self) -> Result<BoundaryCurve<f64>> {
        match self {
            CurveConfig::Disk { r } => BoundaryCurve::disk(*r),
            CurveConfig::Ellipse { a, b } => BoundaryCurve::ellipse(*a, *b),
            CurveConfig::Fourier { r0, cos, sin } => {
                BoundaryCurve::fourier(*r0, cos.clone(), sin.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_tangential: usize,
    pub n_layer: usize,
    pub n_interior: usize,
}

impl MeshConfig {
    pub fn params(&self) -> MeshParams {
        MeshParams {
            n_t: self.n_tangential,
            n_layer: self.n_layer,
            n_interior: self.n_interior,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveConfig,
    #[serde(rename = "mass_M")]
    pub mass_m: f64,
    /// Eigenvalue branch index; 1 is the first nonconstant mode.
    #[serde(default = "default_j")]
    pub j: usize,
    pub eps_list: Vec<f64>,
    pub mesh: MeshConfig,
    /// Row count for the plain spectrum listing (default `j + 3`).
    #[serde(default)]
    pub k_pairs: Option<usize>,
    /// Quasimode expansion order when the flag does not say.
    #[serde(default)]
    pub order: Option<u8>,
    /// Tolerance table; `--tol-override` entries win over these.
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
}

fn default_j() -> usize {
    1
}

pub struct LoadedConfig {
    pub config: RunConfig,
    /// Hex SHA-256 of the raw config bytes.
    pub sha256: String,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes =
        std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    validate(&config)?;
    Ok(LoadedConfig {
        config,
        sha256: hex_sha256(&bytes),
    })
}

pub fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn validate(c: &RunConfig) -> Result<()> {
    if !(c.mass_m > 0.0 && c.mass_m.is_finite()) {
        return Err(Error::Config("mass_M must be positive".into()));
    }
    if c.eps_list.is_empty() {
        return Err(Error::Config("eps_list must not be empty".into()));
    }
    for w in c.eps_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Config("eps_list must be strictly decreasing".into()));
        }
    }
    if let Some(&order) = c.order.as_ref() {
        if order > 1 {
            return Err(Error::Config(format!("no order-{order} quasimode")));
        }
    }
    let curve = c.curve.build()?;
    for &eps in &c.eps_list {
        curve.check_eps(eps)?;
    }
    Ok(())
}

/// Tolerance keys any mode is allowed to consume; unknown keys are config
/// mistakes, not silently ignored ones.
const KNOWN_TOL_KEYS: &[&str] = &["slope_min"];

/// Merges `--tol-override KEY=VALUE` entries over the config table.
pub fn merge_tol(
    base: &BTreeMap<String, f64>,
    overrides: &[String],
) -> Result<BTreeMap<String, f64>> {
    let mut tol = base.clone();
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tol override `{item}` is not KEY=VALUE")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::Config(format!("tol override `{item}` has a non-numeric value")))?;
        tol.insert(key.to_string(), value);
    }
    for key in tol.keys() {
        if !KNOWN_TOL_KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown tolerance key `{key}`")));
        }
    }
    Ok(tol)
}
