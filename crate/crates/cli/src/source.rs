//! Patch selection shared by the subcommands, and the exit-code mapping.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vpl_core::geometry::{normalize_area, EllipsePatch, PolarPatch, RotatingState};

pub const DEFAULT_ELLIPSE_TOL: f64 = 1e-15;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<vpl_core::Error> for CliError {
    fn from(e: vpl_core::Error) -> Self {
        use vpl_core::Error as E;
        match e {
            E::InvalidPatch(_) | E::AreaNotNormalized { .. } | E::NotMonotone(_) | E::OutOfRange(_) | E::InvalidParameter(_) => {
                Self::Config(e.to_string())
            }
            E::Quadrature { .. } | E::IllConditioned { .. } | E::BoundaryResidual { .. } | E::NoConvergence(_) | E::SingularJacobian { .. } => {
                Self::Numerical(e.to_string())
            }
        }
    }
}

pub fn config_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(msg.to_string())
}

/// Reads a JSON config file; unknown keys are rejected by the target type.
pub fn load_config<C: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<C, CliError> {
    let Some(path) = path else { return Ok(C::default()) };
    let f = File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let f = File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// File at `path`, or stdout.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => Ok(Box::new(File::create(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?)),
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

pub fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

/// Exactly one patch source. Area is normalized to π unless disabled.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchSource {
    /// Unit disk with this fold symmetry.
    pub disk: Option<usize>,
    /// Ellipse semi-axes; rescaled to area π.
    pub ellipse: Option<[f64; 2]>,
    /// `u = ε cos(mθ)` as `[m, ε]`.
    pub single_mode: Option<(usize, f64)>,
    pub patch: Option<PolarPatch<f64>>,
    pub patch_file: Option<PathBuf>,
    /// A rotating state `{patch, omega}`.
    pub state_file: Option<PathBuf>,
    /// Cosine modes for the polar graph of an ellipse; `None` picks enough
    /// for machine precision.
    pub ellipse_modes: Option<usize>,
    pub normalize: bool,
}

impl Default for PatchSource {
    fn default() -> Self {
        Self {
            disk: None,
            ellipse: None,
            single_mode: None,
            patch: None,
            patch_file: None,
            state_file: None,
            ellipse_modes: None,
            normalize: true,
        }
    }
}

/// A resolved patch with whatever exact data its source carries.
pub struct Resolved {
    pub patch: PolarPatch<f64>,
    pub ellipse: Option<EllipsePatch<f64>>,
    pub omega: Option<f64>,
    pub is_disk: bool,
}

impl PatchSource {
    fn count(&self) -> usize {
        [
            self.disk.is_some(),
            self.ellipse.is_some(),
            self.single_mode.is_some(),
            self.patch.is_some(),
            self.patch_file.is_some(),
            self.state_file.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count()
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.count() != 1 {
            return Err(config_err("exactly one patch source is required (disk, ellipse, single_mode, patch, patch_file, state_file)"));
        }
        let mut omega = None;
        let mut ellipse = None;
        let mut is_disk = false;
        let patch = if let Some(m) = self.disk {
            is_disk = true;
            ellipse = Some(EllipsePatch::new(1.0, 1.0)?);
            PolarPatch::disk(m)
        } else if let Some([a, b]) = self.ellipse {
            if !(a > 0.0 && b > 0.0) {
                return Err(config_err("ellipse semi-axes must be positive"));
            }
            let (a, b) = if a >= b { (a, b) } else { (b, a) };
            let e = if self.normalize { EllipsePatch::new(a / (a * b).sqrt(), b / (a * b).sqrt())? } else { EllipsePatch::new(a, b)? };
            let modes = self.ellipse_modes.unwrap_or_else(|| e.modes_for(DEFAULT_ELLIPSE_TOL));
            let p = e.to_polar(modes, vpl_core::geometry::DEFAULT_GRID.max(8 * modes))?;
            omega = Some(e.omega_exact());
            ellipse = Some(e);
            p
        } else if let Some((m, eps)) = self.single_mode {
            PolarPatch::single_mode(m, eps)?
        } else if let Some(p) = &self.patch {
            p.clone()
        } else if let Some(path) = &self.patch_file {
            read_json(path)?
        } else {
            let path = self.state_file.as_ref().expect("one source is set");
            let s: RotatingState<f64> = read_json(path)?;
            omega = Some(s.omega);
            s.patch
        };
        let patch = if self.normalize && !is_disk && ellipse.is_none() { normalize_area(&patch)? } else { patch };
        Ok(Resolved { patch, ellipse, omega, is_disk })
    }
}

/// Parses `"x,y,..."` into floats.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

pub fn parse_mode(s: &str) -> Result<(usize, f64), String> {
    let (m, eps) = s.split_once(',').ok_or_else(|| format!("expected M,EPS, got {s:?}"))?;
    Ok((m.trim().parse().map_err(|e| format!("{m:?}: {e}"))?, eps.trim().parse().map_err(|e| format!("{eps:?}: {e}"))?))
}
