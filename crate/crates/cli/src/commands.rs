use std::io::{BufReader, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;
use vpl_core::bounds::{self, BoundReport};
use vpl_core::geometry::{RotatingState, PolarPatch};
use vpl_core::identities::{
    identity_torsion, identity_torsion_ellipse, identity_velocity_ellipse, identity_velocity_ellipse_exact,
    identity_velocity_with, GradientSource, IdentityConfig, IdentityReport,
};
use vpl_core::potential::{grad_stream, grad_stream_direct, stream_value, stream_value_direct, QuadratureConfig};
use vpl_core::transport::{
    admissible_sweep, discrete_ot_lower_bound, loeper_lhs, transport_report, LoeperConfig, OtConfig, TransportGrid,
    TransportParams,
};
use vpl_core::vstates::{continue_from, read_jsonl, Branch, SolverConfig};

use crate::source::{config_err, io_err, output, CliError, PatchSource};

/// Outcome of a command that ran to completion.
pub enum Verdict {
    Pass,
    Fail(String),
}

fn header(command: &str, config: &impl Serialize) -> serde_json::Value {
    json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "config": config })
}

fn write_json(path: Option<&std::path::Path>, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(io_err)?;
    writeln!(w).map_err(io_err)
}

// ---------------------------------------------------------------- identities

/// Interior field used for the velocity identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FieldChoice {
    /// Closed-form ellipse field; only for ellipse and disk sources.
    Exact,
    Decomposition,
    Monotone,
    Boundary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub source: PatchSource,
    /// Defaults to the exact value for ellipses, `(m − 1)/2m` for disks and
    /// the stored value for state files.
    pub omega: Option<f64>,
    /// Bound on `|relative_residual|`.
    pub tolerance: f64,
    /// Residuals below this pass regardless of the relative value, so that
    /// exact zeros with rounding noise are accepted.
    pub abs_tolerance: f64,
    /// `None` picks `exact` for ellipses and disks, otherwise `monotone` when
    /// the patch is monotone and `boundary` when it is not.
    pub field: Option<FieldChoice>,
    pub identity: IdentityConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            source: PatchSource::default(),
            omega: None,
            tolerance: 1e-6,
            abs_tolerance: 1e-12,
            field: None,
            identity: IdentityConfig::default(),
        }
    }
}

pub fn verify_identities(cfg: VerifyConfig, out: Option<PathBuf>) -> Result<Verdict, CliError> {
    let src = cfg.source.resolve()?;
    let omega = match (cfg.omega, src.omega) {
        (Some(w), _) | (None, Some(w)) => w,
        (None, None) if src.is_disk => vpl_core::vstates::burbea_omega(src.patch.m().max(2))?,
        (None, None) => return Err(config_err("omega is required for this patch source")),
    };
    let state = RotatingState::new(src.patch.clone(), omega);
    let field = cfg.field.unwrap_or(match (&src.ellipse, src.patch.is_monotone()) {
        (Some(_), _) => FieldChoice::Exact,
        (None, true) => FieldChoice::Monotone,
        (None, false) => FieldChoice::Boundary,
    });
    let mut reports: Vec<IdentityReport<f64>> = vec![identity_torsion(&state)?];
    let velocity = match field {
        FieldChoice::Exact => {
            let e = src.ellipse.as_ref().ok_or_else(|| config_err("field 'exact' needs an ellipse or disk source"))?;
            identity_velocity_ellipse(e, &state.patch, omega, &cfg.identity)?
        }
        other => {
            let gradient = match other {
                FieldChoice::Decomposition => GradientSource::Decomposition,
                FieldChoice::Monotone => GradientSource::Monotone,
                _ => GradientSource::Boundary,
            };
            identity_velocity_with(&state, &IdentityConfig { gradient, ..cfg.identity.clone() })?
        }
    };
    reports.push(velocity);
    if let Some(e) = &src.ellipse {
        let mut t = identity_torsion_ellipse(e, omega);
        t.identity = "torsion_closed_form".into();
        let mut v = identity_velocity_ellipse_exact(e, omega);
        v.identity = "velocity_closed_form".into();
        reports.extend([t, v]);
    }
    let failing: Vec<&str> = reports
        .iter()
        .filter(|r| !(r.relative_residual.abs() < cfg.tolerance || r.residual.abs() < cfg.abs_tolerance))
        .map(|r| r.identity.as_str())
        .collect();
    let pass = failing.is_empty();
    let doc = json!({
        "header": header("verify-identities", &json!({ "resolved_omega": omega, "resolved_field": field, "settings": cfg })),
        "reports": reports,
        "pass": pass,
    });
    write_json(out.as_deref(), &doc)?;
    Ok(if pass { Verdict::Pass } else { Verdict::Fail(format!("identity residual above tolerance: {}", failing.join(", "))) })
}

// ---------------------------------------------------------------- branches

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchConfig {
    pub m: usize,
    pub solver: SolverConfig,
    /// JSON-lines branch to continue from.
    pub resume: Option<PathBuf>,
    /// Bound on the identity relative residuals at non-disk points.
    pub identity_tolerance: f64,
}

impl Default for BranchConfig {
    fn default() -> Self {
        Self { m: 3, solver: SolverConfig::default(), resume: None, identity_tolerance: 1e-4 }
    }
}

fn check_branch(b: &Branch<f64>, tol: f64) -> Vec<String> {
    let mut bad = Vec::new();
    for (i, p) in b.points.iter().enumerate().skip(1) {
        let d = &p.diagnostics;
        for (name, v) in [("torsion", d.torsion_relative_residual), ("velocity", d.velocity_relative_residual)] {
            if let Some(v) = v {
                if !(v.abs() < tol) {
                    bad.push(format!("point {i}: {name} identity relative residual {v:e}"));
                }
            }
        }
        if let Some(e) = &d.validation_error {
            bad.push(format!("point {i}: {e}"));
        }
        if !(d.r_min < 1.0 && d.r_max > 1.0) {
            bad.push(format!("point {i}: r_min < 1 < r_max violated"));
        }
    }
    bad
}

pub fn solve_branch(cfg: BranchConfig, out: Option<PathBuf>) -> Result<Verdict, CliError> {
    let existing = match &cfg.resume {
        Some(path) => {
            let f = std::fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            read_jsonl::<f64>(BufReader::new(f))?
        }
        None => Vec::new(),
    };
    let branch = continue_from(cfg.m, existing, &cfg.solver)?;
    let mut w = output(out.as_deref())?;
    let head = json!({ "header": header("solve-branch", &cfg), "stop": branch.stop, "points": branch.points.len() });
    serde_json::to_writer(&mut w, &head).map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    branch.write_jsonl(&mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    if branch.stop.is_failure() {
        return Err(CliError::Numerical(format!("branch stopped after {} points: {:?}", branch.points.len(), branch.stop)));
    }
    let bad = check_branch(&branch, cfg.identity_tolerance);
    Ok(if bad.is_empty() { Verdict::Pass } else { Verdict::Fail(bad.join("; ")) })
}

// ---------------------------------------------------------------- transport

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportConfig {
    pub source: PatchSource,
    /// Shell depth; `None` means the midpoint of the admissible interval.
    pub a: Option<f64>,
    /// Extra log-spaced admissible values of `a` to report.
    pub sweep: usize,
    pub grid: TransportGrid,
    pub loeper: LoeperConfig,
    /// Discrete optimal-transport lower bound; skipped when absent.
    pub ot: Option<OtConfig>,
    /// Bound on the Jacobian residual.
    pub jacobian_tolerance: f64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            source: PatchSource::default(),
            a: None,
            sweep: 0,
            grid: TransportGrid::default(),
            loeper: LoeperConfig::default(),
            ot: None,
            jacobian_tolerance: 1e-10,
        }
    }
}

pub fn transport(cfg: TransportConfig, out: Option<PathBuf>) -> Result<Verdict, CliError> {
    let patch = cfg.source.resolve()?.patch;
    let main = match cfg.a {
        Some(a) => TransportParams::new(&patch, a)?,
        None => TransportParams::default_for(&patch)?,
    };
    let mut values = vec![main.a];
    values.extend(admissible_sweep(&patch, cfg.sweep));
    let h2 = loeper_lhs(&patch, &cfg.loeper)?;
    let mut reports = Vec::new();
    for a in values {
        reports.push(transport_report(&patch, &TransportParams::new(&patch, a)?, &cfg.grid, &h2)?);
    }
    let ot = cfg.ot.as_ref().map(|c| discrete_ot_lower_bound(&patch, c)).transpose()?;
    let mut problems = Vec::new();
    for r in &reports {
        if !(r.jacobian_residual < cfg.jacobian_tolerance) {
            problems.push(format!("a = {}: jacobian residual {:e}", r.a, r.jacobian_residual));
        }
        if !r.loeper_holds {
            problems.push(format!("a = {}: H2 {:e} exceeds cost {:e}", r.a, r.loeper_lhs, r.cost));
        }
        if let Some(o) = &ot {
            if r.cost < o.certified_lower_bound {
                problems.push(format!("a = {}: cost below the certified OT lower bound", r.a));
            }
        }
    }
    let doc = json!({
        "header": header("transport", &cfg),
        "loeper": h2,
        "reports": reports,
        "ot": ot,
        "pass": problems.is_empty(),
    });
    write_json(out.as_deref(), &doc)?;
    Ok(if problems.is_empty() { Verdict::Pass } else { Verdict::Fail(problems.join("; ")) })
}

// ---------------------------------------------------------------- bounds

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scan {
    Outmost,
    OmegaGap,
    Linfty,
    Appendix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub scan: Scan,
    /// Semi-major axes of area-π ellipses for the outmost scan.
    pub ellipses: Vec<f64>,
    /// JSON-lines branch files.
    pub branches: Vec<PathBuf>,
    /// Fold symmetries of branches to compute on the fly.
    pub m: Vec<usize>,
    /// Branches computed here stop at `‖u‖_∞ = cap_scale/m`, in `steps` steps.
    pub cap_scale: f64,
    pub steps: usize,
    pub solver: SolverConfig,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            scan: Scan::Appendix,
            ellipses: Vec::new(),
            branches: Vec::new(),
            m: Vec::new(),
            cap_scale: 0.3,
            steps: 5,
            solver: SolverConfig::default(),
        }
    }
}

fn gather_branches(cfg: &BoundsConfig) -> Result<Vec<Branch<f64>>, CliError> {
    let mut out = Vec::new();
    for path in &cfg.branches {
        let f = std::fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let points = read_jsonl::<f64>(BufReader::new(f))?;
        let m = points.first().map(|p| p.state.patch.m()).ok_or_else(|| config_err(format!("{}: no points", path.display())))?;
        out.push(Branch { m, points, stop: vpl_core::vstates::StopReason::StepBudget });
    }
    for &m in &cfg.m {
        let cap = cfg.cap_scale / m as f64;
        let solver = SolverConfig {
            amplitude_cap: cap * (1.0 + 1e-6),
            continuation_step: Some(cap / cfg.steps.max(1) as f64),
            max_steps: cfg.steps,
            ..cfg.solver.clone()
        };
        let b = vpl_core::vstates::continue_branch::<f64>(m, &solver)?;
        if b.stop.is_failure() {
            return Err(CliError::Numerical(format!("m = {m} branch: {:?}", b.stop)));
        }
        out.push(b);
    }
    if out.is_empty() {
        return Err(config_err("this scan needs branches (files or m values)"));
    }
    Ok(out)
}

pub fn bounds_report(cfg: BoundsConfig, out: Option<PathBuf>) -> Result<Verdict, CliError> {
    let reports: Vec<BoundReport<f64>> = match cfg.scan {
        Scan::Outmost => {
            let mut r = Vec::new();
            if !cfg.ellipses.is_empty() {
                r.push(bounds::outmost_scan_ellipses(&cfg.ellipses)?);
            }
            if !cfg.branches.is_empty() || !cfg.m.is_empty() {
                let states: Vec<RotatingState<f64>> =
                    gather_branches(&cfg)?.into_iter().flat_map(|b| b.points.into_iter().map(|p| p.state)).collect();
                r.push(bounds::outmost_scan(&states)?);
            }
            if r.is_empty() {
                return Err(config_err("outmost scan needs ellipses or branches"));
            }
            r
        }
        Scan::OmegaGap => vec![bounds::omega_gap_scan(&gather_branches(&cfg)?)?],
        Scan::Linfty => bounds::linfty_scan(&gather_branches(&cfg)?)?.to_vec(),
        Scan::Appendix => bounds::appendix_inequality_probe::<f64>()?.to_vec(),
    };
    let mut w = output(out.as_deref())?;
    let summary: Vec<_> = reports
        .iter()
        .map(|r| json!({ "scan": r.scan, "empirical_constant": r.empirical_constant, "extremum": r.extremum, "notes": r.notes }))
        .collect();
    writeln!(w, "# {}", json!({ "header": header("bounds-report", &cfg) })).map_err(io_err)?;
    writeln!(w, "# {}", json!({ "summary": summary })).map_err(io_err)?;
    let mut csv = csv::Writer::from_writer(w);
    for r in &reports {
        for row in &r.rows {
            csv.serialize(row).map_err(io_err)?;
        }
    }
    csv.flush().map_err(io_err)?;
    Ok(Verdict::Pass)
}

// ---------------------------------------------------------------- stream

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StreamMethod {
    /// Boundary integrals, with the decomposition for gradients.
    Default,
    /// Local polar quadrature centred at the point.
    Direct,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StreamConfig {
    pub source: PatchSource,
    pub points: Vec<[f64; 2]>,
    pub gradient: bool,
    pub method: StreamMethod,
    pub quadrature: QuadratureConfig,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            source: PatchSource::default(),
            points: Vec::new(),
            gradient: false,
            method: StreamMethod::Default,
            quadrature: QuadratureConfig::default(),
        }
    }
}

pub fn stream_eval(cfg: StreamConfig, out: Option<PathBuf>) -> Result<Verdict, CliError> {
    if cfg.points.is_empty() {
        return Err(config_err("no evaluation points"));
    }
    let patch: PolarPatch<f64> = cfg.source.resolve()?.patch;
    let q = &cfg.quadrature;
    let mut rows = Vec::new();
    for &x in &cfg.points {
        let s = match cfg.method {
            StreamMethod::Default => stream_value(&patch, x, q)?,
            StreamMethod::Direct => stream_value_direct(&patch, x, q)?,
        };
        let mut row = json!({ "x": x, "stream": s.value, "stream_error": s.error_estimate });
        if cfg.gradient {
            let g = match cfg.method {
                StreamMethod::Default => grad_stream(&patch, x, q)?,
                StreamMethod::Direct => grad_stream_direct(&patch, x, q)?,
            };
            row["gradient"] = json!(g.value);
            row["gradient_error"] = json!(g.error_estimate);
        }
        rows.push(row);
    }
    write_json(out.as_deref(), &json!({ "header": header("stream-eval", &cfg), "values": rows }))?;
    Ok(Verdict::Pass)
}
