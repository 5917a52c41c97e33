//! `vpl`: command-line front end to `vpl-core`.

mod commands;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{FieldChoice, Scan, StreamMethod, Verdict};
use source::{load_config, parse_mode, parse_pair, CliError, PatchSource};

#[derive(Parser)]
#[command(name = "vpl", version, about = "Vortex patch identities, V-states, transport and bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct SourceArgs {
    /// Unit disk with fold symmetry M.
    #[arg(long, value_name = "M")]
    disk: Option<usize>,
    /// Ellipse semi-axes A,B (rescaled to area π).
    #[arg(long, value_name = "A,B", value_parser = parse_pair, allow_hyphen_values = true)]
    ellipse: Option<[f64; 2]>,
    /// `u = ε cos(mθ)`.
    #[arg(long, value_name = "M,EPS", value_parser = parse_mode, allow_hyphen_values = true)]
    single_mode: Option<(usize, f64)>,
    /// Patch JSON `{m, coeffs, grid_size}`.
    #[arg(long)]
    patch: Option<PathBuf>,
    /// Rotating state JSON `{patch, omega}`.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Keep the patch area as given.
    #[arg(long)]
    no_normalize: bool,
}

impl SourceArgs {
    fn apply(&self, src: &mut PatchSource) {
        if self.disk.is_some() || self.ellipse.is_some() || self.single_mode.is_some() || self.patch.is_some() || self.state.is_some() {
            *src = PatchSource { ellipse_modes: src.ellipse_modes, normalize: src.normalize, ..PatchSource::default() };
            src.disk = self.disk;
            src.ellipse = self.ellipse;
            src.single_mode = self.single_mode;
            src.patch_file = self.patch.clone();
            src.state_file = self.state.clone();
        }
        if self.no_normalize {
            src.normalize = false;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the torsion and velocity identities for a rotating patch.
    VerifyIdentities {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<f64>,
        /// Relative residual tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long, value_enum)]
        field: Option<FieldChoice>,
    },
    /// Compute a V-state branch by continuation from the disk.
    SolveBranch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<usize>,
        /// Continuation steps.
        #[arg(long)]
        steps: Option<usize>,
        /// Fourier modes per state.
        #[arg(long)]
        modes: Option<usize>,
        /// Continuation step in the first coefficient.
        #[arg(long)]
        step: Option<f64>,
        /// Stop once `‖u‖_∞` exceeds this.
        #[arg(long)]
        cap: Option<f64>,
        /// Continue an existing JSON-lines branch.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Skip the per-point identity checks.
        #[arg(long)]
        no_validate: bool,
    },
    /// Radial transport map to the disk: cost, Jacobian and `H₂`.
    Transport {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: SourceArgs,
        /// Shell depth.
        #[arg(long = "a", alias = "transport-a")]
        a: Option<f64>,
        /// Extra admissible shell depths to report.
        #[arg(long)]
        sweep: Option<usize>,
        /// Also compute the discrete optimal-transport lower bound.
        #[arg(long)]
        ot: bool,
        /// OT cells per side.
        #[arg(long)]
        ot_cells: Option<usize>,
    },
    /// Empirical constants for the quantitative bounds, as CSV.
    BoundsReport {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scan: Option<Scan>,
        /// Semi-major axes of area-π ellipses.
        #[arg(long, value_delimiter = ',')]
        ellipses: Vec<f64>,
        /// JSON-lines branch files.
        #[arg(long, num_args = 1..)]
        branches: Vec<PathBuf>,
        /// Compute branches for these fold symmetries.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Stream function (and gradient) at points.
    StreamEval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: SourceArgs,
        /// Evaluation point X,Y; repeatable.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        point: Vec<[f64; 2]>,
        #[arg(long)]
        gradient: bool,
        #[arg(long, value_enum)]
        method: Option<StreamMethod>,
    },
}

fn run(cmd: Command) -> Result<Verdict, CliError> {
    match cmd {
        Command::VerifyIdentities { common, source, omega, tolerance, field } => {
            let mut cfg: commands::VerifyConfig = load_config(common.config.as_deref())?;
            source.apply(&mut cfg.source);
            cfg.omega = omega.or(cfg.omega);
            cfg.tolerance = tolerance.unwrap_or(cfg.tolerance);
            cfg.field = field.or(cfg.field);
            commands::verify_identities(cfg, common.output)
        }
        Command::SolveBranch { common, m, steps, modes, step, cap, resume, no_validate } => {
            let mut cfg: commands::BranchConfig = load_config(common.config.as_deref())?;
            cfg.m = m.unwrap_or(cfg.m);
            let s = &mut cfg.solver;
            s.max_steps = steps.unwrap_or(s.max_steps);
            s.modes = modes.unwrap_or(s.modes);
            s.continuation_step = step.or(s.continuation_step);
            s.amplitude_cap = cap.unwrap_or(s.amplitude_cap);
            s.validate = s.validate && !no_validate;
            cfg.resume = resume.or(cfg.resume);
            commands::solve_branch(cfg, common.output)
        }
        Command::Transport { common, source, a, sweep, ot, ot_cells } => {
            let mut cfg: commands::TransportConfig = load_config(common.config.as_deref())?;
            source.apply(&mut cfg.source);
            cfg.a = a.or(cfg.a);
            cfg.sweep = sweep.unwrap_or(cfg.sweep);
            if ot || ot_cells.is_some() {
                let mut o = cfg.ot.take().unwrap_or_default();
                o.cells = ot_cells.unwrap_or(o.cells);
                cfg.ot = Some(o);
            }
            commands::transport(cfg, common.output)
        }
        Command::BoundsReport { common, scan, ellipses, branches, m, steps } => {
            let mut cfg: commands::BoundsConfig = load_config(common.config.as_deref())?;
            cfg.scan = scan.unwrap_or(cfg.scan);
            if !ellipses.is_empty() {
                cfg.ellipses = ellipses;
            }
            if !branches.is_empty() {
                cfg.branches = branches;
            }
            if !m.is_empty() {
                cfg.m = m;
            }
            cfg.steps = steps.unwrap_or(cfg.steps);
            commands::bounds_report(cfg, common.output)
        }
        Command::StreamEval { common, source, point, gradient, method } => {
            let mut cfg: commands::StreamConfig = load_config(common.config.as_deref())?;
            source.apply(&mut cfg.source);
            if !point.is_empty() {
                cfg.points = point;
            }
            cfg.gradient |= gradient;
            cfg.method = method.unwrap_or(cfg.method);
            commands::stream_eval(cfg, common.output)
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("VPL_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| source::config_err(format!("VPL_THREADS={v:?} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| source::config_err(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| run(cli.command));
    match result {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
