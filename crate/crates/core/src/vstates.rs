//! m-fold rotating patches as zeros of `Ψ = ψ − Ω|x|²/2 − const` on `∂D`.
//!
//! Unknowns are the cosine amplitudes `a₂ … a_N` and `Ω` with `a₁` pinned;
//! `a₀` is eliminated in closed form so every iterate has area exactly π.
//! Collocation nodes `θ_j = (j − ½)π/(mJ)` are a subset of a uniform
//! boundary grid, so `ψ` at all of them comes from one Kress product rule.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{area, require_unit_area, PolarPatch, RotatingState, DEFAULT_GRID};
use crate::identities::{identity_torsion, identity_velocity_with, GradientSource, IdentityConfig};
use crate::potential::{BoundaryIntegrator, QuadratureConfig};
use crate::real::{cst, from_usize, Real};

/// Bifurcation value `(m − 1)/(2m)` of the m-fold branch from the disk.
pub fn burbea_omega<T: Real>(m: usize) -> Result<T> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("bifurcation from the disk needs m >= 2, got {m}")));
    }
    Ok(from_usize::<T>(m - 1) / from_usize(2 * m))
}

/// `Ψ(x_j) − mean_j Ψ(x_j)` at the boundary points `x_j = (1 + u(θ_j))e^{iθ_j}`.
pub fn boundary_residual<T: Real>(state: &RotatingState<T>, nodes: &[T], cfg: &QuadratureConfig) -> Result<Vec<T>> {
    require_unit_area(&state.patch)?;
    if nodes.is_empty() {
        return Err(Error::InvalidParameter("no collocation nodes".into()));
    }
    let eval = crate::potential::GreenEvaluator::new(&state.patch, cfg)?;
    let mut psi = Vec::with_capacity(nodes.len());
    for &t in nodes {
        let x = state.patch.boundary_point(t);
        let s = eval.stream(x)?.value;
        psi.push(s - state.omega * (x[0] * x[0] + x[1] * x[1]) * cst(0.5));
    }
    Ok(subtract_mean(psi))
}

fn subtract_mean<T: Real>(mut v: Vec<T>) -> Vec<T> {
    let mean = v.iter().fold(T::zero(), |a, &b| a + b) / from_usize(v.len());
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// Collocation angles `(j − ½)π/(mJ)`, `j = 1..J`.
pub fn collocation_nodes<T: Real>(m: usize, count: usize) -> Vec<T> {
    let step = T::pi() / from_usize(m * count);
    (0..count).map(|j| step * (from_usize::<T>(j) + cst(0.5))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Fourier degree `N`.
    pub modes: usize,
    /// Collocation nodes in `(0, π/m)`; `None` means `N + 1`.
    pub collocation_count: Option<usize>,
    /// Bound on `max_j |Ψ_j − mean Ψ|`.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Step in `a₁`, or in arclength after a fallback; `None` means `0.04/m`.
    pub continuation_step: Option<f64>,
    /// Stop once `‖u‖_∞` would exceed this.
    pub amplitude_cap: f64,
    pub max_steps: usize,
    /// Stop once `min(1 + u)` would fall to this.
    pub radius_margin: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Minimum boundary quadrature nodes.
    pub boundary_nodes: usize,
    pub grid_size: usize,
    /// Evaluate both identities at every accepted point.
    pub validate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            modes: 16,
            collocation_count: None,
            newton_tol: 1e-10,
            max_iters: 30,
            continuation_step: None,
            amplitude_cap: 0.3,
            max_steps: 10,
            radius_margin: 0.05,
            fd_step: 1e-6,
            boundary_nodes: 1024,
            grid_size: DEFAULT_GRID,
            validate: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.modes < 1 {
            return bad("modes must be at least 1");
        }
        if self.collocation() < self.modes + 1 {
            return bad("collocation_count must be at least modes + 1");
        }
        if !(self.newton_tol > 0.0) || !(self.fd_step > 0.0) || matches!(self.continuation_step, Some(s) if !(s > 0.0)) {
            return bad("tolerances and steps must be positive");
        }
        if !(self.amplitude_cap > 0.0) || !(self.radius_margin >= 0.0 && self.radius_margin < 1.0) {
            return bad("amplitude_cap must be positive and radius_margin in [0, 1)");
        }
        if self.max_iters == 0 || self.grid_size < 8 || self.boundary_nodes < 8 {
            return bad("max_iters, grid_size and boundary_nodes must be positive");
        }
        Ok(())
    }

    pub fn step(&self, m: usize) -> f64 {
        self.continuation_step.unwrap_or(0.04 / m as f64)
    }

    pub fn collocation(&self) -> usize {
        self.collocation_count.unwrap_or(self.modes + 1)
    }
}

/// `a₀` giving area π: `(1 + a₀)² = 1 − ½ Σ_{n≥1} a_n²`.
fn eliminate_a0<T: Real>(coeffs: &mut [T]) -> Result<()> {
    let tail = coeffs[1..].iter().fold(T::zero(), |s, &a| s + a * a);
    let rad = T::one() - tail * cst(0.5);
    if rad <= T::zero() {
        return Err(Error::InvalidPatch("amplitudes too large for an area-pi patch".into()));
    }
    coeffs[0] = rad.sqrt() - T::one();
    Ok(())
}

/// The discretized boundary condition for one `m` and mode count.
struct Collocation<T> {
    m: usize,
    modes: usize,
    count: usize,
    stride: usize,
    n: usize,
    offset: T,
    grid_size: usize,
    fd_step: T,
}

impl<T: Real> Collocation<T> {
    fn new(m: usize, cfg: &SolverConfig) -> Self {
        let count = cfg.collocation();
        let want = (8 * cfg.modes * m).next_power_of_two().max(cfg.boundary_nodes);
        let stride = want.div_ceil(2 * m * count);
        Self {
            m,
            modes: cfg.modes,
            count,
            stride,
            n: 2 * m * count * stride,
            offset: T::pi() / from_usize(2 * m * count),
            grid_size: cfg.grid_size,
            fd_step: cst(cfg.fd_step),
        }
    }

    fn patch(&self, tail: &[T]) -> Result<PolarPatch<T>> {
        let mut coeffs = Vec::with_capacity(self.modes + 1);
        coeffs.push(T::zero());
        coeffs.extend_from_slice(tail);
        coeffs.resize(self.modes + 1, T::zero());
        eliminate_a0(&mut coeffs)?;
        PolarPatch::new(self.m, coeffs, self.grid_size)
    }

    /// `(ψ_j − mean, R_j²/2 − mean)` for the amplitudes `a₁ … a_N`.
    fn parts(&self, tail: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let patch = self.patch(tail)?;
        let grid = BoundaryIntegrator::new(&patch, self.n, self.offset)?;
        let mut psi = Vec::with_capacity(self.count);
        let mut half_r2 = Vec::with_capacity(self.count);
        for j in 0..self.count {
            let k = j * self.stride;
            let x = grid.point(k);
            psi.push(grid.stream_at_node(k));
            half_r2.push((x[0] * x[0] + x[1] * x[1]) * cst(0.5));
        }
        Ok((subtract_mean(psi), subtract_mean(half_r2)))
    }

    fn residual(&self, tail: &[T], omega: T) -> Result<Vec<T>> {
        let (psi, q) = self.parts(tail)?;
        Ok(psi.iter().zip(&q).map(|(&p, &q)| p - omega * q).collect())
    }

    /// Finite-difference derivative of the residual in `a_k`, `k ≥ 1`.
    fn column(&self, tail: &[T], omega: T, k: usize, base: &[T]) -> Result<Vec<T>> {
        let h = self.fd_step * tail[k - 1].abs().max(T::one());
        let mut shifted = tail.to_vec();
        shifted[k - 1] += h;
        let r = self.residual(&shifted, omega)?;
        Ok(r.iter().zip(base).map(|(&a, &b)| (a - b) / h).collect())
    }
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
}

/// Least-squares Newton step `−J⁺F`, refusing numerically singular `J`.
fn gauss_newton_step<T: Real>(jac: DMatrix<T>, f: &[T]) -> Result<DVector<T>> {
    let svd = jac.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    let smin = sv.iter().fold(smax, |a, &b| a.min(b));
    let rcond = if smax > T::zero() { smin / smax } else { T::zero() };
    if rcond.as_f64() < 1e-11 {
        return Err(Error::SingularJacobian { rcond: rcond.as_f64() });
    }
    let rhs = DVector::from_iterator(f.len(), f.iter().map(|&v| -v));
    svd.solve(&rhs, T::zero()).map_err(|e| Error::NoConvergence(format!("least-squares step failed: {e}")))
}

/// Damped Gauss–Newton on `F(z) = 0`, with `jacobian(z, F(z))` supplied.
fn solve_system<T: Real>(
    mut z: Vec<T>,
    tol: T,
    max_iters: usize,
    f: impl Fn(&[T]) -> Result<Vec<T>>,
    jacobian: impl Fn(&[T], &[T]) -> Result<DMatrix<T>>,
) -> Result<(Vec<T>, T, usize)> {
    let mut fz = f(&z)?;
    let mut norm = max_abs(&fz);
    for it in 0..max_iters {
        if norm <= tol {
            return Ok((z, norm, it));
        }
        let step = gauss_newton_step(jacobian(&z, &fz)?, &fz)?;
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..8 {
            let trial: Vec<T> = z.iter().zip(step.iter()).map(|(&a, &d)| a + t * d).collect();
            if let Ok(ft) = f(&trial) {
                let nt = max_abs(&ft);
                if nt < norm || nt <= tol {
                    z = trial;
                    fz = ft;
                    norm = nt;
                    accepted = true;
                    break;
                }
            }
            t *= cst(0.5);
        }
        if !accepted {
            return Err(Error::NoConvergence(format!("line search stalled at residual {:e}", norm.as_f64())));
        }
    }
    if norm <= tol {
        Ok((z, norm, max_iters))
    } else {
        Err(Error::NoConvergence(format!("{max_iters} iterations, residual {:e}", norm.as_f64())))
    }
}

/// Outcome of one Newton solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Solution<T> {
    pub state: RotatingState<T>,
    pub residual: T,
    pub iterations: usize,
}

fn amplitudes<T: Real>(patch: &PolarPatch<T>, modes: usize) -> Vec<T> {
    let mut tail: Vec<T> = patch.coeffs().iter().skip(1).copied().collect();
    tail.resize(modes, T::zero());
    tail
}

/// Linearization at the disk: `∂_{a₁}Ψ = c₀ − Ω c₁` vanishes only at the
/// bifurcation value, so `Ω` is the least-squares root of that column.
fn anchor<T: Real>(col: &Collocation<T>) -> Result<Solution<T>> {
    let zero = vec![T::zero(); col.modes];
    let (psi0, _) = col.parts(&zero)?;
    let mut one = zero.clone();
    let h = col.fd_step;
    one[0] = h;
    let (psi1, q1) = col.parts(&one)?;
    let c0: Vec<T> = psi1.iter().zip(&psi0).map(|(&a, &b)| (a - b) / h).collect();
    let c1: Vec<T> = q1.iter().map(|&q| q / h).collect();
    let dot = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y);
    let den = dot(&c1, &c1);
    if den <= T::zero() {
        return Err(Error::SingularJacobian { rcond: 0.0 });
    }
    let omega = dot(&c0, &c1) / den;
    let patch = col.patch(&zero)?;
    Ok(Solution { state: RotatingState::new(patch, omega), residual: max_abs(&psi0), iterations: 0 })
}

/// Newton solve with `a₁` pinned. `a₁ = 0` returns the disk with `Ω` taken
/// from the bordered linearization at the bifurcation point.
pub fn newton_solve<T: Real>(initial: &RotatingState<T>, pinned_amplitude: T, cfg: &SolverConfig) -> Result<Solution<T>> {
    cfg.validate()?;
    let col = Collocation::new(initial.patch.m(), cfg);
    if col.m < 2 && pinned_amplitude == T::zero() {
        return Err(Error::InvalidParameter("the disk anchor needs m >= 2".into()));
    }
    if pinned_amplitude == T::zero() {
        return anchor(&col);
    }
    let guess = amplitudes(&initial.patch, cfg.modes);
    natural(&col, cfg, pinned_amplitude, &guess[1..], initial.omega)
}

fn natural<T: Real>(col: &Collocation<T>, cfg: &SolverConfig, a1: T, rest: &[T], omega: T) -> Result<Solution<T>> {
    let full = |z: &[T]| {
        let mut tail = Vec::with_capacity(col.modes);
        tail.push(a1);
        tail.extend_from_slice(&z[..z.len() - 1]);
        tail
    };
    let mut z0 = rest.to_vec();
    z0.push(omega);
    let f = |z: &[T]| col.residual(&full(z), z[z.len() - 1]);
    let jac = |z: &[T], fz: &[T]| {
        let tail = full(z);
        let om = z[z.len() - 1];
        let (_, q) = col.parts(&tail)?;
        let mut j = DMatrix::<T>::zeros(fz.len(), z.len());
        for k in 2..=col.modes {
            let c = col.column(&tail, om, k, fz)?;
            j.set_column(k - 2, &DVector::from_vec(c));
        }
        j.set_column(z.len() - 1, &DVector::from_iterator(q.len(), q.iter().map(|&v| -v)));
        Ok(j)
    };
    let (z, residual, iterations) = solve_system(z0, cst(cfg.newton_tol), cfg.max_iters, f, jac)?;
    let patch = col.patch(&full(&z))?;
    Ok(Solution { state: RotatingState::new(patch, z[z.len() - 1]), residual, iterations })
}

/// Pseudo-arclength corrector: unknowns `(a₁ … a_N, Ω)` with the extra
/// equation `t·(z − z_prev) = ds`.
fn arclength<T: Real>(col: &Collocation<T>, cfg: &SolverConfig, prev: &[T], tangent: &[T], ds: T) -> Result<Solution<T>> {
    let z0: Vec<T> = prev.iter().zip(tangent).map(|(&p, &t)| p + ds * t).collect();
    let constraint = |z: &[T]| z.iter().zip(prev).zip(tangent).fold(T::zero(), |s, ((&a, &b), &t)| s + t * (a - b)) - ds;
    let split = |z: &[T]| (z[..col.modes].to_vec(), z[col.modes]);
    let f = |z: &[T]| {
        let (tail, om) = split(z);
        let mut r = col.residual(&tail, om)?;
        r.push(constraint(z));
        Ok(r)
    };
    let jac = |z: &[T], fz: &[T]| {
        let (tail, om) = split(z);
        let base = &fz[..fz.len() - 1];
        let (_, q) = col.parts(&tail)?;
        let mut j = DMatrix::<T>::zeros(fz.len(), z.len());
        for k in 1..=col.modes {
            let c = col.column(&tail, om, k, base)?;
            for (i, v) in c.into_iter().enumerate() {
                j[(i, k - 1)] = v;
            }
        }
        for (i, &v) in q.iter().enumerate() {
            j[(i, col.modes)] = -v;
        }
        for (k, &t) in tangent.iter().enumerate() {
            j[(fz.len() - 1, k)] = t;
        }
        Ok(j)
    };
    let (z, residual, iterations) = solve_system(z0, cst(cfg.newton_tol), cfg.max_iters, f, jac)?;
    let (tail, om) = split(&z);
    Ok(Solution { state: RotatingState::new(col.patch(&tail)?, om), residual, iterations })
}

/// Per-point checks recorded alongside each branch state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    pub newton_residual: T,
    pub iterations: usize,
    pub torsion_relative_residual: Option<T>,
    pub velocity_relative_residual: Option<T>,
    /// Set when an identity could not be evaluated, e.g. a failed torsion fit.
    pub validation_error: Option<String>,
    pub r_min: T,
    pub r_max: T,
    pub sup_norm: T,
    pub arclength_step: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct BranchPoint<T> {
    /// Accumulated Euclidean distance in `(a₁ … a_N, Ω)`.
    pub s: T,
    pub state: RotatingState<T>,
    pub diagnostics: Diagnostics<T>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum StopReason {
    StepBudget,
    AmplitudeCap,
    MonotonicityLost,
    RadiusMargin,
    OmegaOutOfRange(String),
    SolverFailure(String),
}

impl StopReason {
    /// Stops that reflect a numerical failure rather than a planned limit.
    pub fn is_failure(&self) -> bool {
        matches!(self, Self::SolverFailure(_) | Self::OmegaOutOfRange(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Branch<T> {
    pub m: usize,
    pub points: Vec<BranchPoint<T>>,
    pub stop: StopReason,
}

impl<T: Real + Serialize> Branch<T> {
    /// One JSON object per point.
    pub fn write_jsonl(&self, mut w: impl Write) -> std::io::Result<()> {
        for p in &self.points {
            serde_json::to_writer(&mut w, p)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Reads points written by [`Branch::write_jsonl`], skipping header lines.
pub fn read_jsonl<T: Real + for<'de> Deserialize<'de>>(r: impl BufRead) -> Result<Vec<BranchPoint<T>>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::InvalidParameter(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |e: serde_json::Error| Error::InvalidParameter(format!("line {}: {e}", i + 1));
        let value: serde_json::Value = serde_json::from_str(&line).map_err(bad)?;
        // Lines carrying a `header` object hold run metadata, not points.
        if value.get("header").is_some() {
            continue;
        }
        out.push(serde_json::from_value(value).map_err(bad)?);
    }
    Ok(out)
}

fn diagnose<T: Real>(sol: &Solution<T>, cfg: &SolverConfig, arclength_step: bool) -> Diagnostics<T> {
    let p = &sol.state.patch;
    let mut validation_error = None;
    let (mut torsion, mut velocity) = (None, None);
    if cfg.validate {
        match identity_torsion(&sol.state) {
            Ok(t) => torsion = Some(t.relative_residual),
            Err(e) => validation_error = Some(format!("torsion identity: {e}")),
        }
        // The field varies like r^m near the boundary, so the radial rule grows with m.
        let icfg = IdentityConfig {
            gradient: GradientSource::Boundary,
            radial_nodes: (p.m() + 8).max(12),
            ..IdentityConfig::default()
        };
        match identity_velocity_with(&sol.state, &icfg) {
            Ok(v) => velocity = Some(v.relative_residual),
            Err(e) => validation_error = Some(format!("velocity identity: {e}")),
        }
    }
    Diagnostics {
        newton_residual: sol.residual,
        iterations: sol.iterations,
        torsion_relative_residual: torsion,
        velocity_relative_residual: velocity,
        validation_error,
        r_min: p.r_min(),
        r_max: p.r_max(),
        sup_norm: p.sup_norm(),
        arclength_step,
    }
}

fn unknowns<T: Real>(state: &RotatingState<T>, modes: usize) -> Vec<T> {
    let mut z = amplitudes(&state.patch, modes);
    z.push(state.omega);
    z
}

fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y)).sqrt()
}

/// Continues the m-fold branch from the disk.
pub fn continue_branch<T: Real>(m: usize, cfg: &SolverConfig) -> Result<Branch<T>> {
    continue_from(m, Vec::new(), cfg)
}

/// Continues an existing branch (for example one read back with
/// [`read_jsonl`]) by up to `cfg.max_steps` further points; an empty list
/// starts at the disk.
pub fn continue_from<T: Real>(m: usize, mut points: Vec<BranchPoint<T>>, cfg: &SolverConfig) -> Result<Branch<T>> {
    cfg.validate()?;
    burbea_omega::<T>(m)?;
    if points.iter().any(|p| p.state.patch.m() != m) {
        return Err(Error::InvalidParameter("branch points have a different fold symmetry".into()));
    }
    let col = Collocation::<T>::new(m, cfg);
    if points.is_empty() {
        let sol = anchor(&col)?;
        let diagnostics = diagnose(&sol, cfg, false);
        points.push(BranchPoint { s: T::zero(), state: sol.state, diagnostics });
    }
    let ds: T = cst(cfg.step(m));
    let cap: T = cst(cfg.amplitude_cap);
    let margin: T = cst(cfg.radius_margin);
    for _ in 0..cfg.max_steps {
        let last = points.last().expect("branch is non-empty");
        let z1 = unknowns(&last.state, cfg.modes);
        let z0 = (points.len() > 1).then(|| unknowns(&points[points.len() - 2].state, cfg.modes));
        let mut h = ds;
        let mut attempt = step(&col, cfg, &z1, z0.as_deref(), h);
        for _ in 0..3 {
            if attempt.is_ok() {
                break;
            }
            h *= cst(0.5);
            attempt = step(&col, cfg, &z1, z0.as_deref(), h);
        }
        let (sol, used_arclength) = match attempt {
            Ok(s) => s,
            Err(e) => return Ok(Branch { m, points, stop: StopReason::SolverFailure(e.to_string()) }),
        };
        let p = &sol.state.patch;
        if p.sup_norm() > cap {
            return Ok(Branch { m, points, stop: StopReason::AmplitudeCap });
        }
        if p.r_min() <= margin {
            return Ok(Branch { m, points, stop: StopReason::RadiusMargin });
        }
        if !p.is_monotone() {
            return Ok(Branch { m, points, stop: StopReason::MonotonicityLost });
        }
        if !(sol.state.omega > T::zero() && sol.state.omega < cst(0.5)) {
            let msg = format!("omega = {}", sol.state.omega.as_f64());
            return Ok(Branch { m, points, stop: StopReason::OmegaOutOfRange(msg) });
        }
        let diagnostics = diagnose(&sol, cfg, used_arclength);
        let s = points.last().map(|l| l.s).unwrap_or(T::zero()) + distance(&unknowns(&sol.state, cfg.modes), &z1);
        points.push(BranchPoint { s, state: sol.state, diagnostics });
    }
    Ok(Branch { m, points, stop: StopReason::StepBudget })
}

/// One continuation step of size `ds`: natural in `a₁` with a secant
/// predictor, falling back to pseudo-arclength along the secant.
fn step<T: Real>(col: &Collocation<T>, cfg: &SolverConfig, z1: &[T], z0: Option<&[T]>, ds: T) -> Result<(Solution<T>, bool)> {
    let guess: Vec<T> = match z0 {
        Some(z0) => {
            let da = z1[0] - z0[0];
            let scale = if da != T::zero() { ds / da } else { T::zero() };
            z1.iter().zip(z0).map(|(&b, &a)| b + (b - a) * scale).collect()
        }
        // The disk is left along a₁.
        None => z1.to_vec(),
    };
    let natural_step = natural(col, cfg, z1[0] + ds, &guess[1..cfg.modes], guess[cfg.modes]);
    match (natural_step, z0) {
        (Ok(s), _) => Ok((s, false)),
        (Err(_), Some(z0)) => {
            let dist = distance(z1, z0);
            let tangent: Vec<T> = z1.iter().zip(z0).map(|(&b, &a)| (b - a) / dist).collect();
            arclength(col, cfg, z1, &tangent, ds).map(|s| (s, true))
        }
        (Err(e), None) => Err(e),
    }
}

/// Semi-axes `(a, b)` of the ellipse with the same area and second moments
/// `∫x₁²`, `∫x₂²`.
pub fn ellipse_fit<T: Real>(patch: &PolarPatch<T>) -> (T, T) {
    let quarter: T = cst(0.25);
    let ixx = patch.trapezoid(|t| patch.radius(t).powi(4) * t.cos().powi(2)) * quarter;
    let iyy = patch.trapezoid(|t| patch.radius(t).powi(4) * t.sin().powi(2)) * quarter;
    let a = area(patch);
    let four: T = cst(4.0);
    ((four * ixx / a).sqrt(), (four * iyy / a).sqrt())
}
