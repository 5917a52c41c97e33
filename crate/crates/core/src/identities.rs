//! Both sides of the torsion and velocity identities satisfied by rotating
//! patches, and the torsion-deficit / asymmetry ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fraenkel_asymmetry, require_unit_area, second_moment_excess, EllipsePatch, PolarPatch, RotatingState};
use crate::potential::{
    grad_phi_m_monotone_with, grad_stream, torsion_solve, BoundaryIntegrator, GradEstimate, PhiMEvaluator,
    QuadratureConfig,
};
use crate::quad::GaussLegendre;
use crate::real::{cst, from_usize, Real};

/// `lhs`, `rhs` and their signed difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport<T> {
    pub identity: String,
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    pub relative_residual: T,
    pub quadrature_error_estimate: T,
}

impl<T: Real> IdentityReport<T> {
    pub fn new(identity: &str, lhs: T, rhs: T, quadrature_error_estimate: T) -> Self {
        let residual = lhs - rhs;
        let floor: T = cst(1e-300);
        let scale = lhs.abs().max(rhs.abs()).max(floor);
        let relative_residual = if residual == T::zero() { T::zero() } else { residual / scale };
        Self { identity: identity.to_string(), lhs, rhs, residual, relative_residual, quadrature_error_estimate }
    }
}

/// Source of `∇(1_D * 𝒩)` inside the patch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientSource {
    /// `∂_r φ^r ê_r` plus the 2D closed-kernel `∇φ_m`.
    #[default]
    Decomposition,
    /// `∂_r φ^r ê_r` plus the single-integral monotone `∇φ_m`.
    Monotone,
    /// Boundary integral of `log|x − y| n`.
    Boundary,
}

/// Interior quadrature for the velocity identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentityConfig {
    /// Gauss–Legendre nodes in the radial fraction `s ∈ (0, 1)`.
    pub radial_nodes: usize,
    /// Trapezoid intervals on `[0, π/m]`; must be even. Defaults to
    /// `max(32, 2N)` for a patch of Fourier degree `N`.
    pub angular_intervals: Option<usize>,
    pub gradient: GradientSource,
    pub quadrature: QuadratureConfig,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self { radial_nodes: 12, angular_intervals: None, gradient: GradientSource::default(), quadrature: QuadratureConfig::default() }
    }
}

impl IdentityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes == 0 {
            return Err(Error::InvalidParameter("radial_nodes must be positive".into()));
        }
        if matches!(self.angular_intervals, Some(j) if j < 2 || j % 2 != 0) {
            return Err(Error::InvalidParameter("angular_intervals must be even and at least 2".into()));
        }
        self.quadrature.validate()
    }

    fn intervals<T: Real>(&self, patch: &PolarPatch<T>) -> usize {
        self.angular_intervals.unwrap_or_else(|| (2 * patch.effective_degree()).max(32))
    }
}

/// `Ω(∫|x|² − |D|²/2π)` against `(1 − 2Ω)(|D|²/4π − ∫p)`, with `∫p` from the
/// numerical torsion solver.
pub fn identity_torsion<T: Real>(state: &RotatingState<T>) -> Result<IdentityReport<T>> {
    require_unit_area(&state.patch)?;
    let excess = second_moment_excess(&state.patch)?;
    let p = torsion_solve(&state.patch)?;
    let factor = T::one() - state.omega * cst(2.0);
    let rhs = factor * (T::pi() * cst(0.25) - p.integral());
    Ok(IdentityReport::new("torsion", state.omega * excess, rhs, factor.abs() * p.error_estimate()))
}

/// Torsion identity from the closed-form ellipse moments and torsion function.
pub fn identity_torsion_ellipse<T: Real>(ellipse: &EllipsePatch<T>, omega: T) -> IdentityReport<T> {
    let area = ellipse.area();
    let factor = T::one() - omega * cst(2.0);
    let rhs = factor * (area * area / (T::pi() * cst(4.0)) - ellipse.torsion_integral());
    IdentityReport::new("torsion", omega * ellipse.second_moment_excess(), rhs, T::zero())
}

/// `(½ − Ω)(∫|x|² − |D|²/2π)` against `½∫_D |x − 2∇(1_D*𝒩)|²` with default
/// quadrature.
pub fn identity_velocity<T: Real>(state: &RotatingState<T>) -> Result<IdentityReport<T>> {
    identity_velocity_with(state, &IdentityConfig::default())
}

/// Velocity identity with explicit quadrature and gradient source.
pub fn identity_velocity_with<T: Real>(state: &RotatingState<T>, cfg: &IdentityConfig) -> Result<IdentityReport<T>> {
    cfg.validate()?;
    require_unit_area(&state.patch)?;
    let patch = &state.patch;
    let lhs = state.lambda * second_moment_excess(patch)?;
    let (rhs, err) = match cfg.gradient {
        GradientSource::Decomposition => {
            let eval = PhiMEvaluator::new(patch, &cfg.quadrature)?;
            velocity_rhs(patch, cfg, |x| decomposed(patch, x, |r, t| eval.eval(r, t)))?
        }
        GradientSource::Monotone => velocity_rhs(patch, cfg, |x| {
            decomposed(patch, x, |r, t| grad_phi_m_monotone_with(patch, r, t, &cfg.quadrature))
        })?,
        GradientSource::Boundary => {
            let n = crate::potential::boundary_nodes(patch, &cfg.quadrature) * 4;
            let fine = BoundaryIntegrator::new(patch, n, T::zero())?;
            let coarse = BoundaryIntegrator::new(patch, n / 2, T::zero())?;
            velocity_rhs(patch, cfg, |x| {
                let (v, c) = (fine.grad_at(x), coarse.grad_at(x));
                Ok(GradEstimate { value: v, error_estimate: (v[0] - c[0]).abs().max((v[1] - c[1]).abs()) })
            })?
        }
    };
    Ok(IdentityReport::new("velocity", lhs, rhs, err))
}

/// Velocity identity for an ellipse sampled as a polar graph, using the
/// exact interior field `(b x₁, a x₂)/(a + b)`.
pub fn identity_velocity_ellipse<T: Real>(
    ellipse: &EllipsePatch<T>,
    patch: &PolarPatch<T>,
    omega: T,
    cfg: &IdentityConfig,
) -> Result<IdentityReport<T>> {
    cfg.validate()?;
    require_unit_area(patch)?;
    let lhs = (cst::<T>(0.5) - omega) * second_moment_excess(patch)?;
    let (rhs, err) =
        velocity_rhs(patch, cfg, |x| Ok(GradEstimate { value: ellipse.interior_gradient(x), error_estimate: T::zero() }))?;
    Ok(IdentityReport::new("velocity", lhs, rhs, err))
}

/// Closed-form velocity identity of an ellipse: `x − 2∇ψ = ((a−b)/(a+b))(x₁, −x₂)`.
pub fn identity_velocity_ellipse_exact<T: Real>(ellipse: &EllipsePatch<T>, omega: T) -> IdentityReport<T> {
    let (a, b) = (ellipse.a, ellipse.b);
    let k = (a - b) / (a + b);
    let rhs = cst::<T>(0.5) * k * k * ellipse.second_moment();
    let lhs = (cst::<T>(0.5) - omega) * ellipse.second_moment_excess();
    IdentityReport::new("velocity", lhs, rhs, T::zero())
}

fn decomposed<T: Real>(
    patch: &PolarPatch<T>,
    x: [T; 2],
    phi_m: impl Fn(T, T) -> Result<GradEstimate<T>>,
) -> Result<GradEstimate<T>> {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r <= T::default_epsilon().sqrt() {
        return grad_stream(patch, x, &QuadratureConfig::default());
    }
    let theta = x[1].atan2(x[0]);
    let radial = crate::potential::phi_r_prime(patch, r)?;
    let g = phi_m(r, theta)?;
    let (gr, gt) = (radial + g.value[0], g.value[1]);
    let (c, s) = (x[0] / r, x[1] / r);
    Ok(GradEstimate { value: [gr * c - gt * s, gr * s + gt * c], error_estimate: g.error_estimate })
}

/// `½∫_D |x − 2∇ψ|²` on the grid `(s(1 + u(θ)), θ)`: Gauss–Legendre in `s`,
/// endpoint-halved trapezoid on `[0, π/m]`, times `2m`. The error estimate
/// adds the change against the every-other-node θ rule to the propagated
/// gradient errors.
fn velocity_rhs<T: Real>(
    patch: &PolarPatch<T>,
    cfg: &IdentityConfig,
    grad: impl Fn([T; 2]) -> Result<GradEstimate<T>> + Sync,
) -> Result<(T, T)> {
    let rule = GaussLegendre::<T>::new(cfg.radial_nodes);
    let nodes: Vec<(T, T)> = rule.mapped(T::zero(), T::one()).collect();
    let j = cfg.intervals(patch);
    let half = patch.period() * cst(0.5);
    let columns: Vec<Result<(T, T)>> = (0..=j)
        .into_par_iter()
        .map(|i| {
            let theta = half * from_usize(i) / from_usize(j);
            let rad = patch.radius(theta);
            let (st, ct) = theta.sin_cos();
            let (mut acc, mut err) = (T::zero(), T::zero());
            for &(s, w) in &nodes {
                let x = [s * rad * ct, s * rad * st];
                let g = grad(x)?;
                let d = [x[0] - g.value[0] * cst(2.0), x[1] - g.value[1] * cst(2.0)];
                let jac = s * rad * rad;
                acc += w * jac * (d[0] * d[0] + d[1] * d[1]);
                let dn = (d[0] * d[0] + d[1] * d[1]).sqrt();
                err += w * jac * cst::<T>(4.0) * dn * g.error_estimate;
            }
            Ok((acc, err))
        })
        .collect();
    let columns: Vec<(T, T)> = columns.into_iter().collect::<Result<_>>()?;
    let trap = |stride: usize| {
        let h = half * from_usize(stride) / from_usize(j);
        let mut s = T::zero();
        for (i, c) in columns.iter().enumerate().step_by(stride) {
            let w = if i == 0 || i == j { cst(0.5) } else { T::one() };
            s += w * c.0;
        }
        s * h
    };
    let factor = from_usize::<T>(patch.m()); // 2m · ½
    let fine = trap(1) * factor;
    let coarse = trap(2) * factor;
    let propagated = columns.iter().fold(T::zero(), |a, c| a + c.1) * half / from_usize(j) * factor;
    Ok((fine, (fine - coarse).abs() + propagated))
}

/// `π/4 − ∫p`, the squared Fraenkel asymmetry and their ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorsionDeficit<T> {
    pub deficit: T,
    pub asymmetry_sq: T,
    /// Absent when the asymmetry vanishes.
    pub ratio: Option<T>,
}

pub fn torsion_deficit_bound<T: Real>(patch: &PolarPatch<T>) -> Result<TorsionDeficit<T>> {
    require_unit_area(patch)?;
    let p = torsion_solve(patch)?;
    let deficit = T::pi() * cst(0.25) - p.integral();
    let slack = p.error_estimate() + T::default_epsilon() * cst(64.0);
    if deficit < -slack {
        return Err(Error::Quadrature { estimate: (-deficit).as_f64(), tolerance: slack.as_f64() });
    }
    let asym = fraenkel_asymmetry(patch)?.value;
    let asymmetry_sq = asym * asym;
    let ratio = (asymmetry_sq > T::default_epsilon().sqrt()).then(|| deficit / asymmetry_sq);
    Ok(TorsionDeficit { deficit: deficit.max(T::zero()), asymmetry_sq, ratio })
}
