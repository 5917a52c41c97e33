//! Newtonian potential of a patch, its gradient, the radial/angular split
//! `1_D * 𝒩 = φ^r + φ_m`, and the torsion function.
//!
//! `φ^r` is the potential of the radial rearrangement `g(|x|)`, where `g(r)`
//! is the fraction of the circle of radius `r` inside the patch; `φ_m` is the
//! potential of the remainder `h = 1_D − g`.

mod kernel;
mod stream;
mod torsion;

pub use kernel::{grad_phi_m, grad_phi_m_monotone, grad_phi_m_monotone_with, PhiMEvaluator};
pub(crate) use stream::{boundary_nodes, GreenEvaluator};
pub use stream::{
    grad_stream, grad_stream_direct, grad_stream_ellipse, stream_value, stream_value_direct, BoundaryIntegrator,
};
pub use torsion::{torsion_layer, torsion_solve, torsion_solve_with_degree, TorsionFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MonotoneProfile, PolarPatch};
use crate::quad::{integrate_piecewise, periodic_roots, GaussLegendre};
use crate::real::{cst, from_usize, Real};

/// Quadrature resolution shared by the potential evaluators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Uniform radial panels per radial sub-interval (before grading).
    pub radial_panels: usize,
    /// Uniform angular panels per period in the kernel quadrature.
    pub angular_panels: usize,
    /// Trapezoid nodes per circle for periodic integrals (minimum).
    pub angular_nodes: usize,
    /// Gauss–Legendre points per panel.
    pub gauss_order: usize,
    /// Geometric grading depth (ratio ½) towards singular points.
    pub split_depth: usize,
    /// Acceptance threshold for error estimates.
    pub tolerance: f64,
    /// Terms of the truncated-series reference evaluator.
    pub series_terms: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            radial_panels: 6,
            angular_panels: 8,
            angular_nodes: 1024,
            gauss_order: 16,
            split_depth: 12,
            tolerance: 1e-8,
            series_terms: 200,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("radial_panels", self.radial_panels),
            ("angular_panels", self.angular_panels),
            ("angular_nodes", self.angular_nodes),
            ("gauss_order", self.gauss_order),
            ("series_terms", self.series_terms),
        ];
        if let Some((name, _)) = counts.iter().find(|c| c.1 == 0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
        if self.angular_nodes % 2 != 0 || self.angular_nodes < 8 {
            return Err(Error::InvalidParameter("angular_nodes must be even and at least 8".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Value with an a-posteriori error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub error_estimate: T,
}

/// Vector value with an a-posteriori error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradEstimate<T> {
    pub value: [T; 2],
    pub error_estimate: T,
}

/// `g(r)` and `|D ∩ B_r|` at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile<T> {
    pub r: T,
    pub g: T,
    pub partial_mass: T,
}

/// Angular set `{η : 1 + u(η) > ρ}` within one period, as intervals of
/// `[0, period)`.
pub(crate) fn inside_intervals<T: Real>(patch: &PolarPatch<T>, rho: T) -> Vec<(T, T)> {
    let period = patch.period();
    let samples = (patch.grid_size() / patch.m()).max(64);
    let tol = period * T::default_epsilon() * cst(4.0);
    let roots = periodic_roots(|t| patch.radius(t) - rho, period, samples, tol);
    let mut cuts = vec![T::zero()];
    cuts.extend(roots.iter().copied());
    cuts.push(period);
    let mut out: Vec<(T, T)> = Vec::new();
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mid = (w[0] + w[1]) * cst(0.5);
        if patch.radius(mid) > rho {
            match out.last_mut() {
                Some(last) if last.1 == w[0] => last.1 = w[1],
                _ => out.push((w[0], w[1])),
            }
        }
    }
    out
}

fn radial_profile_general<T: Real>(patch: &PolarPatch<T>, r: T) -> RadialProfile<T> {
    let period = patch.period();
    let inside = inside_intervals(patch, r);
    let measure = inside.iter().fold(T::zero(), |a, (lo, hi)| a + (*hi - *lo));
    let mut breaks: Vec<T> = Vec::new();
    for (lo, hi) in &inside {
        breaks.push(*lo);
        breaks.push(*hi);
    }
    let rule = GaussLegendre::new(16);
    let half: T = cst(0.5);
    let per = integrate_piecewise(&rule, period, &breaks, 16, |t| {
        let q = patch.radius(t).min(r);
        half * q * q
    });
    RadialProfile { r, g: measure / period, partial_mass: per * from_usize(patch.m()) }
}

/// `g(r)` and `|D ∩ B_r|`.
pub fn radial_profile<T: Real>(patch: &PolarPatch<T>, r: T) -> RadialProfile<T> {
    radial_profile_general(patch, r)
}

/// Angular vorticity fraction `g(r) = (1/2πr) ℋ¹(∂B_r ∩ D)`; uses `mη(r)/π`
/// for monotone patches and the root-refined angular measure otherwise.
pub fn g_profile<T: Real>(patch: &PolarPatch<T>, r: T) -> T {
    match MonotoneProfile::new(patch) {
        Ok(mono) => from_usize::<T>(patch.m()) * mono.eta_clamped(r) / T::pi(),
        Err(_) => radial_profile_general(patch, r).g,
    }
}

/// `∂_r φ^r(r) = |D ∩ B_r| / 2πr`.
pub fn phi_r_prime<T: Real>(patch: &PolarPatch<T>, r: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::OutOfRange("phi_r_prime needs r > 0".into()));
    }
    Ok(radial_profile_general(patch, r).partial_mass / (T::two_pi() * r))
}

/// `h(ρ, ·) = 1_D(ρ, ·) − g(ρ)` on one circle.
#[derive(Clone, Debug)]
pub struct AngularDeviation<T> {
    pub rho: T,
    pub g: T,
    period: T,
    inside: Vec<(T, T)>,
}

impl<T: Real> AngularDeviation<T> {
    pub fn new(patch: &PolarPatch<T>, rho: T) -> Self {
        let period = patch.period();
        let inside = inside_intervals(patch, rho);
        let measure = inside.iter().fold(T::zero(), |a, (lo, hi)| a + (*hi - *lo));
        Self { rho, g: measure / period, period, inside }
    }

    pub fn eval(&self, eta: T) -> T {
        let mut e = eta % self.period;
        if e < T::zero() {
            e += self.period;
        }
        let ind = if self.inside.iter().any(|(lo, hi)| e > *lo && e < *hi) { T::one() } else { T::zero() };
        ind - self.g
    }

    /// `∫_T h(ρ, η) dη`, integrated exactly over the constant pieces.
    pub fn mean_integral(&self, m: usize) -> T {
        let inside = self.inside.iter().fold(T::zero(), |a, (lo, hi)| a + (*hi - *lo));
        (inside - self.g * self.period) * from_usize(m)
    }
}

/// The four Fourier-series closed forms for `0 ≤ x < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSums<T> {
    /// `Σ xⁿ cos(ny)/n`
    pub cos_over_n: T,
    /// `Σ xⁿ sin(ny)/n`
    pub sin_over_n: T,
    /// `Σ xⁿ cos(ny)`
    pub cos: T,
    /// `Σ xⁿ sin(ny)`
    pub sin: T,
}

/// Closed forms of `Σ_{n≥1} xⁿ{cos, sin}(ny)/n` and `Σ_{n≥1} xⁿ{cos, sin}(ny)`.
pub fn series_kernel<T: Real>(x: T, y: T) -> Result<SeriesSums<T>> {
    if !(x >= T::zero() && x < T::one()) {
        return Err(Error::OutOfRange(format!("series kernel needs 0 <= x < 1, got {}", x.as_f64())));
    }
    Ok(series_kernel_unchecked(x, y))
}

#[inline]
pub(crate) fn series_kernel_unchecked<T: Real>(x: T, y: T) -> SeriesSums<T> {
    let (s, c) = y.sin_cos();
    let half: T = cst(0.5);
    let sh = (y * half).sin();
    let four: T = cst(4.0);
    let one_minus = T::one() - x;
    // 1 + x² − 2x cos y written without cancellation.
    let den = one_minus * one_minus + four * x * sh * sh;
    SeriesSums {
        cos_over_n: -half * den.ln(),
        sin_over_n: (x * s).atan2(T::one() - x * c),
        cos: x * (c - x) / den,
        sin: x * s / den,
    }
}

/// Reference evaluator: the same four series truncated after `terms` terms.
pub fn series_kernel_truncated<T: Real>(x: T, y: T, terms: usize) -> SeriesSums<T> {
    let mut out = SeriesSums { cos_over_n: T::zero(), sin_over_n: T::zero(), cos: T::zero(), sin: T::zero() };
    let mut xn = T::one();
    for n in 1..=terms {
        xn *= x;
        let nf: T = from_usize(n);
        let (s, c) = (y * nf).sin_cos();
        out.cos_over_n += xn * c / nf;
        out.sin_over_n += xn * s / nf;
        out.cos += xn * c;
        out.sin += xn * s;
    }
    out
}
