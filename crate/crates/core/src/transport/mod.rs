//! Explicit measure-preserving map from an area-π star-shaped patch onto the
//! unit disk, its quadratic cost, and the `Ḣ⁻¹`-type quantity
//! `H₂ = ‖∇𝒩 * (1_D − 1_B)‖²_{L²}` it controls.
//!
//! The map fixes the inner disk `r ≤ 1 − a` and on the shell sets
//! `T^θ = θ + f(θ)/(a(2 − a))` and
//! `T^r = sqrt(a(2 − a)(r² − R²)/((u + a)(u + 2 − a)) + 1)`, `R = 1 + u(θ)`.

mod ot;

pub use ot::{discrete_ot_lower_bound, DiscreteOtBound, OtConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{f_accumulated, require_unit_area, MonotoneProfile, PolarPatch};
use crate::potential::{
    grad_phi_m_monotone_with, phi_r_prime, BoundaryIntegrator, QuadratureConfig,
};
use crate::quad::{periodic_roots, GaussLegendre};
use crate::real::{cst, from_usize, Real};

/// Shell depth `a ∈ (2‖u‖_∞, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportParams<T> {
    pub a: T,
}

impl<T: Real> TransportParams<T> {
    pub fn new(patch: &PolarPatch<T>, a: T) -> Result<Self> {
        let (lo, hi) = admissible_range(patch);
        if !(a > lo && a < hi) {
            return Err(Error::InvalidParameter(format!(
                "transport parameter a={} outside ({}, 1)",
                a.as_f64(),
                lo.as_f64()
            )));
        }
        Ok(Self { a })
    }

    /// Midpoint `(2‖u‖_∞ + 1)/2` of the admissible interval.
    pub fn default_for(patch: &PolarPatch<T>) -> Result<Self> {
        let (lo, hi) = admissible_range(patch);
        Self::new(patch, (lo + hi) * cst(0.5))
    }
}

/// `(2‖u‖_∞, 1)`.
pub fn admissible_range<T: Real>(patch: &PolarPatch<T>) -> (T, T) {
    (patch.sup_norm() * cst(2.0), T::one())
}

/// `count` values log-spaced strictly inside the admissible interval.
pub fn admissible_sweep<T: Real>(patch: &PolarPatch<T>, count: usize) -> Vec<T> {
    let (lo, hi) = admissible_range(patch);
    let lo = lo.max(cst(1e-6));
    let (llo, lhi) = (lo.ln(), hi.ln());
    (1..=count)
        .map(|k| (llo + (lhi - llo) * from_usize(k) / from_usize(count + 1)).exp())
        .collect()
}

/// Resolution of the shell grid `(1 − a, 1 + u(θ)) × [0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportGrid {
    pub radial: usize,
    pub angular: usize,
}

impl Default for TransportGrid {
    fn default() -> Self {
        Self { radial: 128, angular: 128 }
    }
}

impl TransportGrid {
    fn validate(&self) -> Result<()> {
        if self.radial == 0 || self.angular == 0 {
            return Err(Error::InvalidParameter("transport grid counts must be positive".into()));
        }
        Ok(())
    }

    /// Cell-centred shell nodes.
    fn nodes<'a, T: Real>(&'a self, patch: &'a PolarPatch<T>, a: T) -> impl Iterator<Item = (T, T)> + 'a {
        let inner = T::one() - a;
        (0..self.angular).flat_map(move |j| {
            let theta = T::two_pi() * from_usize(j) / from_usize(self.angular);
            let rad = patch.radius(theta);
            (0..self.radial).map(move |i| {
                let s: T = (from_usize::<T>(i) + cst(0.5)) / from_usize(self.radial);
                (inner + (rad - inner) * s, theta)
            })
        })
    }
}

/// Cost, Jacobian residual, cost bound and `H₂` for one shell depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportReport<T> {
    pub a: T,
    pub cost: T,
    pub jacobian_residual: T,
    pub bound_rhs: T,
    /// `cost / bound_rhs`.
    pub bound_ratio: T,
    pub loeper_lhs: T,
    pub loeper_error_estimate: T,
    pub loeper_holds: bool,
}

/// Shell-depth dependent pieces of the map at one angle.
struct Shell<T> {
    rad: T,
    u: T,
    q: T,
    k: T,
}

impl<T: Real> Shell<T> {
    fn new(patch: &PolarPatch<T>, a: T, theta: T) -> Self {
        let u = patch.u(theta);
        Self { rad: T::one() + u, u, q: (u + a) * (u + cst(2.0) - a), k: a * (cst::<T>(2.0) - a) }
    }

    fn tr(&self, r: T) -> T {
        (self.k * (r * r - self.rad * self.rad) / self.q + T::one()).sqrt()
    }
}

fn check_args<T: Real>(patch: &PolarPatch<T>, params: &TransportParams<T>) -> Result<()> {
    require_unit_area(patch)?;
    TransportParams::new(patch, params.a).map(|_| ())
}

/// `T(r, θ) = (T^r, T^θ)`.
pub fn transport_map<T: Real>(patch: &PolarPatch<T>, params: &TransportParams<T>, r: T, theta: T) -> Result<(T, T)> {
    check_args(patch, params)?;
    let rad = patch.radius(theta);
    if !(r >= T::zero() && r <= rad * (T::one() + T::default_epsilon() * cst(16.0))) {
        return Err(Error::OutOfRange(format!("point (r={}, θ={}) is outside the patch", r.as_f64(), theta.as_f64())));
    }
    Ok(map_unchecked(patch, params.a, r, theta))
}

fn map_unchecked<T: Real>(patch: &PolarPatch<T>, a: T, r: T, theta: T) -> (T, T) {
    if r <= T::one() - a {
        return (r, theta);
    }
    let sh = Shell::new(patch, a, theta);
    (sh.tr(r), theta + f_accumulated(patch, theta) / sh.k)
}

/// `max |T^r |det ∇T| − r|` over the shell grid, with `∂_r T^r` and
/// `dT^θ/dθ = 1 + (u² + 2u)/(a(2 − a))` taken from their analytic forms.
pub fn pushforward_check<T: Real>(patch: &PolarPatch<T>, params: &TransportParams<T>, grid: &TransportGrid) -> Result<T> {
    check_args(patch, params)?;
    grid.validate()?;
    let a = params.a;
    let mut worst = T::zero();
    let mut last: Option<(T, Shell<T>)> = None;
    for (r, theta) in grid.nodes(patch, a) {
        if last.as_ref().map(|l| l.0) != Some(theta) {
            last = Some((theta, Shell::new(patch, a, theta)));
        }
        let sh = &last.as_ref().expect("set above").1;
        let tr = sh.tr(r);
        let drr = sh.k * r / (tr * sh.q);
        let dth = T::one() + (sh.u * sh.u + sh.u * cst(2.0)) / sh.k;
        worst = worst.max((tr * (drr * dth).abs() - r).abs());
    }
    Ok(worst)
}

/// Polar Jacobian `[[∂_r T^r, ∂_θ T^r], [∂_r T^θ, ∂_θ T^θ]]` by central
/// differences with step `h`.
pub fn jacobian_fd<T: Real>(patch: &PolarPatch<T>, params: &TransportParams<T>, r: T, theta: T, h: T) -> [[T; 2]; 2] {
    let a = params.a;
    let two_h = h * cst(2.0);
    let (rp, rm) = (map_unchecked(patch, a, r + h, theta), map_unchecked(patch, a, r - h, theta));
    let (tp, tm) = (map_unchecked(patch, a, r, theta + h), map_unchecked(patch, a, r, theta - h));
    [[(rp.0 - rm.0) / two_h, (tp.0 - tm.0) / two_h], [(rp.1 - rm.1) / two_h, (tp.1 - tm.1) / two_h]]
}

/// `∫_D |T(x) − x|²` over the shell: Gauss–Legendre in `r`, trapezoid in θ.
pub fn transport_cost<T: Real>(patch: &PolarPatch<T>, params: &TransportParams<T>, grid: &TransportGrid) -> Result<T> {
    check_args(patch, params)?;
    grid.validate()?;
    let a = params.a;
    let inner = T::one() - a;
    let rule = GaussLegendre::<T>::new(grid.radial.clamp(2, 64));
    let panels = grid.radial.div_ceil(64).max(1);
    let mut total = T::zero();
    for j in 0..grid.angular {
        let theta = T::two_pi() * from_usize(j) / from_usize(grid.angular);
        let sh = Shell::new(patch, a, theta);
        let dphi = f_accumulated(patch, theta) / sh.k;
        let c = dphi.cos();
        for p in 0..panels {
            let lo = inner + (sh.rad - inner) * from_usize(p) / from_usize(panels);
            let hi = inner + (sh.rad - inner) * from_usize(p + 1) / from_usize(panels);
            total += rule.integrate(lo, hi, |r| {
                let tr = sh.tr(r);
                (tr * tr + r * r - tr * r * c * cst(2.0)) * r
            });
        }
    }
    Ok(total * T::two_pi() / from_usize(grid.angular))
}

/// `a∫u² + (1/a)∫f²`.
pub fn cost_bound_rhs<T: Real>(patch: &PolarPatch<T>, a: T) -> T {
    let u2 = patch.trapezoid(|t| patch.u(t).powi(2));
    let f2 = patch.trapezoid(|t| f_accumulated(patch, t).powi(2));
    a * u2 + f2 / a
}

/// Largest `|T^r − r|/|u(θ)|` over the shell grid.
pub fn radial_displacement_constant<T: Real>(
    patch: &PolarPatch<T>,
    params: &TransportParams<T>,
    grid: &TransportGrid,
) -> Result<T> {
    check_args(patch, params)?;
    let mut worst = T::zero();
    for (r, theta) in grid.nodes(patch, params.a) {
        let u = patch.u(theta);
        if u.abs() > T::default_epsilon().sqrt() {
            let (tr, _) = map_unchecked(patch, params.a, r, theta);
            worst = worst.max((tr - r).abs() / u.abs());
        }
    }
    Ok(worst)
}

/// Whether `θ ↦ T^θ` and `r ↦ T^r` increase along the sampled grid.
pub fn map_is_monotone<T: Real>(patch: &PolarPatch<T>, params: &TransportParams<T>, grid: &TransportGrid) -> Result<bool> {
    check_args(patch, params)?;
    let a = params.a;
    let mut prev_t: Option<T> = None;
    for j in 0..=grid.angular {
        let theta = T::two_pi() * from_usize(j) / from_usize(grid.angular);
        let (_, tt) = map_unchecked(patch, a, T::one(), theta);
        if prev_t.is_some_and(|p| tt <= p) {
            return Ok(false);
        }
        prev_t = Some(tt);
        let mut prev_r = T::one() - a;
        let rad = patch.radius(theta);
        for i in 1..=grid.radial {
            let r = T::one() - a + (rad - (T::one() - a)) * from_usize(i) / from_usize(grid.radial);
            let (tr, _) = map_unchecked(patch, a, r, theta);
            if tr <= prev_r {
                return Ok(false);
            }
            prev_r = tr;
        }
    }
    Ok(true)
}

/// `(‖f‖_∞, 3√(2π)/m ‖u‖_{L²})`.
pub fn jensen_check<T: Real>(patch: &PolarPatch<T>) -> (T, T) {
    let n = patch.grid_size();
    let sup = (0..n).fold(T::zero(), |s, j| s.max(f_accumulated(patch, patch.grid_angle(j)).abs()));
    let l2 = patch.trapezoid(|t| patch.u(t).powi(2)).sqrt();
    (sup, cst::<T>(3.0) * T::two_pi().sqrt() / from_usize(patch.m()) * l2)
}

/// Quadrature settings for `H₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoeperConfig {
    /// Gauss–Legendre order per radial and angular panel.
    pub order: usize,
    /// Uniform angular panels on `[0, π/m]`, before crossing points are added.
    pub angular_panels: usize,
    /// Truncation radius relative to `max(1, r_max)`; beyond it the exact
    /// multipole energy is added.
    pub truncation: f64,
    pub quadrature: QuadratureConfig,
}

impl Default for LoeperConfig {
    fn default() -> Self {
        Self { order: 12, angular_panels: 4, truncation: 1.25, quadrature: QuadratureConfig::default() }
    }
}

/// `H₂` with an error estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoeperValue<T> {
    pub value: T,
    pub error_estimate: T,
    /// Contribution of `|x| > R_T`.
    pub tail: T,
}

/// `‖∇𝒩 * (1_D − 1_B)‖²_{L²(ℝ²)}`: polar quadrature on `|x| < R_T` with
/// panels split at `|x| = 1` and `|x| = 1 + u(θ)`, plus the exterior
/// multipole energy `π Σ k A_k² R_T^{−2k}`.
pub fn loeper_lhs<T: Real>(patch: &PolarPatch<T>, cfg: &LoeperConfig) -> Result<LoeperValue<T>> {
    require_unit_area(patch)?;
    cfg.quadrature.validate()?;
    if cfg.order < 4 || cfg.angular_panels == 0 || !(cfg.truncation >= 1.0) {
        return Err(Error::InvalidParameter("loeper config needs order >= 4, panels > 0, truncation >= 1".into()));
    }
    let r_t = patch.r_max().max(T::one()) * cst(cfg.truncation);
    let grad = field_evaluator(patch, &cfg.quadrature)?;
    let fine = loeper_interior(patch, r_t, cfg.order, cfg.angular_panels, &grad)?;
    let coarse = loeper_interior(patch, r_t, cfg.order - 4, cfg.angular_panels, &grad)?;
    let tail = multipole_tail(patch, r_t);
    Ok(LoeperValue { value: fine + tail, error_estimate: (fine - coarse).abs(), tail })
}

type FieldFn<'a, T> = Box<dyn Fn([T; 2]) -> Result<[T; 2]> + Sync + 'a>;

/// `∇(1_D * 𝒩)` valid on and off the patch: the monotone kernel form when
/// available, otherwise a fine boundary integral.
fn field_evaluator<'a, T: Real>(patch: &'a PolarPatch<T>, cfg: &'a QuadratureConfig) -> Result<FieldFn<'a, T>> {
    if MonotoneProfile::new(patch).is_ok() {
        return Ok(Box::new(move |x: [T; 2]| {
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            let theta = x[1].atan2(x[0]);
            let g = grad_phi_m_monotone_with(patch, r, theta, cfg)?;
            let gr = phi_r_prime(patch, r)? + g.value[0];
            let (c, s) = (x[0] / r, x[1] / r);
            Ok([gr * c - g.value[1] * s, gr * s + g.value[1] * c])
        }));
    }
    let n = (crate::potential::boundary_nodes(patch, cfg) * 16).min(1 << 18);
    let b = BoundaryIntegrator::new(patch, n, T::zero())?;
    Ok(Box::new(move |x: [T; 2]| Ok(b.grad_at(x))))
}

fn loeper_interior<T: Real>(
    patch: &PolarPatch<T>,
    r_t: T,
    order: usize,
    panels: usize,
    grad: &FieldFn<'_, T>,
) -> Result<T> {
    let rule = GaussLegendre::<T>::new(order);
    let half = patch.period() * cst(0.5);
    let tol = T::default_epsilon() * cst(16.0);
    let crossings = periodic_roots(|t| patch.u(t), patch.period(), (patch.grid_size() / patch.m()).max(64), tol);
    let mut cuts: Vec<T> = (0..=panels).map(|k| half * from_usize(k) / from_usize(panels)).collect();
    cuts.extend(crossings.into_iter().filter(|&c| c > T::zero() && c < half));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let ray = |theta: T| -> Result<T> {
        let rad = patch.radius(theta);
        let (lo, hi) = (rad.min(T::one()), rad.max(T::one()));
        let (s, c) = theta.sin_cos();
        let mut acc = T::zero();
        for (a, b) in [(T::zero(), lo), (lo, hi), (hi, r_t)] {
            if b <= a {
                continue;
            }
            for (r, w) in rule.mapped(a, b) {
                let x = [r * c, r * s];
                let g = grad(x)?;
                let gb = if r < T::one() { r * cst(0.5) } else { cst::<T>(0.5) / r };
                let d = [g[0] - gb * c, g[1] - gb * s];
                acc += w * r * (d[0] * d[0] + d[1] * d[1]);
            }
        }
        Ok(acc)
    };
    let mut total = T::zero();
    for w in cuts.windows(2) {
        for (theta, wt) in rule.mapped(w[0], w[1]) {
            total += wt * ray(theta)?;
        }
    }
    Ok(total * from_usize(2 * patch.m()))
}

/// Energy of the exterior expansion `Σ A_k r^{−k} cos(kθ)`,
/// `A_k = −(1/2πk)∫_D r^k cos(kθ)`, outside radius `r_t ≥ r_max`.
fn multipole_tail<T: Real>(patch: &PolarPatch<T>, r_t: T) -> T {
    let m = patch.m();
    let mut total = T::zero();
    for j in 1..=4000 {
        let k = j * m;
        let kf: T = from_usize(k);
        let moment = patch.trapezoid(|t| {
            let rad = patch.radius(t);
            (rad / r_t).powi(k as i32) * rad * rad / (kf + cst(2.0)) * (t * kf).cos()
        });
        let a_k = -moment / (T::two_pi() * kf);
        let term = T::pi() * kf * a_k * a_k;
        total += term;
        if term <= total * T::default_epsilon() && j > 4 {
            break;
        }
    }
    total
}

/// `H₂ = ∫_{B∖D} φ − ∫_{D∖B} φ` with `φ = 𝒩 * (1_D − 1_B)`; an independent
/// evaluation of the same energy.
pub fn loeper_energy_form<T: Real>(patch: &PolarPatch<T>, order: usize, cfg: &QuadratureConfig) -> Result<T> {
    require_unit_area(patch)?;
    let rule = GaussLegendre::<T>::new(order);
    let half = patch.period() * cst(0.5);
    let tol = T::default_epsilon() * cst(16.0);
    let crossings = periodic_roots(|t| patch.u(t), patch.period(), (patch.grid_size() / patch.m()).max(64), tol);
    let mut cuts: Vec<T> = (0..=8).map(|k| half * from_usize(k) / from_usize(8usize)).collect();
    cuts.extend(crossings.into_iter().filter(|&c| c > T::zero() && c < half));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= tol);
    let green = crate::potential::GreenEvaluator::new(patch, cfg)?;
    let mut total = T::zero();
    for w in cuts.windows(2) {
        for (theta, wt) in rule.mapped(w[0], w[1]) {
            let rad = patch.radius(theta);
            let (lo, hi) = (rad.min(T::one()), rad.max(T::one()));
            let sign = if rad > T::one() { -T::one() } else { T::one() };
            let (s, c) = theta.sin_cos();
            for (r, wr) in rule.mapped(lo, hi) {
                let psi_d = green.stream([r * c, r * s])?.value;
                let psi_b = if r < T::one() { (r * r - T::one()) * cst(0.25) } else { r.ln() * cst(0.5) };
                total += wt * wr * r * sign * (psi_d - psi_b);
            }
        }
    }
    Ok(total * from_usize(2 * patch.m()))
}

/// Full report for one shell depth, reusing a precomputed `H₂`.
pub fn transport_report<T: Real>(
    patch: &PolarPatch<T>,
    params: &TransportParams<T>,
    grid: &TransportGrid,
    loeper: &LoeperValue<T>,
) -> Result<TransportReport<T>> {
    let cost = transport_cost(patch, params, grid)?;
    let jacobian_residual = pushforward_check(patch, params, grid)?;
    let bound_rhs = cost_bound_rhs(patch, params.a);
    let bound_ratio = if bound_rhs > T::zero() { cost / bound_rhs } else { T::zero() };
    Ok(TransportReport {
        a: params.a,
        cost,
        jacobian_residual,
        bound_rhs,
        bound_ratio,
        loeper_lhs: loeper.value,
        loeper_error_estimate: loeper.error_estimate,
        loeper_holds: loeper.value <= cost,
    })
}

/// `H₂` and the per-`a` report.
pub fn loeper_check<T: Real>(
    patch: &PolarPatch<T>,
    params: &TransportParams<T>,
    grid: &TransportGrid,
    cfg: &LoeperConfig,
) -> Result<TransportReport<T>> {
    let h2 = loeper_lhs(patch, cfg)?;
    transport_report(patch, params, grid, &h2)
}
