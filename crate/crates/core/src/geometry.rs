//! Patch representations and purely geometric functionals.
//!
//! A [`PolarPatch`] is the region `r < 1 + u(θ)` with
//! `u(θ) = a₀ + Σ_{n≥1} a_n cos(n m θ)`. θ-integrals of smooth periodic
//! integrands use the uniform trapezoid rule on `grid_size` nodes; integrands
//! with kinks (absolute values, minima) are split at their kinks and
//! integrated with Gauss–Legendre panels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::nelder_mead;
use crate::quad::{bisect, integrate_piecewise, periodic_roots, GaussLegendre};
use crate::real::{cst, from_usize, Real};

pub const DEFAULT_GRID: usize = 2048;

fn default_grid() -> usize {
    DEFAULT_GRID
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolarPatchRaw<T> {
    m: usize,
    coeffs: Vec<T>,
    #[serde(default = "default_grid")]
    grid_size: usize,
}

/// Star-shaped, even, m-fold symmetric patch given as a cosine polar graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolarPatchRaw<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct PolarPatch<T> {
    m: usize,
    coeffs: Vec<T>,
    grid_size: usize,
}

impl<T: Real> TryFrom<PolarPatchRaw<T>> for PolarPatch<T> {
    type Error = Error;
    fn try_from(raw: PolarPatchRaw<T>) -> Result<Self> {
        Self::new(raw.m, raw.coeffs, raw.grid_size)
    }
}

/// Σ_{k=0}^{N} c_k cos(kφ) by Clenshaw recurrence.
pub(crate) fn cos_series<T: Real>(c: &[T], phi: T) -> T {
    let co = phi.cos();
    let two_c = co + co;
    let (mut b1, mut b2) = (T::zero(), T::zero());
    for k in (1..c.len()).rev() {
        let b0 = c[k] + two_c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    c[0] + co * b1 - b2
}

/// Σ_{k=1}^{N} w(k) c_k sin(kφ) by Clenshaw recurrence.
pub(crate) fn sin_series<T: Real>(c: &[T], phi: T, w: impl Fn(usize) -> T) -> T {
    let (s, co) = phi.sin_cos();
    let two_c = co + co;
    let (mut b1, mut b2) = (T::zero(), T::zero());
    for k in (1..c.len()).rev() {
        let b0 = w(k) * c[k] + two_c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    s * b1
}

/// Σ_{k=0}^{N} w(k) c_k cos(kφ) by Clenshaw recurrence.
pub(crate) fn cos_series_weighted<T: Real>(c: &[T], phi: T, w: impl Fn(usize) -> T) -> T {
    let co = phi.cos();
    let two_c = co + co;
    let (mut b1, mut b2) = (T::zero(), T::zero());
    for k in (1..c.len()).rev() {
        let b0 = w(k) * c[k] + two_c * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    w(0) * c[0] + co * b1 - b2
}

impl<T: Real> PolarPatch<T> {
    /// Validates `m ≥ 1`, a non-empty coefficient list, a usable grid and
    /// `1 + u > 0` on the grid.
    pub fn new(m: usize, coeffs: Vec<T>, grid_size: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPatch("fold symmetry m must be at least 1".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidPatch("coefficient list is empty".into()));
        }
        if grid_size < 8 {
            return Err(Error::InvalidPatch(format!("grid_size {grid_size} is below 8")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPatch("non-finite coefficient".into()));
        }
        let patch = Self { m, coeffs, grid_size };
        if let Some(j) = (0..grid_size).find(|&j| patch.radius(patch.grid_angle(j)) <= T::zero()) {
            return Err(Error::InvalidPatch(format!("1 + u <= 0 at grid node {j}")));
        }
        Ok(patch)
    }

    /// Unit disk with nominal symmetry `m`.
    pub fn disk(m: usize) -> Self {
        Self { m: m.max(1), coeffs: vec![T::zero()], grid_size: DEFAULT_GRID }
    }

    /// `u = ε cos(mθ)`.
    pub fn single_mode(m: usize, eps: T) -> Result<Self> {
        Self::new(m, vec![T::zero(), eps], DEFAULT_GRID)
    }

    /// Fits `modes` cosine coefficients to a radius function `radius(θ)` that
    /// is even and `2π/m`-periodic.
    pub fn from_radius_fn(m: usize, modes: usize, grid_size: usize, radius: impl Fn(T) -> T) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPatch("fold symmetry m must be at least 1".into()));
        }
        let samples = (8 * (modes + 1)).max(256);
        let period = T::two_pi() / from_usize(m);
        let h = period / from_usize(samples);
        let vals: Vec<T> = (0..samples).map(|j| radius(h * from_usize(j)) - T::one()).collect();
        let mut coeffs = Vec::with_capacity(modes + 1);
        for n in 0..=modes {
            let mut s = T::zero();
            for (j, v) in vals.iter().enumerate() {
                let phi = T::two_pi() * from_usize((n * j) % samples) / from_usize(samples);
                s += *v * phi.cos();
            }
            let scale: T = if n == 0 { T::one() } else { cst(2.0) };
            coeffs.push(s * scale / from_usize(samples));
        }
        Self::new(m, coeffs, grid_size)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Fourier degree `N` (index of the last stored coefficient).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Largest `n` whose coefficient is non-negligible relative to the rest.
    pub fn effective_degree(&self) -> usize {
        let scale = self.coeffs.iter().skip(1).fold(T::zero(), |a, c| a.max(c.abs()));
        if scale == T::zero() {
            return 0;
        }
        let cut = scale * cst(1e-15);
        (1..self.coeffs.len()).rev().find(|&n| self.coeffs[n].abs() > cut).unwrap_or(0)
    }

    pub fn with_grid_size(&self, grid_size: usize) -> Result<Self> {
        Self::new(self.m, self.coeffs.clone(), grid_size)
    }

    pub fn period(&self) -> T {
        T::two_pi() / from_usize(self.m)
    }

    pub fn grid_angle(&self, j: usize) -> T {
        T::two_pi() * from_usize(j) / from_usize(self.grid_size)
    }

    pub fn u(&self, theta: T) -> T {
        cos_series(&self.coeffs, theta * from_usize(self.m))
    }

    pub fn du(&self, theta: T) -> T {
        let m: T = from_usize(self.m);
        -m * sin_series(&self.coeffs, theta * m, |k| from_usize(k))
    }

    pub fn d2u(&self, theta: T) -> T {
        let m: T = from_usize(self.m);
        -m * m * cos_series_weighted(&self.coeffs, theta * m, |k| from_usize(k * k))
    }

    pub fn radius(&self, theta: T) -> T {
        T::one() + self.u(theta)
    }

    /// Boundary point at angle θ.
    pub fn boundary_point(&self, theta: T) -> [T; 2] {
        let r = self.radius(theta);
        let (s, c) = theta.sin_cos();
        [r * c, r * s]
    }

    /// Whether `x` lies strictly inside the patch.
    pub fn contains(&self, x: [T; 2]) -> bool {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        r < self.radius(x[1].atan2(x[0]))
    }

    /// Trapezoid rule over the full circle on the patch grid.
    pub fn trapezoid(&self, f: impl Fn(T) -> T) -> T {
        let n = self.grid_size;
        let s = (0..n).fold(T::zero(), |acc, j| acc + f(self.grid_angle(j)));
        s * T::two_pi() / from_usize(n)
    }

    fn refine_extremum(&self, f: impl Fn(T) -> T, maximize: bool) -> T {
        let n = self.grid_size;
        let sign = if maximize { T::one() } else { -T::one() };
        let (jbest, _) = (0..n)
            .map(|j| (j, sign * f(self.grid_angle(j))))
            .fold((0, -T::max_value().unwrap_or(cst(1e300))), |a, b| if b.1 > a.1 { b } else { a });
        let h = T::two_pi() / from_usize(n);
        let (mut lo, mut hi) = (self.grid_angle(jbest) - h, self.grid_angle(jbest) + h);
        let g: T = cst(0.618_033_988_749_894_8);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (sign * f(x1), sign * f(x2));
        for _ in 0..80 {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = sign * f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = sign * f(x2);
            }
        }
        let best = sign * f((lo + hi) * cst(0.5));
        let grid_best = sign * f(self.grid_angle(jbest));
        sign * best.max(grid_best)
    }

    /// `max (1 + u)`.
    pub fn r_max(&self) -> T {
        self.refine_extremum(|t| self.radius(t), true)
    }

    /// `min (1 + u)`.
    pub fn r_min(&self) -> T {
        self.refine_extremum(|t| self.radius(t), false)
    }

    /// `‖u‖_∞`.
    pub fn sup_norm(&self) -> T {
        self.refine_extremum(|t| self.u(t).abs(), true)
    }

    /// Uniform dilation: `1 + u' = s(1 + u)`.
    pub fn dilate(&self, s: T) -> Result<Self> {
        if s <= T::zero() {
            return Err(Error::InvalidParameter("dilation factor must be positive".into()));
        }
        let mut coeffs: Vec<T> = self.coeffs.iter().map(|&c| c * s).collect();
        coeffs[0] = s * (T::one() + self.coeffs[0]) - T::one();
        Self::new(self.m, coeffs, self.grid_size)
    }

    /// Strict decrease of `u` on the interior grid nodes of `(0, π/m)`.
    pub fn is_monotone(&self) -> bool {
        let half = self.period() * cst(0.5);
        let mut interior = 0;
        for j in 1..self.grid_size {
            let t = self.grid_angle(j);
            if t >= half {
                break;
            }
            interior += 1;
            if self.du(t) >= T::zero() {
                return false;
            }
        }
        interior > 0 || self.du(half * cst(0.5)) < T::zero()
    }

    /// Cosine coefficients `(d₀, d₁, …)` of `u² + 2u` in the basis `cos(k m θ)`.
    pub(crate) fn square_plus_twice_coeffs(&self) -> Vec<T> {
        let a = &self.coeffs;
        let n = a.len();
        let mut d = vec![T::zero(); 2 * n - 1];
        let half: T = cst(0.5);
        for i in 0..n {
            for j in 0..n {
                let p = a[i] * a[j] * half;
                d[i + j] += p;
                d[i.abs_diff(j)] += p;
            }
        }
        for (k, &ak) in a.iter().enumerate() {
            d[k] += ak + ak;
        }
        d
    }
}

/// Area `π + ½∫(u² + 2u)`.
pub fn area<T: Real>(patch: &PolarPatch<T>) -> T {
    let two: T = cst(2.0);
    let half: T = cst(0.5);
    T::pi() + half * patch.trapezoid(|t| {
        let u = patch.u(t);
        u * u + two * u
    })
}

/// Rescales the patch to area π.
pub fn normalize_area<T: Real>(patch: &PolarPatch<T>) -> Result<PolarPatch<T>> {
    let a = area(patch);
    if a <= T::zero() {
        return Err(Error::InvalidPatch("non-positive area".into()));
    }
    patch.dilate((T::pi() / a).sqrt())
}

pub(crate) fn require_unit_area<T: Real>(patch: &PolarPatch<T>) -> Result<()> {
    let a = area(patch);
    if ((a - T::pi()) / T::pi()).abs() > T::area_tolerance() {
        return Err(Error::AreaNotNormalized { area: a.as_f64() });
    }
    Ok(())
}

/// `∫_D |x|² − |D|²/2π = ∫(u² + u³ + u⁴/4)` for an area-π patch.
pub fn second_moment_excess<T: Real>(patch: &PolarPatch<T>) -> Result<T> {
    require_unit_area(patch)?;
    let quarter: T = cst(0.25);
    Ok(patch.trapezoid(|t| {
        let u = patch.u(t);
        let u2 = u * u;
        u2 + u2 * u + quarter * u2 * u2
    }))
}

/// `∫_D |x|²` by polar quadrature.
pub fn second_moment<T: Real>(patch: &PolarPatch<T>) -> T {
    patch.trapezoid(|t| patch.radius(t).powi(4)) * cst(0.25)
}

/// `f(θ) = ∫₀^θ (u² + 2u)`, evaluated from the exact Fourier product.
pub fn f_accumulated<T: Real>(patch: &PolarPatch<T>, theta: T) -> T {
    let d = patch.square_plus_twice_coeffs();
    accumulated_from_coeffs(&d, patch.m, theta)
}

pub(crate) fn accumulated_from_coeffs<T: Real>(d: &[T], m: usize, theta: T) -> T {
    let mf: T = from_usize(m);
    d[0] * theta + sin_series(d, theta * mf, |k| T::one() / (mf * from_usize(k)))
}

fn sgn<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

/// `𝒜₀ = (1/π)∫(|u| + sgn(u)u²/2)` (symmetric difference with the unit disk).
pub fn asymmetry_origin<T: Real>(patch: &PolarPatch<T>) -> Result<T> {
    require_unit_area(patch)?;
    let period = patch.period();
    let tol = period * T::default_epsilon() * cst(4.0);
    let samples = (patch.grid_size / patch.m).max(64);
    let roots = periodic_roots(|t| patch.u(t), period, samples, tol);
    let rule = GaussLegendre::new(16);
    let half: T = cst(0.5);
    let per = integrate_piecewise(&rule, period, &roots, 16, |t| {
        let u = patch.u(t);
        u.abs() + sgn(u) * u * u * half
    });
    Ok(per * from_usize(patch.m) / T::pi())
}

/// Fraenkel asymmetry with the minimising centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryResult<T> {
    pub value: T,
    pub center: [T; 2],
    /// Value with the centre fixed at the origin.
    pub origin_value: T,
}

/// `|D ∩ B(x₀)|` for the unit disk centred at `x₀`, `|x₀| < 1`.
pub fn overlap_with_unit_disk<T: Real>(patch: &PolarPatch<T>, x0: [T; 2]) -> T {
    let q = x0[0] * x0[0] + x0[1] * x0[1];
    let s2 = |t: T| {
        let (s, c) = t.sin_cos();
        let p = x0[0] * c + x0[1] * s;
        p + (p * p - q + T::one()).sqrt()
    };
    let tol = T::default_epsilon() * cst(8.0);
    let roots = periodic_roots(|t| patch.radius(t) - s2(t), T::two_pi(), patch.grid_size, tol);
    let rule = GaussLegendre::new(16);
    let half: T = cst(0.5);
    integrate_piecewise(&rule, T::two_pi(), &roots, 64, |t| {
        let r = patch.radius(t).min(s2(t));
        half * r * r
    })
}

fn asymmetry_at<T: Real>(patch: &PolarPatch<T>, x0: [T; 2]) -> T {
    (T::pi() + T::pi() - overlap_with_unit_disk(patch, x0) * cst(2.0)) / T::pi()
}

/// `inf_x |D △ B(x)|/π` over centres `|x| ≤ ½`: coarse grid, then simplex
/// refinement from the origin, the centroid and the best grid node.
pub fn fraenkel_asymmetry<T: Real>(patch: &PolarPatch<T>) -> Result<AsymmetryResult<T>> {
    require_unit_area(patch)?;
    let radius: T = cst(0.5);
    let eval = |x: [T; 2]| {
        let n2 = x[0] * x[0] + x[1] * x[1];
        if n2 > radius * radius {
            // Outside the search disk: penalise by distance.
            asymmetry_at(patch, [x[0] * radius / n2.sqrt(), x[1] * radius / n2.sqrt()]) + (n2.sqrt() - radius)
        } else {
            asymmetry_at(patch, x)
        }
    };
    let origin_value = eval([T::zero(), T::zero()]);
    let mut best = ([T::zero(), T::zero()], origin_value);
    let steps = 10;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = [
                -radius + radius * cst(2.0) * from_usize(i) / from_usize(steps),
                -radius + radius * cst(2.0) * from_usize(j) / from_usize(steps),
            ];
            if x[0] * x[0] + x[1] * x[1] > radius * radius {
                continue;
            }
            let v = eval(x);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    let centroid = mass_center(patch);
    let seeds = [[T::zero(), T::zero()], centroid, best.0];
    let xtol: T = cst(1e-7);
    let ftol = T::default_epsilon() * cst(64.0);
    let mut candidates = Vec::new();
    for seed in seeds {
        let r = nelder_mead(eval, seed, cst(0.05), xtol, ftol, 400);
        if !r.converged {
            return Err(Error::NoConvergence(format!(
                "simplex search for the Fraenkel centre did not converge in {} iterations",
                r.iterations
            )));
        }
        candidates.push((r.point, r.value));
    }
    candidates.push(([T::zero(), T::zero()], origin_value));
    let tie = ftol * cst(16.0);
    let vmin = candidates.iter().fold(T::max_value().unwrap_or(cst(1e300)), |a, c| a.min(c.1));
    let (center, value) = candidates
        .into_iter()
        .filter(|c| c.1 <= vmin + tie)
        .min_by(|a, b| {
            let na = a.0[0] * a.0[0] + a.0[1] * a.0[1];
            let nb = b.0[0] * b.0[0] + b.0[1] * b.0[1];
            na.partial_cmp(&nb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(([T::zero(), T::zero()], origin_value));
    Ok(AsymmetryResult { value: value.min(origin_value), center, origin_value })
}

/// Monotone view of a patch: caches the extremal radii and inverts `1 + u`
/// on `(0, π/m)`.
#[derive(Clone, Debug)]
pub struct MonotoneProfile<'a, T> {
    patch: &'a PolarPatch<T>,
    r_min: T,
    r_max: T,
    tol: T,
}

impl<'a, T: Real> MonotoneProfile<'a, T> {
    pub fn new(patch: &'a PolarPatch<T>) -> Result<Self> {
        if !patch.is_monotone() {
            return Err(Error::NotMonotone("derivative of u is not negative on interior grid nodes".into()));
        }
        let half = patch.period() * cst(0.5);
        let tol: T = cst::<T>(1e-13).max(T::default_epsilon() * cst(8.0));
        Ok(Self { patch, r_min: patch.radius(half), r_max: patch.radius(T::zero()), tol })
    }

    pub fn patch(&self) -> &PolarPatch<T> {
        self.patch
    }

    pub fn r_min(&self) -> T {
        self.r_min
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    /// Half-width `η(r)` of the angular set inside the patch; saturates to
    /// `π/m` below `r_min` and `0` above `r_max`.
    pub fn eta_clamped(&self, r: T) -> T {
        let half = self.patch.period() * cst(0.5);
        if r >= self.r_max {
            return T::zero();
        }
        if r <= self.r_min {
            return half;
        }
        bisect(|t| self.patch.radius(t) - r, T::zero(), half, self.tol)
    }

    pub fn eta(&self, r: T) -> Result<T> {
        if !(r > self.r_min && r < self.r_max) {
            return Err(Error::OutOfRange(format!(
                "radius {} outside ({}, {})",
                r.as_f64(),
                self.r_min.as_f64(),
                self.r_max.as_f64()
            )));
        }
        Ok(self.eta_clamped(r))
    }
}

/// Inverse of `1 + u` on `(0, π/m)` for monotone patches.
pub fn eta_inverse<T: Real>(patch: &PolarPatch<T>, r: T) -> Result<T> {
    MonotoneProfile::new(patch)?.eta(r)
}

/// Centroid `(1/|D|)∫_D x dx`.
pub fn mass_center<T: Real>(patch: &PolarPatch<T>) -> [T; 2] {
    let third: T = cst(1.0 / 3.0);
    let mx = patch.trapezoid(|t| patch.radius(t).powi(3) * t.cos()) * third;
    let my = patch.trapezoid(|t| patch.radius(t).powi(3) * t.sin()) * third;
    let a = area(patch);
    [mx / a, my / a]
}

/// Kirchhoff ellipse with semi-axes `a ≥ b > 0` along the coordinate axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsePatch<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> EllipsePatch<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(b > T::zero() && b <= a && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("ellipse requires 0 < b <= a, got a={}, b={}", a.as_f64(), b.as_f64())));
        }
        Ok(Self { a, b })
    }

    /// Area-π ellipse `(a, 1/a)`.
    pub fn unit_area(a: T) -> Result<Self> {
        Self::new(a, T::one() / a)
    }

    pub fn area(&self) -> T {
        T::pi() * self.a * self.b
    }

    /// `ab/(a+b)²`.
    pub fn omega_exact(&self) -> T {
        self.a * self.b / (self.a + self.b).powi(2)
    }

    /// `∫_D |x|² = (π/4)ab(a² + b²)`.
    pub fn second_moment(&self) -> T {
        T::pi() * cst(0.25) * self.a * self.b * (self.a * self.a + self.b * self.b)
    }

    /// `∫_D |x|² − |D|²/2π`.
    pub fn second_moment_excess(&self) -> T {
        self.second_moment() - self.area().powi(2) / T::two_pi()
    }

    /// Peak value `c = a²b²/(a²+b²)` of the torsion function.
    pub fn torsion_constant(&self) -> T {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        a2 * b2 / (a2 + b2)
    }

    /// `p(x) = c(1 − x₁²/a² − x₂²/b²)`.
    pub fn torsion(&self, x: [T; 2]) -> T {
        self.torsion_constant() * (T::one() - (x[0] / self.a).powi(2) - (x[1] / self.b).powi(2))
    }

    /// `∫_D p = πa³b³/(2(a² + b²))`.
    pub fn torsion_integral(&self) -> T {
        T::pi() * (self.a * self.b).powi(3) / ((self.a * self.a + self.b * self.b) * cst(2.0))
    }

    /// Exact interior gradient of `1_D * 𝒩`.
    pub fn interior_gradient(&self, x: [T; 2]) -> [T; 2] {
        let s = self.a + self.b;
        [self.b * x[0] / s, self.a * x[1] / s]
    }

    /// Exact interior value of `1_D * 𝒩`.
    pub fn interior_stream(&self, x: [T; 2]) -> T {
        let s = self.a + self.b;
        let half: T = cst(0.5);
        let base = self.a * self.b * cst(0.25) * (((s * half).ln() * cst(2.0)) - T::one());
        base + (self.b * x[0] * x[0] + self.a * x[1] * x[1]) / (s * cst(2.0))
    }

    pub fn radius(&self, theta: T) -> T {
        let (s, c) = theta.sin_cos();
        self.a * self.b / ((self.b * c).powi(2) + (self.a * s).powi(2)).sqrt()
    }

    pub fn contains(&self, x: [T; 2]) -> bool {
        (x[0] / self.a).powi(2) + (x[1] / self.b).powi(2) < T::one()
    }

    /// Polar-graph representation with `modes` cosine modes in `cos(2nθ)`.
    pub fn to_polar(&self, modes: usize, grid_size: usize) -> Result<PolarPatch<T>> {
        PolarPatch::from_radius_fn(2, modes, grid_size, |t| self.radius(t))
    }

    /// Number of modes needed for the polar representation to reach
    /// coefficient size below `tol`.
    pub fn modes_for(&self, tol: f64) -> usize {
        let ratio = (self.b / self.a).as_f64();
        // Singularity of the radius at Im θ = atanh(b/a) sets the decay rate.
        let rate = 2.0 * ratio.atanh();
        if rate <= 0.0 {
            return 1;
        }
        (((1.0 / tol).ln() / rate).ceil() as usize + 4).max(4)
    }
}

/// Candidate or converged rotating patch `(D, Ω)` with `λ = ½ − Ω`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RotatingStateRaw<T>", bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RotatingState<T> {
    pub patch: PolarPatch<T>,
    pub omega: T,
    pub lambda: T,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
struct RotatingStateRaw<T> {
    patch: PolarPatch<T>,
    omega: T,
    #[serde(default)]
    #[allow(dead_code)]
    lambda: Option<T>,
}

impl<T: Real> TryFrom<RotatingStateRaw<T>> for RotatingState<T> {
    type Error = Error;
    fn try_from(raw: RotatingStateRaw<T>) -> Result<Self> {
        Ok(Self::new(raw.patch, raw.omega))
    }
}

impl<T: Real> RotatingState<T> {
    pub fn new(patch: PolarPatch<T>, omega: T) -> Self {
        let lambda = cst::<T>(0.5) - omega;
        Self { patch, omega, lambda }
    }
}
