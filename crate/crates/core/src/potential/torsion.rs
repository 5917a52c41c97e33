//! Torsion function `Δp = −2` in `D`, `p = 0` on `∂D`, as
//! `p = −|x|²/2 + Σ c_k (r/r_s)^{km} cos(kmθ)`, or `p = −|x|²/2 + h` with
//! `h` a double-layer potential when the polynomial fit cannot resolve the
//! boundary.

use nalgebra::{DMatrix, DVector};

use super::BoundaryIntegrator;
use crate::error::{Error, Result};
use crate::geometry::PolarPatch;
use crate::real::{cst, from_usize, Real};

fn max_condition<T: Real>() -> f64 {
    1e12f64.min(1e-2 / T::default_epsilon().as_f64())
}

fn boundary_tol<T: Real>() -> f64 {
    1e-8f64.max(1e4 * T::default_epsilon().as_f64())
}

/// Fitted torsion function of one patch.
#[derive(Clone, Debug)]
pub struct TorsionFunction<T> {
    m: usize,
    repr: Repr<T>,
    integral: T,
    integral_error: T,
    boundary_residual: T,
    condition: T,
    area: T,
}

#[derive(Clone, Debug)]
enum Repr<T> {
    Polynomial { r_scale: T, coeffs: Vec<T> },
    Layer(Layer<T>),
}

/// Double-layer density `μ` on the boundary nodes, with `h = Dμ`.
#[derive(Clone, Debug)]
struct Layer<T> {
    pts: Vec<[T; 2]>,
    /// Outward normal times `|γ'| dτ/2π`.
    nu: Vec<[T; 2]>,
    mu: Vec<T>,
    /// `μ(τ) = Σ b_n cos(nmτ)`.
    cos: Vec<T>,
}

impl<T: Real> Layer<T> {
    fn density(&self, m: usize, theta: T) -> T {
        let phi = theta * from_usize(m);
        self.cos.iter().enumerate().fold(T::zero(), |s, (n, &b)| s + b * (phi * from_usize(n)).cos())
    }

    /// Interior limit of `Dμ`, written as `Σ k(μ_j − μ(θ)) + μ(θ)` so that
    /// points near the boundary stay accurate.
    fn eval(&self, m: usize, x: [T; 2]) -> T {
        let mu0 = self.density(m, x[1].atan2(x[0]));
        let tiny = T::default_epsilon() * T::default_epsilon();
        let mut s = T::zero();
        for ((y, nu), &mu) in self.pts.iter().zip(&self.nu).zip(&self.mu) {
            let d = [y[0] - x[0], y[1] - x[1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            if d2 > tiny {
                s += (d[0] * nu[0] + d[1] * nu[1]) / d2 * (mu - mu0);
            }
        }
        s + mu0
    }
}

impl<T: Real> TorsionFunction<T> {
    /// `p(x)`.
    pub fn eval(&self, x: [T; 2]) -> T {
        let r2 = x[0] * x[0] + x[1] * x[1];
        -r2 * cst(0.5) + self.harmonic(x)
    }

    fn harmonic(&self, x: [T; 2]) -> T {
        match &self.repr {
            Repr::Polynomial { r_scale, coeffs } => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                let rho = (r / *r_scale).powi(self.m as i32);
                let phi = x[1].atan2(x[0]) * from_usize(self.m);
                let z = (rho * phi.cos(), rho * phi.sin());
                let (mut re, mut im) = (T::one(), T::zero());
                let mut s = coeffs[0];
                for &c in &coeffs[1..] {
                    let nre = re * z.0 - im * z.1;
                    im = re * z.1 + im * z.0;
                    re = nre;
                    s += c * re;
                }
                s
            }
            Repr::Layer(l) => l.eval(self.m, x),
        }
    }

    /// `∫_D p`.
    pub fn integral(&self) -> T {
        self.integral
    }

    /// Largest `|p|` over the boundary check points.
    pub fn boundary_residual(&self) -> T {
        self.boundary_residual
    }

    /// Bound on the error of [`Self::integral`]: the maximum-principle term
    /// `|D|·max|p|_∂D`, plus the refinement difference for the layer form.
    pub fn error_estimate(&self) -> T {
        self.area * self.boundary_residual + self.integral_error
    }

    /// Harmonic degree `K`; zero for the boundary-layer form.
    pub fn degree(&self) -> usize {
        match &self.repr {
            Repr::Polynomial { coeffs, .. } => coeffs.len() - 1,
            Repr::Layer(_) => 0,
        }
    }

    /// Boundary nodes of the boundary-layer form, if used.
    pub fn layer_nodes(&self) -> Option<usize> {
        match &self.repr {
            Repr::Layer(l) => Some(l.pts.len()),
            Repr::Polynomial { .. } => None,
        }
    }

    /// Condition number of the fitted linear system.
    pub fn condition(&self) -> T {
        self.condition
    }

    /// Harmonic-polynomial coefficients; empty for the boundary-layer form.
    pub fn coeffs(&self) -> &[T] {
        match &self.repr {
            Repr::Polynomial { coeffs, .. } => coeffs,
            Repr::Layer(_) => &[],
        }
    }
}

/// Torsion function with the default harmonic degree `2N`, lowered until the
/// collocation matrix has condition number below `1e12`, or raised up to
/// `8N` while the boundary residual is above tolerance. Patches the
/// polynomial fit cannot resolve fall back to a double-layer solve.
pub fn torsion_solve<T: Real>(patch: &PolarPatch<T>) -> Result<TorsionFunction<T>> {
    match torsion_polynomial(patch) {
        Err(Error::BoundaryResidual { .. } | Error::IllConditioned { .. }) => torsion_layer(patch),
        other => other,
    }
}

fn torsion_polynomial<T: Real>(patch: &PolarPatch<T>) -> Result<TorsionFunction<T>> {
    let base = (2 * patch.effective_degree()).max(1);
    let mut degree = base;
    let first = loop {
        match fit(patch, degree) {
            Err(Error::IllConditioned { .. }) if degree > 1 => degree /= 2,
            other => break other,
        }
    };
    let Err(Error::BoundaryResidual { .. }) = first else { return first };
    let mut best = first;
    while degree < 4 * base {
        degree += (base / 2).max(1);
        match fit(patch, degree) {
            Ok(t) => return Ok(t),
            Err(Error::IllConditioned { .. }) => break,
            Err(e) => best = Err(e),
        }
    }
    best
}

/// Torsion function with harmonic degree `degree`; fails instead of
/// lowering the degree.
pub fn torsion_solve_with_degree<T: Real>(patch: &PolarPatch<T>, degree: usize) -> Result<TorsionFunction<T>> {
    fit(patch, degree)
}

fn fit<T: Real>(patch: &PolarPatch<T>, degree: usize) -> Result<TorsionFunction<T>> {
    let m = patch.m();
    let half = patch.period() * cst(0.5);
    let r_scale = patch.r_max();
    let rows = (4 * (degree + 1)).max(64);
    let node = |i: usize, count: usize| half * from_usize(i) / from_usize(count - 1);
    let basis = |theta: T, k: usize| {
        let rad = patch.radius(theta);
        (rad / r_scale).powi((k * m) as i32) * (theta * from_usize(k * m)).cos()
    };
    let mut a = DMatrix::<T>::from_fn(rows, degree + 1, |i, k| basis(node(i, rows), k));
    let rhs = DVector::<T>::from_fn(rows, |i, _| patch.radius(node(i, rows)).powi(2) * cst(0.5));
    let mut scales = Vec::with_capacity(degree + 1);
    for mut col in a.column_iter_mut() {
        let n = col.norm();
        let s = if n > T::zero() { n } else { T::one() };
        col /= s;
        scales.push(s);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = sv.iter().fold((T::zero(), T::max_value().unwrap_or(cst(f64::MAX))), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let condition = if smin > T::zero() { smax / smin } else { cst(f64::INFINITY) };
    if condition.as_f64() > max_condition::<T>() {
        return Err(Error::IllConditioned { condition: condition.as_f64() });
    }
    let y = svd
        .solve(&rhs, T::zero())
        .map_err(|e| Error::InvalidParameter(format!("torsion least squares failed: {e}")))?;
    let coeffs: Vec<T> = y.iter().zip(&scales).map(|(&v, &s)| v / s).collect();

    let mut tf = TorsionFunction {
        m,
        repr: Repr::Polynomial { r_scale, coeffs },
        integral: T::zero(),
        integral_error: T::zero(),
        boundary_residual: T::zero(),
        condition,
        area: crate::geometry::area(patch),
    };
    let checks = 4 * rows;
    let mut worst = T::zero();
    for i in 0..checks {
        let th = node(i, checks);
        let rad = patch.radius(th);
        worst = worst.max((tf.harmonic(patch.boundary_point(th)) - rad * rad * cst(0.5)).abs());
    }
    tf.boundary_residual = worst;
    // ∫_D r^{km} cos(kmθ) dA = ∫ R^{km+2}/(km+2) cos(kmθ) dθ.
    let mut integral = -patch.trapezoid(|t| patch.radius(t).powi(4)) / cst(8.0);
    for (k, &c) in tf.coeffs().iter().enumerate() {
        let km = k * m;
        let p = from_usize::<T>(km + 2);
        integral += c * patch.trapezoid(|t| {
            let rad = patch.radius(t);
            rad * rad / p * (rad / r_scale).powi(km as i32) * (t * from_usize(km)).cos()
        });
    }
    tf.integral = integral;
    let tol = boundary_tol::<T>();
    if worst.as_f64() > tol {
        return Err(Error::BoundaryResidual { residual: worst.as_f64(), tolerance: tol });
    }
    Ok(tf)
}

/// Torsion function from the second-kind equation `½μ + Kμ = |x|²/2` for
/// the interior double-layer potential, Nyström-discretised on `n = 2mq`
/// nodes and reduced by the even, `2π/m`-periodic symmetry of `μ`. `q`
/// doubles until `∫_D p` settles.
pub fn torsion_layer<T: Real>(patch: &PolarPatch<T>) -> Result<TorsionFunction<T>> {
    let m = patch.m();
    let want = (16 * patch.effective_degree().max(1) * m).max(256);
    let mut q = want.div_ceil(2 * m).next_power_of_two().max(8);
    let mut prev = layer_fit(patch, q)?;
    let tol = boundary_tol::<T>();
    loop {
        q *= 2;
        let mut cur = layer_fit(patch, q)?;
        cur.integral_error = (cur.integral - prev.integral).abs();
        let settled = cur.integral_error.as_f64() <= tol * 1e-2 && cur.boundary_residual.as_f64() <= tol;
        if settled || q >= LAYER_MAX_Q {
            if cur.boundary_residual.as_f64() > tol {
                return Err(Error::BoundaryResidual { residual: cur.boundary_residual.as_f64(), tolerance: tol });
            }
            return Ok(cur);
        }
        prev = cur;
    }
}

const LAYER_MAX_Q: usize = 512;

fn layer_fit<T: Real>(patch: &PolarPatch<T>, q: usize) -> Result<TorsionFunction<T>> {
    let m = patch.m();
    let n = 2 * m * q;
    let per = 2 * q;
    let bi = BoundaryIntegrator::new(patch, n, T::zero())?;
    let class = |k: usize| {
        let r = k % per;
        r.min(per - r)
    };
    let nf: T = from_usize(n);
    let pts: Vec<[T; 2]> = (0..n).map(|k| bi.point(k)).collect();
    let nu: Vec<[T; 2]> = (0..n)
        .map(|k| {
            let t = bi.tangent(k);
            [t[1] / nf, -t[0] / nf]
        })
        .collect();
    let half: T = cst(0.5);
    let mut a = DMatrix::<T>::zeros(q + 1, q + 1);
    let mut rhs = DVector::<T>::zeros(q + 1);
    for i in 0..=q {
        let tau = bi.node_angle(i);
        let (r, dr, d2r) = (patch.radius(tau), patch.du(tau), patch.d2u(tau));
        // kernel limit κ|γ'|/4π times the node weight 2π/n
        let diag = (r * r + dr * dr * cst(2.0) - r * d2r) / ((r * r + dr * dr) * cst(2.0)) / nf;
        a[(i, i)] += half + diag;
        rhs[i] = r * r * half;
        let x = pts[i];
        for j in (0..n).filter(|&j| j != i) {
            let d = [pts[j][0] - x[0], pts[j][1] - x[1]];
            a[(i, class(j))] += (d[0] * nu[j][0] + d[1] * nu[j][1]) / (d[0] * d[0] + d[1] * d[1]);
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    let (smax, smin) = sv.iter().fold((T::zero(), cst::<T>(f64::MAX)), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    let condition = if smin > T::zero() { smax / smin } else { cst(f64::INFINITY) };
    if condition.as_f64() > max_condition::<T>() {
        return Err(Error::IllConditioned { condition: condition.as_f64() });
    }
    let reduced = a.lu().solve(&rhs).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
    let mu: Vec<T> = (0..n).map(|k| reduced[class(k)]).collect();
    let pf: T = from_usize(per);
    let cos: Vec<T> = (0..=q)
        .map(|c| {
            let s = (0..per).fold(T::zero(), |s, k| s + mu[k] * (T::two_pi() * from_usize(c * k) / pf).cos());
            if c == 0 || c == q {
                s / pf
            } else {
                s * cst(2.0) / pf
            }
        })
        .collect();
    // ∫_D Dμ = ∮ μ ∂_nψ ds with ψ = 1_D * 𝒩; each class repeats m or 2m times.
    let mut harmonic_integral = T::zero();
    for i in 0..=q {
        let g = bi.grad_at_node(i);
        let mult: T = from_usize(if i == 0 || i == q { m } else { 2 * m });
        harmonic_integral += mult * reduced[i] * (g[0] * nu[i][0] + g[1] * nu[i][1]);
    }
    harmonic_integral *= T::two_pi();
    let layer = Layer { pts, nu, mu, cos };
    let mut worst = T::zero();
    for i in 0..=q {
        let tau = bi.node_angle(i) + T::pi() / nf;
        let r = patch.radius(tau);
        worst = worst.max((layer.eval(m, patch.boundary_point(tau)) - r * r * half).abs());
    }
    Ok(TorsionFunction {
        m,
        repr: Repr::Layer(layer),
        integral: harmonic_integral - patch.trapezoid(|t| patch.radius(t).powi(4)) / cst(8.0),
        integral_error: T::zero(),
        boundary_residual: worst,
        condition,
        area: crate::geometry::area(patch),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_matches_ellipse() {
        let e = crate::geometry::EllipsePatch::new(2.0, 0.5).unwrap();
        let p = e.to_polar(e.modes_for(1e-15), 4096).unwrap();
        let t = torsion_layer(&p).unwrap();
        assert!((t.integral() - std::f64::consts::PI / 8.5).abs() < 1e-10);
        assert!((t.eval([0.7, 0.1]) - e.torsion([0.7, 0.1])).abs() < 1e-10);
    }

    #[test]
    fn disk_torsion() {
        let d = PolarPatch::<f64>::disk(3);
        let t = torsion_solve(&d).unwrap();
        assert!((t.integral() - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
        assert!((t.eval([0.3, 0.4]) - 0.375).abs() < 1e-14);
    }
}
