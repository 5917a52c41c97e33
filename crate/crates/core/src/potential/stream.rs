//! Stream function `ψ = 1_D * 𝒩` and its gradient.
//!
//! The primary evaluators use the boundary representation
//! `ψ(x) = (1/8π) ∮ ((y − x) × y') (log|x − y|² − 1) dτ` and
//! `∇ψ(x) = −(1/2π) ∮ log|x − y| n ds`, with the trapezoid rule off the
//! boundary and the Kress product rule on it. The reference evaluators work
//! in a local polar frame centred at `x`, where the log singularity is
//! absorbed by the area element.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::{EllipsePatch, PolarPatch};
use crate::quad::{adaptive, bisect, KressRule};
use crate::real::{cst, from_usize, Real};

use super::{grad_phi_m, phi_r_prime, Estimate, GradEstimate, QuadratureConfig};

const MAX_NODES: usize = 1 << 18;

/// Boundary samples on the uniform grid `τ_k = offset + 2πk/n`.
#[derive(Debug)]
pub struct BoundaryIntegrator<T> {
    offset: T,
    pts: Vec<[T; 2]>,
    tan: Vec<[T; 2]>,
    kress: OnceLock<(Vec<T>, Vec<T>)>,
}

impl<T: Real> BoundaryIntegrator<T> {
    pub fn new(patch: &PolarPatch<T>, n: usize, offset: T) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("boundary node count must be even and >= 8, got {n}")));
        }
        let h = T::two_pi() / from_usize(n);
        let (mut pts, mut tan) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let tau = offset + h * from_usize(k);
            let (s, c) = tau.sin_cos();
            let r = patch.radius(tau);
            let dr = patch.du(tau);
            pts.push([r * c, r * s]);
            tan.push([dr * c - r * s, dr * s + r * c]);
        }
        Ok(Self { offset, pts, tan, kress: OnceLock::new() })
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    pub fn node_angle(&self, k: usize) -> T {
        self.offset + T::two_pi() * from_usize(k) / from_usize(self.len())
    }

    pub fn point(&self, k: usize) -> [T; 2] {
        self.pts[k]
    }

    /// `γ'(τ_k)` for the parametrisation `γ(τ) = (1 + u(τ))(cos τ, sin τ)`.
    pub fn tangent(&self, k: usize) -> [T; 2] {
        self.tan[k]
    }

    fn step(&self) -> T {
        T::two_pi() / from_usize(self.len())
    }

    /// Kress weights and `log(4 sin²(πj/n))` for `j ≥ 1`.
    fn kress(&self) -> &(Vec<T>, Vec<T>) {
        self.kress.get_or_init(|| {
            let table = kress_table(self.len());
            (table.0.iter().map(|&w| cst(w)).collect(), table.1.iter().map(|&l| cst(l)).collect())
        })
    }

    /// `ψ` at the boundary node `k`.
    pub fn stream_at_node(&self, k: usize) -> T {
        let n = self.len();
        let (w, ls) = self.kress();
        let x = self.pts[k];
        let (mut sk, mut st) = (T::zero(), T::zero());
        for j in 1..n {
            let i = (k + j) % n;
            let (y, t) = (self.pts[i], self.tan[i]);
            let d = [y[0] - x[0], y[1] - x[1]];
            let c = d[0] * t[1] - d[1] * t[0];
            let l = (d[0] * d[0] + d[1] * d[1]).ln() - ls[j];
            sk += w[j] * c;
            st += c * (l - T::one());
        }
        (sk + self.step() * st) / (T::pi() * cst(8.0))
    }

    /// `∇ψ` at the boundary node `k` (continuous across `∂D`).
    pub fn grad_at_node(&self, k: usize) -> [T; 2] {
        let n = self.len();
        let (w, ls) = self.kress();
        let t0 = self.tan[k];
        let l0 = (t0[0] * t0[0] + t0[1] * t0[1]).ln();
        let mut sk = [w[0] * t0[1], -w[0] * t0[0]];
        let mut st = [l0 * t0[1], -l0 * t0[0]];
        let x = self.pts[k];
        for j in 1..n {
            let i = (k + j) % n;
            let (y, t) = (self.pts[i], self.tan[i]);
            let d = [y[0] - x[0], y[1] - x[1]];
            let l = (d[0] * d[0] + d[1] * d[1]).ln() - ls[j];
            sk[0] += w[j] * t[1];
            sk[1] -= w[j] * t[0];
            st[0] += l * t[1];
            st[1] -= l * t[0];
        }
        let h = self.step();
        let c = -T::one() / (T::pi() * cst(4.0));
        [c * (sk[0] + h * st[0]), c * (sk[1] + h * st[1])]
    }

    /// `ψ(x)` by the trapezoid rule; accurate for `x` away from `∂D`.
    pub fn stream_at(&self, x: [T; 2]) -> T {
        let mut s = T::zero();
        for (y, t) in self.pts.iter().zip(&self.tan) {
            let d = [y[0] - x[0], y[1] - x[1]];
            let c = d[0] * t[1] - d[1] * t[0];
            s += c * ((d[0] * d[0] + d[1] * d[1]).ln() - T::one());
        }
        s * self.step() / (T::pi() * cst(8.0))
    }

    /// `∇ψ(x)` by the trapezoid rule; accurate for `x` away from `∂D`.
    pub fn grad_at(&self, x: [T; 2]) -> [T; 2] {
        let mut s = [T::zero(); 2];
        for (y, t) in self.pts.iter().zip(&self.tan) {
            let d = [y[0] - x[0], y[1] - x[1]];
            let l = (d[0] * d[0] + d[1] * d[1]).ln();
            s[0] += l * t[1];
            s[1] -= l * t[0];
        }
        let c = -self.step() / (T::pi() * cst(4.0));
        [c * s[0], c * s[1]]
    }
}

/// Kress tables depend only on `n` and cost `O(n²)`, so they are shared
/// across integrators.
fn kress_table(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&n) {
        return t.clone();
    }
    let w = KressRule::<f64>::new(n).weights().to_vec();
    let ls = (0..n)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                let s = (std::f64::consts::PI * j as f64 / n as f64).sin();
                (4.0 * s * s).ln()
            }
        })
        .collect();
    let t = Arc::new((w, ls));
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(n, t.clone());
    t
}

/// Default boundary node count: enough to resolve the Fourier content of
/// the boundary, at least `cfg.angular_nodes`.
pub(crate) fn boundary_nodes<T: Real>(patch: &PolarPatch<T>, cfg: &QuadratureConfig) -> usize {
    let want = (8 * patch.effective_degree().max(1) * patch.m()).next_power_of_two();
    let n = cfg.angular_nodes.max(want).min(1 << 16);
    n + n % 2
}

/// Boundary integrators on nested grids `n₀·2^k`, built on demand.
pub(crate) struct GreenEvaluator<'a, T> {
    patch: &'a PolarPatch<T>,
    base: usize,
    tolerance: T,
    levels: Vec<OnceLock<BoundaryIntegrator<T>>>,
}

impl<'a, T: Real> GreenEvaluator<'a, T> {
    pub(crate) fn new(patch: &'a PolarPatch<T>, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let base = (boundary_nodes(patch, cfg) / 2).max(8);
        let mut count = 0;
        while base << count <= MAX_NODES {
            count += 1;
        }
        Ok(Self {
            patch,
            base,
            tolerance: cst(cfg.tolerance),
            levels: (0..count.max(2)).map(|_| OnceLock::new()).collect(),
        })
    }

    fn level(&self, k: usize) -> &BoundaryIntegrator<T> {
        self.levels[k].get_or_init(|| {
            BoundaryIntegrator::new(self.patch, self.base << k, T::zero()).expect("node count validated")
        })
    }

    fn refine<const K: usize>(&self, f: impl Fn(&BoundaryIntegrator<T>) -> [T; K]) -> Result<([T; K], T)> {
        let mut prev = f(self.level(0));
        let mut err = T::zero();
        for k in 1..self.levels.len() {
            let cur = f(self.level(k));
            err = (0..K).fold(T::zero(), |e, i| e.max((cur[i] - prev[i]).abs()));
            let scale = (0..K).fold(T::one(), |s, i| s.max(cur[i].abs()));
            if err <= self.tolerance * scale * cst(0.1) {
                return Ok((cur, err));
            }
            prev = cur;
        }
        if err <= self.tolerance {
            Ok((prev, err))
        } else {
            Err(Error::Quadrature { estimate: err.as_f64(), tolerance: self.tolerance.as_f64() })
        }
    }

    fn on_boundary(&self, x: [T; 2]) -> Option<T> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let theta = x[1].atan2(x[0]);
        let gap = (r - self.patch.radius(theta)).abs();
        (gap <= T::default_epsilon() * cst(64.0) * r.max(T::one())).then_some(theta)
    }

    pub(crate) fn stream(&self, x: [T; 2]) -> Result<Estimate<T>> {
        if let Some(theta) = self.on_boundary(x) {
            let fine = BoundaryIntegrator::new(self.patch, self.base * 2, theta)?;
            let coarse = BoundaryIntegrator::new(self.patch, self.base, theta)?;
            let v = fine.stream_at_node(0);
            return Ok(Estimate { value: v, error_estimate: (v - coarse.stream_at_node(0)).abs() });
        }
        let (v, e) = self.refine(|b| [b.stream_at(x)])?;
        Ok(Estimate { value: v[0], error_estimate: e })
    }

    pub(crate) fn grad(&self, x: [T; 2]) -> Result<GradEstimate<T>> {
        if let Some(theta) = self.on_boundary(x) {
            let fine = BoundaryIntegrator::new(self.patch, self.base * 2, theta)?;
            let coarse = BoundaryIntegrator::new(self.patch, self.base, theta)?;
            let (v, c) = (fine.grad_at_node(0), coarse.grad_at_node(0));
            let e = (v[0] - c[0]).abs().max((v[1] - c[1]).abs());
            return Ok(GradEstimate { value: v, error_estimate: e });
        }
        let (v, e) = self.refine(|b| b.grad_at(x))?;
        Ok(GradEstimate { value: v, error_estimate: e })
    }
}

/// `ψ(x) = (1/2π)∫_D log|x − y| dy`.
pub fn stream_value<T: Real>(patch: &PolarPatch<T>, x: [T; 2], cfg: &QuadratureConfig) -> Result<Estimate<T>> {
    GreenEvaluator::new(patch, cfg)?.stream(x)
}

/// `∇ψ(x)` assembled as `∂_r φ^r ê_r + ∇φ_m`.
pub fn grad_stream<T: Real>(patch: &PolarPatch<T>, x: [T; 2], cfg: &QuadratureConfig) -> Result<GradEstimate<T>> {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    if r <= T::default_epsilon().sqrt() {
        return GreenEvaluator::new(patch, cfg)?.grad(x);
    }
    let (er, et) = ([x[0] / r, x[1] / r], [-x[1] / r, x[0] / r]);
    let theta = x[1].atan2(x[0]);
    let radial = phi_r_prime(patch, r)?;
    let gm = grad_phi_m(patch, r, theta, cfg)?;
    let (gr, gt) = (radial + gm.value[0], gm.value[1]);
    Ok(GradEstimate { value: [gr * er[0] + gt * et[0], gr * er[1] + gt * et[1]], error_estimate: gm.error_estimate })
}

/// Exact interior field `(b x₁, a x₂)/(a + b)` of an ellipse.
pub fn grad_stream_ellipse<T: Real>(ellipse: &EllipsePatch<T>, x: [T; 2]) -> Result<[T; 2]> {
    if !ellipse.contains(x) {
        return Err(Error::OutOfRange("closed-form ellipse gradient is only available inside".into()));
    }
    Ok(ellipse.interior_gradient(x))
}

/// Inside intervals `{s > 0 : x + s e(α) ∈ D}` of one ray.
fn ray_segments<T: Real>(patch: &PolarPatch<T>, x: [T; 2], alpha: T, samples: usize) -> Vec<(T, T)> {
    let (sa, ca) = alpha.sin_cos();
    let f = |s: T| {
        let p = [x[0] + s * ca, x[1] + s * sa];
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        patch.radius(p[1].atan2(p[0])) - rho
    };
    let reach = (x[0] * x[0] + x[1] * x[1]).sqrt() + patch.r_max() * cst(1.01);
    let h = reach / from_usize(samples);
    let tol = reach * T::default_epsilon() * cst(4.0);
    let mut segs = Vec::new();
    let mut start = if f(T::zero()) > T::zero() { Some(T::zero()) } else { None };
    let mut prev = f(T::zero());
    for j in 1..=samples {
        let s = h * from_usize(j);
        let v = f(s);
        if (v > T::zero()) != (prev > T::zero()) {
            let root = bisect(f, s - h, s, tol);
            match start.take() {
                Some(a) => segs.push((a, root)),
                None => start = Some(root),
            }
        }
        prev = v;
    }
    if let Some(a) = start {
        segs.push((a, reach));
    }
    segs
}

fn ray_integrals<T: Real>(patch: &PolarPatch<T>, x: [T; 2], cfg: &QuadratureConfig) -> ([T; 3], T) {
    let big_g = |s: T| if s > T::zero() { s * s * (s.ln() * cst(2.0) - T::one()) / cst(4.0) } else { T::zero() };
    let samples = 256;
    adaptive(
        |alpha: T| {
            let segs = ray_segments(patch, x, alpha, samples);
            let (mut len, mut g) = (T::zero(), T::zero());
            for (a, b) in segs {
                len += b - a;
                g += big_g(b) - big_g(a);
            }
            let (s, c) = alpha.sin_cos();
            [len * c, len * s, g]
        },
        T::zero(),
        T::two_pi(),
        32,
        cst(cfg.tolerance * 1e-2),
        40,
    )
}

/// Reference `ψ(x)` from `(1/2π)∫ Σ [G(s_out) − G(s_in)] dα`,
/// `G(s) = s²(2 log s − 1)/4`, over rays from `x`.
pub fn stream_value_direct<T: Real>(patch: &PolarPatch<T>, x: [T; 2], cfg: &QuadratureConfig) -> Result<Estimate<T>> {
    cfg.validate()?;
    let (v, e) = ray_integrals(patch, x, cfg);
    Ok(Estimate { value: v[2] / T::two_pi(), error_estimate: e / T::two_pi() })
}

/// Reference `∇ψ(x) = −(1/2π)∫ ℓ(α) e(α) dα`, where `ℓ(α)` is the length of
/// the ray from `x` in direction `α` inside `D`.
pub fn grad_stream_direct<T: Real>(patch: &PolarPatch<T>, x: [T; 2], cfg: &QuadratureConfig) -> Result<GradEstimate<T>> {
    cfg.validate()?;
    let (v, e) = ray_integrals(patch, x, cfg);
    let c = -T::one() / T::two_pi();
    Ok(GradEstimate { value: [c * v[0], c * v[1]], error_estimate: e / T::two_pi() })
}
