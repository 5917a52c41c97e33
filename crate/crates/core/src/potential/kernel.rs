//! Gradient of the angular part `φ_m` from the closed-form summed kernels.

use crate::error::{Error, Result};
use crate::geometry::{MonotoneProfile, PolarPatch};
use crate::quad::{graded_both, graded_left, graded_right, GaussLegendre};
use crate::real::{cst, from_usize, Real};

use super::{inside_intervals, GradEstimate, QuadratureConfig};

/// Splits panels wider than `max_width` into equal pieces.
fn refine<T: Real>(panels: Vec<(T, T)>, max_width: T) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(panels.len());
    for (a, b) in panels {
        let w = b - a;
        if w > max_width {
            let n = (w / max_width).ceil().to_usize().unwrap_or(1).max(1);
            let h = w / from_usize(n);
            for k in 0..n {
                let lo = a + h * from_usize(k);
                let hi = if k + 1 == n { b } else { a + h * from_usize(k + 1) };
                out.push((lo, hi));
            }
        } else if w > T::zero() {
            out.push((a, b));
        }
    }
    out
}

/// Sorted distinct cut points, each gap graded towards both ends.
fn graded_between<T: Real>(mut cuts: Vec<T>, depth: usize) -> Vec<(T, T)> {
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            out.extend(graded_both(w[0], w[1], depth));
        }
    }
    out
}

#[inline]
fn half_angle_den<T: Real>(t: T, y: T) -> T {
    let sh = (y * cst(0.5)).sin();
    (T::one() - t).powi(2) + t * sh * sh * cst(4.0)
}

/// Closed-kernel 2D quadrature for `∇φ_m`, reusable across evaluation points.
#[derive(Clone, Debug)]
pub struct PhiMEvaluator<'a, T> {
    patch: &'a PolarPatch<T>,
    cfg: QuadratureConfig,
    r_min: T,
    r_max: T,
    mono: Option<MonotoneProfile<'a, T>>,
    fine: GaussLegendre<T>,
    coarse: GaussLegendre<T>,
}

impl<'a, T: Real> PhiMEvaluator<'a, T> {
    pub fn new(patch: &'a PolarPatch<T>, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let mono = MonotoneProfile::new(patch).ok();
        let (r_min, r_max) = match &mono {
            Some(p) => (p.r_min(), p.r_max()),
            None => (patch.r_min(), patch.r_max()),
        };
        let q = cfg.gauss_order.max(2);
        Ok(Self {
            patch,
            cfg: cfg.clone(),
            r_min,
            r_max,
            mono,
            fine: GaussLegendre::new(q),
            coarse: GaussLegendre::new((q * 3 / 4).max(2)),
        })
    }

    /// `(∂_r φ_m, (1/r)∂_θ φ_m)` at polar point `(r, θ)`.
    pub fn eval(&self, r: T, theta: T) -> Result<GradEstimate<T>> {
        if !(r > T::zero()) {
            return Err(Error::OutOfRange("grad_phi_m needs r > 0".into()));
        }
        let fine = self.integrate(r, theta, &self.fine);
        let coarse = self.integrate(r, theta, &self.coarse);
        let err = (fine[0] - coarse[0]).abs().max((fine[1] - coarse[1]).abs());
        if err.as_f64() > self.cfg.tolerance {
            return Err(Error::Quadrature { estimate: err.as_f64(), tolerance: self.cfg.tolerance });
        }
        Ok(GradEstimate { value: fine, error_estimate: err })
    }

    /// Inside set of the circle `ρ` as intervals in the angle β.
    fn inside(&self, rho: T) -> Vec<(T, T)> {
        match &self.mono {
            Some(p) => {
                let e = p.eta_clamped(rho);
                vec![(-e, e)]
            }
            None => inside_intervals(self.patch, rho),
        }
    }

    fn integrate(&self, r: T, theta: T, rule: &GaussLegendre<T>) -> [T; 2] {
        let (lo, hi) = (self.r_min, self.r_max);
        if hi - lo <= T::default_epsilon() * cst(16.0) {
            return [T::zero(), T::zero()];
        }
        let depth = self.cfg.split_depth;
        let max_w = (hi - lo) / from_usize(self.cfg.radial_panels);
        // Breakpoints: the split ρ = r and the boundary radius along the ray,
        // where the jump of h crosses the kernel peak.
        let mut cuts = vec![lo, hi];
        for c in [r, self.patch.radius(theta)] {
            if c > lo && c < hi {
                cuts.push(c);
            }
        }
        let panels = refine(graded_between(cuts, depth), max_w);
        let (mut dr, mut dth) = (T::zero(), T::zero());
        for &(a, b) in &panels {
            for (rho, w) in rule.mapped(a, b) {
                let below = rho < r;
                let (ar, ath) = self.angular(rho, r, theta, below, rule);
                if below {
                    dr += w * ar;
                } else {
                    dr -= w * ar;
                }
                dth += w * ath;
            }
        }
        [dr / T::two_pi(), -dth / T::two_pi()]
    }

    /// `∫_T h(ρ, η + θ) K(η) dη` for the radial and angular kernels.
    fn angular(&self, rho: T, r: T, theta: T, below: bool, rule: &GaussLegendre<T>) -> (T, T) {
        let m = self.patch.m();
        let mf: T = from_usize(m);
        let period = self.patch.period();
        let half = period * cst(0.5);
        let x = if below { rho / r } else { r / rho };
        let t = x.powi(m as i32);
        let pref = if below { x } else { T::one() / x };
        let inside = self.inside(rho);
        let measure = inside.iter().fold(T::zero(), |acc, (a, b)| acc + (*b - *a));
        let g = measure / period;
        let wrap = |v: T| {
            let mut e = (v + half) % period;
            if e < T::zero() {
                e += period;
            }
            e - half
        };
        let mut cuts: Vec<T> = (0..=self.cfg.angular_panels)
            .map(|k| -half + period * from_usize(k) / from_usize(self.cfg.angular_panels))
            .collect();
        cuts.push(T::zero());
        for (a, b) in &inside {
            cuts.push(wrap(*a - theta));
            cuts.push(wrap(*b - theta));
        }
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
        let tiny = period * T::default_epsilon() * cst(8.0);
        cuts.dedup_by(|p, q| (*p - *q).abs() <= tiny);
        let width = (T::one() - t).abs() / mf;
        let is_inside = |eta: T| {
            let mut beta = (eta + theta) % period;
            if beta < T::zero() {
                beta += period;
            }
            inside.iter().any(|(a, b)| {
                let (mut a, mut b) = (*a, *b);
                if a < T::zero() {
                    a += period;
                    b += period;
                }
                (beta > a && beta < b) || (beta + period > a && beta + period < b)
            })
        };
        let (mut ar, mut ath) = (T::zero(), T::zero());
        for win in cuts.windows(2) {
            let (a, b) = (win[0], win[1]);
            if b <= a {
                continue;
            }
            let mid = (a + b) * cst(0.5);
            let h = if is_inside(mid) { T::one() - g } else { -g };
            if h == T::zero() {
                continue;
            }
            let len = b - a;
            // Distance from the panel to the kernel peak at η = 0.
            let gap = if a >= T::zero() {
                a
            } else if b <= T::zero() {
                -b
            } else {
                T::zero()
            };
            let scale = gap.max(width).max(T::min_value().unwrap_or(cst(1e-300)));
            let sub = if scale < len {
                let need = (len * cst(4.0) / scale).log2().ceil().to_usize().unwrap_or(0);
                let d = if gap == T::zero() { need.max(self.cfg.split_depth) } else { need }.min(100);
                if a >= T::zero() {
                    graded_left(a, b, d)
                } else {
                    graded_right(a, b, d)
                }
            } else {
                vec![(a, b)]
            };
            let (mut sr, mut sth) = (T::zero(), T::zero());
            for (pa, pb) in sub {
                for (eta, w) in rule.mapped(pa, pb) {
                    let y = eta * mf;
                    let den = half_angle_den(t, y);
                    let sh = (y * cst(0.5)).sin();
                    let cos_minus_t = (T::one() - t) - sh * sh * cst(2.0);
                    sr += w * t * cos_minus_t / den;
                    sth += w * t * y.sin() / den;
                }
            }
            ar += h * sr;
            ath += h * sth;
        }
        (ar * pref * mf, ath * pref * mf)
    }
}

/// `(∂_r φ_m, (1/r)∂_θ φ_m)` by 2D quadrature of `h` against the summed
/// kernels, split at `ρ = r` and graded towards `(ρ, η) = (r, 0)`.
pub fn grad_phi_m<T: Real>(patch: &PolarPatch<T>, r: T, theta: T, cfg: &QuadratureConfig) -> Result<GradEstimate<T>> {
    PhiMEvaluator::new(patch, cfg)?.eval(r, theta)
}

/// `(∂_r φ_m, (1/r)∂_θ φ_m)` from the single-integral arctan/log kernels,
/// valid for patches with `u' < 0` on `(0, π/m)`.
pub fn grad_phi_m_monotone<T: Real>(patch: &PolarPatch<T>, r: T, theta: T) -> Result<GradEstimate<T>> {
    grad_phi_m_monotone_with(patch, r, theta, &QuadratureConfig::default())
}

/// As [`grad_phi_m_monotone`] with explicit quadrature settings.
pub fn grad_phi_m_monotone_with<T: Real>(
    patch: &PolarPatch<T>,
    r: T,
    theta: T,
    cfg: &QuadratureConfig,
) -> Result<GradEstimate<T>> {
    cfg.validate()?;
    if !(r > T::zero()) {
        return Err(Error::OutOfRange("grad_phi_m_monotone needs r > 0".into()));
    }
    let mono = MonotoneProfile::new(patch)?;
    let q = cfg.gauss_order.max(2);
    let fine = monotone_integral(&mono, r, theta, cfg, &GaussLegendre::new(q));
    let coarse = monotone_integral(&mono, r, theta, cfg, &GaussLegendre::new((q * 3 / 4).max(2)));
    let err = (fine[0] - coarse[0]).abs().max((fine[1] - coarse[1]).abs());
    if err.as_f64() > cfg.tolerance {
        return Err(Error::Quadrature { estimate: err.as_f64(), tolerance: cfg.tolerance });
    }
    Ok(GradEstimate { value: fine, error_estimate: err })
}

fn monotone_integral<T: Real>(
    mono: &MonotoneProfile<'_, T>,
    r: T,
    theta: T,
    cfg: &QuadratureConfig,
    rule: &GaussLegendre<T>,
) -> [T; 2] {
    let patch = mono.patch();
    let m = patch.m();
    let mf: T = from_usize(m);
    let half = patch.period() * cst(0.5);
    // Parametrise ρ = 1 + u(s), s ∈ (0, π/m), so that η(ρ) = s.
    // Breakpoints: ρ = r, and the boundary angle nearest θ after reduction
    // by the symmetries.
    let period = patch.period();
    let mut folded = theta % period;
    if folded < T::zero() {
        folded += period;
    }
    if folded > half {
        folded = period - folded;
    }
    let mut cuts = vec![T::zero(), half, folded];
    if r > mono.r_min() && r < mono.r_max() {
        cuts.push(mono.eta_clamped(r));
    }
    let panels = refine(graded_between(cuts, cfg.split_depth), half / from_usize(cfg.radial_panels));
    let (mut dr, mut dth) = (T::zero(), T::zero());
    let halfc: T = cst(0.5);
    for &(a, b) in &panels {
        for (s, w) in rule.mapped(a, b) {
            let rho = patch.radius(s);
            let jac = -patch.du(s);
            let below = rho < r;
            let x = if below { rho / r } else { r / rho };
            let t = x.powi(m as i32);
            let pref = if below { x } else { T::one() / x };
            let (ym, yp) = (mf * (s - theta), mf * (s + theta));
            let atan = |y: T| (t * y.sin()).atan2(T::one() - t * y.cos());
            let f1 = pref * (atan(ym) + atan(yp));
            let f2 = pref * halfc * (half_angle_den(t, ym).ln() - half_angle_den(t, yp).ln());
            if below {
                dr += w * jac * f1;
            } else {
                dr -= w * jac * f1;
            }
            dth += w * jac * f2;
        }
    }
    [dr / T::two_pi(), -dth / T::two_pi()]
}
