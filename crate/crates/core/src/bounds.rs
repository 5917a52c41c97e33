//! Empirical scans of the asymptotic bounds on exact families and computed
//! branches. The constants in those bounds are not known, so every scan
//! reports the extremal measured ratio and nothing more.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EllipsePatch, RotatingState};
use crate::quad::{graded_left, GaussLegendre};
use crate::real::{cst, from_usize, Real};
use crate::vstates::Branch;

/// One CSV row: `family, param, m, omega, lhs, rhs, ratio`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow<T> {
    pub family: String,
    pub param: T,
    pub m: usize,
    pub omega: Option<T>,
    pub lhs: T,
    pub rhs: T,
    pub ratio: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Min,
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub scan: String,
    pub rows: Vec<BoundRow<T>>,
    /// Extremal ratio over the rows.
    pub empirical_constant: T,
    pub extremum: Extremum,
    pub notes: Vec<String>,
}

impl<T: Real> BoundReport<T> {
    fn build(scan: &str, rows: Vec<BoundRow<T>>, extremum: Extremum, notes: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter(format!("{scan} scan has no usable samples")));
        }
        if let Some(r) = rows.iter().find(|r| !r.ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!("{scan} scan: non-finite ratio for {} at {}", r.family, r.param.as_f64())));
        }
        let pick = |a: T, b: T| match extremum {
            Extremum::Min => a.min(b),
            Extremum::Max => a.max(b),
        };
        let empirical_constant = rows.iter().skip(1).fold(rows[0].ratio, |a, r| pick(a, r.ratio));
        Ok(Self { scan: scan.into(), rows, empirical_constant, extremum, notes })
    }
}

fn is_disk<T: Real>(state: &RotatingState<T>) -> bool {
    state.patch.coeffs().iter().skip(1).all(|&c| c == T::zero())
}

/// `sup_{∂D}|x| · √Ω` per state; the constant is the minimum. Disks are
/// skipped.
pub fn outmost_scan<T: Real>(states: &[RotatingState<T>]) -> Result<BoundReport<T>> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (i, s) in states.iter().enumerate() {
        if is_disk(s) {
            notes.push(format!("state {i} is a disk; skipped"));
            continue;
        }
        if !(s.omega > T::zero()) {
            return Err(Error::InvalidParameter(format!("state {i} has non-positive omega")));
        }
        let sup = s.patch.r_max();
        let rhs = T::one() / s.omega.sqrt();
        rows.push(BoundRow {
            family: format!("polar_m{}", s.patch.m()),
            param: s.patch.sup_norm(),
            m: s.patch.m(),
            omega: Some(s.omega),
            lhs: sup,
            rhs,
            ratio: sup / rhs,
        });
    }
    BoundReport::build("outmost", rows, Extremum::Min, notes)
}

/// Closed-form version of [`outmost_scan`] on area-π ellipses `(a, 1/a)`:
/// the ratio is `a²/(a² + 1)` with no quadrature. `a = 1` is skipped.
pub fn outmost_scan_ellipses<T: Real>(semi_major: &[T]) -> Result<BoundReport<T>> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &a in semi_major {
        let e = EllipsePatch::unit_area(a)?;
        if e.a == e.b {
            notes.push(format!("a = {} is a disk; skipped", a.as_f64()));
            continue;
        }
        let omega = e.omega_exact();
        let rhs = T::one() / omega.sqrt();
        let sup = e.a.max(e.b);
        rows.push(BoundRow {
            family: "ellipse".into(),
            param: a,
            m: 2,
            omega: Some(omega),
            lhs: sup,
            rhs,
            ratio: sup / rhs,
        });
    }
    BoundReport::build("outmost", rows, Extremum::Min, notes)
}

/// `(½ − Ω)·m` over all branch points; the constant is the maximum.
/// Branches with `m < 3` are skipped.
pub fn omega_gap_scan<T: Real>(branches: &[Branch<T>]) -> Result<BoundReport<T>> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for b in branches {
        if b.m < 3 {
            notes.push(format!("m = {} branch skipped (needs m >= 3)", b.m));
            continue;
        }
        let inv_m = T::one() / from_usize(b.m);
        for p in &b.points {
            let gap = cst::<T>(0.5) - p.state.omega;
            rows.push(BoundRow {
                family: format!("branch_m{}", b.m),
                param: p.state.patch.sup_norm(),
                m: b.m,
                omega: Some(p.state.omega),
                lhs: gap,
                rhs: inv_m,
                ratio: gap / inv_m,
            });
        }
    }
    BoundReport::build("omega_gap", rows, Extremum::Max, notes)
}

/// Three reports over the branch points: `‖u‖_∞·m` and `(r_max − 1)·m`
/// (maxima), and `λ r_max ‖u‖_∞ / ∫u²` (minimum, disks skipped).
pub fn linfty_scan<T: Real>(branches: &[Branch<T>]) -> Result<[BoundReport<T>; 3]> {
    let (mut sup_rows, mut rmax_rows, mut lambda_rows) = (Vec::new(), Vec::new(), Vec::new());
    let mut notes = Vec::new();
    for b in branches {
        if b.m < 3 {
            notes.push(format!("m = {} branch skipped (needs m >= 3)", b.m));
            continue;
        }
        let inv_m = T::one() / from_usize(b.m);
        for p in &b.points {
            let patch = &p.state.patch;
            let (sup, rmax) = (patch.sup_norm(), patch.r_max());
            let row = |family: &str, lhs: T, rhs: T| BoundRow {
                family: format!("{family}_m{}", b.m),
                param: sup,
                m: b.m,
                omega: Some(p.state.omega),
                lhs,
                rhs,
                ratio: lhs / rhs,
            };
            sup_rows.push(row("linfty", sup, inv_m));
            rmax_rows.push(row("rmax", rmax - T::one(), inv_m));
            if !is_disk(&p.state) {
                let l2 = patch.trapezoid(|t| patch.u(t).powi(2));
                lambda_rows.push(row("lambda", p.state.lambda, l2 / (rmax * sup)));
            }
        }
    }
    Ok([
        BoundReport::build("linfty", sup_rows, Extremum::Max, notes.clone())?,
        BoundReport::build("rmax", rmax_rows, Extremum::Max, notes.clone())?,
        BoundReport::build("lambda", lambda_rows, Extremum::Min, notes)?,
    ])
}

/// `∫₀¹ g(x) dx` after `x = (1 − s)^m`, which turns the `x^{−2/m}` behaviour
/// at 0 into a polynomial; panels in `s` are graded toward `s = 0`. The
/// integrand gets `(x, 1 − x)` with `1 − x` computed without cancellation.
fn appendix_integral<T: Real>(m: usize, order: usize, depth: usize, g: impl Fn(T, T) -> T) -> T {
    let rule = GaussLegendre::<T>::new(order);
    let mf = from_usize::<T>(m);
    rule.integrate_panels(&graded_left(T::zero(), T::one(), depth), |s| {
        if s >= T::one() {
            return T::zero();
        }
        let lt = (-s).ln_1p();
        let x = (mf * lt).exp();
        let one_minus_x = -(mf * lt).exp_m1();
        g(x, one_minus_x) * mf * x / (T::one() - s)
    })
}

/// `∫₀¹ x^{−1−2/m}(arctan(ax/(1 − x)) − arctan(ax/(1 − bx))) dx`.
pub fn appendix_arctan_integral<T: Real>(m: usize, a: T, b: T) -> T {
    appendix_arctan_with(m, a, b, 16, 48)
}

fn appendix_arctan_with<T: Real>(m: usize, a: T, b: T, order: usize, depth: usize) -> T {
    let p = -T::one() - cst::<T>(2.0) / from_usize(m);
    appendix_integral(m, order, depth, |x: T, omx: T| {
        // Difference of the two arctangents as one atan2 to avoid cancellation.
        let (y1, x1) = (a * x, omx);
        let (y2, x2) = (a * x, T::one() - b * x);
        let diff = (y1 * x2 - y2 * x1).atan2(x1 * x2 + y1 * y2);
        x.powf(p) * diff
    })
}

/// `∫₀¹ x^{−1−2/m} log(1 + ax/(1 − x)²) dx`.
pub fn appendix_log_integral<T: Real>(m: usize, a: T) -> T {
    appendix_log_with(m, a, 16, 48)
}

fn appendix_log_with<T: Real>(m: usize, a: T, order: usize, depth: usize) -> T {
    let p = -T::one() - cst::<T>(2.0) / from_usize(m);
    appendix_integral(m, order, depth, |x: T, omx: T| x.powf(p) * (a * x / (omx * omx)).ln_1p())
}

/// Sweeps both appendix integrals over `m ∈ {3, 5, 9, 17}` and
/// `a, b ∈ {0.1, 0.5, 0.9}`, plus `a ∈ {1e−4, 1e−2}` for the log integral.
/// Each value is recomputed on a refined rule; the largest relative change
/// is recorded in the notes and must stay below `1e−8`.
pub fn appendix_inequality_probe<T: Real>() -> Result<[BoundReport<T>; 2]> {
    let ms = [3usize, 5, 9, 17];
    let grid: [f64; 3] = [0.1, 0.5, 0.9];
    let mut drift = 0.0f64;
    let mut track = |coarse: T, fine: T| {
        drift = drift.max(((coarse - fine).abs() / fine.abs().max(cst(1e-300))).as_f64());
        fine
    };
    let mut arctan_rows = Vec::new();
    let mut log_rows = Vec::new();
    for &m in &ms {
        for &a in &grid {
            for &b in &grid {
                let (a, b) = (cst::<T>(a), cst::<T>(b));
                let v = track(appendix_arctan_with(m, a, b, 16, 40), appendix_arctan_with(m, a, b, 24, 60));
                let rhs = T::one() - b;
                arctan_rows.push(BoundRow {
                    family: format!("arctan_a{}", a.as_f64()),
                    param: b,
                    m,
                    omega: None,
                    lhs: v,
                    rhs,
                    ratio: v / rhs,
                });
            }
        }
        for a in grid.iter().copied().chain([1e-4, 1e-2]) {
            let a = cst::<T>(a);
            let v = track(appendix_log_with(m, a, 16, 40), appendix_log_with(m, a, 24, 60));
            let rhs = a.sqrt();
            log_rows.push(BoundRow { family: "log".into(), param: a, m, omega: None, lhs: v, rhs, ratio: v / rhs });
        }
    }
    let tol = 1e-8f64.max(1e3 * T::default_epsilon().as_f64());
    if drift > tol {
        return Err(Error::Quadrature { estimate: drift, tolerance: tol });
    }
    let note = vec![format!("largest relative change under refinement: {drift:.3e}")];
    Ok([
        BoundReport::build("appendix_arctan", arctan_rows, Extremum::Max, note.clone())?,
        BoundReport::build("appendix_log", log_rows, Extremum::Max, note)?,
    ])
}

/// True when `a` and `b` agree to `digits` significant figures.
pub fn agree_to_sig_figs(a: f64, b: f64, digits: i32) -> bool {
    let scale = a.abs().max(b.abs());
    scale == 0.0 || (a - b).abs() <= 0.5 * 10f64.powi(1 - digits) * scale
}
