//! Scalar abstraction shared by every module.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Floating-point scalar usable throughout the library (`f32` or `f64`).
pub trait Real: RealField + Copy + ToPrimitive {
    /// Relative tolerance used when a routine requires `|D| = π`.
    fn area_tolerance() -> Self {
        let eps = Self::default_epsilon();
        let floor: Self = cst(1e-9);
        floor.max(eps * cst(1e3))
    }

    /// Lossy conversion to `f64` for reporting and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn cst<T: RealField>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts a count into `T`.
#[inline(always)]
pub fn from_usize<T: RealField>(n: usize) -> T {
    nalgebra::convert(n as f64)
}
