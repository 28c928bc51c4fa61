//! Scalar abstraction for the signal-processing core.
//!
//! All level math and filtering is generic over [`Real`] so the same code
//! runs in `f32` on constrained targets and in `f64` everywhere else.
//! Concrete aliases live at the crate root.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + core::ops::AddAssign + core::fmt::Debug + core::fmt::Display + 'static
{
    /// Lossy conversion from `f64`, used for constants and filter design.
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// Widen to `f64` for reporting and cross-precision checks.
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {
    fn as_f64(self) -> f64 {
        self
    }
}
