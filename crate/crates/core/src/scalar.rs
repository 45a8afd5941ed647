//! Scalar abstraction shared by the geometry and loss code.
//!
//! Everything numeric in [`crate::geometry`] and [`crate::losses`] is written
//! against [`Scalar`], so the same code path runs on `f32`, `f64` and on the
//! forward-mode [`Dual`](crate::grad::Dual) numbers used for exact gradients.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real scalar usable by the generic geometry and loss code.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lift an `f64` constant into this scalar type (zero tangent for duals).
    #[inline]
    fn of(x: f64) -> Self {
        // NumCast rather than FromPrimitive: some types only provide the
        // integer conversions and would truncate through i64
        <Self as num_traits::NumCast>::from(x).expect("f64 constant representable in scalar type")
    }

    /// Primal value as `f64`.
    #[inline]
    fn re(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Same primal value with every derivative dropped (stop-gradient).
    #[inline]
    fn detach(self) -> Self {
        Self::of(self.re())
    }

    /// `sign(0) = 0` convention used at the kinks of `|x|`.
    #[inline]
    fn sign0(self) -> Self {
        if self.is_zero() {
            Self::zero()
        } else {
            self.signum()
        }
    }
}

impl<T> Scalar for T where T: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static {}
