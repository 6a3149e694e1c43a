//! Scalar abstraction for the numeric core.
//!
//! Everything downstream is generic over [`Real`] so the same code runs in
//! `f32` or `f64`; the crate-root aliases pin `f64`, which is what the CLI
//! and the reference tolerances assume.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lift an `f64` constant into this scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Lossy view as `f64`, for diagnostics and reports.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// ln 2, used to convert between nats and bits.
#[inline]
pub fn ln_2<R: Real>() -> R {
    R::of(std::f64::consts::LN_2)
}

/// Convert nats to bits.
#[inline]
pub fn nats_to_bits<R: Real>(x: R) -> R {
    x / ln_2()
}

/// Convert bits to nats.
#[inline]
pub fn bits_to_nats<R: Real>(x: R) -> R {
    x * ln_2()
}
