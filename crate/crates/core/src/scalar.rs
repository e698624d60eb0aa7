//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the core is generic over.
///
/// Everything is exercised in `f64`; `f32` compiles and runs but the fixed
/// thresholds (1e-300 guards, 1e-12 degeneracy checks) are tuned for double
/// precision.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
