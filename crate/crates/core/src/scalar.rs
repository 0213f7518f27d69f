//! Scalar abstraction for the wear/forecast arithmetic.
//!
//! Remaining-write budgets, write bandwidths and predicted death times are
//! ordinary real arithmetic, so the statistics side of the crate is generic
//! over the float width. `f64` is the default everywhere (see the aliases at
//! the crate root); `f32` works for small write budgets but cannot represent
//! budgets near 1e11 exactly.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the endurance and forecasting math.
pub trait Real: Float + FromPrimitive + ToPrimitive + Sum + Debug + Send + Sync + 'static {
    /// Lossy conversion from `f64`, used when ingesting sampled budgets and
    /// measured rates.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 -> Real conversion")
    }

    /// Lossy widening to `f64` for output formatting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real -> f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
