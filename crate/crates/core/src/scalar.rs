//! Scalar abstraction for the numeric core.
//!
//! All dense kernels, the sparse window, and the per-event update rules are
//! generic over [`Real`]. In practice the trait is only implemented for `f32`
//! and `f64`; the crate root exports `f64` aliases since incremental Gram
//! maintenance is sensitive to accumulation error.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by every numeric kernel in the crate.
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for tolerances and config values.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts into any Real")
    }

    /// Widening conversion used when reporting metrics.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts into f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Compensated (Kahan) accumulator.
///
/// The fitness and objective evaluations reduce over every stored non-zero;
/// plain summation noise there would eat the 1e-9..1e-12 oracle tolerances.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> Default for KahanSum<T> {
    fn default() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: T) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}
