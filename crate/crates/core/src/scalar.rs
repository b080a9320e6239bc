//! Scalar abstraction for the numerical kernels.
//!
//! Everything in this crate is generic over [`Scalar`] so the same code runs
//! in `f32` or `f64`. The experiment pipeline instantiates `f64` throughout;
//! see the type aliases at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the matrix, network, and training code.
pub trait Scalar:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Panics if the value is not representable, which cannot happen for the
    /// finite literals this crate uses.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 constant must be representable")
    }

    /// Widens to `f64`, e.g. for serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Formats a scalar with 17 significant digits, enough for a bitwise `f64`
/// round trip through text.
pub fn format_g17<T: Scalar>(value: T) -> String {
    format!("{:.16e}", value.as_f64())
}

/// Parses a scalar previously written by [`format_g17`].
pub fn parse_g17<T: Scalar>(text: &str) -> Option<T> {
    text.trim().parse::<f64>().ok().and_then(T::from_f64)
}
