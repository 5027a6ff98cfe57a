//! Scalar abstraction the whole crate is generic over.
//!
//! Every numeric kernel takes a [`Scalar`], which bundles the real-field
//! operations from `nalgebra` with the conversion traits from `num-traits`.
//! `f32` and `f64` both satisfy the bound; the crate-root aliases pick `f64`,
//! which is what the verification tolerances in the test suite assume.

use std::fmt::{Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit can run on.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp {}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Display + LowerExp {}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if the value is not representable, which cannot happen for the
/// finite constants this crate feeds it.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant")
}

/// Converts a grid index or count into the working scalar type.
#[inline]
pub fn real_of<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize fits in scalar")
}
