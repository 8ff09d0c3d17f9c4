//! Scalar abstraction: every numeric routine in this crate is generic over
//! a real field, so the whole pipeline runs in `f32` or `f64`.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable everywhere in the crate: `f32` or `f64`.
///
/// The bound is a blanket over [`nalgebra::RealField`] plus the conversions
/// the builders need; downstream code never has to name the individual
/// pieces.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + std::iter::Sum + Default
{
}

impl<T> Scalar for T where
    T: RealField + Copy + FromPrimitive + ToPrimitive + std::iter::Sum + Default
{
}

/// Shorthand for pulling an `f64` constant into the working scalar type.
#[inline]
pub fn cst<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Converts an integer count into the working scalar type.
#[inline]
pub fn from_count<T: Scalar>(c: usize) -> T {
    T::from_usize(c).expect("count representable in scalar type")
}
