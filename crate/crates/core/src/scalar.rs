//! Distance scalars.
//!
//! Every metric routine is generic over [`Scalar`]. Integer scalars compare
//! exactly; floating scalars are used for custom spaces with real-valued
//! distance tables.

use std::fmt::{Debug, Display};

use num_traits::{Num, NumCast, ToPrimitive};

/// A totally usable distance value: `f32`, `f64` or `i64`.
pub trait Scalar:
    Num + NumCast + ToPrimitive + PartialOrd + Copy + Debug + Display + Send + Sync + 'static
{
    /// Whether arithmetic and comparisons on this type are exact.
    const EXACT: bool;

    /// Largest integer `k` with `k <= self`.
    fn floor_int(self) -> i64;

    fn from_int(value: i64) -> Self {
        <Self as NumCast>::from(value).expect("integer distance representable in scalar")
    }

    /// Nearest representable value, `None` if out of range.
    fn from_f64(value: f64) -> Option<Self> {
        <Self as NumCast>::from(value)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Whether `self` is a whole number.
    fn is_integral(self) -> bool {
        Self::from_int(self.floor_int()) == self
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn floor_int(self) -> i64 {
                self.floor() as i64
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Scalar for i64 {
    const EXACT: bool = true;

    fn floor_int(self) -> i64 {
        self
    }
}

/// Smallest integer radius `r >= 0` such that a strict ball `B(x0, r)`
/// contains a point at basepoint distance `norm`, i.e. `floor(norm) + 1`.
pub fn strict_ball_radius<T: Scalar>(norm: T) -> u64 {
    (norm.floor_int() + 1).max(0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floors() {
        assert_eq!(2.7f64.floor_int(), 2);
        assert_eq!((-0.5f32).floor_int(), -1);
        assert_eq!(7i64.floor_int(), 7);
        assert!(3.0f64.is_integral());
        assert!(!3.5f64.is_integral());
    }

    #[test]
    fn strict_radius() {
        assert_eq!(strict_ball_radius(0i64), 1);
        assert_eq!(strict_ball_radius(4.5f64), 5);
        assert_eq!(strict_ball_radius(4i64), 5);
    }
}
