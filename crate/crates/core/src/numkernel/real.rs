//! Precision-parametric scalars.
//!
//! Every numerical routine in the crate is generic over [`Real`]. Two backends
//! are provided: `f64` (16 decimal digits) and [`Mp`], an MPFR float whose
//! decimal precision is fixed by a const parameter. Precision is chosen once
//! per run by picking the type, never per value.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;

use super::NumError;

/// Scalar field used by every kernel.
pub trait Real:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
    + for<'a> DivAssign<&'a Self>
{
    /// Decimal digits carried by the representation.
    const DIGITS: u32;

    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    /// Parses a decimal literal rounded once to the working precision.
    fn parse_decimal(s: &str) -> Result<Self, NumError>;
    fn to_f64(&self) -> f64;
    /// Exact widening into an MPFR float of at least the current precision.
    fn to_float(&self) -> Float;
    /// Rounds an MPFR float to the working precision.
    fn from_float(x: &Float) -> Self;

    fn pi() -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    /// `ln(1 + x)` without cancellation for small `x`.
    fn ln_1p(&self) -> Self;
    /// `exp(x) - 1` without cancellation for small `x`.
    fn exp_m1(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powi(&self, n: i32) -> Self;
    fn is_finite(&self) -> bool;
    /// Unit roundoff `u` of the representation.
    fn unit_roundoff() -> Self;

    /// Formats with `sig` significant digits in scientific notation.
    fn to_sci_string(&self, sig: usize) -> String;

    fn zero() -> Self {
        Self::from_i64(0)
    }

    fn one() -> Self {
        Self::from_i64(1)
    }

    fn from_usize(n: usize) -> Self {
        Self::from_i64(n as i64)
    }

    /// `10^(offset - DIGITS)`, the scale used for pivot, rank and node
    /// collision thresholds.
    fn precision_floor(offset: i32) -> Self {
        Self::from_i64(10).powi(offset - Self::DIGITS as i32)
    }

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }

    fn signum(&self) -> Self {
        if *self < Self::zero() {
            -Self::one()
        } else {
            Self::one()
        }
    }

    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn hypot(&self, other: &Self) -> Self {
        let a = self.abs();
        let b = other.abs();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        if big.is_zero() {
            return big;
        }
        let r = small / &big;
        big * (Self::one() + r.clone() * r).sqrt()
    }

    /// Converts between precisions. Widening is exact.
    fn convert<S: Real>(&self) -> S {
        S::from_float(&self.to_float())
    }
}

/// Sum of an iterator of owned values.
pub fn sum<R: Real, I: IntoIterator<Item = R>>(it: I) -> R {
    it.into_iter().fold(R::zero(), |acc, x| acc + x)
}

/// Largest absolute value, zero for an empty slice.
pub fn max_abs<R: Real>(xs: &[R]) -> R {
    xs.iter().fold(R::zero(), |m, x| m.max(x.abs()))
}

impl Real for f64 {
    const DIGITS: u32 = 16;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn parse_decimal(s: &str) -> Result<Self, NumError> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| NumError::Parse(s.to_string()))
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_float(&self) -> Float {
        Float::with_val(53, *self)
    }
    fn from_float(x: &Float) -> Self {
        x.to_f64()
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn ln_1p(&self) -> Self {
        f64::ln_1p(*self)
    }
    fn exp_m1(&self) -> Self {
        f64::exp_m1(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn unit_roundoff() -> Self {
        f64::EPSILON / 2.0
    }
    fn to_sci_string(&self, sig: usize) -> String {
        format!("{:.*e}", sig.saturating_sub(1), self)
    }
}

/// MPFR-backed float carrying `D` decimal digits.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Mp<const D: u32>(Float);

/// 32 decimal digits.
pub type Mp32 = Mp<32>;
/// 100 decimal digits.
pub type Mp100 = Mp<100>;

impl<const D: u32> Mp<D> {
    /// Binary precision: `ceil(D * log2(10))`.
    pub const BITS: u32 = (D * 3322 + 999) / 1000;

    pub fn inner(&self) -> &Float {
        &self.0
    }
}

impl<const D: u32> Debug for Mp<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(D as usize))
    }
}

impl<const D: u32> Display for Mp<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sci_string(D as usize))
    }
}

impl<const D: u32> Neg for Mp<D> {
    type Output = Self;
    fn neg(self) -> Self {
        Mp(-self.0)
    }
}

macro_rules! mp_binop {
    ($tr:ident, $m:ident, $tra:ident, $ma:ident, $op:tt, $opa:tt) => {
        impl<const D: u32> $tr for Mp<D> {
            type Output = Self;
            fn $m(self, rhs: Self) -> Self {
                Mp(self.0 $op rhs.0)
            }
        }
        impl<'a, const D: u32> $tr<&'a Mp<D>> for Mp<D> {
            type Output = Self;
            fn $m(self, rhs: &'a Self) -> Self {
                Mp(self.0 $op &rhs.0)
            }
        }
        impl<const D: u32> $tra for Mp<D> {
            fn $ma(&mut self, rhs: Self) {
                self.0 $opa rhs.0;
            }
        }
        impl<'a, const D: u32> $tra<&'a Mp<D>> for Mp<D> {
            fn $ma(&mut self, rhs: &'a Self) {
                self.0 $opa &rhs.0;
            }
        }
    };
}

mp_binop!(Add, add, AddAssign, add_assign, +, +=);
mp_binop!(Sub, sub, SubAssign, sub_assign, -, -=);
mp_binop!(Mul, mul, MulAssign, mul_assign, *, *=);
mp_binop!(Div, div, DivAssign, div_assign, /, /=);

impl<const D: u32> Real for Mp<D> {
    const DIGITS: u32 = D;

    fn from_f64(x: f64) -> Self {
        Mp(Float::with_val(Self::BITS, x))
    }
    fn from_i64(x: i64) -> Self {
        Mp(Float::with_val(Self::BITS, x))
    }
    fn parse_decimal(s: &str) -> Result<Self, NumError> {
        let parsed = Float::parse(s.trim()).map_err(|_| NumError::Parse(s.to_string()))?;
        Ok(Mp(Float::with_val(Self::BITS, parsed)))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn to_float(&self) -> Float {
        self.0.clone()
    }
    fn from_float(x: &Float) -> Self {
        Mp(Float::with_val(Self::BITS, x))
    }
    fn pi() -> Self {
        Mp(Float::with_val(Self::BITS, Constant::Pi))
    }
    fn abs(&self) -> Self {
        Mp(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        Mp(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Mp(self.0.clone().ln())
    }
    fn ln_1p(&self) -> Self {
        Mp(self.0.clone().ln_1p())
    }
    fn exp_m1(&self) -> Self {
        Mp(self.0.clone().exp_m1())
    }
    fn sin(&self) -> Self {
        Mp(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Mp(self.0.clone().cos())
    }
    fn powi(&self, n: i32) -> Self {
        Mp(self.0.clone().pow(n))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn unit_roundoff() -> Self {
        Mp(Float::with_val(Self::BITS, 1) >> Self::BITS)
    }
    fn to_sci_string(&self, sig: usize) -> String {
        if self.0.is_zero() {
            return format!("{:.*e}", sig.saturating_sub(1), 0.0);
        }
        let s = self.0.to_string_radix(10, Some(sig.max(1)));
        normalize_mpfr_exponent(&s)
    }
}

/// MPFR prints `1.25e-5` as `1.25e-5` but also `1.25` without exponent; make
/// the exponent explicit so CSV consumers see one format.
fn normalize_mpfr_exponent(s: &str) -> String {
    if s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s.to_string()
    } else {
        format!("{s}e0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_precision_matches_digits() {
        assert_eq!(Mp32::BITS, 107);
        assert_eq!(Mp100::BITS, 333);
    }

    #[test]
    fn widening_is_exact() {
        let third: Mp32 = Mp32::one() / Mp32::from_i64(3);
        let wide: Mp100 = third.convert();
        let back: Mp32 = wide.convert();
        assert_eq!(back, third);
        // The widened value keeps the 32-digit rounding, so it differs from a
        // native 100-digit third.
        let native = Mp100::one() / Mp100::from_i64(3);
        assert!(wide != native);
        assert!((wide - native).abs() < Mp100::parse_decimal("1e-31").unwrap());
    }

    #[test]
    fn arithmetic_stays_in_precision() {
        let a = Mp100::parse_decimal("0.1").unwrap();
        let b = a.clone() * &a;
        assert_eq!(b.inner().prec(), Mp100::BITS);
        assert_eq!((a + b).inner().prec(), Mp100::BITS);
    }

    #[test]
    fn precision_floor_scales_with_digits() {
        assert!((f64::precision_floor(4) - 1e-12).abs() < 1e-27);
        let t = Mp32::precision_floor(4).to_f64();
        assert!((t / 1e-28 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decimal_parse_is_correctly_rounded() {
        let tenth = Mp100::parse_decimal("0.1").unwrap();
        let ten = Mp100::from_i64(10);
        let err = (tenth * ten - Mp100::one()).abs();
        assert!(err <= Mp100::unit_roundoff() * Mp100::from_i64(4));
    }

    #[test]
    fn sci_format() {
        assert_eq!(1.5e-7f64.to_sci_string(3), "1.50e-7");
        let x = Mp32::parse_decimal("1.5e-7").unwrap();
        assert!(x.to_sci_string(3).starts_with("1.50e-7"));
    }
}
