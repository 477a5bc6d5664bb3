//! Field abstraction shared by the simplex engine and the exact elimination
//! routines. `f64` works with absolute tolerances; [`Rational`] is exact.

use core::cmp::Ordering;
use core::fmt::Debug;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = num_rational::BigRational;

/// Tolerance below which a float is treated as zero by sign tests.
pub const FLOAT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    Float,
    Rational,
}

pub trait Scalar: Clone + Debug + PartialEq + PartialOrd + Send + Sync + 'static {
    const ARITHMETIC: Arithmetic;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// Exact conversion; fails only for non-finite input.
    fn from_f64(v: f64) -> Result<Self>;
    fn as_f64(&self) -> f64;

    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    fn magnitude(&self) -> Self;

    /// `self -= a * b`, the inner update of every pivot.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self);

    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;

    fn cmp_tol(&self, o: &Self) -> Ordering {
        let d = self.minus(o);
        if d.is_positive() {
            Ordering::Greater
        } else if d.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Scalar for f64 {
    const ARITHMETIC: Arithmetic = Arithmetic::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64(v: f64) -> Result<Self> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(alloc::format!("non-finite value {v}")))
        }
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> Self {
        libm::fabs(*self)
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
    fn is_zero(&self) -> bool {
        libm::fabs(*self) <= FLOAT_EPS
    }
    fn is_positive(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_negative(&self) -> bool {
        *self < -FLOAT_EPS
    }
}

impl Scalar for Rational {
    const ARITHMETIC: Arithmetic = Arithmetic::Rational;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }
    fn from_f64(v: f64) -> Result<Self> {
        Rational::from_float(v)
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("{v} has no exact rational form")))
    }
    fn as_f64(&self) -> f64 {
        ratio_to_f64(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn over(&self, o: &Self) -> Self {
        self / o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn magnitude(&self) -> Self {
        self.abs()
    }
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        if !Zero::is_zero(a) && !Zero::is_zero(b) {
            *self -= a * b;
        }
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn cmp_tol(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
}

/// Float approximation of a rational that survives numerators and
/// denominators far beyond the `f64` exponent range.
pub fn ratio_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Keep 60 significant bits of each side before dividing.
    let shift_n = (nb - 60).max(0);
    let shift_d = (db - 60).max(0);
    let n = (r.numer() >> shift_n as usize).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift_d as usize).to_f64().unwrap_or(1.0);
    let e = shift_n - shift_d;
    (n / d) * libm::pow(2.0, e as f64)
}

/// `2^e` as an exact rational (negative exponents allowed).
pub fn pow2(e: i64) -> Rational {
    let one = BigInt::one();
    if e >= 0 {
        Rational::from_integer(one << e as usize)
    } else {
        Rational::new(one.clone(), one << (-e) as usize)
    }
}

/// Smallest rational of the form `k / 2^bits` that is `>= sqrt(x)`, `x >= 0`.
pub fn sqrt_upper(x: &Rational, bits: u32) -> Rational {
    if Zero::is_zero(x) {
        return <Rational as Zero>::zero();
    }
    let scale = BigInt::one() << (2 * bits as usize);
    // ceil(x * 4^bits)
    let scaled = x * Rational::from_integer(scale);
    let c = scaled.ceil().to_integer();
    let mut r = c.sqrt();
    if &r * &r < c {
        r += 1;
    }
    Rational::new(r, BigInt::one() << bits as usize)
}

/// Largest rational of the form `k / 2^bits` that is `<= sqrt(x)`, `x >= 0`.
pub fn sqrt_lower(x: &Rational, bits: u32) -> Rational {
    if !Signed::is_positive(x) {
        return <Rational as Zero>::zero();
    }
    let scale = BigInt::one() << (2 * bits as usize);
    let scaled = x * Rational::from_integer(scale);
    let f = scaled.floor().to_integer();
    Rational::new(f.sqrt(), BigInt::one() << bits as usize)
}

/// Number of bits in the encoding of a rational (numerator plus denominator).
pub fn bit_size(r: &Rational) -> u64 {
    r.numer().bits().max(1) + r.denom().bits().max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_conversion_is_exact() {
        let r = Rational::from_f64(0.1).unwrap();
        assert_eq!(r.as_f64(), 0.1);
        assert!(Rational::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn huge_ratio_to_float() {
        assert_eq!(pow2(-2000).as_f64(), 0.0);
        let r = pow2(-30);
        assert_eq!(r.as_f64(), 2f64.powi(-30));
        let big = Rational::new(BigInt::one() << 1500usize, (BigInt::one() << 1499usize) * 3);
        assert!((big.as_f64() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_bounds_bracket() {
        let two = Rational::from_i64(2);
        let lo = sqrt_lower(&two, 20);
        let hi = sqrt_upper(&two, 20);
        assert!(&lo * &lo <= two);
        assert!(&hi * &hi >= two);
        assert!((hi.as_f64() - lo.as_f64()) <= 2.0f64.powi(-20) + 1e-15);
        let four = Rational::from_i64(4);
        assert_eq!(sqrt_upper(&four, 5), Rational::from_i64(2));
    }
}
