use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::int::Int;

/// An exact rational number, serialized as `{"num": "..", "den": ".."}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(pub BigRational);

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    num: Int,
    den: Int,
}

impl Rational {
    pub fn new(num: impl Into<Int>, den: impl Into<Int>) -> Self {
        let den: Int = den.into();
        assert!(!den.is_zero(), "zero denominator");
        Rational(BigRational::new(num.into().to_bigint(), den.to_bigint()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational::from_int(Int::ONE)
    }

    pub fn from_int(v: impl Into<Int>) -> Self {
        Rational(BigRational::from_integer(v.into().to_bigint()))
    }

    pub fn numer(&self) -> Int {
        Int::from(self.0.numer().clone())
    }

    pub fn denom(&self) -> Int {
        Int::from(self.0.denom().clone())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    /// `|self - other|`.
    pub fn abs_diff(&self, other: &Rational) -> Rational {
        let d = &self.0 - &other.0;
        if d < BigRational::zero() {
            Rational(-d)
        } else {
            Rational(d)
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl From<(i64, i64)> for Rational {
    fn from((n, d): (i64, i64)) -> Self {
        Rational::new(n, d)
    }
}

macro_rules! ratop {
    ($tr:ident, $m:ident) => {
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$m(&rhs.0))
            }
        }
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0.$m(rhs.0))
            }
        }
    };
}

ratop!(Add, add);
ratop!(Sub, sub);
ratop!(Mul, mul);
ratop!(Div, div);

impl PartialEq<(i64, i64)> for Rational {
    fn eq(&self, other: &(i64, i64)) -> bool {
        self.0.numer() * num_bigint::BigInt::from(other.1) == self.0.denom() * num_bigint::BigInt::from(other.0)
    }
}

impl PartialOrd<(i64, i64)> for Rational {
    fn partial_cmp(&self, other: &(i64, i64)) -> Option<Ordering> {
        Some(self.cmp(&Rational::from(*other)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RationalRepr {
            num: self.numer(),
            den: self.denom(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = RationalRepr::deserialize(d)?;
        if r.den.is_zero() {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rational(BigRational::new(
            BigInt::from(&r.num),
            BigInt::from(&r.den),
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_serializes() {
        let r = Rational::new(8, 288);
        assert_eq!(r, (1, 36));
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"num":"1","den":"36"}"#);
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Rational>(r#"{"num":"1","den":"0"}"#).is_err());
    }

    #[test]
    fn ordering() {
        assert!(Rational::new(1, 3) < (1, 2));
        assert_eq!(Rational::new(3, 4).abs_diff(&Rational::new(1, 4)), (1, 2));
    }
}
