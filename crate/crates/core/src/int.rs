//! Exact integers with a machine-word fast path.
//!
//! Values that fit in an `i64` are stored inline; anything larger is promoted
//! to a heap-allocated [`BigInt`]. Every arithmetic operation is checked, so an
//! overflow of the fast path escalates instead of wrapping. The representation
//! is canonical (a `Big` never holds a value that fits in `i64`), which keeps the
//! derived `Eq` and `Hash` sound.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Int {
    Small(i64),
    Big(Box<BigInt>),
}

impl Int {
    pub const ZERO: Int = Int::Small(0);
    pub const ONE: Int = Int::Small(1);

    fn from_big(b: BigInt) -> Int {
        match b.to_i64() {
            Some(v) => Int::Small(v),
            None => Int::Big(Box::new(b)),
        }
    }

    pub fn to_bigint(&self) -> BigInt {
        match self {
            Int::Small(v) => BigInt::from(*v),
            Int::Big(b) => (**b).clone(),
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        match self {
            Int::Small(v) => Some(*v),
            Int::Big(_) => None,
        }
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.to_i64().and_then(|v| u64::try_from(v).ok())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Int::Small(0))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Int::Small(v) => *v < 0,
            Int::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Int::Small(v) => *v > 0,
            Int::Big(b) => b.is_positive(),
        }
    }

    pub fn is_even(&self) -> bool {
        match self {
            Int::Small(v) => v & 1 == 0,
            Int::Big(b) => b.is_even(),
        }
    }

    pub fn is_odd(&self) -> bool {
        !self.is_even()
    }

    pub fn abs(&self) -> Int {
        match self {
            Int::Small(v) => match v.checked_abs() {
                Some(a) => Int::Small(a),
                None => Int::from_big(BigInt::from(*v).abs()),
            },
            Int::Big(b) => Int::from_big(b.abs()),
        }
    }

    pub fn pow(&self, exp: u32) -> Int {
        if let Int::Small(v) = self {
            if let Some(p) = v.checked_pow(exp) {
                return Int::Small(p);
            }
        }
        Int::from_big(num_traits::pow(self.to_bigint(), exp as usize))
    }

    /// Euclidean division: the remainder is always in `[0, |m|)`.
    pub fn div_rem_euclid(&self, m: &Int) -> (Int, Int) {
        assert!(!m.is_zero(), "division by zero");
        if let (Int::Small(a), Int::Small(b)) = (self, m) {
            if let (Some(q), Some(r)) = (a.checked_div_euclid(*b), a.checked_rem_euclid(*b)) {
                return (Int::Small(q), Int::Small(r));
            }
        }
        let a = self.to_bigint();
        let b = m.to_bigint();
        let (mut q, mut r) = a.div_mod_floor(&b);
        if r.is_negative() {
            // only reachable for negative divisors
            r += b.abs();
            q += 1;
        }
        (Int::from_big(q), Int::from_big(r))
    }

    pub fn rem_euclid(&self, m: &Int) -> Int {
        self.div_rem_euclid(m).1
    }

    pub fn div_floor(&self, m: &Int) -> Int {
        Int::from_big(self.to_bigint().div_floor(&m.to_bigint()))
    }

    pub fn div_ceil(&self, m: &Int) -> Int {
        Int::from_big(Integer::div_ceil(&self.to_bigint(), &m.to_bigint()))
    }

    /// Number of bits in `|self|` (0 for zero).
    pub fn bits(&self) -> u64 {
        match self {
            Int::Small(v) => 64 - v.unsigned_abs().leading_zeros() as u64,
            Int::Big(b) => b.bits(),
        }
    }

    pub fn gcd(&self, other: &Int) -> Int {
        match (self, other) {
            (Int::Small(a), Int::Small(b)) => {
                let g = a.unsigned_abs().gcd(&b.unsigned_abs());
                Int::from(g)
            }
            _ => Int::from_big(self.to_bigint().gcd(&other.to_bigint())),
        }
    }

    /// Returns `(g, x, y)` with `g = gcd(self, other) = x*self + y*other`.
    pub fn extended_gcd(&self, other: &Int) -> (Int, Int, Int) {
        let e = self.to_bigint().extended_gcd(&other.to_bigint());
        (Int::from_big(e.gcd), Int::from_big(e.x), Int::from_big(e.y))
    }

    pub fn min_of<'a>(&'a self, other: &'a Int) -> &'a Int {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max_of<'a>(&'a self, other: &'a Int) -> &'a Int {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Default for Int {
    fn default() -> Self {
        Int::ZERO
    }
}

macro_rules! from_prim {
    ($($t:ty),*) => {$(
        impl From<$t> for Int {
            fn from(v: $t) -> Int {
                match i64::try_from(v) {
                    Ok(s) => Int::Small(s),
                    Err(_) => Int::Big(Box::new(BigInt::from(v))),
                }
            }
        }
    )*};
}
from_prim!(i8, i16, i32, i64, i128, u8, u16, u32, u64, u128, isize, usize);

impl From<BigInt> for Int {
    fn from(b: BigInt) -> Int {
        Int::from_big(b)
    }
}

impl From<&Int> for BigInt {
    fn from(v: &Int) -> BigInt {
        v.to_bigint()
    }
}

impl Ord for Int {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Int::Small(a), Int::Small(b)) => a.cmp(b),
            _ => self.to_bigint().cmp(&other.to_bigint()),
        }
    }
}

impl PartialOrd for Int {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident, $big:tt, $atr:ident, $am:ident) => {
        impl<'a, 'b> $tr<&'b Int> for &'a Int {
            type Output = Int;
            fn $m(self, rhs: &'b Int) -> Int {
                if let (Int::Small(a), Int::Small(b)) = (self, rhs) {
                    if let Some(v) = a.$checked(*b) {
                        return Int::Small(v);
                    }
                }
                Int::from_big(self.to_bigint() $big rhs.to_bigint())
            }
        }
        impl $tr<Int> for Int {
            type Output = Int;
            fn $m(self, rhs: Int) -> Int {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a Int> for Int {
            type Output = Int;
            fn $m(self, rhs: &'a Int) -> Int {
                (&self).$m(rhs)
            }
        }
        impl<'a> $tr<Int> for &'a Int {
            type Output = Int;
            fn $m(self, rhs: Int) -> Int {
                self.$m(&rhs)
            }
        }
        impl $tr<i64> for Int {
            type Output = Int;
            fn $m(self, rhs: i64) -> Int {
                (&self).$m(&Int::Small(rhs))
            }
        }
        impl<'a> $tr<i64> for &'a Int {
            type Output = Int;
            fn $m(self, rhs: i64) -> Int {
                self.$m(&Int::Small(rhs))
            }
        }
        impl $atr<&Int> for Int {
            fn $am(&mut self, rhs: &Int) {
                *self = (&*self).$m(rhs);
            }
        }
        impl $atr<Int> for Int {
            fn $am(&mut self, rhs: Int) {
                *self = (&*self).$m(&rhs);
            }
        }
    };
}

binop!(Add, add, checked_add, +, AddAssign, add_assign);
binop!(Sub, sub, checked_sub, -, SubAssign, sub_assign);
binop!(Mul, mul, checked_mul, *, MulAssign, mul_assign);

impl Neg for &Int {
    type Output = Int;
    fn neg(self) -> Int {
        match self {
            Int::Small(v) => match v.checked_neg() {
                Some(n) => Int::Small(n),
                None => Int::from_big(-BigInt::from(*v)),
            },
            Int::Big(b) => Int::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Int {
    type Output = Int;
    fn neg(self) -> Int {
        -&self
    }
}

impl Zero for Int {
    fn zero() -> Self {
        Int::ZERO
    }
    fn is_zero(&self) -> bool {
        Int::is_zero(self)
    }
}

impl One for Int {
    fn one() -> Self {
        Int::ONE
    }
}

impl Sum for Int {
    fn sum<I: Iterator<Item = Int>>(iter: I) -> Int {
        iter.fold(Int::ZERO, |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Int> for Int {
    fn sum<I: Iterator<Item = &'a Int>>(iter: I) -> Int {
        iter.fold(Int::ZERO, |acc, x| acc + x)
    }
}

impl Product for Int {
    fn product<I: Iterator<Item = Int>>(iter: I) -> Int {
        iter.fold(Int::ONE, |acc, x| acc * x)
    }
}

impl<'a> Product<&'a Int> for Int {
    fn product<I: Iterator<Item = &'a Int>>(iter: I) -> Int {
        iter.fold(Int::ONE, |acc, x| acc * x)
    }
}

impl fmt::Display for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Int::Small(v) => write!(f, "{v}"),
            Int::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Int {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Int {
    type Err = num_bigint::ParseBigIntError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(v) = s.parse::<i64>() {
            return Ok(Int::Small(v));
        }
        BigInt::from_str(s).map(Int::from_big)
    }
}

// Integers always travel as decimal strings so that consumers never lose
// precision; plain JSON numbers are accepted on input.
impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Int;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a decimal string")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Int, E> {
                Ok(Int::from(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Int, E> {
                Ok(Int::from(v))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Int, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}
