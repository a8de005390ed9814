//! Exact field scalars: arbitrary-precision rationals, with an optional
//! prime-field mode.
//!
//! Mixed arithmetic promotes rational integers into the prime field, so
//! code that multiplies by combinatorial integers (derivatives, Leibniz
//! coefficients) works in both modes.  Operations mixing two different
//! prime moduli panic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::error::{NcdefError, Result};

/// An exact scalar: a rational number or a prime-field element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Q(BigRational),
    /// Value in `0..p` together with the prime modulus `p`.
    Fp(u64, u64),
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mod_pow(b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc: u128 = 1;
    let mut bb: u128 = (b % p) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % p as u128;
        }
        bb = bb * bb % p as u128;
        e >>= 1;
    }
    acc as u64
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Q(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar::Q(BigRational::one())
    }

    pub fn from_i64(n: i64) -> Self {
        Scalar::Q(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Q(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    /// A prime-field element; rejects modulus <= 1 or composite.
    pub fn fp(value: i64, p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(NcdefError::PrimeField(format!(
                "modulus {p} is not a prime > 1"
            )));
        }
        let v = value.rem_euclid(p as i64) as u64;
        Ok(Scalar::Fp(v, p))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_zero(),
            Scalar::Fp(v, _) => *v == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_one(),
            Scalar::Fp(v, _) => *v == 1,
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            Scalar::Q(_) => 0,
            Scalar::Fp(_, p) => *p,
        }
    }

    /// Multiplicative inverse.  Errors on zero (and never on a nonzero
    /// prime-field element, the modulus being prime).
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(NcdefError::Invalid("division by zero".into()));
        }
        Ok(match self {
            Scalar::Q(r) => Scalar::Q(r.recip()),
            Scalar::Fp(v, p) => Scalar::Fp(mod_pow(*v, p - 2, *p), *p),
        })
    }

    /// `self / n` for an integer `n`; errors in prime-field mode when `n`
    /// is divisible by the characteristic.
    pub fn div_int(&self, n: i64) -> Result<Self> {
        match self {
            Scalar::Q(_) => Ok(self.clone() * Scalar::ratio(1, n)),
            Scalar::Fp(_, p) => {
                if n.rem_euclid(*p as i64) == 0 {
                    Err(NcdefError::PrimeField(format!(
                        "{n} is not invertible modulo {p}"
                    )))
                } else {
                    Ok(self.clone() * Scalar::fp(n, *p)?.inv()?)
                }
            }
        }
    }

    fn to_fp(&self, p: u64) -> Scalar {
        match self {
            Scalar::Fp(v, q) => {
                assert_eq!(*q, p, "mixed prime moduli {q} and {p}");
                Scalar::Fp(*v, p)
            }
            Scalar::Q(r) => {
                let num = r.numer().mod_floor_u64(p);
                let den = r.denom().mod_floor_u64(p);
                assert!(den != 0, "denominator divisible by the characteristic {p}");
                Scalar::Fp(
                    ((num as u128 * mod_pow(den, p - 2, p) as u128) % p as u128) as u64,
                    p,
                )
            }
        }
    }

    fn promote(a: &Scalar, b: &Scalar) -> (Scalar, Scalar) {
        match (a, b) {
            (Scalar::Q(_), Scalar::Q(_)) => (a.clone(), b.clone()),
            (Scalar::Fp(_, p), _) => (a.clone(), b.to_fp(*p)),
            (_, Scalar::Fp(_, p)) => (a.to_fp(*p), b.clone()),
        }
    }

    /// Serialized form: `"p/q"` for rationals, `"v mod p"` for prime fields.
    pub fn to_string_exact(&self) -> String {
        match self {
            Scalar::Q(r) => {
                if r.denom().is_one() {
                    format!("{}", r.numer())
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Fp(v, p) => format!("{v} mod {p}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((v, p)) = s.split_once(" mod ") {
            let v: i64 = v
                .trim()
                .parse()
                .map_err(|_| NcdefError::Invalid(format!("bad scalar {s}")))?;
            let p: u64 = p
                .trim()
                .parse()
                .map_err(|_| NcdefError::Invalid(format!("bad scalar {s}")))?;
            return Scalar::fp(v, p);
        }
        let parse_int = |t: &str| -> Result<BigInt> {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| NcdefError::Invalid(format!("bad scalar {s}")))
        };
        if let Some((n, d)) = s.split_once('/') {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(NcdefError::Invalid(format!("zero denominator in {s}")));
            }
            Ok(Scalar::Q(BigRational::new(parse_int(n)?, d)))
        } else {
            Ok(Scalar::Q(BigRational::from_integer(parse_int(s)?)))
        }
    }
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, p: u64) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, p: u64) -> u64 {
        let m = self % BigInt::from(p);
        let m = if m.is_negative() { m + BigInt::from(p) } else { m };
        m.to_u64().unwrap()
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        match Scalar::promote(&self, &rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Fp(a, p), Scalar::Fp(b, _)) => Scalar::Fp((a + b) % p, p),
            _ => unreachable!(),
        }
    }
}

impl AddAssign for Scalar {
    fn add_assign(&mut self, rhs: Scalar) {
        *self = self.clone() + rhs;
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Q(r) => Scalar::Q(-r),
            Scalar::Fp(v, p) => Scalar::Fp((p - v) % p, p),
        }
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        match Scalar::promote(&self, &rhs) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Fp(a, p), Scalar::Fp(b, _)) => {
                Scalar::Fp((a as u128 * b as u128 % p as u128) as u64, p)
            }
            _ => unreachable!(),
        }
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        self * rhs.inv().expect("division by zero")
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_exact())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_exact())
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string_exact())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Scalar::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_arithmetic_reduces() {
        let a = Scalar::ratio(1, 2) + Scalar::ratio(1, 3);
        assert_eq!(a, Scalar::ratio(5, 6));
        assert_eq!(a.to_string_exact(), "5/6");
    }

    #[test]
    fn prime_field_rejects_bad_modulus() {
        assert!(Scalar::fp(1, 1).is_err());
        assert!(Scalar::fp(1, 6).is_err());
        assert!(Scalar::fp(3, 7).is_ok());
    }

    #[test]
    fn fp_inverse() {
        let a = Scalar::fp(3, 7).unwrap();
        assert!((a.clone() * a.inv().unwrap()).is_one());
    }

    #[test]
    fn promotion_of_integers() {
        let a = Scalar::fp(3, 5).unwrap() * Scalar::from_i64(4);
        assert_eq!(a, Scalar::fp(2, 5).unwrap());
    }

    #[test]
    fn div_int_blocks_characteristic() {
        let a = Scalar::fp(1, 3).unwrap();
        assert!(a.div_int(3).is_err());
        assert!(a.div_int(2).is_ok());
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["-7/3", "4", "2 mod 5"] {
            let v = Scalar::parse(s).unwrap();
            assert_eq!(Scalar::parse(&v.to_string_exact()).unwrap(), v);
        }
    }
}
