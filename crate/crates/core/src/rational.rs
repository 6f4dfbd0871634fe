//! Exact rational arithmetic on checked 128-bit integers.
//!
//! Local densities and prime-power exponential-sum values are rationals whose
//! reduced denominators stay small (powers of a single prime), so i128
//! numerator/denominator pairs with eager reduction are enough. Every
//! operation is checked; overflow surfaces as an error instead of wrapping.

use crate::error::{Error, Result};
use serde::{Serialize, Serializer};
use std::cmp::Ordering;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rat {
    num: i128,
    den: i128,
}

// JSON numbers cannot carry i128, so rationals serialize as "num/den".
impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub const ZERO: Rat = Rat { num: 0, den: 1 };
    pub const ONE: Rat = Rat { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Rat> {
        if den == 0 {
            return Err(Error::invalid("rational with zero denominator"));
        }
        let g = gcd_i128(num, den);
        let (mut num, mut den) = if g == 0 { (0, 1) } else { (num / g, den / g) };
        if den < 0 {
            num = num
                .checked_neg()
                .ok_or_else(|| Error::overflow("rational sign flip"))?;
            den = -den;
        }
        Ok(Rat { num, den })
    }

    pub fn from_int(n: i128) -> Rat {
        Rat { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn add(&self, other: &Rat) -> Result<Rat> {
        // Cross-reduce first to keep intermediates small.
        let g = gcd_i128(self.den, other.den);
        let (da, db) = (self.den / g, other.den / g);
        let lhs = self
            .num
            .checked_mul(db)
            .ok_or_else(|| Error::overflow("rational add"))?;
        let rhs = other
            .num
            .checked_mul(da)
            .ok_or_else(|| Error::overflow("rational add"))?;
        let num = lhs
            .checked_add(rhs)
            .ok_or_else(|| Error::overflow("rational add"))?;
        let den = self
            .den
            .checked_mul(db)
            .ok_or_else(|| Error::overflow("rational add"))?;
        Rat::new(num, den)
    }

    pub fn sub(&self, other: &Rat) -> Result<Rat> {
        self.add(&Rat {
            num: other
                .num
                .checked_neg()
                .ok_or_else(|| Error::overflow("rational sub"))?,
            den: other.den,
        })
    }

    pub fn mul(&self, other: &Rat) -> Result<Rat> {
        let g1 = gcd_i128(self.num, other.den);
        let g2 = gcd_i128(other.num, self.den);
        let num = (self.num / g1)
            .checked_mul(other.num / g2)
            .ok_or_else(|| Error::overflow("rational mul"))?;
        let den = (self.den / g2)
            .checked_mul(other.den / g1)
            .ok_or_else(|| Error::overflow("rational mul"))?;
        Rat::new(num, den)
    }

    pub fn div(&self, other: &Rat) -> Result<Rat> {
        if other.num == 0 {
            return Err(Error::invalid("rational division by zero"));
        }
        self.mul(&Rat {
            num: other.den,
            den: other.num,
        })
    }

    /// Multiply by an exact power of `p` (negative exponents divide).
    pub fn mul_pow(&self, p: i128, exp: i32) -> Result<Rat> {
        let mut out = *self;
        let step = Rat { num: p, den: 1 };
        let inv = Rat { num: 1, den: p };
        for _ in 0..exp.unsigned_abs() {
            out = if exp >= 0 {
                out.mul(&step)?
            } else {
                out.mul(&inv)?
            };
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn abs(&self) -> Rat {
        Rat {
            num: self.num.abs(),
            den: self.den,
        }
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        // Denominators here stay small enough that the cross product cannot
        // overflow in practice, but fall back to f64 comparison if it would.
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a.partial_cmp(&b),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }
}

impl std::fmt::Display for Rat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_sign() {
        let r = Rat::new(20, -27).unwrap();
        assert_eq!(r.numer(), -20);
        assert_eq!(r.denom(), 27);
        assert_eq!(Rat::new(6, 4).unwrap(), Rat::new(3, 2).unwrap());
    }

    #[test]
    fn arithmetic() {
        let a = Rat::new(20, 27).unwrap();
        let b = Rat::new(7, 27).unwrap();
        assert_eq!(a.add(&b).unwrap(), Rat::ONE);
        assert_eq!(a.sub(&a).unwrap(), Rat::ZERO);
        let c = a.mul(&Rat::new(27, 20).unwrap()).unwrap();
        assert_eq!(c, Rat::ONE);
        assert_eq!(
            a.div(&b).unwrap(),
            Rat::new(20, 7).unwrap()
        );
    }

    #[test]
    fn overflow_is_reported() {
        let big = Rat::from_int(i128::MAX / 2);
        assert!(big.mul(&Rat::from_int(4)).is_err());
    }

    #[test]
    fn pow_scaling() {
        let r = Rat::new(5, 1).unwrap();
        assert_eq!(r.mul_pow(3, -2).unwrap(), Rat::new(5, 9).unwrap());
        assert_eq!(r.mul_pow(2, 3).unwrap(), Rat::from_int(40));
    }
}
