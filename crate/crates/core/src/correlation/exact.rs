//! Exact arithmetic on sums and products of finite `f64` values.
//!
//! Every finite double is `m * 2^e` with integer `m`, so sums and products of
//! doubles are exactly representable as a big-integer mantissa and a binary
//! exponent. Accumulating in this form makes the single-pass moment sums
//! free of cancellation error.

use num_bigint::{BigInt, Sign};
use num_traits::Zero;
use std::ops::{Mul, Sub};

/// The exact value `mant * 2^exp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub(crate) fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    /// `None` for NaN and infinities.
    pub(crate) fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (m, exp) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        Some(Dyadic {
            mant: BigInt::from_biguint(sign, m.into()),
            exp,
        })
    }

    pub(crate) fn from_u64(n: u64) -> Self {
        Dyadic {
            mant: BigInt::from(n),
            exp: 0,
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub(crate) fn sign(&self) -> Sign {
        self.mant.sign()
    }

    pub(crate) fn add_assign(&mut self, other: &Dyadic) {
        if other.is_zero() {
            return;
        }
        if self.is_zero() {
            *self = other.clone();
            return;
        }
        if other.exp >= self.exp {
            self.mant += &other.mant << (other.exp - self.exp) as usize;
        } else {
            let shifted = std::mem::take(&mut self.mant) << (self.exp - other.exp) as usize;
            self.mant = shifted + &other.mant;
            self.exp = other.exp;
        }
    }

    /// Mantissas of `self` and `other` rescaled to a shared exponent.
    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let exp = self.exp.min(other.exp);
        (
            &self.mant << (self.exp - exp) as usize,
            &other.mant << (other.exp - exp) as usize,
            exp,
        )
    }

    /// Exact `num / den` rounded to the nearest double.
    pub(crate) fn ratio_to_f64(num: &Dyadic, den: &Dyadic) -> f64 {
        use num_rational::BigRational;
        use num_traits::ToPrimitive;
        let (n, d, _) = num.aligned(den);
        BigRational::new(n, d).to_f64().unwrap_or(f64::NAN)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic {
            mant: &self.mant * &rhs.mant,
            exp: self.exp + rhs.exp,
        }
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(rhs);
        Dyadic { mant: a - b, exp }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum(xs: &[f64]) -> Dyadic {
        let mut acc = Dyadic::zero();
        for &x in xs {
            acc.add_assign(&Dyadic::from_f64(x).unwrap());
        }
        acc
    }

    #[test]
    fn sums_without_rounding() {
        // 0.1 + 0.2 - 0.3 is not zero in doubles, but the exact sum of the three
        // doubles is a tiny positive number; 1e16 + 1 - 1e16 is exactly 1.
        let s = sum(&[1e16, 1.0, -1e16]);
        assert_eq!(Dyadic::ratio_to_f64(&s, &Dyadic::from_u64(1)), 1.0);
        let s = sum(&[0.5, 0.25, -0.75]);
        assert!(s.is_zero());
    }

    #[test]
    fn decodes_subnormals_and_signs() {
        let tiny = Dyadic::from_f64(f64::from_bits(1)).unwrap();
        assert_eq!(tiny.exp, -1074);
        let neg = Dyadic::from_f64(-3.0).unwrap();
        assert_eq!(neg.sign(), Sign::Minus);
        assert_eq!(Dyadic::ratio_to_f64(&neg, &Dyadic::from_u64(1)), -3.0);
        assert!(Dyadic::from_f64(f64::NAN).is_none());
        assert!(Dyadic::from_f64(f64::INFINITY).is_none());
    }

    #[test]
    fn products_and_differences() {
        let a = Dyadic::from_f64(0.1).unwrap();
        let b = Dyadic::from_f64(3.0).unwrap();
        let p = &a * &b;
        // exact 3 * fl(0.1) rounds to the double nearest 0.30000000000000004
        assert_eq!(Dyadic::ratio_to_f64(&p, &Dyadic::from_u64(1)), 0.1 * 3.0);
        assert!((&p - &p).is_zero());
    }
}
