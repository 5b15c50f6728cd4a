//! Real numbers with an unbounded exponent.
//!
//! The regularizing product of 𝒢ε grows factorially with the product cutoff
//! and the series themselves reach `e^{2(g/ω)²}`, so values are carried as a
//! sign together with a binary fraction in `[0.5, 1)` and an `i64` exponent.
//! The natural-log magnitude is available through [`SignedLog::log_mag`].
//! Because the fraction is an ordinary `f64`, conversion to and from `f64`
//! is exact whenever the value is representable.

use core::cmp::Ordering;
use core::ops::{Add, Mul, Neg, Sub};

use crate::math;

const LN_2: f64 = core::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    sign: i8,
    frac: f64,
    exp: i64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0,
        frac: 0.0,
        exp: 0,
    };

    pub const ONE: SignedLog = SignedLog {
        sign: 1,
        frac: 0.5,
        exp: 1,
    };

    /// Panics on NaN. Infinities are not representable either.
    pub fn from_f64(v: f64) -> Self {
        assert!(v.is_finite(), "SignedLog::from_f64 on non-finite {v}");
        if v == 0.0 {
            return SignedLog::ZERO;
        }
        let (frac, exp) = math::frexp(v.abs());
        SignedLog {
            sign: if v < 0.0 { -1 } else { 1 },
            frac,
            exp: exp as i64,
        }
    }

    /// Builds `sign · e^{log_mag}`. A zero sign yields [`SignedLog::ZERO`].
    pub fn from_parts(sign: i8, log_mag: f64) -> Self {
        if sign == 0 {
            return SignedLog::ZERO;
        }
        let e2 = log_mag / LN_2;
        let whole = libm::floor(e2);
        let frac = math::exp((e2 - whole) * LN_2);
        let v = SignedLog {
            sign: sign.signum(),
            frac,
            exp: whole as i64,
        };
        v.normalized()
    }

    fn normalized(self) -> Self {
        if self.sign == 0 || self.frac == 0.0 {
            return SignedLog::ZERO;
        }
        let (frac, e) = math::frexp(self.frac);
        SignedLog {
            sign: self.sign,
            frac,
            exp: self.exp + e as i64,
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of `|value|`; `-inf` for zero.
    pub fn log_mag(&self) -> f64 {
        if self.sign == 0 {
            return f64::NEG_INFINITY;
        }
        math::ln(self.frac) + self.exp as f64 * LN_2
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn abs(&self) -> Self {
        SignedLog {
            sign: self.sign.abs(),
            ..*self
        }
    }

    /// Binary exponent, `|value| ∈ [2^{e−1}, 2^e)`.
    pub fn exponent(&self) -> i64 {
        self.exp
    }

    /// Converts to `f64`, saturating to `±inf` or flushing to zero.
    pub fn to_f64(&self) -> f64 {
        self.to_f64_scaled(0)
    }

    /// `value · 2^{−shift}` as an `f64`.
    pub fn to_f64_scaled(&self, shift: i64) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let e = (self.exp - shift).clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2);
        f64::from(self.sign) * math::ldexp(self.frac, e as i32)
    }

    /// Inverse of [`SignedLog::to_f64_scaled`].
    pub fn from_f64_scaled(v: f64, shift: i64) -> Self {
        let mut out = SignedLog::from_f64(v);
        if out.sign != 0 {
            out.exp += shift;
        }
        out
    }

    /// Compares magnitudes.
    pub fn cmp_abs(&self, other: &SignedLog) -> Ordering {
        match (self.sign == 0, other.sign == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.exp.cmp(&other.exp).then(
                self.frac
                    .partial_cmp(&other.frac)
                    .unwrap_or(Ordering::Equal),
            ),
        }
    }
}

impl From<f64> for SignedLog {
    fn from(v: f64) -> Self {
        SignedLog::from_f64(v)
    }
}

impl Neg for SignedLog {
    type Output = SignedLog;
    fn neg(self) -> SignedLog {
        SignedLog {
            sign: -self.sign,
            ..self
        }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;
    fn mul(self, rhs: SignedLog) -> SignedLog {
        if self.sign == 0 || rhs.sign == 0 {
            return SignedLog::ZERO;
        }
        SignedLog {
            sign: self.sign * rhs.sign,
            frac: self.frac * rhs.frac,
            exp: self.exp + rhs.exp,
        }
        .normalized()
    }
}

impl Add for SignedLog {
    type Output = SignedLog;
    fn add(self, rhs: SignedLog) -> SignedLog {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let shift = self.exp.max(rhs.exp);
        let sum = self.to_f64_scaled(shift) + rhs.to_f64_scaled(shift);
        SignedLog::from_f64_scaled(sum, shift)
    }
}

impl Sub for SignedLog {
    type Output = SignedLog;
    fn sub(self, rhs: SignedLog) -> SignedLog {
        self + (-rhs)
    }
}

impl core::iter::Product for SignedLog {
    fn product<I: Iterator<Item = SignedLog>>(iter: I) -> SignedLog {
        iter.fold(SignedLog::ONE, |acc, v| acc * v)
    }
}

impl core::iter::Sum for SignedLog {
    fn sum<I: Iterator<Item = SignedLog>>(iter: I) -> SignedLog {
        iter.fold(SignedLog::ZERO, |acc, v| acc + v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn zero_is_canonical() {
        assert_eq!(SignedLog::from_f64(0.0), SignedLog::ZERO);
        assert_eq!(SignedLog::from_f64(-0.0), SignedLog::ZERO);
        assert_eq!(SignedLog::from_f64(3.0) * SignedLog::ZERO, SignedLog::ZERO);
        let a = SignedLog::from_f64(2.5);
        assert_eq!(a - a, SignedLog::ZERO);
        assert_eq!(SignedLog::from_parts(0, 12.0), SignedLog::ZERO);
    }

    #[test]
    fn one_is_one() {
        assert_eq!(SignedLog::ONE.to_f64(), 1.0);
        assert_eq!(SignedLog::ONE.log_mag(), 0.0);
    }

    #[test]
    fn huge_products_do_not_overflow() {
        let big = SignedLog::from_f64(1e300);
        let p = big * big * big;
        assert!((p.log_mag() - 900.0 * core::f64::consts::LN_10).abs() < 1e-9);
        assert_eq!(p.to_f64(), f64::INFINITY);
        let q = p * SignedLog::from_f64(1e-300) * SignedLog::from_f64(-1e-300);
        assert!((q.to_f64() + 1e300).abs() < 1e288);
    }

    #[test]
    fn from_parts_matches_log() {
        let v = SignedLog::from_parts(-1, 1000.0);
        assert_eq!(v.sign(), -1);
        assert!((v.log_mag() - 1000.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(SignedLog::from_f64(v).to_f64(), v);
        }

        #[test]
        fn product_equals_log_sum(
            factors in proptest::collection::vec(
                (1e-30f64..1e30, proptest::bool::ANY), 1..40),
            seed in any::<u64>(),
        ) {
            let logs: f64 = factors.iter().map(|(m, _)| libm::log(*m)).sum();
            let negatives = factors.iter().filter(|(_, neg)| *neg).count();
            let values: Vec<SignedLog> = factors
                .iter()
                .map(|(m, neg)| SignedLog::from_f64(if *neg { -m } else { *m }))
                .collect();
            let forward: SignedLog = values.iter().copied().product();

            // deterministic shuffle from the seed
            let mut permuted = values.clone();
            let mut state = seed | 1;
            for i in (1..permuted.len()).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                permuted.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let shuffled: SignedLog = permuted.into_iter().product();

            let expected_sign = if negatives % 2 == 0 { 1 } else { -1 };
            prop_assert_eq!(forward.sign(), expected_sign);
            prop_assert_eq!(shuffled.sign(), expected_sign);
            let tol = 1e-12 * logs.abs().max(1.0);
            prop_assert!((forward.log_mag() - logs).abs() < tol);
            prop_assert!((shuffled.log_mag() - forward.log_mag()).abs() < tol);
        }

        #[test]
        fn addition_matches_f64(a in -1e100f64..1e100, b in -1e100f64..1e100) {
            let s = (SignedLog::from_f64(a) + SignedLog::from_f64(b)).to_f64();
            prop_assert_eq!(s, a + b);
        }
    }
}
