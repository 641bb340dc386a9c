//! Overflow-safe floating point: `sign * mantissa * 2^exponent` with the
//! mantissa kept in `[1, 2)` and a 64-bit exponent.
//!
//! Noncentral Stirling numbers leave the `f64` range around `n = 170` even for
//! `phi = 0`. Their recursions only ever add nonnegative terms, so carrying
//! the exponent separately is enough to evaluate them without overflow and
//! without losing relative accuracy.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

const MANTISSA_MASK: u64 = (1u64 << 52) - 1;
const EXPONENT_BIAS: i64 = 1023;

/// Beyond this exponent gap the smaller addend is below half an ulp.
const ALIGN_LIMIT: i64 = 64;

#[derive(Clone, Copy, PartialEq)]
pub struct ScaledFloat {
    sign: i8,
    mantissa: f64,
    exponent: i64,
}

/// Splits a finite nonzero `x` into `(m, e)` with `|x| = m * 2^e`, `m` in `[1, 2)`.
fn frexp(x: f64) -> (f64, i64) {
    let bits = x.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = frexp(x.abs() * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & MANTISSA_MASK) | ((EXPONENT_BIAS as u64) << 52));
    (m, biased - EXPONENT_BIAS)
}

/// `2^e` for `e` in the normal exponent range.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + EXPONENT_BIAS) as u64) << 52)
}

/// `m * 2^e` with correct handling of overflow and gradual underflow.
fn ldexp(m: f64, e: i64) -> f64 {
    if e > 1023 {
        return if m == 0.0 { 0.0 } else { m * f64::INFINITY };
    }
    if e >= -1022 {
        return m * pow2(e);
    }
    if e < -1100 {
        return 0.0 * m;
    }
    m * pow2(e + 128) * pow2(-128)
}

impl ScaledFloat {
    pub const ZERO: ScaledFloat = ScaledFloat { sign: 0, mantissa: 1.0, exponent: 0 };
    pub const ONE: ScaledFloat = ScaledFloat { sign: 1, mantissa: 1.0, exponent: 0 };

    /// Converts a finite double. Panics on NaN or infinity.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "ScaledFloat::from_f64 needs a finite value, got {x}");
        if x == 0.0 {
            return Self::ZERO;
        }
        let (mantissa, exponent) = frexp(x);
        ScaledFloat { sign: if x < 0.0 { -1 } else { 1 }, mantissa, exponent }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_f64(v as f64)
    }

    /// Builds `sign * m * 2^e` from an arbitrary finite `m`, renormalizing.
    fn with_exponent(m: f64, e: i64) -> Self {
        if m == 0.0 {
            return Self::ZERO;
        }
        let mut out = Self::from_f64(m);
        out.exponent += e;
        out
    }

    /// Value whose natural logarithm is `ln_value` (positive sign).
    pub fn from_ln(ln_value: f64) -> Self {
        Self::from_log2(ln_value / std::f64::consts::LN_2)
    }

    /// Value whose base-2 logarithm is `log2_value` (positive sign).
    pub fn from_log2(log2_value: f64) -> Self {
        if log2_value == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        assert!(log2_value.is_finite(), "log2 value must be finite");
        let e = log2_value.floor();
        Self::with_exponent((log2_value - e).exp2(), e as i64)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn abs(self) -> Self {
        if self.sign == 0 {
            self
        } else {
            ScaledFloat { sign: 1, ..self }
        }
    }

    /// Nearest double; overflows to infinity and underflows to zero.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        f64::from(self.sign) * ldexp(self.mantissa, self.exponent)
    }

    /// `log2 |x|`; negative infinity for zero.
    pub fn log2(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.log2() + self.exponent as f64
        }
    }

    /// `ln |x|`; negative infinity for zero.
    pub fn ln(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
        }
    }

    /// `log10 |x|`; negative infinity for zero.
    pub fn log10(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.mantissa.log10() + self.exponent as f64 * std::f64::consts::LOG10_2
        }
    }

    pub fn powi(self, exp: u64) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`; zero when both are zero.
    pub fn relative_diff(&self, other: &ScaledFloat) -> f64 {
        let diff = (*self - *other).abs();
        let scale = if self.abs() > other.abs() { self.abs() } else { other.abs() };
        if scale.is_zero() {
            0.0
        } else {
            (diff / scale).to_f64()
        }
    }
}

impl Default for ScaledFloat {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for ScaledFloat {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for ScaledFloat {
    type Output = ScaledFloat;
    fn mul(self, rhs: ScaledFloat) -> ScaledFloat {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        let mut out = Self::with_exponent(self.mantissa * rhs.mantissa, self.exponent + rhs.exponent);
        out.sign = self.sign * rhs.sign;
        out
    }
}

impl Div for ScaledFloat {
    type Output = ScaledFloat;
    fn div(self, rhs: ScaledFloat) -> ScaledFloat {
        assert!(rhs.sign != 0, "ScaledFloat division by zero");
        if self.sign == 0 {
            return Self::ZERO;
        }
        let mut out = Self::with_exponent(self.mantissa / rhs.mantissa, self.exponent - rhs.exponent);
        out.sign = self.sign * rhs.sign;
        out
    }
}

impl Add for ScaledFloat {
    type Output = ScaledFloat;
    fn add(self, rhs: ScaledFloat) -> ScaledFloat {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.exponent >= rhs.exponent { (self, rhs) } else { (rhs, self) };
        let gap = big.exponent - small.exponent;
        if gap > ALIGN_LIMIT {
            return big;
        }
        let sum = f64::from(big.sign) * big.mantissa + f64::from(small.sign) * small.mantissa * pow2(-gap);
        Self::with_exponent(sum, big.exponent)
    }
}

impl Neg for ScaledFloat {
    type Output = ScaledFloat;
    fn neg(self) -> ScaledFloat {
        ScaledFloat { sign: -self.sign, ..self }
    }
}

impl Sub for ScaledFloat {
    type Output = ScaledFloat;
    fn sub(self, rhs: ScaledFloat) -> ScaledFloat {
        self + (-rhs)
    }
}

impl PartialOrd for ScaledFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.sign != other.sign {
            return self.sign.partial_cmp(&other.sign);
        }
        if self.sign == 0 {
            return Some(Ordering::Equal);
        }
        let magnitude = self.exponent.cmp(&other.exponent).then(self.mantissa.partial_cmp(&other.mantissa)?);
        Some(if self.sign > 0 { magnitude } else { magnitude.reverse() })
    }
}

impl fmt::Debug for ScaledFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScaledFloat({}{} * 2^{})", if self.sign < 0 { "-" } else { "" }, self.mantissa, self.exponent)
    }
}

/// Prints in decimal scientific notation, which stays meaningful far outside
/// the `f64` range.
impl fmt::Display for ScaledFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign == 0 {
            return write!(f, "0");
        }
        let l10 = self.log10();
        let e10 = l10.floor();
        let digits = 10f64.powf(l10 - e10);
        let sign = if self.sign < 0 { "-" } else { "" };
        match f.precision() {
            Some(p) => write!(f, "{sign}{digits:.p$}e{e10}"),
            None => write!(f, "{sign}{digits:.15}e{e10}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalization() {
        let x = ScaledFloat::from_f64(12.0);
        assert_eq!((x.mantissa(), x.exponent(), x.sign()), (1.5, 3, 1));
        let y = ScaledFloat::from_f64(-0.375);
        assert_eq!((y.mantissa(), y.exponent(), y.sign()), (1.5, -2, -1));
        assert!(ScaledFloat::from_f64(0.0).is_zero());
        let tiny = ScaledFloat::from_f64(f64::MIN_POSITIVE / 8.0);
        assert_eq!(tiny.exponent(), -1025);
        assert_eq!(tiny.to_f64(), f64::MIN_POSITIVE / 8.0);
    }

    #[test]
    fn goes_beyond_f64_range() {
        let big = ScaledFloat::from_f64(1e300);
        let huge = big * big * big;
        assert!(huge.to_f64().is_infinite());
        assert!((huge.log10() - 900.0).abs() < 1e-9);
        let back = huge / big / big;
        assert!((back.to_f64() / 1e300 - 1.0).abs() < 1e-15);
        let small = ScaledFloat::ONE / huge;
        assert_eq!(small.to_f64(), 0.0);
        assert!((small.log10() + 900.0).abs() < 1e-9);
    }

    #[test]
    fn log_round_trip() {
        for &x in &[1.0, 3.5, 1e-200, 7e250, 123456.789] {
            let s = ScaledFloat::from_f64(x);
            let back = ScaledFloat::from_log2(s.log2());
            assert!(back.relative_diff(&s) < 4.0 * f64::EPSILON * s.log2().abs().max(1.0));
            assert!((s.log2() - x.log2()).abs() <= 4.0 * f64::EPSILON * x.log2().abs().max(1.0));
        }
    }

    #[test]
    fn powers_and_display() {
        let two = ScaledFloat::from_f64(2.0);
        let p = two.powi(5000);
        assert_eq!(p.exponent(), 5000);
        assert_eq!(p.mantissa(), 1.0);
        assert_eq!(format!("{:.3}", ScaledFloat::from_f64(1234.4)), "1.234e3");
        assert_eq!(format!("{}", ScaledFloat::ZERO), "0");
    }

    #[test]
    fn ordering() {
        let a = ScaledFloat::from_f64(3.0);
        let b = ScaledFloat::from_f64(5.0);
        assert!(a < b);
        assert!(-b < -a);
        assert!(ScaledFloat::ZERO < a);
        assert!(-a < ScaledFloat::ZERO);
    }

    proptest! {
        #[test]
        fn arithmetic_matches_f64(a in -1e100f64..1e100, b in -1e100f64..1e100) {
            let (sa, sb) = (ScaledFloat::from_f64(a), ScaledFloat::from_f64(b));
            prop_assert_eq!((sa * sb).to_f64(), a * b);
            if b != 0.0 {
                prop_assert_eq!((sa / sb).to_f64(), a / b);
            }
            let sum = (sa + sb).to_f64();
            let tol = 2.0 * f64::EPSILON * a.abs().max(b.abs());
            prop_assert!((sum - (a + b)).abs() <= tol);
        }

        #[test]
        fn same_sign_sums_never_overflow(e1 in -2_000_000_000i64..2_000_000_000, e2 in -2_000_000_000i64..2_000_000_000, m in 1.0f64..2.0) {
            let x = ScaledFloat::from_log2(e1 as f64) * ScaledFloat::from_f64(m);
            let y = ScaledFloat::from_log2(e2 as f64);
            let s = x + y;
            prop_assert!(s >= x && s >= y);
            prop_assert!(s.mantissa() >= 1.0 && s.mantissa() < 2.0);
            let p = x * y;
            prop_assert_eq!(p.exponent(), e1 + e2);
        }
    }
}
