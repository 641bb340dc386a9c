//! Arbitrary-precision rationals and the digit budget that bounds them.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// Environment variable overriding [`DigitBudget::default`].
pub const DIGIT_BUDGET_ENV: &str = "OCCKIT_EXACT_DIGIT_BUDGET";

const LOG10_2: f64 = std::f64::consts::LOG10_2;

/// Exact rational number, always kept in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactReal(BigRational);

impl ExactReal {
    pub fn zero() -> Self {
        ExactReal(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactReal(BigRational::one())
    }

    pub fn from_integer(v: impl Into<BigInt>) -> Self {
        ExactReal(BigRational::from_integer(v.into()))
    }

    /// `numer / denom`; panics on a zero denominator.
    pub fn ratio(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        ExactReal(BigRational::new(numer.into(), denom.into()))
    }

    /// Exact value of a finite double (every finite `f64` is a dyadic rational).
    pub fn from_f64(x: f64) -> Result<Self> {
        BigRational::from_float(x).map(ExactReal).ok_or_else(|| invalid(format!("{x} is not a finite number")))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        ExactReal(self.0.abs())
    }

    pub fn pow(&self, exp: u32) -> Self {
        ExactReal(Pow::pow(&self.0, exp))
    }

    /// Nearest double; saturates to infinity beyond `f64::MAX`.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or_else(|| if self.0.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
    }

    /// Approximate count of decimal digits in numerator plus denominator.
    pub fn digits(&self) -> u64 {
        let bits = self.0.numer().bits() + self.0.denom().bits();
        (bits as f64 * LOG10_2).ceil() as u64
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }
}

impl From<BigRational> for ExactReal {
    fn from(r: BigRational) -> Self {
        ExactReal(r)
    }
}

impl From<u64> for ExactReal {
    fn from(v: u64) -> Self {
        ExactReal::from_integer(v)
    }
}

impl From<i64> for ExactReal {
    fn from(v: i64) -> Self {
        ExactReal::from_integer(v)
    }
}

/// Parses `"p/q"`, integers and decimal literals such as `"0.25"` or `"1e-3"`
/// exactly (the decimal is read as written, not via a double).
impl FromStr for ExactReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || invalid(format!("cannot parse {s:?} as a rational number"));
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(invalid("zero denominator"));
            }
            return Ok(ExactReal::ratio(p, q));
        }
        let (mantissa, exp10) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let digits = if digits == "-" || digits == "+" { format!("{digits}0") } else { digits };
        let numer: BigInt = digits.parse().map_err(|_| bad())?;
        let shift = exp10 - frac_part.len() as i32;
        let ten = BigInt::from(10u32);
        Ok(if shift >= 0 {
            ExactReal::from_integer(numer * Pow::pow(&ten, shift as u32))
        } else {
            ExactReal::ratio(numer, Pow::pow(&ten, (-shift) as u32))
        })
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactReal({})", self.0)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: ExactReal) -> ExactReal {
                ExactReal($tr::$method(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a ExactReal> for &'a ExactReal {
            type Output = ExactReal;
            fn $method(self, rhs: &'a ExactReal) -> ExactReal {
                ExactReal($tr::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for ExactReal {
    type Output = ExactReal;
    fn neg(self) -> ExactReal {
        ExactReal(-self.0)
    }
}

/// Upper bound on the size of exact intermediates, in decimal digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DigitBudget(pub u64);

impl Default for DigitBudget {
    fn default() -> Self {
        DigitBudget(1_000_000)
    }
}

impl DigitBudget {
    /// Reads [`DIGIT_BUDGET_ENV`], falling back to the default when unset or
    /// unparsable.
    pub fn from_env() -> Self {
        std::env::var(DIGIT_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(DigitBudget)
            .unwrap_or_default()
    }

    pub fn check(&self, value: &ExactReal) -> Result<()> {
        let needed = value.digits();
        if needed > self.0 {
            Err(Error::DigitBudgetExceeded { needed, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

/// Binomial coefficient as an exact integer.
pub fn binomial_big(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Falling factorial `(m)_k = m (m-1) ... (m-k+1)` as an exact integer.
pub fn falling_factorial_big(m: u64, k: u64) -> BigInt {
    if k > m {
        return BigInt::zero();
    }
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(m - i))
}
