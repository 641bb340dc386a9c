//! Noncentral Stirling numbers of the second kind `S(n, k, phi)`, defined by
//! `(t + phi)^n = sum_k S(n, k, phi) (t)_k`, and the scaled Stirling function
//! `Pi(n, k, phi) = S(n, k, phi) / (C(n, k) phi^(n-k))`.
//!
//! Two backends share one triangular recursion
//! `S(n+1, k, phi) = (k + phi) S(n, k, phi) + S(n, k-1, phi)`:
//! [`ExactReal`] for rational `phi` and [`ScaledFloat`] for everything else.
//! With `phi >= 0` every term in the recursion is nonnegative, so the scaled
//! backend never cancels.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::exact::{DigitBudget, ExactReal};
use crate::scaled::ScaledFloat;

/// Number type the Stirling tables can be built over.
pub trait StirlingScalar:
    Clone + fmt::Debug + PartialEq + Add<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Hook for resource limits; the exact backend checks its digit budget.
    fn check_budget(&self, _budget: DigitBudget) -> Result<()> {
        Ok(())
    }
}

impl StirlingScalar for ExactReal {
    fn zero() -> Self {
        ExactReal::zero()
    }
    fn one() -> Self {
        ExactReal::one()
    }
    fn from_u64(v: u64) -> Self {
        ExactReal::from(v)
    }
    fn is_zero(&self) -> bool {
        ExactReal::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ExactReal::to_f64(self)
    }
    fn check_budget(&self, budget: DigitBudget) -> Result<()> {
        budget.check(self)
    }
}

impl StirlingScalar for ScaledFloat {
    fn zero() -> Self {
        ScaledFloat::ZERO
    }
    fn one() -> Self {
        ScaledFloat::ONE
    }
    fn from_u64(v: u64) -> Self {
        ScaledFloat::from_u64(v)
    }
    fn is_zero(&self) -> bool {
        ScaledFloat::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ScaledFloat::to_f64(self)
    }
}

/// Which arithmetic to evaluate Stirling numbers in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Scaled,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Exact => "exact",
            Backend::Scaled => "scaled",
        })
    }
}

/// A Stirling number from either backend.
#[derive(Debug, Clone, PartialEq)]
pub enum StirlingValue {
    Exact(ExactReal),
    Scaled(ScaledFloat),
}

impl StirlingValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            StirlingValue::Exact(x) => x.to_f64(),
            StirlingValue::Scaled(x) => x.to_f64(),
        }
    }

    pub fn to_scaled(&self) -> ScaledFloat {
        match self {
            StirlingValue::Exact(x) => exact_to_scaled(x),
            StirlingValue::Scaled(x) => *x,
        }
    }
}

impl fmt::Display for StirlingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StirlingValue::Exact(x) => write!(f, "{x}"),
            StirlingValue::Scaled(x) => write!(f, "{x}"),
        }
    }
}

/// Converts a (possibly huge) nonnegative or negative rational to the scaled
/// representation without passing through `f64`.
pub fn exact_to_scaled(x: &ExactReal) -> ScaledFloat {
    if x.is_zero() {
        return ScaledFloat::ZERO;
    }
    // keep 64 significant bits of numerator and denominator
    let shift = |b: &num_bigint::BigInt| -> (f64, i64) {
        let bits = b.bits() as i64;
        let drop = (bits - 64).max(0);
        let top: num_bigint::BigInt = b >> drop as usize;
        (num_traits::ToPrimitive::to_f64(&top).unwrap_or(0.0), drop)
    };
    let (n, en) = shift(x.numer());
    let (d, ed) = shift(x.denom());
    ScaledFloat::from_f64(n) / ScaledFloat::from_f64(d) * ScaledFloat::from_log2((en - ed) as f64)
}

/// Triangular table of `S(n, k, phi)` for `0 <= k <= min(n, k_max)`,
/// `n <= n_max`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct StirlingTable<T> {
    n_max: u64,
    k_max: u64,
    phi: T,
    rows: Vec<Vec<T>>,
}

impl<T: StirlingScalar> StirlingTable<T> {
    /// Builds the table by forward recursion in `n`.
    pub fn build(n_max: u64, k_max: u64, phi: T) -> Self {
        Self::build_with_budget(n_max, k_max, phi, DigitBudget(u64::MAX)).expect("unbounded budget cannot be exceeded")
    }

    pub fn build_with_budget(n_max: u64, k_max: u64, phi: T, budget: DigitBudget) -> Result<Self> {
        let k_max = k_max.min(n_max);
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(n_max as usize + 1);
        rows.push(vec![T::one()]);
        for n in 0..n_max {
            let prev = &rows[n as usize];
            let width = (n + 1).min(k_max) as usize + 1;
            let mut next = Vec::with_capacity(width);
            for k in 0..width {
                let stay =
                    prev.get(k).map(|s| (T::from_u64(k as u64) + phi.clone()) * s.clone()).unwrap_or_else(T::zero);
                let step = if k > 0 { prev.get(k - 1).cloned().unwrap_or_else(T::zero) } else { T::zero() };
                next.push(stay + step);
            }
            if let Some(last) = next.last() {
                last.check_budget(budget)?;
            }
            next[0].check_budget(budget)?;
            rows.push(next);
        }
        Ok(StirlingTable { n_max, k_max, phi, rows })
    }

    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    pub fn phi(&self) -> &T {
        &self.phi
    }

    /// `S(n, k, phi)`; zero for `k > n`. Panics outside the table bounds.
    pub fn get(&self, n: u64, k: u64) -> T {
        assert!(n <= self.n_max, "row {n} outside table (n_max = {})", self.n_max);
        if k > n {
            return T::zero();
        }
        assert!(k <= self.k_max, "column {k} outside table (k_max = {})", self.k_max);
        self.rows[n as usize][k as usize].clone()
    }

    /// Row `n` as stored, `k = 0..=min(n, k_max)`.
    pub fn row(&self, n: u64) -> &[T] {
        &self.rows[n as usize]
    }

    pub fn contains(&self, n: u64, k: u64) -> bool {
        n <= self.n_max && (k > n || k <= self.k_max)
    }
}

fn check_phi(phi: f64) -> Result<()> {
    if phi.is_nan() || phi < 0.0 {
        return Err(Error::NegativeNoncentrality(phi));
    }
    if !phi.is_finite() {
        return Err(crate::error::invalid("noncentrality parameter must be finite"));
    }
    Ok(())
}

/// Scaled-float table for a nonnegative finite `phi`.
pub fn scaled_table(n_max: u64, k_max: u64, phi: f64) -> Result<StirlingTable<ScaledFloat>> {
    check_phi(phi)?;
    Ok(StirlingTable::build(n_max, k_max, ScaledFloat::from_f64(phi)))
}

/// Exact table for a nonnegative rational `phi`, bounded by `budget`.
pub fn exact_table(n_max: u64, k_max: u64, phi: &ExactReal, budget: DigitBudget) -> Result<StirlingTable<ExactReal>> {
    if phi.is_negative() {
        return Err(Error::NegativeNoncentrality(phi.to_f64()));
    }
    StirlingTable::build_with_budget(n_max, k_max, phi.clone(), budget)
}

/// `S(n, k, phi)` in exact arithmetic.
pub fn stirling_noncentral_exact(n: u64, k: u64, phi: &ExactReal, budget: DigitBudget) -> Result<ExactReal> {
    if phi.is_negative() {
        return Err(Error::NegativeNoncentrality(phi.to_f64()));
    }
    if k > n {
        return Ok(ExactReal::zero());
    }
    Ok(exact_table(n, k, phi, budget)?.get(n, k))
}

/// `S(n, k, phi)` in the overflow-safe float backend.
pub fn stirling_noncentral_scaled(n: u64, k: u64, phi: f64) -> Result<ScaledFloat> {
    check_phi(phi)?;
    if k > n {
        return Ok(ScaledFloat::ZERO);
    }
    Ok(scaled_table(n, k, phi)?.get(n, k))
}

/// `S(n, k, phi)` with the chosen backend. In exact mode `phi` is taken as
/// the exact rational value of the double.
pub fn stirling_noncentral(n: u64, k: u64, phi: f64, backend: Backend) -> Result<StirlingValue> {
    check_phi(phi)?;
    match backend {
        Backend::Exact => {
            let phi = ExactReal::from_f64(phi)?;
            stirling_noncentral_exact(n, k, &phi, DigitBudget::from_env()).map(StirlingValue::Exact)
        }
        Backend::Scaled => stirling_noncentral_scaled(n, k, phi).map(StirlingValue::Scaled),
    }
}

/// Classical Stirling numbers of the second kind, `S(n, k) = S(n, k, 0)`.
pub fn stirling_central(n: u64, k: u64, backend: Backend) -> Result<StirlingValue> {
    stirling_noncentral(n, k, 0.0, backend)
}

/// `S(n, k, phi_to)` from a table built at `phi_from` via
/// `S(n, k, phi') = sum_r C(n, r) (phi' - phi)^r S(n-r, k, phi)`.
/// Only upward shifts are accepted so that every summand is nonnegative.
pub fn shift_noncentrality<T>(n: u64, k: u64, phi_to: &T, table: &StirlingTable<T>) -> Result<T>
where
    T: StirlingScalar + PartialOrd + std::ops::Sub<Output = T>,
{
    let phi_from = table.phi().clone();
    if *phi_to < phi_from {
        return Err(Error::DownwardShift { from: phi_from.to_f64(), to: phi_to.to_f64() });
    }
    if k > n {
        return Ok(T::zero());
    }
    let delta = phi_to.clone() - phi_from;
    let mut binom = T::one();
    let mut delta_pow = T::one();
    let mut acc = T::zero();
    for r in 0..=(n - k) {
        if r > 0 {
            binom = binom * T::from_u64(n - r + 1) / T::from_u64(r);
            delta_pow = delta_pow * delta.clone();
        }
        acc = acc + binom.clone() * delta_pow.clone() * table.get(n - r, k);
    }
    Ok(acc)
}

/// Classical Stirling numbers `S(j, k)` for `j = k..=n`, i.e. column `k` of
/// the central table, in the scaled backend.
pub fn central_column(n: u64, k: u64) -> Vec<ScaledFloat> {
    if k > n {
        return Vec::new();
    }
    // S(j, k) for j >= k only needs columns 0..=k; store one column strip per k
    let mut col: Vec<ScaledFloat> = (0..=(n - k)).map(|_| ScaledFloat::ZERO).collect();
    // column 0: S(j, 0) = [j = 0]; build columns c = 0..=k, each indexed by j - c
    let mut prev: Vec<ScaledFloat> =
        (0..=(n - k)).map(|i| if i == 0 { ScaledFloat::ONE } else { ScaledFloat::ZERO }).collect();
    if k == 0 {
        return prev;
    }
    for c in 1..=k {
        // S(c + i, c) = c S(c + i - 1, c) + S(c + i - 1, c - 1)
        let weight = ScaledFloat::from_u64(c);
        for i in 0..=(n - k) as usize {
            let from_left = prev[i];
            col[i] = if i == 0 { from_left } else { weight * col[i - 1] + from_left };
        }
        std::mem::swap(&mut prev, &mut col);
    }
    prev
}

/// `Pi(n, k, phi)` in the scaled backend via the polynomial in `1 / phi`:
/// `sum_i (n-k)_i / (k+i)_i * S(k+i, k) * phi^-i`.
/// `phi = +inf` gives the limit 1; `k > n` gives 0.
pub fn scaled_stirling_pi_scaled(n: u64, k: u64, phi: f64) -> Result<ScaledFloat> {
    if phi.is_nan() || phi <= 0.0 {
        return Err(crate::error::invalid(format!("scaled Stirling function needs phi > 0, got {phi}")));
    }
    if k > n {
        return Ok(ScaledFloat::ZERO);
    }
    if phi.is_infinite() || k == n {
        return Ok(ScaledFloat::ONE);
    }
    let column = central_column(n, k);
    let inv_phi = ScaledFloat::ONE / ScaledFloat::from_f64(phi);
    let mut coeff = ScaledFloat::ONE;
    let mut acc = ScaledFloat::ZERO;
    for (i, s) in column.iter().enumerate() {
        let i = i as u64;
        if i > 0 {
            coeff = coeff * ScaledFloat::from_u64(n - k - i + 1) / ScaledFloat::from_u64(k + i) * inv_phi;
        }
        acc = acc + coeff * *s;
    }
    Ok(acc)
}

/// `Pi(n, k, phi)` as a double (infinite when it exceeds the `f64` range).
pub fn scaled_stirling_pi(n: u64, k: u64, phi: f64) -> Result<f64> {
    scaled_stirling_pi_scaled(n, k, phi).map(|v| v.to_f64())
}

/// Explicit alternating-sum form `S(n, k, phi) = (1/k!) sum_i C(k, i) (-1)^(k-i) (i + phi)^n`,
/// evaluated only in exact arithmetic. Used as an oracle; accepts any rational `phi`,
/// including negative values needed for central differences.
pub mod oracle {
    use crate::exact::{binomial_big, ExactReal};
    use num_bigint::BigInt;

    pub fn explicit_sum(n: u64, k: u64, phi: &ExactReal) -> ExactReal {
        let mut acc = ExactReal::zero();
        for i in 0..=k {
            let term = ExactReal::from_integer(binomial_big(k, i)) * (&ExactReal::from(i) + phi).pow(n as u32);
            acc = if (k - i).is_multiple_of(2) { acc + term } else { acc - term };
        }
        let k_factorial = (1..=k).fold(BigInt::from(1), |f, i| f * BigInt::from(i));
        acc / ExactReal::from_integer(k_factorial)
    }
}

/// Memoizes scaled tables per `phi`, growing a table when a larger one is
/// requested. Safe to share between threads; each table is read-only.
#[derive(Debug, Default)]
pub struct StirlingCache {
    tables: Mutex<HashMap<u64, Arc<StirlingTable<ScaledFloat>>>>,
}

impl StirlingCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table at `phi` covering at least `(n_max, k_max)`.
    pub fn table(&self, n_max: u64, k_max: u64, phi: f64) -> Result<Arc<StirlingTable<ScaledFloat>>> {
        check_phi(phi)?;
        let key = phi.to_bits();
        let mut tables = self.tables.lock().expect("stirling cache poisoned");
        if let Some(t) = tables.get(&key) {
            if t.n_max() >= n_max && t.k_max() >= k_max.min(n_max) {
                return Ok(Arc::clone(t));
            }
        }
        let (n_max, k_max) = match tables.get(&key) {
            Some(t) => (n_max.max(t.n_max()), k_max.max(t.k_max())),
            None => (n_max, k_max),
        };
        let table = Arc::new(scaled_table(n_max, k_max, phi)?);
        tables.insert(key, Arc::clone(&table));
        Ok(table)
    }

    pub fn get(&self, n: u64, k: u64, phi: f64) -> Result<ScaledFloat> {
        Ok(self.table(n, k, phi)?.get(n, k))
    }
}
