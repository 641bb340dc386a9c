//! Extended occupancy, negative occupancy (coupon collector) and spillage
//! distributions.
//!
//! The default occupancy backend is the forward recursion in `n`
//!
//! ```text
//! Occ(k | n+1) = theta (m-k+1)/m * Occ(k-1 | n) + ((1-theta) + theta k/m) * Occ(k | n)
//! ```
//!
//! whose coefficients all lie in `[0, 1]`, so it never overflows and never
//! cancels. Stirling-number forms are kept as cross-checks.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::chain::StreamSeed;
use crate::error::{invalid, Error, Result};
use crate::exact::falling_factorial_big;
use crate::scaled::ScaledFloat;
use crate::stirling::{self, StirlingTable};

/// Number of bins; `Infinite` selects the binomial / negative binomial limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bins {
    Finite(u64),
    Infinite,
}

impl Bins {
    pub fn finite(self) -> Option<u64> {
        match self {
            Bins::Finite(m) => Some(m),
            Bins::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Bins::Infinite)
    }

    /// `m` as a float, `+inf` for infinitely many bins.
    pub fn as_f64(self) -> f64 {
        match self {
            Bins::Finite(m) => m as f64,
            Bins::Infinite => f64::INFINITY,
        }
    }
}

impl From<u64> for Bins {
    fn from(m: u64) -> Self {
        Bins::Finite(m)
    }
}

impl fmt::Display for Bins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bins::Finite(m) => write!(f, "{m}"),
            Bins::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Bins {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Bins::Infinite),
            other => other
                .parse::<u64>()
                .map(Bins::Finite)
                .map_err(|_| invalid(format!("bin count must be a positive integer or 'inf', got {s:?}"))),
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("theta must lie in (0, 1], got {theta}")))
    }
}

fn check_bins(m: Bins) -> Result<()> {
    if m == Bins::Finite(0) {
        Err(invalid("bin count m must be at least 1"))
    } else {
        Ok(())
    }
}

/// Parameters `(n, m, theta)` of the extended occupancy distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccParams {
    n: u64,
    m: Bins,
    theta: f64,
}

impl OccParams {
    pub fn new(n: u64, m: impl Into<Bins>, theta: f64) -> Result<Self> {
        let m = m.into();
        check_bins(m)?;
        check_theta(theta)?;
        Ok(OccParams { n, m, theta })
    }

    /// `theta = 0`: every ball falls through, so `K_n = 0` surely.
    pub fn degenerate(n: u64, m: impl Into<Bins>) -> Result<Self> {
        let m = m.into();
        check_bins(m)?;
        Ok(OccParams { n, m, theta: 0.0 })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn m(&self) -> Bins {
        self.m
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `phi = m (1 - theta) / theta`, the noncentrality of the Stirling form.
    pub fn phi(&self) -> f64 {
        scale_parameter(self.m, self.theta)
    }

    /// Largest reachable occupancy `min(n, m)`.
    pub fn k_max(&self) -> u64 {
        match self.m {
            Bins::Finite(m) => self.n.min(m),
            Bins::Infinite => self.n,
        }
    }
}

/// `phi = m (1 - theta) / theta`, with `m = inf, theta = 1` read as 0.
pub fn scale_parameter(m: Bins, theta: f64) -> f64 {
    match m {
        Bins::Finite(m) => m as f64 * (1.0 - theta) / theta,
        Bins::Infinite if theta == 1.0 => 0.0,
        Bins::Infinite => f64::INFINITY,
    }
}

/// Parameters `(m, k, theta)` of the negative occupancy distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegOccParams {
    m: Bins,
    k: u64,
    theta: f64,
}

impl NegOccParams {
    pub fn new(m: impl Into<Bins>, k: u64, theta: f64) -> Result<Self> {
        let m = m.into();
        check_bins(m)?;
        check_theta(theta)?;
        if k == 0 {
            return Err(invalid("occupancy parameter k must be at least 1"));
        }
        if let Bins::Finite(m) = m {
            if k > m {
                return Err(invalid(format!("occupancy parameter k = {k} exceeds bin count m = {m}")));
            }
        }
        Ok(NegOccParams { m, k, theta })
    }

    pub fn m(&self) -> Bins {
        self.m
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Parameters `(n, k, phi)` of the spillage distribution; `phi` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpillageParams {
    n: u64,
    k: u64,
    phi: f64,
}

impl SpillageParams {
    pub fn new(n: u64, k: u64, phi: f64) -> Result<Self> {
        if k > n {
            return Err(invalid(format!("occupancy parameter k = {k} exceeds n = {n}")));
        }
        if phi.is_nan() || phi < 0.0 {
            return Err(Error::NegativeNoncentrality(phi));
        }
        Ok(SpillageParams { n, k, phi })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// How a [`Pmf`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Recursion,
    ExactStirling,
    ScaledStirling,
    MatrixPower,
    Spectral,
    Binomial,
    NegativeBinomial,
    Poisson,
    PointMass,
    Empirical,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Recursion => "recursion",
            Method::ExactStirling => "exact-stirling",
            Method::ScaledStirling => "scaled-stirling",
            Method::MatrixPower => "matrix-power",
            Method::Spectral => "spectral",
            Method::Binomial => "binomial",
            Method::NegativeBinomial => "negative-binomial",
            Method::Poisson => "poisson",
            Method::PointMass => "point-mass",
            Method::Empirical => "empirical",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Provenance attached to every [`Pmf`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmfMeta {
    pub method: Method,
    /// Bound on the absolute error of each probability.
    pub error_bound: f64,
    /// Probability beyond the stored support (nonzero only for truncated
    /// infinite supports), computed as one minus the stored total.
    pub tail_mass: f64,
}

impl PmfMeta {
    pub fn new(method: Method, error_bound: f64) -> Self {
        PmfMeta { method, error_bound, tail_mass: 0.0 }
    }
}

/// Probability mass function on the contiguous support
/// `support_min ..= support_min + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    support_min: u64,
    probabilities: Vec<f64>,
    meta: PmfMeta,
}

impl Pmf {
    /// Leading and trailing exact zeros are trimmed.
    pub fn new(support_min: u64, probabilities: Vec<f64>, meta: PmfMeta) -> Self {
        let first = probabilities.iter().position(|&p| p != 0.0);
        let (support_min, probabilities) = match first {
            None => (support_min, Vec::new()),
            Some(first) => {
                let last = probabilities.iter().rposition(|&p| p != 0.0).unwrap_or(first);
                (support_min + first as u64, probabilities[first..=last].to_vec())
            }
        };
        Pmf { support_min, probabilities, meta }
    }

    /// Untrimmed constructor, for truncated infinite supports whose trailing
    /// entries are meaningful even when they underflow.
    pub fn from_raw(support_min: u64, probabilities: Vec<f64>, meta: PmfMeta) -> Self {
        Pmf { support_min, probabilities, meta }
    }

    pub fn point_mass(at: u64) -> Self {
        Pmf::new(at, vec![1.0], PmfMeta::new(Method::PointMass, 0.0))
    }

    pub fn support_min(&self) -> u64 {
        self.support_min
    }

    /// Largest stored support point (equal to `support_min` when empty).
    pub fn support_max(&self) -> u64 {
        self.support_min + (self.probabilities.len() as u64).saturating_sub(1)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn meta(&self) -> &PmfMeta {
        &self.meta
    }

    pub fn with_meta(mut self, meta: PmfMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// `P(X = x)`; zero off the stored support.
    pub fn prob(&self, x: u64) -> f64 {
        x.checked_sub(self.support_min).and_then(|i| self.probabilities.get(i as usize)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probabilities.iter().enumerate().map(move |(i, &p)| (self.support_min + i as u64, p))
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// `P(X <= x)` over the stored support.
    pub fn cdf(&self, x: u64) -> f64 {
        if x < self.support_min {
            return 0.0;
        }
        let end = ((x - self.support_min) as usize + 1).min(self.probabilities.len());
        self.probabilities[..end].iter().sum()
    }

    /// `P(X >= x)` over the stored support.
    pub fn sf(&self, x: u64) -> f64 {
        let start = x.saturating_sub(self.support_min) as usize;
        self.probabilities.get(start..).map_or(0.0, |s| s.iter().sum())
    }

    /// Cumulative sums, index-aligned with [`Pmf::probabilities`].
    pub fn cumulative(&self) -> Vec<f64> {
        self.probabilities
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }

    /// Mean, variance, skewness and kurtosis summed over the stored support.
    pub fn moments(&self) -> MomentSet {
        let mean = self.mean();
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for (x, p) in self.iter() {
            let d = x as f64 - mean;
            let d2 = d * d;
            m2 += p * d2;
            m3 += p * d2 * d;
            m4 += p * d2 * d2;
        }
        MomentSet::from_central(mean, m2, m3, m4, Vec::new())
    }

    /// The same distribution moved up by `offset`.
    pub fn shifted(&self, offset: u64) -> Pmf {
        Pmf { support_min: self.support_min + offset, ..self.clone() }
    }

    /// Total variation distance, `1/2 sum |p - q|` over the union of supports.
    pub fn tv_distance(&self, other: &Pmf) -> f64 {
        0.5 * self.abs_differences(other).sum::<f64>()
    }

    /// `max |p - q|` over the union of supports.
    pub fn sup_distance(&self, other: &Pmf) -> f64 {
        self.abs_differences(other).fold(0.0, f64::max)
    }

    fn abs_differences<'a>(&'a self, other: &'a Pmf) -> impl Iterator<Item = f64> + 'a {
        let lo = self.support_min.min(other.support_min);
        let hi = self.support_max().max(other.support_max());
        (lo..=hi).map(move |x| (self.prob(x) - other.prob(x)).abs())
    }

    /// Draws `count` values by inverse-CDF lookup.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<u64> {
        if self.probabilities.is_empty() {
            return Vec::new();
        }
        let cumulative = self.cumulative();
        let total = *cumulative.last().unwrap_or(&1.0);
        (0..count)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let i = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                self.support_min + i as u64
            })
            .collect()
    }

    /// Empirical pmf of integer observations.
    pub fn empirical(samples: &[u64]) -> Pmf {
        let (Some(&lo), Some(&hi)) = (samples.iter().min(), samples.iter().max()) else {
            return Pmf::new(0, Vec::new(), PmfMeta::new(Method::Empirical, 0.0));
        };
        let mut counts = vec![0u64; (hi - lo) as usize + 1];
        for &x in samples {
            counts[(x - lo) as usize] += 1;
        }
        let n = samples.len() as f64;
        Pmf::new(lo, counts.into_iter().map(|c| c as f64 / n).collect(), PmfMeta::new(Method::Empirical, 0.0))
    }
}

/// Mean, variance, skewness and kurtosis (not excess kurtosis). Skewness
/// and kurtosis are NaN when the variance is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    /// `E_r = (1 - theta r / m)^n` for `r = 1..=4` when computed in closed form.
    pub e_terms: Vec<f64>,
}

impl MomentSet {
    fn from_central(mean: f64, m2: f64, m3: f64, m4: f64, e_terms: Vec<f64>) -> Self {
        let variance = m2.max(0.0);
        let (skewness, kurtosis) =
            if variance > 0.0 { (m3 / variance.powf(1.5), m4 / (variance * variance)) } else { (f64::NAN, f64::NAN) };
        MomentSet { mean, variance, skewness, kurtosis, e_terms }
    }
}

/// `Bin(k | n, p)` over `k = 0..=n`, built outward from the mode by ratios
/// and normalised, so no factor ever overflows.
pub fn binomial_pmf(n: u64, p: f64) -> Pmf {
    if p <= 0.0 {
        return Pmf::point_mass(0);
    }
    if p >= 1.0 {
        return Pmf::point_mass(n);
    }
    let q = 1.0 - p;
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let mut w = vec![0.0; n as usize + 1];
    w[mode] = 1.0;
    for k in (mode + 1)..=n as usize {
        w[k] = w[k - 1] * ((n as usize - k + 1) as f64 / k as f64) * (p / q);
    }
    for k in (0..mode).rev() {
        w[k] = w[k + 1] * ((k + 1) as f64 / (n as usize - k) as f64) * (q / p);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Pmf::new(0, w, PmfMeta::new(Method::Binomial, 4.0 * (n as f64 + 1.0) * f64::EPSILON))
}

/// `Pois(r | lambda)` truncated once the remaining tail is at most `tail`.
pub fn poisson_pmf(lambda: f64, tail: f64) -> Pmf {
    if lambda <= 0.0 {
        return Pmf::point_mass(0);
    }
    let mut term = ScaledFloat::from_ln(-lambda);
    let mut probs = Vec::new();
    let mut acc = 0.0;
    let mut r = 0u64;
    loop {
        let p = term.to_f64();
        probs.push(p);
        acc += p;
        r += 1;
        // remaining tail after P(r-1) is below a geometric series with ratio lambda / (r + 1)
        let ratio = lambda / (r as f64 + 1.0);
        if ratio < 1.0 && p * (lambda / r as f64) / (1.0 - ratio) <= tail {
            break;
        }
        term = term * ScaledFloat::from_f64(lambda / r as f64);
    }
    let meta = PmfMeta {
        method: Method::Poisson,
        error_bound: 4.0 * r as f64 * f64::EPSILON,
        tail_mass: (1.0 - acc).max(0.0),
    };
    Pmf::from_raw(0, probs, meta)
}

/// `NegBin(t | k, p) = C(k+t-1, t) p^t (1-p)^k` for `t = 0..=t_max`.
pub fn negbin_pmf(k: u64, p: f64, t_max: u64) -> Pmf {
    let mut term = ScaledFloat::from_f64(1.0 - p).powi(k);
    let mut probs = Vec::with_capacity(t_max as usize + 1);
    for t in 0..=t_max {
        if t > 0 {
            term = term * ScaledFloat::from_f64((k + t - 1) as f64 / t as f64 * p);
        }
        probs.push(term.to_f64());
    }
    let total: f64 = probs.iter().sum();
    let meta = PmfMeta {
        method: Method::NegativeBinomial,
        error_bound: 4.0 * (t_max + 1) as f64 * f64::EPSILON,
        tail_mass: (1.0 - total).max(0.0),
    };
    Pmf::from_raw(0, probs, meta)
}

/// One step of the occupancy recursion on a (possibly truncated) vector of
/// `Occ(0..len | n)`, producing `Occ(0..len | n+1)` in place.
fn occ_step(v: &mut [f64], m: f64, theta: f64) {
    let rate = theta / m;
    for k in (0..v.len()).rev() {
        let stay = 1.0 - rate * (m - k as f64);
        let enter = if k > 0 { rate * (m - k as f64 + 1.0) * v[k - 1] } else { 0.0 };
        let next = stay * v[k] + enter;
        // subnormal operands slow the loop by two orders of magnitude
        v[k] = if next < f64::MIN_POSITIVE { 0.0 } else { next.min(1.0) };
    }
}

/// Occupancy pmf over `k = 0..=min(n, m)`.
pub fn occ_pmf(p: &OccParams) -> Pmf {
    if p.theta == 0.0 {
        return Pmf::point_mass(0);
    }
    let m = match p.m {
        Bins::Infinite => return binomial_pmf(p.n, p.theta),
        Bins::Finite(m) => m,
    };
    let width = p.k_max() as usize + 1;
    let mut v = vec![0.0; width];
    v[0] = 1.0;
    for n in 0..p.n {
        let live = (n as usize + 2).min(width);
        occ_step(&mut v[..live], m as f64, p.theta);
    }
    Pmf::new(0, v, PmfMeta::new(Method::Recursion, 3.0 * (p.n as f64 + 1.0) * f64::EPSILON))
}

/// Occupancy pmf from `theta^n / m^n (m)_k S(n, k, phi)` in the scaled
/// Stirling backend.
pub fn occ_pmf_scaled_stirling(p: &OccParams) -> Result<Pmf> {
    let m = match p.m {
        Bins::Infinite => return Ok(occ_pmf(p)),
        Bins::Finite(m) => m,
    };
    if p.theta == 0.0 {
        return Ok(Pmf::point_mass(0));
    }
    let table = stirling::scaled_table(p.n, p.k_max(), p.phi())?;
    let probs = (0..=p.k_max()).map(|k| occ_term_scaled(&table, p.n, k, m, p.theta).to_f64()).collect();
    Ok(Pmf::new(0, probs, PmfMeta::new(Method::ScaledStirling, 8.0 * (p.n as f64 + 1.0) * f64::EPSILON)))
}

fn occ_term_scaled(table: &StirlingTable<ScaledFloat>, n: u64, k: u64, m: u64, theta: f64) -> ScaledFloat {
    if k > n || k > m {
        return ScaledFloat::ZERO;
    }
    let falling = (0..k).fold(ScaledFloat::ONE, |acc, i| acc * ScaledFloat::from_u64(m - i));
    let scale = ScaledFloat::from_f64(theta / m as f64).powi(n);
    scale * falling * table.get(n, k)
}

/// `P(K_{n'+n} = k | K_{n'} = t)` over `k = t..`: the occupancy pmf with
/// `m - t` bins and probability `theta (1 - t/m)`, shifted by `t`.
pub fn occ_conditional_pmf(n: u64, m: impl Into<Bins>, theta: f64, t: u64) -> Result<Pmf> {
    let m = m.into();
    check_bins(m)?;
    check_theta(theta)?;
    match m {
        Bins::Infinite => Ok(binomial_pmf(n, theta).shifted(t)),
        Bins::Finite(m) => {
            if t > m {
                return Err(invalid(format!("current occupancy t = {t} exceeds bin count m = {m}")));
            }
            if t == m {
                return Ok(Pmf::point_mass(m));
            }
            let reduced = theta * (m - t) as f64 / m as f64;
            Ok(occ_pmf(&OccParams::new(n, m - t, reduced)?).shifted(t))
        }
    }
}

/// `P(K_n <= k)`.
pub fn occ_cdf(p: &OccParams, k: u64) -> f64 {
    occ_pmf(p).cdf(k)
}

/// `E_r = (1 - theta r / m)^n`.
pub fn e_term(n: u64, m: u64, theta: f64, r: u64) -> f64 {
    let base = 1.0 - theta * r as f64 / m as f64;
    if n == 0 {
        1.0
    } else if base <= 0.0 {
        0.0
    } else {
        (n as f64 * (-theta * r as f64 / m as f64).ln_1p()).exp()
    }
}

/// `E((m - K_n)_r) = (m)_r E_r`.
pub fn occ_factorial_moment(p: &OccParams, r: u64) -> Result<f64> {
    let m = p.m.finite().ok_or_else(|| invalid("factorial moments of m - K need finite m"))?;
    if r > m {
        return Err(invalid(format!("factorial moment order r = {r} exceeds m = {m}")));
    }
    let falling = num_traits::ToPrimitive::to_f64(&falling_factorial_big(m, r)).unwrap_or(f64::INFINITY);
    Ok(falling * e_term(p.n, m, p.theta, r))
}

/// Closed-form mean, variance, skewness and kurtosis from `E_1..E_4`.
pub fn occ_moments(p: &OccParams) -> MomentSet {
    let (n, theta) = (p.n, p.theta);
    let m = match p.m {
        Bins::Infinite => return binomial_moments(n as f64, theta),
        Bins::Finite(m) => m,
    };
    if theta == 0.0 {
        return MomentSet::from_central(0.0, 0.0, 0.0, 0.0, vec![1.0; 4]);
    }
    let e: Vec<f64> = (1..=4).map(|r| e_term(n, m, theta, r)).collect();
    // K_n is constant here; the closed form would only return rounding noise
    if n == 0 || (theta == 1.0 && (n == 1 || m == 1)) {
        return MomentSet::from_central(n.min(m) as f64, 0.0, 0.0, 0.0, e);
    }
    let (e1, e2, e3, e4) = (e[0], e[1], e[2], e[3]);
    let mf = m as f64;
    let mean = mf * (1.0 - e1);
    // grouped to keep the near-cancelling pair E_2 - E_1^2 together
    let bracket = (e1 - e2) + mf * (e2 - e1 * e1);
    let variance = (mf * bracket).max(0.0);
    if variance <= 0.0 {
        return MomentSet { mean, variance: 0.0, skewness: f64::NAN, kurtosis: f64::NAN, e_terms: e };
    }
    let skew_num = e1 - 3.0 * e2
        + 2.0 * e3
        + mf * (3.0 * (e2 - e1 * e1) + 2.0 * mf * (e1 * e1 * e1 - e1 * e2) + (mf - 3.0) * (e3 - e1 * e2));
    let skewness = -skew_num / (mf.sqrt() * bracket.powf(1.5));
    let kurt_num = e1 - 4.0 * mf * e1 * e1 + 6.0 * mf * mf * e1.powi(3) - 3.0 * mf.powi(3) * e1.powi(4)
        + 7.0 * (mf - 1.0) * e2
        + 6.0 * (mf - 1.0) * (mf - 2.0) * e3
        + (mf - 1.0) * (mf - 2.0) * (mf - 3.0) * e4
        - 12.0 * mf * (mf - 1.0) * e1 * e2
        + 6.0 * mf * mf * (mf - 1.0) * e1 * e1 * e2
        - 4.0 * mf * (mf - 1.0) * (mf - 2.0) * e1 * e3;
    let kurtosis = kurt_num / (mf * bracket * bracket);
    MomentSet { mean, variance, skewness, kurtosis, e_terms: e }
}

fn binomial_moments(n: f64, theta: f64) -> MomentSet {
    let v = n * theta * (1.0 - theta);
    let (skewness, kurtosis) = if v > 0.0 {
        ((1.0 - 2.0 * theta) / v.sqrt(), 3.0 + (1.0 - 6.0 * theta * (1.0 - theta)) / v)
    } else {
        (f64::NAN, f64::NAN)
    };
    MomentSet { mean: n * theta, variance: v, skewness, kurtosis, e_terms: vec![1.0; 4] }
}

/// Which limit the asymptotic moment forms describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `n -> inf`, using `E_r ~ exp(-theta r n / m)`.
    LargeN,
    /// `m -> inf`, where the moments approach the binomial ones.
    LargeM,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large_n" | "large-n" => Ok(Regime::LargeN),
            "large_m" | "large-m" => Ok(Regime::LargeM),
            _ => Err(invalid(format!("unknown regime {s:?}, expected large_n or large_m"))),
        }
    }
}

/// Asymptotic mean, variance, skewness and kurtosis.
///
/// In the large-`m` regime the mean is `n theta`, the limit of
/// `m (1 - (1 - theta/m)^n)`.
pub fn occ_moments_asymptotic(p: &OccParams, regime: Regime) -> MomentSet {
    let (n, theta) = (p.n as f64, p.theta);
    match (regime, p.m) {
        (Regime::LargeM, _) | (Regime::LargeN, Bins::Infinite) => binomial_moments(n, theta),
        (Regime::LargeN, Bins::Finite(m)) => {
            let mf = m as f64;
            let x = (-theta * n / mf).exp();
            let xv = x * (1.0 - x);
            let (skewness, kurtosis) = if xv > 0.0 {
                (-(1.0 - 2.0 * x) / (mf.sqrt() * xv.sqrt()), 3.0 + (1.0 - 6.0 * xv) / (mf * xv))
            } else {
                (f64::NAN, f64::NAN)
            };
            MomentSet {
                mean: mf * (1.0 - x),
                variance: mf * xv,
                skewness,
                kurtosis,
                e_terms: (1..=4).map(|r| x.powi(r)).collect(),
            }
        }
    }
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Continuity-corrected normal approximation to `P(K_n = k)` with matched
/// mean and variance.
pub fn occ_normal_approx(p: &OccParams, k: u64) -> Result<f64> {
    let moments = occ_moments(p);
    if moments.variance <= 0.0 {
        return Err(Error::Degenerate("normal approximation needs positive variance".into()));
    }
    let sd = moments.variance.sqrt();
    let z = |x: f64| (x - moments.mean) / sd;
    Ok(standard_normal_cdf(z(k as f64 + 0.5)) - standard_normal_cdf(z(k as f64 - 0.5)))
}

/// Streams `NegOcc(t | m, k, theta)` for `t = 0, 1, 2, ...` from one running
/// occupancy vector truncated to `Occ(0..k | n)`.
struct NegOccStream {
    occ: Vec<f64>,
    m: f64,
    theta: f64,
    factor: f64,
}

impl NegOccStream {
    fn new(m: u64, k: u64, theta: f64) -> Self {
        let mut occ = vec![0.0; k as usize];
        occ[0] = 1.0;
        for n in 0..k.saturating_sub(1) {
            let live = (n as usize + 2).min(occ.len());
            occ_step(&mut occ[..live], m as f64, theta);
        }
        NegOccStream { occ, m: m as f64, theta, factor: theta * (m - k + 1) as f64 / m as f64 }
    }
}

impl Iterator for NegOccStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let value = self.factor * self.occ[self.occ.len() - 1];
        occ_step(&mut self.occ, self.m, self.theta);
        Some(value)
    }
}

fn negocc_values(p: &NegOccParams) -> Box<dyn Iterator<Item = f64>> {
    match p.m {
        Bins::Finite(m) => Box::new(NegOccStream::new(m, p.k, p.theta)),
        Bins::Infinite => {
            let (k, q) = (p.k, 1.0 - p.theta);
            let mut term = ScaledFloat::from_f64(p.theta).powi(k);
            Box::new((0u64..).map(move |t| {
                if t > 0 {
                    term = term * ScaledFloat::from_f64((k + t - 1) as f64 / t as f64 * q);
                }
                term.to_f64()
            }))
        }
    }
}

fn negocc_meta(p: &NegOccParams, len: usize, total: f64) -> PmfMeta {
    PmfMeta {
        method: if p.m.is_infinite() { Method::NegativeBinomial } else { Method::Recursion },
        error_bound: 3.0 * (p.k as f64 + len as f64) * f64::EPSILON,
        tail_mass: (1.0 - total).max(0.0),
    }
}

/// `NegOcc(t | m, k, theta)` for `t = 0..=t_max`; the mass beyond `t_max` is
/// reported in the metadata as `1 - sum`.
pub fn negocc_pmf(p: &NegOccParams, t_max: u64) -> Pmf {
    let probs: Vec<f64> = negocc_values(p).take(t_max as usize + 1).collect();
    let total = probs.iter().sum();
    let meta = negocc_meta(p, probs.len(), total);
    Pmf::from_raw(0, probs, meta)
}

/// Extends the support until the tail mass is at most `tail` (or `t_max` is
/// reached).
pub fn negocc_pmf_until(p: &NegOccParams, tail: f64, t_max: u64) -> Pmf {
    let mut probs = Vec::new();
    let mut total = 0.0;
    for v in negocc_values(p).take(t_max as usize + 1) {
        probs.push(v);
        total += v;
        if 1.0 - total <= tail {
            break;
        }
    }
    let meta = negocc_meta(p, probs.len(), total);
    Pmf::from_raw(0, probs, meta)
}

/// Negative occupancy pmf via the scaled Stirling form of the occupancy term.
pub fn negocc_pmf_stirling(p: &NegOccParams, t_max: u64) -> Result<Pmf> {
    let m = match p.m {
        Bins::Infinite => return Ok(negocc_pmf(p, t_max)),
        Bins::Finite(m) => m,
    };
    let k = p.k;
    let table = stirling::scaled_table(k - 1 + t_max, k - 1, scale_parameter(p.m, p.theta))?;
    let factor = ScaledFloat::from_f64(p.theta * (m - k + 1) as f64 / m as f64);
    let probs =
        (0..=t_max).map(|t| (factor * occ_term_scaled(&table, k - 1 + t, k - 1, m, p.theta)).to_f64()).collect();
    Ok(Pmf::from_raw(0, probs, PmfMeta::new(Method::ScaledStirling, 8.0 * (k + t_max) as f64 * f64::EPSILON)))
}

/// `P(T_k <= t) = P(K_{k+t} >= k)`.
pub fn negocc_cdf(p: &NegOccParams, t: u64) -> f64 {
    let occ = occ_pmf(&OccParams { n: p.k + t, m: p.m, theta: p.theta });
    occ.sf(p.k)
}

/// Excess balls needed to occupy all `m` bins.
pub fn coupon_collector_pmf(m: impl Into<Bins>, theta: f64, t_max: u64) -> Result<Pmf> {
    match m.into() {
        Bins::Infinite => Err(invalid("the coupon-collector distribution needs finite m")),
        Bins::Finite(m) => Ok(negocc_pmf(&NegOccParams::new(m, m, theta)?, t_max)),
    }
}

/// Total balls needed to occupy all `m` bins, i.e. the coupon-collector pmf
/// shifted by `m`.
pub fn coupon_collector_total_pmf(m: u64, theta: f64, t_max: u64) -> Result<Pmf> {
    Ok(coupon_collector_pmf(m, theta, t_max)?.shifted(m))
}

/// `Spillage(r | n, k, phi) = C(n, k+r) phi^(n-k-r) S(k+r, k) / S(n, k, phi)`.
///
/// Each weight is formed in scaled floats and divided by the sum of weights;
/// the reported error bound is the relative gap between that sum and
/// `S(n, k, phi)` from the noncentral table. `phi = 0` puts all mass on
/// `r = n - k` and `phi = inf` on `r = 0`.
pub fn spillage_pmf(p: &SpillageParams) -> Result<Pmf> {
    let (n, k, phi) = (p.n, p.k, p.phi);
    if phi.is_infinite() {
        return Ok(Pmf::point_mass(0));
    }
    if phi == 0.0 {
        return Ok(Pmf::point_mass(n - k));
    }
    let column = stirling::central_column(n, k);
    let phi_s = ScaledFloat::from_f64(phi);
    let mut binom = ScaledFloat::ONE; // C(n, k + r), built from C(n, n) downward
    let mut weights = vec![ScaledFloat::ZERO; column.len()];
    let mut phi_pow = ScaledFloat::ONE;
    for r in (0..column.len()).rev() {
        let s = k + r as u64;
        if s < n {
            binom = binom * ScaledFloat::from_u64(s + 1) / ScaledFloat::from_u64(n - s);
            phi_pow = phi_pow * phi_s;
        }
        weights[r] = binom * phi_pow * column[r];
    }
    let total = weights.iter().fold(ScaledFloat::ZERO, |a, &w| a + w);
    let direct = stirling::stirling_noncentral_scaled(n, k, phi)?;
    let gap = total.relative_diff(&direct);
    let probs = weights.iter().map(|&w| (w / total).to_f64()).collect();
    let bound = gap.max(8.0 * (n as f64 + 1.0) * f64::EPSILON);
    Ok(Pmf::new(0, probs, PmfMeta::new(Method::ScaledStirling, bound)))
}

/// `P(n_eff = s | K_n = k)` over `s = k..=n`: spillage with
/// `phi = m (1 - theta) / theta`, shifted by `k`.
pub fn effective_balls_given_occupancy(n: u64, m: impl Into<Bins>, theta: f64, k: u64) -> Result<Pmf> {
    let params = OccParams::new(n, m, theta)?;
    if k > params.k_max() {
        return Err(invalid(format!("occupancy k = {k} is impossible with n = {n}, m = {}", params.m)));
    }
    if k == 0 && n > 0 && theta == 1.0 {
        return Err(Error::Degenerate("K_n = 0 has probability zero when theta = 1".into()));
    }
    Ok(spillage_pmf(&SpillageParams::new(n, k, params.phi())?)?.shifted(k))
}

/// `count` draws from the occupancy distribution.
pub fn occ_sample(p: &OccParams, count: usize, seed: StreamSeed) -> Vec<u64> {
    occ_pmf(p).sample(&mut seed.rng(), count)
}

/// `count` draws of the excess hitting time. The support is doubled until it
/// covers the largest uniform drawn, so no draw is clipped by truncation.
pub fn negocc_sample(p: &NegOccParams, count: usize, seed: StreamSeed) -> Vec<u64> {
    let mut rng = seed.rng();
    let uniforms: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
    let u_max = uniforms.iter().copied().fold(0.0, f64::max);
    let mut t_max = 64u64;
    let pmf = loop {
        let pmf = negocc_pmf(p, t_max);
        if pmf.total() > u_max || pmf.meta().tail_mass <= f64::EPSILON || t_max >= 1 << 24 {
            break pmf;
        }
        t_max *= 2;
    };
    let cumulative = pmf.cumulative();
    uniforms.into_iter().map(|u| cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1) as u64).collect()
}

/// `count` draws of the spillage.
pub fn spillage_sample(p: &SpillageParams, count: usize, seed: StreamSeed) -> Result<Vec<u64>> {
    Ok(spillage_pmf(p)?.sample(&mut seed.rng(), count))
}

/// Exact rational versions of the distributions, built from the Stirling
/// closed forms. These are the oracles the float paths are checked against.
pub mod exact {
    use super::{Method, Pmf, PmfMeta};
    use crate::error::{invalid, Result};
    use crate::exact::{binomial_big, falling_factorial_big, DigitBudget, ExactReal};
    use crate::stirling;

    /// Rational probabilities on `support_min..`.
    #[derive(Debug, Clone, PartialEq)]
    pub struct ExactPmf {
        pub support_min: u64,
        pub probabilities: Vec<ExactReal>,
    }

    impl ExactPmf {
        pub fn prob(&self, x: u64) -> ExactReal {
            x.checked_sub(self.support_min)
                .and_then(|i| self.probabilities.get(i as usize))
                .cloned()
                .unwrap_or_else(ExactReal::zero)
        }

        pub fn total(&self) -> ExactReal {
            self.probabilities.iter().fold(ExactReal::zero(), |a, p| a + p.clone())
        }

        pub fn to_pmf(&self) -> Pmf {
            let probs = self.probabilities.iter().map(ExactReal::to_f64).collect();
            Pmf::new(self.support_min, probs, PmfMeta::new(Method::ExactStirling, 0.0))
        }
    }

    fn check_theta(theta: &ExactReal) -> Result<()> {
        if theta.is_negative() || theta.is_zero() || *theta > ExactReal::one() {
            return Err(invalid(format!("theta must lie in (0, 1], got {theta}")));
        }
        Ok(())
    }

    /// `Occ(k | n, m, theta)` for `k = 0..=min(n, m)`.
    pub fn occ_pmf(n: u64, m: u64, theta: &ExactReal, budget: DigitBudget) -> Result<ExactPmf> {
        check_theta(theta)?;
        if m == 0 {
            return Err(invalid("bin count m must be at least 1"));
        }
        let mm = ExactReal::from(m);
        let phi = &(&mm * &(&ExactReal::one() - theta)) / theta;
        let k_max = n.min(m);
        let table = stirling::exact_table(n, k_max, &phi, budget)?;
        let scale = (theta / &mm).pow(n as u32);
        let probabilities = (0..=k_max)
            .map(|k| &(&scale * &ExactReal::from_integer(falling_factorial_big(m, k))) * &table.get(n, k))
            .collect();
        Ok(ExactPmf { support_min: 0, probabilities })
    }

    /// `Bin(k | n, p)`.
    pub fn binomial_pmf(n: u64, p: &ExactReal) -> ExactPmf {
        let q = &ExactReal::one() - p;
        let probabilities = (0..=n)
            .map(|k| ExactReal::from_integer(binomial_big(n, k)) * p.pow(k as u32) * q.pow((n - k) as u32))
            .collect();
        ExactPmf { support_min: 0, probabilities }
    }

    /// `NegBin(t | k, p) = C(k+t-1, t) p^t (1-p)^k` for `t = 0..=t_max`.
    pub fn negbin_pmf(k: u64, p: &ExactReal, t_max: u64) -> ExactPmf {
        let q = &ExactReal::one() - p;
        let probabilities = (0..=t_max)
            .map(|t| ExactReal::from_integer(binomial_big(k + t - 1, t)) * p.pow(t as u32) * q.pow(k as u32))
            .collect();
        ExactPmf { support_min: 0, probabilities }
    }

    /// `NegOcc(t | m, k, theta) = theta (m-k+1)/m Occ(k-1 | k+t-1, m, theta)`.
    pub fn negocc_pmf(m: u64, k: u64, theta: &ExactReal, t_max: u64, budget: DigitBudget) -> Result<ExactPmf> {
        check_theta(theta)?;
        if k == 0 || k > m {
            return Err(invalid(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
        }
        let mm = ExactReal::from(m);
        let phi = &(&mm * &(&ExactReal::one() - theta)) / theta;
        let table = stirling::exact_table(k - 1 + t_max, k - 1, &phi, budget)?;
        let factor = theta * &ExactReal::ratio(m - k + 1, m);
        let falling = ExactReal::from_integer(falling_factorial_big(m, k - 1));
        let probabilities = (0..=t_max)
            .map(|t| {
                let n = k - 1 + t;
                &(&(&factor * &(theta / &mm).pow(n as u32)) * &falling) * &table.get(n, k - 1)
            })
            .collect();
        Ok(ExactPmf { support_min: 0, probabilities })
    }

    /// `Spillage(r | n, k, phi)` for `r = 0..=n-k`; `phi = 0` gives the point
    /// mass at `r = n - k`.
    pub fn spillage_pmf(n: u64, k: u64, phi: &ExactReal, budget: DigitBudget) -> Result<ExactPmf> {
        if k > n {
            return Err(invalid(format!("occupancy parameter k = {k} exceeds n = {n}")));
        }
        if phi.is_zero() {
            let mut probabilities = vec![ExactReal::zero(); (n - k) as usize + 1];
            probabilities[(n - k) as usize] = ExactReal::one();
            return Ok(ExactPmf { support_min: 0, probabilities });
        }
        let central = stirling::exact_table(n, k, &ExactReal::zero(), budget)?;
        let denom = stirling::stirling_noncentral_exact(n, k, phi, budget)?;
        let probabilities = (0..=(n - k))
            .map(|r| {
                let s = k + r;
                ExactReal::from_integer(binomial_big(n, s)) * phi.pow((n - s) as u32) * central.get(s, k)
                    / denom.clone()
            })
            .collect();
        Ok(ExactPmf { support_min: 0, probabilities })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{DigitBudget, ExactReal};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn is_point_mass(p: &Pmf, at: u64) -> bool {
        p.support_min() == at && p.probabilities() == [1.0]
    }

    #[test]
    fn occ_small_examples() {
        let p = occ_pmf(&OccParams::new(1, 5, 0.4).unwrap());
        assert_eq!(p.support_min(), 0);
        assert!(close(p.prob(0), 0.6, 1e-15) && close(p.prob(1), 0.4, 1e-15));
        let p = occ_pmf(&OccParams::new(2, 2, 1.0).unwrap());
        assert_eq!((p.support_min(), p.probabilities()), (1, &[0.5, 0.5][..]));
        let p = occ_pmf(&OccParams::new(7, 4, 0.3).unwrap());
        assert!(close(p.prob(0), 0.7f64.powi(7), 1e-15));
        assert_eq!(p.prob(5), 0.0);
    }

    #[test]
    fn occ_matches_exact_stirling_form() {
        for &(num, den) in &[(1, 4), (1, 2), (3, 4), (1, 1)] {
            let theta = ExactReal::ratio(num, den);
            for n in 0..=9 {
                for m in 1..=6 {
                    let exact = exact::occ_pmf(n, m, &theta, DigitBudget::default()).unwrap();
                    assert_eq!(exact.total(), ExactReal::one());
                    let float = occ_pmf(&OccParams::new(n, m, theta.to_f64()).unwrap());
                    let scaled = occ_pmf_scaled_stirling(&OccParams::new(n, m, theta.to_f64()).unwrap()).unwrap();
                    for k in 0..=n.min(m) {
                        assert!(close(float.prob(k), exact.prob(k).to_f64(), 1e-14), "n={n} m={m} k={k}");
                        assert!(close(scaled.prob(k), exact.prob(k).to_f64(), 1e-14), "n={n} m={m} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn infinite_bins_and_degenerate_theta() {
        let p = occ_pmf(&OccParams::new(5, Bins::Infinite, 0.5).unwrap());
        assert!(close(p.prob(2), 10.0 / 32.0, 1e-15));
        let d = occ_pmf(&OccParams::degenerate(9, 3).unwrap());
        assert_eq!((d.support_min(), d.probabilities()), (0, &[1.0][..]));
        assert!(OccParams::new(3, 0, 0.5).is_err());
        assert!(OccParams::new(3, 2, 0.0).is_err());
        assert!(OccParams::new(3, 2, 1.5).is_err());
        assert_eq!("inf".parse::<Bins>().unwrap(), Bins::Infinite);
        assert_eq!("12".parse::<Bins>().unwrap(), Bins::Finite(12));
    }

    #[test]
    fn conditional_form() {
        let p = occ_conditional_pmf(4, 5, 0.7, 0).unwrap();
        assert_eq!(p, occ_pmf(&OccParams::new(4, 5, 0.7).unwrap()));
        assert!(is_point_mass(&occ_conditional_pmf(4, 5, 0.7, 5).unwrap(), 5));
        assert!(occ_conditional_pmf(4, 5, 0.7, 6).is_err());
        let c = occ_conditional_pmf(2, 3, 1.0, 1).unwrap();
        // from one occupied bin of three, two more balls
        assert!(close(c.prob(1), 1.0 / 9.0, 1e-15));
        assert!(close(c.prob(2), 4.0 / 9.0 + 2.0 / 9.0, 1e-15));
        assert!(close(c.prob(3), 2.0 / 9.0, 1e-15));
    }

    #[test]
    fn moments_examples() {
        let p = OccParams::new(25, 25, 1.0).unwrap();
        assert!(close(occ_moments(&p).mean / 25.0, 1.0 - 0.96f64.powi(25), 1e-14));
        assert_eq!(occ_factorial_moment(&OccParams::new(0, 7, 0.5).unwrap(), 1).unwrap(), 7.0);
        let p = OccParams::new(2, 2, 1.0).unwrap();
        assert!(close(occ_moments(&p).mean, 1.5, 1e-15));
        assert!(close(occ_pmf(&p).mean(), 1.5, 1e-15));
        assert!(occ_factorial_moment(&p, 3).is_err());
    }

    #[test]
    fn closed_form_moments_match_pmf() {
        for &theta in &[0.3, 0.7, 1.0] {
            for n in 2..=30 {
                for m in 2..=12 {
                    let p = OccParams::new(n, m, theta).unwrap();
                    let closed = occ_moments(&p);
                    let summed = occ_pmf(&p).moments();
                    assert!(close(closed.mean, summed.mean, 1e-10 * summed.mean.abs().max(1.0)));
                    assert!(close(closed.variance, summed.variance, 1e-9 * summed.variance.max(1e-3)));
                    if summed.variance > 1e-6 {
                        assert!(
                            close(closed.skewness, summed.skewness, 1e-7 * summed.skewness.abs().max(1.0)),
                            "n={n} m={m} theta={theta}"
                        );
                        assert!(
                            close(closed.kurtosis, summed.kurtosis, 1e-7 * summed.kurtosis.abs().max(1.0)),
                            "n={n} m={m} theta={theta}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn asymptotic_moments() {
        let p = OccParams::new(100, 100, 1.0).unwrap();
        let a = occ_moments_asymptotic(&p, Regime::LargeN);
        assert!(close(a.mean / 100.0, 1.0 - (-1.0f64).exp(), 1e-15));
        let b = occ_moments_asymptotic(&OccParams::new(10, 1000, 0.3).unwrap(), Regime::LargeM);
        assert!(close(b.variance, 10.0 * 0.3 * 0.7, 1e-15));
        assert!(close(b.mean, 3.0, 1e-15));
        let half = OccParams::new(693_147, 1_000_000, 1.0).unwrap();
        let c = occ_moments_asymptotic(&half, Regime::LargeN);
        assert!(c.skewness.abs() < 1e-5);
    }

    #[test]
    fn normal_approximation() {
        let p = OccParams::new(5000, 5000, 1.0).unwrap();
        let mu = occ_moments(&p).mean.round() as u64;
        let exact = occ_pmf(&p).prob(mu);
        let approx = occ_normal_approx(&p, mu).unwrap();
        assert!((approx - exact).abs() / exact < 0.05);
        let total: f64 = (0..=5000).map(|k| occ_normal_approx(&p, k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-3);
        assert!(occ_normal_approx(&OccParams::new(0, 3, 0.5).unwrap(), 0).is_err());
    }

    #[test]
    fn negocc_examples() {
        let p = negocc_pmf(&NegOccParams::new(2, 2, 1.0).unwrap(), 30);
        for t in 0..=30 {
            assert!(close(p.prob(t), 0.5f64.powi(t as i32 + 1), 1e-16));
        }
        let p = negocc_pmf(&NegOccParams::new(7, 1, 0.35).unwrap(), 5);
        assert!(close(p.prob(0), 0.35, 1e-16));
        let inf = negocc_pmf(&NegOccParams::new(Bins::Infinite, 2, 0.5).unwrap(), 20);
        let nb = negbin_pmf(2, 0.5, 20);
        assert!(inf.sup_distance(&nb) < 1e-16);
        assert!(NegOccParams::new(3, 4, 0.5).is_err());
        assert!(NegOccParams::new(3, 0, 0.5).is_err());
        let cdf = negocc_cdf(&NegOccParams::new(2, 2, 1.0).unwrap(), 3);
        assert!(close(cdf, 0.9375, 1e-15));
        assert!(close(negocc_cdf(&NegOccParams::new(4, 1, 0.6).unwrap(), 0), 0.6, 1e-15));
        // single bin: the first ball fills it
        assert_eq!(negocc_pmf(&NegOccParams::new(1, 1, 1.0).unwrap(), 3).probabilities(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn negocc_backends_agree() {
        for &theta in &[0.25, 0.6, 1.0] {
            for m in 1..=7 {
                for k in 1..=m {
                    let p = NegOccParams::new(m, k, theta).unwrap();
                    let rec = negocc_pmf(&p, 25);
                    let st = negocc_pmf_stirling(&p, 25).unwrap();
                    let ex = exact::negocc_pmf(m, k, &ExactReal::from_f64(theta).unwrap(), 25, DigitBudget::default())
                        .unwrap();
                    for t in 0..=25 {
                        assert!(close(rec.prob(t), st.prob(t), 1e-13));
                        assert!(close(rec.prob(t), ex.prob(t).to_f64(), 1e-14));
                    }
                    let cum = rec.cumulative();
                    for t in [0u64, 3, 10, 25] {
                        assert!(close(cum[t as usize], negocc_cdf(&p, t), 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn coupon_collector() {
        let p = coupon_collector_pmf(2, 1.0, 10).unwrap();
        assert!(close(p.prob(3), 1.0 / 16.0, 1e-16));
        assert_eq!(coupon_collector_pmf(1, 1.0, 3).unwrap().prob(0), 1.0);
        assert!(coupon_collector_pmf(Bins::Infinite, 1.0, 3).is_err());
        let total = coupon_collector_total_pmf(3, 1.0, 400).unwrap();
        assert!(close(total.mean(), 5.5, 1e-12));
        let tail = negocc_pmf_until(&NegOccParams::new(3, 3, 1.0).unwrap(), 1e-14, 10_000);
        assert!(tail.meta().tail_mass <= 1e-14);
    }

    #[test]
    fn spillage_examples() {
        let p = spillage_pmf(&SpillageParams::new(3, 2, 1.0).unwrap()).unwrap();
        assert!(close(p.prob(0), 0.5, 1e-15) && close(p.prob(1), 0.5, 1e-15));
        assert!(is_point_mass(&spillage_pmf(&SpillageParams::new(4, 2, 0.0).unwrap()).unwrap(), 2));
        assert!(is_point_mass(&spillage_pmf(&SpillageParams::new(5, 3, f64::INFINITY).unwrap()).unwrap(), 0));
        assert!(is_point_mass(&spillage_pmf(&SpillageParams::new(4, 0, 2.0).unwrap()).unwrap(), 0));
        assert!(is_point_mass(&spillage_pmf(&SpillageParams::new(4, 0, 0.0).unwrap()).unwrap(), 4));
        assert!(SpillageParams::new(2, 3, 1.0).is_err());
        assert!(SpillageParams::new(2, 1, -1.0).is_err());
        let big = spillage_pmf(&SpillageParams::new(6, 3, 1e6).unwrap()).unwrap();
        assert!(big.prob(0) > 1.0 - 1e-3);
    }

    #[test]
    fn spillage_matches_exact_and_survives_large_n() {
        for &phi in &["1/3", "1", "5/2", "40"] {
            let phi_e: ExactReal = phi.parse().unwrap();
            for n in 1..=12 {
                for k in 0..=n {
                    let ex = exact::spillage_pmf(n, k, &phi_e, DigitBudget::default()).unwrap();
                    assert_eq!(ex.total(), ExactReal::one());
                    let fl = spillage_pmf(&SpillageParams::new(n, k, phi_e.to_f64()).unwrap()).unwrap();
                    for r in 0..=(n - k) {
                        assert!(close(fl.prob(r), ex.prob(r).to_f64(), 1e-14));
                    }
                }
            }
        }
        let big = spillage_pmf(&SpillageParams::new(2000, 700, 150.0).unwrap()).unwrap();
        assert!((big.total() - 1.0).abs() < 1e-9);
        assert!(big.meta().error_bound < 1e-9);
    }

    #[test]
    fn effective_balls() {
        assert!(is_point_mass(&effective_balls_given_occupancy(6, 4, 1.0, 3).unwrap(), 6));
        assert!(is_point_mass(&effective_balls_given_occupancy(6, Bins::Infinite, 0.5, 3).unwrap(), 3));
        let p = effective_balls_given_occupancy(3, 2, 0.5, 2).unwrap();
        assert!(close(p.prob(2), 2.0 / 3.0, 1e-15) && close(p.prob(3), 1.0 / 3.0, 1e-15));
        assert!(effective_balls_given_occupancy(3, 2, 0.5, 3).is_err());
        assert!(effective_balls_given_occupancy(3, 2, 1.0, 0).is_err());
    }

    #[test]
    fn samplers() {
        let seed = StreamSeed::new(11);
        assert!(occ_sample(&OccParams::new(2, 2, 1.0).unwrap(), 0, seed).is_empty());
        let draws = occ_sample(&OccParams::new(2, 2, 1.0).unwrap(), 100_000, seed);
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        assert!((mean - 1.5).abs() < 3.0 * 0.5 / (100_000f64).sqrt());
        assert_eq!(draws, occ_sample(&OccParams::new(2, 2, 1.0).unwrap(), 100_000, seed));
        let t = negocc_sample(&NegOccParams::new(2, 2, 1.0).unwrap(), 100_000, seed.substream(1));
        let zeros = t.iter().filter(|&&x| x == 0).count() as f64 / 1e5;
        assert!((zeros - 0.5).abs() < 3.0 * 0.5 / (1e5f64).sqrt());
        let s = spillage_sample(&SpillageParams::new(3, 2, 1.0).unwrap(), 1000, seed).unwrap();
        assert!(s.iter().all(|&r| r <= 1));
    }

    #[test]
    fn reference_pmfs() {
        let b = binomial_pmf(10, 0.3);
        assert!(close(b.total(), 1.0, 1e-15));
        assert!(close(b.prob(3), 120.0 * 0.3f64.powi(3) * 0.7f64.powi(7), 1e-15));
        let p = poisson_pmf(3.0, 1e-14);
        assert!(p.meta().tail_mass <= 1e-14);
        assert!(close(p.prob(2), 4.5 * (-3.0f64).exp(), 1e-16));
        let nb = negbin_pmf(3, 0.4, 3);
        assert!(close(nb.prob(2), 6.0 * 0.16 * 0.6f64.powi(3), 1e-16));
    }

    #[test]
    fn pmf_helpers() {
        let p = Pmf::new(0, vec![0.0, 0.25, 0.75, 0.0], PmfMeta::new(Method::Recursion, 0.0));
        assert_eq!((p.support_min(), p.support_max()), (1, 2));
        assert_eq!(p.cdf(0), 0.0);
        assert_eq!(p.cdf(1), 0.25);
        assert_eq!(p.sf(2), 0.75);
        assert_eq!(p.cdf(100), 1.0);
        let q = Pmf::point_mass(2);
        assert!(close(p.tv_distance(&q), 0.25, 1e-16));
        assert_eq!(p.sup_distance(&q), 0.25);
        let e = Pmf::empirical(&[1, 1, 3]);
        assert_eq!((e.support_min(), e.probabilities().len()), (1, 3));
        assert!(Pmf::point_mass(3).moments().skewness.is_nan());
    }

    proptest! {
        #[test]
        fn occ_normalises(n in 0u64..120, m in 1u64..60, theta in 0.01f64..=1.0) {
            let p = occ_pmf(&OccParams::new(n, m, theta).unwrap());
            prop_assert!((p.total() - 1.0).abs() < 1e-9);
            prop_assert!(p.probabilities().iter().all(|&x| x >= 0.0));
            prop_assert!(p.support_max() <= n.min(m));
        }

        #[test]
        fn negocc_tail_shrinks(m in 1u64..12, k_frac in 0.0f64..1.0, theta in 0.05f64..=1.0) {
            let k = 1 + ((m - 1) as f64 * k_frac) as u64;
            let p = NegOccParams::new(m, k, theta).unwrap();
            let mut last = 1.0;
            for t_max in [0u64, 5, 20, 80] {
                let tail = negocc_pmf(&p, t_max).meta().tail_mass;
                prop_assert!(tail <= last + 1e-15);
                last = tail;
            }
        }

        #[test]
        fn spillage_normalises(n in 1u64..80, k_frac in 0.0f64..=1.0, phi in 0.001f64..1e4) {
            let k = (n as f64 * k_frac) as u64;
            let p = spillage_pmf(&SpillageParams::new(n, k, phi).unwrap()).unwrap();
            prop_assert!((p.total() - 1.0).abs() < 1e-9);
        }
    }
}
