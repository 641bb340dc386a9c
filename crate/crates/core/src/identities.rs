//! Executable mixture identities with quantitative discrepancy reports.
//!
//! Each identity is evaluated with its two sides on different backends
//! (forward recursion, chain matrix power, scaled Stirling numbers, exact
//! rationals) so a bug in one path cannot cancel against itself.

use std::fmt;

use crate::chain::TransitionMatrix;
use crate::dist::{
    self, binomial_pmf, negbin_pmf, negocc_pmf, negocc_pmf_stirling, occ_pmf, occ_pmf_scaled_stirling, poisson_pmf,
    spillage_pmf, Bins, NegOccParams, OccParams, Pmf, SpillageParams,
};
use crate::error::{invalid, Error, Result};
use crate::exact::{binomial_big, DigitBudget, ExactReal};

/// Base tolerance for float identity checks.
pub const TOLERANCE: f64 = 1e-10;

/// A parameter value recorded in a report.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Int(u64),
    Real(f64),
    Exact(ExactReal),
    Infinite,
    Label(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Exact(v) => write!(f, "{v}"),
            ParamValue::Infinite => f.write_str("inf"),
            ParamValue::Label(s) => f.write_str(s),
        }
    }
}

impl From<u64> for ParamValue {
    fn from(v: u64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<Bins> for ParamValue {
    fn from(m: Bins) -> Self {
        match m {
            Bins::Finite(m) => ParamValue::Int(m),
            Bins::Infinite => ParamValue::Infinite,
        }
    }
}

impl From<String> for ParamValue {
    fn from(s: String) -> Self {
        ParamValue::Label(s)
    }
}

impl From<&ExactReal> for ParamValue {
    fn from(v: &ExactReal) -> Self {
        ParamValue::Exact(v.clone())
    }
}

/// One parameter tuple, in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridPoint(pub Vec<(String, ParamValue)>);

impl GridPoint {
    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.0.push((name.to_string(), value.into()));
        self
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, value)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{name}={value}")?;
        }
        Ok(())
    }
}

/// Largest discrepancy of one identity over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub identity_name: String,
    pub grid: Vec<GridPoint>,
    pub max_abs_discrepancy: f64,
    pub worst_case: GridPoint,
    pub tolerance: f64,
}

impl IdentityReport {
    fn single(name: &str, point: GridPoint, discrepancy: f64, tolerance: f64) -> Self {
        IdentityReport {
            identity_name: name.to_string(),
            grid: vec![point.clone()],
            max_abs_discrepancy: discrepancy,
            worst_case: point,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_abs_discrepancy <= self.tolerance
    }

    /// Combines per-point reports by taking the worst discrepancy relative
    /// to each point's tolerance.
    pub fn merge(name: &str, reports: impl IntoIterator<Item = IdentityReport>) -> Self {
        let mut merged = IdentityReport {
            identity_name: name.to_string(),
            grid: Vec::new(),
            max_abs_discrepancy: 0.0,
            worst_case: GridPoint::default(),
            tolerance: TOLERANCE,
        };
        let mut worst_ratio = -1.0;
        for r in reports {
            let ratio = r.max_abs_discrepancy / r.tolerance.max(f64::MIN_POSITIVE);
            if ratio > worst_ratio || ratio.is_nan() {
                worst_ratio = ratio;
                merged.max_abs_discrepancy = r.max_abs_discrepancy;
                merged.tolerance = r.tolerance;
                merged.worst_case = r.worst_case.clone();
            }
            merged.grid.extend(r.grid);
        }
        merged
    }
}

fn max_abs_diff(a: &Pmf, b: &Pmf) -> f64 {
    a.sup_distance(b)
}

fn max_abs_diff_exact(a: &[ExactReal], b: &[ExactReal]) -> f64 {
    let len = a.len().max(b.len());
    let zero = ExactReal::zero();
    (0..len).map(|i| (a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero)).abs().to_f64()).fold(0.0, f64::max)
}

/// The law of a random number of balls `N`.
pub trait BallCountLaw {
    fn name(&self) -> String;
    /// `G_N(z) = E[z^N]` on `[0, 1]`.
    fn pgf(&self, z: f64) -> f64;
    /// Pmf of `N`, truncated once the tail is at most `tail`.
    fn pmf(&self, tail: f64) -> Pmf;
    /// Exact pgf, when `G_N` maps rationals to rationals.
    fn pgf_exact(&self, _z: &ExactReal) -> Option<ExactReal> {
        None
    }
    /// Exact pmf, when `N` has finite support and rational probabilities.
    fn pmf_exact(&self) -> Option<Vec<ExactReal>> {
        None
    }
}

/// `N = n` surely.
#[derive(Debug, Clone, Copy)]
pub struct FixedCount(pub u64);

impl BallCountLaw for FixedCount {
    fn name(&self) -> String {
        format!("fixed({})", self.0)
    }
    fn pgf(&self, z: f64) -> f64 {
        z.powi(self.0 as i32)
    }
    fn pmf(&self, _tail: f64) -> Pmf {
        Pmf::point_mass(self.0)
    }
    fn pgf_exact(&self, z: &ExactReal) -> Option<ExactReal> {
        Some(z.pow(self.0 as u32))
    }
    fn pmf_exact(&self) -> Option<Vec<ExactReal>> {
        let mut v = vec![ExactReal::zero(); self.0 as usize + 1];
        v[self.0 as usize] = ExactReal::one();
        Some(v)
    }
}

/// `N ~ Bin(n, p)`.
#[derive(Debug, Clone)]
pub struct BinomialCount {
    pub n: u64,
    pub p: ExactReal,
}

impl BallCountLaw for BinomialCount {
    fn name(&self) -> String {
        format!("binomial({}, {})", self.n, self.p)
    }
    fn pgf(&self, z: f64) -> f64 {
        let p = self.p.to_f64();
        (1.0 - p + p * z).powi(self.n as i32)
    }
    fn pmf(&self, _tail: f64) -> Pmf {
        binomial_pmf(self.n, self.p.to_f64())
    }
    fn pgf_exact(&self, z: &ExactReal) -> Option<ExactReal> {
        Some((&(&ExactReal::one() - &self.p) + &(&self.p * z)).pow(self.n as u32))
    }
    fn pmf_exact(&self) -> Option<Vec<ExactReal>> {
        Some(dist::exact::binomial_pmf(self.n, &self.p).probabilities)
    }
}

/// `N ~ Pois(lambda)`.
#[derive(Debug, Clone, Copy)]
pub struct PoissonCount(pub f64);

impl BallCountLaw for PoissonCount {
    fn name(&self) -> String {
        format!("poisson({})", self.0)
    }
    fn pgf(&self, z: f64) -> f64 {
        (self.0 * (z - 1.0)).exp()
    }
    fn pmf(&self, tail: f64) -> Pmf {
        poisson_pmf(self.0, tail)
    }
}

/// A caller-supplied law given by its pgf and pmf.
pub struct CustomCount<G: Fn(f64) -> f64> {
    pub label: String,
    pub pgf: G,
    pub pmf: Pmf,
}

impl<G: Fn(f64) -> f64> BallCountLaw for CustomCount<G> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn pgf(&self, z: f64) -> f64 {
        (self.pgf)(z)
    }
    fn pmf(&self, _tail: f64) -> Pmf {
        self.pmf.clone()
    }
}

/// Tail mass at which mixing sums over unbounded counts are truncated.
const MIXING_TAIL: f64 = 1e-14;

/// `sum_n P(N = n) Occ(k | n, m, theta)` with the occupancy law advanced by
/// chain matrix-vector products.
fn mix_over_counts(counts: &Pmf, m: u64, theta: f64) -> Result<Vec<f64>> {
    let chain = TransitionMatrix::new(m, theta)?;
    let mut state = vec![1.0];
    let mut mixed = vec![0.0; m as usize + 1];
    for n in 0..=counts.support_max() {
        if n > 0 {
            chain.advance(&mut state, 0);
        }
        let w = counts.prob(n);
        if w != 0.0 {
            for (k, p) in state.iter().enumerate() {
                mixed[k] += w * p;
            }
        }
    }
    Ok(mixed)
}

/// `P(K_N = k) = C(m, k) sum_i C(k, i) (-1)^(k-i) G_N(1 - theta (m-i)/m)`
/// against direct mixing of occupancy laws over `N`.
pub fn check_random_ball_count(law: &dyn BallCountLaw, m: u64, theta: f64) -> Result<IdentityReport> {
    let g1 = law.pgf(1.0);
    if (g1 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPgf(g1));
    }
    let counts = law.pmf(MIXING_TAIL);
    let mixed = mix_over_counts(&counts, m, theta)?;
    let mut worst = 0.0f64;
    for k in 0..=m {
        let mut alt = 0.0;
        for i in 0..=k {
            let c = binomial_big(k, i);
            let c = num_traits::ToPrimitive::to_f64(&c).unwrap_or(f64::INFINITY);
            let term = c * law.pgf(1.0 - theta * (m - i) as f64 / m as f64);
            alt += if (k - i) % 2 == 0 { term } else { -term };
        }
        let lhs = num_traits::ToPrimitive::to_f64(&binomial_big(m, k)).unwrap_or(f64::INFINITY) * alt;
        worst = worst.max((lhs - mixed[k as usize]).abs());
    }
    let point = GridPoint::default().with("N", law.name()).with("m", m).with("theta", theta);
    let tolerance = TOLERANCE + counts.meta().tail_mass;
    Ok(IdentityReport::single("random_ball_count", point, worst, tolerance))
}

/// Exact version of [`check_random_ball_count`] for laws with rational pgf
/// values and finite support.
pub fn check_random_ball_count_exact(
    law: &dyn BallCountLaw,
    m: u64,
    theta: &ExactReal,
    budget: DigitBudget,
) -> Result<IdentityReport> {
    let counts = law.pmf_exact().ok_or_else(|| invalid("exact check needs a finite, rational ball-count law"))?;
    let mut mixed = vec![ExactReal::zero(); m as usize + 1];
    for (n, w) in counts.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let occ = dist::exact::occ_pmf(n as u64, m, theta, budget)?;
        for (k, p) in occ.probabilities.iter().enumerate() {
            mixed[k] = &mixed[k] + &(w * p);
        }
    }
    let mut lhs = Vec::with_capacity(m as usize + 1);
    for k in 0..=m {
        let mut alt = ExactReal::zero();
        for i in 0..=k {
            let z = &ExactReal::one() - &(theta * &ExactReal::ratio(m - i, m));
            let g = law.pgf_exact(&z).ok_or_else(|| invalid("exact check needs a rational pgf"))?;
            let term = ExactReal::from_integer(binomial_big(k, i)) * g;
            alt = if (k - i) % 2 == 0 { alt + term } else { alt - term };
        }
        lhs.push(ExactReal::from_integer(binomial_big(m, k)) * alt);
    }
    let point = GridPoint::default().with("N", law.name()).with("m", m).with("theta", theta);
    Ok(IdentityReport::single("random_ball_count_exact", point, max_abs_diff_exact(&lhs, &mixed), 0.0))
}

/// `Occ(k | n, m, gamma theta) = sum_r Bin(r | n, theta) Occ(k | r, m, gamma)`.
pub fn check_occ_binomial_mixture(n: u64, m: impl Into<Bins>, theta: f64, gamma: f64) -> Result<IdentityReport> {
    let m = m.into();
    let lhs = occ_pmf(&OccParams::new(n, m, gamma * theta)?);
    let weights = binomial_pmf(n, theta);
    let mut mixed = vec![0.0; n as usize + 1];
    for (r, w) in weights.iter() {
        let inner = occ_pmf_scaled_stirling(&OccParams::new(r, m, gamma)?)?;
        for (k, p) in inner.iter() {
            mixed[k as usize] += w * p;
        }
    }
    let rhs = Pmf::new(0, mixed, lhs.meta().to_owned());
    let point = GridPoint::default().with("n", n).with("m", m).with("theta", theta).with("gamma", gamma);
    Ok(IdentityReport::single("occ_binomial_mixture", point, max_abs_diff(&lhs, &rhs), TOLERANCE))
}

/// Exact version of [`check_occ_binomial_mixture`] for finite `m`.
pub fn check_occ_binomial_mixture_exact(
    n: u64,
    m: u64,
    theta: &ExactReal,
    gamma: &ExactReal,
    budget: DigitBudget,
) -> Result<IdentityReport> {
    let lhs = dist::exact::occ_pmf(n, m, &(gamma * theta), budget)?;
    let weights = dist::exact::binomial_pmf(n, theta);
    let mut mixed = vec![ExactReal::zero(); n.min(m) as usize + 1];
    for (r, w) in weights.probabilities.iter().enumerate() {
        let inner = dist::exact::occ_pmf(r as u64, m, gamma, budget)?;
        for (k, p) in inner.probabilities.iter().enumerate() {
            mixed[k] = &mixed[k] + &(w * p);
        }
    }
    let point = GridPoint::default().with("n", n).with("m", m).with("theta", theta).with("gamma", gamma);
    Ok(IdentityReport::single("occ_binomial_mixture_exact", point, max_abs_diff_exact(&lhs.probabilities, &mixed), 0.0))
}

/// `Bin(k | m, 1 - exp(-lambda theta / m)) = sum_r Pois(r | lambda) Occ(k | r, m, theta)`,
/// with the Poisson sum truncated at tail mass `truncation_tail`.
pub fn check_binomial_poisson_mixture(lambda: f64, m: u64, theta: f64, truncation_tail: f64) -> Result<IdentityReport> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(format!("lambda must be finite and nonnegative, got {lambda}")));
    }
    let lhs = binomial_pmf(m, -(-lambda * theta / m as f64).exp_m1());
    let counts = poisson_pmf(lambda, truncation_tail);
    let rhs = Pmf::new(0, mix_over_counts(&counts, m, theta)?, *lhs.meta());
    let point = GridPoint::default().with("lambda", lambda).with("m", m).with("theta", theta);
    let tolerance = TOLERANCE + counts.meta().tail_mass;
    Ok(IdentityReport::single("binomial_poisson_mixture", point, max_abs_diff(&lhs, &rhs), tolerance))
}

/// Second form: with `lambda = m |ln(1 - gamma)| / theta` the mixture is
/// `Bin(k | m, gamma)`.
pub fn check_binomial_poisson_gamma(gamma: f64, m: u64, theta: f64, truncation_tail: f64) -> Result<IdentityReport> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let lambda = m as f64 * (-gamma).ln_1p().abs() / theta;
    let lhs = binomial_pmf(m, gamma);
    let counts = poisson_pmf(lambda, truncation_tail);
    let rhs = Pmf::new(0, mix_over_counts(&counts, m, theta)?, *lhs.meta());
    let point = GridPoint::default().with("gamma", gamma).with("m", m).with("theta", theta);
    let tolerance = TOLERANCE + counts.meta().tail_mass;
    Ok(IdentityReport::single("binomial_poisson_mixture_gamma", point, max_abs_diff(&lhs, &rhs), tolerance))
}

/// `NegOcc(t | m, k, gamma theta) = sum_{r<=t} NegBin(t-r | k+r, 1-theta) NegOcc(r | m, k, gamma)`
/// for `t <= t_max`.
pub fn check_negocc_mixture(m: impl Into<Bins>, k: u64, theta: f64, gamma: f64, t_max: u64) -> Result<IdentityReport> {
    let m = m.into();
    let lhs = negocc_pmf(&NegOccParams::new(m, k, gamma * theta)?, t_max);
    let inner = negocc_pmf_stirling(&NegOccParams::new(m, k, gamma)?, t_max)?;
    let mut rhs = vec![0.0; t_max as usize + 1];
    for r in 0..=t_max {
        let w = inner.prob(r);
        let nb = negbin_pmf(k + r, 1.0 - theta, t_max - r);
        for (j, p) in nb.iter() {
            rhs[(r + j) as usize] += w * p;
        }
    }
    let discrepancy = lhs.probabilities().iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let point =
        GridPoint::default().with("m", m).with("k", k).with("theta", theta).with("gamma", gamma).with("t_max", t_max);
    Ok(IdentityReport::single("negocc_mixture", point, discrepancy, TOLERANCE))
}

/// Exact version of [`check_negocc_mixture`] for finite `m`.
pub fn check_negocc_mixture_exact(
    m: u64,
    k: u64,
    theta: &ExactReal,
    gamma: &ExactReal,
    t_max: u64,
    budget: DigitBudget,
) -> Result<IdentityReport> {
    let lhs = dist::exact::negocc_pmf(m, k, &(gamma * theta), t_max, budget)?;
    let inner = dist::exact::negocc_pmf(m, k, gamma, t_max, budget)?;
    let fall = &ExactReal::one() - theta;
    let mut rhs = vec![ExactReal::zero(); t_max as usize + 1];
    for r in 0..=t_max {
        let w = inner.prob(r);
        let nb = dist::exact::negbin_pmf(k + r, &fall, t_max - r);
        for (j, p) in nb.probabilities.iter().enumerate() {
            let idx = r as usize + j;
            rhs[idx] = &rhs[idx] + &(&w * p);
        }
    }
    let point =
        GridPoint::default().with("m", m).with("k", k).with("theta", theta).with("gamma", gamma).with("t_max", t_max);
    Ok(IdentityReport::single("negocc_mixture_exact", point, max_abs_diff_exact(&lhs.probabilities, &rhs), 0.0))
}

/// `Bin(s | n, theta) = sum_k Spillage(s-k | n, k, phi) Occ(k | n, m, theta)`
/// with `phi = m (1 - theta) / theta`.
pub fn check_spillage_mixture(n: u64, m: impl Into<Bins>, theta: f64) -> Result<IdentityReport> {
    let m = m.into();
    let lhs = binomial_pmf(n, theta);
    let occ = match m {
        Bins::Finite(mm) => crate::chain::occupancy_by_power(n, mm, theta, 0)?,
        Bins::Infinite => occ_pmf(&OccParams::new(n, m, theta)?),
    };
    let phi = dist::scale_parameter(m, theta);
    let mut rhs = vec![0.0; n as usize + 1];
    for (k, w) in occ.iter() {
        if w == 0.0 {
            continue;
        }
        let spill = spillage_pmf(&SpillageParams::new(n, k, phi)?)?;
        for (r, p) in spill.iter() {
            rhs[(k + r) as usize] += w * p;
        }
    }
    let rhs = Pmf::new(0, rhs, *lhs.meta());
    let point = GridPoint::default().with("n", n).with("m", m).with("theta", theta);
    Ok(IdentityReport::single("spillage_mixture", point, max_abs_diff(&lhs, &rhs), TOLERANCE))
}

/// Exact version of [`check_spillage_mixture`] for finite `m`.
pub fn check_spillage_mixture_exact(n: u64, m: u64, theta: &ExactReal, budget: DigitBudget) -> Result<IdentityReport> {
    let lhs = dist::exact::binomial_pmf(n, theta);
    let occ = dist::exact::occ_pmf(n, m, theta, budget)?;
    let phi = &(&ExactReal::from(m) * &(&ExactReal::one() - theta)) / theta;
    let mut rhs = vec![ExactReal::zero(); n as usize + 1];
    for (k, w) in occ.probabilities.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        let spill = dist::exact::spillage_pmf(n, k as u64, &phi, budget)?;
        for (r, p) in spill.probabilities.iter().enumerate() {
            rhs[k + r] = &rhs[k + r] + &(w * p);
        }
    }
    let point = GridPoint::default().with("n", n).with("m", m).with("theta", theta);
    Ok(IdentityReport::single("spillage_mixture_exact", point, max_abs_diff_exact(&lhs.probabilities, &rhs), 0.0))
}

/// Parameter grid for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    /// `n, m, k <= 8`, `theta, gamma in {0.3, 0.7, 1}`, `lambda in {1, 3}`.
    Small,
    /// Larger sizes, `m = inf` and extra rates.
    Full,
}

impl std::str::FromStr for Grid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Grid::Small),
            "full" => Ok(Grid::Full),
            _ => Err(invalid(format!("unknown grid {s:?}, expected small or full"))),
        }
    }
}

struct GridSpec {
    n_max: u64,
    m_max: u64,
    infinite_m: bool,
    probs: Vec<(i64, i64)>,
    lambdas: Vec<f64>,
    t_max: u64,
}

impl Grid {
    fn spec(self) -> GridSpec {
        match self {
            Grid::Small => GridSpec {
                n_max: 8,
                m_max: 8,
                infinite_m: false,
                probs: vec![(3, 10), (7, 10), (1, 1)],
                lambdas: vec![1.0, 3.0],
                t_max: 30,
            },
            Grid::Full => GridSpec {
                n_max: 14,
                m_max: 12,
                infinite_m: true,
                probs: vec![(1, 10), (3, 10), (1, 2), (7, 10), (1, 1)],
                lambdas: vec![0.5, 1.0, 3.0, 10.0],
                t_max: 60,
            },
        }
    }
}

/// Runs every identity over `grid`, float and exact variants, one merged
/// report per identity. Deterministic for a fixed grid.
pub fn run_all(grid: Grid) -> Result<Vec<IdentityReport>> {
    let g = grid.spec();
    let budget = DigitBudget::from_env();
    let probs: Vec<ExactReal> = g.probs.iter().map(|&(a, b)| ExactReal::ratio(a, b)).collect();
    let floats: Vec<f64> = probs.iter().map(ExactReal::to_f64).collect();
    let mut bins: Vec<Bins> = (1..=g.m_max).map(Bins::Finite).collect();
    if g.infinite_m {
        bins.push(Bins::Infinite);
    }
    let finite = 1..=g.m_max;
    let mut out = Vec::new();

    let mut fixed = Vec::new();
    let mut binom = Vec::new();
    let mut pois = Vec::new();
    let mut fixed_exact = Vec::new();
    let mut binom_exact = Vec::new();
    for m in finite.clone() {
        for (theta, theta_e) in floats.iter().zip(&probs) {
            for n in 0..=g.n_max {
                fixed.push(check_random_ball_count(&FixedCount(n), m, *theta)?);
                fixed_exact.push(check_random_ball_count_exact(&FixedCount(n), m, theta_e, budget)?);
                for p in &probs {
                    let law = BinomialCount { n, p: p.clone() };
                    binom.push(check_random_ball_count(&law, m, *theta)?);
                    binom_exact.push(check_random_ball_count_exact(&law, m, theta_e, budget)?);
                }
            }
            for &lambda in &g.lambdas {
                pois.push(check_random_ball_count(&PoissonCount(lambda), m, *theta)?);
            }
        }
    }
    out.push(IdentityReport::merge("random_ball_count_fixed", fixed));
    out.push(IdentityReport::merge("random_ball_count_binomial", binom));
    out.push(IdentityReport::merge("random_ball_count_poisson", pois));
    out.push(IdentityReport::merge("random_ball_count_fixed_exact", fixed_exact));
    out.push(IdentityReport::merge("random_ball_count_binomial_exact", binom_exact));

    let mut occ_mix = Vec::new();
    let mut occ_mix_exact = Vec::new();
    for &m in &bins {
        for n in 0..=g.n_max {
            for (theta, theta_e) in floats.iter().zip(&probs) {
                for (gamma, gamma_e) in floats.iter().zip(&probs) {
                    occ_mix.push(check_occ_binomial_mixture(n, m, *theta, *gamma)?);
                    if let Bins::Finite(mm) = m {
                        occ_mix_exact.push(check_occ_binomial_mixture_exact(n, mm, theta_e, gamma_e, budget)?);
                    }
                }
            }
        }
    }
    out.push(IdentityReport::merge("occ_binomial_mixture", occ_mix));
    out.push(IdentityReport::merge("occ_binomial_mixture_exact", occ_mix_exact));

    let mut pois_mix = Vec::new();
    let mut pois_gamma = Vec::new();
    for m in finite.clone() {
        for &theta in &floats {
            for &lambda in &g.lambdas {
                pois_mix.push(check_binomial_poisson_mixture(lambda, m, theta, 1e-12)?);
            }
            for &gamma in floats.iter().filter(|&&x| x < 1.0) {
                pois_gamma.push(check_binomial_poisson_gamma(gamma, m, theta, 1e-12)?);
            }
        }
    }
    out.push(IdentityReport::merge("binomial_poisson_mixture", pois_mix));
    out.push(IdentityReport::merge("binomial_poisson_mixture_gamma", pois_gamma));

    let mut neg_mix = Vec::new();
    let mut neg_mix_exact = Vec::new();
    for &m in &bins {
        let k_top = m.finite().unwrap_or(g.m_max);
        for k in 1..=k_top {
            for (theta, theta_e) in floats.iter().zip(&probs) {
                for (gamma, gamma_e) in floats.iter().zip(&probs) {
                    neg_mix.push(check_negocc_mixture(m, k, *theta, *gamma, g.t_max)?);
                    if let Bins::Finite(mm) = m {
                        neg_mix_exact.push(check_negocc_mixture_exact(mm, k, theta_e, gamma_e, 12, budget)?);
                    }
                }
            }
        }
    }
    out.push(IdentityReport::merge("negocc_mixture", neg_mix));
    out.push(IdentityReport::merge("negocc_mixture_exact", neg_mix_exact));

    let mut spill = Vec::new();
    let mut spill_exact = Vec::new();
    for &m in &bins {
        for n in 0..=g.n_max {
            for (theta, theta_e) in floats.iter().zip(&probs) {
                spill.push(check_spillage_mixture(n, m, *theta)?);
                if let Bins::Finite(mm) = m {
                    spill_exact.push(check_spillage_mixture_exact(n, mm, theta_e, budget)?);
                }
            }
        }
    }
    out.push(IdentityReport::merge("spillage_mixture", spill));
    out.push(IdentityReport::merge("spillage_mixture_exact", spill_exact));
    Ok(out)
}
