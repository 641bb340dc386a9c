//! Coverage of an original sample of size `m` by a with-replacement resample
//! of size `n`: the number of distinct original points drawn is a classical
//! occupancy number (`theta = 1`).

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::chain::{simulate_with, StreamSeed};
use crate::dist::{negocc_pmf, occ_conditional_pmf, occ_pmf, NegOccParams, OccParams, Pmf};
use crate::error::{invalid, Result};
use crate::exact::ExactReal;

/// Below this sample size the planner decides `P(K_n >= k) >= target` in
/// exact integer arithmetic.
pub const EXACT_PLAN_LIMIT: u64 = 30;

/// `P(K_n = k)` for a resample of size `n` from `m` points.
pub fn coverage_pmf(n: u64, m: u64) -> Result<Pmf> {
    Ok(occ_pmf(&OccParams::new(n, m, 1.0)?))
}

/// `P(K_{n'+n} = k | K_{n'} = r)`, i.e. `Occ(k - r | n, m - r, 1 - r/m)`.
pub fn coverage_conditional_pmf(n: u64, m: u64, r: u64) -> Result<Pmf> {
    occ_conditional_pmf(n, m, 1.0, r)
}

/// Smallest resample size reaching a coverage target.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePlan {
    pub m: u64,
    pub k: u64,
    pub phi_target: f64,
    pub n_required: u64,
    /// `P(K_n >= k)` at `n = n_required`.
    pub achieved_probability: f64,
    /// `P(K_n >= k)` at `n = n_required - 1`, strictly below the target.
    pub previous_probability: f64,
    /// Whether the threshold comparison was made in exact arithmetic.
    pub exact: bool,
}

/// `min { n : P(K_n >= k) >= phi_target }`.
///
/// `P(K_n >= k)` is nondecreasing in `n`, so a single forward pass over `n`
/// that carries the occupancy law from one `n` to the next finds the first
/// crossing. For `m <= 30` the law is carried as exact integer counts
/// `(m)_j S(n, j)` and compared with `phi_target m^n` exactly.
pub fn required_resample_size(m: u64, k: u64, phi_target: f64) -> Result<CoveragePlan> {
    if m == 0 {
        return Err(invalid("original sample size m must be at least 1"));
    }
    if k == 0 || k > m {
        return Err(invalid(format!("required coverage k must lie in 1..={m}, got {k}")));
    }
    if !(phi_target > 0.0 && phi_target < 1.0) {
        return Err(invalid(format!("target probability must lie in (0, 1), got {phi_target}")));
    }
    if m <= EXACT_PLAN_LIMIT {
        plan_exact(m, k, phi_target)
    } else {
        Ok(plan_float(m, k, phi_target))
    }
}

fn plan_exact(m: u64, k: u64, phi_target: f64) -> Result<CoveragePlan> {
    let target = ExactReal::from_f64(phi_target)?;
    let (tn, td) = (target.numer().clone(), target.denom().clone());
    // counts[j] = number of length-n draw sequences covering exactly j points
    let mut counts = vec![BigInt::zero(); m as usize + 1];
    counts[0] = BigInt::one();
    let mut total = BigInt::one(); // m^n
    let mut previous = ExactReal::zero();
    for n in 1u64.. {
        for j in (1..=m as usize).rev() {
            counts[j] = &counts[j] * BigInt::from(j) + &counts[j - 1] * BigInt::from(m as usize - j + 1);
        }
        counts[0] = BigInt::zero();
        total *= BigInt::from(m);
        let covered: BigInt = counts[k as usize..].iter().sum();
        if &covered * &td >= &tn * &total {
            let achieved = ExactReal::from(num_rational::BigRational::new(covered, total));
            return Ok(CoveragePlan {
                m,
                k,
                phi_target,
                n_required: n,
                achieved_probability: achieved.to_f64(),
                previous_probability: previous.to_f64(),
                exact: true,
            });
        }
        previous = ExactReal::from(num_rational::BigRational::new(covered, total.clone()));
    }
    unreachable!("coverage probability tends to one")
}

fn plan_float(m: u64, k: u64, phi_target: f64) -> CoveragePlan {
    let mut occ = vec![0.0; m as usize + 1];
    occ[0] = 1.0;
    let mut previous = 0.0;
    let mf = m as f64;
    for n in 1u64.. {
        let live = (n as usize + 1).min(occ.len());
        for j in (0..live).rev() {
            let enter = if j > 0 { (mf - j as f64 + 1.0) / mf * occ[j - 1] } else { 0.0 };
            occ[j] = j as f64 / mf * occ[j] + enter;
        }
        let covered: f64 = occ[k as usize..].iter().sum();
        if covered >= phi_target {
            return CoveragePlan {
                m,
                k,
                phi_target,
                n_required: n,
                achieved_probability: covered,
                previous_probability: previous,
                exact: false,
            };
        }
        previous = covered;
    }
    unreachable!("coverage probability tends to one")
}

/// Moments of the coverage proportion `K_n / m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMoments {
    pub mean_proportion: f64,
    pub variance_proportion: f64,
    /// `1 - exp(-lambda)`.
    pub asymptotic_mean: f64,
    /// `exp(-lambda) (1 - exp(-lambda)) / m`.
    pub asymptotic_variance: f64,
    /// `n / m`.
    pub lambda: f64,
}

/// `E(K_n/m) = 1 - (1 - 1/m)^n` and
/// `V(K_n/m) = [(m-1) E_2 + E_1 - m E_1^2] / m` with `E_r = (1 - r/m)^n`.
pub fn coverage_moments(n: u64, m: u64) -> Result<CoverageMoments> {
    let moments = crate::dist::occ_moments(&OccParams::new(n, m, 1.0)?);
    let mf = m as f64;
    let lambda = n as f64 / mf;
    let x = (-lambda).exp();
    Ok(CoverageMoments {
        mean_proportion: moments.mean / mf,
        variance_proportion: moments.variance / (mf * mf),
        asymptotic_mean: -(-lambda).exp_m1(),
        asymptotic_variance: x * (1.0 - x) / mf,
        lambda,
    })
}

/// `E(K_n/m) = 1 - ((m-1)/m)^n` as an exact rational.
pub fn coverage_mean_exact(n: u64, m: u64) -> Result<ExactReal> {
    if m == 0 {
        return Err(invalid("original sample size m must be at least 1"));
    }
    Ok(&ExactReal::one() - &ExactReal::ratio(m - 1, m).pow(n as u32))
}

/// Monte Carlo coverage counts against the analytic law.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSimulation {
    pub n: u64,
    pub m: u64,
    pub replications: u64,
    /// Number of replications with `K_n = k`, indexed by `k`.
    pub counts: Vec<u64>,
    pub empirical: Pmf,
    /// `max_k |empirical - analytic|`; NaN with no replications.
    pub sup_distance: f64,
    /// Average of `K_n / m`; NaN with no replications.
    pub mean_proportion: f64,
}

/// Draws `replications` resamples of size `n` from `m` points.
pub fn simulate_coverage(n: u64, m: u64, replications: u64, seed: StreamSeed) -> Result<CoverageSimulation> {
    let analytic = coverage_pmf(n, m)?;
    let mut counts = vec![0u64; n.min(m) as usize + 1];
    let mut rng = seed.rng();
    for _ in 0..replications {
        counts[simulate_with(n, m, 1.0, &mut rng).occupancy as usize] += 1;
    }
    if replications == 0 {
        return Ok(CoverageSimulation {
            n,
            m,
            replications,
            counts,
            empirical: Pmf::empirical(&[]),
            sup_distance: f64::NAN,
            mean_proportion: f64::NAN,
        });
    }
    let reps = replications as f64;
    let probs = counts.iter().map(|&c| c as f64 / reps).collect();
    let empirical = Pmf::new(0, probs, crate::dist::PmfMeta::new(crate::dist::Method::Empirical, 0.0));
    let sup_distance = empirical.sup_distance(&analytic);
    let mean_proportion = counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / reps / m as f64;
    Ok(CoverageSimulation { n, m, replications, counts, empirical, sup_distance, mean_proportion })
}

/// `P(T_k = t) = NegOcc(t | m, k)`: resamples beyond `k` needed to cover `k`
/// distinct points.
pub fn excess_resamples_pmf(m: u64, k: u64, t_max: u64) -> Result<Pmf> {
    Ok(negocc_pmf(&NegOccParams::new(m, k, 1.0)?, t_max))
}

/// With `r` points already covered, the excess resamples needed to cover `k`
/// further points: `NegOcc(t | m - r, k, 1 - r/m)`.
pub fn excess_resamples_conditional_pmf(m: u64, r: u64, k: u64, t_max: u64) -> Result<Pmf> {
    if r >= m {
        return Err(invalid(format!("covered count r = {r} leaves no uncovered points among m = {m}")));
    }
    let theta = (m - r) as f64 / m as f64;
    Ok(negocc_pmf(&NegOccParams::new(m - r, k, theta)?, t_max))
}
