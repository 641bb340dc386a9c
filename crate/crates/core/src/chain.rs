//! The occupancy number as a pure-birth Markov chain on `0..=m`.
//!
//! From state `t` the next ball occupies a new bin with probability
//! `theta (1 - t/m)` and otherwise leaves the state unchanged, giving a
//! bidiagonal transition matrix.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::{Method, Pmf, PmfMeta};
use crate::error::{invalid, Error, Result};
use crate::exact::{binomial_big, ExactReal};

/// Default bound on `m` for the spectral path, whose alternating sums lose
/// accuracy as `m` grows.
pub const SPECTRAL_LIMIT: u64 = 200;

fn validate(m: u64, theta: f64) -> Result<()> {
    if m == 0 {
        return Err(invalid("bin count m must be at least 1"));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(invalid(format!("theta must lie in (0, 1], got {theta}")));
    }
    Ok(())
}

/// The `(m+1) x (m+1)` transition matrix, stored as its two diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    m: u64,
    theta: f64,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(m: u64, theta: f64) -> Result<Self> {
        validate(m, theta)?;
        let sup: Vec<f64> = (0..=m).map(|t| theta * (m - t) as f64 / m as f64).collect();
        let diag = sup.iter().map(|s| 1.0 - s).collect();
        Ok(TransitionMatrix { m, theta, diag, sup })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `P[i][j]`.
    pub fn entry(&self, i: u64, j: u64) -> f64 {
        assert!(i <= self.m && j <= self.m, "index outside 0..={}", self.m);
        if j == i {
            self.diag[i as usize]
        } else if j == i + 1 {
            self.sup[i as usize]
        } else {
            0.0
        }
    }

    pub fn row(&self, i: u64) -> Vec<f64> {
        (0..=self.m).map(|j| self.entry(i, j)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..=self.m).map(|i| self.row(i)).collect()
    }

    /// Advances a distribution over states `offset..offset+v.len()` by one step,
    /// growing it by one state when not yet at `m`.
    pub fn advance(&self, v: &mut Vec<f64>, offset: u64) {
        if offset + (v.len() as u64) <= self.m {
            v.push(0.0);
        }
        for i in (0..v.len()).rev() {
            let state = offset as usize + i;
            let enter = if i > 0 { self.sup[state - 1] * v[i - 1] } else { 0.0 };
            v[i] = self.diag[state] * v[i] + enter;
        }
    }
}

/// Builds the transition matrix for `m` bins and occupancy probability `theta`.
pub fn build_transition(m: u64, theta: f64) -> Result<TransitionMatrix> {
    TransitionMatrix::new(m, theta)
}

/// Row `start_t` of `P^n`, i.e. the law of `K_{n'+n}` given `K_{n'} = start_t`,
/// by `n` bidiagonal vector products.
pub fn occupancy_by_power(n: u64, m: u64, theta: f64, start_t: u64) -> Result<Pmf> {
    let p = TransitionMatrix::new(m, theta)?;
    if start_t > m {
        return Err(invalid(format!("start state {start_t} exceeds m = {m}")));
    }
    let mut v = vec![1.0];
    for _ in 0..n {
        p.advance(&mut v, start_t);
    }
    Ok(Pmf::new(start_t, v, PmfMeta::new(Method::MatrixPower, 3.0 * (n as f64 + 1.0) * f64::EPSILON)))
}

/// `P = v diag(lambda) w` with `w = v^-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    m: u64,
    theta: f64,
    eigenvalues: Vec<f64>,
    v: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
}

/// Spectral decomposition with the default `m` limit.
pub fn spectral(m: u64, theta: f64) -> Result<SpectralDecomposition> {
    spectral_with_limit(m, theta, SPECTRAL_LIMIT)
}

pub fn spectral_with_limit(m: u64, theta: f64, limit: u64) -> Result<SpectralDecomposition> {
    validate(m, theta)?;
    if m > limit {
        return Err(Error::SpectralLimit { m, limit });
    }
    let (v_big, w_big) = eigenvectors_exact(m);
    let to_f64 = |rows: Vec<Vec<BigInt>>| -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|r| r.iter().map(|x| num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::NAN)).collect())
            .collect()
    };
    let eigenvalues = (0..=m).map(|i| 1.0 - theta * (m - i) as f64 / m as f64).collect();
    Ok(SpectralDecomposition { m, theta, eigenvalues, v: to_f64(v_big), w: to_f64(w_big) })
}

/// `v[i][j] = C(m-i, j-i)` and `w[i][j] = (-1)^(j-i) C(m-i, j-i)` as exact
/// integers (both upper triangular).
pub fn eigenvectors_exact(m: u64) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let size = m as usize + 1;
    let mut v = vec![vec![BigInt::from(0); size]; size];
    let mut w = v.clone();
    for i in 0..=m {
        for j in i..=m {
            let c = binomial_big(m - i, j - i);
            w[i as usize][j as usize] = if (j - i) % 2 == 0 { c.clone() } else { -c.clone() };
            v[i as usize][j as usize] = c;
        }
    }
    (v, w)
}

impl SpectralDecomposition {
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn w(&self) -> &[Vec<f64>] {
        &self.w
    }

    fn terms(&self, n: u64, t: u64, k: u64) -> impl Iterator<Item = f64> + '_ {
        let (t, k) = (t as usize, k as usize);
        (t..=k).map(move |i| self.eigenvalues[i].powf(n as f64) * self.v[t][i] * self.w[i][k])
    }

    /// `[P^n]_{t,k} = sum_i lambda_i^n v[t][i] w[i][k]`.
    pub fn occupancy_by_spectral(&self, n: u64, t: u64, k: u64) -> f64 {
        if k < t || k > self.m {
            return 0.0;
        }
        self.terms(n, t, k).sum()
    }

    /// Row `t` of `P^n` as a pmf; the error bound scales with the largest sum
    /// of absolute terms, which measures the cancellation.
    pub fn row_pmf(&self, n: u64, t: u64) -> Pmf {
        let mut worst = 0.0f64;
        let probs = (t..=self.m)
            .map(|k| {
                worst = worst.max(self.terms(n, t, k).map(f64::abs).sum());
                self.occupancy_by_spectral(n, t, k)
            })
            .collect();
        let bound = 4.0 * (self.m as f64 + 1.0) * worst * f64::EPSILON;
        Pmf::new(t, probs, PmfMeta::new(Method::Spectral, bound))
    }

    /// `v diag(lambda) w` evaluated in exact arithmetic (with `theta` taken
    /// as the exact value of its double), so the check measures the
    /// decomposition rather than cancellation in the product.
    pub fn reconstruct_exact(&self) -> Vec<Vec<ExactReal>> {
        let (v, w) = eigenvectors_exact(self.m);
        let theta = ExactReal::from_f64(self.theta).expect("theta is finite");
        let lambda: Vec<ExactReal> =
            (0..=self.m).map(|i| &ExactReal::one() - &(&theta * &ExactReal::ratio(self.m - i, self.m))).collect();
        let size = self.m as usize + 1;
        (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| {
                        (i..=j.max(i)).fold(ExactReal::zero(), |acc, l| {
                            acc + ExactReal::from_integer(&v[i][l] * &w[l][j]) * lambda[l].clone()
                        })
                    })
                    .collect()
            })
            .collect()
    }

    /// [`SpectralDecomposition::reconstruct_exact`] rounded to doubles.
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        self.reconstruct_exact().iter().map(|r| r.iter().map(ExactReal::to_f64).collect()).collect()
    }
}

/// Seed plus stream index for the counter-based ChaCha8 generator.
///
/// Distinct streams under one seed produce independent sequences, so
/// parallel batches stay reproducible: give batch `i` the seed
/// `base.substream(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamSeed {
    pub seed: u64,
    pub stream: u64,
}

impl StreamSeed {
    pub fn new(seed: u64) -> Self {
        StreamSeed { seed, stream: 0 }
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        StreamSeed { seed, stream }
    }

    /// The `i`-th child stream. Children of one parent never share a stream;
    /// streams are mixed so nested splits do not collide in practice.
    pub fn substream(self, i: u64) -> Self {
        let mixed = splitmix64(self.stream ^ splitmix64(i.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        StreamSeed { seed: self.seed, stream: mixed }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One realisation of the ball process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessSample {
    /// Bin (1-based) each ball occupies, `None` when it fell through.
    pub assignments: Vec<Option<u64>>,
    /// `N_{n, l}` for `l = 1..=m`, stored at index `l - 1`.
    pub bin_counts: Vec<u64>,
    /// `K_n`.
    pub occupancy: u64,
    /// `n_eff`.
    pub effective: u64,
}

impl ProcessSample {
    /// `K_0, K_1, ..., K_n`.
    pub fn trajectory(&self) -> Vec<u64> {
        let mut seen = vec![false; self.bin_counts.len()];
        let mut k = 0;
        let mut out = Vec::with_capacity(self.assignments.len() + 1);
        out.push(0);
        for a in &self.assignments {
            if let Some(bin) = a {
                let slot = &mut seen[(*bin - 1) as usize];
                if !*slot {
                    *slot = true;
                    k += 1;
                }
            }
            out.push(k);
        }
        out
    }
}

/// Allocates `n` balls uniformly to `m` bins, each occupying with probability
/// `theta`.
pub fn simulate_process(n: u64, m: u64, theta: f64, seed: StreamSeed) -> Result<ProcessSample> {
    validate(m, theta)?;
    Ok(simulate_with(n, m, theta, &mut seed.rng()))
}

/// As [`simulate_process`] but drawing from a caller-held generator.
pub fn simulate_with<R: Rng + ?Sized>(n: u64, m: u64, theta: f64, rng: &mut R) -> ProcessSample {
    let mut bin_counts = vec![0u64; m as usize];
    let mut assignments = Vec::with_capacity(n as usize);
    let (mut occupancy, mut effective) = (0, 0);
    for _ in 0..n {
        let bin = rng.random_range(0..m);
        let occupies = theta >= 1.0 || rng.random::<f64>() < theta;
        if occupies {
            let count = &mut bin_counts[bin as usize];
            if *count == 0 {
                occupancy += 1;
            }
            *count += 1;
            effective += 1;
            assignments.push(Some(bin + 1));
        } else {
            assignments.push(None);
        }
    }
    ProcessSample { assignments, bin_counts, occupancy, effective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{binomial_pmf, occ_conditional_pmf};
    use proptest::prelude::*;

    #[test]
    fn transition_examples() {
        let p = build_transition(2, 1.0).unwrap();
        assert_eq!(p.to_dense(), vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 0.0, 1.0]]);
        assert_eq!(build_transition(1, 1.0).unwrap().to_dense(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let p = build_transition(3, 0.5).unwrap();
        assert_eq!((p.entry(0, 0), p.entry(0, 1)), (0.5, 0.5));
        assert!(build_transition(0, 0.5).is_err());
        assert!(build_transition(3, 0.0).is_err());
        assert!(build_transition(3, 1.2).is_err());
    }

    #[test]
    fn power_examples() {
        let p = occupancy_by_power(2, 2, 1.0, 0).unwrap();
        assert_eq!((p.support_min(), p.probabilities()), (1, &[0.5, 0.5][..]));
        let p = occupancy_by_power(0, 4, 0.3, 2).unwrap();
        assert_eq!((p.support_min(), p.probabilities()), (2, &[1.0][..]));
        let p = occupancy_by_power(3, 3, 1.0, 0).unwrap();
        for (k, want) in [(1, 1.0 / 9.0), (2, 6.0 / 9.0), (3, 2.0 / 9.0)] {
            assert!((p.prob(k) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn spectral_examples() {
        let s = spectral(2, 1.0).unwrap();
        assert_eq!(s.eigenvalues(), &[0.0, 0.5, 1.0]);
        assert_eq!(s.v()[0], vec![1.0, 2.0, 1.0]);
        let s1 = spectral(1, 0.4).unwrap();
        assert_eq!(s1.w()[0][0] * s1.v()[0][1] + s1.w()[0][1] * s1.v()[1][1], 0.0);
        assert!(matches!(spectral(500, 0.5), Err(Error::SpectralLimit { .. })));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn exact_eigenvectors_are_inverse() {
        for m in 1..=20u64 {
            let (v, w) = eigenvectors_exact(m);
            let size = m as usize + 1;
            for i in 0..size {
                for j in 0..size {
                    let prod: BigInt = (0..size).map(|l| &w[i][l] * &v[l][j]).sum();
                    assert_eq!(prod, BigInt::from((i == j) as i32), "m={m} i={i} j={j}");
                }
            }
        }
    }

    #[test]
    fn reconstruction_and_ordering() {
        for m in 1..=30u64 {
            for &theta in &[0.3, 0.7, 1.0] {
                let s = spectral(m, theta).unwrap();
                let p = build_transition(m, theta).unwrap().to_dense();
                let r = s.reconstruct();
                for i in 0..=m as usize {
                    for j in 0..=m as usize {
                        assert!((r[i][j] - p[i][j]).abs() <= 1e-10 * p[i][j].abs().max(1.0), "m={m} {i},{j}");
                    }
                }
                assert!(s.eigenvalues().windows(2).all(|w| w[0] < w[1]));
                assert_eq!(*s.eigenvalues().last().unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn oracle_triangle() {
        for &theta in &[0.3, 0.7, 1.0] {
            for m in 1..=8u64 {
                let s = spectral(m, theta).unwrap();
                for n in 0..=12u64 {
                    for t in 0..=m {
                        let power = occupancy_by_power(n, m, theta, t).unwrap();
                        let spec = s.row_pmf(n, t);
                        let dist = occ_conditional_pmf(n, m, theta, t).unwrap();
                        for k in t..=m {
                            assert!((power.prob(k) - spec.prob(k)).abs() < 1e-10);
                            assert!((power.prob(k) - dist.prob(k)).abs() < 1e-10);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn stochastic_monotonicity() {
        let p = build_transition(9, 0.6).unwrap();
        for t in 0..9u64 {
            let a: Vec<f64> = p
                .row(t)
                .iter()
                .scan(0.0, |s, x| {
                    *s += x;
                    Some(*s)
                })
                .collect();
            let b: Vec<f64> = p
                .row(t + 1)
                .iter()
                .scan(0.0, |s, x| {
                    *s += x;
                    Some(*s)
                })
                .collect();
            assert!(a.iter().zip(&b).all(|(x, y)| x >= y));
        }
    }

    #[test]
    fn binomial_limit_for_many_bins() {
        for &theta in &[0.3, 0.5, 0.7] {
            for n in [1u64, 5, 10, 20] {
                let chain = occupancy_by_power(n, 1_000_000, theta, 0).unwrap();
                assert!(chain.tv_distance(&binomial_pmf(n, theta)) < 1e-4, "n={n} theta={theta}");
            }
        }
    }

    #[test]
    fn simulation_basics() {
        let empty = simulate_process(0, 5, 0.5, StreamSeed::new(1)).unwrap();
        assert_eq!((empty.occupancy, empty.effective, empty.assignments.len()), (0, 0, 0));
        let s = simulate_process(10, 12, 0.8, StreamSeed::new(7)).unwrap();
        assert_eq!(s, simulate_process(10, 12, 0.8, StreamSeed::new(7)).unwrap());
        assert_ne!(StreamSeed::new(7).substream(0), StreamSeed::new(7).substream(1));
    }

    #[test]
    fn simulation_fits_power_pmf() {
        let reps = 10_000u64;
        let (n, m) = (6u64, 5u64);
        let exact = occupancy_by_power(n, m, 1.0, 0).unwrap();
        let mut counts = vec![0u64; m as usize + 1];
        let mut rng = StreamSeed::new(2024).rng();
        for _ in 0..reps {
            counts[simulate_with(n, m, 1.0, &mut rng).occupancy as usize] += 1;
        }
        for k in 0..=m {
            let p = exact.prob(k);
            let sd = (reps as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[k as usize] as f64 - reps as f64 * p).abs() <= 3.0 * sd + 1e-9, "k={k}");
        }
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(m in 1u64..200, theta in 0.001f64..=1.0) {
            let p = build_transition(m, theta).unwrap();
            for t in 0..=m {
                let sum = p.entry(t, t) + if t < m { p.entry(t, t + 1) } else { 0.0 };
                prop_assert!((sum - 1.0).abs() <= f64::EPSILON);
                prop_assert!((0.0..=1.0).contains(&p.entry(t, t)));
            }
        }

        #[test]
        fn sample_invariants(n in 0u64..200, m in 1u64..40, theta in 0.01f64..=1.0, seed in any::<u64>()) {
            let s = simulate_process(n, m, theta, StreamSeed::new(seed)).unwrap();
            let occupied = s.bin_counts.iter().filter(|&&c| c > 0).count() as u64;
            prop_assert_eq!(s.occupancy, occupied);
            prop_assert_eq!(s.effective, s.assignments.iter().filter(|a| a.is_some()).count() as u64);
            prop_assert_eq!(s.bin_counts.iter().sum::<u64>(), s.effective);
            prop_assert!(s.occupancy <= s.effective.min(m));
            let path = s.trajectory();
            prop_assert!(path.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
            prop_assert_eq!(*path.last().unwrap(), s.occupancy);
        }
    }
}
