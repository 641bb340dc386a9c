mod common;

use common::allocation_counts;
use occkit::chain::StreamSeed;
use occkit::coverage::{
    coverage_mean_exact, coverage_moments, coverage_pmf, excess_resamples_pmf, required_resample_size,
    simulate_coverage,
};
use occkit::ExactReal;
use proptest::prelude::*;

#[test]
fn coverage_counts_match_enumeration() {
    for n in 1..=7 {
        for m in 1..=5 {
            let counts = allocation_counts(n, m);
            let total = (m as f64).powi(n as i32);
            let pmf = coverage_pmf(n, m).unwrap();
            for (k, c) in counts.iter().enumerate() {
                let c: f64 = c.to_string().parse().unwrap();
                assert!((pmf.prob(k as u64) - c / total).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn proportion_approaches_one_minus_exp() {
    for size in [10u64, 100, 1_000, 100_000] {
        let moments = coverage_moments(size, size).unwrap();
        let gap = (moments.mean_proportion - moments.asymptotic_mean).abs();
        assert!(gap < 1.0 / size as f64, "m={size} gap={gap}");
        let exact = coverage_mean_exact(size.min(200), size.min(200)).unwrap().to_f64();
        if size <= 200 {
            assert!((exact - moments.mean_proportion).abs() < 1e-14);
        }
    }
}

#[test]
fn exact_mean_is_rational() {
    let mean = coverage_mean_exact(3, 2).unwrap();
    assert_eq!(mean, ExactReal::ratio(7u64, 8u64));
}

#[test]
fn plan_is_minimal() {
    for (m, k, phi) in [(2u64, 2u64, 0.9), (10, 8, 0.5), (25, 20, 0.95), (50, 50, 0.5)] {
        let plan = required_resample_size(m, k, phi).unwrap();
        assert!(plan.achieved_probability >= phi);
        assert!(plan.previous_probability < phi);
        let at = coverage_pmf(plan.n_required, m).unwrap().sf(k);
        assert!((at - plan.achieved_probability).abs() < 1e-12);
    }
}

#[test]
fn plan_rejects_bad_targets() {
    assert!(required_resample_size(5, 6, 0.5).is_err());
    assert!(required_resample_size(5, 3, 1.0).is_err());
    assert!(required_resample_size(5, 3, -0.1).is_err());
}

#[test]
fn simulation_is_reproducible() {
    let a = simulate_coverage(12, 9, 2_000, StreamSeed::new(5)).unwrap();
    let b = simulate_coverage(12, 9, 2_000, StreamSeed::new(5)).unwrap();
    assert_eq!(a, b);
    let c = simulate_coverage(12, 9, 2_000, StreamSeed::new(6)).unwrap();
    assert_ne!(a.counts, c.counts);
}

#[test]
fn excess_resamples_mean_is_harmonic() {
    // covering all m points takes m H_m draws on average
    for m in 1..=6u64 {
        let pmf = excess_resamples_pmf(m, m, 400).unwrap();
        let mean: f64 = pmf.iter().map(|(t, p)| (t + m) as f64 * p).sum();
        let harmonic: f64 = (1..=m).map(|i| m as f64 / i as f64).sum();
        assert!((mean - harmonic).abs() < 1e-9, "m={m}");
    }
}

proptest! {
    #[test]
    fn coverage_sf_monotone_in_n(m in 1u64..30, k_frac in 0.0f64..=1.0, n in 0u64..60) {
        let k = (m as f64 * k_frac) as u64;
        let a = coverage_pmf(n, m).unwrap().sf(k);
        let b = coverage_pmf(n + 1, m).unwrap().sf(k);
        prop_assert!(b >= a - 1e-15);
    }
}
