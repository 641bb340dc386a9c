//! Brute-force oracles shared by the integration tests. Everything here is
//! deliberately naive: it enumerates outcomes instead of using any of the
//! recursions implemented in the library.

#![allow(dead_code)]

use num_bigint::BigInt;
use occkit::exact::binomial_big;
use occkit::ExactReal;

/// Visits every sequence in `{0..m}^n`.
pub fn for_each_allocation(n: u64, m: u64, mut f: impl FnMut(&[u64])) {
    let mut digits = vec![0u64; n as usize];
    loop {
        f(&digits);
        let mut i = 0;
        loop {
            if i == digits.len() {
                return;
            }
            digits[i] += 1;
            if digits[i] < m {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Number of allocations of `n` labelled balls to `m` bins that occupy
/// exactly `k` bins, indexed by `k`.
pub fn allocation_counts(n: u64, m: u64) -> Vec<BigInt> {
    let mut counts = vec![BigInt::from(0); m as usize + 1];
    for_each_allocation(n, m, |alloc| {
        let mask = alloc.iter().fold(0u64, |acc, &b| acc | (1 << b));
        counts[mask.count_ones() as usize] += 1;
    });
    counts
}

/// Classical occupancy pmf by counting allocations.
pub fn classical_pmf(n: u64, m: u64) -> Vec<ExactReal> {
    let total = BigInt::from(m).pow(n as u32);
    allocation_counts(n, m)
        .into_iter()
        .map(|c| ExactReal::from_integer(c) / ExactReal::from_integer(total.clone()))
        .collect()
}

/// Extended occupancy pmf by enumerating every bin sequence together with
/// every pattern of which balls occupy. A pattern with `q` occupying balls
/// has weight `theta^q (1 - theta)^(n - q) / m^n`.
pub fn extended_pmf(n: u64, m: u64, theta: &ExactReal) -> Vec<ExactReal> {
    // counts[q][k]
    let mut counts = vec![vec![0u64; m as usize + 1]; n as usize + 1];
    for_each_allocation(n, m, |alloc| {
        for flags in 0u64..(1 << n) {
            let mut mask = 0u64;
            for (i, &b) in alloc.iter().enumerate() {
                if flags >> i & 1 == 1 {
                    mask |= 1 << b;
                }
            }
            counts[flags.count_ones() as usize][mask.count_ones() as usize] += 1;
        }
    });
    let one_minus = &ExactReal::one() - theta;
    let scale = ExactReal::from_integer(BigInt::from(m).pow(n as u32));
    (0..=m as usize)
        .map(|k| {
            let mut acc = ExactReal::zero();
            for (q, row) in counts.iter().enumerate() {
                if row[k] > 0 {
                    let w = theta.pow(q as u32) * one_minus.pow(n as u32 - q as u32);
                    acc = acc + ExactReal::from(row[k]) * w;
                }
            }
            acc / scale.clone()
        })
        .collect()
}

/// Number of partitions of an `n`-set into `k` blocks, by walking restricted
/// growth strings.
pub fn set_partitions(n: u64, k: u64) -> u64 {
    fn walk(pos: u64, n: u64, blocks: u64, k: u64) -> u64 {
        if pos == n {
            return u64::from(blocks == k);
        }
        if blocks + (n - pos) < k {
            return 0;
        }
        let mut total = 0;
        for b in 0..=blocks {
            if b < k {
                total += walk(pos + 1, n, blocks.max(b + 1), k);
            }
        }
        total
    }
    if n == 0 {
        return u64::from(k == 0);
    }
    walk(0, n, 0, k)
}

/// `S(n, k, phi)` as a sum over vectors `j_1 + ... + j_k <= n - k` of
/// `phi^(n - k - sum j) * prod_i (phi + i)^(j_i)`.
pub fn noncentral_by_compositions(n: u64, k: u64, phi: &ExactReal) -> ExactReal {
    // h(i, left): sum over j_i..j_k with total at most `left`
    fn h(i: u64, k: u64, left: u64, phi: &ExactReal) -> ExactReal {
        if i > k {
            return phi.pow(left as u32);
        }
        let base = &ExactReal::from(i) + phi;
        let mut acc = ExactReal::zero();
        for j in 0..=left {
            acc = acc + base.pow(j as u32) * h(i + 1, k, left - j, phi);
        }
        acc
    }
    if k > n {
        return ExactReal::zero();
    }
    h(1, k, n - k, phi)
}

/// Binomial coefficient as an exact value.
pub fn choose(n: u64, k: u64) -> ExactReal {
    ExactReal::from_integer(binomial_big(n, k))
}

/// The rational noncentrality grid used by the identity tests.
pub fn phi_grid() -> Vec<ExactReal> {
    ["0", "1/2", "1", "3", "10"].iter().map(|s| s.parse().unwrap()).collect()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}
