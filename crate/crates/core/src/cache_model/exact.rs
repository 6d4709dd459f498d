//! Finite-library expectation of the uncoded access load.
//!
//! `K` uniform independent requests over `N` files hit `l` distinct files in
//! `a(K, l) · N!/(N-l)!` of the `N^K` request vectors, where `a` satisfies
//! `a(m, l) = l·a(m-1, l) + a(m-1, l-1)` with `a(m, 1) = a(m, m) = 1`.
//! Each distinct file costs `Q(1 - M_u/N)` access bits.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use super::{CacheSizes, LibraryConfig};
use crate::error::{invalid, Result};

/// Largest user count evaluated with exact integers.
pub const EXACT_MAX_USERS: usize = 12;
/// Largest library evaluated with exact integers.
pub const EXACT_MAX_FILES: u64 = 10_000;

/// Row `a(K, 0..=K)` of the request-pattern counts. Index 0 is zero for
/// `K >= 1`.
pub fn request_pattern_counts(k: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for m in 1..=k {
        let mut next = vec![BigUint::zero(); m + 1];
        for l in 1..=m {
            let stay = if l < m { &row[l] * l } else { BigUint::zero() };
            next[l] = stay + &row[l - 1];
        }
        row = next;
    }
    row
}

/// `N!/(N-l)!`
pub fn falling_factorial(n: u64, l: usize) -> BigUint {
    (0..l as u64).fold(BigUint::one(), |acc, i| {
        if i >= n {
            BigUint::zero()
        } else {
            acc * (n - i)
        }
    })
}

/// Expected number of distinct files among `k` uniform requests.
fn expected_distinct_exact(k: usize, n: u64) -> f64 {
    let counts = request_pattern_counts(k);
    let mut weighted = BigUint::zero();
    for (l, a) in counts.iter().enumerate().skip(1) {
        weighted += a * falling_factorial(n, l) * l;
    }
    let total = BigUint::from(n).pow(k as u32);
    // Both fit comfortably in f64 range inside the exact regime.
    weighted.to_f64().unwrap_or(f64::INFINITY) / total.to_f64().unwrap_or(f64::INFINITY)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

/// Log-domain evaluation for sizes outside the exact regime. Relative error
/// grows roughly like `K` ulps per term.
fn expected_distinct_log(k: usize, n: u64) -> f64 {
    let mut row = vec![0.0_f64];
    for m in 1..=k {
        let mut next = vec![f64::NEG_INFINITY; m + 1];
        for l in 1..=m {
            let stay = if l < m {
                (l as f64).ln() + row[l]
            } else {
                f64::NEG_INFINITY
            };
            next[l] = log_add_exp(stay, row[l - 1]);
        }
        row = next;
    }
    let nf = n as f64;
    let log_total = k as f64 * nf.ln();
    let mut log_fall = 0.0;
    let mut sum = 0.0;
    for (l, log_a) in row.iter().enumerate().skip(1) {
        if l as u64 > n {
            break;
        }
        log_fall += (nf - (l - 1) as f64).ln();
        sum += l as f64 * (log_a + log_fall - log_total).exp();
    }
    sum
}

/// Exact expected uncoded access bits for a finite library, without the
/// large-library approximation behind the closed form.
pub fn exact_uncoded_access_throughput(
    k: usize,
    cache: &CacheSizes,
    lib: &LibraryConfig,
) -> Result<f64> {
    if k == 0 {
        return Err(invalid("users", "at least one user is required"));
    }
    cache.validate(lib)?;
    let distinct = if k <= EXACT_MAX_USERS && lib.n_files <= EXACT_MAX_FILES {
        expected_distinct_exact(k, lib.n_files)
    } else {
        expected_distinct_log(k, lib.n_files)
    };
    Ok(distinct * lib.q() * (1.0 - cache.user_fraction(lib)))
}
