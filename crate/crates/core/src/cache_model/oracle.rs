//! Bit-level Monte-Carlo execution of both caching schemes.
//!
//! Files are zero-padded up to whole subfiles (and whole cached fractions),
//! so the counts match the closed forms exactly only when the sizes divide.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{coded_params, CacheSizes, LibraryConfig};
use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, rng_from};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, std_err: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
        }
    }

    /// Standardized distance to `expected`. A zero standard error yields 0
    /// for an exact match and infinity otherwise.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        if self.std_err > 0.0 {
            diff / self.std_err
        } else if diff.abs() <= 1e-9 * expected.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        }
    }

    pub fn within_sigmas(&self, expected: f64, sigmas: f64) -> bool {
        self.z_score(expected).abs() <= sigmas
    }
}

/// Empirical link loads from an oracle run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub access: Estimate,
    pub backhaul: Estimate,
    pub trials: usize,
}

fn bernoulli_bits(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<bool> {
    if p <= 0.0 {
        return vec![false; len];
    }
    if p >= 1.0 {
        return vec![true; len];
    }
    (0..len).map(|_| rng.random_bool(p)).collect()
}

/// Uncoded placement and delivery: each user caches a random
/// `⌈M_u·Q/N⌉`-bit portion of every file, the BS holds each bit with
/// probability `M_b/N`, and requests are uniform and independent.
pub fn oracle_uncoded(
    k: usize,
    cache: &CacheSizes,
    lib: &LibraryConfig,
    trials: usize,
    seed: u64,
) -> Result<OracleReport> {
    if k == 0 {
        return Err(invalid("users", "at least one user is required"));
    }
    if trials == 0 {
        return Err(invalid("trials", "at least one trial is required"));
    }
    cache.validate(lib)?;
    let q = lib.file_size_bits as usize;
    let cached_bits = ((cache.user_fraction(lib) * q as f64) - 1e-9).ceil().max(0.0) as usize;
    let cached_bits = cached_bits.min(q);
    let p_bs = cache.bs_fraction(lib);

    let mut rng = rng_from(seed);
    let mut access = Vec::with_capacity(trials);
    let mut backhaul = Vec::with_capacity(trials);
    let mut held = vec![false; q];
    for _ in 0..trials {
        let mut bs_cache: HashMap<u64, Vec<bool>> = HashMap::new();
        let (mut ac, mut bh) = (0u64, 0u64);
        for _ in 0..k {
            let file = rng.random_range(0..lib.n_files);
            held.iter_mut().for_each(|b| *b = false);
            for pos in index::sample(&mut rng, q, cached_bits) {
                held[pos] = true;
            }
            let at_bs = bs_cache
                .entry(file)
                .or_insert_with(|| bernoulli_bits(&mut rng, q, p_bs));
            for (pos, &h) in held.iter().enumerate() {
                if !h {
                    ac += 1;
                    if !at_bs[pos] {
                        bh += 1;
                    }
                }
            }
        }
        access.push(ac as f64);
        backhaul.push(bh as f64);
    }
    Ok(OracleReport {
        access: Estimate::from_samples(&access),
        backhaul: Estimate::from_samples(&backhaul),
        trials,
    })
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub(crate) fn combinations(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        rec(0, n, size, &mut Vec::with_capacity(size), &mut out);
    }
    out
}

/// Coded placement and delivery for an integer cache point `m`.
///
/// Every file is split into `C(K, m)` subfiles indexed by the `m`-subsets of
/// users, and user `k` caches the subfiles whose index contains `k`. For each
/// `(m+1)`-subset `S` the BS multicasts the XOR of the subfiles each member
/// is missing. Every member's decoding is checked. A coded bit crosses the
/// backhaul unless all of its constituent bits are in the BS cache, each bit
/// being held independently with probability `bs_cache_prob`.
pub fn oracle_coded(
    k: usize,
    lib: &LibraryConfig,
    m: usize,
    bs_cache_prob: f64,
    trials: usize,
    seed: u64,
) -> Result<OracleReport> {
    if k == 0 {
        return Err(invalid("users", "at least one user is required"));
    }
    if m >= k {
        return Err(invalid("m", format!("m = {m} must be below K = {k}")));
    }
    if trials == 0 {
        return Err(invalid("trials", "at least one trial is required"));
    }
    if !(0.0..=1.0).contains(&bs_cache_prob) {
        return Err(invalid("bs_cache_prob", "must lie in [0, 1]"));
    }
    let labels = combinations(k, m);
    let label_index: HashMap<&[usize], usize> = labels
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_slice(), i))
        .collect();
    let sub_bits = (lib.file_size_bits as usize).div_ceil(labels.len());
    let padded = sub_bits * labels.len();
    let q = lib.file_size_bits as usize;
    let groups = combinations(k, m + 1);

    let mut rng = rng_from(seed);
    let mut access = Vec::with_capacity(trials);
    let mut backhaul = Vec::with_capacity(trials);
    for _ in 0..trials {
        let demands: Vec<u64> = (0..k).map(|_| rng.random_range(0..lib.n_files)).collect();
        let mut contents: HashMap<u64, Vec<bool>> = HashMap::new();
        let mut at_bs: HashMap<u64, Vec<bool>> = HashMap::new();
        for &f in &demands {
            if let Entry::Vacant(slot) = contents.entry(f) {
                let mut bits: Vec<bool> = (0..q).map(|_| rng.random_bool(0.5)).collect();
                bits.resize(padded, false);
                slot.insert(bits);
                at_bs.insert(f, bernoulli_bits(&mut rng, padded, bs_cache_prob));
            }
        }

        let (mut ac, mut bh) = (0u64, 0u64);
        for group in &groups {
            // Offset of the subfile F_{d_s, S \ {s}} for each member s.
            let parts: Vec<(u64, usize)> = group
                .iter()
                .map(|&s| {
                    let rest: Vec<usize> = group.iter().copied().filter(|&u| u != s).collect();
                    (demands[s], label_index[rest.as_slice()] * sub_bits)
                })
                .collect();
            let message: Vec<bool> = (0..sub_bits)
                .map(|j| parts.iter().fold(false, |x, &(f, off)| x ^ contents[&f][off + j]))
                .collect();
            ac += sub_bits as u64;
            bh += (0..sub_bits)
                .filter(|&j| !parts.iter().all(|&(f, off)| at_bs[&f][off + j]))
                .count() as u64;

            // Member i cancels the other members' subfiles, which it caches
            // because it belongs to each of their labels.
            for (i, &(f_i, off_i)) in parts.iter().enumerate() {
                for (j, &bit) in message.iter().enumerate() {
                    let side = parts
                        .iter()
                        .enumerate()
                        .filter(|&(o, _)| o != i)
                        .fold(false, |x, (_, &(f, off))| x ^ contents[&f][off + j]);
                    if bit ^ side != contents[&f_i][off_i + j] {
                        return Err(Error::Numerical(format!(
                            "coded delivery failed to decode for group {group:?}"
                        )));
                    }
                }
            }
        }
        access.push(ac as f64);
        backhaul.push(bh as f64);
    }
    Ok(OracleReport {
        access: Estimate::from_samples(&access),
        backhaul: Estimate::from_samples(&backhaul),
        trials,
    })
}

/// Fractional cache points: the first `(1-δ)Q` bits of every file are served
/// by the `m` scheme and the remaining `δQ` bits by the `m+1` scheme.
pub fn oracle_coded_split(
    k: usize,
    cache: &CacheSizes,
    lib: &LibraryConfig,
    trials: usize,
    seed: u64,
) -> Result<OracleReport> {
    let params = coded_params(k, cache, lib)?;
    let p = cache.bs_fraction(lib);
    let q = lib.file_size_bits;
    let first = ((1.0 - params.delta) * q as f64).round() as u64;
    let sessions = [(params.m, first), (params.m + 1, q - first)];

    let mut access = Estimate::default();
    let mut backhaul_var = 0.0;
    let mut backhaul_mean = 0.0;
    for (i, &(m, bits)) in sessions.iter().enumerate() {
        if bits == 0 || m >= k {
            continue;
        }
        let sub_lib = LibraryConfig::new(lib.n_files, bits)?;
        let r = oracle_coded(k, &sub_lib, m, p, trials, derive_seed(seed, &[i as u64]))?;
        access.mean += r.access.mean;
        access.std_err = (access.std_err.powi(2) + r.access.std_err.powi(2)).sqrt();
        backhaul_mean += r.backhaul.mean;
        backhaul_var += r.backhaul.std_err.powi(2);
    }
    Ok(OracleReport {
        access,
        backhaul: Estimate {
            mean: backhaul_mean,
            std_err: backhaul_var.sqrt(),
        },
        trials,
    })
}
