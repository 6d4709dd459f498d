//! Backhaul and access throughputs under uncoded and coded caching.
//!
//! The closed forms are expectations over random placement and uniform
//! requests, so they are real-valued. The [`oracle`] submodule executes the
//! placement and delivery at bit level and counts what actually crosses each
//! link; [`exact`] evaluates the finite-library expectation of the uncoded
//! access load with exact integer arithmetic.

pub mod exact;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use exact::{exact_uncoded_access_throughput, falling_factorial, request_pattern_counts};
pub use oracle::{oracle_coded, oracle_coded_split, oracle_uncoded, Estimate, OracleReport};

/// The content library: `n_files` files of `file_size_bits` bits each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LibraryConfig {
    pub n_files: u64,
    pub file_size_bits: u64,
}

impl LibraryConfig {
    pub fn new(n_files: u64, file_size_bits: u64) -> Result<Self> {
        if n_files == 0 {
            return Err(invalid("n_files", "library must hold at least one file"));
        }
        if file_size_bits == 0 {
            return Err(invalid("file_size_bits", "files must hold at least one bit"));
        }
        Ok(Self {
            n_files,
            file_size_bits,
        })
    }

    pub fn n(&self) -> f64 {
        self.n_files as f64
    }

    pub fn q(&self) -> f64 {
        self.file_size_bits as f64
    }
}

/// Cache sizes at the base station and at each user, measured in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheSizes {
    pub bs_cache_files: f64,
    pub user_cache_files: f64,
}

impl CacheSizes {
    pub fn new(bs_cache_files: f64, user_cache_files: f64) -> Self {
        Self {
            bs_cache_files,
            user_cache_files,
        }
    }

    /// Builds cache sizes from fractions of the library size.
    pub fn from_fractions(lib: &LibraryConfig, bs_frac: f64, user_frac: f64) -> Self {
        Self::new(bs_frac * lib.n(), user_frac * lib.n())
    }

    pub fn validate(&self, lib: &LibraryConfig) -> Result<()> {
        let n = lib.n();
        if !(0.0..=n).contains(&self.bs_cache_files) {
            return Err(invalid(
                "bs_cache_files",
                format!("{} outside [0, {n}]", self.bs_cache_files),
            ));
        }
        if !(0.0..=n).contains(&self.user_cache_files) {
            return Err(invalid(
                "user_cache_files",
                format!("{} outside [0, {n}]", self.user_cache_files),
            ));
        }
        Ok(())
    }

    /// `M_u / N`
    pub fn user_fraction(&self, lib: &LibraryConfig) -> f64 {
        self.user_cache_files / lib.n()
    }

    /// `M_b / N`
    pub fn bs_fraction(&self, lib: &LibraryConfig) -> f64 {
        self.bs_cache_files / lib.n()
    }
}

/// Integer and fractional parts of `K·M_u/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodedParams {
    pub m: usize,
    pub delta: f64,
}

/// Bits carried by the backhaul and the access links for one request round.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Throughputs {
    pub backhaul_bits: f64,
    pub access_bits: f64,
}

/// File indices requested by each user (zero-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestVector {
    pub demands: Vec<usize>,
}

impl RequestVector {
    pub fn new(demands: Vec<usize>, lib: &LibraryConfig) -> Result<Self> {
        if let Some(&bad) = demands.iter().find(|&&d| d as u64 >= lib.n_files) {
            return Err(invalid(
                "demands",
                format!("file index {bad} outside library of {}", lib.n_files),
            ));
        }
        Ok(Self { demands })
    }

    pub fn len(&self) -> usize {
        self.demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demands.is_empty()
    }
}

fn check_users(k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("users", "at least one user is required"));
    }
    Ok(())
}

pub fn coded_params(k: usize, cache: &CacheSizes, lib: &LibraryConfig) -> Result<CodedParams> {
    check_users(k)?;
    cache.validate(lib)?;
    let t = k as f64 * cache.user_cache_files / lib.n();
    // Snap values that are integers up to rounding noise, e.g. 8 * 0.3 * 1000 / 1000.
    let nearest = t.round();
    let t = if (t - nearest).abs() <= 1e-9 * t.max(1.0) {
        nearest
    } else {
        t
    };
    let m = t.floor();
    Ok(CodedParams {
        m: m as usize,
        delta: t - m,
    })
}

/// Uncoded caching: every user independently receives the part of its file
/// that is missing from its own cache.
pub fn uncoded_throughput(k: usize, cache: &CacheSizes, lib: &LibraryConfig) -> Result<Throughputs> {
    check_users(k)?;
    cache.validate(lib)?;
    let access = k as f64 * lib.q() * (1.0 - cache.user_fraction(lib));
    Ok(Throughputs {
        access_bits: access,
        backhaul_bits: access * (1.0 - cache.bs_fraction(lib)),
    })
}

/// Access bits of one coded-delivery session with `m` cached subfile layers,
/// for files of `q` bits.
pub(crate) fn coded_session_bits(k: usize, m: usize, q: f64) -> f64 {
    if m >= k {
        return 0.0;
    }
    q * (k - m) as f64 / (m + 1) as f64
}

/// One coded delivery session of the time-split scheme: multicast groups of
/// `m + 1` users serving `access_bits` bits in total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodedSession {
    pub m: usize,
    pub weight: f64,
    pub access_bits: f64,
    pub backhaul_bits: f64,
}

impl CodedSession {
    pub fn group_size(&self) -> usize {
        self.m + 1
    }
}

/// Splits coded delivery into its (at most two) time-split sessions. Sessions
/// that carry no bits are dropped.
pub fn coded_sessions(k: usize, cache: &CacheSizes, lib: &LibraryConfig) -> Result<Vec<CodedSession>> {
    let CodedParams { m, delta } = coded_params(k, cache, lib)?;
    let p = cache.bs_fraction(lib);
    let q = lib.q();
    let mut sessions = Vec::with_capacity(2);
    for (mm, weight) in [(m, 1.0 - delta), (m + 1, delta)] {
        if weight <= 0.0 || mm >= k {
            continue;
        }
        let access = weight * coded_session_bits(k, mm, q);
        if access <= 0.0 {
            continue;
        }
        sessions.push(CodedSession {
            m: mm,
            weight,
            access_bits: access,
            backhaul_bits: access * (1.0 - p.powi(mm as i32 + 1)),
        });
    }
    Ok(sessions)
}

/// Coded caching with time-splitting between the two neighbouring integer
/// cache points.
pub fn coded_throughput(k: usize, cache: &CacheSizes, lib: &LibraryConfig) -> Result<Throughputs> {
    let sessions = coded_sessions(k, cache, lib)?;
    Ok(sessions.iter().fold(Throughputs::default(), |acc, s| Throughputs {
        access_bits: acc.access_bits + s.access_bits,
        backhaul_bits: acc.backhaul_bits + s.backhaul_bits,
    }))
}

/// `n choose r` as a float; exact for the sizes used here.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
