//! Scenario configuration, read from TOML with unknown keys rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::wireless::MAX_CONDITION;

/// One value shared by every user, or one per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Shared(f64),
    Each(Vec<f64>),
}

impl PerUser {
    pub fn resolve(&self, users: usize) -> Result<Vec<f64>> {
        match self {
            PerUser::Shared(v) => Ok(vec![*v; users]),
            PerUser::Each(v) if v.len() == users => Ok(v.clone()),
            PerUser::Each(v) => Err(Error::Config(format!("{} per-user values for {users} users", v.len()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    UncodedZf,
    UncodedSdr,
    CodedSdr,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::UncodedZf => "uncoded_zf",
            Strategy::UncodedSdr => "uncoded_sdr",
            Strategy::CodedSdr => "coded_sdr",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncoded_zf" => Ok(Strategy::UncodedZf),
            "uncoded_sdr" => Ok(Strategy::UncodedSdr),
            "coded_sdr" => Ok(Strategy::CodedSdr),
            _ => Err(Error::Config(format!("unknown strategy `{s}`"))),
        }
    }
}

/// What each realization optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Minimum-power beams meeting the rate floors.
    Ee,
    /// Fastest delivery under the power budget.
    Delay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Popularity {
    Uniform,
    Zipf(f64),
    /// Probabilities over the library, shared by all users.
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub users: usize,
    pub antennas: usize,
    pub n_files: u64,
    pub file_size_bits: u64,
    pub bandwidth_hz: f64,
    pub noise_power: f64,
    pub eta_joules_per_bit: f64,
    /// Requested rate per user.
    pub rate_bps: PerUser,
    pub channel_variance: PerUser,
    /// Draws with a larger condition number are redrawn.
    pub max_condition: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            users: 8,
            antennas: 10,
            n_files: 1000,
            file_size_bits: 10_000_000,
            bandwidth_hz: 1e6,
            noise_power: 1.0,
            eta_joules_per_bit: 1e-6,
            rate_bps: PerUser::Shared(2e6),
            channel_variance: PerUser::Shared(1.0),
            max_condition: MAX_CONDITION,
        }
    }
}

/// Sweep axes; every combination is one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// `M_u / N`
    pub user_cache_fraction: Vec<f64>,
    /// `M_b / N`
    pub bs_cache_fraction: Vec<f64>,
    /// Sum power budget in dB relative to one power unit.
    pub power_db: Vec<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            user_cache_fraction: (0..10).map(|i| i as f64 / 10.0).collect(),
            bs_cache_fraction: vec![1.0],
            power_db: vec![10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub metric: Metric,
    pub strategies: Vec<Strategy>,
    pub popularity: Popularity,
    pub realizations: usize,
    pub base_seed: u64,
    /// Rate floor per user for the delay metric.
    pub delay_rate_floor_bps: f64,
    /// Largest number of multicast groups solved per coded session; more are
    /// subsampled and the sums extrapolated.
    pub max_subsets: Option<usize>,
    /// Gaussian randomization draws per relaxation.
    pub candidates: usize,
    /// Channel redraws allowed per realization.
    pub max_redraws: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Ee,
            strategies: vec![Strategy::UncodedZf, Strategy::UncodedSdr, Strategy::CodedSdr],
            popularity: Popularity::Uniform,
            realizations: 50,
            base_seed: 0,
            delay_rate_floor_bps: 0.0,
            max_subsets: None,
            candidates: 100,
            max_redraws: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub grid: GridConfig,
    pub run: RunConfig,
}

fn fractions_ok(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("grid `{name}` is empty")));
    }
    if let Some(x) = v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Config(format!("grid `{name}` value {x} outside [0, 1]")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.users == 0 || s.users > s.antennas {
            return Err(Error::Config(format!(
                "need 1 <= users <= antennas, got {} users and {} antennas",
                s.users, s.antennas
            )));
        }
        if s.n_files == 0 || s.file_size_bits == 0 {
            return Err(Error::Config("n_files and file_size_bits must be positive".into()));
        }
        for (name, v) in [("bandwidth_hz", s.bandwidth_hz), ("noise_power", s.noise_power), ("max_condition", s.max_condition)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{name}` must be positive and finite")));
            }
        }
        if !(s.eta_joules_per_bit >= 0.0 && s.eta_joules_per_bit.is_finite()) {
            return Err(Error::Config("`eta_joules_per_bit` must be nonnegative".into()));
        }
        if s.rate_bps.resolve(s.users)?.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Config("`rate_bps` must be nonnegative".into()));
        }
        if s.channel_variance.resolve(s.users)?.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("`channel_variance` must be positive".into()));
        }
        fractions_ok("user_cache_fraction", &self.grid.user_cache_fraction)?;
        fractions_ok("bs_cache_fraction", &self.grid.bs_cache_fraction)?;
        if self.grid.power_db.is_empty() {
            return Err(Error::Config("grid `power_db` is empty".into()));
        }
        if self.grid.power_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("grid `power_db` must be finite".into()));
        }
        let r = &self.run;
        if r.realizations == 0 {
            return Err(Error::Config("`realizations` must be at least 1".into()));
        }
        if r.strategies.is_empty() {
            return Err(Error::Config("`strategies` is empty".into()));
        }
        if !(r.delay_rate_floor_bps >= 0.0 && r.delay_rate_floor_bps.is_finite()) {
            return Err(Error::Config("`delay_rate_floor_bps` must be nonnegative".into()));
        }
        if r.max_subsets == Some(0) {
            return Err(Error::Config("`max_subsets` must be at least 1".into()));
        }
        match &r.popularity {
            Popularity::Uniform => {}
            Popularity::Zipf(a) if !(*a >= 0.0 && a.is_finite()) => {
                return Err(Error::Config(format!("Zipf exponent {a} must be nonnegative")));
            }
            Popularity::Custom(q) if q.len() as u64 != s.n_files => {
                return Err(Error::Config(format!("{} custom probabilities for {} files", q.len(), s.n_files)));
            }
            _ => {}
        }
        if r.popularity != Popularity::Uniform && r.strategies.contains(&Strategy::CodedSdr) {
            return Err(Error::Config("coded_sdr is only defined for uniform popularity".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
