//! Rayleigh channels, zero-forcing directions, and achievable rates for
//! unicast and physical-layer multicast transmission.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{gain, norm_sqr, CMatrix, CVector, C64};
use crate::rng::rng_from;

/// Condition number above which a channel is treated as singular.
pub const MAX_CONDITION: f64 = 1e6;

/// Channel vectors `h_k ∈ C^L` of `K` users, stored as the columns of an
/// `L × K` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    columns: CMatrix,
    variances: Vec<f64>,
}

impl ChannelMatrix {
    /// Wraps explicit channel vectors (one per user, all of length `L`).
    pub fn from_user_vectors(users: &[CVector], variances: Option<Vec<f64>>) -> Result<Self> {
        let Some(first) = users.first() else {
            return Err(invalid("users", "at least one user is required"));
        };
        let l = first.len();
        if users.iter().any(|h| h.len() != l) {
            return Err(Error::Dimension("channel vectors differ in length".into()));
        }
        if users.len() > l {
            return Err(invalid(
                "users",
                format!("{} users exceed {l} antennas", users.len()),
            ));
        }
        if users.iter().flat_map(|h| h.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(invalid("channel", "entries must be finite"));
        }
        let variances = variances.unwrap_or_else(|| vec![1.0; users.len()]);
        if variances.len() != users.len() {
            return Err(Error::Dimension("one variance per user is required".into()));
        }
        Ok(Self {
            columns: CMatrix::from_columns(users),
            variances,
        })
    }

    pub fn users(&self) -> usize {
        self.columns.ncols()
    }

    pub fn antennas(&self) -> usize {
        self.columns.nrows()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Channel vector of user `k`.
    pub fn user(&self, k: usize) -> CVector {
        self.columns.column(k).into_owned()
    }

    /// `L × K` matrix whose columns are the channel vectors.
    pub fn columns(&self) -> &CMatrix {
        &self.columns
    }

    /// Restricts to the listed users, preserving their order.
    pub fn subset(&self, users: &[usize]) -> Result<Self> {
        let vectors: Vec<CVector> = users.iter().map(|&k| self.user(k)).collect();
        let vars = users.iter().map(|&k| self.variances[k]).collect();
        Self::from_user_vectors(&vectors, Some(vars))
    }

    /// Multiplies every channel by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            columns: &self.columns * C64::new(c, 0.0),
            variances: self.variances.iter().map(|v| v * c * c).collect(),
        }
    }

    /// Ratio of the largest to smallest singular value.
    pub fn condition_number(&self) -> f64 {
        let sv = self.columns.clone().svd(false, false).singular_values;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Draws i.i.d. circularly-symmetric complex Gaussian channels; user `k` has
/// covariance `variances[k]·I_L`.
pub fn sample_channels(k: usize, l: usize, variances: &[f64], seed: u64) -> Result<ChannelMatrix> {
    if k == 0 {
        return Err(invalid("users", "at least one user is required"));
    }
    if k > l {
        return Err(invalid("users", format!("{k} users exceed {l} antennas")));
    }
    if variances.len() != k {
        return Err(Error::Dimension(format!(
            "{} variances for {k} users",
            variances.len()
        )));
    }
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(invalid("variances", format!("{v} is not a positive variance")));
    }
    let mut rng = rng_from(seed);
    let users: Vec<CVector> = variances
        .iter()
        .map(|&var| {
            let s = (var / 2.0).sqrt();
            CVector::from_fn(l, |_, _| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(s * re, s * im)
            })
        })
        .collect();
    ChannelMatrix::from_user_vectors(&users, Some(variances.to_vec()))
}

/// Columns of `Hᴴ(H Hᴴ)⁻¹`: direction `h̃_k` satisfies `h_lᴴ h̃_k = δ_lk`.
pub fn zf_directions(h: &ChannelMatrix) -> Result<Vec<CVector>> {
    let cond = h.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned {
            cond,
            limit: MAX_CONDITION,
        });
    }
    let cols = h.columns();
    let gram = cols.adjoint() * cols;
    let inv = gram
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("Gram matrix is singular".into()))?;
    let dirs = cols * inv;
    Ok((0..h.users()).map(|k| dirs.column(k).into_owned()).collect())
}

/// Per-user SINR with every other beam treated as interference.
pub fn unicast_sinr(h: &ChannelMatrix, beams: &[CVector], noise: f64) -> Result<Vec<f64>> {
    if beams.len() != h.users() {
        return Err(Error::Dimension(format!(
            "{} beams for {} users",
            beams.len(),
            h.users()
        )));
    }
    if beams.iter().any(|w| w.len() != h.antennas()) {
        return Err(Error::Dimension("beam length differs from antenna count".into()));
    }
    if !(noise > 0.0) {
        return Err(invalid("noise", "noise power must be positive"));
    }
    Ok((0..h.users())
        .map(|k| {
            let hk = h.user(k);
            let signal = gain(&hk, &beams[k]);
            let interference: f64 = beams
                .iter()
                .enumerate()
                .filter(|&(l, _)| l != k)
                .map(|(_, w)| gain(&hk, w))
                .sum();
            signal / (interference + noise)
        })
        .collect())
}

/// `B log₂(1 + SINR_k)` for each user.
pub fn unicast_rates(h: &ChannelMatrix, beams: &[CVector], noise: f64, bandwidth: f64) -> Result<Vec<f64>> {
    Ok(unicast_sinr(h, beams, noise)?
        .into_iter()
        .map(|s| bandwidth * (1.0 + s).log2())
        .collect())
}

/// Smallest received SNR among the group members for one common beam.
pub fn multicast_snr(h: &ChannelMatrix, group: &[usize], beam: &CVector, noise: f64) -> Result<f64> {
    if group.is_empty() {
        return Err(invalid("group", "multicast group must be nonempty"));
    }
    if !(noise > 0.0) {
        return Err(invalid("noise", "noise power must be positive"));
    }
    if beam.len() != h.antennas() {
        return Err(Error::Dimension("beam length differs from antenna count".into()));
    }
    Ok(group
        .iter()
        .map(|&k| gain(&h.user(k), beam) / noise)
        .fold(f64::INFINITY, f64::min))
}

/// Common rate of a multicast beam: the weakest member's rate.
pub fn multicast_rate(h: &ChannelMatrix, group: &[usize], beam: &CVector, noise: f64, bandwidth: f64) -> Result<f64> {
    Ok(bandwidth * (1.0 + multicast_snr(h, group, beam, noise)?).log2())
}

/// How a per-user request rate is converted to the rate the access link must
/// sustain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QosRule {
    /// Only the uncached fraction `1 - M_u/N` is sent.
    Uncoded { user_fraction: f64 },
    /// Each user is active in `C(K-1, m)` of the `C(K, m+1)` multicast slots.
    Coded { users: usize, m: usize },
}

impl QosRule {
    pub fn effective_rate(&self, gamma: f64) -> f64 {
        match *self {
            QosRule::Uncoded { user_fraction } => (1.0 - user_fraction).max(0.0) * gamma,
            QosRule::Coded { users, m } => {
                if m >= users {
                    0.0
                } else {
                    gamma * (users - m) as f64 / (m + 1) as f64
                }
            }
        }
    }
}

/// Rate targets and their equivalent SINR floors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QosTargets {
    pub per_user_rate: Vec<f64>,
    pub effective_rate: Vec<f64>,
    pub sinr_floor: Vec<f64>,
    pub bandwidth: f64,
}

/// SINR needed to sustain `rate` over `bandwidth`.
pub fn sinr_for_rate(rate: f64, bandwidth: f64) -> f64 {
    (rate / bandwidth).exp2() - 1.0
}

pub fn qos_targets(rule: QosRule, gamma: &[f64], bandwidth: f64) -> Result<QosTargets> {
    if !(bandwidth > 0.0) {
        return Err(invalid("bandwidth", "must be positive"));
    }
    // A zero rate means no floor.
    if let Some(g) = gamma.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
        return Err(invalid("gamma", format!("{g} is not a non-negative rate")));
    }
    let effective: Vec<f64> = gamma.iter().map(|&g| rule.effective_rate(g)).collect();
    Ok(QosTargets {
        per_user_rate: gamma.to_vec(),
        sinr_floor: effective.iter().map(|&r| sinr_for_rate(r, bandwidth)).collect(),
        effective_rate: effective,
        bandwidth,
    })
}

impl QosTargets {
    pub fn users(&self) -> usize {
        self.sinr_floor.len()
    }

    /// Keeps only the listed users.
    pub fn subset(&self, users: &[usize]) -> Self {
        let pick = |v: &[f64]| users.iter().map(|&k| v[k]).collect::<Vec<_>>();
        Self {
            per_user_rate: pick(&self.per_user_rate),
            effective_rate: pick(&self.effective_rate),
            sinr_floor: pick(&self.sinr_floor),
            bandwidth: self.bandwidth,
        }
    }
}

/// Who a beam serves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    User(usize),
    Group(Vec<usize>),
}

/// Beamformers with the rates they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingSolution {
    pub targets: Vec<Target>,
    pub beams: Vec<CVector>,
    pub rates: Vec<f64>,
    pub total_power: f64,
}

impl PrecodingSolution {
    pub fn new(targets: Vec<Target>, beams: Vec<CVector>, rates: Vec<f64>) -> Self {
        let total_power = beams.iter().map(norm_sqr).sum();
        Self {
            targets,
            beams,
            rates,
            total_power,
        }
    }

    pub fn powers(&self) -> Vec<f64> {
        self.beams.iter().map(norm_sqr).collect()
    }
}
