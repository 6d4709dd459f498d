//! Energy efficiency of both delivery strategies and the beamforming designs
//! that maximize it.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cache_model::{
    binomial, coded_sessions, uncoded_throughput, CacheSizes, CodedSession, LibraryConfig,
};
use crate::error::{invalid, Error, Result};
use crate::linalg::{gain, norm_sqr, outer, CMatrix, CVector, C64};
use crate::sdp::{extract_rank1, power_control, Constraint, HermitianSdp, IpmOptions, Sense};
use crate::wireless::{
    multicast_rate, sinr_for_rate, unicast_rates, zf_directions, ChannelMatrix, PrecodingSolution,
    QosTargets, Target,
};

/// Bits per joule, or a marker for deliveries that spend no energy at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EnergyEfficiency {
    Finite(f64),
    ZeroEnergy,
}

impl EnergyEfficiency {
    /// Numeric view; `ZeroEnergy` maps to infinity.
    pub fn value(&self) -> f64 {
        match *self {
            EnergyEfficiency::Finite(v) => v,
            EnergyEfficiency::ZeroEnergy => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, EnergyEfficiency::Finite(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub backhaul_joules: f64,
    pub access_joules: f64,
    pub total_joules: f64,
    pub delivered_bits: f64,
    pub ee_bits_per_joule: EnergyEfficiency,
}

impl EnergyBreakdown {
    pub fn new(delivered_bits: f64, backhaul_joules: f64, access_joules: f64) -> Self {
        let total_joules = backhaul_joules + access_joules;
        let ee = if total_joules > 0.0 {
            EnergyEfficiency::Finite(delivered_bits / total_joules)
        } else {
            EnergyEfficiency::ZeroEnergy
        };
        Self {
            backhaul_joules,
            access_joules,
            total_joules,
            delivered_bits,
            ee_bits_per_joule: ee,
        }
    }

    pub fn ee(&self) -> f64 {
        self.ee_bits_per_joule.value()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "backhaul price must be a finite nonnegative J/bit"));
    }
    Ok(())
}

/// Unicast energy for beams that each carry `bits_per_user` bits.
pub(crate) fn unicast_access_joules(bits_per_user: f64, beams: &[CVector], rates: &[f64], users: &[usize]) -> Result<f64> {
    if bits_per_user <= 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for ((w, &r), &k) in beams.iter().zip(rates).zip(users) {
        if !(r > 0.0) {
            return Err(Error::ZeroRate { user: k });
        }
        acc += norm_sqr(w) / r;
    }
    Ok(bits_per_user * acc)
}

fn user_of(target: &Target, fallback: usize) -> usize {
    match target {
        Target::User(k) => *k,
        Target::Group(g) => g.first().copied().unwrap_or(fallback),
    }
}

/// Energy of uncoded delivery: each user's missing `Q(1 − M_u/N)` bits are
/// unicast at its achieved rate.
pub fn ee_uncoded(
    precoding: &PrecodingSolution,
    k: usize,
    cache: &CacheSizes,
    lib: &LibraryConfig,
    eta: f64,
) -> Result<EnergyBreakdown> {
    check_eta(eta)?;
    if precoding.beams.len() != k || precoding.rates.len() != k {
        return Err(Error::Dimension(format!(
            "{} beams and {} rates for {k} users",
            precoding.beams.len(),
            precoding.rates.len()
        )));
    }
    let thr = uncoded_throughput(k, cache, lib)?;
    let users: Vec<usize> = precoding
        .targets
        .iter()
        .enumerate()
        .map(|(i, t)| user_of(t, i))
        .collect();
    let per_user = lib.q() * (1.0 - cache.user_fraction(lib));
    let access = unicast_access_joules(per_user, &precoding.beams, &precoding.rates, &users)?;
    Ok(EnergyBreakdown::new(
        k as f64 * lib.q(),
        eta * thr.backhaul_bits,
        access,
    ))
}

/// All `size`-subsets of `0..k` in lexicographic order.
pub fn user_subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    crate::cache_model::oracle::combinations(k, size)
}

fn session_power_per_rate(session: &CodedSession, k: usize, sol: &PrecodingSolution) -> Result<f64> {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut acc = 0.0;
    for ((t, w), &r) in sol.targets.iter().zip(&sol.beams).zip(&sol.rates) {
        let Target::Group(g) = t else {
            return Err(invalid("targets", "coded sessions are served by group beams"));
        };
        let mut g = g.clone();
        g.sort_unstable();
        if g.len() != session.group_size() {
            return Err(Error::Dimension(format!(
                "group {g:?} in a session with groups of {}",
                session.group_size()
            )));
        }
        if !(r > 0.0) {
            return Err(Error::ZeroRate { user: g[0] });
        }
        acc += norm_sqr(w) / r;
        seen.insert(g);
    }
    for s in user_subsets(k, session.group_size()) {
        if !seen.contains(&s) {
            return Err(Error::MissingSubset(s));
        }
    }
    Ok(acc)
}

/// Energy of coded delivery. `per_session` holds one solution per entry of
/// [`coded_sessions`], with a beam for every multicast group of that session.
pub fn ee_coded(
    per_session: &[PrecodingSolution],
    k: usize,
    cache: &CacheSizes,
    lib: &LibraryConfig,
    eta: f64,
) -> Result<EnergyBreakdown> {
    check_eta(eta)?;
    let sessions = coded_sessions(k, cache, lib)?;
    if sessions.len() != per_session.len() {
        return Err(Error::Dimension(format!(
            "{} solutions for {} coded sessions",
            per_session.len(),
            sessions.len()
        )));
    }
    let mut sums = Vec::with_capacity(sessions.len());
    for (s, sol) in sessions.iter().zip(per_session) {
        sums.push(session_power_per_rate(s, k, sol)?);
    }
    Ok(assemble_coded(&sessions, &sums, k, lib, eta))
}

/// `ηQ_BH + Σ_sessions (Q_AC,s / C(K, m_s+1)) · Σ_S P_S/R_S` from per-session
/// sums of power over rate.
pub(crate) fn assemble_coded(
    sessions: &[CodedSession],
    power_per_rate_sums: &[f64],
    k: usize,
    lib: &LibraryConfig,
    eta: f64,
) -> EnergyBreakdown {
    let mut backhaul_bits = 0.0;
    let mut access = 0.0;
    for (s, sum) in sessions.iter().zip(power_per_rate_sums) {
        backhaul_bits += s.backhaul_bits;
        access += s.access_bits / binomial(k, s.group_size()) * sum;
    }
    EnergyBreakdown::new(k as f64 * lib.q(), eta * backhaul_bits, access)
}

/// Closed-form EE of uncoded delivery with ZF beams at minimum power.
#[allow(clippy::too_many_arguments)]
pub fn zf_closed_form_ee(
    zf_norms_sqr: &[f64],
    zeta: &[f64],
    gamma_bar: &[f64],
    noise: f64,
    cache: &CacheSizes,
    lib: &LibraryConfig,
    eta: f64,
) -> EnergyEfficiency {
    let k = zeta.len() as f64;
    let mu = cache.user_fraction(lib);
    let nu = cache.bs_fraction(lib);
    let access: f64 = zf_norms_sqr
        .iter()
        .zip(zeta)
        .zip(gamma_bar)
        .filter(|&((_, &z), _)| z > 0.0)
        .map(|((a, z), g)| noise * z * a / g)
        .sum();
    let denom = (1.0 - mu) * (eta * k * (1.0 - nu) + access);
    if denom > 0.0 {
        EnergyEfficiency::Finite(k / denom)
    } else {
        EnergyEfficiency::ZeroEnergy
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZfDesign {
    pub powers: Vec<f64>,
    pub precoding: PrecodingSolution,
    pub energy: EnergyBreakdown,
}

/// ZF beams at the smallest powers meeting the SINR floors, `p_k = ζ_k σ²`.
pub fn zf_ee_max(
    h: &ChannelMatrix,
    qos: &QosTargets,
    noise: f64,
    cache: &CacheSizes,
    lib: &LibraryConfig,
    eta: f64,
) -> Result<ZfDesign> {
    let k = h.users();
    if qos.users() != k {
        return Err(Error::Dimension(format!("{} QoS targets for {k} users", qos.users())));
    }
    let dirs = zf_directions(h)?;
    let powers: Vec<f64> = qos.sinr_floor.iter().map(|z| z * noise).collect();
    let beams: Vec<CVector> = dirs
        .iter()
        .zip(&powers)
        .map(|(d, p)| d * C64::new(p.sqrt(), 0.0))
        .collect();
    let rates = unicast_rates(h, &beams, noise, qos.bandwidth)?;
    let precoding = PrecodingSolution::new((0..k).map(Target::User).collect(), beams, rates);
    let energy = ee_uncoded(&precoding, k, cache, lib, eta)?;
    Ok(ZfDesign {
        powers,
        precoding,
        energy,
    })
}

/// Settings shared by the relaxation-based designs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdrOptions {
    pub ipm: IpmOptions,
    /// Gaussian randomization draws besides the principal component.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for SdrOptions {
    fn default() -> Self {
        Self {
            ipm: IpmOptions::default(),
            candidates: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdrDesign {
    pub precoding: PrecodingSolution,
    /// Optimal value of the relaxation, a lower bound on any beam power.
    pub relaxation_power: f64,
    /// Largest `λ₂/λ₁` across the relaxed blocks.
    pub eigen_ratio: f64,
}

/// `gains[(k, j)] = |h_kᴴ d_j|²` for the listed users and directions.
pub(crate) fn gain_matrix(h: &ChannelMatrix, users: &[usize], dirs: &[CVector]) -> DMatrix<f64> {
    let hs: Vec<CVector> = users.iter().map(|&k| h.user(k)).collect();
    DMatrix::from_fn(users.len(), dirs.len(), |r, c| gain(&hs[r], &dirs[c]))
}

pub(crate) fn unit(v: &CVector) -> Option<CVector> {
    let n = norm_sqr(v).sqrt();
    (n > 0.0 && n.is_finite()).then(|| v / C64::new(n, 0.0))
}

/// Relaxed multiuser SINR problem over `users`:
/// `min Σ Tr(X_k)` s.t. `Tr(A_k X_k) − t_k Σ_{l≠k} Tr(A_k X_l) ≥ t_k σ²`.
pub(crate) fn multiuser_power_sdp(h: &ChannelMatrix, users: &[usize], targets: &[f64], noise: f64, budget: Option<f64>) -> HermitianSdp {
    let l = h.antennas();
    let n = users.len();
    let mut p = HermitianSdp::new(vec![l; n]);
    for j in 0..n {
        p.set_objective(j, CMatrix::identity(l, l));
    }
    for (i, &k) in users.iter().enumerate() {
        let a = outer(&h.user(k));
        let terms = (0..n)
            .map(|j| {
                if j == i {
                    (j, a.clone())
                } else {
                    (j, &a * C64::new(-targets[i], 0.0))
                }
            })
            .collect();
        p.add_constraint(Constraint::new(terms, Sense::Ge, targets[i] * noise));
    }
    if let Some(budget) = budget {
        let terms = (0..n).map(|j| (j, CMatrix::identity(l, l))).collect();
        p.add_constraint(Constraint::new(terms, Sense::Le, budget));
    }
    p
}

/// Beams for `users` from relaxed blocks: candidate directions are powered by
/// power control to meet `targets` exactly and the cheapest set is kept. ZF
/// directions are scored too, so the result never needs more power than ZF.
pub(crate) fn extract_unicast(
    h: &ChannelMatrix,
    users: &[usize],
    targets: &[f64],
    noise: f64,
    blocks: &[CMatrix],
    opts: &SdrOptions,
) -> Result<(Vec<CVector>, f64)> {
    let score = |cand: &[CVector]| -> Option<(Vec<CVector>, f64)> {
        let dirs: Option<Vec<CVector>> = cand.iter().map(unit).collect();
        let dirs = dirs?;
        let g = gain_matrix(h, users, &dirs);
        let p = power_control(&g, targets, noise)?;
        let beams = dirs
            .iter()
            .zip(&p)
            .map(|(d, &pk)| d * C64::new(pk.sqrt(), 0.0))
            .collect();
        Some((beams, p.iter().sum()))
    };
    let sdr = extract_rank1(blocks, opts.candidates, opts.seed, score);
    let zf = h
        .subset(users)
        .and_then(|sub| zf_directions(&sub))
        .ok()
        .and_then(|d| score(&d));
    let eigen_ratio = sdr.as_ref().map(|r| r.eigen_ratio).unwrap_or(1.0);
    match (sdr, zf) {
        (Ok(r), Some(z)) if z.1 < r.cost => Ok((z.0, eigen_ratio)),
        (Ok(r), _) => Ok((r.beams, eigen_ratio)),
        (Err(_), Some(z)) => Ok((z.0, eigen_ratio)),
        (Err(e), None) => Err(e),
    }
}

/// Minimum-power unicast beams meeting every SINR floor, by semidefinite
/// relaxation over the users in `active`.
pub fn sdr_ee_max_uncoded(
    h: &ChannelMatrix,
    qos: &QosTargets,
    active: &[usize],
    noise: f64,
    opts: &SdrOptions,
) -> Result<SdrDesign> {
    if qos.users() != h.users() {
        return Err(Error::Dimension(format!(
            "{} QoS targets for {} users",
            qos.users(),
            h.users()
        )));
    }
    if active.iter().any(|&k| k >= h.users()) {
        return Err(invalid("active", "user index out of range"));
    }
    if active.is_empty() {
        return Ok(SdrDesign {
            precoding: PrecodingSolution::new(vec![], vec![], vec![]),
            relaxation_power: 0.0,
            eigen_ratio: 0.0,
        });
    }
    let targets: Vec<f64> = active.iter().map(|&k| qos.sinr_floor[k]).collect();
    let sol = multiuser_power_sdp(h, active, &targets, noise, None)
        .solve(&opts.ipm)?
        .into_optimal()?;
    let (beams, eigen_ratio) = extract_unicast(h, active, &targets, noise, &sol.blocks, opts)?;
    let sub = h.subset(active)?;
    let rates = unicast_rates(&sub, &beams, noise, qos.bandwidth)?;
    Ok(SdrDesign {
        precoding: PrecodingSolution::new(active.iter().map(|&k| Target::User(k)).collect(), beams, rates),
        relaxation_power: sol.objective,
        eigen_ratio,
    })
}

/// Relaxed single-group multicast problem `min Tr(X)` s.t.
/// `Tr(A_k X) ≥ c` for members, plus an optional `Tr(X) ≤ budget`.
pub(crate) fn multicast_sdp(h: &ChannelMatrix, group: &[usize], c: f64, budget: Option<f64>) -> HermitianSdp {
    let l = h.antennas();
    let mut p = HermitianSdp::new(vec![l]);
    p.set_objective(0, CMatrix::identity(l, l));
    for &k in group {
        p.add_constraint(Constraint::new(vec![(0, outer(&h.user(k)))], Sense::Ge, c));
    }
    if let Some(b) = budget {
        p.add_constraint(Constraint::new(vec![(0, CMatrix::identity(l, l))], Sense::Le, b));
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticastDesign {
    pub beam: CVector,
    pub rate: f64,
    pub relaxation_power: f64,
    pub eigen_ratio: f64,
}

/// Minimum-power multicast beam giving every member of `group` the rate
/// `gamma_min`.
pub fn sdr_ee_max_coded(
    h: &ChannelMatrix,
    group: &[usize],
    gamma_min: f64,
    noise: f64,
    bandwidth: f64,
    opts: &SdrOptions,
) -> Result<MulticastDesign> {
    if group.is_empty() {
        return Err(invalid("group", "multicast group must be nonempty"));
    }
    if group.iter().any(|&k| k >= h.users()) {
        return Err(invalid("group", "user index out of range"));
    }
    let c = noise * sinr_for_rate(gamma_min, bandwidth);
    let sol = multicast_sdp(h, group, c, None).solve(&opts.ipm)?.into_optimal()?;
    let hs: Vec<CVector> = group.iter().map(|&k| h.user(k)).collect();
    let score = |cand: &[CVector]| -> Option<(Vec<CVector>, f64)> {
        let v = &cand[0];
        let worst = hs.iter().map(|hk| gain(hk, v)).fold(f64::INFINITY, f64::min);
        if !(worst > 0.0) {
            return None;
        }
        let w = v * C64::new((c / worst).sqrt(), 0.0);
        let p = norm_sqr(&w);
        Some((vec![w], p))
    };
    let r = extract_rank1(&sol.blocks, opts.candidates, opts.seed, score)?;
    let beam = r.beams.into_iter().next().expect("one block");
    let rate = multicast_rate(h, group, &beam, noise, bandwidth)?;
    Ok(MulticastDesign {
        beam,
        rate,
        relaxation_power: sol.objective,
        eigen_ratio: r.eigen_ratio,
    })
}

/// Special cases in which both EE expressions have closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `M_b = N` or `η = 0`.
    FreeBackhaul,
    /// `M_b = 0`.
    NoBsCache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    Uncoded,
    Coded,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ee_uncoded: f64,
    pub ee_coded: f64,
    pub winner: Winner,
    /// User cache size (files) at which both strategies tie; coded wins above it.
    pub threshold_user_cache: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonInputs {
    pub users: usize,
    pub user_cache_files: f64,
    pub n_files: f64,
    pub power_uncoded: f64,
    pub power_coded: f64,
    /// Common rate of every unicast and multicast transmission.
    pub rate: f64,
    pub eta: f64,
}

/// Evaluates both closed forms when every link runs at the same rate.
pub fn analytic_comparison(regime: Regime, x: &ComparisonInputs) -> Result<Comparison> {
    if x.users == 0 {
        return Err(invalid("users", "need at least one user"));
    }
    if !(x.n_files > 0.0 && x.user_cache_files >= 0.0 && x.user_cache_files <= x.n_files) {
        return Err(invalid("user_cache_files", "must lie in [0, N]"));
    }
    if !(x.power_uncoded > 0.0 && x.power_coded > 0.0 && x.rate > 0.0) {
        return Err(invalid("power", "powers and rate must be positive"));
    }
    check_eta(x.eta)?;
    let k = x.users as f64;
    let mu = x.user_cache_files / x.n_files;
    let (num_unc, den_unc, num_cod, den_cod, threshold) = match regime {
        Regime::FreeBackhaul => (
            k,
            x.power_uncoded / x.rate,
            1.0 + k * mu,
            x.power_coded / x.rate,
            (x.power_coded / x.power_uncoded - 1.0 / k) * x.n_files,
        ),
        Regime::NoBsCache => {
            let du = x.eta + x.power_uncoded / (x.rate * k);
            let dc = x.eta + x.power_coded / x.rate;
            (1.0, du, 1.0 + k * mu, dc, (dc / du - 1.0) / k * x.n_files)
        }
    };
    // Both share the factor 1/(1 − M_u/N), which cancels in the ordering.
    let lhs = num_cod * den_unc;
    let rhs = num_unc * den_cod;
    let winner = if (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()) {
        Winner::Tie
    } else if lhs > rhs {
        Winner::Coded
    } else {
        Winner::Uncoded
    };
    let scale = 1.0 - mu;
    let ee = |num: f64, den: f64| if scale > 0.0 { num / (scale * den) } else { f64::INFINITY };
    Ok(Comparison {
        ee_uncoded: ee(num_unc, den_unc),
        ee_coded: ee(num_cod, den_cod),
        winner,
        threshold_user_cache: threshold,
    })
}
