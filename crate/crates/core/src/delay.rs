//! Delivery time of both strategies and the power/beam designs that
//! minimize it.

use serde::{Deserialize, Serialize};

use crate::cache_model::{binomial, CacheSizes, CodedSession, LibraryConfig};
use crate::ee::{extract_unicast, gain_matrix, multicast_sdp, multiuser_power_sdp, unit, SdrOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::{gain, norm_sqr, CMatrix, CVector, C64};
use crate::sdp::{extract_rank1, power_control, SdpStatus};
use crate::wireless::{unicast_sinr, zf_directions, ChannelMatrix, QosTargets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Mean over users.
    Average,
    /// Sum over multicast groups.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayResult {
    /// Seconds per user or per multicast group.
    pub per_target_time: Vec<f64>,
    pub total_seconds: f64,
    pub aggregation: Aggregation,
    pub powers: Vec<f64>,
}

/// Average unicast time `(Q(1 − M_u/N)/K) Σ 1/R_k`.
pub fn tau_uncoded(rates: &[f64], cache: &CacheSizes, lib: &LibraryConfig) -> Result<DelayResult> {
    cache.validate(lib)?;
    let bits = lib.q() * (1.0 - cache.user_fraction(lib));
    unicast_times(rates, bits)
}

pub(crate) fn unicast_times(rates: &[f64], bits_per_user: f64) -> Result<DelayResult> {
    let mut times = Vec::with_capacity(rates.len());
    for (k, &r) in rates.iter().enumerate() {
        if bits_per_user <= 0.0 {
            times.push(0.0);
        } else if r > 0.0 {
            times.push(bits_per_user / r);
        } else {
            return Err(Error::ZeroRate { user: k });
        }
    }
    let total = if times.is_empty() {
        0.0
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    };
    Ok(DelayResult {
        per_target_time: times,
        total_seconds: total,
        aggregation: Aggregation::Average,
        powers: vec![],
    })
}

/// `(τ, Q'/min R)`: the average time and the slowest-user bound it never
/// exceeds.
pub fn upper_bound_check(rates: &[f64], bits_per_user: f64) -> Result<(f64, f64)> {
    let tau = unicast_times(rates, bits_per_user)?.total_seconds;
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = if bits_per_user <= 0.0 { 0.0 } else { bits_per_user / min };
    debug_assert!(tau <= bound * (1.0 + 1e-12));
    Ok((tau, bound))
}

/// Coded delivery time, summed over every multicast group of every session.
/// `group_rates[s]` lists the rates of the groups of session `s`.
pub fn tau_coded(sessions: &[CodedSession], group_rates: &[Vec<f64>], k: usize) -> Result<DelayResult> {
    if sessions.len() != group_rates.len() {
        return Err(Error::Dimension(format!(
            "{} rate lists for {} sessions",
            group_rates.len(),
            sessions.len()
        )));
    }
    let mut times = Vec::new();
    for (s, rates) in sessions.iter().zip(group_rates) {
        let groups = binomial(k, s.group_size());
        if rates.len() as f64 != groups {
            return Err(Error::Dimension(format!(
                "{} rates for {groups} groups of size {}",
                rates.len(),
                s.group_size()
            )));
        }
        let bits = s.access_bits / groups;
        for (i, &r) in rates.iter().enumerate() {
            if !(r > 0.0) {
                return Err(Error::ZeroRate { user: i });
            }
            times.push(bits / r);
        }
    }
    Ok(DelayResult {
        total_seconds: times.iter().sum(),
        per_target_time: times,
        aggregation: Aggregation::Sum,
        powers: vec![],
    })
}

fn inv_cost_slope(p: f64, noise: f64) -> f64 {
    // −d/dp of 1/log₂(1 + p/σ²)
    let x = p / noise;
    let l = x.ln_1p();
    std::f64::consts::LN_2 / (noise * (1.0 + x) * l * l)
}

/// Power `p` at which `inv_cost_slope(p) = target`; the slope is strictly
/// decreasing in `p`.
fn slope_inverse(target: f64, noise: f64) -> f64 {
    // With u = ln(1 + p/σ²) the condition is u + 2 ln u = ln(ln 2 / (σ² target)).
    let c = (std::f64::consts::LN_2 / (noise * target)).ln();
    let h = |u: f64| u + 2.0 * u.ln() - c;
    let (mut lo, mut hi) = (1e-300_f64, 1.0_f64);
    while h(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut u = hi;
    for _ in 0..200 {
        u = if lo > 0.0 && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if h(u) < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    noise * u.exp_m1()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZfDelay {
    pub powers: Vec<f64>,
    pub beams: Vec<CVector>,
    pub rates: Vec<f64>,
    pub delay: DelayResult,
    /// Largest relative violation of the optimality conditions.
    pub kkt_residual: f64,
}

/// ZF beams with powers minimizing the average delivery time under the sum
/// power budget and the SINR floors.
///
/// The optimum has `p_k = max(ζ_kσ², g⁻¹(λ a_k))` with `g` the cost slope and
/// `a_k = ‖h̃_k‖²`; `λ` is found by bisection so the budget is met exactly.
pub fn zf_delay_alloc(
    h: &ChannelMatrix,
    qos: &QosTargets,
    budget: f64,
    noise: f64,
    cache: &CacheSizes,
    lib: &LibraryConfig,
) -> Result<ZfDelay> {
    if qos.users() != h.users() {
        return Err(Error::Dimension(format!("{} QoS targets for {} users", qos.users(), h.users())));
    }
    if !(noise > 0.0) {
        return Err(invalid("noise", "noise power must be positive"));
    }
    let dirs = zf_directions(h)?;
    let a: Vec<f64> = dirs.iter().map(norm_sqr).collect();
    let lo: Vec<f64> = qos.sinr_floor.iter().map(|z| z * noise).collect();
    let required: f64 = a.iter().zip(&lo).map(|(a, l)| a * l).sum();
    if !(budget >= required * (1.0 - 1e-12)) {
        return Err(Error::PowerBudget { budget, required });
    }
    let alloc = |lambda: f64| -> Vec<f64> {
        a.iter()
            .zip(&lo)
            .map(|(&ak, &lk)| lk.max(slope_inverse(lambda * ak, noise)))
            .collect()
    };
    let spend = |p: &[f64]| -> f64 { p.iter().zip(&a).map(|(p, a)| p * a).sum() };
    let powers = if budget <= required {
        lo.clone()
    } else {
        // spend(alloc(λ)) decreases in λ.
        let (mut l_lo, mut l_hi) = (1.0, 1.0);
        while spend(&alloc(l_lo)) < budget {
            l_lo *= 0.5;
        }
        while spend(&alloc(l_hi)) > budget {
            l_hi *= 2.0;
        }
        for _ in 0..300 {
            let mid = (l_lo * l_hi).sqrt();
            if spend(&alloc(mid)) > budget {
                l_lo = mid;
            } else {
                l_hi = mid;
            }
            if l_hi - l_lo <= 1e-15 * l_hi {
                break;
            }
        }
        let mut p = alloc(l_hi);
        // Hand the leftover to the free users so the budget is tight.
        let free: Vec<usize> = (0..p.len()).filter(|&k| p[k] > lo[k]).collect();
        let gap = budget - spend(&p);
        if gap > 0.0 && !free.is_empty() {
            let w: f64 = free.iter().map(|&k| a[k]).sum();
            for &k in &free {
                p[k] += gap / w;
            }
        }
        p
    };
    let kkt_residual = zf_kkt_residual(&powers, &a, &lo, budget, noise);
    let beams: Vec<CVector> = dirs
        .iter()
        .zip(&powers)
        .map(|(d, p)| d * C64::new(p.sqrt(), 0.0))
        .collect();
    let rates: Vec<f64> = powers
        .iter()
        .map(|p| qos.bandwidth * (1.0 + p / noise).log2())
        .collect();
    let mut delay = tau_uncoded(&rates, cache, lib)?;
    delay.powers = powers.clone();
    Ok(ZfDelay {
        powers,
        beams,
        rates,
        delay,
        kkt_residual,
    })
}

/// Relative stationarity and budget residual of a ZF power allocation.
pub fn zf_kkt_residual(p: &[f64], a: &[f64], lo: &[f64], budget: f64, noise: f64) -> f64 {
    let free: Vec<usize> = (0..p.len()).filter(|&k| p[k] > lo[k] * (1.0 + 1e-9)).collect();
    let mut worst = 0.0_f64;
    if free.is_empty() {
        return worst;
    }
    let lambdas: Vec<f64> = free.iter().map(|&k| inv_cost_slope(p[k], noise) / a[k]).collect();
    let lambda = lambdas.iter().sum::<f64>() / lambdas.len() as f64;
    for l in &lambdas {
        worst = worst.max((l - lambda).abs() / lambda);
    }
    // Clamped users must not want more power than the multiplier allows.
    for k in 0..p.len() {
        if !free.contains(&k) {
            let want = inv_cost_slope(p[k], noise) / a[k];
            worst = worst.max(((lambda - want) / lambda).max(0.0));
        }
    }
    let spend: f64 = p.iter().zip(a).map(|(p, a)| p * a).sum();
    worst.max((spend - budget).abs() / budget)
}

/// Bracket and stopping rule for a bisection over a common SINR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionConfig {
    pub a_low: f64,
    pub a_high: f64,
    pub epsilon: f64,
    pub max_iter: usize,
}

impl BisectionConfig {
    pub fn new(a_low: f64, a_high: f64, epsilon: f64, max_iter: usize) -> Result<Self> {
        if !(a_low.is_finite() && a_high.is_finite() && a_low <= a_high) {
            return Err(invalid("a_low", "bracket must satisfy a_low ≤ a_high"));
        }
        if !(epsilon > 0.0) {
            return Err(invalid("epsilon", "must be positive"));
        }
        Ok(Self {
            a_low,
            a_high,
            epsilon,
            max_iter,
        })
    }

    /// Iterations needed to shrink the bracket below `epsilon`.
    pub fn iteration_bound(&self) -> usize {
        let r = (self.a_high - self.a_low) / self.epsilon;
        if r <= 1.0 {
            0
        } else {
            r.log2().ceil() as usize
        }
    }
}

/// How brackets are built when the caller does not give one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectionOptions {
    /// `ε` as a fraction of the initial bracket width.
    pub relative_epsilon: f64,
    pub max_iter: usize,
    /// Doublings of the upper end allowed while it is still feasible.
    pub max_expansions: usize,
    pub sdr: SdrOptions,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        Self {
            relative_epsilon: 1e-3,
            max_iter: 60,
            max_expansions: 60,
            sdr: SdrOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionTrace<T> {
    pub config: BisectionConfig,
    pub a_low: f64,
    pub a_high: f64,
    pub iterations: usize,
    pub expansions: usize,
    /// Witness returned by the feasibility oracle at `a_low`.
    pub witness: T,
}

/// Bisection over `x` with a feasibility oracle returning a witness when
/// feasible. The lower end must be feasible; a feasible upper end is doubled
/// first, up to `max_expansions` times.
pub fn bisect<T, F>(cfg: BisectionConfig, max_expansions: usize, mut feasible: F) -> Result<BisectionTrace<T>>
where
    F: FnMut(f64) -> Result<Option<T>>,
{
    let mut witness = feasible(cfg.a_low)?
        .ok_or_else(|| Error::Infeasible(format!("not feasible at the floor {}", cfg.a_low)))?;
    let mut lo = cfg.a_low;
    let mut hi = cfg.a_high;
    let mut cfg = cfg;
    let mut expansions = 0;
    while expansions < max_expansions {
        match feasible(hi)? {
            Some(w) => {
                lo = hi;
                witness = w;
                hi = if hi > 0.0 { 2.0 * hi } else { 1.0 };
                expansions += 1;
            }
            None => break,
        }
    }
    if expansions > 0 {
        let rel = cfg.epsilon / (cfg.a_high - cfg.a_low).max(f64::MIN_POSITIVE);
        cfg.epsilon = rel * (hi - lo);
        cfg.a_low = lo;
        cfg.a_high = hi;
    }
    let mut iterations = 0;
    while hi - lo > cfg.epsilon && iterations < cfg.max_iter {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Some(w) => {
                lo = mid;
                witness = w;
            }
            None => hi = mid,
        }
        iterations += 1;
    }
    Ok(BisectionTrace {
        config: cfg,
        a_low: lo,
        a_high: hi,
        iterations,
        expansions,
        witness,
    })
}

fn auto_config(a_low: f64, a_high: f64, opts: &BisectionOptions) -> Result<BisectionConfig> {
    let a_high = a_high.max(a_low);
    let width = a_high - a_low;
    let eps = if width > 0.0 { opts.relative_epsilon * width } else { opts.relative_epsilon * a_low.max(1.0) };
    BisectionConfig::new(a_low, a_high, eps, opts.max_iter)
}

fn min_power_within(sol: crate::sdp::SdpSolution, budget: f64) -> Option<Vec<CMatrix>> {
    match sol.status {
        SdpStatus::Optimal if sol.objective <= budget * (1.0 + 1e-7) => Some(sol.blocks),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinOutcome {
    pub beams: Vec<CVector>,
    /// Smallest SINR achieved by the extracted beams.
    pub min_sinr: f64,
    pub trace: BisectionTrace<()>,
}

/// Largest common SINR the users can reach within `budget`, by bisection
/// over feasibility of the relaxed problem at each candidate level.
pub fn maxmin_sinr_bisection(
    h: &ChannelMatrix,
    floors: &[f64],
    budget: f64,
    noise: f64,
    opts: &BisectionOptions,
) -> Result<MaxMinOutcome> {
    let k = h.users();
    if floors.len() != k {
        return Err(Error::Dimension(format!("{} floors for {k} users", floors.len())));
    }
    if !(budget > 0.0 && noise > 0.0) {
        return Err(invalid("budget", "power budget and noise must be positive"));
    }
    let users: Vec<usize> = (0..k).collect();
    let a_low = floors.iter().copied().fold(0.0, f64::max);
    let best_gain = users.iter().map(|&u| norm_sqr(&h.user(u))).fold(0.0, f64::max);
    let cfg = auto_config(a_low, budget * best_gain / noise, opts)?;
    let trace = bisect(cfg, opts.max_expansions, |x| {
        let t = vec![x; k];
        let sol = multiuser_power_sdp(h, &users, &t, noise, None).solve(&opts.sdr.ipm)?;
        Ok(min_power_within(sol, budget))
    })?;
    let beams = maxmin_extract(h, &trace.witness, budget, noise, trace.a_high, opts)?;
    let min_sinr = unicast_sinr(h, &beams, noise)?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(MaxMinOutcome {
        beams,
        min_sinr,
        trace: BisectionTrace {
            config: trace.config,
            a_low: trace.a_low,
            a_high: trace.a_high,
            iterations: trace.iterations,
            expansions: trace.expansions,
            witness: (),
        },
    })
}

/// Largest common SINR reachable with directions `dirs` and sum power
/// `budget`, with the powers that reach it.
fn common_sinr_for(g: &nalgebra::DMatrix<f64>, budget: f64, noise: f64, upper: f64) -> Option<(f64, Vec<f64>)> {
    let k = g.nrows();
    let ok = |t: f64| power_control(g, &vec![t; k], noise).filter(|p| p.iter().sum::<f64>() <= budget);
    let mut lo = 0.0;
    let mut best = ok(0.0)?;
    let mut hi = upper;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match ok(mid) {
            Some(p) => {
                lo = mid;
                best = p;
            }
            None => hi = mid,
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    // Spend the slack: the SINR constraints scale with a uniform power boost.
    let total: f64 = best.iter().sum();
    if total > 0.0 && total < budget {
        let s = budget / total;
        best.iter_mut().for_each(|p| *p *= s);
    }
    Some((lo, best))
}

fn maxmin_extract(
    h: &ChannelMatrix,
    blocks: &[CMatrix],
    budget: f64,
    noise: f64,
    upper: f64,
    opts: &BisectionOptions,
) -> Result<Vec<CVector>> {
    let users: Vec<usize> = (0..h.users()).collect();
    let score = |cand: &[CVector]| -> Option<(Vec<CVector>, f64)> {
        let dirs: Vec<CVector> = cand.iter().map(unit).collect::<Option<_>>()?;
        let g = gain_matrix(h, &users, &dirs);
        let (t, p) = common_sinr_for(&g, budget, noise, upper)?;
        let beams = dirs.iter().zip(&p).map(|(d, &pk)| d * C64::new(pk.sqrt(), 0.0)).collect();
        Some((beams, -t))
    };
    let r = extract_rank1(blocks, opts.sdr.candidates, opts.sdr.seed, score);
    let zf = zf_directions(h).ok().and_then(|d| score(&d));
    match (r, zf) {
        (Ok(r), Some(z)) if z.1 < r.cost => Ok(z.0),
        (Ok(r), _) => Ok(r.beams),
        (Err(_), Some(z)) => Ok(z.0),
        (Err(e), None) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MulticastDelay {
    pub beam: CVector,
    pub min_snr: f64,
    pub rate: f64,
    pub trace: BisectionTrace<()>,
}

/// Largest common SNR for one multicast group within `budget`, by bisection
/// from the floor `floor_snr`.
pub fn coded_delay_bisection(
    h: &ChannelMatrix,
    group: &[usize],
    floor_snr: f64,
    budget: f64,
    noise: f64,
    bandwidth: f64,
    opts: &BisectionOptions,
) -> Result<MulticastDelay> {
    if group.is_empty() || group.iter().any(|&k| k >= h.users()) {
        return Err(invalid("group", "must be a nonempty set of valid users"));
    }
    if !(budget > 0.0 && noise > 0.0) {
        return Err(invalid("budget", "power budget and noise must be positive"));
    }
    let hs: Vec<CVector> = group.iter().map(|&k| h.user(k)).collect();
    let best_gain = hs.iter().map(norm_sqr).fold(0.0, f64::max);
    let cfg = auto_config(floor_snr.max(0.0), budget * best_gain / noise, opts)?;
    // Without interference the minimum power is linear in the target SNR, so
    // one solve at unit SNR answers every feasibility query exactly.
    let unit_sol = multicast_sdp(h, group, noise, None).solve(&opts.sdr.ipm)?.into_optimal()?;
    let unit_power = unit_sol.objective;
    let trace = bisect(cfg, opts.max_expansions, |x| {
        Ok((x * unit_power <= budget * (1.0 + 1e-7)).then(|| {
            unit_sol
                .blocks
                .iter()
                .map(|b| b * C64::new(x, 0.0))
                .collect::<Vec<CMatrix>>()
        }))
    })?;
    let score = |cand: &[CVector]| -> Option<(Vec<CVector>, f64)> {
        let d = unit(&cand[0])?;
        let w = d * C64::new(budget.sqrt(), 0.0);
        let snr = hs.iter().map(|hk| gain(hk, &w)).fold(f64::INFINITY, f64::min) / noise;
        Some((vec![w], -snr))
    };
    let r = extract_rank1(&trace.witness, opts.sdr.candidates, opts.sdr.seed, score)?;
    let beam = r.beams.into_iter().next().expect("one block");
    let min_snr = -r.cost;
    Ok(MulticastDelay {
        rate: bandwidth * (1.0 + min_snr).log2(),
        beam,
        min_snr,
        trace: BisectionTrace {
            config: trace.config,
            a_low: trace.a_low,
            a_high: trace.a_high,
            iterations: trace.iterations,
            expansions: trace.expansions,
            witness: (),
        },
    })
}

/// Unicast beams reaching the given SINR floors at least power, then scaled
/// to the full budget. Used when only the rate floors matter.
pub fn sdr_unicast_full_power(
    h: &ChannelMatrix,
    qos: &QosTargets,
    budget: f64,
    noise: f64,
    opts: &SdrOptions,
) -> Result<Vec<CVector>> {
    let users: Vec<usize> = (0..h.users()).collect();
    let sol = multiuser_power_sdp(h, &users, &qos.sinr_floor, noise, None)
        .solve(&opts.ipm)?
        .into_optimal()?;
    let (beams, _) = extract_unicast(h, &users, &qos.sinr_floor, noise, &sol.blocks, opts)?;
    let total: f64 = beams.iter().map(norm_sqr).sum();
    if total > budget * (1.0 + 1e-9) {
        return Err(Error::PowerBudget {
            budget,
            required: total,
        });
    }
    Ok(beams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache_model::coded_sessions;
    use crate::wireless::{qos_targets, sample_channels, QosRule};
    use approx::assert_relative_eq;

    fn lib() -> LibraryConfig {
        LibraryConfig::new(10, 100).unwrap()
    }

    fn qos(k: usize, gamma: f64) -> QosTargets {
        qos_targets(QosRule::Uncoded { user_fraction: 0.0 }, &vec![gamma; k], 1.0).unwrap()
    }

    #[test]
    fn tau_uncoded_examples() {
        let lib = LibraryConfig::new(2, 2).unwrap();
        let none = CacheSizes::new(0.0, 0.0);
        assert_relative_eq!(tau_uncoded(&[1.0, 2.0], &none, &lib).unwrap().total_seconds, 1.5);
        assert_relative_eq!(tau_uncoded(&[4.0, 4.0], &none, &lib).unwrap().total_seconds, 0.5);
        let full = CacheSizes::new(0.0, 2.0);
        assert_eq!(tau_uncoded(&[1.0, 1.0], &full, &lib).unwrap().total_seconds, 0.0);
        assert!(matches!(tau_uncoded(&[1.0, 0.0], &none, &lib), Err(Error::ZeroRate { user: 1 })));
    }

    #[test]
    fn upper_bound_examples() {
        let (tau, bound) = upper_bound_check(&[2.0, 2.0], 4.0).unwrap();
        assert_relative_eq!(tau, bound);
        let (tau, bound) = upper_bound_check(&[1.0, 3.0], 3.0).unwrap();
        assert_relative_eq!(tau, 2.0);
        assert_relative_eq!(bound, 3.0);
    }

    #[test]
    fn tau_coded_equal_rates_telescopes() {
        let lib = LibraryConfig::new(4, 12).unwrap();
        let cache = CacheSizes::new(0.0, 1.0);
        let sessions = coded_sessions(4, &cache, &lib).unwrap();
        let rates = vec![vec![3.0; 6]];
        let d = tau_coded(&sessions, &rates, 4).unwrap();
        assert_relative_eq!(d.total_seconds, sessions[0].access_bits / 3.0, max_relative = 1e-12);
        assert!(tau_coded(&sessions, &[vec![1.0; 5]], 4).is_err());
    }

    #[test]
    fn zf_delay_single_user_takes_everything() {
        let h = sample_channels(1, 3, &[1.0], 4).unwrap();
        let a = norm_sqr(&zf_directions(&h).unwrap()[0]);
        let d = zf_delay_alloc(&h, &qos(1, 0.5), 7.0, 1.0, &CacheSizes::new(0.0, 0.0), &lib()).unwrap();
        assert_relative_eq!(d.powers[0], 7.0 / a, max_relative = 1e-10);
    }

    #[test]
    fn zf_delay_at_boundary_and_infeasible() {
        let h = sample_channels(3, 4, &[1.0; 3], 5).unwrap();
        let q = qos(3, 1.0);
        let a: Vec<f64> = zf_directions(&h).unwrap().iter().map(norm_sqr).collect();
        let need: f64 = a.iter().sum();
        let d = zf_delay_alloc(&h, &q, need, 1.0, &CacheSizes::new(0.0, 0.0), &lib()).unwrap();
        for p in &d.powers {
            assert_relative_eq!(*p, 1.0, max_relative = 1e-9);
        }
        let r = zf_delay_alloc(&h, &q, 0.5 * need, 1.0, &CacheSizes::new(0.0, 0.0), &lib());
        assert!(matches!(r, Err(Error::PowerBudget { required, .. }) if (required - need).abs() < 1e-9 * need));
    }

    #[test]
    fn zf_delay_symmetric_users_share_equally() {
        let users: Vec<CVector> = (0..3)
            .map(|i| CVector::from_fn(3, |r, _| C64::new(if r == i { 2.0 } else { 0.0 }, 0.0)))
            .collect();
        let h = ChannelMatrix::from_user_vectors(&users, None).unwrap();
        let d = zf_delay_alloc(&h, &qos(3, 0.1), 3.0, 1.0, &CacheSizes::new(0.0, 0.0), &lib()).unwrap();
        for p in &d.powers {
            assert_relative_eq!(*p, 4.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn zf_delay_kkt_and_budget_on_random_channels() {
        for seed in 0..20 {
            let h = sample_channels(4, 6, &[1.0; 4], 300 + seed).unwrap();
            let q = qos(4, 0.5 + 0.1 * seed as f64);
            let a: Vec<f64> = zf_directions(&h).unwrap().iter().map(norm_sqr).collect();
            let need: f64 = a.iter().zip(&q.sinr_floor).map(|(a, z)| a * z).sum();
            let budget = need * 3.0;
            let d = zf_delay_alloc(&h, &q, budget, 1.0, &CacheSizes::new(0.0, 0.0), &lib()).unwrap();
            assert!(d.kkt_residual <= 1e-8, "residual {}", d.kkt_residual);
            let spend: f64 = d.powers.iter().zip(&a).map(|(p, a)| p * a).sum();
            assert!(spend <= budget * (1.0 + 1e-8));
            for (p, z) in d.powers.iter().zip(&q.sinr_floor) {
                assert!(*p >= z * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn zf_delay_beats_perturbations() {
        // Independent check: moving power between two free users never helps.
        let h = sample_channels(2, 3, &[1.0; 2], 41).unwrap();
        let q = qos(2, 0.1);
        let a: Vec<f64> = zf_directions(&h).unwrap().iter().map(norm_sqr).collect();
        let d = zf_delay_alloc(&h, &q, 5.0, 1.0, &CacheSizes::new(0.0, 0.0), &lib()).unwrap();
        let cost = |p: &[f64]| p.iter().map(|p| 1.0 / (1.0 + p).log2()).sum::<f64>();
        let best = cost(&d.powers);
        for step in [-1e-2, -1e-3, 1e-3, 1e-2] {
            let p0 = d.powers[0] + step / a[0];
            let p1 = d.powers[1] - step / a[1];
            if p0 > q.sinr_floor[0] && p1 > q.sinr_floor[1] {
                assert!(cost(&[p0, p1]) >= best - 1e-12);
            }
        }
    }

    #[test]
    fn bisection_iteration_count() {
        let cfg = BisectionConfig::new(0.0, 1.0, 1e-3, 100).unwrap();
        let t = bisect(cfg, 0, |x| Ok((x <= 0.3).then_some(()))).unwrap();
        assert_eq!(t.iterations, cfg.iteration_bound());
        assert!(t.a_low <= 0.3 && 0.3 <= t.a_high);
        assert!(BisectionConfig::new(2.0, 1.0, 1e-3, 10).is_err());
        let r = bisect(cfg, 0, |_| Ok(None::<()>));
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn bisection_expands_feasible_upper_end() {
        let cfg = BisectionConfig::new(0.0, 1.0, 1e-3, 100).unwrap();
        let t = bisect(cfg, 10, |x| Ok((x <= 5.0).then_some(()))).unwrap();
        assert_eq!(t.expansions, 3);
        assert!(t.a_low <= 5.0 && 5.0 <= t.a_high);
        assert!(t.a_high - t.a_low <= t.config.epsilon);
    }

    #[test]
    fn maxmin_single_user() {
        let h = sample_channels(1, 4, &[1.0], 77).unwrap();
        let opts = BisectionOptions::default();
        let x = 2.0 * norm_sqr(&h.user(0)) / 0.5;
        let out = maxmin_sinr_bisection(&h, &[0.0], 2.0, 0.5, &opts).unwrap();
        assert!((out.trace.a_low - x).abs() <= out.trace.config.epsilon);
        assert_relative_eq!(out.min_sinr, x, max_relative = 1e-6);
        let twice = maxmin_sinr_bisection(&h, &[0.0], 4.0, 0.5, &opts).unwrap();
        assert_relative_eq!(twice.min_sinr, 2.0 * x, max_relative = 1e-6);
    }

    #[test]
    fn maxmin_orthogonal_equal_channels() {
        let users: Vec<CVector> = (0..3)
            .map(|i| CVector::from_fn(4, |r, _| C64::new(if r == i { 1.5 } else { 0.0 }, 0.0)))
            .collect();
        let h = ChannelMatrix::from_user_vectors(&users, None).unwrap();
        let out = maxmin_sinr_bisection(&h, &[0.1; 3], 3.0, 1.0, &BisectionOptions::default()).unwrap();
        let x = 3.0 * 2.25 / 3.0;
        assert!((out.trace.a_low - x).abs() <= out.trace.config.epsilon);
        assert!(out.min_sinr >= out.trace.a_low - out.trace.config.epsilon);
    }

    #[test]
    fn maxmin_infeasible_floor() {
        let h = sample_channels(2, 3, &[1.0; 2], 8).unwrap();
        let r = maxmin_sinr_bisection(&h, &[1e6, 1e6], 1.0, 1.0, &BisectionOptions::default());
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn multicast_single_and_duplicate_members() {
        let h0 = sample_channels(1, 3, &[1.0], 12).unwrap().user(0);
        let h = ChannelMatrix::from_user_vectors(&[h0.clone(), h0.clone()], None).unwrap();
        let opts = BisectionOptions::default();
        let x = 2.0 * norm_sqr(&h0);
        let one = coded_delay_bisection(&h, &[0], 0.0, 2.0, 1.0, 1.0, &opts).unwrap();
        let two = coded_delay_bisection(&h, &[0, 1], 0.0, 2.0, 1.0, 1.0, &opts).unwrap();
        assert_relative_eq!(one.min_snr, x, max_relative = 1e-6);
        assert_relative_eq!(two.min_snr, x, max_relative = 1e-6);
        assert!(one.trace.iterations <= one.trace.config.iteration_bound());
    }

    #[test]
    fn multicast_scaling_matches_direct_feasibility() {
        let h = sample_channels(4, 5, &[1.0; 4], 13).unwrap();
        let group = [0, 2, 3];
        let opts = BisectionOptions::default();
        let out = coded_delay_bisection(&h, &group, 0.0, 3.0, 1.0, 1.0, &opts).unwrap();
        let direct = |x: f64| {
            let sol = multicast_sdp(&h, &group, x, None).solve(&opts.sdr.ipm).unwrap();
            sol.objective <= 3.0
        };
        assert!(direct(out.trace.a_low));
        assert!(!direct(out.trace.a_high * 1.001));
    }

    #[test]
    fn cost_is_convex_on_grid() {
        for a in [0.1, 1.0, 10.0] {
            let f = |x: f64| 1.0 / (1.0 + a * x).log2();
            let xs: Vec<f64> = (0..=120).map(|i| 10f64.powf(-3.0 + i as f64 * 0.05)).collect();
            for w in xs.windows(3) {
                let (x0, x1, x2) = (w[0], w[1], w[2]);
                let second = (f(x2) - f(x1)) / (x2 - x1) - (f(x1) - f(x0)) / (x1 - x0);
                assert!(second >= -1e-10);
            }
        }
    }
}
