//! Non-uniform request popularity with most-popular whole-file placement.
//!
//! Files are indexed from 0; ranks are 1-based positions in the popularity
//! order, ties broken by ascending file index.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::cache_model::{CacheSizes, LibraryConfig, RequestVector, Throughputs};
use crate::delay::{maxmin_sinr_bisection, zf_delay_alloc, Aggregation, BisectionOptions, DelayResult};
use crate::ee::{sdr_ee_max_uncoded, EnergyBreakdown, SdrOptions};
use crate::error::{invalid, Error, Result};
use crate::linalg::{norm_sqr, CVector, C64};
use crate::rng::rng_from;
use crate::wireless::{qos_targets, unicast_rates, zf_directions, ChannelMatrix, QosRule, QosTargets};

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopularityProfile {
    per_user: Vec<Vec<f64>>,
    global: Vec<f64>,
}

impl PopularityProfile {
    pub fn new(per_user: Vec<Vec<f64>>) -> Result<Self> {
        let n = per_user.first().map(Vec::len).unwrap_or(0);
        if n == 0 {
            return Err(invalid("per_user", "need at least one user and one file"));
        }
        for q in &per_user {
            if q.len() != n {
                return Err(Error::Dimension("popularity vectors differ in length".into()));
            }
            if q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(invalid("per_user", "probabilities must be finite and nonnegative"));
            }
            let s: f64 = q.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(invalid("per_user", format!("probabilities sum to {s}")));
            }
        }
        let k = per_user.len() as f64;
        let global = (0..n)
            .map(|i| per_user.iter().map(|q| q[i]).sum::<f64>() / k)
            .collect();
        Ok(Self { per_user, global })
    }

    pub fn uniform(n: usize, k: usize) -> Result<Self> {
        zipf_profile(n, 0.0, k)
    }

    pub fn users(&self) -> usize {
        self.per_user.len()
    }

    pub fn n_files(&self) -> usize {
        self.global.len()
    }

    pub fn user(&self, k: usize) -> &[f64] {
        &self.per_user[k]
    }

    pub fn global(&self) -> &[f64] {
        &self.global
    }
}

/// `q_n ∝ n^{-α}` for ranks `n = 1..=N`, the same for every user.
pub fn zipf_profile(n: usize, alpha: f64, k: usize) -> Result<PopularityProfile> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", "Zipf exponent must be finite and ≥ 0"));
    }
    if n == 0 || k == 0 {
        return Err(invalid("n", "need at least one file and one user"));
    }
    let w: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-alpha)).collect();
    let total: f64 = w.iter().sum();
    let q: Vec<f64> = w.iter().map(|v| v / total).collect();
    PopularityProfile::new(vec![q; k])
}

/// 1-based rank of every file under a descending stable sort.
fn ranks(q: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..q.len()).collect();
    order.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    let mut rank = vec![0; q.len()];
    for (pos, &file) in order.iter().enumerate() {
        rank[file] = pos + 1;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementMap {
    /// `user_rank[k][n]` is the position of file `n` in user `k`'s order.
    pub user_rank: Vec<Vec<usize>>,
    pub bs_rank: Vec<usize>,
    pub user_cache_files: Vec<usize>,
    pub bs_cache_files: usize,
}

impl PlacementMap {
    /// Each user keeps its `M_k` most popular files; the BS keeps the `M_0`
    /// globally most popular ones.
    pub fn most_popular(profile: &PopularityProfile, user_cache_files: &[usize], bs_cache_files: usize) -> Result<Self> {
        let n = profile.n_files();
        if user_cache_files.len() != profile.users() {
            return Err(Error::Dimension(format!(
                "{} cache sizes for {} users",
                user_cache_files.len(),
                profile.users()
            )));
        }
        if user_cache_files.iter().any(|&m| m > n) || bs_cache_files > n {
            return Err(invalid("cache", "cannot cache more files than the library holds"));
        }
        Ok(Self {
            user_rank: profile.per_user.iter().map(|q| ranks(q)).collect(),
            bs_rank: ranks(&profile.global),
            user_cache_files: user_cache_files.to_vec(),
            bs_cache_files,
        })
    }

    pub fn users(&self) -> usize {
        self.user_rank.len()
    }

    pub fn user_has(&self, k: usize, file: usize) -> bool {
        self.user_rank[k][file] <= self.user_cache_files[k]
    }

    pub fn bs_has(&self, file: usize) -> bool {
        self.bs_rank[file] <= self.bs_cache_files
    }

    /// Files cached by user `k`, in popularity order.
    pub fn user_set(&self, k: usize) -> Vec<usize> {
        cached(&self.user_rank[k], self.user_cache_files[k])
    }

    pub fn bs_set(&self) -> Vec<usize> {
        cached(&self.bs_rank, self.bs_cache_files)
    }
}

fn cached(rank: &[usize], size: usize) -> Vec<usize> {
    let mut files: Vec<usize> = (0..rank.len()).filter(|&f| rank[f] <= size).collect();
    files.sort_by_key(|&f| rank[f]);
    files
}

fn check_demands(demands: &RequestVector, placement: &PlacementMap) -> Result<()> {
    if demands.len() != placement.users() {
        return Err(Error::Dimension(format!(
            "{} demands for {} users",
            demands.len(),
            placement.users()
        )));
    }
    let n = placement.bs_rank.len();
    if demands.demands.iter().any(|&d| d >= n) {
        return Err(invalid("demands", "file index out of range"));
    }
    Ok(())
}

/// Access bits count every user whose file is not in its own cache; backhaul
/// bits count every request whose file is not at the BS.
pub fn nonuniform_throughput(demands: &RequestVector, placement: &PlacementMap, lib: &LibraryConfig) -> Result<Throughputs> {
    check_demands(demands, placement)?;
    let q = lib.q();
    let access = demands
        .demands
        .iter()
        .enumerate()
        .filter(|&(k, &d)| !placement.user_has(k, d))
        .count();
    let backhaul = demands.demands.iter().filter(|&&d| !placement.bs_has(d)).count();
    Ok(Throughputs {
        access_bits: q * access as f64,
        backhaul_bits: q * backhaul as f64,
    })
}

/// Expectation of [`nonuniform_throughput`] over independent requests.
pub fn expected_throughput(profile: &PopularityProfile, placement: &PlacementMap, lib: &LibraryConfig) -> Result<Throughputs> {
    if profile.users() != placement.users() || profile.n_files() != placement.bs_rank.len() {
        return Err(Error::Dimension("profile and placement disagree".into()));
    }
    let q = lib.q();
    let (mut access, mut backhaul) = (0.0, 0.0);
    for (k, qk) in profile.per_user.iter().enumerate() {
        for (n, &p) in qk.iter().enumerate() {
            if !placement.user_has(k, n) {
                access += p;
            }
            if !placement.bs_has(n) {
                backhaul += p;
            }
        }
    }
    Ok(Throughputs {
        access_bits: q * access,
        backhaul_bits: q * backhaul,
    })
}

/// One independent draw per user from its own popularity vector.
pub fn sample_demands(profile: &PopularityProfile, seed: u64) -> Result<RequestVector> {
    let mut rng = rng_from(seed);
    let mut demands = Vec::with_capacity(profile.users());
    for q in &profile.per_user {
        let dist = WeightedIndex::new(q).map_err(|e| invalid("profile", e.to_string()))?;
        demands.push(dist.sample(&mut rng));
    }
    Ok(RequestVector { demands })
}

/// Users whose requested file is missing from their own cache.
pub fn active_subset(demands: &RequestVector, placement: &PlacementMap) -> Result<Vec<usize>> {
    check_demands(demands, placement)?;
    Ok(demands
        .demands
        .iter()
        .enumerate()
        .filter(|&(k, &d)| !placement.user_has(k, d))
        .map(|(k, _)| k)
        .collect())
}

/// Beam design for the active users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Zf,
    Sdr,
}

/// Channel, rates and noise shared by the non-uniform designs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSetup<'a> {
    pub channel: &'a ChannelMatrix,
    /// Whole-file rate requirement per user.
    pub gamma: &'a [f64],
    pub noise: f64,
    pub bandwidth: f64,
}

impl LinkSetup<'_> {
    fn whole_file_qos(&self) -> Result<QosTargets> {
        if self.gamma.len() != self.channel.users() {
            return Err(Error::Dimension(format!(
                "{} rate targets for {} users",
                self.gamma.len(),
                self.channel.users()
            )));
        }
        qos_targets(QosRule::Uncoded { user_fraction: 0.0 }, self.gamma, self.bandwidth)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonuniformEnergy {
    pub active: Vec<usize>,
    pub throughput: Throughputs,
    pub beams: Vec<CVector>,
    pub rates: Vec<f64>,
    pub energy: EnergyBreakdown,
}

/// Energy of serving one demand vector: the active users are unicast whole
/// files at their rate floors; every other user is served from its cache.
pub fn nonuniform_ee(
    link: &LinkSetup,
    demands: &RequestVector,
    placement: &PlacementMap,
    lib: &LibraryConfig,
    eta: f64,
    design: Design,
    opts: &SdrOptions,
) -> Result<NonuniformEnergy> {
    let qos = link.whole_file_qos()?;
    let active = active_subset(demands, placement)?;
    let throughput = nonuniform_throughput(demands, placement, lib)?;
    let k = link.channel.users();
    let (beams, rates) = if active.is_empty() {
        (vec![], vec![])
    } else {
        match design {
            Design::Zf => {
                let sub = link.channel.subset(&active)?;
                let dirs = zf_directions(&sub)?;
                let beams: Vec<CVector> = dirs
                    .iter()
                    .zip(&active)
                    .map(|(d, &u)| d * C64::new((qos.sinr_floor[u] * link.noise).sqrt(), 0.0))
                    .collect();
                let rates = unicast_rates(&sub, &beams, link.noise, link.bandwidth)?;
                (beams, rates)
            }
            Design::Sdr => {
                let d = sdr_ee_max_uncoded(link.channel, &qos, &active, link.noise, opts)?;
                (d.precoding.beams, d.precoding.rates)
            }
        }
    };
    let access = crate::ee::unicast_access_joules(lib.q(), &beams, &rates, &active)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "backhaul price must be a finite nonnegative J/bit"));
    }
    let energy = EnergyBreakdown::new(k as f64 * lib.q(), eta * throughput.backhaul_bits, access);
    Ok(NonuniformEnergy {
        active,
        throughput,
        beams,
        rates,
        energy,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonuniformDelay {
    pub active: Vec<usize>,
    pub rates: Vec<f64>,
    /// Per active user `Q/R_k`; the total is their sum.
    pub delay: DelayResult,
}

/// Delivery time of one demand vector under a sum power budget.
pub fn nonuniform_delay(
    link: &LinkSetup,
    demands: &RequestVector,
    placement: &PlacementMap,
    lib: &LibraryConfig,
    budget: f64,
    design: Design,
    opts: &BisectionOptions,
) -> Result<NonuniformDelay> {
    let qos = link.whole_file_qos()?;
    let active = active_subset(demands, placement)?;
    if active.is_empty() {
        return Ok(NonuniformDelay {
            active,
            rates: vec![],
            delay: DelayResult {
                per_target_time: vec![],
                total_seconds: 0.0,
                aggregation: Aggregation::Sum,
                powers: vec![],
            },
        });
    }
    let sub = link.channel.subset(&active)?;
    let sub_qos = qos.subset(&active);
    let (rates, powers) = match design {
        Design::Zf => {
            let d = zf_delay_alloc(&sub, &sub_qos, budget, link.noise, &CacheSizes::new(0.0, 0.0), lib)?;
            (d.rates, d.beams.iter().map(norm_sqr).collect::<Vec<_>>())
        }
        Design::Sdr => {
            let out = maxmin_sinr_bisection(&sub, &sub_qos.sinr_floor, budget, link.noise, opts)?;
            let rates = unicast_rates(&sub, &out.beams, link.noise, link.bandwidth)?;
            (rates, out.beams.iter().map(norm_sqr).collect())
        }
    };
    let mut times = Vec::with_capacity(rates.len());
    for (&r, &u) in rates.iter().zip(&active) {
        if !(r > 0.0) {
            return Err(Error::ZeroRate { user: u });
        }
        times.push(lib.q() / r);
    }
    Ok(NonuniformDelay {
        active,
        rates,
        delay: DelayResult {
            total_seconds: times.iter().sum(),
            per_target_time: times,
            aggregation: Aggregation::Sum,
            powers,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache_model::uncoded_throughput;
    use crate::wireless::sample_channels;
    use approx::assert_relative_eq;

    #[test]
    fn expected_throughput_matches_sampling() {
        let profile = zipf_profile(20, 0.9, 3).unwrap();
        let lib = LibraryConfig::new(20, 10).unwrap();
        let placement = PlacementMap::most_popular(&profile, &[4, 4, 4], 6).unwrap();
        let exp = expected_throughput(&profile, &placement, &lib).unwrap();
        let trials = 20_000;
        let (mut ac, mut bh) = (0.0, 0.0);
        for t in 0..trials {
            let d = sample_demands(&profile, t).unwrap();
            let thr = nonuniform_throughput(&d, &placement, &lib).unwrap();
            ac += thr.access_bits;
            bh += thr.backhaul_bits;
        }
        // Per-trial standard deviation is at most Q·√K ≈ 17.3 bits.
        let tol = 4.0 * 17.4 / (trials as f64).sqrt();
        assert!((ac / trials as f64 - exp.access_bits).abs() < tol);
        assert!((bh / trials as f64 - exp.backhaul_bits).abs() < tol);
    }

    #[test]
    fn zipf_examples() {
        let u = zipf_profile(4, 0.0, 2).unwrap();
        assert!(u.user(0).iter().all(|&q| (q - 0.25).abs() < 1e-15));
        let z = zipf_profile(2, 1.0, 1).unwrap();
        assert_relative_eq!(z.user(0)[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(z.user(0)[1], 1.0 / 3.0, max_relative = 1e-15);
        let z = zipf_profile(50, 0.8, 3).unwrap();
        assert!(z.user(1).windows(2).all(|w| w[0] >= w[1]));
        for (g, u) in z.global().iter().zip(z.user(2)) {
            assert_relative_eq!(g, u, max_relative = 1e-15);
        }
        assert!(zipf_profile(5, -1.0, 1).is_err());
    }

    #[test]
    fn profile_validation_and_global_mean() {
        assert!(PopularityProfile::new(vec![vec![0.5, 0.4]]).is_err());
        let p = PopularityProfile::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.global(), &[0.5, 0.5]);
    }

    #[test]
    fn ranks_break_ties_by_index() {
        assert_eq!(ranks(&[0.25, 0.25, 0.5]), vec![2, 3, 1]);
        let r = ranks(&[0.1; 6]);
        assert_eq!(r, vec![1, 2, 3, 4, 5, 6]);
    }

    fn three_file_placement() -> (PlacementMap, LibraryConfig) {
        let p = PopularityProfile::new(vec![vec![0.5, 0.3, 0.2]; 2]).unwrap();
        (PlacementMap::most_popular(&p, &[1, 1], 2).unwrap(), LibraryConfig::new(3, 7).unwrap())
    }

    #[test]
    fn throughput_examples() {
        let (pl, lib) = three_file_placement();
        let d = RequestVector { demands: vec![1, 2] };
        let t = nonuniform_throughput(&d, &pl, &lib).unwrap();
        assert_eq!(t.access_bits, 14.0);
        assert_eq!(t.backhaul_bits, 7.0);
        assert_eq!(active_subset(&d, &pl).unwrap(), vec![0, 1]);
        let d = RequestVector { demands: vec![0, 0] };
        let t = nonuniform_throughput(&d, &pl, &lib).unwrap();
        assert_eq!((t.access_bits, t.backhaul_bits), (0.0, 0.0));
        assert!(active_subset(&d, &pl).unwrap().is_empty());
        let d = RequestVector { demands: vec![0, 2] };
        assert_eq!(active_subset(&d, &pl).unwrap(), vec![1]);
    }

    #[test]
    fn nothing_cached_sends_everything() {
        let p = PopularityProfile::uniform(5, 3).unwrap();
        let pl = PlacementMap::most_popular(&p, &[0, 0, 0], 0).unwrap();
        let lib = LibraryConfig::new(5, 10).unwrap();
        let d = RequestVector { demands: vec![4, 0, 2] };
        let t = nonuniform_throughput(&d, &pl, &lib).unwrap();
        assert_eq!((t.access_bits, t.backhaul_bits), (30.0, 30.0));
        assert_eq!(active_subset(&d, &pl).unwrap().len(), 3);
        assert_eq!(pl.user_set(0), Vec::<usize>::new());
    }

    #[test]
    fn sampling_is_reproducible_and_respects_degenerate_profiles() {
        let p = PopularityProfile::new(vec![vec![0.0, 1.0, 0.0]; 4]).unwrap();
        for seed in 0..5 {
            assert_eq!(sample_demands(&p, seed).unwrap().demands, vec![1; 4]);
        }
        let z = zipf_profile(20, 1.0, 3).unwrap();
        assert_eq!(sample_demands(&z, 9).unwrap(), sample_demands(&z, 9).unwrap());
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let n = 10;
        let p = PopularityProfile::uniform(n, 1).unwrap();
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        let mut rng = rng_from(5);
        let dist = WeightedIndex::new(p.user(0)).unwrap();
        for _ in 0..draws {
            counts[dist.sample(&mut rng)] += 1;
        }
        let pr = 1.0 / n as f64;
        let sd = (draws as f64 * pr * (1.0 - pr)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * pr).abs() <= 4.0 * sd);
        }
    }

    #[test]
    fn uniform_profile_matches_uncoded_mean_access() {
        let (n, k, m) = (20usize, 4usize, 5usize);
        let p = PopularityProfile::uniform(n, k).unwrap();
        let pl = PlacementMap::most_popular(&p, &vec![m; k], 10).unwrap();
        let lib = LibraryConfig::new(n as u64, 1).unwrap();
        let trials = 20_000;
        let mut acc = 0.0;
        for t in 0..trials {
            let d = sample_demands(&p, t).unwrap();
            acc += nonuniform_throughput(&d, &pl, &lib).unwrap().access_bits;
        }
        let mean = acc / trials as f64;
        let expect = uncoded_throughput(k, &CacheSizes::new(10.0, m as f64), &lib).unwrap().access_bits;
        // Binomial(K, 1 − M/N) per trial.
        let se = (k as f64 * 0.75 * 0.25 / trials as f64).sqrt();
        assert!((mean - expect).abs() <= 4.0 * se, "{mean} vs {expect}");
    }

    #[test]
    fn nonuniform_energy_cases() {
        let h = sample_channels(2, 3, &[1.0; 2], 31).unwrap();
        let gamma = [1.0, 1.0];
        let link = LinkSetup {
            channel: &h,
            gamma: &gamma,
            noise: 1.0,
            bandwidth: 1.0,
        };
        let (pl, lib) = three_file_placement();
        let opts = SdrOptions::default();
        let none = nonuniform_ee(&link, &RequestVector { demands: vec![0, 0] }, &pl, &lib, 0.1, Design::Sdr, &opts).unwrap();
        assert_eq!(none.energy.access_joules, 0.0);
        assert_eq!(none.energy.backhaul_joules, 0.0);
        let one = nonuniform_ee(&link, &RequestVector { demands: vec![0, 2] }, &pl, &lib, 0.1, Design::Sdr, &opts).unwrap();
        // ζ = 1 and a matched filter need 1/‖h‖² watts, at rate 1 for 7 bits.
        let p = 1.0 / norm_sqr(&h.user(1));
        assert_relative_eq!(one.energy.access_joules, 7.0 * p, max_relative = 1e-6);
        assert_relative_eq!(one.energy.backhaul_joules, 0.1 * 7.0);
        let zf = nonuniform_ee(&link, &RequestVector { demands: vec![0, 2] }, &pl, &lib, 0.1, Design::Zf, &opts).unwrap();
        assert_relative_eq!(zf.energy.access_joules, 7.0 * p, max_relative = 1e-9);
    }

    #[test]
    fn nonuniform_delay_cases() {
        let h = sample_channels(3, 3, &[1.0; 3], 32).unwrap();
        let gamma = [0.5; 3];
        let link = LinkSetup {
            channel: &h,
            gamma: &gamma,
            noise: 1.0,
            bandwidth: 1.0,
        };
        let p = PopularityProfile::new(vec![vec![0.5, 0.3, 0.2]; 3]).unwrap();
        let pl = PlacementMap::most_popular(&p, &[1, 1, 1], 2).unwrap();
        let lib = LibraryConfig::new(3, 7).unwrap();
        let opts = BisectionOptions::default();
        let empty = nonuniform_delay(&link, &RequestVector { demands: vec![0, 0, 0] }, &pl, &lib, 5.0, Design::Zf, &opts).unwrap();
        assert_eq!(empty.delay.total_seconds, 0.0);
        for design in [Design::Zf, Design::Sdr] {
            let one = nonuniform_delay(&link, &RequestVector { demands: vec![0, 2, 0] }, &pl, &lib, 5.0, design, &opts).unwrap();
            let r = (1.0 + 5.0 * norm_sqr(&h.user(1))).log2();
            assert_relative_eq!(one.delay.total_seconds, 7.0 / r, max_relative = 1e-4);
            // The third user hits its cache, so dropping it changes nothing.
            let h2 = h.subset(&[0, 1]).unwrap();
            let link2 = LinkSetup {
                channel: &h2,
                gamma: &gamma[..2],
                ..link.clone()
            };
            let pl2 = PlacementMap::most_popular(&PopularityProfile::new(vec![vec![0.5, 0.3, 0.2]; 2]).unwrap(), &[1, 1], 2).unwrap();
            let same = nonuniform_delay(&link2, &RequestVector { demands: vec![0, 2] }, &pl2, &lib, 5.0, design, &opts).unwrap();
            assert_eq!(one.delay.total_seconds, same.delay.total_seconds);
        }
    }
}
