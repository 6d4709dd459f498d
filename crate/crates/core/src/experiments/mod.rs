//! Monte-Carlo sweeps over cache sizes and power budgets, with CSV output.
//!
//! Channel draws depend only on the base seed and the realization index, so
//! every grid point and strategy sees the same channels.

pub mod config;

use rand::seq::index;
use rayon::prelude::*;
use serde::Serialize;

pub use config::{GridConfig, Metric, PerUser, Popularity, RunConfig, ScenarioConfig, Strategy, SystemConfig};

use crate::cache_model::oracle::Estimate;
use crate::cache_model::{
    binomial, coded_sessions, coded_throughput, uncoded_throughput, CacheSizes, LibraryConfig,
    Throughputs,
};
use crate::delay::{coded_delay_bisection, maxmin_sinr_bisection, tau_uncoded, zf_delay_alloc, BisectionOptions};
use crate::ee::{
    assemble_coded, ee_uncoded, sdr_ee_max_coded, sdr_ee_max_uncoded, user_subsets, zf_ee_max,
    EnergyBreakdown, SdrOptions,
};
use crate::error::{Error, Result};
use crate::linalg::{norm_sqr, CVector};
use crate::popularity::{
    nonuniform_delay, nonuniform_ee, sample_demands, zipf_profile, Design, LinkSetup,
    PlacementMap, PopularityProfile,
};
use crate::rng::{derive_seed, rng_from};
use crate::wireless::{
    qos_targets, sample_channels, sinr_for_rate, unicast_rates, ChannelMatrix, PrecodingSolution,
    QosRule, Target,
};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "EDGECACHE_WORKERS";

const STREAM_CHANNEL: u64 = 0;
const STREAM_DEMANDS: u64 = 1;
const STREAM_SDR: u64 = 2;
const STREAM_SUBSETS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub user_cache_fraction: f64,
    pub bs_cache_fraction: f64,
    pub power_db: f64,
}

impl GridPoint {
    /// Linear sum power budget.
    pub fn power(&self) -> f64 {
        10f64.powf(self.power_db / 10.0)
    }
}

impl GridConfig {
    /// Grid points with the user cache varying fastest.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &power_db in &self.power_db {
            for &bs in &self.bs_cache_fraction {
                for &user in &self.user_cache_fraction {
                    out.push(GridPoint {
                        user_cache_fraction: user,
                        bs_cache_fraction: bs,
                        power_db,
                    });
                }
            }
        }
        out
    }
}

/// Result of one realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub ee: f64,
    pub tau: f64,
    pub access_bits: f64,
    pub backhaul_bits: f64,
    /// Sum of unicast beam powers, or the mean multicast beam power.
    pub total_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationOutcome {
    pub sample: Result<Sample>,
    pub redraws: usize,
}

/// One CSV row: a grid point and strategy aggregated over realizations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scenario_hash: String,
    pub user_cache_fraction: f64,
    pub bs_cache_fraction: f64,
    pub power_db: f64,
    pub strategy: &'static str,
    pub ee_bits_per_joule: f64,
    pub tau_seconds: f64,
    pub access_bits: f64,
    pub backhaul_bits: f64,
    pub total_power: f64,
    pub se_ee: f64,
    pub se_tau: f64,
    pub failures: usize,
    #[serde(skip)]
    pub realizations_used: usize,
    #[serde(skip)]
    pub redraws: usize,
    #[serde(skip)]
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scenario_hash: String,
    pub config: ScenarioConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        w.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is UTF-8")
    }

    pub fn row(&self, strategy: Strategy, user_cache_fraction: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy.name() && r.user_cache_fraction == user_cache_fraction)
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.parse().ok().filter(|&w| w > 0)
}

pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    run_sweep_with_workers(cfg, workers_from_env())
}

/// Runs every grid point, strategy and realization. The output does not
/// depend on `workers`.
pub fn run_sweep_with_workers(cfg: &ScenarioConfig, workers: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let points = cfg.grid.points();
    warn_subset_cap(cfg, &points)?;
    let strategies = &cfg.run.strategies;
    let n = cfg.run.realizations;
    let tasks: Vec<(usize, usize, usize)> = (0..points.len())
        .flat_map(|g| (0..strategies.len()).flat_map(move |s| (0..n).map(move |r| (g, s, r))))
        .collect();
    let run = || -> Vec<RealizationOutcome> {
        tasks
            .par_iter()
            .map(|&(g, s, r)| evaluate(cfg, &points[g], strategies[s], r))
            .collect()
    };
    let outcomes = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    let hash = cfg.hash();
    let rows = outcomes
        .chunks(n)
        .zip(&tasks.iter().step_by(n).collect::<Vec<_>>())
        .map(|(chunk, &&(g, s, _))| aggregate(&hash, &points[g], strategies[s], chunk))
        .collect();
    Ok(SweepResult {
        scenario_hash: hash,
        config: cfg.clone(),
        rows,
    })
}

fn warn_subset_cap(cfg: &ScenarioConfig, points: &[GridPoint]) -> Result<()> {
    let Some(cap) = cfg.run.max_subsets else {
        return Ok(());
    };
    if !cfg.run.strategies.contains(&Strategy::CodedSdr) {
        return Ok(());
    }
    let lib = library(cfg)?;
    let k = cfg.system.users;
    for p in points {
        let cache = CacheSizes::from_fractions(&lib, p.bs_cache_fraction, p.user_cache_fraction);
        for s in coded_sessions(k, &cache, &lib)? {
            let groups = binomial(k, s.group_size());
            if groups > cap as f64 {
                log::warn!(
                    "M_u/N = {}: {groups} groups of {} exceed max_subsets = {cap}; coded results are subsampled estimates",
                    p.user_cache_fraction,
                    s.group_size()
                );
            }
        }
    }
    Ok(())
}

fn aggregate(hash: &str, p: &GridPoint, strategy: Strategy, outcomes: &[RealizationOutcome]) -> SweepRow {
    let samples: Vec<Sample> = outcomes.iter().filter_map(|o| o.sample.as_ref().ok().copied()).collect();
    let failures = outcomes.len() - samples.len();
    for o in outcomes {
        if let Err(e) = &o.sample {
            log::debug!("{} at {:?}: {e}", strategy.name(), p);
        }
    }
    let field = |f: fn(&Sample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
    let (ee, se_ee) = mean_se(&field(|s| s.ee));
    let (tau, se_tau) = mean_se(&field(|s| s.tau));
    SweepRow {
        scenario_hash: hash.to_string(),
        user_cache_fraction: p.user_cache_fraction,
        bs_cache_fraction: p.bs_cache_fraction,
        power_db: p.power_db,
        strategy: strategy.name(),
        ee_bits_per_joule: ee,
        tau_seconds: tau,
        access_bits: mean_se(&field(|s| s.access_bits)).0,
        backhaul_bits: mean_se(&field(|s| s.backhaul_bits)).0,
        total_power: mean_se(&field(|s| s.total_power)).0,
        se_ee,
        se_tau,
        failures,
        realizations_used: samples.len(),
        redraws: outcomes.iter().map(|o| o.redraws).sum(),
        samples,
    }
}

/// Mean and standard error. Infinite samples give an infinite mean, with a
/// zero error only if every sample is infinite.
fn mean_se(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, 0.0);
    }
    let inf = v.iter().filter(|x| x.is_infinite()).count();
    if inf > 0 {
        let se = if inf == v.len() { 0.0 } else { f64::INFINITY };
        return (f64::INFINITY, se);
    }
    let e = Estimate::from_samples(v);
    (e.mean, e.std_err)
}

fn library(cfg: &ScenarioConfig) -> Result<LibraryConfig> {
    LibraryConfig::new(cfg.system.n_files, cfg.system.file_size_bits)
}

/// Draws the channel of realization `r`, redrawing ill-conditioned ones.
pub fn draw_channel(cfg: &ScenarioConfig, r: usize) -> (Result<ChannelMatrix>, usize) {
    let s = &cfg.system;
    let variances = match s.channel_variance.resolve(s.users) {
        Ok(v) => v,
        Err(e) => return (Err(e), 0),
    };
    let mut cond = f64::INFINITY;
    for attempt in 0..=cfg.run.max_redraws {
        let seed = derive_seed(cfg.run.base_seed, &[STREAM_CHANNEL, r as u64, attempt as u64]);
        let h = match sample_channels(s.users, s.antennas, &variances, seed) {
            Ok(h) => h,
            Err(e) => return (Err(e), attempt),
        };
        cond = h.condition_number();
        if cond <= s.max_condition {
            return (Ok(h), attempt);
        }
    }
    (
        Err(Error::IllConditioned {
            cond,
            limit: s.max_condition,
        }),
        cfg.run.max_redraws + 1,
    )
}

/// Solves one realization of one grid point with one strategy.
pub fn evaluate(cfg: &ScenarioConfig, p: &GridPoint, strategy: Strategy, r: usize) -> RealizationOutcome {
    let (h, redraws) = draw_channel(cfg, r);
    let sample = h.and_then(|h| {
        let ctx = Context::new(cfg, p, &h, r)?;
        match &cfg.run.popularity {
            Popularity::Uniform => ctx.uniform(strategy),
            pop => ctx.nonuniform(pop, strategy),
        }
    });
    RealizationOutcome { sample, redraws }
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    h: &'a ChannelMatrix,
    lib: LibraryConfig,
    cache: CacheSizes,
    point: GridPoint,
    r: usize,
    sdr: SdrOptions,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig, point: &GridPoint, h: &'a ChannelMatrix, r: usize) -> Result<Self> {
        let lib = library(cfg)?;
        let cache = CacheSizes::from_fractions(&lib, point.bs_cache_fraction, point.user_cache_fraction);
        let sdr = SdrOptions {
            candidates: cfg.run.candidates,
            seed: derive_seed(cfg.run.base_seed, &[STREAM_SDR, r as u64]),
            ..SdrOptions::default()
        };
        Ok(Self {
            cfg,
            h,
            lib,
            cache,
            point: *point,
            r,
            sdr,
        })
    }

    fn k(&self) -> usize {
        self.cfg.system.users
    }

    fn noise(&self) -> f64 {
        self.cfg.system.noise_power
    }

    fn bandwidth(&self) -> f64 {
        self.cfg.system.bandwidth_hz
    }

    fn eta(&self) -> f64 {
        self.cfg.system.eta_joules_per_bit
    }

    fn bisection(&self) -> BisectionOptions {
        BisectionOptions {
            sdr: self.sdr,
            ..BisectionOptions::default()
        }
    }

    /// Per-user rate the design must guarantee.
    fn rates(&self) -> Result<Vec<f64>> {
        match self.cfg.run.metric {
            Metric::Ee => self.cfg.system.rate_bps.resolve(self.k()),
            Metric::Delay => Ok(vec![self.cfg.run.delay_rate_floor_bps; self.k()]),
        }
    }

    fn uniform(&self, strategy: Strategy) -> Result<Sample> {
        match strategy {
            Strategy::CodedSdr => self.coded(),
            _ => self.uncoded(strategy),
        }
    }

    fn uncoded(&self, strategy: Strategy) -> Result<Sample> {
        let k = self.k();
        let mu = self.cache.user_fraction(&self.lib);
        let qos = qos_targets(QosRule::Uncoded { user_fraction: mu }, &self.rates()?, self.bandwidth())?;
        let users: Vec<usize> = (0..k).collect();
        let precoding = match (self.cfg.run.metric, strategy) {
            (Metric::Ee, Strategy::UncodedZf) => {
                zf_ee_max(self.h, &qos, self.noise(), &self.cache, &self.lib, self.eta())?.precoding
            }
            (Metric::Ee, _) => sdr_ee_max_uncoded(self.h, &qos, &users, self.noise(), &self.sdr)?.precoding,
            (Metric::Delay, Strategy::UncodedZf) => {
                let d = zf_delay_alloc(self.h, &qos, self.point.power(), self.noise(), &self.cache, &self.lib)?;
                unicast_solution(d.beams, d.rates)
            }
            (Metric::Delay, _) => {
                let out = maxmin_sinr_bisection(self.h, &qos.sinr_floor, self.point.power(), self.noise(), &self.bisection())?;
                let rates = unicast_rates(self.h, &out.beams, self.noise(), self.bandwidth())?;
                unicast_solution(out.beams, rates)
            }
        };
        let energy = ee_uncoded(&precoding, k, &self.cache, &self.lib, self.eta())?;
        let tau = tau_or_inf(tau_uncoded(&precoding.rates, &self.cache, &self.lib).map(|d| d.total_seconds))?;
        let thr = uncoded_throughput(k, &self.cache, &self.lib)?;
        Ok(sample(&energy, tau, thr, precoding.total_power))
    }

    /// Groups of one session, subsampled when over the cap.
    fn session_groups(&self, size: usize, session: usize) -> Vec<Vec<usize>> {
        let all = user_subsets(self.k(), size);
        match self.cfg.run.max_subsets {
            Some(cap) if cap < all.len() => {
                let seed = derive_seed(self.cfg.run.base_seed, &[STREAM_SUBSETS, self.r as u64, session as u64]);
                let mut picked = index::sample(&mut rng_from(seed), all.len(), cap).into_vec();
                picked.sort_unstable();
                picked.into_iter().map(|i| all[i].clone()).collect()
            }
            _ => all,
        }
    }

    fn coded(&self) -> Result<Sample> {
        let k = self.k();
        let rates = self.rates()?;
        let sessions = coded_sessions(k, &self.cache, &self.lib)?;
        let mut power_per_rate = Vec::with_capacity(sessions.len());
        let mut tau = 0.0;
        let (mut power_sum, mut beams) = (0.0, 0usize);
        for (si, s) in sessions.iter().enumerate() {
            let rule = QosRule::Coded { users: k, m: s.m };
            let groups = self.session_groups(s.group_size(), si);
            let scale = binomial(k, s.group_size()) / groups.len() as f64;
            let (mut ppr, mut inv_rate) = (0.0, 0.0);
            for g in &groups {
                let floor = g.iter().map(|&u| rule.effective_rate(rates[u])).fold(f64::INFINITY, f64::min);
                let (beam, rate): (CVector, f64) = match self.cfg.run.metric {
                    Metric::Ee => {
                        let d = sdr_ee_max_coded(self.h, g, floor, self.noise(), self.bandwidth(), &self.sdr)?;
                        (d.beam, d.rate)
                    }
                    Metric::Delay => {
                        let snr = sinr_for_rate(floor, self.bandwidth());
                        let d = coded_delay_bisection(self.h, g, snr, self.point.power(), self.noise(), self.bandwidth(), &self.bisection())?;
                        (d.beam, d.rate)
                    }
                };
                if !(rate > 0.0) {
                    return Err(Error::ZeroRate { user: g[0] });
                }
                let pw = norm_sqr(&beam);
                ppr += pw / rate;
                inv_rate += 1.0 / rate;
                power_sum += pw;
                beams += 1;
            }
            power_per_rate.push(ppr * scale);
            tau += s.access_bits / binomial(k, s.group_size()) * inv_rate * scale;
        }
        let energy = assemble_coded(&sessions, &power_per_rate, k, &self.lib, self.eta());
        let thr = coded_throughput(k, &self.cache, &self.lib)?;
        let mean_power = if beams > 0 { power_sum / beams as f64 } else { 0.0 };
        Ok(sample(&energy, tau, thr, mean_power))
    }

    fn nonuniform(&self, pop: &Popularity, strategy: Strategy) -> Result<Sample> {
        let k = self.k();
        let n = usize::try_from(self.cfg.system.n_files).map_err(|_| Error::Config("library too large".into()))?;
        let profile = match pop {
            Popularity::Zipf(alpha) => zipf_profile(n, *alpha, k)?,
            Popularity::Custom(q) => PopularityProfile::new(vec![q.clone(); k])?,
            Popularity::Uniform => PopularityProfile::uniform(n, k)?,
        };
        let user_files = (self.point.user_cache_fraction * n as f64).round() as usize;
        let bs_files = (self.point.bs_cache_fraction * n as f64).round() as usize;
        let placement = PlacementMap::most_popular(&profile, &vec![user_files; k], bs_files)?;
        let demands = sample_demands(&profile, derive_seed(self.cfg.run.base_seed, &[STREAM_DEMANDS, self.r as u64]))?;
        let rates = self.rates()?;
        let link = LinkSetup {
            channel: self.h,
            gamma: &rates,
            noise: self.noise(),
            bandwidth: self.bandwidth(),
        };
        let design = match strategy {
            Strategy::UncodedZf => Design::Zf,
            Strategy::UncodedSdr => Design::Sdr,
            Strategy::CodedSdr => return Err(Error::Config("coded_sdr needs uniform popularity".into())),
        };
        let q = self.lib.q();
        match self.cfg.run.metric {
            Metric::Ee => {
                let out = nonuniform_ee(&link, &demands, &placement, &self.lib, self.eta(), design, &self.sdr)?;
                let tau = out.rates.iter().map(|r| q / r).sum::<f64>() / k as f64;
                let power = out.beams.iter().map(norm_sqr).sum();
                Ok(sample(&out.energy, tau, out.throughput, power))
            }
            Metric::Delay => {
                let out = nonuniform_delay(&link, &demands, &placement, &self.lib, self.point.power(), design, &self.bisection())?;
                let thr = crate::popularity::nonuniform_throughput(&demands, &placement, &self.lib)?;
                let access: f64 = out.delay.powers.iter().zip(&out.rates).map(|(p, r)| q * p / r).sum();
                let energy = EnergyBreakdown::new(k as f64 * q, self.eta() * thr.backhaul_bits, access);
                let power = out.delay.powers.iter().sum();
                Ok(sample(&energy, out.delay.total_seconds / k as f64, thr, power))
            }
        }
    }
}

fn unicast_solution(beams: Vec<CVector>, rates: Vec<f64>) -> PrecodingSolution {
    PrecodingSolution::new((0..beams.len()).map(Target::User).collect(), beams, rates)
}

fn tau_or_inf(t: Result<f64>) -> Result<f64> {
    match t {
        Err(Error::ZeroRate { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

fn sample(energy: &EnergyBreakdown, tau: f64, thr: Throughputs, power: f64) -> Sample {
    Sample {
        ee: energy.ee(),
        tau,
        access_bits: thr.access_bits,
        backhaul_bits: thr.backhaul_bits,
        total_power: power,
    }
}
