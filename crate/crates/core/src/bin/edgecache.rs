use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use edgecache::cache_model::exact::exact_uncoded_access_throughput;
use edgecache::cache_model::oracle::{oracle_coded_split, oracle_uncoded};
use edgecache::cache_model::{coded_params, coded_throughput, uncoded_throughput, CacheSizes, LibraryConfig};
use edgecache::ee::{analytic_comparison, ComparisonInputs, Regime};
use edgecache::experiments::{run_sweep_with_workers, workers_from_env, Metric, Popularity, ScenarioConfig, Strategy};
use edgecache::popularity::{expected_throughput, zipf_profile, PlacementMap};
use edgecache::{Error, Result};

#[derive(Parser)]
#[command(name = "edgecache", version, about = "Edge-caching throughput, energy-efficiency and delivery-time simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ThroughputKind {
    Uncoded,
    Coded,
    /// Uncoded access load without the large-library approximation.
    Exact,
    /// Expected loads under Zipf popularity with most-popular placement.
    Popular,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    Uncoded,
    Coded,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    FreeBackhaul,
    NoBsCache,
}

#[derive(clap::Args)]
struct Library {
    /// Users K.
    #[arg(long)]
    k: usize,
    /// Library size N in files.
    #[arg(long)]
    n: u64,
    /// File size Q in bits.
    #[arg(long)]
    q: u64,
    /// User cache size M_u in files.
    #[arg(long)]
    mu: f64,
    /// BS cache size M_b in files.
    #[arg(long, default_value_t = 0.0)]
    mb: f64,
}

#[derive(clap::Args)]
struct Scenario {
    /// TOML scenario; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    /// Antennas L.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    /// M_u / N.
    #[arg(long)]
    mu_frac: Option<f64>,
    /// M_b / N.
    #[arg(long)]
    mb_frac: Option<f64>,
    /// Sum power budget in dB.
    #[arg(long)]
    power_db: Option<f64>,
    /// Rate per user in bit/s.
    #[arg(long)]
    gamma: Option<f64>,
    /// Backhaul price in J/bit.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<String>>,
    /// Zipf exponent; uniform popularity when absent.
    #[arg(long)]
    zipf: Option<f64>,
    #[arg(long, default_value_t = 1)]
    realizations: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Backhaul and access loads of one cache configuration.
    Throughput {
        #[arg(long, value_enum)]
        strategy: ThroughputKind,
        #[command(flatten)]
        lib: Library,
        /// Zipf exponent for `popular`.
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
    },
    /// Energy efficiency of one scenario.
    Ee {
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Delivery time of one scenario.
    Delay {
        #[command(flatten)]
        scenario: Scenario,
    },
    /// Runs a configured sweep and writes CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the resolved configuration as JSON; stderr when absent.
        #[arg(long)]
        echo: Option<PathBuf>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Worker threads; defaults to EDGECACHE_WORKERS or all cores.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Bit-level simulation of a caching scheme checked against its closed form.
    Oracle {
        #[arg(long, value_enum, default_value = "uncoded")]
        scheme: Scheme,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 10)]
        n: u64,
        #[arg(long, default_value_t = 100)]
        q: u64,
        #[arg(long, default_value_t = 5.0)]
        mu: f64,
        #[arg(long, default_value_t = 2.0)]
        mb: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allowed distance in standard errors.
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
    },
    /// Closed-form EE comparison when every link runs at one rate.
    Compare {
        #[arg(long, value_enum)]
        regime: RegimeArg,
        #[arg(long)]
        k: usize,
        /// User cache size in files.
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        n: f64,
        #[arg(long)]
        p_unc: f64,
        #[arg(long)]
        p_cod: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(e.to_string())
}

fn throughput(kind: ThroughputKind, a: &Library, alpha: f64) -> Result<()> {
    let lib = LibraryConfig::new(a.n, a.q)?;
    let cache = CacheSizes::new(a.mb, a.mu);
    cache.validate(&lib)?;
    let out = match kind {
        ThroughputKind::Uncoded => {
            let t = uncoded_throughput(a.k, &cache, &lib)?;
            json!({"strategy": "uncoded", "access_bits": t.access_bits, "backhaul_bits": t.backhaul_bits})
        }
        ThroughputKind::Coded => {
            let t = coded_throughput(a.k, &cache, &lib)?;
            let p = coded_params(a.k, &cache, &lib)?;
            json!({"strategy": "coded", "access_bits": t.access_bits, "backhaul_bits": t.backhaul_bits, "m": p.m, "delta": p.delta})
        }
        ThroughputKind::Exact => {
            let exact = exact_uncoded_access_throughput(a.k, &cache, &lib)?;
            let approx = uncoded_throughput(a.k, &cache, &lib)?.access_bits;
            json!({"strategy": "exact", "access_bits": exact, "approximate_access_bits": approx})
        }
        ThroughputKind::Popular => {
            let n = usize::try_from(a.n).map_err(|_| Error::Config("library too large".into()))?;
            let profile = zipf_profile(n, alpha, a.k)?;
            let placement = PlacementMap::most_popular(&profile, &vec![a.mu.round() as usize; a.k], a.mb.round() as usize)?;
            let t = expected_throughput(&profile, &placement, &lib)?;
            json!({"strategy": "popular", "alpha": alpha, "access_bits": t.access_bits, "backhaul_bits": t.backhaul_bits})
        }
    };
    print_json(&out);
    Ok(())
}

fn scenario_config(s: &Scenario, metric: Metric) -> Result<ScenarioConfig> {
    let mut cfg = match &s.config {
        Some(p) => ScenarioConfig::from_toml(&fs::read_to_string(p).map_err(io_err)?)?,
        None => ScenarioConfig::default(),
    };
    cfg.run.metric = metric;
    cfg.run.realizations = s.realizations;
    cfg.grid.user_cache_fraction = vec![s.mu_frac.unwrap_or(cfg.grid.user_cache_fraction[0])];
    cfg.grid.bs_cache_fraction = vec![s.mb_frac.unwrap_or(cfg.grid.bs_cache_fraction[0])];
    cfg.grid.power_db = vec![s.power_db.unwrap_or(cfg.grid.power_db[0])];
    let sys = &mut cfg.system;
    if let Some(v) = s.k {
        sys.users = v;
    }
    if let Some(v) = s.l {
        sys.antennas = v;
    }
    if let Some(v) = s.n {
        sys.n_files = v;
    }
    if let Some(v) = s.q {
        sys.file_size_bits = v;
    }
    if let Some(v) = s.gamma {
        sys.rate_bps = edgecache::experiments::PerUser::Shared(v);
    }
    if let Some(v) = s.eta {
        sys.eta_joules_per_bit = v;
    }
    if let Some(list) = &s.strategy {
        cfg.run.strategies = list.iter().map(|x| x.parse::<Strategy>()).collect::<Result<_>>()?;
    }
    if let Some(a) = s.zipf {
        cfg.run.popularity = Popularity::Zipf(a);
    }
    if let Some(seed) = s.seed {
        cfg.run.base_seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single(s: &Scenario, metric: Metric) -> Result<()> {
    let cfg = scenario_config(s, metric)?;
    let res = run_sweep_with_workers(&cfg, workers_from_env())?;
    let rows: Vec<_> = res
        .rows
        .iter()
        .map(|r| {
            json!({
                "strategy": r.strategy,
                "ee_bits_per_joule": r.ee_bits_per_joule,
                "tau_seconds": r.tau_seconds,
                "access_bits": r.access_bits,
                "backhaul_bits": r.backhaul_bits,
                "total_power": r.total_power,
                "realizations": r.realizations_used,
                "failures": r.failures,
            })
        })
        .collect();
    print_json(&json!({"scenario_hash": res.scenario_hash, "results": rows}));
    Ok(())
}

fn sweep(config: &PathBuf, out: Option<&PathBuf>, echo: Option<&PathBuf>, realizations: Option<usize>, workers: Option<usize>) -> Result<()> {
    let mut cfg = ScenarioConfig::from_toml(&fs::read_to_string(config).map_err(io_err)?)?;
    if let Some(r) = realizations {
        cfg.run.realizations = r;
    }
    cfg.validate()?;
    match echo {
        Some(p) => fs::write(p, cfg.to_json()).map_err(io_err)?,
        None => eprintln!("{}", cfg.to_json()),
    }
    let res = run_sweep_with_workers(&cfg, workers.or_else(workers_from_env))?;
    for r in &res.rows {
        if r.failures > 0 || r.redraws > 0 {
            log::warn!(
                "{} at M_u/N = {}: {} failures, {} redraws",
                r.strategy,
                r.user_cache_fraction,
                r.failures,
                r.redraws
            );
        }
    }
    match out {
        Some(p) => res.write_csv(fs::File::create(p).map_err(io_err)?),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            res.write_csv(&mut lock)?;
            lock.flush().map_err(io_err)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn oracle(scheme: Scheme, trials: usize, k: usize, n: u64, q: u64, mu: f64, mb: f64, seed: u64, sigmas: f64) -> Result<bool> {
    let lib = LibraryConfig::new(n, q)?;
    let cache = CacheSizes::new(mb, mu);
    let start = std::time::Instant::now();
    let (name, report, expected) = match scheme {
        Scheme::Uncoded => ("uncoded", oracle_uncoded(k, &cache, &lib, trials, seed)?, uncoded_throughput(k, &cache, &lib)?),
        Scheme::Coded => ("coded", oracle_coded_split(k, &cache, &lib, trials, seed)?, coded_throughput(k, &cache, &lib)?),
    };
    let za = report.access.z_score(expected.access_bits);
    let zb = report.backhaul.z_score(expected.backhaul_bits);
    let pass = za.abs() <= sigmas && zb.abs() <= sigmas;
    println!(
        "{} {name}: access {:.4} vs {:.4} (z = {za:.3}), backhaul {:.4} vs {:.4} (z = {zb:.3}), {trials} trials in {:.2} s",
        if pass { "PASS" } else { "FAIL" },
        report.access.mean,
        expected.access_bits,
        report.backhaul.mean,
        expected.backhaul_bits,
        start.elapsed().as_secs_f64()
    );
    Ok(pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Throughput { strategy, lib, alpha } => throughput(strategy, &lib, alpha).map(|_| true),
        Command::Ee { scenario } => single(&scenario, Metric::Ee).map(|_| true),
        Command::Delay { scenario } => single(&scenario, Metric::Delay).map(|_| true),
        Command::Sweep {
            config,
            out,
            echo,
            realizations,
            workers,
        } => sweep(&config, out.as_ref(), echo.as_ref(), realizations, workers).map(|_| true),
        Command::Oracle {
            scheme,
            trials,
            k,
            n,
            q,
            mu,
            mb,
            seed,
            sigmas,
        } => oracle(scheme, trials, k, n, q, mu, mb, seed, sigmas),
        Command::Compare {
            regime,
            k,
            mu,
            n,
            p_unc,
            p_cod,
            rate,
            eta,
        } => {
            let regime = match regime {
                RegimeArg::FreeBackhaul => Regime::FreeBackhaul,
                RegimeArg::NoBsCache => Regime::NoBsCache,
            };
            let inputs = ComparisonInputs {
                users: k,
                user_cache_files: mu,
                n_files: n,
                power_uncoded: p_unc,
                power_coded: p_cod,
                rate,
                eta,
            };
            let c = analytic_comparison(regime, &inputs)?;
            print_json(&serde_json::to_value(c).expect("json"));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", json!({"error": e.to_string()}));
            ExitCode::from(1)
        }
    }
}
