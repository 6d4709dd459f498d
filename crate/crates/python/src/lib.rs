//! Python bindings for the edgecache simulator.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use edgecache::cache_model::exact::exact_uncoded_access_throughput;
use edgecache::cache_model::oracle;
use edgecache::cache_model::{self as cm, CacheSizes, LibraryConfig};
use edgecache::delay::{maxmin_sinr_bisection, zf_delay_alloc, BisectionOptions};
use edgecache::ee::{self, ComparisonInputs, Regime, SdrOptions, Winner};
use edgecache::experiments::{run_sweep_with_workers, ScenarioConfig, SweepResult};
use edgecache::linalg::{CVector, C64};
use edgecache::wireless::{qos_targets, sample_channels, ChannelMatrix, PrecodingSolution, QosRule};

create_exception!(pyedgecache, EdgecacheError, PyException);

fn err(e: edgecache::Error) -> PyErr {
    EdgecacheError::new_err(e.to_string())
}

fn setup(n_files: u64, file_size_bits: u64, user_cache_files: f64, bs_cache_files: f64) -> PyResult<(LibraryConfig, CacheSizes)> {
    let lib = LibraryConfig::new(n_files, file_size_bits).map_err(err)?;
    let cache = CacheSizes::new(bs_cache_files, user_cache_files);
    cache.validate(&lib).map_err(err)?;
    Ok((lib, cache))
}

#[pyclass(name = "Throughputs", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyThroughputs {
    access_bits: f64,
    backhaul_bits: f64,
}

#[pymethods]
impl PyThroughputs {
    fn __repr__(&self) -> String {
        format!("Throughputs(access_bits={}, backhaul_bits={})", self.access_bits, self.backhaul_bits)
    }
}

impl From<cm::Throughputs> for PyThroughputs {
    fn from(t: cm::Throughputs) -> Self {
        Self {
            access_bits: t.access_bits,
            backhaul_bits: t.backhaul_bits,
        }
    }
}

#[pyfunction]
#[pyo3(signature = (k, n_files, file_size_bits, user_cache_files, bs_cache_files = 0.0))]
fn uncoded_throughput(k: usize, n_files: u64, file_size_bits: u64, user_cache_files: f64, bs_cache_files: f64) -> PyResult<PyThroughputs> {
    let (lib, cache) = setup(n_files, file_size_bits, user_cache_files, bs_cache_files)?;
    cm::uncoded_throughput(k, &cache, &lib).map(Into::into).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (k, n_files, file_size_bits, user_cache_files, bs_cache_files = 0.0))]
fn coded_throughput(k: usize, n_files: u64, file_size_bits: u64, user_cache_files: f64, bs_cache_files: f64) -> PyResult<PyThroughputs> {
    let (lib, cache) = setup(n_files, file_size_bits, user_cache_files, bs_cache_files)?;
    cm::coded_throughput(k, &cache, &lib).map(Into::into).map_err(err)
}

/// Uncoded access bits without the large-library approximation.
#[pyfunction]
fn exact_uncoded_access(k: usize, n_files: u64, file_size_bits: u64, user_cache_files: f64) -> PyResult<f64> {
    let (lib, cache) = setup(n_files, file_size_bits, user_cache_files, 0.0)?;
    exact_uncoded_access_throughput(k, &cache, &lib).map_err(err)
}

/// Bit-level uncoded simulation: `(access_mean, access_se, backhaul_mean, backhaul_se)`.
#[pyfunction]
#[pyo3(signature = (k, n_files, file_size_bits, user_cache_files, bs_cache_files, trials, seed = 0))]
fn oracle_uncoded(
    k: usize,
    n_files: u64,
    file_size_bits: u64,
    user_cache_files: f64,
    bs_cache_files: f64,
    trials: usize,
    seed: u64,
) -> PyResult<(f64, f64, f64, f64)> {
    let (lib, cache) = setup(n_files, file_size_bits, user_cache_files, bs_cache_files)?;
    let r = oracle::oracle_uncoded(k, &cache, &lib, trials, seed).map_err(err)?;
    Ok((r.access.mean, r.access.std_err, r.backhaul.mean, r.backhaul.std_err))
}

#[pyclass(name = "Channel", frozen)]
struct PyChannel {
    inner: ChannelMatrix,
}

#[pymethods]
impl PyChannel {
    /// Rayleigh draw with unit variance unless given.
    #[staticmethod]
    #[pyo3(signature = (users, antennas, seed, variance = 1.0))]
    fn sample(users: usize, antennas: usize, seed: u64, variance: f64) -> PyResult<Self> {
        let inner = sample_channels(users, antennas, &vec![variance; users], seed).map_err(err)?;
        Ok(Self { inner })
    }

    /// One row per user.
    #[staticmethod]
    fn from_parts(real: Vec<Vec<f64>>, imag: Vec<Vec<f64>>) -> PyResult<Self> {
        if real.len() != imag.len() || real.iter().zip(&imag).any(|(r, i)| r.len() != i.len()) {
            return Err(EdgecacheError::new_err("real and imaginary parts differ in shape"));
        }
        let users: Vec<CVector> = real
            .iter()
            .zip(&imag)
            .map(|(r, i)| CVector::from_iterator(r.len(), r.iter().zip(i).map(|(&a, &b)| C64::new(a, b))))
            .collect();
        let inner = ChannelMatrix::from_user_vectors(&users, None).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas()
    }

    fn condition_number(&self) -> f64 {
        self.inner.condition_number()
    }

    fn real(&self) -> Vec<Vec<f64>> {
        (0..self.inner.users()).map(|k| self.inner.user(k).iter().map(|z| z.re).collect()).collect()
    }

    fn imag(&self) -> Vec<Vec<f64>> {
        (0..self.inner.users()).map(|k| self.inner.user(k).iter().map(|z| z.im).collect()).collect()
    }
}

#[pyclass(name = "Design", get_all, frozen)]
struct PyDesign {
    powers: Vec<f64>,
    rates: Vec<f64>,
    total_power: f64,
    ee_bits_per_joule: f64,
}

fn design(p: &PrecodingSolution, energy: &ee::EnergyBreakdown) -> PyDesign {
    PyDesign {
        powers: p.powers(),
        rates: p.rates.clone(),
        total_power: p.total_power,
        ee_bits_per_joule: energy.ee(),
    }
}

#[allow(clippy::too_many_arguments)]
fn ee_common(
    channel: &PyChannel,
    gamma: Vec<f64>,
    user_fraction: f64,
    bs_fraction: f64,
    n_files: u64,
    file_size_bits: u64,
    bandwidth: f64,
) -> PyResult<(LibraryConfig, CacheSizes, edgecache::wireless::QosTargets)> {
    if gamma.len() != channel.inner.users() {
        return Err(EdgecacheError::new_err("need one rate per user"));
    }
    let lib = LibraryConfig::new(n_files, file_size_bits).map_err(err)?;
    let cache = CacheSizes::from_fractions(&lib, bs_fraction, user_fraction);
    cache.validate(&lib).map_err(err)?;
    let qos = qos_targets(QosRule::Uncoded { user_fraction }, &gamma, bandwidth).map_err(err)?;
    Ok((lib, cache, qos))
}

/// ZF beams at minimum power for uncoded delivery.
#[pyfunction]
#[pyo3(signature = (channel, gamma, user_fraction, bs_fraction, n_files = 1000, file_size_bits = 10_000_000, bandwidth = 1e6, noise = 1.0, eta = 1e-6))]
#[allow(clippy::too_many_arguments)]
fn zf_ee(
    channel: &PyChannel,
    gamma: Vec<f64>,
    user_fraction: f64,
    bs_fraction: f64,
    n_files: u64,
    file_size_bits: u64,
    bandwidth: f64,
    noise: f64,
    eta: f64,
) -> PyResult<PyDesign> {
    let (lib, cache, qos) = ee_common(channel, gamma, user_fraction, bs_fraction, n_files, file_size_bits, bandwidth)?;
    let d = ee::zf_ee_max(&channel.inner, &qos, noise, &cache, &lib, eta).map_err(err)?;
    Ok(design(&d.precoding, &d.energy))
}

/// Relaxation-based minimum-power beams for uncoded delivery.
#[pyfunction]
#[pyo3(signature = (channel, gamma, user_fraction, bs_fraction, n_files = 1000, file_size_bits = 10_000_000, bandwidth = 1e6, noise = 1.0, eta = 1e-6, candidates = 100, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn sdr_ee(
    channel: &PyChannel,
    gamma: Vec<f64>,
    user_fraction: f64,
    bs_fraction: f64,
    n_files: u64,
    file_size_bits: u64,
    bandwidth: f64,
    noise: f64,
    eta: f64,
    candidates: usize,
    seed: u64,
) -> PyResult<PyDesign> {
    let (lib, cache, qos) = ee_common(channel, gamma, user_fraction, bs_fraction, n_files, file_size_bits, bandwidth)?;
    let users: Vec<usize> = (0..channel.inner.users()).collect();
    let opts = SdrOptions {
        candidates,
        seed,
        ..SdrOptions::default()
    };
    let d = ee::sdr_ee_max_uncoded(&channel.inner, &qos, &users, noise, &opts).map_err(err)?;
    let k = channel.inner.users();
    let energy = ee::ee_uncoded(&d.precoding, k, &cache, &lib, eta).map_err(err)?;
    Ok(design(&d.precoding, &energy))
}

/// ZF delay-optimal allocation: `(tau_seconds, powers)`, with `powers` the received signal power per user.
#[pyfunction]
#[pyo3(signature = (channel, budget, user_fraction, rate_floor = 0.0, n_files = 1000, file_size_bits = 10_000_000, bandwidth = 1e6, noise = 1.0))]
#[allow(clippy::too_many_arguments)]
fn zf_delay(
    channel: &PyChannel,
    budget: f64,
    user_fraction: f64,
    rate_floor: f64,
    n_files: u64,
    file_size_bits: u64,
    bandwidth: f64,
    noise: f64,
) -> PyResult<(f64, Vec<f64>)> {
    let gamma = vec![rate_floor; channel.inner.users()];
    let (lib, cache, qos) = ee_common(channel, gamma, user_fraction, 0.0, n_files, file_size_bits, bandwidth)?;
    let d = zf_delay_alloc(&channel.inner, &qos, budget, noise, &cache, &lib).map_err(err)?;
    Ok((d.delay.total_seconds, d.powers))
}

/// Largest common SINR within `budget`: `(min_sinr, beam_powers)`.
#[pyfunction]
#[pyo3(signature = (channel, budget, noise = 1.0))]
fn maxmin_sinr(channel: &PyChannel, budget: f64, noise: f64) -> PyResult<(f64, Vec<f64>)> {
    let k = channel.inner.users();
    let out = maxmin_sinr_bisection(&channel.inner, &vec![0.0; k], budget, noise, &BisectionOptions::default()).map_err(err)?;
    Ok((out.min_sinr, out.beams.iter().map(|w| w.norm_squared()).collect()))
}

/// Closed-form comparison at a common rate: `(ee_uncoded, ee_coded, winner, threshold_user_cache)`.
#[pyfunction]
#[pyo3(signature = (regime, users, user_cache_files, n_files, power_uncoded, power_coded, rate, eta = 0.0))]
#[allow(clippy::too_many_arguments)]
fn compare(
    regime: &str,
    users: usize,
    user_cache_files: f64,
    n_files: f64,
    power_uncoded: f64,
    power_coded: f64,
    rate: f64,
    eta: f64,
) -> PyResult<(f64, f64, String, f64)> {
    let regime = match regime {
        "free_backhaul" => Regime::FreeBackhaul,
        "no_bs_cache" => Regime::NoBsCache,
        other => return Err(EdgecacheError::new_err(format!("unknown regime `{other}`"))),
    };
    let c = ee::analytic_comparison(
        regime,
        &ComparisonInputs {
            users,
            user_cache_files,
            n_files,
            power_uncoded,
            power_coded,
            rate,
            eta,
        },
    )
    .map_err(err)?;
    let winner = match c.winner {
        Winner::Uncoded => "uncoded",
        Winner::Coded => "coded",
        Winner::Tie => "tie",
    };
    Ok((c.ee_uncoded, c.ee_coded, winner.to_string(), c.threshold_user_cache))
}

#[pyfunction]
fn zipf_profile(n_files: usize, alpha: f64) -> PyResult<Vec<f64>> {
    let p = edgecache::popularity::zipf_profile(n_files, alpha, 1).map_err(err)?;
    Ok(p.user(0).to_vec())
}

#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Parses TOML; defaults when omitted.
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = ScenarioConfig::from_toml(toml.unwrap_or("")).map_err(err)?;
        Ok(Self { inner })
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[pyo3(signature = (workers = None))]
    fn run(&self, py: Python<'_>, workers: Option<usize>) -> PyResult<PySweepResult> {
        let cfg = self.inner.clone();
        let inner = py.detach(move || run_sweep_with_workers(&cfg, workers)).map_err(err)?;
        Ok(PySweepResult { inner })
    }
}

#[pyclass(name = "SweepRow", get_all, frozen)]
struct PySweepRow {
    user_cache_fraction: f64,
    bs_cache_fraction: f64,
    power_db: f64,
    strategy: String,
    ee_bits_per_joule: f64,
    tau_seconds: f64,
    access_bits: f64,
    backhaul_bits: f64,
    total_power: f64,
    se_ee: f64,
    se_tau: f64,
    failures: usize,
    realizations: usize,
}

#[pyclass(name = "SweepResult", frozen)]
struct PySweepResult {
    inner: SweepResult,
}

#[pymethods]
impl PySweepResult {
    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn rows(&self) -> Vec<PySweepRow> {
        self.inner
            .rows
            .iter()
            .map(|r| PySweepRow {
                user_cache_fraction: r.user_cache_fraction,
                bs_cache_fraction: r.bs_cache_fraction,
                power_db: r.power_db,
                strategy: r.strategy.to_string(),
                ee_bits_per_joule: r.ee_bits_per_joule,
                tau_seconds: r.tau_seconds,
                access_bits: r.access_bits,
                backhaul_bits: r.backhaul_bits,
                total_power: r.total_power,
                se_ee: r.se_ee,
                se_tau: r.se_tau,
                failures: r.failures,
                realizations: r.realizations_used,
            })
            .collect()
    }
}

#[pymodule]
fn pyedgecache(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EdgecacheError", m.py().get_type::<EdgecacheError>())?;
    m.add_class::<PyThroughputs>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyDesign>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PySweepRow>()?;
    m.add_class::<PySweepResult>()?;
    m.add_function(wrap_pyfunction!(uncoded_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(coded_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(exact_uncoded_access, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_uncoded, m)?)?;
    m.add_function(wrap_pyfunction!(zf_ee, m)?)?;
    m.add_function(wrap_pyfunction!(sdr_ee, m)?)?;
    m.add_function(wrap_pyfunction!(zf_delay, m)?)?;
    m.add_function(wrap_pyfunction!(maxmin_sinr, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(zipf_profile, m)?)?;
    Ok(())
}
