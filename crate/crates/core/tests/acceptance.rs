//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::time::Instant;

use num_bigint::BigUint;
use rand::Rng;

use edgecache::cache_model::exact::{exact_uncoded_access_throughput, falling_factorial, request_pattern_counts};
use edgecache::cache_model::oracle::{oracle_coded, oracle_coded_split, oracle_uncoded};
use edgecache::cache_model::{binomial, coded_throughput, uncoded_throughput, CacheSizes, LibraryConfig};
use edgecache::delay::{coded_delay_bisection, maxmin_sinr_bisection, zf_delay_alloc, BisectionOptions};
use edgecache::ee::{analytic_comparison, sdr_ee_max_uncoded, zf_closed_form_ee, zf_ee_max, ComparisonInputs, Regime, SdrOptions, Winner};
use edgecache::experiments::{run_sweep_with_workers, Metric, ScenarioConfig, Strategy};
use edgecache::linalg::{CMatrix, CVector};
use edgecache::popularity::{
    active_subset, nonuniform_delay, nonuniform_ee, nonuniform_throughput, sample_demands, zipf_profile, Design,
    LinkSetup, PlacementMap,
};
use edgecache::rng::{derive_seed, rng_from};
use edgecache::wireless::{qos_targets, sample_channels, ChannelMatrix, QosRule};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

/// `|h_kᴴ w|²`
fn gain(h: &CVector, w: &CVector) -> f64 {
    h.dotc(w).norm_sqr()
}

/// Pseudo-inverse columns `Hᴴ(HHᴴ)⁻¹`, computed here independently of the
/// library's ZF routine.
fn zf_columns(h: &ChannelMatrix) -> Vec<CVector> {
    let k = h.users();
    let rows: Vec<CVector> = (0..k).map(|i| h.user(i)).collect();
    let l = rows[0].len();
    let hm = CMatrix::from_fn(k, l, |r, c| rows[r][c].conj());
    let pinv = hm.adjoint() * (&hm * hm.adjoint()).try_inverse().expect("full rank");
    (0..k).map(|c| pinv.column(c).into_owned()).collect()
}

fn sinrs(h: &ChannelMatrix, beams: &[CVector], noise: f64) -> Vec<f64> {
    (0..beams.len())
        .map(|k| {
            let hk = h.user(k);
            let interf: f64 = beams.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, w)| gain(&hk, w)).sum();
            gain(&hk, &beams[k]) / (interf + noise)
        })
        .collect()
}

fn c1_uncoded_oracle() -> Outcome {
    let start = Instant::now();
    let lib = LibraryConfig::new(10, 100).unwrap();
    let r = oracle_uncoded(4, &CacheSizes::new(2.0, 5.0), &lib, 10_000, 11).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (za, zb) = (r.access.z_score(200.0), r.backhaul.z_score(160.0));
    check(
        za.abs() <= 3.0 && zb.abs() <= 3.0 && secs < 5.0,
        format!("access {:.3} (z {za:.2}), backhaul {:.3} (z {zb:.2}), {secs:.2} s", r.access.mean, r.backhaul.mean),
    )
}

fn c2_coded_exactness() -> Outcome {
    let (n, mb) = (10u64, 4.0);
    let p = mb / n as f64;
    let mut worst_z: f64 = 0.0;
    let mut cases = 0;
    for k in 2..=5usize {
        for m in 0..k {
            let q = 3 * binomial(k, m) as u64;
            let lib = LibraryConfig::new(n, q).unwrap();
            let seed = derive_seed(2, &[k as u64, m as u64]);
            let r = oracle_coded(k, &lib, m, p, 400, seed).map_err(|e| e.to_string())?;
            let access = q as f64 * (k - m) as f64 / (m + 1) as f64;
            if r.access.mean != access || r.access.std_err != 0.0 {
                return Err(format!("K={k} m={m}: access {} != {access}", r.access.mean));
            }
            let z = r.backhaul.z_score(access * (1.0 - p.powi(m as i32 + 1)));
            worst_z = worst_z.max(z.abs());
            cases += 1;
        }
    }
    // K = 4, M_u = 3 of N = 8: m = 1, δ = 1/2, split 12 + 12 bits of Q = 24.
    let lib = LibraryConfig::new(8, 24).unwrap();
    let cache = CacheSizes::new(2.0, 3.0);
    let split = oracle_coded_split(4, &cache, &lib, 50, 3).map_err(|e| e.to_string())?;
    let two_term = 0.5 * 24.0 * 3.0 / 2.0 + 0.5 * 24.0 * 2.0 / 3.0;
    let formula = coded_throughput(4, &cache, &lib).unwrap().access_bits;
    check(
        worst_z <= 3.0 && split.access.mean == two_term && close(formula, two_term, 1e-15),
        format!("{cases} (K, m) cases exact, worst backhaul |z| {worst_z:.2}; split access {} = {two_term}", split.access.mean),
    )
}

fn c3_identity() -> Outcome {
    for k in 1..=8usize {
        let a = request_pattern_counts(k);
        for n in 1..=50u64 {
            let sum: BigUint = a.iter().enumerate().map(|(l, al)| al * falling_factorial(n, l)).sum();
            if sum != BigUint::from(n).pow(k as u32) {
                return Err(format!("identity fails at K={k}, N={n}"));
            }
        }
    }
    let lib = LibraryConfig::new(1000, 10_000_000).unwrap();
    let cache = CacheSizes::new(0.0, 300.0);
    let exact = exact_uncoded_access_throughput(8, &cache, &lib).map_err(|e| e.to_string())?;
    let approx = uncoded_throughput(8, &cache, &lib).unwrap().access_bits;
    let rel = (exact - approx).abs() / approx;
    check(rel < 0.03, format!("identity exact for K<=8, N<=50; exact/approx gap {:.3}%", 100.0 * rel))
}

fn c4_zf_closed_form() -> Outcome {
    let lib = LibraryConfig::new(1000, 10_000_000).unwrap();
    let (b, noise, eta, k) = (1e6, 1.0, 1e-6, 8);
    let mut rng = rng_from(4);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let h = sample_channels(k, 10, &[1.0; 8], derive_seed(4, &[t])).unwrap();
        let mu: f64 = rng.random_range(0.0..0.9);
        let nu: f64 = rng.random_range(0.0..1.0);
        let gamma: Vec<f64> = (0..k).map(|_| rng.random_range(0.5e6..3e6)).collect();
        let cache = CacheSizes::from_fractions(&lib, nu, mu);
        let qos = qos_targets(QosRule::Uncoded { user_fraction: mu }, &gamma, b).unwrap();
        let pipeline = zf_ee_max(&h, &qos, noise, &cache, &lib, eta).map_err(|e| e.to_string())?.energy.ee();
        // K / ((1 − μ)(ηK(1 − ν) + Σ σ²ζ_k‖h̃_k‖²/γ̄_k))
        let norms: Vec<f64> = zf_columns(&h).iter().map(|c| c.norm_squared()).collect();
        let access: f64 = (0..k)
            .map(|i| {
                let g = (1.0 - mu) * gamma[i];
                let zeta = (g / b).exp2() - 1.0;
                noise * zeta * norms[i] / g
            })
            .sum();
        let expected = k as f64 / ((1.0 - mu) * (eta * k as f64 * (1.0 - nu) + access));
        let lib_form = zf_closed_form_ee(&norms, &qos.sinr_floor, &qos.effective_rate, noise, &cache, &lib, eta).value();
        worst = worst.max((pipeline - expected).abs() / expected).max((lib_form - expected).abs() / expected);
    }
    check(worst < 1e-10, format!("worst relative error {worst:.2e} over 100 channels"))
}

fn c5_sdr_dominance() -> Outcome {
    let start = Instant::now();
    let (k, noise) = (4, 1.0);
    let qos = qos_targets(QosRule::Uncoded { user_fraction: 0.0 }, &[2e6; 4], 1e6).unwrap();
    let users: Vec<usize> = (0..k).collect();
    let (mut worst_gap, mut worst_slack) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..100 {
        let h = sample_channels(k, 6, &[1.0; 4], derive_seed(5, &[t])).unwrap();
        let opts = SdrOptions { seed: t, ..SdrOptions::default() };
        let d = sdr_ee_max_uncoded(&h, &qos, &users, noise, &opts).map_err(|e| e.to_string())?;
        let zf_power: f64 = zf_columns(&h).iter().zip(&qos.sinr_floor).map(|(c, z)| z * noise * c.norm_squared()).sum();
        worst_gap = worst_gap.max((d.relaxation_power - zf_power) / zf_power);
        for (s, z) in sinrs(&h, &d.precoding.beams, noise).iter().zip(&qos.sinr_floor) {
            worst_slack = worst_slack.min(s - z);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_gap <= 1e-7 && worst_slack >= -1e-6 && secs < 60.0,
        format!("max (SDP − ZF)/ZF {worst_gap:.2e}, min SINR slack {worst_slack:.2e}, {secs:.1} s"),
    )
}

fn c6_bisection() -> Outcome {
    let opts = BisectionOptions::default();
    let noise = 1.0;
    // Iteration bound on both bisections.
    let mut max_over = 0i64;
    for t in 0..10 {
        let h = sample_channels(4, 6, &[1.0; 4], derive_seed(6, &[t])).unwrap();
        let m = maxmin_sinr_bisection(&h, &[0.0; 4], 10.0, noise, &opts).map_err(|e| e.to_string())?;
        max_over = max_over.max(m.trace.iterations as i64 - m.trace.config.iteration_bound() as i64);
        let c = coded_delay_bisection(&h, &[0, 1, 2], 0.5, 10.0, noise, 1e6, &opts).map_err(|e| e.to_string())?;
        max_over = max_over.max(c.trace.iterations as i64 - c.trace.config.iteration_bound() as i64);
    }
    // Single user: max-min SINR is P‖h‖²/σ².
    let mut worst_single: f64 = 0.0;
    for t in 0..10 {
        let h = sample_channels(1, 4, &[1.0], derive_seed(61, &[t])).unwrap();
        let p = 5.0;
        let truth = p * h.user(0).norm_squared() / noise;
        let m = maxmin_sinr_bisection(&h, &[0.0], p, noise, &opts).map_err(|e| e.to_string())?;
        let eps = m.trace.config.epsilon;
        if (m.trace.a_low - truth).abs() > eps || (m.min_sinr - truth).abs() > eps {
            return Err(format!("K=1: bisection {} / beams {} vs {truth} (ε {eps})", m.trace.a_low, m.min_sinr));
        }
        worst_single = worst_single.max((m.min_sinr - truth).abs() / eps);
    }
    // Monotone in the budget.
    let h = sample_channels(4, 6, &[1.0; 4], derive_seed(62, &[])).unwrap();
    let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..10 {
        let p = 10f64.powf(i as f64 * 0.2);
        let u = maxmin_sinr_bisection(&h, &[0.0; 4], p, noise, &opts).map_err(|e| e.to_string())?;
        let c = coded_delay_bisection(&h, &[0, 1, 2, 3], 0.0, p, noise, 1e6, &opts).map_err(|e| e.to_string())?;
        let tol = 1e-9;
        if u.min_sinr < prev.0 * (1.0 - tol) || c.min_snr < prev.1 * (1.0 - tol) {
            return Err(format!("not monotone at P = {p}"));
        }
        prev = (u.min_sinr, c.min_snr);
    }
    check(
        max_over <= 0,
        format!("iterations never exceed the bound (max excess {max_over}); K=1 error ≤ {worst_single:.2e}·ε; monotone over 10 budgets"),
    )
}

fn c7_convexity() -> Outcome {
    let mut worst = f64::INFINITY;
    let xs: Vec<f64> = (0..=600).map(|i| 10f64.powf(-3.0 + i as f64 * 0.01)).collect();
    for a in [0.1, 1.0, 10.0] {
        let f = |x: f64| 1.0 / (1.0 + a * x).log2();
        for w in xs.windows(3) {
            let (x0, x1, x2) = (w[0], w[1], w[2]);
            let second = ((f(x2) - f(x1)) / (x2 - x1) - (f(x1) - f(x0)) / (x1 - x0)) / (x2 - x0);
            worst = worst.min(second);
        }
    }
    check(worst >= -1e-10, format!("smallest second divided difference {worst:.3e}"))
}

fn c8_sweep_trends() -> Outcome {
    let start = Instant::now();
    // EE against the user cache under free backhaul.
    let mut ee = ScenarioConfig::default();
    ee.grid.user_cache_fraction = vec![0.1, 0.3, 0.5, 0.7];
    ee.grid.bs_cache_fraction = vec![1.0];
    ee.run.strategies = vec![Strategy::UncodedSdr, Strategy::CodedSdr];
    let ee = run_sweep_with_workers(&ee, None).map_err(|e| e.to_string())?;
    let val = |r: &edgecache::experiments::SweepResult, s, mu| r.row(s, mu).map(|x| x.ee_bits_per_joule).unwrap_or(f64::NAN);
    let mut notes = vec![];
    let low = val(&ee, Strategy::UncodedSdr, 0.1) > val(&ee, Strategy::CodedSdr, 0.1);
    let high = [0.3, 0.5, 0.7].iter().all(|&mu| val(&ee, Strategy::CodedSdr, mu) > val(&ee, Strategy::UncodedSdr, mu));
    notes.push(format!(
        "EE at 0.1: unc {:.3e} vs cod {:.3e}; at 0.3: unc {:.3e} vs cod {:.3e}",
        val(&ee, Strategy::UncodedSdr, 0.1),
        val(&ee, Strategy::CodedSdr, 0.1),
        val(&ee, Strategy::UncodedSdr, 0.3),
        val(&ee, Strategy::CodedSdr, 0.3)
    ));

    // Delivery time against the user cache at 10 dB.
    let mut dl = ScenarioConfig::default();
    dl.run.metric = Metric::Delay;
    dl.grid.user_cache_fraction = vec![0.1, 0.2];
    let dl = run_sweep_with_workers(&dl, None).map_err(|e| e.to_string())?;
    let tau = |s, mu| dl.row(s, mu).map(|x| x.tau_seconds).unwrap_or(f64::NAN);
    let faster = [0.1, 0.2].iter().all(|&mu| {
        tau(Strategy::UncodedZf, mu) < tau(Strategy::CodedSdr, mu) && tau(Strategy::UncodedSdr, mu) < tau(Strategy::CodedSdr, mu)
    });
    notes.push(format!(
        "τ at 0.1: zf {:.3} sdr {:.3} cod {:.3}",
        tau(Strategy::UncodedZf, 0.1),
        tau(Strategy::UncodedSdr, 0.1),
        tau(Strategy::CodedSdr, 0.1)
    ));

    // Delivery time against the power budget.
    let mut pw = ScenarioConfig::default();
    pw.run.metric = Metric::Delay;
    pw.run.realizations = 20;
    pw.grid.user_cache_fraction = vec![0.3];
    pw.grid.power_db = vec![0.0, 5.0, 10.0, 15.0, 20.0];
    let pw = run_sweep_with_workers(&pw, None).map_err(|e| e.to_string())?;
    let mut monotone = true;
    for s in [Strategy::UncodedZf, Strategy::UncodedSdr, Strategy::CodedSdr] {
        let taus: Vec<f64> = pw.rows.iter().filter(|r| r.strategy == s.name()).map(|r| r.tau_seconds).collect();
        monotone &= taus.len() == 5 && taus.windows(2).all(|w| w[1] < w[0]);
    }
    let failures: usize = ee.rows.iter().chain(&dl.rows).chain(&pw.rows).map(|r| r.failures).sum();
    let secs = start.elapsed().as_secs_f64();
    notes.push(format!("{failures} failed realizations, {secs:.0} s"));
    check(low && high && faster && monotone && secs < 600.0, notes.join("; "))
}

fn c9_threshold() -> Outcome {
    let mut worst_tie: f64 = 0.0;
    let mut cases = 0;
    for (k, ratio) in [(4usize, 0.5), (8, 0.3), (8, 0.6), (16, 0.9), (5, 0.25)] {
        let n = 1000.0;
        let (p_unc, rate) = (2.0, 1e6);
        let p_cod = ratio * p_unc;
        let threshold = (p_cod / p_unc - 1.0 / k as f64) * n;
        // Closed forms, evaluated here.
        let ee_unc = |mu: f64| k as f64 / ((1.0 - mu / n) * p_unc / rate);
        let ee_cod = |mu: f64| (1.0 + k as f64 * mu / n) / ((1.0 - mu / n) * p_cod / rate);
        let diff = |mu: f64| ee_cod(mu) - ee_unc(mu);
        let tie = diff(threshold).abs() / ee_unc(threshold);
        worst_tie = worst_tie.max(tie);
        let step = 1e-3 * n;
        if !(diff(threshold - step) < 0.0 && diff(threshold + step) > 0.0) {
            return Err(format!("no sign change at K={k}, ratio {ratio}"));
        }
        let inputs = |mu| ComparisonInputs {
            users: k,
            user_cache_files: mu,
            n_files: n,
            power_uncoded: p_unc,
            power_coded: p_cod,
            rate,
            eta: 0.0,
        };
        let at = analytic_comparison(Regime::FreeBackhaul, &inputs(threshold)).map_err(|e| e.to_string())?;
        let below = analytic_comparison(Regime::FreeBackhaul, &inputs(threshold - step)).unwrap();
        let above = analytic_comparison(Regime::FreeBackhaul, &inputs(threshold + step)).unwrap();
        if !close(at.threshold_user_cache, threshold, 1e-12)
            || at.winner != Winner::Tie
            || below.winner != Winner::Uncoded
            || above.winner != Winner::Coded
            || !close(at.ee_coded, ee_cod(threshold), 1e-12)
        {
            return Err(format!("library comparison disagrees at K={k}, ratio {ratio}"));
        }
        cases += 1;
    }
    check(worst_tie <= 1e-12, format!("{cases} cases; worst relative gap at threshold {worst_tie:.1e}"))
}

fn c10_popularity() -> Outcome {
    let (k, n) = (8usize, 1000usize);
    let lib = LibraryConfig::new(n as u64, 1000).unwrap();
    let q = lib.q();
    // Indicator identity over random demands and placements.
    let profile = zipf_profile(n, 0.8, k).unwrap();
    let mut rng = rng_from(10);
    let mut placements = vec![];
    for _ in 0..10 {
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(0..=n / 2)).collect();
        placements.push(PlacementMap::most_popular(&profile, &sizes, rng.random_range(0..=n)).unwrap());
    }
    for t in 0..100_000u64 {
        let d = sample_demands(&profile, derive_seed(10, &[t])).unwrap();
        let p = &placements[(t % 10) as usize];
        let active = active_subset(&d, p).unwrap();
        let thr = nonuniform_throughput(&d, p, &lib).unwrap();
        if active.len() as f64 * q != thr.access_bits {
            return Err(format!("demand vector {t}: |active|·Q != Q_AC"));
        }
    }

    // Zipf α = 0 against the uniform pipeline.
    let flat = zipf_profile(n, 0.0, k).unwrap();
    let trials = 4000u64;
    let mut worst_z: f64 = 0.0;
    for (mu, nu) in [(0.0, 0.3), (0.2, 1.0), (0.5, 1.0), (0.0, 0.0)] {
        let placement = PlacementMap::most_popular(&flat, &vec![(mu * n as f64) as usize; k], (nu * n as f64) as usize).unwrap();
        let uniform = uncoded_throughput(k, &CacheSizes::from_fractions(&lib, nu, mu), &lib).unwrap();
        let (mut ac, mut bh) = (vec![], vec![]);
        for t in 0..trials {
            let d = sample_demands(&flat, derive_seed(100, &[t])).unwrap();
            let thr = nonuniform_throughput(&d, &placement, &lib).unwrap();
            ac.push(thr.access_bits);
            bh.push(thr.backhaul_bits);
        }
        let za = edgecache::cache_model::oracle::Estimate::from_samples(&ac).z_score(uniform.access_bits);
        let zb = edgecache::cache_model::oracle::Estimate::from_samples(&bh).z_score(uniform.backhaul_bits);
        worst_z = worst_z.max(za.abs()).max(zb.abs());
    }

    // With an empty user cache every user is active and the designs coincide
    // with the uniform ones on the same channel.
    let placement = PlacementMap::most_popular(&flat, &vec![0; k], n).unwrap();
    let uniform_cache = CacheSizes::from_fractions(&lib, 1.0, 0.0);
    let gamma = vec![2e6; k];
    let zero = vec![0.0; k];
    let mut worst_rel: f64 = 0.0;
    for t in 0..5u64 {
        let h = sample_channels(k, 10, &[1.0; 8], derive_seed(101, &[t])).unwrap();
        let d = sample_demands(&flat, derive_seed(102, &[t])).unwrap();
        let link = LinkSetup { channel: &h, gamma: &gamma, noise: 1.0, bandwidth: 1e6 };
        let opts = SdrOptions { seed: t, ..SdrOptions::default() };
        let qos = qos_targets(QosRule::Uncoded { user_fraction: 0.0 }, &gamma, 1e6).unwrap();
        let zf = nonuniform_ee(&link, &d, &placement, &lib, 1e-6, Design::Zf, &opts).map_err(|e| e.to_string())?;
        let zf_u = zf_ee_max(&h, &qos, 1.0, &uniform_cache, &lib, 1e-6).unwrap();
        worst_rel = worst_rel.max((zf.energy.ee() - zf_u.energy.ee()).abs() / zf_u.energy.ee());
        let users: Vec<usize> = (0..k).collect();
        let sdr = nonuniform_ee(&link, &d, &placement, &lib, 1e-6, Design::Sdr, &opts).map_err(|e| e.to_string())?;
        let sdr_u = sdr_ee_max_uncoded(&h, &qos, &users, 1.0, &opts).unwrap();
        let e_u = edgecache::ee::ee_uncoded(&sdr_u.precoding, k, &uniform_cache, &lib, 1e-6).unwrap();
        worst_rel = worst_rel.max((sdr.energy.ee() - e_u.ee()).abs() / e_u.ee());
        // Delivery time with no rate floor under a 10 dB budget.
        let link0 = LinkSetup { gamma: &zero, ..link.clone() };
        let bis = BisectionOptions { sdr: opts, ..BisectionOptions::default() };
        let nd = nonuniform_delay(&link0, &d, &placement, &lib, 10.0, Design::Zf, &bis).map_err(|e| e.to_string())?;
        let qos0 = qos_targets(QosRule::Uncoded { user_fraction: 0.0 }, &zero, 1e6).unwrap();
        let ud = zf_delay_alloc(&h, &qos0, 10.0, 1.0, &uniform_cache, &lib).map_err(|e| e.to_string())?.delay.total_seconds;
        worst_rel = worst_rel.max((nd.delay.total_seconds / k as f64 - ud).abs() / ud);
    }
    check(
        worst_z <= 3.0 && worst_rel <= 1e-9,
        format!("10^5 demand vectors consistent; α=0 throughputs worst |z| {worst_z:.2}; designs agree to {worst_rel:.1e}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 uncoded oracle", c1_uncoded_oracle),
        ("2 coded delivery exactness", c2_coded_exactness),
        ("3 pattern identity and exact throughput", c3_identity),
        ("4 ZF closed-form EE", c4_zf_closed_form),
        ("5 SDR dominance over ZF", c5_sdr_dominance),
        ("6 bisection correctness", c6_bisection),
        ("7 delay cost convexity", c7_convexity),
        ("8 qualitative sweep trends", c8_sweep_trends),
        ("9 free-backhaul threshold", c9_threshold),
        ("10 non-uniform popularity consistency", c10_popularity),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS criterion {name}: {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
