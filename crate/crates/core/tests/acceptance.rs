//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use common::{gauss_legendre_sinc2, random_instance, PATTERNS};
use cralloc::ber::{bit_error_rate, BerThreshold};
use cralloc::channel::{sinc_squared_integral, spectral_overlap_factor};
use cralloc::constraints::{cci_power_cap, check_feasible};
use cralloc::discretizer::round_and_repair;
use cralloc::experiments::{
    compare_with_oracle, runtime_scaling, sweep, PreparedScenario, SweepRow,
};
use cralloc::kkt::{kkt_verify, KktTolerances};
use cralloc::oracle::{exhaustive_search, OracleOptions};
use cralloc::scenario::{path_loss_db, ScenarioConfig, SweepParam};
use cralloc::solver::{cnir_threshold, solve_case5, solve_continuous, Regime};

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn calibration() -> Verdict {
    let cfg = ScenarioConfig::reference();
    let loss = path_loss_db(5000.0, &cfg.path_loss).unwrap();
    let cap = cci_power_cap(1.0, loss, 0.9, 1e-14, f64::INFINITY);
    let err = rel(cap, 15.4307e-3);
    verdict(
        err <= 0.02,
        format!("cap = {:.6} mW, relative error {err:.2e}", cap * 1e3),
    )
}

fn closed_form_consistency() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ber = 0.0_f64;
    let mut worst_identity = 0.0_f64;
    let mut worst_threshold = 0.0_f64;
    for _ in 0..10_000 {
        let alpha = 0.01 + 0.98 * rng.random::<f64>();
        let ber = 10f64.powf(-8.0 + 6.0 * rng.random::<f64>());
        let th = cnir_threshold(alpha, ber);
        let c = th * 10f64.powf(4.0 * rng.random::<f64>());
        let sol = solve_case5(&[c], alpha, &BerThreshold::Uniform(ber)).unwrap();
        let (b, p) = (sol.bits[0], sol.powers[0]);
        worst_ber = worst_ber.max(rel(bit_error_rate(p, b, c), ber));
        let cc = (1.0 - alpha) / std::f64::consts::LN_2;
        worst_identity = worst_identity.max(rel(p, cc / alpha * (1.0 - (-b).exp2())));
        let at = solve_case5(&[th], alpha, &BerThreshold::Uniform(ber)).unwrap();
        worst_threshold = worst_threshold.max((at.bits[0] - 2.0).abs());
    }
    verdict(
        worst_ber <= 1e-9 && worst_identity <= 1e-9 && worst_threshold <= 1e-9,
        format!("max BER error {worst_ber:.1e}, identity {worst_identity:.1e}, threshold bits {worst_threshold:.1e}"),
    )
}

/// 1000 random instances, 250 per cap pattern.
fn random_suite() -> Vec<common::Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..1000)
        .map(|k| {
            let n = rng.random_range(2..=32usize);
            random_instance(&mut rng, n, PATTERNS[k % 4])
        })
        .collect()
}

fn kkt_suite() -> Verdict {
    let tols = KktTolerances::default();
    let mut counts = [0usize; 4];
    let mut failures = 0;
    let mut worst = 0.0_f64;
    for inst in random_suite() {
        let sol = solve_continuous(inst.problem()).unwrap();
        counts[(sol.case_id.case_id() - 5) as usize] += 1;
        let rep = kkt_verify(&sol, &inst.problem(), &tols).unwrap();
        worst = worst.max(rep.stationarity_power.max(rep.stationarity_bits));
        failures += !rep.pass as usize;
    }
    verdict(
        failures == 0 && counts.iter().all(|c| *c >= 50),
        format!(
            "{failures} failures, case counts 5/6/7/8 = {counts:?}, worst stationarity {worst:.1e}"
        ),
    )
}

fn binding_equalities() -> Verdict {
    let mut worst = 0.0_f64;
    let mut min_lambda = f64::INFINITY;
    let mut bound = 0;
    for inst in random_suite() {
        let sol = solve_continuous(inst.problem()).unwrap();
        min_lambda = sol
            .lambda_aci
            .iter()
            .copied()
            .fold(min_lambda.min(sol.lambda_power), f64::min);
        if sol.case_id == Regime::Unconstrained {
            continue;
        }
        bound += 1;
        if sol.lambda_power > 0.0 {
            worst = worst.max(rel(sol.total_power(), inst.caps.total_cap));
        }
        let sums = inst.caps.aci_sums(&sol.powers);
        for (l, lam) in sol.lambda_aci.iter().enumerate() {
            if *lam > 0.0 {
                worst = worst.max(rel(sums[l], inst.caps.aci_caps[l]));
            }
        }
    }
    verdict(
        worst <= 1e-9 && min_lambda >= 0.0,
        format!("{bound} bound instances, max relative gap to cap {worst:.1e}, min multiplier {min_lambda:.1e}"),
    )
}

fn statistical_guarantee() -> Verdict {
    let trials = 10_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, adjacent) in [("CCI", false), ("ACI", true)] {
        for psi in [0.8, 0.9, 0.99] {
            let mut cfg = ScenarioConfig::reference();
            // room above the continuous optimum, so rounding never truncates
            cfg.su.max_bits = 40;
            cfg.pus.iter_mut().for_each(|p| p.probability = psi);
            let (cap_pu, expect_regime) = if adjacent { (0, 2) } else { (1, 1) };
            cfg.pus[cap_pu].interference_cap_w = 1e-14;
            let stats = PreparedScenario::new(&cfg)
                .unwrap()
                .monte_carlo(trials, 5, true)
                .unwrap();
            let rate = if adjacent {
                stats.aci_violation_rate
            } else {
                stats.cci_violation_rate
            };
            let band = 3.0 * (psi * (1.0 - psi) / trials as f64).sqrt();
            let ok =
                (rate - (1.0 - psi)).abs() <= band && stats.case_counts[expect_regime] == trials;
            pass &= ok;
            parts.push(format!("{label} Ψ={psi}: {rate:.4} (±{band:.4})"));
        }
    }
    verdict(pass, parts.join(", "))
}

/// Small-N scenario for the oracle comparison.
pub fn oracle_scenario(n: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::reference();
    cfg.su.num_subcarriers = n;
    cfg.su.max_bits = 8;
    cfg.su.power_threshold_w = 5e-6;
    cfg.pus[0].interference_cap_w = 1e-16;
    cfg.pus[1].interference_cap_w = 1e-16;
    cfg
}

fn oracle_gap() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 6, 8] {
        let cmp = compare_with_oracle(&oracle_scenario(n), 100, 6).unwrap();
        let never_better = cmp
            .rows
            .iter()
            .all(|r| r.f_proposed >= r.f_opt - 1e-12 * r.f_opt.abs());
        let ok = never_better && cmp.median_gap <= 0.05 && cmp.max_gap <= 0.15;
        let mut line = format!(
            "N={n}: median {:.4}, max {:.4}",
            cmp.median_gap, cmp.max_gap
        );
        if n == 8 {
            let prop: f64 = cmp.rows.iter().map(|r| r.proposed_s).sum();
            let orac: f64 = cmp.rows.iter().map(|r| r.oracle_s).sum();
            let speedup = orac / prop;
            line.push_str(&format!(", speedup {speedup:.0}x"));
            pass &= speedup >= 100.0;
        }
        pass &= ok;
        parts.push(line);
    }
    verdict(pass, parts.join("; "))
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

fn column(rows: &[SweepRow], f: impl Fn(&SweepRow) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

fn trend_suite() -> Verdict {
    let trials = 1000;
    let seed = 7;
    let thr = |r: &SweepRow| r.stats.avg_throughput;
    let pow = |r: &SweepRow| r.stats.avg_power;
    let mut failed = Vec::new();

    // moderate CNIR so the loading is not pinned at the constellation limit
    let mut weak = ScenarioConfig::reference();
    weak.su.su_link_gain = 1e-7;

    let psi_free = sweep(
        &weak,
        SweepParam::Psi,
        &[0.5, 0.7, 0.8, 0.9, 0.95, 0.99],
        trials,
        seed,
    )
    .unwrap();
    let t = column(&psi_free, thr);
    let p = column(&psi_free, pow);
    if !(t.windows(2).all(|w| w[0] == w[1]) && p.windows(2).all(|w| w[0] == w[1])) {
        failed.push("a");
    }

    let alpha = sweep(
        &weak,
        SweepParam::Alpha,
        &[0.1, 0.3, 0.5, 0.7, 0.9],
        trials,
        seed,
    )
    .unwrap();
    if !(non_increasing(&column(&alpha, thr)) && non_increasing(&column(&alpha, pow))) {
        failed.push("b");
    }

    // the top two values sit above the unconstrained usage (~184 W), so they tie
    let aci_values = [1e-18, 1e-17, 1e-16, 1e-15, 1e-14, 1e-10, 1e-6, 1e-4];
    let aci = sweep(
        &ScenarioConfig::reference(),
        SweepParam::PAci,
        &aci_values,
        trials,
        seed,
    )
    .unwrap();
    let t = column(&aci, thr);
    if !(non_decreasing(&t) && t[t.len() - 1] == t[t.len() - 2]) {
        failed.push("c/ACI");
    }
    let cci_values = [1e-18, 1e-17, 1e-16, 1e-15, 1e-14, 1e-10, 1e-6, 1e-4];
    let cci = sweep(
        &ScenarioConfig::reference(),
        SweepParam::PCci,
        &cci_values,
        trials,
        seed,
    )
    .unwrap();
    let t = column(&cci, thr);
    if !(non_decreasing(&t) && t[t.len() - 1] == t[t.len() - 2]) {
        failed.push("c/CCI");
    }

    let mut capped = ScenarioConfig::reference();
    capped.pus[1].interference_cap_w = 1e-14;
    let psi = sweep(
        &capped,
        SweepParam::Psi,
        &[0.5, 0.7, 0.9, 0.95, 0.99, 1.0],
        trials,
        seed,
    )
    .unwrap();
    let t = column(&psi, thr);
    let p = column(&psi, pow);
    if !(non_increasing(&t) && non_increasing(&p) && t[t.len() - 1] == 0.0 && p[p.len() - 1] == 0.0)
    {
        failed.push("d");
    }

    // combined cap = P_th once the CCI cap exceeds 0.1 mW (P_CCI ≈ 6.5e-17 W)
    let mut limited = ScenarioConfig::reference();
    limited.su.power_threshold_w = 1e-4;
    let sat_values = [1e-18, 1e-17, 3e-17, 1e-16, 1e-15, 1e-14];
    let sat = sweep(&limited, SweepParam::PCci, &sat_values, trials, seed).unwrap();
    let t = column(&sat, thr);
    let p = column(&sat, pow);
    let flat = t[3..].windows(2).all(|w| w[0] == w[1]) && p[3..].windows(2).all(|w| w[0] == w[1]);
    if !(non_decreasing(&t) && flat && t[2] < t[3]) {
        failed.push("e");
    }

    verdict(
        failed.is_empty(),
        if failed.is_empty() {
            "all five trend checks hold".to_string()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn repair_correctness() -> Verdict {
    let results: Vec<(bool, f64, bool)> = (0..10_000u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(80_000 + k);
            let n = rng.random_range(1..=6usize);
            let pattern = PATTERNS[(k % 4) as usize];
            let inst = random_instance(&mut rng, n, pattern);
            let max_bits = rng.random_range(4..=8u32);
            let cont = solve_continuous(inst.problem()).unwrap();
            let alloc = round_and_repair(
                &cont, &inst.caps, &inst.cnir, &inst.ber, inst.alpha, max_bits,
            )
            .unwrap();
            let report = check_feasible(&alloc, &inst.caps, &inst.cnir, &inst.ber).unwrap();
            let ber_err = alloc
                .bits
                .iter()
                .enumerate()
                .filter(|(_, b)| **b > 0)
                .map(|(i, b)| {
                    rel(
                        bit_error_rate(alloc.powers[i], *b as f64, inst.cnir[i]),
                        inst.ber.at(i),
                    )
                })
                .fold(0.0, f64::max);
            let mut opts = OracleOptions::new(max_bits);
            opts.parallel = false;
            let oracle = exhaustive_search(&inst.problem(), &opts).unwrap();
            let above = alloc.objective >= oracle.objective - 1e-12 * oracle.objective.abs();
            (report.feasible && alloc.feasible, ber_err, above)
        })
        .collect();
    let infeasible = results.iter().filter(|r| !r.0).count();
    let worst_ber = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let below = results.iter().filter(|r| !r.2).count();
    verdict(
        infeasible == 0 && worst_ber <= 1e-9 && below == 0,
        format!(
            "{infeasible} infeasible, worst BER error {worst_ber:.1e}, {below} below the oracle"
        ),
    )
}

fn quadrature() -> Verdict {
    let ts = 102.4e-6;
    let wide = spectral_overlap_factor(0.0, 1e4 / ts, ts, 0.0, 1e-10).unwrap();
    let main = spectral_overlap_factor(0.0, 1.0 / ts, ts, 0.0, 1e-10).unwrap();
    let oracle = gauss_legendre_sinc2(-0.5, 0.5, 64);
    let whole = sinc_squared_integral(-3.3, 7.9, 1e-12).unwrap();
    let split = sinc_squared_integral(-3.3, 0.41, 1e-12).unwrap()
        + sinc_squared_integral(0.41, 7.9, 1e-12).unwrap();
    let shifted = gauss_legendre_sinc2(-3.3, 7.9, 2000);
    let ok = (wide - 1.0).abs() <= 1e-4
        && (main - oracle).abs() <= 1e-6
        && (whole - split).abs() <= 1e-9
        && (whole - shifted).abs() <= 1e-9;
    verdict(
        ok,
        format!(
            "wide-band {wide:.6}, main {main:.9} vs oracle {oracle:.9}, additivity error {:.1e}",
            (whole - split).abs()
        ),
    )
}

fn complexity() -> Verdict {
    let mut cfg = ScenarioConfig::reference();
    cfg.su.power_threshold_w = 1e-4;
    cfg.pus[0].interference_cap_w = 1e-15;
    let table = runtime_scaling(&cfg, &[64, 128, 256, 512], 31, 5, 9).unwrap();
    let slope = table.slope.unwrap();
    let times: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{}:{:.1}µs", r.n, r.median_s * 1e6))
        .collect();
    verdict(
        slope <= 2.5,
        format!("slope {slope:.2} ({})", times.join(", ")),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("calibration", calibration),
        ("closed-form consistency", closed_form_consistency),
        ("KKT suite", kkt_suite),
        ("binding equalities", binding_equalities),
        ("statistical guarantee", statistical_guarantee),
        ("oracle gap", oracle_gap),
        ("trend suite", trend_suite),
        ("repair correctness", repair_correctness),
        ("quadrature", quadrature),
        ("complexity", complexity),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        failures += !v.pass as usize;
        println!(
            "criterion {:>2} {:<24} {}  {} [{:.1}s]",
            k + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
