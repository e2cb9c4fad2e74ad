//! Monte Carlo harness: per-trial channel draws, solve + discretize, and the
//! empirical interference-violation rates; parameter sweeps with common random
//! numbers; oracle comparison and runtime scaling.
//!
//! Trial `k` of a run with master seed `s` draws everything from a ChaCha8
//! stream seeded with `trial_seed(s, k)`, so results do not depend on thread
//! count or scheduling. Within a trial the draw order is: SU fading on every
//! subcarrier, then one SU→PU gain per PU in config order.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{aci_factors, sample_sp_gain, sample_su_channel, AciFactors};
use crate::constraints::{check_feasible, ConstraintCaps, FeasibilityReport};
use crate::discretizer::{round_and_repair, Allocation};
use crate::error::{Error, Result};
use crate::oracle::{exhaustive_search, BitDomain, OracleOptions};
use crate::scenario::{path_loss_db, PuKind, ScenarioConfig, SweepParam};
use crate::solver::{solve_continuous, ContinuousSolution, LoadingProblem, Regime};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master_seed`:
/// `splitmix64(splitmix64(master_seed) ^ index·0x9E3779B97F4A7C15)`.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// 95% half-widths of the four reported means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ci95 {
    pub throughput: f64,
    pub power: f64,
    pub cci_violation_rate: f64,
    pub aci_violation_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    /// Mean Σbits per OFDM symbol.
    pub avg_throughput: f64,
    /// Mean ΣP, watts.
    pub avg_power: f64,
    pub cci_violation_rate: f64,
    pub aci_violation_rate: f64,
    pub trials: usize,
    pub ci95: Ci95,
    /// Trials whose repaired allocation still broke a cap.
    pub infeasible_trials: usize,
    /// Trials per continuous regime, indexed case 5..=8.
    pub case_counts: [usize; 4],
}

/// What one trial produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub bits: u64,
    pub power: f64,
    pub cci_violated: bool,
    pub aci_violated: bool,
    pub feasible: bool,
    pub case_id: Regime,
}

/// Per-PU quantities that stay fixed across trials.
#[derive(Debug, Clone)]
struct PuLink {
    kind: PuKind,
    fading_rate: f64,
    /// `10^(−L/10)` for co-channel PUs; ACI path loss lives in ϖ.
    attenuation: f64,
    cap: f64,
    /// Row of ϖ for adjacent PUs.
    aci_row: Option<usize>,
}

/// A scenario with its caps and overlap factors evaluated once.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub cfg: ScenarioConfig,
    pub caps: ConstraintCaps,
    links: Vec<PuLink>,
}

impl PreparedScenario {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let weights = aci_factors(cfg)?;
        Self::with_weights(cfg, weights)
    }

    /// Reuses precomputed ϖ; they depend only on geometry and the symbol
    /// duration.
    pub fn with_weights(cfg: &ScenarioConfig, weights: AciFactors) -> Result<Self> {
        cfg.validate()?;
        let caps = ConstraintCaps::with_weights(cfg, weights)?;
        let mut links = Vec::with_capacity(cfg.pus.len());
        let mut next_row = 0;
        for pu in &cfg.pus {
            let (attenuation, aci_row) = match pu.kind {
                PuKind::Cochannel => (
                    10f64.powf(-0.1 * path_loss_db(pu.distance_m, &cfg.path_loss)?),
                    None,
                ),
                PuKind::Adjacent => {
                    next_row += 1;
                    (1.0, Some(next_row - 1))
                }
            };
            links.push(PuLink {
                kind: pu.kind,
                fading_rate: pu.fading_rate,
                attenuation,
                cap: pu.interference_cap_w,
                aci_row,
            });
        }
        Ok(Self {
            cfg: cfg.clone(),
            caps,
            links,
        })
    }

    /// Solves and discretizes one CNIR vector.
    pub fn allocate(&self, cnir: &[f64]) -> Result<(ContinuousSolution, Allocation)> {
        let su = &self.cfg.su;
        let problem = LoadingProblem::new(cnir, su.alpha, &su.ber_threshold, &self.caps);
        let cont = solve_continuous(problem)?;
        let alloc = round_and_repair(
            &cont,
            &self.caps,
            cnir,
            &su.ber_threshold,
            su.alpha,
            su.max_bits,
        )?;
        Ok((cont, alloc))
    }

    pub fn feasibility(&self, alloc: &Allocation, cnir: &[f64]) -> Result<FeasibilityReport> {
        check_feasible(alloc, &self.caps, cnir, &self.cfg.su.ber_threshold)
    }

    pub fn run_trial(&self, master_seed: u64, index: u64) -> Result<TrialOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, index));
        let channel = sample_su_channel(&self.cfg, &mut rng)?;
        let gains: Vec<f64> = self
            .links
            .iter()
            .map(|l| sample_sp_gain(l.fading_rate, &mut rng))
            .collect();
        let (cont, alloc) = self.allocate(&channel.cnir)?;
        let total = alloc.total_power();
        let aci = self.caps.aci_sums(&alloc.powers);

        let mut cci_violated = false;
        let mut aci_violated = false;
        for (link, g) in self.links.iter().zip(&gains) {
            if link.cap.is_infinite() {
                continue;
            }
            match link.kind {
                PuKind::Cochannel => cci_violated |= g * link.attenuation * total > link.cap,
                PuKind::Adjacent => {
                    let row = link.aci_row.expect("adjacent PU has a weight row");
                    aci_violated |= g * aci[row] > link.cap;
                }
            }
        }
        Ok(TrialOutcome {
            bits: alloc.total_bits(),
            power: total,
            cci_violated,
            aci_violated,
            feasible: alloc.feasible,
            case_id: cont.case_id,
        })
    }

    pub fn trial_outcomes(
        &self,
        trials: usize,
        master_seed: u64,
        parallel: bool,
    ) -> Result<Vec<TrialOutcome>> {
        let run = |k: usize| self.run_trial(master_seed, k as u64);
        if parallel {
            (0..trials).into_par_iter().map(run).collect()
        } else {
            (0..trials).map(run).collect()
        }
    }

    pub fn monte_carlo(
        &self,
        trials: usize,
        master_seed: u64,
        parallel: bool,
    ) -> Result<AggregateStats> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        Ok(aggregate(&self.trial_outcomes(
            trials,
            master_seed,
            parallel,
        )?))
    }
}

fn mean_and_half_width(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = values.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    (mean, Z95 * (var / nf).sqrt())
}

fn rate_and_half_width(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, Z95 * (p * (1.0 - p) / n as f64).sqrt())
}

/// Reduces trial outcomes in index order.
pub fn aggregate(outcomes: &[TrialOutcome]) -> AggregateStats {
    let n = outcomes.len();
    let (avg_throughput, ci_t) = mean_and_half_width(outcomes.iter().map(|o| o.bits as f64), n);
    let (avg_power, ci_p) = mean_and_half_width(outcomes.iter().map(|o| o.power), n);
    let (cci, ci_c) = rate_and_half_width(outcomes.iter().filter(|o| o.cci_violated).count(), n);
    let (aci, ci_a) = rate_and_half_width(outcomes.iter().filter(|o| o.aci_violated).count(), n);
    let mut case_counts = [0; 4];
    for o in outcomes {
        case_counts[(o.case_id.case_id() - 5) as usize] += 1;
    }
    AggregateStats {
        avg_throughput,
        avg_power,
        cci_violation_rate: cci,
        aci_violation_rate: aci,
        trials: n,
        ci95: Ci95 {
            throughput: ci_t,
            power: ci_p,
            cci_violation_rate: ci_c,
            aci_violation_rate: ci_a,
        },
        infeasible_trials: outcomes.iter().filter(|o| !o.feasible).count(),
        case_counts,
    }
}

/// Runs `trials` Monte Carlo trials in parallel.
pub fn run_monte_carlo(
    cfg: &ScenarioConfig,
    trials: usize,
    master_seed: u64,
) -> Result<AggregateStats> {
    PreparedScenario::new(cfg)?.monte_carlo(trials, master_seed, true)
}

/// Same as [`run_monte_carlo`] on the calling thread only.
pub fn run_monte_carlo_serial(
    cfg: &ScenarioConfig,
    trials: usize,
    master_seed: u64,
) -> Result<AggregateStats> {
    PreparedScenario::new(cfg)?.monte_carlo(trials, master_seed, false)
}

/// Copy of `cfg` with the swept parameter set to `value` on every matching
/// field: Ψ of every PU, α, or the caps of every adjacent / co-channel PU.
pub fn apply_param(cfg: &ScenarioConfig, param: SweepParam, value: f64) -> Result<ScenarioConfig> {
    let mut out = cfg.clone();
    match param {
        SweepParam::Alpha => out.su.alpha = value,
        SweepParam::Psi => out.pus.iter_mut().for_each(|p| p.probability = value),
        SweepParam::PAci | SweepParam::PCci => {
            let kind = if param == SweepParam::PAci {
                PuKind::Adjacent
            } else {
                PuKind::Cochannel
            };
            out.pus
                .iter_mut()
                .filter(|p| p.kind == kind)
                .for_each(|p| p.interference_cap_w = value);
        }
    }
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub stats: AggregateStats,
}

/// One aggregate per value, every value run on the same trial seeds.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep needs at least one value".into(),
        ));
    }
    cfg.validate()?;
    let weights = aci_factors(cfg)?;
    values
        .iter()
        .map(|&value| {
            let point = apply_param(cfg, param, value)?;
            let stats = PreparedScenario::with_weights(&point, weights.clone())?.monte_carlo(
                trials,
                master_seed,
                true,
            )?;
            Ok(SweepRow { value, stats })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub seed: u64,
    pub f_proposed: f64,
    pub f_opt: f64,
    /// `(F_proposed − F_opt)/|F_opt|`; the absolute difference when `F_opt = 0`.
    pub relative_gap: f64,
    pub proposed_s: f64,
    pub oracle_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub rows: Vec<GapRow>,
    pub median_gap: f64,
    pub max_gap: f64,
}

pub fn relative_gap(f_proposed: f64, f_opt: f64) -> f64 {
    if f_opt == 0.0 {
        f_proposed - f_opt
    } else {
        (f_proposed - f_opt) / f_opt.abs()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Proposed solver against exhaustive search on `instances` channel draws.
/// Both run single-threaded so the runtimes compare like for like.
pub fn compare_with_oracle(
    cfg: &ScenarioConfig,
    instances: usize,
    master_seed: u64,
) -> Result<OracleComparison> {
    let n = cfg.su.num_subcarriers;
    let limit = cfg.experiment.oracle_limit;
    if n > limit {
        return Err(Error::OracleTooLarge { n, limit });
    }
    let prepared = PreparedScenario::new(cfg)?;
    let su = &prepared.cfg.su;
    let mut opts = OracleOptions::new(su.max_bits);
    opts.max_subcarriers = limit;
    opts.parallel = false;
    if cfg.experiment.oracle_even_bits {
        opts.domain = BitDomain::EvenOnly;
    }

    let mut rows = Vec::with_capacity(instances);
    for k in 0..instances {
        let seed = trial_seed(master_seed, k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channel = sample_su_channel(&prepared.cfg, &mut rng)?;
        let start = Instant::now();
        let (_, alloc) = prepared.allocate(&channel.cnir)?;
        let proposed_s = start.elapsed().as_secs_f64();
        let problem =
            LoadingProblem::new(&channel.cnir, su.alpha, &su.ber_threshold, &prepared.caps);
        let oracle = exhaustive_search(&problem, &opts)?;
        rows.push(GapRow {
            seed,
            f_proposed: alloc.objective,
            f_opt: oracle.objective,
            relative_gap: relative_gap(alloc.objective, oracle.objective),
            proposed_s,
            oracle_s: oracle.elapsed_s,
        });
    }
    let mut gaps: Vec<f64> = rows.iter().map(|r| r.relative_gap).collect();
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let median_gap = median(&mut gaps);
    Ok(OracleComparison {
        rows,
        median_gap,
        max_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub n: usize,
    pub median_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeScaling {
    pub rows: Vec<RuntimeRow>,
    /// Least-squares slope of ln t against ln N; `None` for fewer than two
    /// distinct sizes.
    pub slope: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Median wall time of `solve_continuous` per subcarrier count, over `reps`
/// channel draws, each timed over `inner` back-to-back solves.
pub fn runtime_scaling(
    cfg: &ScenarioConfig,
    sizes: &[usize],
    reps: usize,
    inner: usize,
    master_seed: u64,
) -> Result<RuntimeScaling> {
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "sizes must be strictly increasing".into(),
        ));
    }
    if reps == 0 || inner == 0 {
        return Err(Error::InvalidArgument(
            "reps and inner must be at least 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut sized = cfg.clone();
        sized.su.num_subcarriers = n;
        sized.su.pu_interference_profile_w = None;
        let prepared = PreparedScenario::new(&sized)?;
        let su = &prepared.cfg.su;
        let mut times = Vec::with_capacity(reps);
        for k in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, k as u64));
            let channel = sample_su_channel(&prepared.cfg, &mut rng)?;
            let problem =
                LoadingProblem::new(&channel.cnir, su.alpha, &su.ber_threshold, &prepared.caps);
            let start = Instant::now();
            for _ in 0..inner {
                std::hint::black_box(solve_continuous(std::hint::black_box(problem))?);
            }
            times.push(start.elapsed().as_secs_f64() / inner as f64);
        }
        rows.push(RuntimeRow {
            n,
            median_s: median(&mut times),
        });
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.median_s)).collect();
    Ok(RuntimeScaling {
        slope: log_log_slope(&points),
        rows,
    })
}
