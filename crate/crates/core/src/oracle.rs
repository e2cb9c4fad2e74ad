//! Exhaustive search for the best integer allocation on small instances.
//!
//! Every subcarrier takes a bit load from `{0, 2, 3, …, b_max}` (or the even
//! loads only) with the power that meets the BER target exactly. The search
//! is a depth-first enumeration in lexicographic order; partial sums prune
//! branches that already break a cap, and an optional objective bound prunes
//! branches that cannot beat the incumbent. Ties resolve to the
//! lexicographically smallest bit vector, independent of scheduling.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::within_cap;
use crate::discretizer::{power_for_bits, Allocation};
use crate::error::{Error, Result};
use crate::scenario::DEFAULT_ORACLE_LIMIT;
use crate::solver::LoadingProblem;

/// Relative margin a bound must clear before a branch is discarded.
const PRUNE_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitDomain {
    /// `{0, 2, 3, …, b_max}`, rectangular QAM included.
    All,
    /// `{0, 2, 4, …}`.
    EvenOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub max_bits: u32,
    pub domain: BitDomain,
    pub max_subcarriers: usize,
    /// Objective-bound pruning. Cap pruning is always on.
    pub prune: bool,
    /// Split the first subcarrier's branches across threads.
    pub parallel: bool,
}

impl OracleOptions {
    pub fn new(max_bits: u32) -> Self {
        Self {
            max_bits,
            domain: BitDomain::All,
            max_subcarriers: DEFAULT_ORACLE_LIMIT,
            prune: true,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best: Allocation,
    pub objective: f64,
    pub nodes_visited: u64,
    pub elapsed_s: f64,
}

/// One admissible load on one subcarrier.
struct Choice {
    bits: u32,
    power: f64,
    /// `α·P − (1−α)·b`.
    cost: f64,
    aci: Vec<f64>,
}

struct Search<'a> {
    choices: Vec<Vec<Choice>>,
    /// Best achievable cost over subcarriers `i..`, ignoring caps.
    suffix_bound: Vec<f64>,
    total_cap: f64,
    aci_caps: &'a [f64],
    prune: bool,
}

struct Best {
    cost: f64,
    picks: Option<Vec<usize>>,
    nodes: u64,
}

impl Search<'_> {
    fn dfs(
        &self,
        depth: usize,
        picks: &mut Vec<usize>,
        power: f64,
        aci: &mut [f64],
        cost: f64,
        best: &mut Best,
    ) {
        best.nodes += 1;
        if depth == self.choices.len() {
            if cost < best.cost {
                best.cost = cost;
                best.picks = Some(picks.clone());
            }
            return;
        }
        if self.prune {
            let bound = cost + self.suffix_bound[depth];
            if bound > best.cost + PRUNE_MARGIN * best.cost.abs() {
                return;
            }
        }
        for (k, choice) in self.choices[depth].iter().enumerate() {
            let p = power + choice.power;
            // loads are sorted, so powers only grow from here
            if !within_cap(p, self.total_cap) {
                break;
            }
            let mut aci_ok = true;
            for (l, a) in aci.iter_mut().enumerate() {
                *a += choice.aci[l];
                aci_ok &= within_cap(*a, self.aci_caps[l]);
            }
            if aci_ok {
                picks.push(k);
                self.dfs(depth + 1, picks, p, aci, cost + choice.cost, best);
                picks.pop();
            }
            for (l, a) in aci.iter_mut().enumerate() {
                *a -= choice.aci[l];
            }
            if !aci_ok {
                break;
            }
        }
    }
}

fn lex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    a.iter().cmp(b.iter())
}

pub fn exhaustive_search(
    problem: &LoadingProblem<'_>,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    let start = Instant::now();
    let n = problem.len();
    if n > opts.max_subcarriers {
        return Err(Error::OracleTooLarge {
            n,
            limit: opts.max_subcarriers,
        });
    }
    if opts.max_bits < 2 {
        return Err(Error::InvalidArgument("max_bits must be at least 2".into()));
    }
    let caps = problem.caps;
    let alpha = problem.alpha;
    let loads: Vec<u32> = std::iter::once(0)
        .chain((2..=opts.max_bits).filter(|b| opts.domain == BitDomain::All || b % 2 == 0))
        .collect();

    let mut choices = Vec::with_capacity(n);
    for i in 0..n {
        let c = problem.cnir[i];
        let mut row = Vec::new();
        for &b in &loads {
            if b > 0 && !(c > 0.0) {
                break;
            }
            let power = power_for_bits(b, c, problem.ber_threshold.at(i), opts.max_bits)?;
            row.push(Choice {
                bits: b,
                power,
                cost: alpha * power - (1.0 - alpha) * b as f64,
                aci: caps.aci_weights.rows.iter().map(|w| w[i] * power).collect(),
            });
        }
        choices.push(row);
    }
    let mut suffix_bound = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let best_here = choices[i].iter().map(|c| c.cost).fold(0.0, f64::min);
        suffix_bound[i] = suffix_bound[i + 1] + best_here;
    }
    let search = Search {
        choices,
        suffix_bound,
        total_cap: caps.total_cap,
        aci_caps: &caps.aci_caps,
        prune: opts.prune,
    };

    // the all-zero allocation is always feasible; it seeds every branch
    let zero = Allocation::zeros(n);
    let mut candidates: Vec<(Vec<u32>, f64, u64)> = Vec::new();
    if n == 0 {
        candidates.push((Vec::new(), 0.0, 1));
    } else {
        let run_branch = |k: usize| -> (Option<Vec<usize>>, f64, u64) {
            let first = &search.choices[0][k];
            let mut best = Best {
                cost: 0.0,
                picks: None,
                nodes: 1,
            };
            if !within_cap(first.power, caps.total_cap)
                || first
                    .aci
                    .iter()
                    .zip(&caps.aci_caps)
                    .any(|(a, c)| !within_cap(*a, *c))
            {
                return (None, best.cost, best.nodes);
            }
            let mut picks = vec![k];
            let mut aci = first.aci.clone();
            search.dfs(1, &mut picks, first.power, &mut aci, first.cost, &mut best);
            (best.picks, best.cost, best.nodes)
        };
        let branches: Vec<_> = if opts.parallel {
            (0..search.choices[0].len())
                .into_par_iter()
                .map(run_branch)
                .collect()
        } else {
            (0..search.choices[0].len()).map(run_branch).collect()
        };
        candidates.push((zero.bits.clone(), 0.0, 0));
        for (picks, cost, nodes) in branches {
            let bits = picks.map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, &k)| search.choices[i][k].bits)
                    .collect::<Vec<_>>()
            });
            match bits {
                Some(bits) => candidates.push((bits, cost, nodes)),
                None => candidates.push((Vec::new(), f64::INFINITY, nodes)),
            }
        }
    }

    let nodes_visited = candidates.iter().map(|c| c.2).sum();
    let (bits, _, _) = candidates
        .into_iter()
        .filter(|c| c.1.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| lex_cmp(&a.0, &b.0)))
        .expect("the zero allocation is always a candidate");

    let powers = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            power_for_bits(
                b,
                problem.cnir[i],
                problem.ber_threshold.at(i),
                opts.max_bits,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = Allocation::new(bits, powers, alpha);
    best.feasible = true;
    Ok(OracleResult {
        objective: best.objective,
        best,
        nodes_visited,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
