//! Continuous joint bit/power loading.
//!
//! Every regime shares one stationarity law. With the combined multiplier
//! `μ_i = α + λ_P + Σ_ℓ ϖ_i^(ℓ)·λ_ℓ` and `c = (1−α)/ln 2`:
//!
//! ```text
//! b_i = log2( c·C_i / (μ_i·K_i) )      P_i = c/μ_i − K_i/C_i
//! ```
//!
//! which also reads `P_i = (c/μ_i)·(1 − 2^(−b_i))`. The regimes differ only in
//! which multipliers are non-zero:
//!
//! | case | binding caps          | multipliers                      |
//! |------|-----------------------|----------------------------------|
//! | 5    | none                  | all zero, closed form            |
//! | 6    | total power / CCI     | `λ_P` closed form on active set  |
//! | 7    | ACI                   | `λ_ℓ` by Newton                  |
//! | 8    | both                  | `λ_P`, `λ_ℓ` jointly by Newton   |
//!
//! Subcarriers whose bit load falls under 2 are nulled one at a time (weakest
//! first) and the multipliers re-solved until the active set is stable.
//! Nulled subcarriers never come back.

mod multipliers;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ber::{gap_constant, BerThreshold};
use crate::constraints::{within_cap, ConstraintCaps};
use crate::error::{Error, Result};

use multipliers::{DualProblem, Row, RowWeights};
pub use multipliers::{MAX_NEWTON_ITERS, RESIDUAL_TOL};

/// Smallest bit load on a transmitting subcarrier (4-QAM).
pub const MIN_ACTIVE_BITS: f64 = 2.0;

/// Which constraint family binds in the returned solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Regime {
    /// Case 5: no cap binds.
    Unconstrained,
    /// Case 6: the combined total-power/CCI cap binds.
    PowerBound,
    /// Case 7: one or more ACI caps bind.
    AciBound,
    /// Case 8: both families bind.
    BothBound,
}

impl Regime {
    pub fn case_id(self) -> u8 {
        match self {
            Regime::Unconstrained => 5,
            Regime::PowerBound => 6,
            Regime::AciBound => 7,
            Regime::BothBound => 8,
        }
    }

    fn from_flags(power: bool, aci: bool) -> Self {
        match (power, aci) {
            (false, false) => Regime::Unconstrained,
            (true, false) => Regime::PowerBound,
            (false, true) => Regime::AciBound,
            (true, true) => Regime::BothBound,
        }
    }
}

impl From<Regime> for u8 {
    fn from(r: Regime) -> u8 {
        r.case_id()
    }
}

impl TryFrom<u8> for Regime {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            5 => Ok(Regime::Unconstrained),
            6 => Ok(Regime::PowerBound),
            7 => Ok(Regime::AciBound),
            8 => Ok(Regime::BothBound),
            other => Err(format!("no solution regime with case id {other}")),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "case {}", self.case_id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousSolution {
    /// Real-valued bit loads; 0 on nulled subcarriers, otherwise ≥ 2.
    pub bits: Vec<f64>,
    /// Watts; 0 exactly where `bits` is 0.
    pub powers: Vec<f64>,
    pub lambda_power: f64,
    /// One multiplier per adjacent PU.
    pub lambda_aci: Vec<f64>,
    /// Transmitting subcarriers, ascending.
    pub active_set: Vec<usize>,
    pub case_id: Regime,
    /// `α·ΣP − (1−α)·Σb`.
    pub objective: f64,
}

impl ContinuousSolution {
    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn total_bits(&self) -> f64 {
        self.bits.iter().sum()
    }

    /// `μ_i = α + λ_P + Σ_ℓ ϖ_i^(ℓ)·λ_ℓ` for subcarrier `i`.
    pub fn combined_multiplier(&self, alpha: f64, weights: &[Vec<f64>], i: usize) -> f64 {
        alpha
            + self.lambda_power
            + weights
                .iter()
                .zip(&self.lambda_aci)
                .map(|(row, l)| row[i] * l)
                .sum::<f64>()
    }
}

/// One loading problem: SU link, scalarization weight, BER target and caps.
#[derive(Debug, Clone, Copy)]
pub struct LoadingProblem<'a> {
    pub cnir: &'a [f64],
    pub alpha: f64,
    pub ber_threshold: &'a BerThreshold,
    pub caps: &'a ConstraintCaps,
}

impl<'a> LoadingProblem<'a> {
    pub fn new(
        cnir: &'a [f64],
        alpha: f64,
        ber_threshold: &'a BerThreshold,
        caps: &'a ConstraintCaps,
    ) -> Self {
        Self {
            cnir,
            alpha,
            ber_threshold,
            caps,
        }
    }

    pub fn len(&self) -> usize {
        self.cnir.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cnir.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.cnir.len();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if !self.ber_threshold.fits(n) {
            return Err(Error::DimensionMismatch {
                what: "ber_threshold",
                expected: n,
                got: 0,
            });
        }
        if let Some(b) = self
            .ber_threshold
            .values()
            .find(|b| !(*b > 0.0 && *b < 0.2))
        {
            return Err(Error::InvalidArgument(format!(
                "ber threshold {b} outside (0, 0.2)"
            )));
        }
        let caps = self.caps;
        if caps.aci_weights.rows.len() != caps.aci_caps.len() {
            return Err(Error::DimensionMismatch {
                what: "aci weight rows",
                expected: caps.aci_caps.len(),
                got: caps.aci_weights.rows.len(),
            });
        }
        for row in &caps.aci_weights.rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "aci weights",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        Ok(())
    }
}

/// CNIR below which a subcarrier cannot carry 2 bits without binding caps:
/// `C_th = −(4/1.6)·(α·ln 2/(1−α))·ln(5·BER_th)`.
pub fn cnir_threshold(alpha: f64, ber_threshold: f64) -> f64 {
    -(4.0 / 1.6) * (alpha * std::f64::consts::LN_2 / (1.0 - alpha)) * (5.0 * ber_threshold).ln()
}

/// Precomputed per-subcarrier quantities.
struct Prepared<'a> {
    problem: LoadingProblem<'a>,
    c: f64,
    /// `K_i / C_i`; infinite on dead subcarriers.
    base: Vec<f64>,
    eligible: Vec<usize>,
}

impl<'a> Prepared<'a> {
    fn new(problem: LoadingProblem<'a>) -> Result<Self> {
        problem.validate()?;
        let alpha = problem.alpha;
        let c = (1.0 - alpha) / std::f64::consts::LN_2;
        let base: Vec<f64> = problem
            .cnir
            .iter()
            .enumerate()
            .map(|(i, &cn)| gap_constant(problem.ber_threshold.at(i)) / cn)
            .collect();
        let eligible = problem
            .cnir
            .iter()
            .enumerate()
            .filter(|&(i, &cn)| {
                cn > 0.0 && cn >= cnir_threshold(alpha, problem.ber_threshold.at(i))
            })
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            problem,
            c,
            base,
            eligible,
        })
    }

    fn bits_at(&self, i: usize, mu: f64) -> f64 {
        (self.c / (mu * self.base[i])).log2()
    }

    fn power_at(&self, i: usize, mu: f64) -> f64 {
        self.c / mu - self.base[i]
    }

    /// Builds the solution for a given active set and multipliers.
    fn assemble(
        &self,
        active: &[usize],
        lambda_power: f64,
        lambda_aci: Vec<f64>,
    ) -> ContinuousSolution {
        let n = self.problem.len();
        let alpha = self.problem.alpha;
        let weights = &self.problem.caps.aci_weights.rows;
        let mut bits = vec![0.0; n];
        let mut powers = vec![0.0; n];
        for &i in active {
            let mu = alpha
                + lambda_power
                + weights
                    .iter()
                    .zip(&lambda_aci)
                    .map(|(w, l)| w[i] * l)
                    .sum::<f64>();
            bits[i] = self.bits_at(i, mu);
            powers[i] = self.power_at(i, mu);
        }
        let objective =
            alpha * powers.iter().sum::<f64>() - (1.0 - alpha) * bits.iter().sum::<f64>();
        let case_id = Regime::from_flags(lambda_power > 0.0, lambda_aci.iter().any(|l| *l > 0.0));
        ContinuousSolution {
            bits,
            powers,
            lambda_power,
            lambda_aci,
            active_set: active.to_vec(),
            case_id,
            objective,
        }
    }

    fn case5(&self) -> ContinuousSolution {
        self.assemble(&self.eligible, 0.0, vec![0.0; self.problem.caps.num_aci()])
    }

    /// Constraint families that can bind: `None` is the total-power row,
    /// `Some(ℓ)` the ℓ-th ACI row. Infinite caps never bind.
    fn finite_rows(&self, power: bool, aci: bool) -> Vec<Option<usize>> {
        let caps = self.problem.caps;
        let mut rows = Vec::new();
        if power && caps.total_cap.is_finite() {
            rows.push(None);
        }
        if aci {
            rows.extend(
                caps.aci_caps
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.is_finite())
                    .map(|(l, _)| Some(l)),
            );
        }
        rows
    }

    fn violated(&self, sol: &ContinuousSolution, row: Option<usize>) -> bool {
        let caps = self.problem.caps;
        match row {
            None => !within_cap(sol.total_power(), caps.total_cap),
            Some(l) => {
                let usage: f64 = caps.aci_weights.rows[l]
                    .iter()
                    .zip(&sol.powers)
                    .map(|(w, p)| w * p)
                    .sum();
                !within_cap(usage, caps.aci_caps[l])
            }
        }
    }

    /// Multipliers for `rows` on `active`, in row order.
    fn multipliers(
        &self,
        active: &[usize],
        rows: &[Option<usize>],
        warm: &[f64],
    ) -> Result<Vec<f64>> {
        let caps = self.problem.caps;
        if rows == [None] {
            if active.is_empty() {
                return Ok(vec![0.0]);
            }
            let base_sum: f64 = active.iter().map(|&i| self.base[i]).sum();
            let l = multipliers::total_power_multiplier(
                self.problem.alpha,
                self.c,
                base_sum,
                active.len(),
                caps.total_cap,
            )?;
            return Ok(vec![l.max(0.0)]);
        }
        let dual_rows: Vec<Row<'_>> = rows
            .iter()
            .map(|r| match r {
                None => Row {
                    weights: RowWeights::Unit,
                    cap: caps.total_cap,
                },
                Some(l) => Row {
                    weights: RowWeights::Aci(&caps.aci_weights.rows[*l]),
                    cap: caps.aci_caps[*l],
                },
            })
            .collect();
        multipliers::solve_from(
            &DualProblem {
                alpha: self.problem.alpha,
                c: self.c,
                base: &self.base,
                active,
                rows: &dual_rows,
            },
            warm,
        )
    }

    /// Solves with `rows` binding, nulling sub-2-bit subcarriers and adding any
    /// row from `candidates` that the solution violates, until nothing changes.
    fn solve_bound(
        &self,
        mut rows: Vec<Option<usize>>,
        candidates: &[Option<usize>],
    ) -> Result<ContinuousSolution> {
        let mut active = self.eligible.clone();
        let num_aci = self.problem.caps.num_aci();
        let max_rounds = 2 * (self.problem.len() + candidates.len()) + 4;
        let mut lambda = Vec::new();
        for _ in 0..max_rounds {
            // the previous round's multipliers are a close starting point
            lambda = self.multipliers(&active, &rows, &lambda)?;
            let mut lambda_power = 0.0;
            let mut lambda_aci = vec![0.0; num_aci];
            for (row, l) in rows.iter().zip(&lambda) {
                match row {
                    None => lambda_power = *l,
                    Some(k) => lambda_aci[*k] = *l,
                }
            }
            let sol = self.assemble(&active, lambda_power, lambda_aci);

            let weakest = active
                .iter()
                .enumerate()
                .filter(|(_, &i)| sol.bits[i] < MIN_ACTIVE_BITS)
                .min_by(|a, b| sol.bits[*a.1].total_cmp(&sol.bits[*b.1]));
            if let Some((slot, _)) = weakest {
                active.remove(slot);
                continue;
            }

            let newly_violated: Vec<Option<usize>> = candidates
                .iter()
                .filter(|r| !rows.contains(r) && self.violated(&sol, **r))
                .copied()
                .collect();
            if !newly_violated.is_empty() {
                rows.extend(newly_violated);
                continue;
            }
            return Ok(sol);
        }
        Err(Error::ActiveSetIteration { rounds: max_rounds })
    }

    fn violated_rows(
        &self,
        sol: &ContinuousSolution,
        candidates: &[Option<usize>],
    ) -> Vec<Option<usize>> {
        candidates
            .iter()
            .filter(|r| self.violated(sol, **r))
            .copied()
            .collect()
    }
}

/// Case 5: every subcarrier at or above `C_th` gets the unconstrained closed
/// form, the rest are nulled.
pub fn solve_case5(
    cnir: &[f64],
    alpha: f64,
    ber_threshold: &BerThreshold,
) -> Result<ContinuousSolution> {
    let caps = ConstraintCaps::unconstrained(0, cnir.len());
    let prepared = Prepared::new(LoadingProblem::new(cnir, alpha, ber_threshold, &caps))?;
    Ok(prepared.case5())
}

/// Total-power multiplier on a given active set:
/// `λ = |A|·(1−α)/ln 2 / (cap − Σ_A ln(5·BER_i)/(1.6·C_i)) − α`.
/// A negative result means the cap does not bind on that set.
pub fn lambda_total_power(
    active: &[usize],
    cnir: &[f64],
    alpha: f64,
    ber_threshold: &BerThreshold,
    cap: f64,
) -> Result<f64> {
    if active.is_empty() {
        return Err(Error::InvalidArgument("active set is empty".into()));
    }
    let c = (1.0 - alpha) / std::f64::consts::LN_2;
    let base_sum: f64 = active
        .iter()
        .map(|&i| gap_constant(ber_threshold.at(i)) / cnir[i])
        .sum();
    multipliers::total_power_multiplier(alpha, c, base_sum, active.len(), cap)
}

/// Case 6: the combined total-power/CCI cap binds.
pub fn solve_case6(
    cnir: &[f64],
    alpha: f64,
    ber_threshold: &BerThreshold,
    total_cap: f64,
) -> Result<ContinuousSolution> {
    let mut caps = ConstraintCaps::unconstrained(0, cnir.len());
    caps.total_cap = total_cap;
    let prepared = Prepared::new(LoadingProblem::new(cnir, alpha, ber_threshold, &caps))?;
    let rows = prepared.finite_rows(true, false);
    if rows.is_empty() {
        return Ok(prepared.case5());
    }
    prepared.solve_bound(rows, &[])
}

/// Case 7: the violated ACI caps bind; the total power is unconstrained.
pub fn solve_case7(
    cnir: &[f64],
    alpha: f64,
    ber_threshold: &BerThreshold,
    aci_weights: &[Vec<f64>],
    aci_caps: &[f64],
) -> Result<ContinuousSolution> {
    solve_with_families(
        cnir,
        alpha,
        ber_threshold,
        f64::INFINITY,
        aci_weights,
        aci_caps,
        false,
        true,
    )
}

/// Case 8: both the total-power/CCI cap and the violated ACI caps bind.
pub fn solve_case8(
    cnir: &[f64],
    alpha: f64,
    ber_threshold: &BerThreshold,
    total_cap: f64,
    aci_weights: &[Vec<f64>],
    aci_caps: &[f64],
) -> Result<ContinuousSolution> {
    solve_with_families(
        cnir,
        alpha,
        ber_threshold,
        total_cap,
        aci_weights,
        aci_caps,
        true,
        true,
    )
}

#[allow(clippy::too_many_arguments)]
fn solve_with_families(
    cnir: &[f64],
    alpha: f64,
    ber_threshold: &BerThreshold,
    total_cap: f64,
    aci_weights: &[Vec<f64>],
    aci_caps: &[f64],
    power: bool,
    aci: bool,
) -> Result<ContinuousSolution> {
    if aci_weights.len() != aci_caps.len() {
        return Err(Error::DimensionMismatch {
            what: "aci caps",
            expected: aci_weights.len(),
            got: aci_caps.len(),
        });
    }
    let caps = ConstraintCaps {
        total_cap,
        aci_caps: aci_caps.to_vec(),
        aci_weights: crate::channel::AciFactors {
            rows: aci_weights.to_vec(),
        },
    };
    let prepared = Prepared::new(LoadingProblem::new(cnir, alpha, ber_threshold, &caps))?;
    let candidates = prepared.finite_rows(power, aci);
    let start = prepared.case5();
    let mut rows = prepared.violated_rows(&start, &candidates);
    if power && !rows.contains(&None) && candidates.contains(&None) {
        rows.insert(0, None);
    }
    if rows.is_empty() {
        return Ok(start);
    }
    prepared.solve_bound(rows, &candidates)
}

/// Full continuous solve: the case-5 solution, then dispatch on which caps it
/// violates (power only → case 6, ACI only → case 7, both → case 8). When
/// several are violated, each is first tried alone and kept if the result
/// meets every other cap. Otherwise all violated caps bind together and any
/// cap the result still breaks is added to the binding set.
pub fn solve_continuous(problem: LoadingProblem<'_>) -> Result<ContinuousSolution> {
    let prepared = Prepared::new(problem)?;
    let start = prepared.case5();
    let candidates = prepared.finite_rows(true, true);
    let power_violated = prepared.violated(&start, None);
    let aci_violated: Vec<Option<usize>> = candidates
        .iter()
        .filter(|r| r.is_some() && prepared.violated(&start, **r))
        .copied()
        .collect();

    let rows = match (power_violated, aci_violated.is_empty()) {
        (false, true) => return Ok(start),
        (true, true) => vec![None],
        (false, false) => aci_violated,
        (true, false) => std::iter::once(None).chain(aci_violated).collect(),
    };
    if rows.len() > 1 {
        // often one cap alone is enough; a single row is much cheaper
        for row in &rows {
            let sol = prepared.solve_bound(vec![*row], &[])?;
            if prepared.violated_rows(&sol, &candidates).is_empty() {
                return Ok(sol);
            }
        }
    }
    prepared.solve_bound(rows, &candidates)
}
