//! First-order optimality check for continuous solutions.
//!
//! On each transmitting subcarrier the per-subcarrier BER multiplier `λ_i` is
//! recovered from the power stationarity condition
//!
//! ```text
//! α − λ_i·0.32·C_i/(2^b_i − 1)·e_i + λ_P + Σ_ℓ ϖ_i^(ℓ)·λ_ℓ = 0,   e_i = exp(−1.6·C_i·P_i/(2^b_i − 1))
//! ```
//!
//! and then substituted into the bit stationarity condition
//!
//! ```text
//! −(1−α) + λ_i·0.32·ln 2·C_i·P_i·2^b_i/(2^b_i − 1)²·e_i = 0
//! ```
//!
//! whose residual is the real test. Nulled subcarriers sit outside the
//! constellation domain and are skipped.

use serde::{Deserialize, Serialize};

use crate::ber::{bit_error_rate, BER_EXPONENT, BER_PREFACTOR};
use crate::error::{Error, Result};
use crate::solver::{ContinuousSolution, LoadingProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktTolerances {
    pub stationarity: f64,
    /// Relative to each cap.
    pub primal: f64,
    pub complementarity: f64,
    pub dual: f64,
}

impl Default for KktTolerances {
    fn default() -> Self {
        Self {
            stationarity: 1e-8,
            primal: 1e-9,
            complementarity: 1e-10,
            dual: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Largest power-stationarity residual, relative to `μ_i`.
    pub stationarity_power: f64,
    /// Largest bit-stationarity residual.
    pub stationarity_bits: f64,
    /// Largest relative constraint violation, 0 when feasible.
    pub primal: f64,
    /// Largest `λ̂·|g|` with `g` the relative constraint gap and `λ̂` the
    /// multiplier's share of `μ`, in `[0, 1)`.
    pub complementarity: f64,
    /// Smallest multiplier, including the recovered per-subcarrier ones.
    pub dual_sign: f64,
    /// Recovered `λ_i`, 0 on nulled subcarriers.
    pub ber_multipliers: Vec<f64>,
    pub pass: bool,
}

/// Relative gap `usage/cap − 1`, or the raw usage for a zero cap.
fn relative_gap(usage: f64, cap: f64) -> f64 {
    if cap.is_infinite() {
        f64::NEG_INFINITY
    } else if cap == 0.0 {
        usage
    } else {
        usage / cap - 1.0
    }
}

pub fn kkt_verify(
    solution: &ContinuousSolution,
    problem: &LoadingProblem<'_>,
    tols: &KktTolerances,
) -> Result<KktReport> {
    let n = problem.cnir.len();
    let caps = problem.caps;
    for (what, got) in [
        ("bits", solution.bits.len()),
        ("powers", solution.powers.len()),
    ] {
        if got != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    if solution.lambda_aci.len() != caps.num_aci() {
        return Err(Error::DimensionMismatch {
            what: "aci multipliers",
            expected: caps.num_aci(),
            got: solution.lambda_aci.len(),
        });
    }

    let alpha = problem.alpha;
    let weights = &caps.aci_weights.rows;
    let ln2 = std::f64::consts::LN_2;
    let scale = BER_PREFACTOR * BER_EXPONENT;

    let mut stationarity_power = 0.0_f64;
    let mut stationarity_bits = 0.0_f64;
    let mut primal = 0.0_f64;
    let mut complementarity = 0.0_f64;
    let mut dual_sign = solution
        .lambda_aci
        .iter()
        .copied()
        .fold(solution.lambda_power, f64::min);
    let mut ber_multipliers = vec![0.0; n];

    for i in 0..n {
        let (b, p, c) = (solution.bits[i], solution.powers[i], problem.cnir[i]);
        if b == 0.0 && p == 0.0 {
            continue;
        }
        let q = b.exp2() - 1.0;
        let e = (-BER_EXPONENT * c * p / q).exp();
        let mu = solution.combined_multiplier(alpha, weights, i);
        let lambda_i = mu * q / (scale * c * e);
        ber_multipliers[i] = lambda_i;
        dual_sign = dual_sign.min(lambda_i);

        let r_power = alpha - lambda_i * scale * c / q * e
            + solution.lambda_power
            + weights
                .iter()
                .zip(&solution.lambda_aci)
                .map(|(w, l)| w[i] * l)
                .sum::<f64>();
        stationarity_power = stationarity_power.max((r_power / mu).abs());

        let r_bits = -(1.0 - alpha) + lambda_i * scale * ln2 * c * p * b.exp2() / (q * q) * e;
        stationarity_bits = stationarity_bits.max(r_bits.abs());

        let th = problem.ber_threshold.at(i);
        let ber_gap = (bit_error_rate(p, b, c) - th) / th;
        primal = primal.max(ber_gap);
        // λ_i > 0 always, so the BER row must be tight
        complementarity = complementarity.max(ber_gap.abs());
    }

    let total = solution.total_power();
    let gap = relative_gap(total, caps.total_cap);
    primal = primal.max(gap);
    if solution.lambda_power != 0.0 {
        let share = solution.lambda_power / (alpha + solution.lambda_power.abs());
        complementarity = complementarity.max((share * gap).abs());
    }
    for (l, row) in weights.iter().enumerate() {
        let usage: f64 = row.iter().zip(&solution.powers).map(|(w, p)| w * p).sum();
        let gap = relative_gap(usage, caps.aci_caps[l]);
        primal = primal.max(gap);
        let lam = solution.lambda_aci[l];
        if lam != 0.0 {
            let w_max = row.iter().copied().fold(0.0, f64::max);
            let share = lam * w_max / (alpha + (lam * w_max).abs());
            complementarity = complementarity.max((share * gap).abs());
        }
    }

    let pass = stationarity_power < tols.stationarity
        && stationarity_bits < tols.stationarity
        && primal < tols.primal
        && complementarity < tols.complementarity
        && dual_sign >= -tols.dual;

    Ok(KktReport {
        stationarity_power,
        stationarity_bits,
        primal,
        complementarity,
        dual_sign,
        ber_multipliers,
        pass,
    })
}
