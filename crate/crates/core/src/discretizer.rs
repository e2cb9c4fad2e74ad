//! Integer bit loading from a continuous solution: round to the nearest
//! constellation, invert the BER law for the power, then shed bits greedily
//! until every cap holds.

use serde::{Deserialize, Serialize};

use crate::ber::{gap_constant, BerThreshold};
use crate::constraints::{within_cap, ConstraintCaps};
use crate::error::{Error, Result};
use crate::solver::ContinuousSolution;

/// Relative window inside which two repair candidates count as tied.
const TIE_TOL: f64 = 1e-12;

/// Integer bit/power allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// Each entry in `{0} ∪ [2, b_max]`.
    pub bits: Vec<u32>,
    /// Watts; zero exactly where `bits` is zero.
    pub powers: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
    pub repair_steps: usize,
}

impl Allocation {
    /// Wraps a bit/power pair and evaluates the objective for weight `alpha`.
    /// `feasible` starts out false.
    pub fn new(bits: Vec<u32>, powers: Vec<f64>, alpha: f64) -> Self {
        let objective = objective(&bits, &powers, alpha);
        Self {
            bits,
            powers,
            objective,
            feasible: false,
            repair_steps: 0,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            bits: vec![0; n],
            powers: vec![0.0; n],
            objective: 0.0,
            feasible: true,
            repair_steps: 0,
        }
    }

    pub fn total_bits(&self) -> u64 {
        self.bits.iter().map(|b| *b as u64).sum()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Per-subcarrier CSV rows `subcarrier,bits,power_w` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subcarrier,bits,power_w\n");
        for (i, (b, p)) in self.bits.iter().zip(&self.powers).enumerate() {
            out.push_str(&format!("{i},{b},{p}\n"));
        }
        out
    }
}

/// `α·ΣP − (1−α)·Σb`.
pub fn objective(bits: &[u32], powers: &[f64], alpha: f64) -> f64 {
    alpha * powers.iter().sum::<f64>() - (1.0 - alpha) * bits.iter().map(|b| *b as f64).sum::<f64>()
}

/// Power that loads `bits` at exactly the target BER:
/// `P = −(2^b − 1)·ln(5·BER_th)/(1.6·C)`, and 0 for `b = 0`.
pub fn power_for_bits(bits: u32, cnir: f64, ber_threshold: f64, max_bits: u32) -> Result<f64> {
    if bits == 0 {
        return Ok(0.0);
    }
    if bits == 1 || bits > max_bits {
        return Err(Error::BitsOutOfDomain { bits, max_bits });
    }
    if !(cnir > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cnir must be positive, got {cnir}"
        )));
    }
    Ok(((bits as f64).exp2() - 1.0) * gap_constant(ber_threshold) / cnir)
}

/// Power saved by dropping one bit: `P(b) − P(b−1)`, where a 2-bit load drops
/// straight to 0.
pub fn decrement_saving(bits: u32, cnir: f64, ber_threshold: f64) -> f64 {
    let k = gap_constant(ber_threshold) / cnir;
    match bits {
        0 => 0.0,
        1 | 2 => ((bits as f64).exp2() - 1.0) * k,
        b => ((b - 1) as f64).exp2() * k,
    }
}

/// Nearest integer in `{0} ∪ [2, max_bits]`: values in `[1.5, 2)` go to 2.
pub fn round_bits(bits: f64, max_bits: u32) -> u32 {
    if !(bits >= 1.5) {
        return 0;
    }
    let r = bits.round().min(max_bits as f64);
    (r as u32).max(2)
}

/// Rounds `cont`, recomputes the powers from the BER target, and while the
/// total-power/CCI cap or any ACI cap is violated, removes one bit from the
/// subcarrier with the largest saving `ΔP`, lowest index on ties.
pub fn round_and_repair(
    cont: &ContinuousSolution,
    caps: &ConstraintCaps,
    cnir: &[f64],
    ber_threshold: &BerThreshold,
    alpha: f64,
    max_bits: u32,
) -> Result<Allocation> {
    let n = cnir.len();
    if cont.bits.len() != n {
        return Err(Error::DimensionMismatch {
            what: "continuous bits",
            expected: n,
            got: cont.bits.len(),
        });
    }
    let mut bits: Vec<u32> = cont
        .bits
        .iter()
        .zip(cnir)
        .map(|(b, c)| {
            if *c > 0.0 {
                round_bits(*b, max_bits)
            } else {
                0
            }
        })
        .collect();
    let mut powers = bits
        .iter()
        .enumerate()
        .map(|(i, &b)| power_for_bits(b, cnir[i], ber_threshold.at(i), max_bits))
        .collect::<Result<Vec<_>>>()?;

    let mut total: f64 = powers.iter().sum();
    let mut aci = caps.aci_sums(&powers);
    let violated = |total: f64, aci: &[f64]| {
        !within_cap(total, caps.total_cap)
            || aci
                .iter()
                .zip(&caps.aci_caps)
                .any(|(s, c)| !within_cap(*s, *c))
    };

    let mut steps = 0;
    while violated(total, &aci) {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if bits[i] == 0 {
                continue;
            }
            let saving = decrement_saving(bits[i], cnir[i], ber_threshold.at(i));
            match best {
                Some((_, s)) if saving <= s * (1.0 + TIE_TOL) => {}
                _ => best = Some((i, saving)),
            }
        }
        let Some((i, _)) = best else {
            break;
        };
        bits[i] = if bits[i] <= 2 { 0 } else { bits[i] - 1 };
        powers[i] = power_for_bits(bits[i], cnir[i], ber_threshold.at(i), max_bits)?;
        // recompute sums exactly rather than subtracting, to avoid drift
        total = powers.iter().sum();
        aci = caps.aci_sums(&powers);
        steps += 1;
    }

    let feasible = !violated(total, &aci);
    let mut out = Allocation::new(bits, powers, alpha);
    out.feasible = feasible;
    out.repair_steps = steps;
    Ok(out)
}
