//! Statistical CCI/ACI constraints turned into deterministic power caps, and
//! feasibility checks for any allocation.
//!
//! With `|H_sp|² ~ Exp(ν)`, `Pr(|H_sp|²·a·ΣP ≤ P_I) ≥ Ψ` holds exactly when
//! `a·ΣP ≤ ν·P_I / (−ln(1 − Ψ))`, so each outage requirement becomes a linear
//! cap on transmit power.

use serde::{Deserialize, Serialize};

use crate::ber::{bit_error_rate, BerThreshold};
use crate::channel::{aci_factors, AciFactors};
use crate::discretizer::Allocation;
use crate::error::{Error, Result};
use crate::scenario::{path_loss_db, PuKind, ScenarioConfig};

/// Relative slack allowed on every cap comparison.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// `−ln(1 − Ψ)`, infinite at `Ψ = 1`.
#[inline]
fn outage_exponent(probability: f64) -> f64 {
    -(-probability).ln_1p()
}

/// Deterministic cap shared by the total-power and CCI constraints:
/// `min(P_th, ν·10^(L/10)·P_CCI / (−ln(1 − Ψ)))`.
///
/// `Ψ = 1` gives 0 for any finite threshold; an infinite threshold stays
/// unconstrained for every `Ψ`.
pub fn cci_power_cap(
    fading_rate: f64,
    path_loss_db: f64,
    probability: f64,
    p_cci: f64,
    p_th: f64,
) -> f64 {
    let cci = if p_cci.is_infinite() {
        f64::INFINITY
    } else if probability >= 1.0 {
        0.0
    } else {
        fading_rate * 10f64.powf(0.1 * path_loss_db) * p_cci / outage_exponent(probability)
    };
    cci.min(p_th)
}

/// ACI cap `ν·P_ACI / (−ln(1 − Ψ))` on `Σ P_i·ϖ_i`. The path loss lives in ϖ.
pub fn aci_power_cap(fading_rate: f64, probability: f64, p_aci: f64) -> f64 {
    if p_aci.is_infinite() {
        f64::INFINITY
    } else if probability >= 1.0 {
        0.0
    } else {
        fading_rate * p_aci / outage_exponent(probability)
    }
}

/// All deterministic caps of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCaps {
    /// Combined total-power / CCI cap, watts.
    pub total_cap: f64,
    /// One cap per adjacent PU, watts.
    pub aci_caps: Vec<f64>,
    pub aci_weights: AciFactors,
}

impl ConstraintCaps {
    pub fn unconstrained(num_aci: usize, n: usize) -> Self {
        Self {
            total_cap: f64::INFINITY,
            aci_caps: vec![f64::INFINITY; num_aci],
            aci_weights: AciFactors {
                rows: vec![vec![0.0; n]; num_aci],
            },
        }
    }

    /// Caps computed from a scenario; evaluates the overlap integrals.
    pub fn from_scenario(cfg: &ScenarioConfig) -> Result<Self> {
        let weights = aci_factors(cfg)?;
        Self::with_weights(cfg, weights)
    }

    /// Caps for a scenario whose ACI factors are already known.
    pub fn with_weights(cfg: &ScenarioConfig, weights: AciFactors) -> Result<Self> {
        let mut total_cap = cfg.su.power_threshold_w;
        let mut aci_caps = Vec::new();
        for pu in &cfg.pus {
            match pu.kind {
                PuKind::Cochannel => {
                    let loss = path_loss_db(pu.distance_m, &cfg.path_loss)?;
                    total_cap = cci_power_cap(
                        pu.fading_rate,
                        loss,
                        pu.probability,
                        pu.interference_cap_w,
                        total_cap,
                    );
                }
                PuKind::Adjacent => aci_caps.push(aci_power_cap(
                    pu.fading_rate,
                    pu.probability,
                    pu.interference_cap_w,
                )),
            }
        }
        if weights.num_pus() != aci_caps.len() {
            return Err(Error::DimensionMismatch {
                what: "aci weight rows",
                expected: aci_caps.len(),
                got: weights.num_pus(),
            });
        }
        Ok(Self {
            total_cap,
            aci_caps,
            aci_weights: weights,
        })
    }

    pub fn num_aci(&self) -> usize {
        self.aci_caps.len()
    }

    /// `Σ_i P_i·ϖ_i^(ℓ)` for every adjacent PU.
    pub fn aci_sums(&self, powers: &[f64]) -> Vec<f64> {
        self.aci_weights
            .rows
            .iter()
            .map(|row| row.iter().zip(powers).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// `usage ≤ cap` up to [`FEASIBILITY_TOL`] relative slack.
#[inline]
pub fn within_cap(usage: f64, cap: f64) -> bool {
    usage <= cap + FEASIBILITY_TOL * cap.abs()
}

/// Relative headroom `(cap − usage)/cap`; negative when violated.
fn margin(usage: f64, cap: f64) -> f64 {
    if cap.is_infinite() {
        f64::INFINITY
    } else if cap == 0.0 {
        if usage <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (cap - usage) / cap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// BER of every subcarrier; 0 for unloaded ones.
    pub ber: Vec<f64>,
    pub ber_ok: bool,
    pub total_power: f64,
    pub total_cap: f64,
    pub total_ok: bool,
    pub aci_sums: Vec<f64>,
    pub aci_caps: Vec<f64>,
    pub aci_ok: Vec<bool>,
    /// Smallest relative headroom over all constraints (negative if violated).
    pub worst_margin: f64,
    pub feasible: bool,
}

/// Feasibility of an integer allocation.
pub fn check_feasible(
    alloc: &Allocation,
    caps: &ConstraintCaps,
    cnir: &[f64],
    ber_threshold: &BerThreshold,
) -> Result<FeasibilityReport> {
    let bits: Vec<f64> = alloc.bits.iter().map(|b| *b as f64).collect();
    check_powers(&bits, &alloc.powers, caps, cnir, ber_threshold)
}

/// Feasibility of any bit/power pair, continuous or integer.
pub fn check_powers(
    bits: &[f64],
    powers: &[f64],
    caps: &ConstraintCaps,
    cnir: &[f64],
    ber_threshold: &BerThreshold,
) -> Result<FeasibilityReport> {
    let n = cnir.len();
    for (what, got) in [("bits", bits.len()), ("powers", powers.len())] {
        if got != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got,
            });
        }
    }
    if !ber_threshold.fits(n) {
        return Err(Error::DimensionMismatch {
            what: "ber_threshold",
            expected: n,
            got: match ber_threshold {
                BerThreshold::PerSubcarrier(v) => v.len(),
                BerThreshold::Uniform(_) => 1,
            },
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

    let mut worst = f64::INFINITY;
    let mut ber_ok = true;
    let mut ber = vec![0.0; n];
    for i in 0..n {
        if bits[i] > 0.0 {
            let th = ber_threshold.at(i);
            ber[i] = bit_error_rate(powers[i], bits[i], cnir[i]);
            let m = (th - ber[i]) / th;
            worst = worst.min(m);
            if !(ber[i] <= th * (1.0 + FEASIBILITY_TOL)) {
                ber_ok = false;
            }
        } else if powers[i] != 0.0 {
            // power on an unloaded subcarrier counts against the caps only
            ber[i] = 0.0;
        }
    }

    let total_power: f64 = powers.iter().sum();
    let total_ok = within_cap(total_power, caps.total_cap);
    worst = worst.min(margin(total_power, caps.total_cap));

    let aci_sums = caps.aci_sums(powers);
    let aci_ok: Vec<bool> = aci_sums
        .iter()
        .zip(&caps.aci_caps)
        .map(|(s, c)| within_cap(*s, *c))
        .collect();
    for (s, c) in aci_sums.iter().zip(&caps.aci_caps) {
        worst = worst.min(margin(*s, *c));
    }

    let feasible = ber_ok && total_ok && aci_ok.iter().all(|ok| *ok);
    Ok(FeasibilityReport {
        ber,
        ber_ok,
        total_power,
        total_cap: caps.total_cap,
        total_ok,
        aci_sums,
        aci_caps: caps.aci_caps.clone(),
        aci_ok,
        worst_margin: worst,
        feasible,
    })
}
