//! Approximate M-QAM bit error rate model and the quantities derived from it.
//!
//! The model is `BER ≈ 0.2·exp(−1.6·C·P / (2^b − 1))`, valid for `BER < 0.2`.
//! Most of the crate works with the gap constant `K = −ln(5·BER_th) / 1.6`,
//! which turns the BER target into the linear power law `P = (2^b − 1)·K / C`.

use serde::{Deserialize, Serialize};

/// Exponent scale of the BER approximation.
pub const BER_EXPONENT: f64 = 1.6;
/// Prefactor of the BER approximation.
pub const BER_PREFACTOR: f64 = 0.2;

/// Target bit error rate, shared by every subcarrier or given per subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BerThreshold {
    Uniform(f64),
    PerSubcarrier(Vec<f64>),
}

impl BerThreshold {
    /// Threshold on subcarrier `i`. Per-subcarrier vectors must be sized by the caller.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            BerThreshold::Uniform(v) => *v,
            BerThreshold::PerSubcarrier(v) => v[i],
        }
    }

    pub fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            BerThreshold::Uniform(v) => Box::new(std::iter::once(*v)),
            BerThreshold::PerSubcarrier(v) => Box::new(v.iter().copied()),
        }
    }

    /// Length check against `n` subcarriers; uniform thresholds always fit.
    pub fn fits(&self, n: usize) -> bool {
        match self {
            BerThreshold::Uniform(_) => true,
            BerThreshold::PerSubcarrier(v) => v.len() == n,
        }
    }
}

impl From<f64> for BerThreshold {
    fn from(v: f64) -> Self {
        BerThreshold::Uniform(v)
    }
}

/// `K = −ln(5·BER_th) / 1.6`. Positive for `BER_th < 0.2`.
#[inline]
pub fn gap_constant(ber_threshold: f64) -> f64 {
    -(5.0 * ber_threshold).ln() / BER_EXPONENT
}

/// BER of a subcarrier loaded with `bits` at `power` over a link of CNIR `cnir`.
pub fn bit_error_rate(power: f64, bits: f64, cnir: f64) -> f64 {
    BER_PREFACTOR * (-BER_EXPONENT * cnir * power / (bits.exp2() - 1.0)).exp()
}
