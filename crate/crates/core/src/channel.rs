//! SU-link channel realizations, SU→PU fading draws and the spectral-overlap
//! (ACI) factors.
//!
//! Subcarrier `i` (zero-based here) sits at `(i + 1/2)·Δf` above the SU band's
//! lower edge. An adjacent PU with `center_offset_hz = f_o > 0` has its band
//! center `f_o` above the SU band's upper edge; `f_o < 0` places it `|f_o|`
//! below the lower edge. The spectral distance used in the overlap integral is
//! the PU band center minus the subcarrier center.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH};
use crate::scenario::{path_loss_db, PuDescriptor, PuKind, ScenarioConfig};

/// Lobe budget for a single overlap integral.
pub const MAX_LOBES: f64 = 4.0e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Unit-mean fading power `|H_i|²` before the link gain.
    pub fading: Vec<f64>,
    /// Per-subcarrier CNIR `|H_i|²·g / (σ² + J_i)`.
    pub cnir: Vec<f64>,
    /// PU-to-SU interference `J_i`, watts.
    pub pu_interference: Vec<f64>,
    /// Fading rate ν of each PU link, in the order of `ScenarioConfig::pus`.
    pub sp_fading_rates: Vec<f64>,
}

/// ACI weights `ϖ[ℓ][i]`, one row per adjacent PU in config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AciFactors {
    pub rows: Vec<Vec<f64>>,
}

impl AciFactors {
    pub fn none() -> Self {
        Self { rows: Vec::new() }
    }

    pub fn num_pus(&self) -> usize {
        self.rows.len()
    }
}

/// Per-subcarrier PU-to-SU interference for the scenario.
pub fn pu_interference_to_su(cfg: &ScenarioConfig) -> Result<Vec<f64>> {
    let su = &cfg.su;
    let j = match &su.pu_interference_profile_w {
        Some(profile) => {
            if profile.len() != su.num_subcarriers {
                return Err(Error::DimensionMismatch {
                    what: "pu_interference_profile",
                    expected: su.num_subcarriers,
                    got: profile.len(),
                });
            }
            profile.clone()
        }
        None => vec![su.pu_interference_w; su.num_subcarriers],
    };
    if let Some(bad) = j.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "negative PU interference {bad}"
        )));
    }
    Ok(j)
}

/// CNIR from fading powers and interference.
pub fn cnir_from_fading(
    fading: &[f64],
    link_gain: f64,
    noise_w: f64,
    interference: &[f64],
) -> Vec<f64> {
    fading
        .iter()
        .zip(interference)
        .map(|(h, j)| h * link_gain / (noise_w + j))
        .collect()
}

/// Draws i.i.d. Rayleigh fading on every subcarrier and forms the CNIR vector.
pub fn sample_su_channel<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let interference = pu_interference_to_su(cfg)?;
    let fading: Vec<f64> = (0..cfg.su.num_subcarriers)
        .map(|_| Exp1.sample(rng))
        .collect();
    let cnir = cnir_from_fading(
        &fading,
        cfg.su.su_link_gain,
        cfg.su.noise_variance_w,
        &interference,
    );
    Ok(ChannelRealization {
        fading,
        cnir,
        pu_interference: interference,
        sp_fading_rates: cfg.pus.iter().map(|p| p.fading_rate).collect(),
    })
}

/// One draw of `|H_sp|²` with mean `1/ν`.
pub fn sample_sp_gain<R: Rng + ?Sized>(fading_rate: f64, rng: &mut R) -> f64 {
    Exp::new(fading_rate)
        .expect("fading rate must be positive")
        .sample(rng)
}

#[inline]
fn sinc_squared(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    // reduce the argument so sin(πx) stays accurate far out in the sidelobes
    let frac = x - x.round();
    let s = (std::f64::consts::PI * frac).sin();
    let d = std::f64::consts::PI * x;
    s * s / (d * d)
}

/// `∫ sinc²(x) dx` over `[lo, hi]`, split at the sidelobe zeros and integrated
/// lobe by lobe to relative tolerance `rel_tol`.
pub fn sinc_squared_integral(lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    if hi < lo {
        return sinc_squared_integral(hi, lo, rel_tol).map(|v| -v);
    }
    if lo == hi {
        return Ok(0.0);
    }
    let first = lo.floor();
    let last = hi.ceil();
    if last - first > MAX_LOBES {
        return Err(Error::Quadrature {
            achieved: f64::INFINITY,
            requested: rel_tol,
        });
    }
    let mut total = 0.0;
    let mut worst = 0.0_f64;
    let mut k = first;
    while k < last {
        let a = lo.max(k);
        let b = hi.min(k + 1.0);
        if b > a {
            let mid = 0.5 * (a + b);
            let coarse =
                (b - a) / 6.0 * (sinc_squared(a) + 4.0 * sinc_squared(mid) + sinc_squared(b));
            let eps = (rel_tol * coarse.abs()).max(f64::MIN_POSITIVE);
            match adaptive_simpson(&sinc_squared, a, b, eps, DEFAULT_MAX_DEPTH) {
                Ok(v) => total += v,
                Err(Error::Quadrature { achieved, .. }) => worst = worst.max(achieved * rel_tol),
                Err(e) => return Err(e),
            }
        }
        k += 1.0;
    }
    if worst > 0.0 {
        return Err(Error::Quadrature {
            achieved: worst,
            requested: rel_tol,
        });
    }
    Ok(total)
}

/// `ϖ = T_s·10^(−L/10)·∫_{f_c−B/2}^{f_c+B/2} sinc²(T_s·f) df`.
pub fn spectral_overlap_factor(
    center_offset_hz: f64,
    pu_bandwidth_hz: f64,
    symbol_duration_s: f64,
    path_loss_db: f64,
    quad_tol: f64,
) -> Result<f64> {
    if !(pu_bandwidth_hz > 0.0) || !(symbol_duration_s > 0.0) {
        return Err(Error::InvalidArgument(
            "overlap factor needs positive bandwidth and symbol duration".into(),
        ));
    }
    if !(quad_tol > 0.0 && quad_tol <= 1e-3) {
        return Err(Error::InvalidArgument(format!(
            "quadrature tolerance {quad_tol} outside (0, 1e-3]"
        )));
    }
    // substitute x = T_s·f so the integrand is a plain sinc²
    let lo = symbol_duration_s * (center_offset_hz - 0.5 * pu_bandwidth_hz);
    let hi = symbol_duration_s * (center_offset_hz + 0.5 * pu_bandwidth_hz);
    let integral = sinc_squared_integral(lo, hi, quad_tol)?;
    Ok(10f64.powf(-0.1 * path_loss_db) * integral)
}

/// Spectral distance from subcarrier `i` (zero-based) to an adjacent PU's band center.
pub fn subcarrier_to_pu_offset(
    i: usize,
    num_subcarriers: usize,
    spacing_hz: f64,
    pu: &PuDescriptor,
) -> f64 {
    let sub_center = (i as f64 + 0.5) * spacing_hz;
    let band = num_subcarriers as f64 * spacing_hz;
    let pu_center = if pu.center_offset_hz >= 0.0 {
        band + pu.center_offset_hz
    } else {
        pu.center_offset_hz
    };
    pu_center - sub_center
}

/// ACI factors for every adjacent PU in the scenario.
pub fn aci_factors(cfg: &ScenarioConfig) -> Result<AciFactors> {
    let su = &cfg.su;
    let rows = cfg
        .pus
        .iter()
        .filter(|p| p.kind == PuKind::Adjacent)
        .map(|pu| {
            let loss = path_loss_db(pu.distance_m, &cfg.path_loss)?;
            (0..su.num_subcarriers)
                .map(|i| {
                    let offset = subcarrier_to_pu_offset(
                        i,
                        su.num_subcarriers,
                        su.subcarrier_spacing_hz,
                        pu,
                    );
                    spectral_overlap_factor(
                        offset,
                        pu.bandwidth_hz,
                        su.symbol_duration_s,
                        loss,
                        cfg.experiment.quad_tol,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AciFactors { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let cfg = ScenarioConfig::reference();
        let a = sample_su_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = sample_su_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cnir.len(), 128);
        assert!(a.cnir.iter().all(|c| *c >= 0.0));
    }

    #[test]
    fn zero_link_gain_gives_zero_cnir() {
        let mut cfg = ScenarioConfig::reference();
        cfg.su.su_link_gain = 0.0;
        let ch = sample_su_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(ch.cnir.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn fading_power_has_unit_mean() {
        let mut cfg = ScenarioConfig::reference();
        cfg.su.num_subcarriers = 100_000;
        let ch = sample_su_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let mean = ch.fading.iter().sum::<f64>() / ch.fading.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn sp_gain_mean_is_inverse_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (rate, tol) in [(1.0, 0.02), (2.0, 0.01)] {
            let mean = (0..100_000)
                .map(|_| sample_sp_gain(rate, &mut rng))
                .sum::<f64>()
                / 1e5;
            assert!((mean - 1.0 / rate).abs() < tol, "rate {rate}: {mean}");
        }
        let x: Vec<f64> = (0..4)
            .map(|_| sample_sp_gain(1.0, &mut ChaCha8Rng::seed_from_u64(3)))
            .collect();
        assert!(x.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn interference_defaults_and_overrides() {
        let mut cfg = ScenarioConfig::reference();
        assert!(pu_interference_to_su(&cfg)
            .unwrap()
            .iter()
            .all(|j| *j == 0.0));
        cfg.su.pu_interference_w = 1e-9;
        assert!(pu_interference_to_su(&cfg)
            .unwrap()
            .iter()
            .all(|j| *j == 1e-9));
        let profile: Vec<f64> = (0..128).map(|i| i as f64 * 1e-12).collect();
        cfg.su.pu_interference_profile_w = Some(profile.clone());
        assert_eq!(pu_interference_to_su(&cfg).unwrap(), profile);
        cfg.su.pu_interference_profile_w = Some(vec![-1.0; 128]);
        assert!(pu_interference_to_su(&cfg).is_err());
    }

    #[test]
    fn cnir_falls_as_interference_rises() {
        let fading = [0.7, 1.3];
        let low = cnir_from_fading(&fading, 1.0, 1e-9, &[0.0, 0.0]);
        let high = cnir_from_fading(&fading, 1.0, 1e-9, &[1e-9, 0.0]);
        assert!(high[0] < low[0]);
        assert_eq!(high[1], low[1]);
    }

    #[test]
    fn overlap_geometry() {
        let cfg = ScenarioConfig::reference();
        let pu = &cfg.pus[0];
        let df = cfg.su.subcarrier_spacing_hz;
        let last = subcarrier_to_pu_offset(127, 128, df, pu);
        assert!((last - (0.5 * df + pu.center_offset_hz)).abs() < 1e-6);
        let mut below = pu.clone();
        below.center_offset_hz = -pu.center_offset_hz;
        let first = subcarrier_to_pu_offset(0, 128, df, &below);
        assert!((first + last).abs() < 1e-6);
    }

    #[test]
    fn overlap_factor_bounded_by_path_loss() {
        let cfg = ScenarioConfig::reference();
        let w = aci_factors(&cfg).unwrap();
        assert_eq!(w.num_pus(), 1);
        let bound = 10f64.powf(-0.1 * path_loss_db(1000.0, &cfg.path_loss).unwrap());
        assert!(w.rows[0].iter().all(|v| *v >= 0.0 && *v <= bound));
        // closer subcarriers leak more
        assert!(w.rows[0][127] > w.rows[0][0]);
    }

    #[test]
    fn overlap_rejects_bad_arguments() {
        assert!(spectral_overlap_factor(0.0, 0.0, 1e-4, 0.0, 1e-10).is_err());
        assert!(spectral_overlap_factor(0.0, 1.0, 1e-4, 0.0, 1e-2).is_err());
    }
}
