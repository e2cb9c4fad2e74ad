//! Scenario description: SU link parameters, primary users, path loss and
//! experiment settings.
//!
//! On disk a scenario is a JSON object with the sections `su`, `path_loss`,
//! `pus` and `experiment`. Power-valued fields are written as
//! `{"value": <number or "inf">, "unit": "W" | "mW" | "uW" | "µW" | "nW"}` and
//! converted to watts at load; everything in memory is in watts. Unknown keys
//! are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ber::BerThreshold;
use crate::error::{ConfigError, Error, Result};

/// Relative tolerance on `T_s·Δf = 1` when both are given. Common parameter
/// sets round Δf to five significant digits.
pub const SPACING_PRODUCT_TOL: f64 = 1e-5;

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_PROBABILITY: f64 = 0.9;
pub const DEFAULT_FADING_RATE: f64 = 1.0;
pub const DEFAULT_MAX_BITS: u32 = 16;
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_ORACLE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SuParams {
    pub num_subcarriers: usize,
    pub symbol_duration_s: f64,
    pub subcarrier_spacing_hz: f64,
    pub noise_variance_w: f64,
    pub ber_threshold: BerThreshold,
    pub alpha: f64,
    /// Total transmit power limit; `f64::INFINITY` when unconstrained.
    pub power_threshold_w: f64,
    pub max_bits: u32,
    /// Linear scale on the unit-mean SU-link fading power.
    pub su_link_gain: f64,
    /// Constant PU-to-SU interference on every subcarrier.
    pub pu_interference_w: f64,
    /// Per-subcarrier override of `pu_interference_w`.
    pub pu_interference_profile_w: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PuKind {
    Adjacent,
    Cochannel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuDescriptor {
    pub kind: PuKind,
    pub distance_m: f64,
    /// Receiver bandwidth, adjacent PUs only.
    pub bandwidth_hz: f64,
    /// Distance from the nearest SU band edge to the PU band center. Positive
    /// values sit above the SU band, negative values below it. Adjacent only.
    pub center_offset_hz: f64,
    pub interference_cap_w: f64,
    pub probability: f64,
    /// Inverse mean of the exponential SU-to-PU fading power.
    pub fading_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    pub exponent: f64,
    pub wavelength_m: f64,
    pub reference_distance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Both the CCI and ACI outage probabilities, on every PU.
    Psi,
    Alpha,
    PAci,
    PCci,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "psi" => Ok(SweepParam::Psi),
            "alpha" => Ok(SweepParam::Alpha),
            "p_aci" | "paci" => Ok(SweepParam::PAci),
            "p_cci" | "pcci" => Ok(SweepParam::PCci),
            other => Err(format!(
                "unknown sweep parameter `{other}` (psi, alpha, p_aci, p_cci)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Sweep points. Threshold sweeps (`p_aci`, `p_cci`) are in watts.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub trials: usize,
    pub seed: u64,
    pub sweep: Option<SweepSpec>,
    pub quad_tol: f64,
    pub oracle_limit: usize,
    pub oracle_even_bits: bool,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            trials: 10_000,
            seed: 0,
            sweep: None,
            quad_tol: DEFAULT_QUAD_TOL,
            oracle_limit: DEFAULT_ORACLE_LIMIT,
            oracle_even_bits: false,
        }
    }
}

/// A validated scenario. Immutable after load.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub su: SuParams,
    pub path_loss: PathLossParams,
    pub pus: Vec<PuDescriptor>,
    pub experiment: ExperimentParams,
}

impl ScenarioConfig {
    /// Parses and validates a scenario from JSON text.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: raw::Scenario = serde_json::from_str(text)?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Canonical JSON form with every power field in watts.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&raw::Scenario::from_config(self))
            .expect("scenario serialization is infallible")
    }

    /// Reference scenario: 128 subcarriers, one adjacent PU at 1 km
    /// and one co-channel PU at 5 km, BER 1e-4, all thresholds unconstrained.
    pub fn reference() -> Self {
        let spacing = 9765.6;
        Self {
            su: SuParams {
                num_subcarriers: 128,
                symbol_duration_s: 102.4e-6,
                subcarrier_spacing_hz: spacing,
                noise_variance_w: 1e-9,
                ber_threshold: BerThreshold::Uniform(1e-4),
                alpha: DEFAULT_ALPHA,
                power_threshold_w: f64::INFINITY,
                max_bits: DEFAULT_MAX_BITS,
                su_link_gain: 1.0,
                pu_interference_w: 0.0,
                pu_interference_profile_w: None,
            },
            path_loss: PathLossParams {
                exponent: 4.0,
                wavelength_m: 1.0 / 3.0,
                reference_distance_m: 500.0,
            },
            pus: vec![
                PuDescriptor {
                    kind: PuKind::Adjacent,
                    distance_m: 1000.0,
                    bandwidth_hz: 1.25e6,
                    center_offset_hz: 0.625e6,
                    interference_cap_w: f64::INFINITY,
                    probability: DEFAULT_PROBABILITY,
                    fading_rate: DEFAULT_FADING_RATE,
                },
                PuDescriptor {
                    kind: PuKind::Cochannel,
                    distance_m: 5000.0,
                    bandwidth_hz: 0.0,
                    center_offset_hz: 0.0,
                    interference_cap_w: f64::INFINITY,
                    probability: DEFAULT_PROBABILITY,
                    fading_rate: DEFAULT_FADING_RATE,
                },
            ],
            experiment: ExperimentParams::default(),
        }
    }

    pub fn adjacent_pus(&self) -> impl Iterator<Item = &PuDescriptor> {
        self.pus.iter().filter(|p| p.kind == PuKind::Adjacent)
    }

    pub fn cochannel_pus(&self) -> impl Iterator<Item = &PuDescriptor> {
        self.pus.iter().filter(|p| p.kind == PuKind::Cochannel)
    }

    /// Checks every field invariant; errors name the offending field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let su = &self.su;
        fn inv(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
            ConfigError::invalid(field, reason)
        }
        if su.num_subcarriers == 0 {
            return Err(inv("su.num_subcarriers", "must be positive"));
        }
        if !(su.symbol_duration_s > 0.0 && su.symbol_duration_s.is_finite()) {
            return Err(inv("su.symbol_duration_s", "must be positive"));
        }
        if !(su.subcarrier_spacing_hz > 0.0 && su.subcarrier_spacing_hz.is_finite()) {
            return Err(inv("su.subcarrier_spacing_hz", "must be positive"));
        }
        let product = su.symbol_duration_s * su.subcarrier_spacing_hz;
        if (product - 1.0).abs() > SPACING_PRODUCT_TOL {
            return Err(inv(
                "su.subcarrier_spacing_hz",
                format!("symbol duration times spacing must be 1, got {product}"),
            ));
        }
        if !(su.noise_variance_w >= 0.0 && su.noise_variance_w.is_finite()) {
            return Err(inv("su.noise_variance", "must be finite and non-negative"));
        }
        if !su.ber_threshold.fits(su.num_subcarriers) {
            return Err(inv(
                "su.ber_threshold",
                "per-subcarrier list must have num_subcarriers entries",
            ));
        }
        for b in su.ber_threshold.values() {
            if !(b > 0.0 && b < 0.2) {
                return Err(inv(
                    "su.ber_threshold",
                    format!("ber out of range (0, 0.2): {b}"),
                ));
            }
        }
        if !(su.alpha > 0.0 && su.alpha < 1.0) {
            return Err(inv(
                "su.alpha",
                format!("alpha out of range (0, 1): {}", su.alpha),
            ));
        }
        if !(su.power_threshold_w > 0.0) {
            return Err(inv("su.power_threshold", "must be positive or infinite"));
        }
        if su.max_bits < 2 || su.max_bits > 52 {
            return Err(inv(
                "su.max_bits",
                format!("must be in [2, 52], got {}", su.max_bits),
            ));
        }
        if !(su.su_link_gain >= 0.0 && su.su_link_gain.is_finite()) {
            return Err(inv("su.su_link_gain", "must be finite and non-negative"));
        }
        if !(su.pu_interference_w >= 0.0 && su.pu_interference_w.is_finite()) {
            return Err(inv(
                "su.pu_interference",
                "negative or non-finite interference",
            ));
        }
        if let Some(profile) = &su.pu_interference_profile_w {
            if profile.len() != su.num_subcarriers {
                return Err(inv(
                    "su.pu_interference_profile",
                    format!(
                        "expected {} entries, got {}",
                        su.num_subcarriers,
                        profile.len()
                    ),
                ));
            }
            if let Some(bad) = profile.iter().find(|j| !(**j >= 0.0 && j.is_finite())) {
                return Err(inv(
                    "su.pu_interference_profile",
                    format!("negative or non-finite interference {bad}"),
                ));
            }
        }

        let pl = &self.path_loss;
        if !(pl.exponent > 0.0 && pl.exponent.is_finite()) {
            return Err(inv("path_loss.exponent", "must be positive"));
        }
        if !(pl.wavelength_m > 0.0 && pl.wavelength_m.is_finite()) {
            return Err(inv("path_loss.wavelength_m", "must be positive"));
        }
        if !(pl.reference_distance_m > 0.0 && pl.reference_distance_m.is_finite()) {
            return Err(inv("path_loss.reference_distance_m", "must be positive"));
        }

        for (idx, pu) in self.pus.iter().enumerate() {
            let field = |name: &str| format!("pus[{idx}].{name}");
            if !(pu.distance_m > 0.0 && pu.distance_m.is_finite()) {
                return Err(inv(field("distance_m"), "must be positive"));
            }
            if pu.distance_m < pl.reference_distance_m {
                return Err(inv(
                    field("distance_m"),
                    "closer than the path-loss reference distance",
                ));
            }
            if !(pu.interference_cap_w > 0.0) {
                return Err(inv(
                    field("interference_cap"),
                    "must be positive or infinite",
                ));
            }
            if !(pu.probability > 0.0 && pu.probability <= 1.0) {
                return Err(inv(
                    field("probability"),
                    format!("probability out of range (0, 1]: {}", pu.probability),
                ));
            }
            if !(pu.fading_rate > 0.0 && pu.fading_rate.is_finite()) {
                return Err(inv(field("fading_rate"), "must be positive"));
            }
            if pu.kind == PuKind::Adjacent {
                if !(pu.bandwidth_hz > 0.0 && pu.bandwidth_hz.is_finite()) {
                    return Err(inv(
                        field("bandwidth_hz"),
                        "adjacent PU needs a positive bandwidth",
                    ));
                }
                if !pu.center_offset_hz.is_finite() {
                    return Err(inv(field("center_offset_hz"), "must be finite"));
                }
            }
        }

        let ex = &self.experiment;
        if ex.trials == 0 {
            return Err(inv("experiment.trials", "must be at least 1"));
        }
        if !(ex.quad_tol > 0.0 && ex.quad_tol <= 1e-3) {
            return Err(inv("experiment.quad_tol", "must be in (0, 1e-3]"));
        }
        if let Some(sweep) = &ex.sweep {
            if sweep.values.is_empty() {
                return Err(inv("experiment.sweep.values", "must not be empty"));
            }
        }
        Ok(())
    }
}

/// Path loss in dB: free-space loss at `d_0` plus `10·γ·log10(d/d_0)`.
pub fn path_loss_db(distance_m: f64, params: &PathLossParams) -> Result<f64> {
    let d0 = params.reference_distance_m;
    if !(distance_m >= d0) {
        return Err(Error::PathLossDomain {
            distance: distance_m,
            reference: d0,
        });
    }
    let free_space = 20.0 * (4.0 * std::f64::consts::PI * d0 / params.wavelength_m).log10();
    Ok(free_space + 10.0 * params.exponent * (distance_m / d0).log10())
}

/// Power units accepted in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerUnit {
    #[serde(rename = "W")]
    Watt,
    #[serde(rename = "mW")]
    Milliwatt,
    #[serde(rename = "uW", alias = "µW", alias = "μW")]
    Microwatt,
    #[serde(rename = "nW")]
    Nanowatt,
}

impl PowerUnit {
    pub fn to_watts(self, value: f64) -> f64 {
        match self {
            PowerUnit::Watt => value,
            PowerUnit::Milliwatt => value * 1e-3,
            PowerUnit::Microwatt => value * 1e-6,
            PowerUnit::Nanowatt => value * 1e-9,
        }
    }
}

/// On-disk representation. Kept separate so the in-memory types stay in SI units.
mod raw {
    use super::*;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(untagged)]
    pub enum Magnitude {
        Number(f64),
        Text(String),
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Power {
        pub value: Magnitude,
        pub unit: PowerUnit,
    }

    impl Power {
        pub fn watts(value: f64) -> Self {
            let value = if value.is_infinite() && value > 0.0 {
                Magnitude::Text("inf".into())
            } else {
                Magnitude::Number(value)
            };
            Power {
                value,
                unit: PowerUnit::Watt,
            }
        }

        pub fn to_watts(&self, field: &str) -> Result<f64, ConfigError> {
            let v = match &self.value {
                Magnitude::Number(v) => *v,
                Magnitude::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "+inf" => f64::INFINITY,
                    _ => {
                        return Err(ConfigError::invalid(
                            field,
                            format!("expected a number or \"inf\", got {t:?}"),
                        ))
                    }
                },
            };
            Ok(self.unit.to_watts(v))
        }
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct PowerList {
        pub values: Vec<f64>,
        pub unit: PowerUnit,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Su {
        pub num_subcarriers: usize,
        pub symbol_duration_s: Option<f64>,
        pub subcarrier_spacing_hz: Option<f64>,
        pub noise_variance: Power,
        pub ber_threshold: BerThreshold,
        #[serde(default)]
        pub alpha: Option<f64>,
        #[serde(default)]
        pub power_threshold: Option<Power>,
        #[serde(default)]
        pub max_bits: Option<u32>,
        #[serde(default)]
        pub su_link_gain: Option<f64>,
        #[serde(default)]
        pub pu_interference: Option<Power>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub pu_interference_profile: Option<PowerList>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Pu {
        pub kind: PuKind,
        pub distance_m: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub bandwidth_hz: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub center_offset_hz: Option<f64>,
        pub interference_cap: Power,
        #[serde(default)]
        pub probability: Option<f64>,
        #[serde(default)]
        pub fading_rate: Option<f64>,
    }

    #[derive(Debug, Clone, Default, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Experiment {
        #[serde(default)]
        pub trials: Option<usize>,
        #[serde(default)]
        pub seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub sweep: Option<SweepSpec>,
        #[serde(default)]
        pub quad_tol: Option<f64>,
        #[serde(default)]
        pub oracle_limit: Option<usize>,
        #[serde(default)]
        pub oracle_even_bits: Option<bool>,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Scenario {
        pub su: Su,
        pub path_loss: PathLossParams,
        #[serde(default)]
        pub pus: Vec<Pu>,
        #[serde(default)]
        pub experiment: Experiment,
    }

    impl Scenario {
        pub fn into_config(self) -> Result<ScenarioConfig, ConfigError> {
            let su = self.su;
            let (symbol_duration_s, subcarrier_spacing_hz) =
                match (su.symbol_duration_s, su.subcarrier_spacing_hz) {
                    (Some(t), Some(f)) => (t, f),
                    (Some(t), None) => (t, 1.0 / t),
                    (None, Some(f)) => (1.0 / f, f),
                    (None, None) => {
                        return Err(ConfigError::invalid(
                            "su.symbol_duration_s",
                            "give symbol_duration_s, subcarrier_spacing_hz, or both",
                        ))
                    }
                };
            let profile = su.pu_interference_profile.map(|list| {
                list.values
                    .iter()
                    .map(|v| list.unit.to_watts(*v))
                    .collect::<Vec<_>>()
            });
            let su_params = SuParams {
                num_subcarriers: su.num_subcarriers,
                symbol_duration_s,
                subcarrier_spacing_hz,
                noise_variance_w: su.noise_variance.to_watts("su.noise_variance")?,
                ber_threshold: su.ber_threshold,
                alpha: su.alpha.unwrap_or(DEFAULT_ALPHA),
                power_threshold_w: match su.power_threshold {
                    Some(p) => p.to_watts("su.power_threshold")?,
                    None => f64::INFINITY,
                },
                max_bits: su.max_bits.unwrap_or(DEFAULT_MAX_BITS),
                su_link_gain: su.su_link_gain.unwrap_or(1.0),
                pu_interference_w: match su.pu_interference {
                    Some(p) => p.to_watts("su.pu_interference")?,
                    None => 0.0,
                },
                pu_interference_profile_w: profile,
            };

            let mut pus = Vec::with_capacity(self.pus.len());
            for (idx, pu) in self.pus.into_iter().enumerate() {
                let field = format!("pus[{idx}].interference_cap");
                pus.push(PuDescriptor {
                    kind: pu.kind,
                    distance_m: pu.distance_m,
                    bandwidth_hz: pu.bandwidth_hz.unwrap_or(0.0),
                    center_offset_hz: pu.center_offset_hz.unwrap_or(0.0),
                    interference_cap_w: pu.interference_cap.to_watts(&field)?,
                    probability: pu.probability.unwrap_or(DEFAULT_PROBABILITY),
                    fading_rate: pu.fading_rate.unwrap_or(DEFAULT_FADING_RATE),
                });
            }

            let ex = self.experiment;
            let defaults = ExperimentParams::default();
            let experiment = ExperimentParams {
                trials: ex.trials.unwrap_or(defaults.trials),
                seed: ex.seed.unwrap_or(defaults.seed),
                sweep: ex.sweep,
                quad_tol: ex.quad_tol.unwrap_or(defaults.quad_tol),
                oracle_limit: ex.oracle_limit.unwrap_or(defaults.oracle_limit),
                oracle_even_bits: ex.oracle_even_bits.unwrap_or(defaults.oracle_even_bits),
            };

            Ok(ScenarioConfig {
                su: su_params,
                path_loss: self.path_loss,
                pus,
                experiment,
            })
        }

        pub fn from_config(cfg: &ScenarioConfig) -> Self {
            let su = &cfg.su;
            Scenario {
                su: Su {
                    num_subcarriers: su.num_subcarriers,
                    symbol_duration_s: Some(su.symbol_duration_s),
                    subcarrier_spacing_hz: Some(su.subcarrier_spacing_hz),
                    noise_variance: Power::watts(su.noise_variance_w),
                    ber_threshold: su.ber_threshold.clone(),
                    alpha: Some(su.alpha),
                    power_threshold: Some(Power::watts(su.power_threshold_w)),
                    max_bits: Some(su.max_bits),
                    su_link_gain: Some(su.su_link_gain),
                    pu_interference: Some(Power::watts(su.pu_interference_w)),
                    pu_interference_profile: su.pu_interference_profile_w.as_ref().map(|v| {
                        PowerList {
                            values: v.clone(),
                            unit: PowerUnit::Watt,
                        }
                    }),
                },
                path_loss: cfg.path_loss,
                pus: cfg
                    .pus
                    .iter()
                    .map(|pu| {
                        let adjacent = pu.kind == PuKind::Adjacent;
                        Pu {
                            kind: pu.kind,
                            distance_m: pu.distance_m,
                            bandwidth_hz: adjacent.then_some(pu.bandwidth_hz),
                            center_offset_hz: adjacent.then_some(pu.center_offset_hz),
                            interference_cap: Power::watts(pu.interference_cap_w),
                            probability: Some(pu.probability),
                            fading_rate: Some(pu.fading_rate),
                        }
                    })
                    .collect(),
                experiment: Experiment {
                    trials: Some(cfg.experiment.trials),
                    seed: Some(cfg.experiment.seed),
                    sweep: cfg.experiment.sweep.clone(),
                    quad_tol: Some(cfg.experiment.quad_tol),
                    oracle_limit: Some(cfg.experiment.oracle_limit),
                    oracle_even_bits: Some(cfg.experiment.oracle_even_bits),
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = r#"{
        "su": {
            "num_subcarriers": 128,
            "symbol_duration_s": 102.4e-6,
            "subcarrier_spacing_hz": 9765.6,
            "noise_variance": {"value": 1e-3, "unit": "uW"},
            "ber_threshold": 1e-4,
            "power_threshold": {"value": 0.1, "unit": "mW"}
        },
        "path_loss": {"exponent": 4, "wavelength_m": 0.3333333333333333, "reference_distance_m": 500},
        "pus": [
            {"kind": "adjacent", "distance_m": 1000, "bandwidth_hz": 1.25e6,
             "center_offset_hz": 6.25e5, "interference_cap": {"value": "inf", "unit": "W"}},
            {"kind": "cochannel", "distance_m": 5000,
             "interference_cap": {"value": 1e-8, "unit": "µW"}}
        ],
        "experiment": {"trials": 100, "seed": 7}
    }"#;

    fn with_field(path: &[&str], value: serde_json::Value) -> String {
        let mut doc: serde_json::Value = serde_json::from_str(REFERENCE).unwrap();
        let mut node = &mut doc;
        for key in &path[..path.len() - 1] {
            node = match key.parse::<usize>() {
                Ok(i) => &mut node[i],
                Err(_) => &mut node[*key],
            };
        }
        node[path[path.len() - 1]] = value;
        doc.to_string()
    }

    #[test]
    fn loads_reference_parameters_with_defaults() {
        let cfg = ScenarioConfig::from_json(REFERENCE).unwrap();
        assert_eq!(cfg.su.num_subcarriers, 128);
        assert_eq!(cfg.su.alpha, 0.5);
        assert_eq!(cfg.su.max_bits, 16);
        assert!((cfg.su.noise_variance_w - 1e-9).abs() < 1e-24);
        assert!((cfg.su.power_threshold_w - 1e-4).abs() < 1e-19);
        assert!(cfg.pus[0].interference_cap_w.is_infinite());
        assert!((cfg.pus[1].interference_cap_w - 1e-14).abs() < 1e-29);
        assert_eq!(cfg.pus[1].probability, 0.9);
        assert_eq!(cfg.pus[1].fading_rate, 1.0);
        assert_eq!(cfg.experiment.trials, 100);
    }

    #[test]
    fn rejects_alpha_out_of_range() {
        let err = ScenarioConfig::from_json(&with_field(&["su", "alpha"], 1.2.into())).unwrap_err();
        assert!(err.to_string().contains("alpha out of range"), "{err}");
        assert!(err.to_string().starts_with("su.alpha"));
    }

    #[test]
    fn rejects_zero_probability() {
        let text = with_field(&["pus", "1", "probability"], 0.0.into());
        let err = ScenarioConfig::from_json(&text).unwrap_err();
        assert!(
            err.to_string().contains("probability out of range"),
            "{err}"
        );
        assert!(err.to_string().contains("pus[1]"));
    }

    #[test]
    fn rejects_unknown_keys_with_position() {
        let text = with_field(&["su", "bogus"], 1.into());
        match ScenarioConfig::from_json(&text).unwrap_err() {
            ConfigError::Parse { message, .. } => assert!(message.contains("bogus")),
            other => panic!("unexpected {other:?}"),
        }
        let err = ScenarioConfig::from_json("{\n \"su\": [1,\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 2.., .. }));
    }

    #[test]
    fn rejects_inconsistent_spacing_and_bad_ber() {
        let text = with_field(&["su", "subcarrier_spacing_hz"], 10_000.0.into());
        assert!(ScenarioConfig::from_json(&text).is_err());
        let text = with_field(&["su", "ber_threshold"], 0.25.into());
        assert!(ScenarioConfig::from_json(&text).is_err());
        let text = with_field(&["su", "max_bits"], 1.into());
        assert!(ScenarioConfig::from_json(&text).is_err());
        let text = with_field(
            &["su", "pu_interference"],
            serde_json::json!({"value": -1.0, "unit": "W"}),
        );
        assert!(ScenarioConfig::from_json(&text).is_err());
    }

    #[test]
    fn spacing_defaults_to_reciprocal_duration() {
        let mut doc: serde_json::Value = serde_json::from_str(REFERENCE).unwrap();
        doc["su"]
            .as_object_mut()
            .unwrap()
            .remove("subcarrier_spacing_hz");
        let cfg = ScenarioConfig::from_json(&doc.to_string()).unwrap();
        assert_eq!(cfg.su.subcarrier_spacing_hz, 1.0 / 102.4e-6);
    }

    #[test]
    fn reference_matches_file() {
        let mut from_file = ScenarioConfig::from_json(REFERENCE).unwrap();
        from_file.experiment = ExperimentParams::default();
        let mut reference = ScenarioConfig::reference();
        reference.su.power_threshold_w = from_file.su.power_threshold_w;
        reference.pus[1].interference_cap_w = from_file.pus[1].interference_cap_w;
        reference.su.noise_variance_w = from_file.su.noise_variance_w;
        assert_eq!(from_file, reference);
    }

    #[test]
    fn path_loss_values() {
        let p = PathLossParams {
            exponent: 4.0,
            wavelength_m: 1.0 / 3.0,
            reference_distance_m: 500.0,
        };
        assert!((path_loss_db(500.0, &p).unwrap() - 85.51).abs() < 5e-3);
        assert!((path_loss_db(5000.0, &p).unwrap() - 125.51).abs() < 5e-3);
        let l1k = path_loss_db(1000.0, &p).unwrap();
        assert!((l1k - (path_loss_db(500.0, &p).unwrap() + 40.0 * 2f64.log10())).abs() < 1e-12);
        assert!((l1k - 97.55).abs() < 5e-3);
        assert!(matches!(
            path_loss_db(499.0, &p),
            Err(Error::PathLossDomain { .. })
        ));
    }
}
