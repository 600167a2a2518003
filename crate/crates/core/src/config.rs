//! Receiver configuration: TOML schema, defaults and validation.
//!
//! The annotated default lives in `configs/default.toml` and is compiled in,
//! so [`ReceiverConfig::default_config`] needs no file on disk.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::comb::{FrequencyComb, DEFAULT_PLACEMENT_TOLERANCE_HZ};
use crate::eit::{mhz, LadderSystem};
use crate::field_map::{fit_profile_with_offset, Anchor, FieldProfile, ProfileError};
use crate::receiver::{ChannelDefaults, FarFieldStimulus, SensitivityTargets};
use crate::stark::RydbergTransition;

pub const FORMAT_VERSION: u32 = 1;

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../configs/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field `{field}`: {constraint}")]
    Invalid { field: String, constraint: String },
}

fn invalid(field: &str, constraint: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        constraint: constraint.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSection {
    pub field_free_frequency_hz: f64,
    /// Hz / (V/cm)^2.
    pub differential_polarizability: f64,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitProfile {
    pub reference_position_cm: f64,
    pub reference_field_v_per_cm: f64,
    pub decay_exponent: f64,
    #[serde(default)]
    pub offset_cm: f64,
    pub valid_range_cm: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    #[serde(default)]
    pub anchors: Vec<Anchor>,
    /// Pins the power-law offset; fitted from three or more anchors otherwise.
    pub offset_cm: Option<f64>,
    /// Overrides the span of the anchors.
    pub valid_range_cm: Option<[f64; 2]>,
    pub explicit: Option<ExplicitProfile>,
    #[serde(default = "default_profile_samples")]
    pub samples: usize,
}

fn default_profile_samples() -> usize {
    121
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombSection {
    pub center_frequency_hz: f64,
    pub line_spacing_hz: f64,
    pub line_count: usize,
    pub total_power_dbm: f64,
    /// One LO power per line; an equal split of the total when absent.
    pub per_line_power_dbm: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    #[serde(default = "default_tolerance")]
    pub tolerance_hz: f64,
    #[serde(default)]
    pub min_gap_cm: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_PLACEMENT_TOLERANCE_HZ
}

impl Default for PlannerSection {
    fn default() -> Self {
        Self {
            tolerance_hz: default_tolerance(),
            min_gap_cm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub half_width_3db_hz: f64,
    pub rolloff_order: u32,
    pub peak_power_dbm: f64,
    pub detection_detuning_hz: f64,
    pub center_e_det_v_per_cm: f64,
    pub edge_sensitivity_v_per_cm_sqrt_hz: f64,
    pub measurement_time_s: f64,
    #[serde(default = "one")]
    pub gain_scale_center: f64,
    #[serde(default = "one")]
    pub gain_scale_edge: f64,
    pub stimulus: FarFieldStimulus,
}

fn one() -> f64 {
    1.0
}

/// Ladder parameters in MHz; each value `v` becomes `2 pi v 10^6` rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSection {
    pub probe_rabi_mhz: f64,
    pub coupling_rabi_mhz: f64,
    #[serde(default)]
    pub probe_detuning_mhz: f64,
    #[serde(default)]
    pub coupling_detuning_mhz: f64,
    #[serde(default)]
    pub mw_detuning_mhz: f64,
    pub decay_e_mhz: f64,
    pub decay_r1_mhz: f64,
    pub decay_r2_mhz: f64,
    pub dephasing_mhz: f64,
}

impl LadderSection {
    pub fn system(&self) -> LadderSystem {
        LadderSystem {
            probe_rabi: mhz(self.probe_rabi_mhz),
            coupling_rabi: mhz(self.coupling_rabi_mhz),
            mw_rabi: 0.0,
            probe_detuning: mhz(self.probe_detuning_mhz),
            coupling_detuning: mhz(self.coupling_detuning_mhz),
            mw_detuning: mhz(self.mw_detuning_mhz),
            decay_e: mhz(self.decay_e_mhz),
            decay_r1: mhz(self.decay_r1_mhz),
            decay_r2: mhz(self.decay_r2_mhz),
            dephasing: mhz(self.dephasing_mhz),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseScenario {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
    /// Signal field; the channel reference field when absent.
    pub field_v_per_cm: Option<f64>,
    pub analysis_span_hz: f64,
}

impl Default for ResponseScenario {
    fn default() -> Self {
        Self {
            start_hz: 8.02e9,
            stop_hz: 8.24e9,
            step_hz: 100e3,
            field_v_per_cm: None,
            analysis_span_hz: 5e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearityScenario {
    pub field_min_v_per_cm: f64,
    pub field_max_v_per_cm: f64,
    pub points_per_decade: usize,
}

impl Default for LinearityScenario {
    fn default() -> Self {
        Self {
            field_min_v_per_cm: 1e-8,
            field_max_v_per_cm: 1e-2,
            points_per_decade: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTwoCellScenario {
    pub center_frequency_hz: f64,
    pub line_spacing_hz: f64,
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
    pub field_v_per_cm: Option<f64>,
    pub analysis_span_hz: f64,
}

impl Default for SweepTwoCellScenario {
    fn default() -> Self {
        Self {
            center_frequency_hz: 8.13e9,
            line_spacing_hz: 200e6,
            start_hz: 8.02e9,
            stop_hz: 8.24e9,
            step_hz: 100e3,
            field_v_per_cm: None,
            analysis_span_hz: 5e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EitScenario {
    pub mw_rabi_mhz: f64,
    pub half_span_mhz: f64,
    pub points: usize,
}

impl Default for EitScenario {
    fn default() -> Self {
        Self {
            mw_rabi_mhz: 40.0,
            half_span_mhz: 60.0,
            points: 2401,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default)]
    pub response: ResponseScenario,
    #[serde(default)]
    pub linearity: LinearityScenario,
    #[serde(default)]
    pub sweep2cell: SweepTwoCellScenario,
    #[serde(default)]
    pub eit: EitScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub transition: TransitionSection,
    pub profile: ProfileSection,
    pub comb: CombSection,
    #[serde(default)]
    pub planner: PlannerSection,
    pub channel: ChannelSection,
    pub ladder: LadderSection,
    #[serde(default)]
    pub scenarios: ScenarioSection,
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ReceiverConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ReceiverConfig, ConfigError> {
    if text.trim().is_empty() {
        return Err(ConfigError::Parse("config is empty".to_string()));
    }
    let config: ReceiverConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and >= 0, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn range(field: &str, r: [f64; 2]) -> Result<(), ConfigError> {
    if r[0].is_finite() && r[1].is_finite() && r[0] < r[1] {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must satisfy min < max, got [{}, {}]", r[0], r[1]),
        ))
    }
}

impl ReceiverConfig {
    pub fn default_config() -> Self {
        parse_config(DEFAULT_CONFIG_TOML).expect("bundled default config is valid")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = &self.transition;
        positive(
            "transition.field_free_frequency_hz",
            t.field_free_frequency_hz,
        )?;
        non_negative(
            "transition.differential_polarizability",
            t.differential_polarizability,
        )?;

        let p = &self.profile;
        match (&p.explicit, p.anchors.len()) {
            (Some(_), n) if n > 0 => {
                return Err(invalid(
                    "profile",
                    "give either anchors or explicit, not both",
                ));
            }
            (None, n) if n < 2 => {
                return Err(invalid(
                    "profile.anchors",
                    format!("need at least 2 anchors, got {n}"),
                ));
            }
            _ => {}
        }
        for (i, a) in p.anchors.iter().enumerate() {
            finite(&format!("profile.anchors[{i}].x_cm"), a.x_cm)?;
            positive(
                &format!("profile.anchors[{i}].frequency_hz"),
                a.frequency_hz,
            )?;
        }
        if let Some(x0) = p.offset_cm {
            non_negative("profile.offset_cm", x0)?;
        }
        if let Some(r) = p.valid_range_cm {
            range("profile.valid_range_cm", r)?;
        }
        if let Some(e) = &p.explicit {
            finite(
                "profile.explicit.reference_position_cm",
                e.reference_position_cm,
            )?;
            positive(
                "profile.explicit.reference_field_v_per_cm",
                e.reference_field_v_per_cm,
            )?;
            positive("profile.explicit.decay_exponent", e.decay_exponent)?;
            non_negative("profile.explicit.offset_cm", e.offset_cm)?;
            range("profile.explicit.valid_range_cm", e.valid_range_cm)?;
        }
        if p.samples < 2 {
            return Err(invalid(
                "profile.samples",
                format!("must be >= 2, got {}", p.samples),
            ));
        }

        let c = &self.comb;
        positive("comb.center_frequency_hz", c.center_frequency_hz)?;
        positive("comb.line_spacing_hz", c.line_spacing_hz)?;
        finite("comb.total_power_dbm", c.total_power_dbm)?;
        if c.line_count == 0 {
            return Err(invalid("comb.line_count", "must be >= 1"));
        }
        if let Some(powers) = &c.per_line_power_dbm {
            if powers.len() != c.line_count {
                return Err(invalid(
                    "comb.per_line_power_dbm",
                    format!(
                        "has {} entries but comb.line_count is {}",
                        powers.len(),
                        c.line_count
                    ),
                ));
            }
            for (i, v) in powers.iter().enumerate() {
                finite(&format!("comb.per_line_power_dbm[{i}]"), *v)?;
            }
        }
        let lowest = c.center_frequency_hz - (c.line_count as f64 - 1.0) / 2.0 * c.line_spacing_hz;
        if lowest <= 0.0 {
            return Err(invalid("comb", "lowest comb line must be above 0 Hz"));
        }

        positive("planner.tolerance_hz", self.planner.tolerance_hz)?;
        non_negative("planner.min_gap_cm", self.planner.min_gap_cm)?;

        let ch = &self.channel;
        positive("channel.half_width_3db_hz", ch.half_width_3db_hz)?;
        if ch.rolloff_order == 0 {
            return Err(invalid("channel.rolloff_order", "must be >= 1"));
        }
        finite("channel.peak_power_dbm", ch.peak_power_dbm)?;
        finite("channel.detection_detuning_hz", ch.detection_detuning_hz)?;
        positive("channel.center_e_det_v_per_cm", ch.center_e_det_v_per_cm)?;
        positive(
            "channel.edge_sensitivity_v_per_cm_sqrt_hz",
            ch.edge_sensitivity_v_per_cm_sqrt_hz,
        )?;
        positive("channel.measurement_time_s", ch.measurement_time_s)?;
        positive("channel.gain_scale_center", ch.gain_scale_center)?;
        positive("channel.gain_scale_edge", ch.gain_scale_edge)?;
        finite(
            "channel.stimulus.signal_power_dbm",
            ch.stimulus.signal_power_dbm,
        )?;
        positive("channel.stimulus.antenna_gain", ch.stimulus.antenna_gain)?;
        positive("channel.stimulus.distance_m", ch.stimulus.distance_m)?;
        positive(
            "channel.stimulus.perturbation_factor",
            ch.stimulus.perturbation_factor,
        )?;

        let l = &self.ladder;
        for (name, v) in [
            ("ladder.probe_rabi_mhz", l.probe_rabi_mhz),
            ("ladder.coupling_rabi_mhz", l.coupling_rabi_mhz),
            ("ladder.decay_r1_mhz", l.decay_r1_mhz),
            ("ladder.decay_r2_mhz", l.decay_r2_mhz),
            ("ladder.dephasing_mhz", l.dephasing_mhz),
        ] {
            non_negative(name, v)?;
        }
        positive("ladder.decay_e_mhz", l.decay_e_mhz)?;
        for (name, v) in [
            ("ladder.probe_detuning_mhz", l.probe_detuning_mhz),
            ("ladder.coupling_detuning_mhz", l.coupling_detuning_mhz),
            ("ladder.mw_detuning_mhz", l.mw_detuning_mhz),
        ] {
            finite(name, v)?;
        }

        let s = &self.scenarios;
        let r = &s.response;
        positive("scenarios.response.start_hz", r.start_hz)?;
        range("scenarios.response", [r.start_hz, r.stop_hz])?;
        positive("scenarios.response.step_hz", r.step_hz)?;
        positive("scenarios.response.analysis_span_hz", r.analysis_span_hz)?;
        if let Some(e) = r.field_v_per_cm {
            non_negative("scenarios.response.field_v_per_cm", e)?;
        }
        let lin = &s.linearity;
        positive(
            "scenarios.linearity.field_min_v_per_cm",
            lin.field_min_v_per_cm,
        )?;
        range(
            "scenarios.linearity",
            [lin.field_min_v_per_cm, lin.field_max_v_per_cm],
        )?;
        if lin.points_per_decade == 0 {
            return Err(invalid(
                "scenarios.linearity.points_per_decade",
                "must be >= 1",
            ));
        }
        let w = &s.sweep2cell;
        positive(
            "scenarios.sweep2cell.center_frequency_hz",
            w.center_frequency_hz,
        )?;
        positive("scenarios.sweep2cell.line_spacing_hz", w.line_spacing_hz)?;
        positive("scenarios.sweep2cell.start_hz", w.start_hz)?;
        range("scenarios.sweep2cell", [w.start_hz, w.stop_hz])?;
        positive("scenarios.sweep2cell.step_hz", w.step_hz)?;
        positive("scenarios.sweep2cell.analysis_span_hz", w.analysis_span_hz)?;
        if let Some(e) = w.field_v_per_cm {
            non_negative("scenarios.sweep2cell.field_v_per_cm", e)?;
        }
        let e = &s.eit;
        non_negative("scenarios.eit.mw_rabi_mhz", e.mw_rabi_mhz)?;
        positive("scenarios.eit.half_span_mhz", e.half_span_mhz)?;
        if e.points < 3 {
            return Err(invalid(
                "scenarios.eit.points",
                format!("must be >= 3, got {}", e.points),
            ));
        }
        Ok(())
    }

    pub fn transition(&self) -> RydbergTransition {
        RydbergTransition {
            field_free_frequency: self.transition.field_free_frequency_hz,
            differential_polarizability: self.transition.differential_polarizability,
            label: self.transition.label.clone(),
        }
    }

    /// Field profile, fitted to the anchors or taken as given.
    pub fn profile(&self) -> Result<FieldProfile, ProfileError> {
        let t = self.transition();
        if let Some(e) = &self.profile.explicit {
            return FieldProfile::new(
                e.reference_position_cm,
                e.reference_field_v_per_cm,
                e.decay_exponent,
                e.offset_cm,
                (e.valid_range_cm[0], e.valid_range_cm[1]),
            );
        }
        let mut p = fit_profile_with_offset(&self.profile.anchors, &t, self.profile.offset_cm)?;
        if let Some(r) = self.profile.valid_range_cm {
            p.valid_range = (r[0], r[1]);
            p.validate()?;
        }
        Ok(p)
    }

    pub fn comb(&self) -> FrequencyComb {
        let c = &self.comb;
        let per_line = c.total_power_dbm - 10.0 * (c.line_count as f64).log10();
        FrequencyComb {
            center_frequency: c.center_frequency_hz,
            line_spacing: c.line_spacing_hz,
            line_count: c.line_count,
            per_line_power: c
                .per_line_power_dbm
                .clone()
                .unwrap_or_else(|| vec![per_line; c.line_count]),
            total_power: c.total_power_dbm,
        }
    }

    pub fn channel_defaults(&self) -> ChannelDefaults {
        let ch = &self.channel;
        ChannelDefaults {
            half_width_3db: ch.half_width_3db_hz,
            rolloff_order: ch.rolloff_order,
            peak_power: ch.peak_power_dbm,
            stimulus: ch.stimulus,
            targets: SensitivityTargets {
                center_e_det: ch.center_e_det_v_per_cm,
                edge_sensitivity: ch.edge_sensitivity_v_per_cm_sqrt_hz,
                measurement_time: ch.measurement_time_s,
                detection_detuning: ch.detection_detuning_hz,
            },
            gain_scale_center: ch.gain_scale_center,
            gain_scale_edge: ch.gain_scale_edge,
        }
    }

    pub fn ladder(&self) -> LadderSystem {
        self.ladder.system()
    }

    /// SHA-256 of the canonical JSON form, so formatting and comments in the
    /// TOML source do not change it.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default() {
        let c = ReceiverConfig::default_config();
        assert_eq!(c.comb.line_count, 21);
        assert_eq!(c.comb.line_spacing_hz, 10e6);
        assert_eq!(c.comb.center_frequency_hz, 8.13e9);
        assert_eq!(c.transition.field_free_frequency_hz, 7.97e9);
        assert_eq!(
            c.profile.anchors,
            vec![Anchor::new(2.0, 8.23e9), Anchor::new(7.98, 8.03e9)]
        );
        assert_eq!(c.comb(), FrequencyComb::standard());
        assert_eq!(c.channel_defaults(), ChannelDefaults::default());
    }

    #[test]
    fn empty_is_parse_error() {
        assert!(matches!(parse_config(""), Err(ConfigError::Parse(_))));
        assert!(matches!(
            parse_config("  \n# nothing\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn power_count_mismatch_names_both_counts() {
        let powers = vec!["-2.2"; 20].join(", ");
        let text = DEFAULT_CONFIG_TOML.replace(
            "total_power_dbm = 11.0",
            &format!("total_power_dbm = 11.0\nper_line_power_dbm = [{powers}]"),
        );
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ConfigError::Invalid { .. }));
        assert!(msg.contains("20") && msg.contains("21"), "{msg}");
        assert!(msg.contains("comb.per_line_power_dbm"), "{msg}");
    }

    #[test]
    fn invalid_field_is_named() {
        let text =
            DEFAULT_CONFIG_TOML.replace("half_width_3db_hz = 5.0e6", "half_width_3db_hz = -1.0");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(
            msg.contains("channel.half_width_3db_hz") && msg.contains("> 0"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_key_rejected() {
        let text = DEFAULT_CONFIG_TOML.replace("[comb]", "[comb]\nbogus = 1");
        assert!(matches!(parse_config(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn hash_ignores_comments() {
        let a = ReceiverConfig::default_config();
        let b = parse_config(&format!("# extra\n{DEFAULT_CONFIG_TOML}")).unwrap();
        assert_eq!(a.sha256(), b.sha256());
        let changed =
            parse_config(&DEFAULT_CONFIG_TOML.replace("rolloff_order = 2", "rolloff_order = 3"))
                .unwrap();
        assert_ne!(a.sha256(), changed.sha256());
    }
}
