//! Scenario orchestration: each scenario turns a [`ReceiverConfig`] into CSV
//! tables plus a JSON run manifest.
//!
//! CSV files start with `#` metadata lines (scenario, format version, config
//! hash, scenario parameters), then a header row and the body. Bodies are
//! byte-identical across runs of the same config; a wall-clock timestamp is
//! added to the metadata only when asked for.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::comb::{place_cells, CellArrayPlan, FrequencyComb, PlanError};
use crate::config::{ConfigError, ReceiverConfig, FORMAT_VERSION};
use crate::eit::{
    at_splitting, mhz, probe_spectrum, EitError, LadderSystem, ProbeSweep, STRONG_FIELD_RATIO,
};
use crate::field_map::{sample_profile, ProfileError};
use crate::receiver::{
    beat_power, build_channels, db_per_decade, linearity_curve, min_detectable_field,
    sensitivity_report, stitched_response, BeatSpectrum, ChannelResponse, ReceiverError,
    SignalScenario, SpectrumPeak,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Plan,
    Response,
    Linearity,
    Sensitivity,
    Sweep2Cell,
    Eit,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        ScenarioName::Plan,
        ScenarioName::Response,
        ScenarioName::Linearity,
        ScenarioName::Sensitivity,
        ScenarioName::Sweep2Cell,
        ScenarioName::Eit,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioName::Plan => "plan",
            ScenarioName::Response => "response",
            ScenarioName::Linearity => "linearity",
            ScenarioName::Sensitivity => "sensitivity",
            ScenarioName::Sweep2Cell => "sweep2cell",
            ScenarioName::Eit => "eit",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| ScenarioError::UnknownScenario(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (expected plan, response, linearity, sensitivity, sweep2cell or eit)")]
    UnknownScenario(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Solver(#[from] EitError),
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl From<ProfileError> for ScenarioError {
    fn from(e: ProfileError) -> Self {
        ScenarioError::Plan(PlanError::Profile(e))
    }
}

impl ScenarioError {
    /// 0 success, 1 I/O, 2 config, 3 infeasible plan, 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Io { .. } => 1,
            ScenarioError::UnknownScenario(_) | ScenarioError::Config(_) => 2,
            ScenarioError::Receiver(ReceiverError::Plan(_)) => 3,
            ScenarioError::Receiver(_) => 2,
            ScenarioError::Plan(_) => 3,
            ScenarioError::Solver(EitError::InvalidParameter(_)) => 2,
            ScenarioError::Solver(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Add a `generated_unix_s` line to every metadata header.
    pub timestamp: bool,
    /// Reserved for stochastic noise draws; the model is deterministic.
    pub seed: Option<u64>,
}

/// Fixed-point formatting with `-0` folded into `0`.
pub fn fmt_fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn fmt_sci(v: f64, digits: usize) -> String {
    format!("{v:.digits$e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file_name: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(file_name: &str, columns: &[&str]) -> Self {
        Self {
            file_name: file_name.to_string(),
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn meta(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header row and body, without metadata.
    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn render(&self, preamble: &[(String, String)]) -> String {
        let mut out = String::new();
        for (k, v) in preamble.iter().chain(&self.metadata) {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.body());
        out
    }
}

/// Metadata pairs, column names and rows of a rendered CSV.
pub type ParsedCsv = (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>);

pub fn parse_csv(text: &str) -> ParsedCsv {
    let mut meta = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        if let Some((k, v)) = rest.split_once(": ") {
            meta.push((k.to_string(), v.to_string()));
        }
        lines.next();
    }
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    let columns = lines.next().map(split).unwrap_or_default();
    let rows = lines.map(split).collect();
    (meta, columns, rows)
}

/// Strip `#` metadata lines, leaving the header row and body.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub name: ScenarioName,
    pub tables: Vec<CsvTable>,
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenScenario {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn build_plan(
    config: &ReceiverConfig,
    comb: &FrequencyComb,
) -> Result<CellArrayPlan, ScenarioError> {
    let profile = config.profile()?;
    let plan = place_cells(
        &profile,
        &config.transition(),
        comb,
        config.planner.tolerance_hz,
        config.planner.min_gap_cm,
    )?;
    if !plan.feasible {
        return Err(PlanError::Crowded {
            min_spacing_cm: plan.min_spacing,
            min_gap_cm: config.planner.min_gap_cm,
        }
        .into());
    }
    Ok(plan)
}

/// Default plan and its calibrated channels.
pub fn receiver(
    config: &ReceiverConfig,
) -> Result<(CellArrayPlan, Vec<ChannelResponse>), ScenarioError> {
    let plan = build_plan(config, &config.comb())?;
    let channels = build_channels(&plan, &config.channel_defaults())?;
    Ok((plan, channels))
}

fn sweep_points(start: f64, stop: f64, step: f64) -> usize {
    ((stop - start) / step).round() as usize + 1
}

pub fn response_spectrum(
    config: &ReceiverConfig,
) -> Result<(CellArrayPlan, Vec<ChannelResponse>, BeatSpectrum), ScenarioError> {
    let (plan, channels) = receiver(config)?;
    let r = &config.scenarios.response;
    let field = r.field_v_per_cm.unwrap_or(channels[0].reference_field);
    let mut scenario = SignalScenario::sweep(
        r.start_hz,
        r.stop_hz,
        sweep_points(r.start_hz, r.stop_hz, r.step_hz),
        field,
    );
    scenario.analysis_span = r.analysis_span_hz;
    scenario.measurement_time = config.channel.measurement_time_s;
    let spectrum = stitched_response(&plan, &channels, &scenario)?;
    Ok((plan, channels, spectrum))
}

pub fn sweep2cell_spectrum(
    config: &ReceiverConfig,
) -> Result<(CellArrayPlan, BeatSpectrum, Vec<SpectrumPeak>), ScenarioError> {
    let w = &config.scenarios.sweep2cell;
    let comb = FrequencyComb::equal_split(
        w.center_frequency_hz,
        w.line_spacing_hz,
        2,
        config.comb.total_power_dbm,
    )?;
    let plan = build_plan(config, &comb)?;
    let channels = build_channels(&plan, &config.channel_defaults())?;
    let field = w.field_v_per_cm.unwrap_or(channels[0].reference_field);
    let mut scenario = SignalScenario::sweep(
        w.start_hz,
        w.stop_hz,
        sweep_points(w.start_hz, w.stop_hz, w.step_hz),
        field,
    );
    scenario.analysis_span = w.analysis_span_hz;
    scenario.measurement_time = config.channel.measurement_time_s;
    let spectrum = stitched_response(&plan, &channels, &scenario)?;
    let peaks = spectrum.peaks();
    Ok((plan, spectrum, peaks))
}

/// Field grid for the linearity scenario, log-spaced with both ends included.
pub fn linearity_fields(config: &ReceiverConfig) -> (f64, f64, usize) {
    let l = &config.scenarios.linearity;
    let decades = (l.field_max_v_per_cm / l.field_min_v_per_cm).log10();
    let points = (decades * l.points_per_decade as f64).round() as usize + 1;
    (l.field_min_v_per_cm, l.field_max_v_per_cm, points.max(2))
}

fn spectrum_table(file_name: &str, spectrum: &BeatSpectrum) -> CsvTable {
    let mut t = CsvTable::new(
        file_name,
        &[
            "signal_GHz",
            "channel_index",
            "delta_f_kHz",
            "beat_dBm",
            "above_noise",
        ],
    );
    for r in &spectrum.rows {
        t.push(vec![
            fmt_fixed(r.signal_frequency / 1e9, 9),
            r.channel_index.to_string(),
            fmt_fixed(r.detuning / 1e3, 3),
            fmt_fixed(r.beat_power, 6),
            r.above_noise.to_string(),
        ]);
    }
    t
}

/// Where a sampled curve first falls below `threshold` on each side of
/// `center_index`, by linear interpolation. `None` if it never does.
fn crossings(
    xs: &[f64],
    ys: &[f64],
    center_index: usize,
    threshold: f64,
) -> (Option<f64>, Option<f64>) {
    let interp = |a: usize, b: usize| {
        let t = (threshold - ys[a]) / (ys[b] - ys[a]);
        xs[a] + t * (xs[b] - xs[a])
    };
    let lower = (1..=center_index)
        .rev()
        .find(|&i| ys[i - 1] < threshold)
        .map(|i| interp(i, i - 1));
    let upper = (center_index..xs.len().saturating_sub(1))
        .find(|&i| ys[i + 1] < threshold)
        .map(|i| interp(i, i + 1));
    (lower, upper)
}

fn opt_ghz(v: Option<f64>) -> String {
    v.map(|f| fmt_fixed(f / 1e9, 9)).unwrap_or_default()
}

fn opt_width(lo: Option<f64>, hi: Option<f64>) -> String {
    match (lo, hi) {
        (Some(a), Some(b)) => fmt_fixed((b - a) / 1e6, 6),
        _ => String::new(),
    }
}

const HALF_POWER_DB: f64 = 3.010_299_956_639_812;

/// Per-channel and stitched 3 dB bands measured from sampled curves.
fn bandwidth_table(
    plan: &CellArrayPlan,
    channels: &[ChannelResponse],
    spectrum: &BeatSpectrum,
    field: f64,
) -> Result<(CsvTable, Value), ScenarioError> {
    let mut t = CsvTable::new(
        "response_bandwidth.csv",
        &[
            "scope",
            "channel_index",
            "line_GHz",
            "lower_3dB_GHz",
            "upper_3dB_GHz",
            "width_MHz",
        ],
    );
    let xs: Vec<f64> = spectrum.rows.iter().map(|r| r.signal_frequency).collect();
    for (k, (entry, ch)) in plan.entries.iter().zip(channels).enumerate() {
        let ys = xs
            .iter()
            .map(|f| beat_power(ch, field, f - entry.line_frequency))
            .collect::<Result<Vec<_>, _>>()?;
        let threshold = beat_power(ch, field, 0.0)? - HALF_POWER_DB;
        let center = xs
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - entry.line_frequency)
                    .abs()
                    .total_cmp(&(b.1 - entry.line_frequency).abs())
            })
            .map_or(0, |(i, _)| i);
        let (lo, hi) = crossings(&xs, &ys, center, threshold);
        t.push(vec![
            "channel".to_string(),
            k.to_string(),
            fmt_fixed(entry.line_frequency / 1e9, 9),
            opt_ghz(lo),
            opt_ghz(hi),
            opt_width(lo, hi),
        ]);
    }
    // Interior channel boundaries sit exactly at the 3 dB level; the small
    // slack keeps them from splitting the stitched band.
    let ys: Vec<f64> = spectrum.rows.iter().map(|r| r.beat_power).collect();
    let peak_index = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map_or(0, |(i, _)| i);
    let peak = ys.get(peak_index).copied().unwrap_or(f64::NEG_INFINITY);
    let (lo, hi) = crossings(&xs, &ys, peak_index, peak - HALF_POWER_DB - 1e-6);
    t.push(vec![
        "stitched".to_string(),
        String::new(),
        String::new(),
        opt_ghz(lo),
        opt_ghz(hi),
        opt_width(lo, hi),
    ]);
    let summary = json!({
        "peak_dbm": peak,
        "stitched_lower_3db_hz": lo,
        "stitched_upper_3db_hz": hi,
        "stitched_width_hz": lo.zip(hi).map(|(a, b)| b - a),
    });
    Ok((t, summary))
}

fn run_plan(config: &ReceiverConfig) -> Result<ScenarioOutput, ScenarioError> {
    let (plan, _) = receiver(config)?;
    let profile = config.profile()?;
    let mut t = CsvTable::new(
        "plan.csv",
        &[
            "line_index",
            "line_GHz",
            "position_cm",
            "lo_power_dBm",
            "spacing_to_next_cm",
        ],
    )
    .meta("decay_exponent", fmt_fixed(profile.decay_exponent, 9))
    .meta("offset_cm", fmt_fixed(profile.offset, 9))
    .meta("tolerance_hz", config.planner.tolerance_hz);
    for (i, e) in plan.entries.iter().enumerate() {
        t.push(vec![
            e.line_index.to_string(),
            fmt_fixed(e.line_frequency / 1e9, 9),
            fmt_fixed(e.position_cm, 9),
            fmt_fixed(e.lo_power_dbm, 6),
            plan.spacing_to_next(i)
                .map(|s| fmt_fixed(s, 9))
                .unwrap_or_default(),
        ]);
    }
    let mut p = CsvTable::new("profile.csv", &["x_cm", "field_V_per_cm", "transition_GHz"]);
    for s in sample_profile(&profile, &config.transition(), config.profile.samples)? {
        p.push(vec![
            fmt_fixed(s.x_cm, 9),
            fmt_fixed(s.field_v_per_cm, 9),
            fmt_fixed(s.transition_hz / 1e9, 9),
        ]);
    }
    let summary = json!({
        "cells": plan.len(),
        "first_position_cm": plan.entries.first().map(|e| e.position_cm),
        "last_position_cm": plan.entries.last().map(|e| e.position_cm),
        "min_spacing_cm": plan.min_spacing,
        "decay_exponent": profile.decay_exponent,
        "offset_cm": profile.offset,
    });
    Ok(ScenarioOutput {
        name: ScenarioName::Plan,
        tables: vec![t, p],
        summary,
    })
}

fn run_response(config: &ReceiverConfig) -> Result<ScenarioOutput, ScenarioError> {
    let (plan, channels, spectrum) = response_spectrum(config)?;
    let r = &config.scenarios.response;
    let field = r.field_v_per_cm.unwrap_or(channels[0].reference_field);
    let t = spectrum_table("response.csv", &spectrum)
        .meta("field_v_per_cm", fmt_sci(field, 9))
        .meta("analysis_span_hz", r.analysis_span_hz)
        .meta("step_hz", r.step_hz);
    let (bw, summary) = bandwidth_table(&plan, &channels, &spectrum, field)?;
    Ok(ScenarioOutput {
        name: ScenarioName::Response,
        tables: vec![t, bw],
        summary,
    })
}

fn run_linearity(config: &ReceiverConfig) -> Result<ScenarioOutput, ScenarioError> {
    let (_, channels) = receiver(config)?;
    let detuning = config.channel.detection_detuning_hz;
    let (low, high, points) = linearity_fields(config);
    let mut t = CsvTable::new(
        "linearity.csv",
        &["channel_index", "field_V_per_cm", "signal_dBm", "beat_dBm"],
    )
    .meta("detuning_hz", detuning);
    let mut fit = CsvTable::new(
        "linearity_fit.csv",
        &[
            "channel_index",
            "E_det_nV_per_cm",
            "slope_pre_floor_dB_per_decade",
            "slope_floored_dB_per_decade",
        ],
    )
    .meta("floored_fit_region", "field >= 10 E_det");
    let mut worst: f64 = 0.0;
    for (k, ch) in channels.iter().enumerate() {
        let curve = linearity_curve(ch, detuning, low, high, points)?;
        for p in &curve {
            t.push(vec![
                k.to_string(),
                fmt_sci(p.field, 9),
                fmt_fixed(p.signal_power, 6),
                fmt_fixed(p.beat_power, 6),
            ]);
        }
        let e_det = min_detectable_field(ch, detuning);
        let pre: Vec<(f64, f64)> = curve.iter().map(|p| (p.field, p.signal_power)).collect();
        let floored: Vec<(f64, f64)> = curve
            .iter()
            .filter(|p| p.field >= 10.0 * e_det)
            .map(|p| (p.field, p.beat_power))
            .collect();
        let s_floor = if floored.len() >= 2 {
            db_per_decade(&floored)
        } else {
            f64::NAN
        };
        worst = worst.max((s_floor - 20.0).abs());
        fit.push(vec![
            k.to_string(),
            fmt_fixed(e_det * 1e9, 6),
            fmt_fixed(db_per_decade(&pre), 9),
            fmt_fixed(s_floor, 9),
        ]);
    }
    let summary = json!({
        "channels": channels.len(),
        "points_per_channel": points,
        "max_floored_slope_error_db_per_decade": worst,
    });
    Ok(ScenarioOutput {
        name: ScenarioName::Linearity,
        tables: vec![t, fit],
        summary,
    })
}

fn run_sensitivity(config: &ReceiverConfig) -> Result<ScenarioOutput, ScenarioError> {
    let (plan, channels) = receiver(config)?;
    let tm = config.channel.measurement_time_s;
    let rows = sensitivity_report(&plan, &channels, config.channel.detection_detuning_hz, tm)?;
    let mut t = CsvTable::new(
        "sensitivity.csv",
        &[
            "channel_index",
            "line_GHz",
            "E_det_nV_per_cm",
            "sensitivity_nV_cm_Hz",
        ],
    )
    .meta("measurement_time_s", tm)
    .meta("detuning_hz", config.channel.detection_detuning_hz);
    for r in &rows {
        t.push(vec![
            r.channel_index.to_string(),
            fmt_fixed(r.line_frequency / 1e9, 9),
            fmt_fixed(r.e_det * 1e9, 6),
            fmt_fixed(r.sensitivity * 1e9, 6),
        ]);
    }
    let best = rows
        .iter()
        .map(|r| r.sensitivity)
        .fold(f64::INFINITY, f64::min);
    let worst = rows.iter().map(|r| r.sensitivity).fold(0.0, f64::max);
    let summary = json!({
        "best_sensitivity_v_per_cm_sqrt_hz": best,
        "worst_sensitivity_v_per_cm_sqrt_hz": worst,
    });
    Ok(ScenarioOutput {
        name: ScenarioName::Sensitivity,
        tables: vec![t],
        summary,
    })
}

fn run_sweep2cell(config: &ReceiverConfig) -> Result<ScenarioOutput, ScenarioError> {
    let (plan, spectrum, peaks) = sweep2cell_spectrum(config)?;
    let w = &config.scenarios.sweep2cell;
    let t = spectrum_table("sweep2cell.csv", &spectrum)
        .meta("line_spacing_hz", w.line_spacing_hz)
        .meta("step_hz", w.step_hz)
        .meta(
            "positions_cm",
            plan.entries
                .iter()
                .map(|e| fmt_fixed(e.position_cm, 6))
                .collect::<Vec<_>>()
                .join(" "),
        );
    let mut p = CsvTable::new(
        "sweep2cell_peaks.csv",
        &["peak_index", "channel_index", "frequency_GHz", "beat_dBm"],
    );
    for (i, pk) in peaks.iter().enumerate() {
        p.push(vec![
            i.to_string(),
            pk.channel_index.to_string(),
            fmt_fixed(pk.frequency / 1e9, 9),
            fmt_fixed(pk.beat_power, 6),
        ]);
    }
    let separation = match peaks.as_slice() {
        [a, .., b] => Some(b.frequency - a.frequency),
        _ => None,
    };
    let summary = json!({
        "peaks": peaks.len(),
        "separation_hz": separation,
        "positions_cm": plan.entries.iter().map(|e| e.position_cm).collect::<Vec<_>>(),
    });
    Ok(ScenarioOutput {
        name: ScenarioName::Sweep2Cell,
        tables: vec![t, p],
        summary,
    })
}

fn ladder_metadata(t: CsvTable, s: &LadderSystem) -> CsvTable {
    let to_mhz = |v: f64| fmt_fixed(v / mhz(1.0), 6);
    t.meta("units", "MHz (angular values divided by 2 pi)")
        .meta("probe_rabi", to_mhz(s.probe_rabi))
        .meta("coupling_rabi", to_mhz(s.coupling_rabi))
        .meta("mw_rabi", to_mhz(s.mw_rabi))
        .meta("coupling_detuning", to_mhz(s.coupling_detuning))
        .meta("mw_detuning", to_mhz(s.mw_detuning))
        .meta("decay_e", to_mhz(s.decay_e))
        .meta("decay_r1", to_mhz(s.decay_r1))
        .meta("decay_r2", to_mhz(s.decay_r2))
        .meta("dephasing", to_mhz(s.dephasing))
}

fn run_eit(config: &ReceiverConfig) -> Result<ScenarioOutput, ScenarioError> {
    let e = &config.scenarios.eit;
    let base = config.ladder();
    let dressed = base.with_mw_rabi(mhz(e.mw_rabi_mhz));
    let sweep = ProbeSweep::symmetric(mhz(e.half_span_mhz), e.points);
    let detunings = sweep.detunings();
    let mut tables = Vec::new();
    for (name, system) in [("eit.csv", base), ("eit_at.csv", dressed)] {
        let absorption = probe_spectrum(&system, &detunings)?;
        let mut t = ladder_metadata(
            CsvTable::new(name, &["probe_detuning_MHz", "absorption"]),
            &system,
        );
        for (d, a) in detunings.iter().zip(&absorption) {
            t.push(vec![fmt_fixed(d / mhz(1.0), 6), fmt_sci(*a, 12)]);
        }
        tables.push(t);
    }
    let splitting = if dressed.mw_rabi >= STRONG_FIELD_RATIO * dressed.decay_e {
        Some(at_splitting(&dressed, &sweep)?)
    } else {
        None
    };
    let summary = json!({
        "mw_rabi_hz": e.mw_rabi_mhz * 1e6,
        "at_splitting_hz": splitting,
    });
    Ok(ScenarioOutput {
        name: ScenarioName::Eit,
        tables,
        summary,
    })
}

/// Compute a scenario's tables without touching the filesystem.
pub fn evaluate_scenario(
    config: &ReceiverConfig,
    name: ScenarioName,
) -> Result<ScenarioOutput, ScenarioError> {
    config.validate()?;
    match name {
        ScenarioName::Plan => run_plan(config),
        ScenarioName::Response => run_response(config),
        ScenarioName::Linearity => run_linearity(config),
        ScenarioName::Sensitivity => run_sensitivity(config),
        ScenarioName::Sweep2Cell => run_sweep2cell(config),
        ScenarioName::Eit => run_eit(config),
    }
}

#[derive(Serialize)]
struct ManifestFile {
    name: String,
    rows: usize,
    body_sha256: String,
}

fn io_error(path: &Path, e: std::io::Error) -> ScenarioError {
    ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Run a scenario and write its CSV files and `<name>_manifest.json` into
/// `out_dir`, creating it if needed.
pub fn run_scenario(
    config: &ReceiverConfig,
    name: ScenarioName,
    out_dir: impl AsRef<Path>,
    options: RunOptions,
) -> Result<WrittenScenario, ScenarioError> {
    let out_dir = out_dir.as_ref();
    let output = evaluate_scenario(config, name)?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;

    let hash = config.sha256();
    let mut preamble = vec![
        ("scenario".to_string(), name.to_string()),
        ("format_version".to_string(), FORMAT_VERSION.to_string()),
        ("config_sha256".to_string(), hash.clone()),
    ];
    let generated = options.timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    if let Some(ts) = generated {
        preamble.push(("generated_unix_s".to_string(), ts.to_string()));
    }

    let mut files = Vec::new();
    let mut listed = Vec::new();
    for table in &output.tables {
        let path = out_dir.join(&table.file_name);
        std::fs::write(&path, table.render(&preamble)).map_err(|e| io_error(&path, e))?;
        listed.push(ManifestFile {
            name: table.file_name.clone(),
            rows: table.rows.len(),
            body_sha256: hex::encode(Sha256::digest(table.body().as_bytes())),
        });
        files.push(path);
    }

    let mut manifest = json!({
        "scenario": name.as_str(),
        "format_version": FORMAT_VERSION,
        "config_sha256": hash,
        "files": listed,
        "summary": output.summary,
    });
    if let Some(ts) = generated {
        manifest["generated_unix_s"] = json!(ts);
    }
    let manifest_path = out_dir.join(format!("{name}_manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&manifest_path, text).map_err(|e| io_error(&manifest_path, e))?;
    Ok(WrittenScenario {
        files,
        manifest: manifest_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in ScenarioName::ALL {
            assert_eq!(n.as_str().parse::<ScenarioName>().unwrap(), n);
        }
        let err = "bogus".parse::<ScenarioName>().unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ScenarioError::from(EitError::Degenerate).exit_code(), 4);
        assert_eq!(ScenarioError::from(EitError::Residual(1.0)).exit_code(), 4);
        assert_eq!(ScenarioError::from(PlanError::EmptyPlan).exit_code(), 3);
        assert_eq!(
            ScenarioError::from(ReceiverError::Plan(PlanError::EmptyPlan)).exit_code(),
            3
        );
        assert_eq!(
            ScenarioError::from(ReceiverError::Domain(String::new())).exit_code(),
            2
        );
        assert_eq!(
            ScenarioError::from(ConfigError::Parse(String::new())).exit_code(),
            2
        );
        let io = ScenarioError::Io {
            path: String::new(),
            message: String::new(),
        };
        assert_eq!(io.exit_code(), 1);
    }

    #[test]
    fn negative_zero_folded() {
        assert_eq!(fmt_fixed(-0.0, 3), "0.000");
        assert_eq!(fmt_fixed(-0.0001, 3), "0.000");
        assert_eq!(fmt_fixed(-0.5, 1), "-0.5");
    }

    #[test]
    fn crossing_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 2.0, 4.0, 2.0, 0.0];
        let (lo, hi) = crossings(&xs, &ys, 2, 1.0);
        assert_eq!(lo, Some(0.5));
        assert_eq!(hi, Some(3.5));
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CsvTable::new("x.csv", &["a", "b"]).meta("k", "v");
        t.push(vec!["1".into(), "2".into()]);
        let text = t.render(&[("scenario".into(), "plan".into())]);
        let (meta, cols, rows) = parse_csv(&text);
        assert_eq!(meta.len(), 2);
        assert_eq!(cols, vec!["a", "b"]);
        assert_eq!(rows, vec![vec!["1", "2"]]);
        assert_eq!(csv_body(&text), "a,b\n1,2\n");
    }
}
