//! Calibrated channel model for the stitched receiver.
//!
//! Each cell is a heterodyne channel whose beat power is linear in the signal
//! field (20 dB/decade), rolls off with detuning from its LO line as
//!
//! ```text
//! |H(d)|^2 = 1 / (1 + (d / half_width)^(2n))
//! ```
//!
//! and is power-summed with the spectrum-analyzer noise floor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::comb::{nearest_line, CellArrayPlan, PlanError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReceiverError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("plan has {plan} cells but {responses} channel responses were given")]
    ChannelCount { plan: usize, responses: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

fn power_sum_dbm(a: f64, b: f64) -> f64 {
    10.0 * (10f64.powf(a / 10.0) + 10f64.powf(b / 10.0)).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelResponse {
    /// Beat power at `reference_field` and zero detuning, dBm.
    pub peak_power: f64,
    /// V/cm.
    pub reference_field: f64,
    /// Hz.
    pub half_width_3db: f64,
    pub rolloff_order: u32,
    /// dBm in the analysis bandwidth.
    pub noise_floor: f64,
    pub gain_scale: f64,
}

impl ChannelResponse {
    pub fn validate(&self) -> Result<(), ReceiverError> {
        let bad = |what: String| Err(ReceiverError::InvalidChannel(what));
        if !self.peak_power.is_finite() || !self.noise_floor.is_finite() {
            return bad("peak_power and noise_floor must be finite".to_string());
        }
        if !(self.reference_field > 0.0 && self.reference_field.is_finite()) {
            return bad(format!(
                "reference_field must be > 0, got {}",
                self.reference_field
            ));
        }
        if !(self.half_width_3db > 0.0 && self.half_width_3db.is_finite()) {
            return bad(format!(
                "half_width_3db must be > 0, got {}",
                self.half_width_3db
            ));
        }
        if self.rolloff_order == 0 {
            return bad("rolloff_order must be >= 1".to_string());
        }
        if !(self.gain_scale > 0.0 && self.gain_scale.is_finite()) {
            return bad(format!("gain_scale must be > 0, got {}", self.gain_scale));
        }
        if self.noise_floor >= self.peak_power {
            return bad(format!(
                "noise_floor {} dBm must be below peak_power {} dBm",
                self.noise_floor, self.peak_power
            ));
        }
        Ok(())
    }

    /// Power transfer `|H(detuning)|^2`.
    pub fn transfer(&self, detuning: f64) -> f64 {
        let x = (detuning / self.half_width_3db).abs();
        1.0 / (1.0 + x.powi(2 * self.rolloff_order as i32))
    }

    /// Beat power before the noise floor is added, dBm. `-inf` at zero field.
    pub fn signal_power(&self, field: f64, detuning: f64) -> f64 {
        self.peak_power
            + 20.0 * (field / self.reference_field).log10()
            + 10.0 * self.transfer(detuning).log10()
            + 20.0 * self.gain_scale.log10()
    }

    /// Signal level, excluding the field term, relative to which the noise
    /// floor sits: `noise - this = 20 log10(E_det / E_ref)`.
    fn gain_db(&self, detuning: f64) -> f64 {
        self.peak_power + 10.0 * self.transfer(detuning).log10() + 20.0 * self.gain_scale.log10()
    }
}

/// Measured beat power, signal power-summed with the noise floor.
pub fn beat_power(ch: &ChannelResponse, field: f64, detuning: f64) -> Result<f64, ReceiverError> {
    if field.is_nan() || field < 0.0 {
        return Err(ReceiverError::Domain(format!(
            "field must be >= 0, got {field}"
        )));
    }
    if field == 0.0 {
        return Ok(ch.noise_floor);
    }
    Ok(power_sum_dbm(
        ch.signal_power(field, detuning),
        ch.noise_floor,
    ))
}

/// Field at which the signal component equals the noise floor.
pub fn min_detectable_field(ch: &ChannelResponse, detuning: f64) -> f64 {
    ch.reference_field * 10f64.powf((ch.noise_floor - ch.gain_db(detuning)) / 20.0)
}

/// Channel with the noise floor moved so that `min_detectable_field` at
/// `detuning` equals `target` V/cm.
pub fn calibrate_noise_floor(
    ch: &ChannelResponse,
    target: f64,
    detuning: f64,
) -> Result<ChannelResponse, ReceiverError> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(ReceiverError::Domain(format!(
            "target detectable field must be > 0, got {target}"
        )));
    }
    Ok(ChannelResponse {
        noise_floor: ch.gain_db(detuning) + 20.0 * (target / ch.reference_field).log10(),
        ..*ch
    })
}

/// Field sensitivity `E_det * sqrt(T)`, in V cm^-1 Hz^-1/2 for `e_det` in V/cm.
pub fn sensitivity(e_det: f64, measurement_time: f64) -> Result<f64, ReceiverError> {
    if !(e_det > 0.0) || !(measurement_time > 0.0) {
        return Err(ReceiverError::Domain(format!(
            "E_det and T must be > 0, got {e_det} and {measurement_time}"
        )));
    }
    Ok(e_det * measurement_time.sqrt())
}

/// Far-field strength `F sqrt(30 P G) / d` in V/m, for `power` in W and
/// `distance` in m.
pub fn far_field_strength(
    power: f64,
    gain: f64,
    distance: f64,
    perturbation: f64,
) -> Result<f64, ReceiverError> {
    if !(power >= 0.0) {
        return Err(ReceiverError::Domain(format!(
            "power must be >= 0, got {power}"
        )));
    }
    if !(gain > 0.0) {
        return Err(ReceiverError::Domain(format!(
            "antenna gain must be > 0, got {gain}"
        )));
    }
    if !(distance > 0.0) {
        return Err(ReceiverError::Domain(format!(
            "distance must be > 0, got {distance}"
        )));
    }
    if !(perturbation > 0.0) {
        return Err(ReceiverError::Domain(format!(
            "perturbation factor must be > 0, got {perturbation}"
        )));
    }
    Ok(perturbation * (30.0 * power * gain).sqrt() / distance)
}

/// Horn-antenna stimulus used to set each channel's reference field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarFieldStimulus {
    pub signal_power_dbm: f64,
    pub antenna_gain: f64,
    pub distance_m: f64,
    pub perturbation_factor: f64,
}

impl Default for FarFieldStimulus {
    fn default() -> Self {
        Self {
            signal_power_dbm: -30.0,
            antenna_gain: 10.0,
            distance_m: 0.5,
            perturbation_factor: 1.0,
        }
    }
}

impl FarFieldStimulus {
    /// Field at the cell in V/cm.
    pub fn field_v_per_cm(&self) -> Result<f64, ReceiverError> {
        let v_per_m = far_field_strength(
            dbm_to_watts(self.signal_power_dbm),
            self.antenna_gain,
            self.distance_m,
            self.perturbation_factor,
        )?;
        Ok(v_per_m / 100.0)
    }
}

/// Per-channel sensitivity calibration. The centre channel is pinned to
/// `center_e_det`; the outermost channels to `edge_sensitivity / sqrt(T)`;
/// channels in between interpolate linearly in line index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTargets {
    /// V/cm.
    pub center_e_det: f64,
    /// V cm^-1 Hz^-1/2.
    pub edge_sensitivity: f64,
    /// s.
    pub measurement_time: f64,
    /// Signal-LO detuning at which detection is calibrated, Hz.
    pub detection_detuning: f64,
}

impl Default for SensitivityTargets {
    fn default() -> Self {
        Self {
            center_e_det: 798.2e-9,
            edge_sensitivity: 326.6e-9,
            measurement_time: 0.1,
            detection_detuning: 500e3,
        }
    }
}

impl SensitivityTargets {
    pub fn edge_e_det(&self) -> f64 {
        self.edge_sensitivity / self.measurement_time.sqrt()
    }

    pub fn e_det_for(&self, line_index: usize, line_count: usize) -> f64 {
        if line_count <= 1 {
            return self.center_e_det;
        }
        let center = (line_count as f64 - 1.0) / 2.0;
        let w = (line_index as f64 - center).abs() / center;
        self.center_e_det + w * (self.edge_e_det() - self.center_e_det)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDefaults {
    pub half_width_3db: f64,
    pub rolloff_order: u32,
    pub peak_power: f64,
    pub stimulus: FarFieldStimulus,
    pub targets: SensitivityTargets,
    /// Gain factors at the centre and outermost channels, interpolated
    /// linearly in line index like the sensitivity targets.
    pub gain_scale_center: f64,
    pub gain_scale_edge: f64,
}

impl ChannelDefaults {
    pub fn gain_scale_for(&self, line_index: usize, line_count: usize) -> f64 {
        if line_count <= 1 {
            return self.gain_scale_center;
        }
        let center = (line_count as f64 - 1.0) / 2.0;
        let w = (line_index as f64 - center).abs() / center;
        self.gain_scale_center + w * (self.gain_scale_edge - self.gain_scale_center)
    }
}

impl Default for ChannelDefaults {
    fn default() -> Self {
        Self {
            half_width_3db: 5e6,
            rolloff_order: 2,
            peak_power: -36.5,
            stimulus: FarFieldStimulus::default(),
            targets: SensitivityTargets::default(),
            gain_scale_center: 1.0,
            gain_scale_edge: 1.0,
        }
    }
}

/// One calibrated channel per plan entry.
pub fn build_channels(
    plan: &CellArrayPlan,
    defaults: &ChannelDefaults,
) -> Result<Vec<ChannelResponse>, ReceiverError> {
    let n = plan.len();
    if n == 0 {
        return Err(PlanError::EmptyPlan.into());
    }
    let reference_field = defaults.stimulus.field_v_per_cm()?;
    (0..n)
        .map(|k| {
            let base = ChannelResponse {
                peak_power: defaults.peak_power,
                reference_field,
                half_width_3db: defaults.half_width_3db,
                rolloff_order: defaults.rolloff_order,
                noise_floor: f64::NEG_INFINITY,
                gain_scale: defaults.gain_scale_for(k, n),
            };
            let target = defaults.targets.e_det_for(k, n);
            let ch = calibrate_noise_floor(&base, target, defaults.targets.detection_detuning)?;
            ch.validate()?;
            Ok(ch)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub frequency: f64,
    pub field: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub field: f64,
}

impl FrequencySweep {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SignalKind {
    ToneList { tones: Vec<Tone> },
    LinearSweep { sweep: FrequencySweep },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalScenario {
    pub signal: SignalKind,
    /// Spectrum-analyzer span: a channel contributes only if the beat falls
    /// within it. Hz.
    pub analysis_span: f64,
    /// s.
    pub measurement_time: f64,
}

impl SignalScenario {
    pub fn sweep(start: f64, stop: f64, points: usize, field: f64) -> Self {
        Self {
            signal: SignalKind::LinearSweep {
                sweep: FrequencySweep {
                    start,
                    stop,
                    points,
                    field,
                },
            },
            analysis_span: 5e6,
            measurement_time: 0.1,
        }
    }

    pub fn tones(tones: Vec<Tone>) -> Self {
        Self {
            signal: SignalKind::ToneList { tones },
            analysis_span: 5e6,
            measurement_time: 0.1,
        }
    }

    pub fn validate(&self) -> Result<(), ReceiverError> {
        let check = |f: f64, e: f64| {
            if !(f > 0.0 && f.is_finite()) {
                return Err(ReceiverError::Domain(format!(
                    "signal frequency must be > 0, got {f}"
                )));
            }
            if !(e >= 0.0 && e.is_finite()) {
                return Err(ReceiverError::Domain(format!(
                    "signal field must be >= 0, got {e}"
                )));
            }
            Ok(())
        };
        match &self.signal {
            SignalKind::ToneList { tones } => {
                for t in tones {
                    check(t.frequency, t.field)?;
                }
            }
            SignalKind::LinearSweep { sweep } => {
                check(sweep.start, sweep.field)?;
                check(sweep.stop, sweep.field)?;
                if !(sweep.start < sweep.stop) {
                    return Err(ReceiverError::Domain(format!(
                        "sweep start {} must be below stop {}",
                        sweep.start, sweep.stop
                    )));
                }
            }
        }
        if !(self.analysis_span > 0.0) || !(self.measurement_time > 0.0) {
            return Err(ReceiverError::Domain(
                "analysis_span and measurement_time must be > 0".to_string(),
            ));
        }
        Ok(())
    }

    fn inputs(&self) -> Vec<Tone> {
        match &self.signal {
            SignalKind::ToneList { tones } => tones.clone(),
            SignalKind::LinearSweep { sweep } => sweep
                .frequencies()
                .into_iter()
                .map(|frequency| Tone {
                    frequency,
                    field: sweep.field,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BeatRow {
    pub signal_frequency: f64,
    pub channel_index: usize,
    pub detuning: f64,
    pub beat_power: f64,
    /// Signal component at or above the channel noise floor.
    pub above_noise: bool,
    /// Within the 3 dB band of the nearest channel.
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeatSpectrum {
    pub rows: Vec<BeatRow>,
}

/// A local maximum of a beat spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumPeak {
    pub channel_index: usize,
    pub frequency: f64,
    pub beat_power: f64,
}

impl BeatSpectrum {
    pub fn max_power(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.beat_power)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// One peak per contiguous run of above-noise rows, located by quadratic
    /// interpolation of the dB values around the run's maximum.
    pub fn peaks(&self) -> Vec<SpectrumPeak> {
        let rows = &self.rows;
        let mut peaks = Vec::new();
        let mut i = 0;
        while i < rows.len() {
            if !rows[i].above_noise {
                i += 1;
                continue;
            }
            let start = i;
            while i < rows.len() && rows[i].above_noise {
                i += 1;
            }
            let best = (start..i)
                .max_by(|&a, &b| {
                    rows[a]
                        .beat_power
                        .total_cmp(&rows[b].beat_power)
                        .then(b.cmp(&a))
                })
                .unwrap_or(start);
            let mut frequency = rows[best].signal_frequency;
            if best > 0 && best + 1 < rows.len() {
                let (y0, y1, y2) = (
                    rows[best - 1].beat_power,
                    rows[best].beat_power,
                    rows[best + 1].beat_power,
                );
                let curvature = y0 - 2.0 * y1 + y2;
                if curvature < 0.0 {
                    let step =
                        0.5 * (rows[best + 1].signal_frequency - rows[best - 1].signal_frequency);
                    let offset = (0.5 * (y0 - y2) / curvature).clamp(-1.0, 1.0);
                    frequency += offset * step;
                }
            }
            peaks.push(SpectrumPeak {
                channel_index: rows[best].channel_index,
                frequency,
                beat_power: rows[best].beat_power,
            });
        }
        peaks
    }
}

fn check_channels(
    plan: &CellArrayPlan,
    responses: &[ChannelResponse],
) -> Result<(), ReceiverError> {
    if plan.is_empty() {
        return Err(PlanError::EmptyPlan.into());
    }
    if responses.len() != plan.len() {
        return Err(ReceiverError::ChannelCount {
            plan: plan.len(),
            responses: responses.len(),
        });
    }
    Ok(())
}

fn stitched_row(
    plan: &CellArrayPlan,
    responses: &[ChannelResponse],
    tone: Tone,
    analysis_span: f64,
) -> Result<BeatRow, ReceiverError> {
    let nearest = nearest_line(&plan.comb, tone.frequency);
    let in_band = nearest.detuning_hz.abs() <= responses[nearest.line_index].half_width_3db;
    let mut best: Option<(usize, f64, f64)> = None;
    for (k, entry) in plan.entries.iter().enumerate() {
        let detuning = tone.frequency - entry.line_frequency;
        if detuning.abs() > analysis_span && k != nearest.line_index {
            continue;
        }
        let p = if detuning.abs() > analysis_span {
            responses[k].noise_floor
        } else {
            beat_power(&responses[k], tone.field, detuning)?
        };
        if best.is_none_or(|(_, _, b)| p > b) {
            best = Some((k, detuning, p));
        }
    }
    let (k, detuning, power) = best.expect("nearest channel is always a candidate");
    let ch = &responses[k];
    let above_noise = detuning.abs() <= analysis_span
        && tone.field > 0.0
        && ch.signal_power(tone.field, detuning) >= ch.noise_floor;
    Ok(BeatRow {
        signal_frequency: tone.frequency,
        channel_index: k,
        detuning,
        beat_power: power,
        above_noise,
        in_band,
    })
}

/// Stitched response of the whole array.
///
/// Each input frequency is received by the channels whose beat falls inside
/// the analysis span (the nearest channel always listens). The row reports
/// the strongest of them; ties go to the lower index. Out-of-band rows are
/// still evaluated and carry `in_band = false`.
pub fn stitched_response(
    plan: &CellArrayPlan,
    responses: &[ChannelResponse],
    scenario: &SignalScenario,
) -> Result<BeatSpectrum, ReceiverError> {
    check_channels(plan, responses)?;
    scenario.validate()?;
    let rows = scenario
        .inputs()
        .into_par_iter()
        .map(|tone| stitched_row(plan, responses, tone, scenario.analysis_span))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BeatSpectrum { rows })
}

/// Every channel's response to one tone, ignoring the analysis span.
pub fn channel_rows(
    plan: &CellArrayPlan,
    responses: &[ChannelResponse],
    tone: Tone,
) -> Result<Vec<BeatRow>, ReceiverError> {
    check_channels(plan, responses)?;
    plan.entries
        .iter()
        .zip(responses)
        .enumerate()
        .map(|(k, (entry, ch))| {
            let detuning = tone.frequency - entry.line_frequency;
            Ok(BeatRow {
                signal_frequency: tone.frequency,
                channel_index: k,
                detuning,
                beat_power: beat_power(ch, tone.field, detuning)?,
                above_noise: tone.field > 0.0
                    && ch.signal_power(tone.field, detuning) >= ch.noise_floor,
                in_band: detuning.abs() <= ch.half_width_3db,
            })
        })
        .collect()
}

/// Lower and upper frequencies, relative to the line, where a channel's
/// signal falls 3 dB (half power) below its zero-detuning value.
pub fn half_power_points(ch: &ChannelResponse) -> (f64, f64) {
    // |H|^2 is even and decreasing in |d|; bisect for |H|^2 = 1/2.
    let (mut lo, mut hi) = (0.0, ch.half_width_3db);
    while ch.transfer(hi) > 0.5 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ch.transfer(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d = 0.5 * (lo + hi);
    (-d, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub channel_index: usize,
    pub line_frequency: f64,
    /// V/cm.
    pub e_det: f64,
    /// V cm^-1 Hz^-1/2.
    pub sensitivity: f64,
}

pub fn sensitivity_report(
    plan: &CellArrayPlan,
    responses: &[ChannelResponse],
    detuning: f64,
    measurement_time: f64,
) -> Result<Vec<SensitivityRow>, ReceiverError> {
    check_channels(plan, responses)?;
    plan.entries
        .iter()
        .zip(responses)
        .enumerate()
        .map(|(k, (entry, ch))| {
            let e_det = min_detectable_field(ch, detuning);
            Ok(SensitivityRow {
                channel_index: k,
                line_frequency: entry.line_frequency,
                e_det,
                sensitivity: sensitivity(e_det, measurement_time)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearityPoint {
    pub field: f64,
    /// Pre-floor signal power, dBm.
    pub signal_power: f64,
    pub beat_power: f64,
}

/// Beat power over logarithmically spaced fields `[low, high]`, endpoints
/// included.
pub fn linearity_curve(
    ch: &ChannelResponse,
    detuning: f64,
    low: f64,
    high: f64,
    points: usize,
) -> Result<Vec<LinearityPoint>, ReceiverError> {
    if !(low > 0.0 && high > low) {
        return Err(ReceiverError::Domain(format!(
            "field range must satisfy 0 < low < high, got [{low}, {high}]"
        )));
    }
    let n = points.max(2);
    let ratio = (high / low).ln();
    (0..n)
        .map(|i| {
            let field = if i + 1 == n {
                high
            } else {
                low * (ratio * i as f64 / (n - 1) as f64).exp()
            };
            Ok(LinearityPoint {
                field,
                signal_power: ch.signal_power(field, detuning),
                beat_power: beat_power(ch, field, detuning)?,
            })
        })
        .collect()
}

/// Least-squares slope of dB against log10(field), in dB/decade.
pub fn db_per_decade(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, p)| (x - mx) * (p.1 - my))
        .sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn channel() -> ChannelResponse {
        let base = ChannelResponse {
            peak_power: -36.5,
            reference_field: FarFieldStimulus::default().field_v_per_cm().unwrap(),
            half_width_3db: 5e6,
            rolloff_order: 2,
            noise_floor: -120.0,
            gain_scale: 1.0,
        };
        calibrate_noise_floor(&base, 798.2e-9, 500e3).unwrap()
    }

    #[test]
    fn half_power_at_half_width() {
        for n in 1..6 {
            let ch = ChannelResponse {
                rolloff_order: n,
                ..channel()
            };
            assert!((ch.transfer(5e6) - 0.5).abs() < 1e-6);
            let (lo, hi) = half_power_points(&ch);
            assert_relative_eq!(hi, 5e6, max_relative = 1e-9);
            assert_relative_eq!(lo, -5e6, max_relative = 1e-9);
        }
    }

    #[test]
    fn reference_point_gives_peak() {
        let ch = channel();
        let p = beat_power(&ch, ch.reference_field, 0.0).unwrap();
        assert!((p - (-36.5)).abs() < 1e-4);
        // the noise floor is far below, so the sum barely moves
        assert!(ch.noise_floor < -80.0);
    }

    #[test]
    fn edge_is_three_db_down() {
        let ch = channel();
        let center = beat_power(&ch, ch.reference_field, 0.0).unwrap();
        let edge = beat_power(&ch, ch.reference_field, 5e6).unwrap();
        assert!((center - edge - 10.0 * 2f64.log10()).abs() < 0.01);
    }

    #[test]
    fn zero_field_is_noise() {
        let ch = channel();
        assert_eq!(beat_power(&ch, 0.0, 500e3).unwrap(), ch.noise_floor);
        let tiny = beat_power(&ch, 1e-15, 500e3).unwrap();
        assert!((tiny - ch.noise_floor).abs() < 1e-9);
        assert!(beat_power(&ch, -1.0, 0.0).is_err());
    }

    #[test]
    fn detectable_field_round_trip() {
        let ch = channel();
        assert_relative_eq!(
            min_detectable_field(&ch, 500e3),
            798.2e-9,
            max_relative = 1e-9
        );
        let signal = ch.signal_power(798.2e-9, 500e3);
        assert!((signal - ch.noise_floor).abs() < 1e-9);
    }

    #[test]
    fn detectable_field_scaling() {
        let ch = channel();
        let e = min_detectable_field(&ch, 500e3);
        let doubled = ChannelResponse {
            reference_field: 2.0 * ch.reference_field,
            ..ch
        };
        assert_relative_eq!(
            min_detectable_field(&doubled, 500e3),
            2.0 * e,
            max_relative = 1e-12
        );
        let noisier = ChannelResponse {
            noise_floor: ch.noise_floor + 20.0,
            ..ch
        };
        assert_relative_eq!(
            min_detectable_field(&noisier, 500e3),
            10.0 * e,
            max_relative = 1e-12
        );
    }

    #[test]
    fn calibration_scaling() {
        let ch = channel();
        let louder = calibrate_noise_floor(&ch, 7982e-9, 500e3).unwrap();
        assert_relative_eq!(louder.noise_floor - ch.noise_floor, 20.0, epsilon = 1e-9);
        let worst = calibrate_noise_floor(&ch, 326.6e-9 / 0.1f64.sqrt(), 500e3).unwrap();
        let s = sensitivity(min_detectable_field(&worst, 500e3), 0.1).unwrap();
        assert_relative_eq!(s, 326.6e-9, max_relative = 1e-9);
        assert!(calibrate_noise_floor(&ch, 0.0, 0.0).is_err());
    }

    #[test]
    fn sensitivity_arithmetic() {
        let s = sensitivity(798.2e-9, 0.1).unwrap();
        assert_relative_eq!(s, 252.4e-9, max_relative = 1e-4);
        assert!((s - 253.4e-9).abs() / 253.4e-9 < 0.01);
        assert_eq!(sensitivity(3.5e-7, 1.0).unwrap(), 3.5e-7);
        assert!(sensitivity(0.0, 0.1).is_err());
        assert!(sensitivity(1.0, -0.1).is_err());
    }

    #[test]
    fn far_field_examples() {
        assert_eq!(far_field_strength(0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(
            far_field_strength(1.0, 1.0, 1.0, 1.0).unwrap(),
            30f64.sqrt()
        );
        assert_relative_eq!(30f64.sqrt(), 5.4772, epsilon = 1e-4);
        let e1 = far_field_strength(2.0, 3.0, 0.7, 1.1).unwrap();
        let e4 = far_field_strength(8.0, 3.0, 0.7, 1.1).unwrap();
        assert_relative_eq!(e4, 2.0 * e1, max_relative = 1e-12);
        assert!(far_field_strength(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(far_field_strength(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn default_stimulus_field() {
        // -30 dBm into a gain-10 horn at 0.5 m
        let e = FarFieldStimulus::default().field_v_per_cm().unwrap();
        assert_relative_eq!(
            e,
            (30.0f64 * 1e-6 * 10.0).sqrt() / 0.5 / 100.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn targets_interpolate_by_index() {
        let t = SensitivityTargets::default();
        assert_eq!(t.e_det_for(10, 21), 798.2e-9);
        assert_relative_eq!(
            t.e_det_for(0, 21),
            326.6e-9 / 0.1f64.sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(t.e_det_for(20, 21), t.e_det_for(0, 21));
        let mid = t.e_det_for(5, 21);
        assert_relative_eq!(
            mid,
            0.5 * (t.e_det_for(0, 21) + 798.2e-9),
            max_relative = 1e-12
        );
        assert_eq!(t.e_det_for(0, 1), 798.2e-9);
    }

    #[test]
    fn pre_floor_slope_is_exact() {
        let ch = channel();
        let curve = linearity_curve(&ch, 500e3, 1e-8, 1e-3, 51).unwrap();
        let pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.field, p.signal_power)).collect();
        assert!((db_per_decade(&pts) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_channels_rejected() {
        let ch = channel();
        assert!(ChannelResponse {
            rolloff_order: 0,
            ..ch
        }
        .validate()
        .is_err());
        assert!(ChannelResponse {
            noise_floor: -30.0,
            ..ch
        }
        .validate()
        .is_err());
        assert!(ChannelResponse {
            gain_scale: 0.0,
            ..ch
        }
        .validate()
        .is_err());
        assert!(ch.validate().is_ok());
    }

    proptest! {
        #[test]
        fn monotone_in_detuning_and_field(
            d1 in -2e7f64..2e7, d2 in -2e7f64..2e7,
            e1 in 1e-9f64..1e-2, e2 in 1e-9f64..1e-2,
        ) {
            let ch = channel();
            let (dn, df) = if d1.abs() <= d2.abs() { (d1, d2) } else { (d2, d1) };
            prop_assert!(beat_power(&ch, e1, dn).unwrap() >= beat_power(&ch, e1, df).unwrap());
            let (el, eh) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(beat_power(&ch, el, d1).unwrap() <= beat_power(&ch, eh, d1).unwrap());
        }

        #[test]
        fn floor_is_lower_bound(e in 0.0f64..1e-2, d in -5e7f64..5e7) {
            let ch = channel();
            prop_assert!(beat_power(&ch, e, d).unwrap() >= ch.noise_floor);
        }
    }
}
