//! Position-dependent electrode field along the cell-array axis.
//!
//! The field is modelled as a power-law decay away from the electrodes,
//!
//! ```text
//! E(x) = E_L * ((x_L + x0) / (x + x0))^gamma
//! ```
//!
//! which is strictly decreasing for `gamma > 0`. Profiles are calibrated in
//! frequency space against anchor cells whose transition frequency is known.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stark::{field_for_frequency, stark_shifted_frequency, RydbergTransition, StarkError};

/// Anchors must be reproduced to this accuracy by a fitted profile.
pub const ANCHOR_TOLERANCE_HZ: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("position {x} cm is outside the valid range [{min}, {max}] cm")]
    OutOfRange { x: f64, min: f64, max: f64 },
    #[error("profile is underdetermined: {0}")]
    Underdetermined(String),
    #[error("infeasible profile: {0}")]
    Infeasible(String),
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error("fitted profile misses anchor at {x_cm} cm by {error_hz} Hz")]
    AnchorMismatch { x_cm: f64, error_hz: f64 },
    #[error(transparent)]
    Stark(#[from] StarkError),
}

/// A cell position with a known transition frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub x_cm: f64,
    pub frequency_hz: f64,
}

impl Anchor {
    pub fn new(x_cm: f64, frequency_hz: f64) -> Self {
        Self { x_cm, frequency_hz }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    /// Position at which `reference_field` applies, in cm.
    pub reference_position: f64,
    /// Field at `reference_position`, in V/cm.
    pub reference_field: f64,
    pub decay_exponent: f64,
    /// Offset `x0` of the power-law origin, in cm.
    pub offset: f64,
    /// Closed interval of positions where the profile may be evaluated, in cm.
    pub valid_range: (f64, f64),
}

impl FieldProfile {
    pub fn new(
        reference_position: f64,
        reference_field: f64,
        decay_exponent: f64,
        offset: f64,
        valid_range: (f64, f64),
    ) -> Result<Self, ProfileError> {
        let p = Self {
            reference_position,
            reference_field,
            decay_exponent,
            offset,
            valid_range,
        };
        p.validate()?;
        Ok(p)
    }

    /// Profile through a single anchor with an explicitly chosen exponent.
    pub fn from_anchor(
        anchor: Anchor,
        decay_exponent: f64,
        offset: f64,
        valid_range: (f64, f64),
        t: &RydbergTransition,
    ) -> Result<Self, ProfileError> {
        let field = field_for_frequency(t, anchor.frequency_hz)?;
        Self::new(anchor.x_cm, field, decay_exponent, offset, valid_range)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let (lo, hi) = self.valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(ProfileError::Invalid(format!(
                "valid_range must satisfy min < max, got [{lo}, {hi}]"
            )));
        }
        if !(self.decay_exponent.is_finite() && self.decay_exponent > 0.0) {
            return Err(ProfileError::Invalid(format!(
                "decay_exponent must be > 0, got {}",
                self.decay_exponent
            )));
        }
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(ProfileError::Invalid(format!(
                "offset must be >= 0, got {}",
                self.offset
            )));
        }
        if !(self.reference_field.is_finite() && self.reference_field > 0.0) {
            return Err(ProfileError::Invalid(format!(
                "reference_field must be > 0, got {}",
                self.reference_field
            )));
        }
        if !(self.reference_position + self.offset > 0.0 && lo + self.offset > 0.0) {
            return Err(ProfileError::Invalid(
                "x + offset must stay positive over the valid range".to_string(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.valid_range.0 && x <= self.valid_range.1
    }
}

/// Electrode field at position `x` cm.
pub fn field_at(p: &FieldProfile, x: f64) -> Result<f64, ProfileError> {
    if !p.contains(x) {
        return Err(ProfileError::OutOfRange {
            x,
            min: p.valid_range.0,
            max: p.valid_range.1,
        });
    }
    let ratio = (p.reference_position + p.offset) / (x + p.offset);
    Ok(p.reference_field * ratio.powf(p.decay_exponent))
}

/// Resonant Rydberg transition frequency for a cell at `x` cm.
pub fn transition_frequency_at(
    p: &FieldProfile,
    t: &RydbergTransition,
    x: f64,
) -> Result<f64, ProfileError> {
    Ok(stark_shifted_frequency(t, field_at(p, x)?)?)
}

/// Fit a profile to anchors. Two anchors use `x0 = 0` and a closed-form
/// exponent; three or more also search the offset `x0`.
pub fn fit_profile(
    anchors: &[Anchor],
    t: &RydbergTransition,
) -> Result<FieldProfile, ProfileError> {
    fit_profile_with_offset(anchors, t, None)
}

/// As [`fit_profile`], but with the offset pinned when `offset` is given.
pub fn fit_profile_with_offset(
    anchors: &[Anchor],
    t: &RydbergTransition,
    offset: Option<f64>,
) -> Result<FieldProfile, ProfileError> {
    t.validate()?;
    if anchors.len() < 2 {
        return Err(ProfileError::Underdetermined(format!(
            "need at least 2 anchors, got {}",
            anchors.len()
        )));
    }
    if t.differential_polarizability == 0.0 {
        return Err(StarkError::Degenerate.into());
    }
    let mut sorted = anchors.to_vec();
    sorted.sort_by(|a, b| a.x_cm.total_cmp(&b.x_cm));
    for w in sorted.windows(2) {
        if w[0].x_cm == w[1].x_cm {
            return Err(ProfileError::Underdetermined(format!(
                "two anchors share x = {} cm",
                w[0].x_cm
            )));
        }
        if w[0].frequency_hz <= w[1].frequency_hz {
            return Err(ProfileError::Infeasible(format!(
                "anchor frequencies must strictly decrease with x: {} Hz at {} cm, {} Hz at {} cm",
                w[0].frequency_hz, w[0].x_cm, w[1].frequency_hz, w[1].x_cm
            )));
        }
    }
    for a in &sorted {
        if !a.x_cm.is_finite() || !a.frequency_hz.is_finite() {
            return Err(ProfileError::Invalid(
                "anchor values must be finite".to_string(),
            ));
        }
        if a.frequency_hz <= t.field_free_frequency {
            return Err(ProfileError::Infeasible(format!(
                "anchor at {} cm has frequency {} Hz, not above the field-free line {} Hz",
                a.x_cm, a.frequency_hz, t.field_free_frequency
            )));
        }
    }

    let x_min = sorted[0].x_cm;
    let x_max = sorted[sorted.len() - 1].x_cm;
    let offset = match offset {
        Some(x0) => x0,
        None if sorted.len() == 2 => 0.0,
        None => search_offset(&sorted, t),
    };
    if !(offset >= 0.0 && x_min + offset > 0.0) {
        return Err(ProfileError::Invalid(format!(
            "offset {offset} cm leaves x + offset non-positive"
        )));
    }

    let (intercept, slope) = log_fit(&sorted, t, offset);
    // slope is the frequency-offset exponent, 2 * gamma
    if !(slope > 0.0) {
        return Err(ProfileError::Infeasible(format!(
            "fitted exponent {slope} is not positive"
        )));
    }
    let reference = sorted[0];
    let shift_at_reference = if sorted.len() == 2 {
        reference.frequency_hz - t.field_free_frequency
    } else {
        (intercept - slope * (reference.x_cm + offset).ln()).exp()
    };
    let reference_field = (shift_at_reference / t.differential_polarizability).sqrt();
    let profile = FieldProfile::new(
        reference.x_cm,
        reference_field,
        slope / 2.0,
        offset,
        (x_min, x_max),
    )?;

    for a in &sorted {
        let f = transition_frequency_at(&profile, t, a.x_cm)?;
        let err = (f - a.frequency_hz).abs();
        if err > ANCHOR_TOLERANCE_HZ {
            return Err(ProfileError::AnchorMismatch {
                x_cm: a.x_cm,
                error_hz: err,
            });
        }
    }
    Ok(profile)
}

/// Least-squares line `ln(shift) = a - s * ln(x + x0)`; returns `(a, s)`.
fn log_fit(anchors: &[Anchor], t: &RydbergTransition, offset: f64) -> (f64, f64) {
    if let [first, second] = anchors {
        let (s1, s2) = (
            (first.frequency_hz - t.field_free_frequency).ln(),
            (second.frequency_hz - t.field_free_frequency).ln(),
        );
        let (u1, u2) = ((first.x_cm + offset).ln(), (second.x_cm + offset).ln());
        let slope = (s1 - s2) / (u2 - u1);
        return (s1 + slope * u1, slope);
    }
    let n = anchors.len() as f64;
    let pts: Vec<(f64, f64)> = anchors
        .iter()
        .map(|a| {
            (
                (a.x_cm + offset).ln(),
                (a.frequency_hz - t.field_free_frequency).ln(),
            )
        })
        .collect();
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let suu: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
    let suv: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    let slope = -suv / suu;
    (mv + slope * mu, slope)
}

fn log_residual(anchors: &[Anchor], t: &RydbergTransition, offset: f64) -> f64 {
    let (a, s) = log_fit(anchors, t, offset);
    anchors
        .iter()
        .map(|p| {
            let model = a - s * (p.x_cm + offset).ln();
            (model - (p.frequency_hz - t.field_free_frequency).ln()).powi(2)
        })
        .sum()
}

/// Offset minimizing the log-space residual: coarse log-spaced scan, then
/// golden-section refinement around the best grid point.
fn search_offset(anchors: &[Anchor], t: &RydbergTransition) -> f64 {
    let x_min = anchors[0].x_cm;
    let span = anchors[anchors.len() - 1].x_cm - x_min;
    let lower = if x_min > 0.0 {
        0.0
    } else {
        -x_min + 1e-9 * span
    };
    let upper = lower + 1e3 * span;

    let mut grid = vec![lower];
    let steps = 400;
    for i in 0..=steps {
        grid.push(lower + span * 1e-6 * (1e9f64).powf(i as f64 / steps as f64));
    }
    grid.retain(|&g| g <= upper);
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| log_residual(anchors, t, *a.1).total_cmp(&log_residual(anchors, t, *b.1)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(grid.len() - 1)];
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + b.abs()) {
            break;
        }
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if log_residual(anchors, t, c) <= log_residual(anchors, t, d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// One row of a tabulated profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub x_cm: f64,
    pub field_v_per_cm: f64,
    pub transition_hz: f64,
}

/// Evenly spaced samples over the valid range, endpoints included.
pub fn sample_profile(
    p: &FieldProfile,
    t: &RydbergTransition,
    points: usize,
) -> Result<Vec<ProfileSample>, ProfileError> {
    let points = points.max(2);
    let (lo, hi) = p.valid_range;
    (0..points)
        .map(|i| {
            let x = if i + 1 == points {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (points - 1) as f64
            };
            let field = field_at(p, x)?;
            Ok(ProfileSample {
                x_cm: x,
                field_v_per_cm: field,
                transition_hz: stark_shifted_frequency(t, field)?,
            })
        })
        .collect()
}
