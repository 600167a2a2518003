//! Microwave frequency comb, cell placement, and channel assignment.
//!
//! Each comb line acts as the local oscillator for one vapor cell. A cell is
//! placed where the Stark-tuned transition frequency equals its line, found by
//! bisection on the monotone position-frequency map.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field_map::{transition_frequency_at, FieldProfile, ProfileError};
use crate::stark::RydbergTransition;

/// Default placement tolerance on the transition frequency.
pub const DEFAULT_PLACEMENT_TOLERANCE_HZ: f64 = 1e3;
/// Half of a single cell's instantaneous bandwidth.
pub const DEFAULT_HALF_WIDTH_HZ: f64 = 5e6;
const MAX_BISECTION_STEPS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("invalid comb: {0}")]
    InvalidComb(String),
    #[error("comb line {line_index} at {frequency_hz} Hz lies outside the reachable band [{low_hz}, {high_hz}] Hz")]
    Coverage {
        line_index: usize,
        frequency_hz: f64,
        low_hz: f64,
        high_hz: f64,
    },
    #[error("signal at {frequency_hz} Hz is outside the covered band [{low_hz}, {high_hz}] Hz")]
    OutOfBand {
        frequency_hz: f64,
        low_hz: f64,
        high_hz: f64,
    },
    #[error("field profile is not strictly decreasing over its valid range")]
    NonMonotone,
    #[error("placement of line {line_index} missed by {error_hz} Hz")]
    NotConverged { line_index: usize, error_hz: f64 },
    #[error("cells are {min_spacing_cm} cm apart, closer than the required {min_gap_cm} cm")]
    Crowded {
        min_spacing_cm: f64,
        min_gap_cm: f64,
    },
    #[error("plan has no cells")]
    EmptyPlan,
    #[error(transparent)]
    Profile(#[from] ProfileError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyComb {
    pub center_frequency: f64,
    pub line_spacing: f64,
    pub line_count: usize,
    /// Per-line LO power in dBm, one entry per line.
    pub per_line_power: Vec<f64>,
    pub total_power: f64,
}

impl FrequencyComb {
    /// Comb with `total_power` dBm split equally over the lines.
    pub fn equal_split(
        center_frequency: f64,
        line_spacing: f64,
        line_count: usize,
        total_power: f64,
    ) -> Result<Self, PlanError> {
        let per_line = total_power - 10.0 * (line_count.max(1) as f64).log10();
        let comb = Self {
            center_frequency,
            line_spacing,
            line_count,
            per_line_power: vec![per_line; line_count],
            total_power,
        };
        comb.validate()?;
        Ok(comb)
    }

    /// 21 lines, 10 MHz apart, centred on 8.13 GHz, 11 dBm in total.
    pub fn standard() -> Self {
        Self::equal_split(8.13e9, 10e6, 21, 11.0).expect("default comb is valid")
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.line_count == 0 {
            return Err(PlanError::InvalidComb(
                "line_count must be >= 1".to_string(),
            ));
        }
        if !(self.line_spacing.is_finite() && self.line_spacing > 0.0) {
            return Err(PlanError::InvalidComb(format!(
                "line_spacing must be > 0, got {}",
                self.line_spacing
            )));
        }
        if !(self.center_frequency.is_finite() && self.center_frequency > 0.0) {
            return Err(PlanError::InvalidComb(format!(
                "center_frequency must be > 0, got {}",
                self.center_frequency
            )));
        }
        if self.per_line_power.len() != self.line_count {
            return Err(PlanError::InvalidComb(format!(
                "per_line_power has {} entries but line_count is {}",
                self.per_line_power.len(),
                self.line_count
            )));
        }
        if self.first_line() <= 0.0 {
            return Err(PlanError::InvalidComb(
                "lowest comb line must be above 0 Hz".to_string(),
            ));
        }
        Ok(())
    }

    pub fn line(&self, index: usize) -> f64 {
        let k = index as f64 - (self.line_count as f64 - 1.0) / 2.0;
        self.center_frequency + k * self.line_spacing
    }

    pub fn first_line(&self) -> f64 {
        self.line(0)
    }

    pub fn last_line(&self) -> f64 {
        self.line(self.line_count.saturating_sub(1))
    }
}

/// Ascending comb line frequencies.
pub fn comb_lines(c: &FrequencyComb) -> Vec<f64> {
    (0..c.line_count).map(|k| c.line(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellPlacement {
    pub line_index: usize,
    pub line_frequency: f64,
    pub position_cm: f64,
    pub lo_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellArrayPlan {
    /// Comb the cells are tuned to.
    pub comb: FrequencyComb,
    /// Entries ordered by line index, i.e. by ascending frequency.
    pub entries: Vec<CellPlacement>,
    /// Smallest gap between neighbouring cells, in cm. Infinite for one cell.
    pub min_spacing: f64,
    pub feasible: bool,
}

impl CellArrayPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distance from entry `i` to entry `i + 1`, if there is one.
    pub fn spacing_to_next(&self, i: usize) -> Option<f64> {
        let next = self.entries.get(i + 1)?;
        Some((self.entries[i].position_cm - next.position_cm).abs())
    }
}

/// Place one cell per comb line.
///
/// Every line must lie within the band the profile can reach. Each position is
/// found by bisection over the valid range, run until the bracket collapses
/// (or 200 halvings), returning the final bracket midpoint.
pub fn place_cells(
    p: &FieldProfile,
    t: &RydbergTransition,
    c: &FrequencyComb,
    tol: f64,
    min_gap: f64,
) -> Result<CellArrayPlan, PlanError> {
    c.validate()?;
    let (x_min, x_max) = p.valid_range;
    let f_high = transition_frequency_at(p, t, x_min)?;
    let f_low = transition_frequency_at(p, t, x_max)?;
    if !(f_high > f_low) {
        return Err(PlanError::NonMonotone);
    }

    let mut entries = Vec::with_capacity(c.line_count);
    for k in 0..c.line_count {
        let target = c.line(k);
        if target < f_low - tol || target > f_high + tol {
            return Err(PlanError::Coverage {
                line_index: k,
                frequency_hz: target,
                low_hz: f_low,
                high_hz: f_high,
            });
        }
        let x = invert_profile(p, t, target)?;
        let err = (transition_frequency_at(p, t, x)? - target).abs();
        if err > tol {
            return Err(PlanError::NotConverged {
                line_index: k,
                error_hz: err,
            });
        }
        entries.push(CellPlacement {
            line_index: k,
            line_frequency: target,
            position_cm: x,
            lo_power_dbm: c.per_line_power[k],
        });
    }

    let min_spacing = entries
        .windows(2)
        .map(|w| (w[0].position_cm - w[1].position_cm).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(CellArrayPlan {
        comb: c.clone(),
        entries,
        min_spacing,
        feasible: min_spacing >= min_gap,
    })
}

/// Position whose transition frequency equals `target`, by bisection.
fn invert_profile(p: &FieldProfile, t: &RydbergTransition, target: f64) -> Result<f64, PlanError> {
    let (mut lo, mut hi) = p.valid_range;
    // residual is decreasing in x: positive at lo, negative at hi
    let r_lo = transition_frequency_at(p, t, lo)? - target;
    let r_hi = transition_frequency_at(p, t, hi)? - target;
    if r_lo <= 0.0 {
        return Ok(lo);
    }
    if r_hi >= 0.0 {
        return Ok(hi);
    }
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = transition_frequency_at(p, t, mid)? - target;
        if r == 0.0 {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Channel that receives a signal, with the signed beat detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelAssignment {
    pub line_index: usize,
    pub detuning_hz: f64,
}

/// Route a signal to its nearest comb line. An exact midpoint between two
/// lines goes to the lower index.
pub fn assign_channel(
    c: &FrequencyComb,
    signal_frequency: f64,
    half_width: f64,
) -> Result<ChannelAssignment, PlanError> {
    let (low, high) = (c.first_line() - half_width, c.last_line() + half_width);
    if !(signal_frequency >= low && signal_frequency <= high) {
        return Err(PlanError::OutOfBand {
            frequency_hz: signal_frequency,
            low_hz: low,
            high_hz: high,
        });
    }
    Ok(nearest_line(c, signal_frequency))
}

/// Nearest-line routing without the band check. Used for out-of-band rows.
pub fn nearest_line(c: &FrequencyComb, signal_frequency: f64) -> ChannelAssignment {
    let last = c.line_count - 1;
    let r = (signal_frequency - c.first_line()) / c.line_spacing;
    let guess = (r - 0.5).ceil().clamp(0.0, last as f64) as usize;
    // settle rounding on the exact distance comparison
    let mut best = guess;
    for k in [guess.saturating_sub(1), guess, (guess + 1).min(last)] {
        let d = (signal_frequency - c.line(k)).abs();
        let d_best = (signal_frequency - c.line(best)).abs();
        if d < d_best || (d == d_best && k < best) {
            best = k;
        }
    }
    ChannelAssignment {
        line_index: best,
        detuning_hz: signal_frequency - c.line(best),
    }
}

/// Merge `[f_k - half_width, f_k + half_width]` over the lines into
/// disjoint intervals, ascending.
pub fn coverage_intervals(c: &FrequencyComb, half_width: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for f in comb_lines(c) {
        let (a, b) = (f - half_width, f + half_width);
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}
