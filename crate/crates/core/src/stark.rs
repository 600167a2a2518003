//! Quadratic Stark tuning of a Rydberg-Rydberg microwave transition.
//!
//! The transition frequency between the two Rydberg levels shifts as
//! `f(E) = f0 + k * E^2`, where `k` is half the differential polarizability
//! of the pair (folded into a single positive coefficient).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StarkError {
    #[error("field must be non-negative, got {0} V/cm")]
    NegativeField(f64),
    #[error("target {target} Hz lies below the field-free transition at {floor} Hz and cannot be reached")]
    Unreachable { target: f64, floor: f64 },
    #[error("transition has zero differential polarizability; no field tunes it")]
    Degenerate,
    #[error("invalid transition: {0}")]
    Invalid(String),
}

/// A pair of Rydberg levels coupled by a microwave transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RydbergTransition {
    /// Transition frequency without any applied field, in Hz.
    pub field_free_frequency: f64,
    /// Shift coefficient in Hz / (V/cm)^2. Non-negative.
    pub differential_polarizability: f64,
    #[serde(default)]
    pub label: String,
}

impl RydbergTransition {
    pub fn new(
        field_free_frequency: f64,
        differential_polarizability: f64,
        label: impl Into<String>,
    ) -> Result<Self, StarkError> {
        let t = Self {
            field_free_frequency,
            differential_polarizability,
            label: label.into(),
        };
        t.validate()?;
        Ok(t)
    }

    /// 45D5/2 (mj=5/2) -> 46P3/2 (mj=3/2) in cesium, field-free at 7.97 GHz.
    ///
    /// The shift coefficient of 1 MHz/(V/cm)^2 is a calibration constant: the
    /// field profile is fitted in frequency space, so it only sets the units of
    /// the reported field axis.
    pub fn cesium_45d_46p() -> Self {
        Self {
            field_free_frequency: 7.97e9,
            differential_polarizability: 1.0e6,
            label: "45D5/2,mj=5/2 -> 46P3/2,mj=3/2".to_string(),
        }
    }

    pub fn validate(&self) -> Result<(), StarkError> {
        if !(self.field_free_frequency.is_finite() && self.field_free_frequency > 0.0) {
            return Err(StarkError::Invalid(format!(
                "field_free_frequency must be > 0, got {}",
                self.field_free_frequency
            )));
        }
        if !(self.differential_polarizability.is_finite()
            && self.differential_polarizability >= 0.0)
        {
            return Err(StarkError::Invalid(format!(
                "differential_polarizability must be >= 0, got {}",
                self.differential_polarizability
            )));
        }
        Ok(())
    }

    /// Frequency shift away from the field-free line at `field` V/cm.
    pub fn shift(&self, field: f64) -> Result<f64, StarkError> {
        if field.is_nan() || field < 0.0 {
            return Err(StarkError::NegativeField(field));
        }
        Ok(self.differential_polarizability * field * field)
    }
}

/// Transition frequency at an applied field of `field` V/cm.
pub fn stark_shifted_frequency(t: &RydbergTransition, field: f64) -> Result<f64, StarkError> {
    Ok(t.field_free_frequency + t.shift(field)?)
}

/// Field needed to tune the transition onto `target` Hz.
pub fn field_for_frequency(t: &RydbergTransition, target: f64) -> Result<f64, StarkError> {
    if target.is_nan() || target < t.field_free_frequency {
        return Err(StarkError::Unreachable {
            target,
            floor: t.field_free_frequency,
        });
    }
    if t.differential_polarizability == 0.0 {
        return Err(StarkError::Degenerate);
    }
    Ok(((target - t.field_free_frequency) / t.differential_polarizability).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn transition() -> RydbergTransition {
        RydbergTransition::cesium_45d_46p()
    }

    #[test]
    fn zero_field_is_field_free_line() {
        assert_eq!(stark_shifted_frequency(&transition(), 0.0).unwrap(), 7.97e9);
    }

    #[test]
    fn zero_polarizability_never_shifts() {
        let t = RydbergTransition::new(7.97e9, 0.0, "flat").unwrap();
        for e in [0.0, 1.0, 37.5, 1e3] {
            assert_eq!(stark_shifted_frequency(&t, e).unwrap(), 7.97e9);
        }
    }

    #[test]
    fn center_line_field() {
        // sqrt(160 MHz / 1 MHz per (V/cm)^2)
        let e = 160f64.sqrt();
        assert_relative_eq!(e, 12.649, epsilon = 1e-3);
        let f = stark_shifted_frequency(&transition(), e).unwrap();
        assert_relative_eq!(f, 8.13e9, max_relative = 1e-12);
    }

    #[test]
    fn negative_field_rejected() {
        assert!(matches!(
            stark_shifted_frequency(&transition(), -1.0),
            Err(StarkError::NegativeField(_))
        ));
    }

    #[test]
    fn inverse_examples() {
        let t = transition();
        assert_eq!(
            field_for_frequency(&t, t.field_free_frequency).unwrap(),
            0.0
        );
        let e = field_for_frequency(&t, 8.23e9).unwrap();
        assert_relative_eq!(e, 260f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(e, 16.125, epsilon = 1e-3);
        assert!(matches!(
            field_for_frequency(&t, t.field_free_frequency - 1.0),
            Err(StarkError::Unreachable { .. })
        ));
    }

    #[test]
    fn inverse_of_flat_transition_is_degenerate() {
        let t = RydbergTransition::new(7.97e9, 0.0, "flat").unwrap();
        assert_eq!(field_for_frequency(&t, 8.0e9), Err(StarkError::Degenerate));
    }

    #[test]
    fn construction_validates() {
        assert!(RydbergTransition::new(0.0, 1.0, "").is_err());
        assert!(RydbergTransition::new(7.97e9, -1.0, "").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(e in 0.1f64..100.0) {
            let t = transition();
            let f = stark_shifted_frequency(&t, e).unwrap();
            let back = field_for_frequency(&t, f).unwrap();
            prop_assert!(((back - e) / e).abs() <= 1e-9);
        }

        #[test]
        fn round_trip_near_zero_field(e in 0.0f64..0.1) {
            // f0 + k E^2 cannot resolve shifts below one ulp of f0.
            let t = transition();
            let f = stark_shifted_frequency(&t, e).unwrap();
            let back = field_for_frequency(&t, f).unwrap();
            let ulp = f64::EPSILON * f;
            prop_assert!((back - e).abs() <= (2.0 * ulp / t.differential_polarizability).sqrt());
        }

        #[test]
        fn strictly_increasing(a in 0.0f64..100.0, b in 0.0f64..100.0) {
            prop_assume!((a - b).abs() > 1e-3);
            let t = transition();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(stark_shifted_frequency(&t, lo).unwrap() < stark_shifted_frequency(&t, hi).unwrap());
        }

        #[test]
        fn quadratic_scaling(e in 1e-3f64..100.0) {
            let t = transition();
            let base = t.shift(e).unwrap();
            for k in [2.0, 3.0, 10.0] {
                let scaled = t.shift(k * e).unwrap();
                prop_assert!(((scaled - k * k * base) / (k * k * base)).abs() <= 1e-12);
            }
        }
    }
}
