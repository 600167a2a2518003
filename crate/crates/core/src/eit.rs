//! Four-level ladder `|g> -> |e> -> |r1> -> |r2>` probed by EIT.
//!
//! The probe couples g-e, the coupling laser e-r1, and the microwave r1-r2.
//! Steady states solve the rotating-frame Lindblad equation
//!
//! ```text
//! 0 = -i[H, rho] + sum_k (L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho})
//! ```
//!
//! with the unit-trace condition replacing one population equation. The
//! unknowns are the 16 real coordinates of a Hermitian 4x4 matrix, so the
//! solution is Hermitian by construction.
//!
//! All rates and detunings are angular frequencies (rad/s).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const G: usize = 0;
const E: usize = 1;
const R1: usize = 2;
const R2: usize = 3;
const DIM: usize = 4;
const COORDS: usize = DIM * DIM;

/// Largest scaled Liouvillian residual accepted from the linear solve.
pub const MAX_RESIDUAL: f64 = 1e-9;
/// The AT readout needs the microwave Rabi frequency to exceed this many
/// intermediate-state linewidths.
pub const STRONG_FIELD_RATIO: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EitError {
    #[error("invalid ladder parameter: {0}")]
    InvalidParameter(String),
    #[error("Liouvillian is singular; the steady state is not unique")]
    Degenerate,
    #[error("steady-state residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("outside the strong-field regime: {0}")]
    Regime(String),
}

/// Angular-frequency value for a cycle frequency in MHz.
pub fn mhz(v: f64) -> f64 {
    2.0 * PI * v * 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderSystem {
    pub probe_rabi: f64,
    pub coupling_rabi: f64,
    pub mw_rabi: f64,
    pub probe_detuning: f64,
    pub coupling_detuning: f64,
    pub mw_detuning: f64,
    /// Spontaneous decay e -> g.
    pub decay_e: f64,
    /// Decay r1 -> e.
    pub decay_r1: f64,
    /// Decay r2 -> r1.
    pub decay_r2: f64,
    /// Dephasing of coherences between the Rydberg pair and the lower levels.
    pub dephasing: f64,
}

impl LadderSystem {
    /// Cesium 6S-6P-45D-46P with the lasers of the experiment, no microwave,
    /// everything resonant.
    pub fn cesium_ladder() -> Self {
        Self {
            probe_rabi: mhz(6.9),
            coupling_rabi: mhz(16.1),
            mw_rabi: 0.0,
            probe_detuning: 0.0,
            coupling_detuning: 0.0,
            mw_detuning: 0.0,
            decay_e: mhz(5.2),
            decay_r1: mhz(0.01),
            decay_r2: mhz(0.01),
            dephasing: mhz(0.1),
        }
    }

    pub fn with_mw_rabi(mut self, mw_rabi: f64) -> Self {
        self.mw_rabi = mw_rabi;
        self
    }

    pub fn with_probe_detuning(mut self, probe_detuning: f64) -> Self {
        self.probe_detuning = probe_detuning;
        self
    }

    pub fn with_probe_rabi(mut self, probe_rabi: f64) -> Self {
        self.probe_rabi = probe_rabi;
        self
    }

    fn rates(&self) -> [(&'static str, f64); 4] {
        [
            ("decay_e", self.decay_e),
            ("decay_r1", self.decay_r1),
            ("decay_r2", self.decay_r2),
            ("dephasing", self.dephasing),
        ]
    }

    fn rabis(&self) -> [(&'static str, f64); 3] {
        [
            ("probe_rabi", self.probe_rabi),
            ("coupling_rabi", self.coupling_rabi),
            ("mw_rabi", self.mw_rabi),
        ]
    }

    pub fn validate(&self) -> Result<(), EitError> {
        for (name, v) in self.rates().into_iter().chain(self.rabis()) {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EitError::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("probe_detuning", self.probe_detuning),
            ("coupling_detuning", self.coupling_detuning),
            ("mw_detuning", self.mw_detuning),
        ] {
            if !v.is_finite() {
                return Err(EitError::InvalidParameter(format!("{name} must be finite")));
            }
        }
        let all_zero = self
            .rates()
            .iter()
            .chain(self.rabis().iter())
            .all(|(_, v)| *v == 0.0);
        if all_zero {
            return Err(EitError::Degenerate);
        }
        if self.decay_e <= 0.0 {
            return Err(EitError::InvalidParameter(
                "decay_e must be > 0".to_string(),
            ));
        }
        Ok(())
    }

    fn hamiltonian(&self) -> Matrix4<Complex64> {
        let mut h = Matrix4::<Complex64>::zeros();
        h[(E, E)] = (-self.probe_detuning).into();
        h[(R1, R1)] = (-(self.probe_detuning + self.coupling_detuning)).into();
        h[(R2, R2)] = (-(self.probe_detuning + self.coupling_detuning + self.mw_detuning)).into();
        for (a, b, rabi) in [
            (G, E, self.probe_rabi),
            (E, R1, self.coupling_rabi),
            (R1, R2, self.mw_rabi),
        ] {
            h[(a, b)] = (0.5 * rabi).into();
            h[(b, a)] = (0.5 * rabi).into();
        }
        h
    }

    fn collapse_operators(&self) -> Vec<Matrix4<Complex64>> {
        let mut ops = Vec::new();
        for (to, from, rate) in [
            (G, E, self.decay_e),
            (E, R1, self.decay_r1),
            (R1, R2, self.decay_r2),
        ] {
            if rate > 0.0 {
                let mut l = Matrix4::zeros();
                l[(to, from)] = rate.sqrt().into();
                ops.push(l);
            }
        }
        if self.dephasing > 0.0 {
            let amp: Complex64 = (2.0 * self.dephasing).sqrt().into();
            let mut l = Matrix4::zeros();
            l[(R1, R1)] = amp;
            l[(R2, R2)] = amp;
            ops.push(l);
        }
        ops
    }

    /// Largest rate in the problem; the Liouvillian is solved in these units.
    fn rate_scale(&self) -> f64 {
        [
            self.probe_rabi,
            self.coupling_rabi,
            self.mw_rabi,
            self.probe_detuning.abs(),
            self.coupling_detuning.abs(),
            self.mw_detuning.abs(),
            self.decay_e,
            self.decay_r1,
            self.decay_r2,
            self.dephasing,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Lindblad right-hand side, `d rho / dt`.
fn lindblad_rhs(
    h: &Matrix4<Complex64>,
    ops: &[Matrix4<Complex64>],
    rho: &Matrix4<Complex64>,
) -> Matrix4<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let mut out = (h * rho - rho * h) * (-i);
    for l in ops {
        let ld = l.adjoint();
        let ldl = ld * l;
        out += l * rho * ld - (ldl * rho + rho * ldl) * Complex64::new(0.5, 0.0);
    }
    out
}

/// Upper-triangle index pairs in coordinate order.
fn pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..DIM).flat_map(|k| (k + 1..DIM).map(move |l| (k, l)))
}

/// Real coordinates of a Hermitian matrix: populations, then `(Re, Im)` of
/// each upper-triangle coherence.
fn to_coords(m: &Matrix4<Complex64>) -> [f64; COORDS] {
    let mut c = [0.0; COORDS];
    for k in 0..DIM {
        c[k] = m[(k, k)].re;
    }
    for (n, (k, l)) in pairs().enumerate() {
        c[DIM + 2 * n] = m[(k, l)].re;
        c[DIM + 2 * n + 1] = m[(k, l)].im;
    }
    c
}

fn from_coords(c: &[f64]) -> Matrix4<Complex64> {
    let mut m = Matrix4::zeros();
    for k in 0..DIM {
        m[(k, k)] = c[k].into();
    }
    for (n, (k, l)) in pairs().enumerate() {
        let z = Complex64::new(c[DIM + 2 * n], c[DIM + 2 * n + 1]);
        m[(k, l)] = z;
        m[(l, k)] = z.conj();
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrixSolution {
    pub rho: Matrix4<Complex64>,
    /// Frobenius norm of the Liouvillian applied to `rho`, in units of the
    /// largest rate of the system.
    pub residual_norm: f64,
}

impl DensityMatrixSolution {
    pub fn population(&self, level: usize) -> f64 {
        self.rho[(level, level)].re
    }

    /// Probe coherence `rho_ge = <g|rho|e>`.
    pub fn probe_coherence(&self) -> Complex64 {
        self.rho[(G, E)]
    }

    pub fn trace(&self) -> f64 {
        (0..DIM).map(|k| self.rho[(k, k)].re).sum()
    }

    /// Largest elementwise `|rho - rho^+|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.rho - self.rho.adjoint();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.rho)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Steady-state density matrix of the ladder.
pub fn steady_state(s: &LadderSystem) -> Result<DensityMatrixSolution, EitError> {
    s.validate()?;
    let scale = s.rate_scale();
    let h = s.hamiltonian() / Complex64::from(scale);
    let ops: Vec<_> = s
        .collapse_operators()
        .into_iter()
        .map(|l| l / Complex64::from(scale.sqrt()))
        .collect();

    let mut a = DMatrix::<f64>::zeros(COORDS, COORDS);
    let mut unit = [0.0; COORDS];
    for j in 0..COORDS {
        unit[j] = 1.0;
        let column = to_coords(&lindblad_rhs(&h, &ops, &from_coords(&unit)));
        unit[j] = 0.0;
        for (i, v) in column.iter().enumerate() {
            a[(i, j)] = *v;
        }
    }
    // trace condition replaces the ground-population equation
    for j in 0..COORDS {
        a[(0, j)] = if j < DIM { 1.0 } else { 0.0 };
    }
    let mut b = DVector::<f64>::zeros(COORDS);
    b[0] = 1.0;

    let lu = a.lu();
    let pivots = lu.u().diagonal();
    let largest = pivots.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let smallest = pivots.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if !(smallest > 1e-14 * largest) {
        return Err(EitError::Degenerate);
    }
    let x = lu.solve(&b).ok_or(EitError::Degenerate)?;
    let rho = from_coords(x.as_slice());
    let residual_norm = lindblad_rhs(&h, &ops, &rho).norm();
    if !(residual_norm <= MAX_RESIDUAL) {
        return Err(EitError::Residual(residual_norm));
    }
    Ok(DensityMatrixSolution { rho, residual_norm })
}

/// Probe absorption `Im(rho_ge) * decay_e / probe_rabi`; 1 for a weakly
/// probed, resonant two-level atom.
pub fn probe_absorption(s: &LadderSystem) -> Result<f64, EitError> {
    if !(s.probe_rabi > 0.0) {
        return Err(EitError::InvalidParameter(
            "probe_rabi must be > 0 to read out absorption".to_string(),
        ));
    }
    let sol = steady_state(s)?;
    Ok(sol.probe_coherence().im * s.decay_e / s.probe_rabi)
}

/// Probe detuning sweep, endpoints included, in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl ProbeSweep {
    /// Symmetric sweep `[-half_span, half_span]`.
    pub fn symmetric(half_span: f64, points: usize) -> Self {
        Self {
            start: -half_span,
            stop: half_span,
            points,
        }
    }

    pub fn detunings(&self) -> Vec<f64> {
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

/// Absorption at each probe detuning. Evaluated in parallel; output order
/// follows the input.
pub fn probe_spectrum(s: &LadderSystem, detunings: &[f64]) -> Result<Vec<f64>, EitError> {
    detunings
        .par_iter()
        .map(|&d| probe_absorption(&s.with_probe_detuning(d)))
        .collect()
}

/// Frequency separation, in Hz, of the two Autler-Townes transmission peaks.
///
/// Peaks are local absorption minima on the sweep. Each is located by
/// quadratic interpolation, then re-sampled on successively finer grids
/// around the current estimate.
pub fn at_splitting(s: &LadderSystem, probe_sweep: &ProbeSweep) -> Result<f64, EitError> {
    s.validate()?;
    if s.mw_rabi < STRONG_FIELD_RATIO * s.decay_e {
        return Err(EitError::Regime(format!(
            "mw_rabi {:.4e} rad/s is below {} x decay_e",
            s.mw_rabi, STRONG_FIELD_RATIO
        )));
    }
    let detunings = probe_sweep.detunings();
    if detunings.len() < 3 {
        return Err(EitError::Regime(
            "sweep needs at least 3 points".to_string(),
        ));
    }
    let absorption = probe_spectrum(s, &detunings)?;
    let mut minima: Vec<usize> = (1..absorption.len() - 1)
        .filter(|&i| absorption[i] < absorption[i - 1] && absorption[i] <= absorption[i + 1])
        .collect();
    if minima.len() < 2 {
        return Err(EitError::Regime(format!(
            "found {} transmission peak(s), need two",
            minima.len()
        )));
    }
    minima.sort_by(|&a, &b| absorption[a].total_cmp(&absorption[b]));
    let step = (probe_sweep.stop - probe_sweep.start) / (detunings.len() - 1) as f64;
    let mut peaks = Vec::with_capacity(2);
    for &i in &minima[..2] {
        let first = quadratic_vertex(
            detunings[i],
            step,
            [absorption[i - 1], absorption[i], absorption[i + 1]],
        );
        peaks.push(refine_minimum(s, first, step)?);
    }
    Ok((peaks[1] - peaks[0]).abs() / (2.0 * PI))
}

fn quadratic_vertex(center: f64, step: f64, y: [f64; 3]) -> f64 {
    let curvature = y[0] - 2.0 * y[1] + y[2];
    if curvature <= 0.0 {
        return center;
    }
    let offset = 0.5 * (y[0] - y[2]) / curvature;
    center + offset.clamp(-1.0, 1.0) * step
}

fn refine_minimum(s: &LadderSystem, mut center: f64, mut step: f64) -> Result<f64, EitError> {
    for _ in 0..6 {
        step /= 8.0;
        let grid: Vec<f64> = (-8..=8).map(|k| center + k as f64 * step).collect();
        let a = probe_spectrum(s, &grid)?;
        let best = (1..grid.len() - 1)
            .min_by(|&x, &y| a[x].total_cmp(&a[y]))
            .unwrap_or(8);
        center = quadratic_vertex(grid[best], step, [a[best - 1], a[best], a[best + 1]]);
    }
    Ok(center)
}

/// Central-difference step used by [`heterodyne_gain`].
pub fn gain_step(lo_rabi: f64) -> f64 {
    (1e-4 * lo_rabi).max(2.0 * PI * 1e3)
}

fn absorption_at_mw(s: &LadderSystem, mw_rabi: f64) -> Result<f64, EitError> {
    // absorption is even in the microwave Rabi frequency
    probe_absorption(&s.with_mw_rabi(mw_rabi.abs()))
}

/// Small-signal heterodyne gain: derivative of probe absorption with respect
/// to the microwave Rabi frequency at the LO operating point `s.mw_rabi`.
pub fn heterodyne_gain(s: &LadderSystem) -> Result<f64, EitError> {
    heterodyne_gain_with_step(s, gain_step(s.mw_rabi))
}

pub fn heterodyne_gain_with_step(s: &LadderSystem, step: f64) -> Result<f64, EitError> {
    if !(s.mw_rabi > 0.0) {
        return Err(EitError::InvalidParameter(
            "LO Rabi frequency must be > 0".to_string(),
        ));
    }
    if !(step > 0.0) {
        return Err(EitError::InvalidParameter("step must be > 0".to_string()));
    }
    let up = absorption_at_mw(s, s.mw_rabi + step)?;
    let down = absorption_at_mw(s, s.mw_rabi - step)?;
    Ok((up - down) / (2.0 * step))
}

/// Quasi-static beat amplitude for a signal of Rabi frequency `signal_rabi`
/// mixing with the LO at `s.mw_rabi`: half the absorption swing between the
/// in-phase and anti-phase field sums.
pub fn beat_amplitude(s: &LadderSystem, signal_rabi: f64) -> Result<f64, EitError> {
    if !(s.mw_rabi > 0.0) {
        return Err(EitError::InvalidParameter(
            "LO Rabi frequency must be > 0".to_string(),
        ));
    }
    let up = absorption_at_mw(s, s.mw_rabi + signal_rabi)?;
    let down = absorption_at_mw(s, s.mw_rabi - signal_rabi)?;
    Ok(0.5 * (up - down))
}

/// LO Rabi frequency on `grid` with the largest heterodyne gain.
pub fn optimal_lo(s: &LadderSystem, grid: &[f64]) -> Result<(f64, f64), EitError> {
    let gains: Vec<f64> = grid
        .par_iter()
        .map(|&lo| heterodyne_gain(&s.with_mw_rabi(lo)))
        .collect::<Result<_, _>>()?;
    grid.iter()
        .zip(gains)
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(lo, g)| (*lo, g))
        .ok_or_else(|| EitError::InvalidParameter("empty LO grid".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_level(probe: f64) -> LadderSystem {
        LadderSystem {
            probe_rabi: probe,
            coupling_rabi: 0.0,
            mw_rabi: 0.0,
            probe_detuning: 0.0,
            coupling_detuning: 0.0,
            mw_detuning: 0.0,
            decay_e: mhz(5.2),
            decay_r1: mhz(0.01),
            decay_r2: mhz(0.01),
            dephasing: mhz(0.1),
        }
    }

    #[test]
    fn undriven_atom_sits_in_ground_state() {
        let sol = steady_state(&two_level(0.0)).unwrap();
        assert_relative_eq!(sol.population(G), 1.0, epsilon = 1e-12);
        for k in 1..DIM {
            assert!(sol.population(k).abs() < 1e-12);
        }
        assert!(sol.probe_coherence().norm() < 1e-12);
    }

    #[test]
    fn weak_probe_two_level_coherence() {
        let s = two_level(mhz(5.2) * 1e-3);
        let sol = steady_state(&s).unwrap();
        // Im rho_ge = Ωp/Γe to first order
        assert_relative_eq!(sol.probe_coherence().im, 1e-3, max_relative = 1e-5);
        assert_relative_eq!(probe_absorption(&s).unwrap(), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn two_level_lorentzian() {
        // weak-probe Im rho_ge = Ωp Γ / (Γ^2 + 4Δ^2)
        let s = two_level(mhz(5.2) * 1e-4);
        for d in [-3.0, -1.0, 0.5, 2.0] {
            let det = mhz(d);
            let a = probe_absorption(&s.with_probe_detuning(det)).unwrap();
            let gamma = s.decay_e;
            let expected = gamma * gamma / (gamma * gamma + 4.0 * det * det);
            assert_relative_eq!(a, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn ideal_eit_is_transparent() {
        let s = LadderSystem {
            probe_rabi: mhz(0.1),
            coupling_rabi: mhz(16.1),
            decay_r1: 0.0,
            dephasing: 0.0,
            ..two_level(0.0)
        };
        assert!(probe_absorption(&s).unwrap().abs() < 1e-3);
    }

    #[test]
    fn eit_peak_at_resonance() {
        let s = LadderSystem::cesium_ladder();
        let grid: Vec<f64> = (-40..=40).map(|k| mhz(0.25 * k as f64)).collect();
        let a = probe_spectrum(&s, &grid).unwrap();
        let best = (0..a.len()).min_by(|&x, &y| a[x].total_cmp(&a[y])).unwrap();
        assert_eq!(grid[best], 0.0);
        for k in 0..grid.len() {
            assert!((a[k] - a[grid.len() - 1 - k]).abs() < 1e-8);
        }
    }

    /// Weak probe, slow Rydberg dephasing: the regime where the windows sit
    /// at the dressed-state energies.
    fn coherent_probe(mw: f64) -> LadderSystem {
        LadderSystem {
            dephasing: mhz(0.01),
            ..LadderSystem::cesium_ladder()
        }
        .with_probe_rabi(mhz(0.2))
        .with_mw_rabi(mw)
    }

    #[test]
    fn strong_mw_splits_window() {
        let mw = mhz(50.0);
        let s = coherent_probe(mw);
        let center = probe_absorption(&s).unwrap();
        let window = probe_absorption(&s.with_probe_detuning(0.5 * mw)).unwrap();
        let near = probe_absorption(&s.with_probe_detuning(mhz(2.0))).unwrap();
        assert!(center > near, "absorption peaks at zero detuning");
        assert!(window < 0.05 * center);
        let split = at_splitting(&s, &ProbeSweep::symmetric(0.75 * mw, 1501)).unwrap();
        assert_relative_eq!(split, 50e6, max_relative = 0.02);
        let doubled = at_splitting(
            &coherent_probe(2.0 * mw),
            &ProbeSweep::symmetric(1.5 * mw, 3001),
        )
        .unwrap();
        assert_relative_eq!(doubled / split, 2.0, max_relative = 0.02);
    }

    #[test]
    fn zero_mw_is_outside_regime() {
        let s = LadderSystem::cesium_ladder();
        assert!(matches!(
            at_splitting(&s, &ProbeSweep::symmetric(mhz(40.0), 201)),
            Err(EitError::Regime(_))
        ));
    }

    #[test]
    fn one_sided_sweep_finds_one_peak() {
        let s = coherent_probe(mhz(50.0));
        let sweep = ProbeSweep {
            start: mhz(5.0),
            stop: mhz(40.0),
            points: 351,
        };
        assert!(matches!(at_splitting(&s, &sweep), Err(EitError::Regime(_))));
    }

    #[test]
    fn all_zero_system_is_degenerate() {
        let s = LadderSystem {
            probe_rabi: 0.0,
            coupling_rabi: 0.0,
            mw_rabi: 0.0,
            probe_detuning: 0.0,
            coupling_detuning: 0.0,
            mw_detuning: 0.0,
            decay_e: 0.0,
            decay_r1: 0.0,
            decay_r2: 0.0,
            dephasing: 0.0,
        };
        assert_eq!(steady_state(&s), Err(EitError::Degenerate));
    }

    #[test]
    fn disconnected_level_is_degenerate() {
        // r1 neither driven nor decaying: two stationary states
        let s = LadderSystem {
            decay_r1: 0.0,
            dephasing: 0.0,
            ..two_level(mhz(1.0))
        };
        assert_eq!(steady_state(&s), Err(EitError::Degenerate));
    }

    #[test]
    fn negative_rates_rejected() {
        let s = LadderSystem {
            decay_r2: -1.0,
            ..LadderSystem::cesium_ladder()
        };
        assert!(matches!(
            steady_state(&s),
            Err(EitError::InvalidParameter(_))
        ));
    }

    #[test]
    fn gain_step_convergence() {
        let s = LadderSystem::cesium_ladder().with_mw_rabi(mhz(4.0));
        let h = gain_step(s.mw_rabi);
        let g1 = heterodyne_gain_with_step(&s, h).unwrap();
        let g2 = heterodyne_gain_with_step(&s, 0.5 * h).unwrap();
        assert_relative_eq!(g1, g2, max_relative = 0.01);
        assert_eq!(heterodyne_gain(&s).unwrap(), g1);
    }

    #[test]
    fn beat_amplitude_is_linear() {
        let s = LadderSystem::cesium_ladder().with_mw_rabi(mhz(4.0));
        let sig = 1e-2 * s.mw_rabi;
        let a1 = beat_amplitude(&s, sig).unwrap();
        let a2 = beat_amplitude(&s, sig / 10.0).unwrap();
        assert_relative_eq!(a1 / a2, 10.0, max_relative = 0.01);
        let gain = heterodyne_gain(&s).unwrap();
        assert_relative_eq!(a2, gain * sig / 10.0, max_relative = 0.01);
    }

    #[test]
    fn lo_requires_positive_rabi() {
        assert!(heterodyne_gain(&LadderSystem::cesium_ladder()).is_err());
        assert!(beat_amplitude(&LadderSystem::cesium_ladder(), 1.0).is_err());
    }
}
