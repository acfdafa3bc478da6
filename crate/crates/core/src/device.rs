// SPDX-License-Identifier: Apache-2.0

//! Current-controlled TEAM memristor model.
//!
//! The state `x` moves only when the device current leaves the dead zone
//! `(i_on, i_off)`:
//!
//! ```text
//! dx/dt = k_off * (i/i_off - 1)^alpha_off * f_off(x)   i >= i_off
//!       = 0                                            i_on < i < i_off
//!       = k_on  * (i/i_on  - 1)^alpha_on  * f_on(x)    i <= i_on
//! ```
//!
//! with exponential windows `f_off(x) = exp(-exp((x - a_off)/w_c))`,
//! `f_on(x) = exp(-exp(-(x - a_on)/w_c))` and a linear resistance map
//! between `r_on` at `x_on` and `r_off` at `x_off`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of integration steps per waveform.
pub const DEFAULT_STEPS: usize = 10_000;

/// Largest state move allowed in one explicit step, as a fraction of `x_off - x_on`.
pub const MAX_STEP_FRACTION: f64 = 0.01;

/// `k_on / k_off` for the calibrated preset: ON switching is ten times
/// slower than OFF switching at equal overdrive.
pub const PAPER_ON_OFF_RATE_RATIO: f64 = -0.1;

/// `k_off` found by [`calibrate_k_off`] for the calibrated preset
/// (1.2 mA, 100 us single-cycle sinusoid, 138 -> 336 Ohm).
pub const PAPER_K_OFF: f64 = 6.537_342_142_391_238e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Window {
    /// No clamping beyond the hard bounds.
    None,
    Exponential { a_on: f64, a_off: f64, w_c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamParams {
    /// m/s, negative.
    pub k_on: f64,
    /// m/s, positive.
    pub k_off: f64,
    pub alpha_on: f64,
    pub alpha_off: f64,
    /// A, negative.
    pub i_on: f64,
    /// A, positive.
    pub i_off: f64,
    /// m.
    pub x_on: f64,
    /// m.
    pub x_off: f64,
    pub r_on: f64,
    pub r_off: f64,
    pub window: Window,
}

impl TeamParams {
    /// Uncalibrated device: bounds and thresholds only, rates from `k_off`.
    pub fn paper_with_k_off(k_off: f64) -> Self {
        let x_on = 0.0;
        let x_off = 3e-9;
        Self {
            k_on: PAPER_ON_OFF_RATE_RATIO * k_off,
            k_off,
            alpha_on: 3.0,
            alpha_off: 3.0,
            i_on: -50e-6,
            i_off: 50e-6,
            x_on,
            x_off,
            r_on: 100.0,
            r_off: 500.0,
            window: Window::Exponential {
                a_on: x_on,
                a_off: x_off,
                w_c: 1e-10,
            },
        }
    }

    /// The calibrated corruption preset.
    pub fn paper() -> Self {
        Self::paper_with_k_off(PAPER_K_OFF)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.i_on < 0.0
            && 0.0 < self.i_off
            && self.x_on < self.x_off
            && 0.0 < self.r_on
            && self.r_on < self.r_off
            && self.alpha_on >= 1.0
            && self.alpha_off >= 1.0
            && self.k_on <= 0.0
            && self.k_off >= 0.0;
        if !ok {
            return Err(Error::Domain(format!("inconsistent TEAM parameters: {self:?}")));
        }
        if let Window::Exponential { w_c, .. } = self.window {
            if w_c.is_nan() || w_c <= 0.0 {
                return Err(Error::Domain("window width w_c must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn span(&self) -> f64 {
        self.x_off - self.x_on
    }

    fn f_off(&self, x: f64) -> f64 {
        match self.window {
            Window::None => 1.0,
            Window::Exponential { a_off, w_c, .. } => (-((x - a_off) / w_c).exp()).exp(),
        }
    }

    fn f_on(&self, x: f64) -> f64 {
        match self.window {
            Window::None => 1.0,
            Window::Exponential { a_on, w_c, .. } => (-(-(x - a_on) / w_c).exp()).exp(),
        }
    }

    /// State whose resistance is `r` under the linear map.
    pub fn state_for_resistance(&self, r: f64) -> Result<TeamState> {
        if !(self.r_on..=self.r_off).contains(&r) {
            return Err(Error::Domain(format!(
                "resistance {r} outside [{}, {}]",
                self.r_on, self.r_off
            )));
        }
        Ok(TeamState {
            x: self.x_on + (r - self.r_on) / (self.r_off - self.r_on) * self.span(),
        })
    }
}

/// Internal state variable, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamState {
    pub x: f64,
}

pub fn team_state_derivative(params: &TeamParams, state: TeamState, i: f64) -> f64 {
    if i >= params.i_off {
        params.k_off * (i / params.i_off - 1.0).powf(params.alpha_off) * params.f_off(state.x)
    } else if i <= params.i_on {
        params.k_on * (i / params.i_on - 1.0).powf(params.alpha_on) * params.f_on(state.x)
    } else {
        0.0
    }
}

pub fn team_resistance(params: &TeamParams, state: TeamState) -> f64 {
    params.r_on + (params.r_off - params.r_on) * (state.x - params.x_on) / params.span()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveformShape {
    /// `peak * sin(2 pi t / T)` per cycle.
    Sinusoid,
    /// Bidirectional triangle: 0 -> +peak -> 0 -> -peak -> 0 per cycle.
    Triangular,
    /// Constant `peak` for the whole duration, zero afterwards.
    Rectangular,
}

/// Fault drive `i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentWaveform {
    pub shape: WaveformShape,
    pub peak: f64,
    pub duration: f64,
    pub dt: f64,
    pub cycles: u32,
}

impl CurrentWaveform {
    pub fn new(shape: WaveformShape, peak: f64, duration: f64, dt: f64) -> Result<Self> {
        let w = Self {
            shape,
            peak,
            duration,
            dt,
            cycles: 1,
        };
        w.validate()?;
        Ok(w)
    }

    /// Single cycle sampled with [`DEFAULT_STEPS`] steps.
    pub fn with_default_step(shape: WaveformShape, peak: f64, duration: f64) -> Result<Self> {
        Self::new(shape, peak, duration, duration / DEFAULT_STEPS as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Input(format!("waveform duration must be > 0, got {}", self.duration)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Input(format!("time step must be > 0, got {}", self.dt)));
        }
        if self.dt > self.duration / 100.0 * (1.0 + 1e-12) {
            return Err(Error::Input(format!(
                "time step {} exceeds duration/100 = {}",
                self.dt,
                self.duration / 100.0
            )));
        }
        if !self.peak.is_finite() {
            return Err(Error::Input("waveform peak must be finite".into()));
        }
        if self.cycles == 0 {
            return Err(Error::Input("waveform needs at least one cycle".into()));
        }
        Ok(())
    }

    pub fn current_at(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.duration {
            return 0.0;
        }
        let period = self.duration / self.cycles as f64;
        let phase = (t / period).fract();
        match self.shape {
            WaveformShape::Sinusoid => self.peak * (std::f64::consts::TAU * t / period).sin(),
            WaveformShape::Triangular => {
                let p = 4.0 * phase;
                let unit = if p < 1.0 {
                    p
                } else if p < 3.0 {
                    2.0 - p
                } else {
                    p - 4.0
                };
                self.peak * unit
            }
            WaveformShape::Rectangular => {
                if t < self.duration {
                    self.peak
                } else {
                    0.0
                }
            }
        }
    }

    fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub i: f64,
    pub v: f64,
    pub x: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub final_state: TeamState,
}

impl Trajectory {
    pub fn initial_resistance(&self) -> f64 {
        self.points.first().map_or(f64::NAN, |p| p.r)
    }

    pub fn final_resistance(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.r)
    }

    /// Area enclosed by the I-V curve (shoelace over the sampled points).
    pub fn loop_area(&self) -> f64 {
        let pts = &self.points;
        let mut twice = 0.0;
        for w in pts.windows(2) {
            twice += w[0].i * w[1].v - w[1].i * w[0].v;
        }
        if let (Some(a), Some(b)) = (pts.last(), pts.first()) {
            twice += a.i * b.v - b.i * a.v;
        }
        0.5 * twice.abs()
    }
}

/// Fixed-step explicit Euler with a hard clamp to `[x_on, x_off]`.
pub fn integrate_waveform(
    params: &TeamParams,
    state: TeamState,
    waveform: &CurrentWaveform,
) -> Result<Trajectory> {
    params.validate()?;
    waveform.validate()?;
    if !(params.x_on..=params.x_off).contains(&state.x) {
        return Err(Error::Domain(format!(
            "initial state {} outside [{}, {}]",
            state.x, params.x_on, params.x_off
        )));
    }
    let n = waveform.steps();
    let max_move = MAX_STEP_FRACTION * params.span();
    let mut x = state.x;
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * waveform.dt;
        let i = waveform.current_at(t);
        let r = team_resistance(params, TeamState { x });
        points.push(TrajectoryPoint { t, i, v: r * i, x, r });
        if k == n {
            break;
        }
        let dx = team_state_derivative(params, TeamState { x }, i) * waveform.dt;
        if dx.abs() > max_move {
            return Err(Error::StepTooCoarse {
                fraction: dx.abs() / params.span(),
                t,
            });
        }
        x = (x + dx).clamp(params.x_on, params.x_off);
    }
    Ok(Trajectory {
        points,
        final_state: TeamState { x },
    })
}

/// Bidirectional sinusoidal current sweep; returns the I-V loop.
pub fn hysteresis_sweep(
    params: &TeamParams,
    initial: TeamState,
    amplitude: f64,
    period: f64,
    cycles: u32,
) -> Result<Trajectory> {
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(Error::Input(format!("sweep amplitude must be > 0, got {amplitude}")));
    }
    if cycles == 0 {
        return Err(Error::Input("sweep needs at least one cycle".into()));
    }
    let duration = period * cycles as f64;
    let waveform = CurrentWaveform {
        shape: WaveformShape::Sinusoid,
        peak: amplitude,
        duration,
        dt: period / DEFAULT_STEPS as f64,
        cycles,
    };
    waveform.validate()?;
    integrate_waveform(params, initial, &waveform)
}

/// One-dimensional search for `k_off` (with `k_on` tied to it by
/// [`PAPER_ON_OFF_RATE_RATIO`]) such that `waveform` takes the device from
/// `r_start` to `r_target`.
///
/// Bisection in `log(k_off)` inside the first bracket that crosses the
/// target. Steps that trip the accuracy guard count as overshoot.
pub fn calibrate_k_off(
    waveform: &CurrentWaveform,
    r_start: f64,
    r_target: f64,
) -> Result<f64> {
    let probe = TeamParams::paper_with_k_off(1.0);
    let start = probe.state_for_resistance(r_start)?;
    if !(r_start < r_target && r_target < probe.r_off) {
        return Err(Error::Domain(format!(
            "target {r_target} must lie in ({r_start}, {})",
            probe.r_off
        )));
    }
    let final_r = |k: f64| -> Option<f64> {
        let p = TeamParams::paper_with_k_off(k);
        integrate_waveform(&p, start, waveform)
            .ok()
            .map(|t| t.final_resistance())
    };
    // Bracket by doubling from a negligible rate: past saturation the
    // reverse half-cycle makes the response non-monotone, so the first
    // crossing is the one we want.
    let mut lo = 1e-18_f64.ln();
    if final_r(lo.exp()).is_some_and(|r| r >= r_target) {
        return Err(Error::Domain("target reached even at the smallest rate".into()));
    }
    let mut hi = lo;
    loop {
        hi += std::f64::consts::LN_2;
        match final_r(hi.exp()) {
            Some(r) if r < r_target => lo = hi,
            _ => break,
        }
        if hi > 0.0 {
            return Err(Error::Domain("target not reachable with this waveform".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match final_r(mid.exp()) {
            Some(r) if r < r_target => lo = mid,
            _ => hi = mid,
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let k = (0.5 * (lo + hi)).exp();
    match final_r(k) {
        Some(r) if (r - r_target).abs() / r_target < 1e-6 => Ok(k),
        other => Err(Error::Domain(format!(
            "calibration did not converge: best final resistance {other:?}"
        ))),
    }
}

/// The 1.2 mA, 100 us single-cycle sinusoid used to corrupt a cell.
pub fn paper_corruption_waveform() -> CurrentWaveform {
    CurrentWaveform::with_default_step(WaveformShape::Sinusoid, 1.2e-3, 100e-6)
        .expect("static waveform is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mid(p: &TeamParams) -> TeamState {
        TeamState {
            x: 0.5 * (p.x_on + p.x_off),
        }
    }

    #[test]
    fn dead_zone_and_threshold() {
        let p = TeamParams::paper();
        let s = mid(&p);
        assert_eq!(team_state_derivative(&p, s, 0.0), 0.0);
        assert_eq!(team_state_derivative(&p, s, 49e-6), 0.0);
        assert_eq!(team_state_derivative(&p, s, -49e-6), 0.0);
        assert_eq!(team_state_derivative(&p, s, p.i_off), 0.0);
        assert_eq!(team_state_derivative(&p, s, p.i_on), 0.0);
    }

    #[test]
    fn twice_threshold_is_k_off_times_window() {
        let p = TeamParams::paper();
        let s = mid(&p);
        let Window::Exponential { a_off, w_c, .. } = p.window else {
            unreachable!()
        };
        let expected = p.k_off * 1f64.powf(p.alpha_off) * (-((s.x - a_off) / w_c).exp()).exp();
        assert_eq!(team_state_derivative(&p, s, 2.0 * p.i_off), expected);
        assert!(team_state_derivative(&p, s, 2.0 * p.i_on) < 0.0);
    }

    #[test]
    fn resistance_map_endpoints() {
        let p = TeamParams::paper();
        assert_eq!(team_resistance(&p, TeamState { x: p.x_on }), p.r_on);
        assert_eq!(team_resistance(&p, TeamState { x: p.x_off }), p.r_off);
        assert!((team_resistance(&p, mid(&p)) - 0.5 * (p.r_on + p.r_off)).abs() < 1e-12);
        let s = p.state_for_resistance(138.0).unwrap();
        assert!((team_resistance(&p, s) - 138.0).abs() < 1e-9);
        assert!(p.state_for_resistance(50.0).is_err());
    }

    #[test]
    fn waveform_validation() {
        assert!(CurrentWaveform::new(WaveformShape::Sinusoid, 1e-3, 0.0, 1e-9).is_err());
        assert!(CurrentWaveform::new(WaveformShape::Sinusoid, 1e-3, 1e-6, 0.0).is_err());
        assert!(CurrentWaveform::new(WaveformShape::Sinusoid, 1e-3, 1e-6, 1e-7).is_err());
        assert!(CurrentWaveform::new(WaveformShape::Sinusoid, 1e-3, 1e-6, 1e-8).is_ok());
    }

    #[test]
    fn triangle_shape() {
        let w = CurrentWaveform::new(WaveformShape::Triangular, 1.0, 4.0, 0.01).unwrap();
        assert_eq!(w.current_at(0.0), 0.0);
        assert!((w.current_at(1.0) - 1.0).abs() < 1e-12);
        assert!(w.current_at(2.0).abs() < 1e-12);
        assert!((w.current_at(3.0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_amplitude_leaves_state() {
        let p = TeamParams::paper();
        let s0 = p.state_for_resistance(138.0).unwrap();
        let w = CurrentWaveform::with_default_step(WaveformShape::Sinusoid, 0.0, 100e-6).unwrap();
        let t = integrate_waveform(&p, s0, &w).unwrap();
        assert_eq!(t.final_state, s0);
        assert!(t.points.iter().all(|pt| pt.v == 0.0));
    }

    #[test]
    fn coarse_step_is_rejected() {
        let p = TeamParams::paper_with_k_off(PAPER_K_OFF * 1e3);
        let s0 = p.state_for_resistance(138.0).unwrap();
        let w = CurrentWaveform::new(WaveformShape::Rectangular, 1.2e-3, 100e-6, 1e-6).unwrap();
        assert!(matches!(
            integrate_waveform(&p, s0, &w),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    #[test]
    fn calibration_reproduces_frozen_rate() {
        let k = calibrate_k_off(&paper_corruption_waveform(), 138.0, 336.0).unwrap();
        assert!((k - PAPER_K_OFF).abs() / PAPER_K_OFF < 1e-6, "{k:e}");
    }

    #[test]
    fn hysteresis_rejects_nonpositive_amplitude() {
        let p = TeamParams::paper();
        assert!(hysteresis_sweep(&p, mid(&p), 0.0, 1e-4, 1).is_err());
    }
}
