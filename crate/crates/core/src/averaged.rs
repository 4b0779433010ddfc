//! Averaged analysis of the closed loop.
//!
//! The buffer signal is averaged over the spike dynamics at frozen core
//! temperatures, giving the curve `ũ(T)`. Its zero is the set point
//! `T_set`, its slope in a window around `T_set` (times the DC gain of the
//! actuation path) is `c`, and the feedforward gain that removes the ambient
//! influence on the equilibrium is `K* = α / c`.
//!
//! With `e = T − T_set` and `d = T_amb − T_set` the averaged error obeys
//!
//! ```text
//! ė = −α e + α d − B̃(e) − K B̃(d),   B̃(y) = b_gain · ũ(T_set + y)
//! ```

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{self, CircuitParams};
use crate::hybrid::{solve, HybridSystem, SolveError, SolverConfig};
use crate::models::{idx, AmbientProfile, InitialConditions, ModelB, ModelError, ThermoModel};

/// Default fitting window around the set point, °C.
pub const LINEAR_WINDOW: (f64, f64) = (30.0, 50.0);

/// Hold time per temperature used by default, s.
pub const DEFAULT_HOLD: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AveragedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid temperature grid: {0}")]
    InvalidGrid(String),
    #[error("hold time {0} s must be positive")]
    InvalidHold(f64),
    #[error("ũ(T) has no zero crossing over the sampled range")]
    NoCrossing,
    #[error("ũ(T) changes sign {count} times; expected exactly one")]
    MultipleCrossings { count: usize },
    #[error("only {found} samples in window [{lo}, {hi}] °C, need at least 5")]
    InsufficientSamples { found: usize, lo: f64, hi: f64 },
    #[error("fitted slope c = {0} is not positive")]
    NonPositiveSlope(f64),
    #[error("no NTC B value in [{lo}, {hi}] K places the set point at {target} °C")]
    CalibrationFailed { target: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UTildeSample {
    pub temperature: f64,
    pub u_tilde: f64,
}

/// Number of relative warm/cold start phases averaged per temperature.
pub const PHASES: usize = 8;

/// Averaged feedback signal at one frozen core temperature.
///
/// The mean of `u_fb` over a periodic spike pattern depends on the relative
/// phase of the warm and cold neurons, and near the set point that phase
/// drifts too slowly to average out within the hold. The result is
/// therefore averaged over [`PHASES`] evenly spaced start phases.
pub fn u_tilde_at(params: &CircuitParams, t: f64, hold: f64, solver: &SolverConfig) -> Result<f64, AveragedError> {
    let mut sum = 0.0;
    for k in 0..PHASES {
        sum += u_tilde_with_phase(params, t, hold, solver, (k as f64 + 0.5) / PHASES as f64)?;
    }
    Ok(sum / PHASES as f64)
}

/// Averaged feedback signal with the cold neuron started `phase ∈ [0, 1)`
/// of its charging ramp ahead of the warm neuron.
pub fn u_tilde_with_phase(
    params: &CircuitParams,
    t: f64,
    hold: f64,
    solver: &SolverConfig,
    phase: f64,
) -> Result<f64, AveragedError> {
    if !(hold > 0.0 && hold.is_finite()) {
        return Err(AveragedError::InvalidHold(hold));
    }
    let p = CircuitParams {
        k: 0.0,
        ..params.clone()
    };
    let model = ModelB::new(p.clone(), AmbientProfile::constant(t))?.with_frozen_temperature();
    let mid = p.v_off + phase * (p.v_on - p.v_off);
    let ic = InitialConditions {
        temperature: t,
        neuron_voltages: Some([p.v_off, mid, p.v_off, mid]),
        ..InitialConditions::default()
    };
    let cfg = SolverConfig {
        sample_interval: None,
        ..solver.clone().with_t_end(hold)
    };
    let arc = solve(&model, &model.initial_state(&ic), &cfg)?;
    let u = |x: &[f64]| circuit::control_signal(x[idx::V_FB], &p);
    Ok(arc
        .time_average(0.5 * hold, hold, u)
        .expect("arc spans the hold window"))
}

/// `ũ(T)` over a sorted grid. Grid points are simulated concurrently; the
/// result is in grid order.
pub fn estimate_u_tilde(
    params: &CircuitParams,
    grid: &[f64],
    hold: f64,
    solver: &SolverConfig,
) -> Result<Vec<UTildeSample>, AveragedError> {
    if grid.is_empty() {
        return Err(AveragedError::InvalidGrid("empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AveragedError::InvalidGrid(
            "temperatures must be strictly increasing".into(),
        ));
    }
    grid.par_iter()
        .map(|&t| {
            u_tilde_at(params, t, hold, solver).map(|u_tilde| UTildeSample {
                temperature: t,
                u_tilde,
            })
        })
        .collect()
}

/// Uniform grid `lo, lo + step, …` up to `hi` (inclusive within rounding).
pub fn temperature_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, AveragedError> {
    if !(step > 0.0) || !(hi > lo) {
        return Err(AveragedError::InvalidGrid(format!(
            "need lo < hi and step > 0, got [{lo}, {hi}] step {step}"
        )));
    }
    if step > (hi - lo) * (1.0 + 1e-9) {
        return Err(AveragedError::InvalidGrid(format!(
            "step {step} exceeds range {}",
            hi - lo
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + k as f64 * step).collect())
}

/// Indices `i` where the sign changes between sample `i` and the next
/// nonzero sample.
fn sign_changes(samples: &[UTildeSample]) -> Vec<(usize, usize)> {
    let nonzero: Vec<usize> = (0..samples.len()).filter(|&i| samples[i].u_tilde != 0.0).collect();
    nonzero
        .windows(2)
        .filter(|w| samples[w[0]].u_tilde.signum() != samples[w[1]].u_tilde.signum())
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Zero crossing of the sampled curve by linear interpolation.
pub fn find_t_set(samples: &[UTildeSample]) -> Result<f64, AveragedError> {
    let changes = sign_changes(samples);
    match changes.as_slice() {
        [] => samples
            .iter()
            .find(|s| s.u_tilde == 0.0)
            .map(|s| s.temperature)
            .ok_or(AveragedError::NoCrossing),
        [(i, k)] => {
            let (a, b) = (samples[*i], samples[*k]);
            // a zero sample between the two is the crossing itself
            if let Some(z) = samples[*i + 1..*k].iter().find(|s| s.u_tilde == 0.0) {
                return Ok(z.temperature);
            }
            Ok(a.temperature - a.u_tilde * (b.temperature - a.temperature) / (b.u_tilde - a.u_tilde))
        }
        _ => Err(AveragedError::MultipleCrossings { count: changes.len() }),
    }
}

/// Refines the crossing found on `samples` by bisection with fresh
/// simulations until the bracket is narrower than `tolerance`.
pub fn refine_t_set(
    params: &CircuitParams,
    samples: &[UTildeSample],
    hold: f64,
    solver: &SolverConfig,
    tolerance: f64,
) -> Result<f64, AveragedError> {
    let guess = find_t_set(samples)?;
    let changes = sign_changes(samples);
    let Some(&(i, k)) = changes.first() else {
        return Ok(guess);
    };
    let (mut lo, mut hi) = (samples[i], samples[k]);
    while hi.temperature - lo.temperature > tolerance {
        let mid = 0.5 * (lo.temperature + hi.temperature);
        let u = u_tilde_at(params, mid, hold, solver)?;
        let s = UTildeSample {
            temperature: mid,
            u_tilde: u,
        };
        if u == 0.0 {
            return Ok(mid);
        }
        if u.signum() == lo.u_tilde.signum() {
            lo = s;
        } else {
            hi = s;
        }
    }
    Ok(lo.temperature - lo.u_tilde * (hi.temperature - lo.temperature) / (hi.u_tilde - lo.u_tilde))
}

/// Full pipeline: sweep, refine the crossing to `±0.01 °C`, fit `c` over
/// `window`.
pub fn fit_averaged_model(
    params: &CircuitParams,
    solver: &SolverConfig,
    grid: &[f64],
    hold: f64,
    window: (f64, f64),
) -> Result<AveragedModel, AveragedError> {
    let samples = estimate_u_tilde(params, grid, hold, solver)?;
    let t_set = refine_t_set(params, &samples, hold, solver, 0.01)?;
    AveragedModel::from_samples(params, samples, window, Some(t_set))
}

/// Least-squares slope of `ũ` over `window`, scaled by `b_gain`.
pub fn fit_slope_c(samples: &[UTildeSample], window: (f64, f64), b_gain: f64) -> Result<f64, AveragedError> {
    let (lo, hi) = window;
    let pts: Vec<_> = samples
        .iter()
        .filter(|s| s.temperature >= lo && s.temperature <= hi)
        .collect();
    if pts.len() < 5 {
        return Err(AveragedError::InsufficientSamples {
            found: pts.len(),
            lo,
            hi,
        });
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|s| s.temperature).sum::<f64>() / n;
    let mean_u = pts.iter().map(|s| s.u_tilde).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for s in &pts {
        let dt = s.temperature - mean_t;
        sxy += dt * (s.u_tilde - mean_u);
        sxx += dt * dt;
    }
    Ok(b_gain * sxy / sxx)
}

/// `K = α / c`.
pub fn feedforward_gain(alpha: f64, c: f64) -> f64 {
    debug_assert!(c > 0.0);
    alpha / c
}

/// Actuation `B̃` used by the averaged error dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Actuation {
    /// Interpolated from the sampled curve, extrapolated linearly beyond it.
    Sampled,
    /// `B̃(y) = c y`.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedModel {
    pub samples: Vec<UTildeSample>,
    pub t_set: f64,
    pub c: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub b_gain: f64,
    pub k_star: f64,
    pub actuation: Actuation,
}

impl AveragedModel {
    /// Builds the model from a sampled curve. `t_set` overrides the
    /// interpolated crossing (e.g. after refinement).
    pub fn from_samples(
        params: &CircuitParams,
        samples: Vec<UTildeSample>,
        window: (f64, f64),
        t_set: Option<f64>,
    ) -> Result<Self, AveragedError> {
        if samples.windows(2).any(|w| !(w[1].temperature > w[0].temperature)) {
            return Err(AveragedError::InvalidGrid(
                "temperatures must be strictly increasing".into(),
            ));
        }
        let crossing = find_t_set(&samples)?;
        let b_gain = circuit::dc_actuation_gain(params);
        let c = fit_slope_c(&samples, window, b_gain)?;
        if !(c > 0.0) {
            return Err(AveragedError::NonPositiveSlope(c));
        }
        Ok(Self {
            t_set: t_set.unwrap_or(crossing),
            c,
            gamma: 2.0 / (params.c_fb * params.r10),
            alpha: params.alpha,
            b_gain,
            k_star: feedforward_gain(params.alpha, c),
            samples,
            actuation: Actuation::Sampled,
        })
    }

    /// Same model with `B̃` replaced by its linear fit.
    pub fn linearized(&self) -> Self {
        Self {
            actuation: Actuation::Linear,
            ..self.clone()
        }
    }

    /// Whether `ũ` is non-decreasing over the samples.
    pub fn is_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].u_tilde >= w[0].u_tilde)
    }

    /// `ũ(T)` by linear interpolation; the flag is set when `T` lies outside
    /// the sampled range and the value was extrapolated.
    pub fn u_tilde(&self, t: f64) -> (f64, bool) {
        let s = &self.samples;
        if s.len() == 1 {
            return (s[0].u_tilde, t != s[0].temperature);
        }
        let outside = t < s[0].temperature || t > s[s.len() - 1].temperature;
        let k = s.partition_point(|p| p.temperature <= t).clamp(1, s.len() - 1);
        let (a, b) = (s[k - 1], s[k]);
        let w = (t - a.temperature) / (b.temperature - a.temperature);
        (a.u_tilde + w * (b.u_tilde - a.u_tilde), outside)
    }

    /// `B̃(y)` for a deviation `y` from the set point.
    pub fn actuation(&self, y: f64) -> f64 {
        match self.actuation {
            Actuation::Linear => self.c * y,
            Actuation::Sampled => self.b_gain * self.u_tilde(self.t_set + y).0,
        }
    }

    /// Equilibrium error of the linearized dynamics for ambient offset `d`.
    pub fn linear_equilibrium(&self, d: f64, k: f64) -> f64 {
        (self.alpha - k * self.c) * d / (self.alpha + self.c)
    }

    /// Writes the table as `T_celsius,u_tilde_volts`.
    pub fn write_table<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T_celsius", "u_tilde_volts"])?;
        for s in &self.samples {
            w.write_record([s.temperature.to_string(), s.u_tilde.to_string()])?;
        }
        w.flush()
    }

    /// Writes the fitted constants as `key = value` lines.
    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "T_set = {}", self.t_set)?;
        writeln!(out, "c = {}", self.c)?;
        writeln!(out, "K_star = {}", self.k_star)?;
        writeln!(out, "gamma = {}", self.gamma)?;
        writeln!(out, "b_gain = {}", self.b_gain)?;
        writeln!(out, "alpha = {}", self.alpha)
    }
}

/// Right-hand side of the averaged error dynamics; with feedforward the
/// gain is `K*`.
pub fn averaged_error_dynamics(e: f64, d: f64, m: &AveragedModel, with_ff: bool) -> f64 {
    error_rate(e, d, m, if with_ff { m.k_star } else { 0.0 })
}

/// `ė` for an arbitrary feedforward gain `k`.
pub fn error_rate(e: f64, d: f64, m: &AveragedModel, k: f64) -> f64 {
    let ff = if k != 0.0 { k * m.actuation(d) } else { 0.0 };
    -m.alpha * e + m.alpha * d - m.actuation(e) - ff
}

/// The averaged closed loop as a jump-free system with state `(T, t)`.
#[derive(Debug, Clone)]
pub struct AveragedPlant {
    pub model: AveragedModel,
    pub ambient: AmbientProfile,
    pub k: f64,
}

impl HybridSystem for AveragedPlant {
    fn name(&self) -> &str {
        "averaged"
    }

    fn dimension(&self) -> usize {
        2
    }

    fn flow(&self, x: &[f64], dx: &mut [f64]) {
        let t_set = self.model.t_set;
        let d = self.ambient.at(x[1]) - t_set;
        dx[0] = error_rate(x[0] - t_set, d, &self.model, self.k);
        dx[1] = 1.0;
    }

    fn jump_condition_count(&self) -> usize {
        0
    }

    fn jump_guard(&self, _k: usize, _x: &[f64]) -> f64 {
        unreachable!("averaged plant has no jumps")
    }

    fn jump(&self, _k: usize, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

/// Integrates the averaged error dynamics with classical RK4 until the
/// derivative falls below `tol` (or `t_max` is reached) and returns the
/// final error.
pub fn averaged_steady_state(e0: f64, d: f64, m: &AveragedModel, with_ff: bool, tol: f64, t_max: f64) -> f64 {
    let f = |e: f64| averaged_error_dynamics(e, d, m, with_ff);
    let h = 0.1 / (m.alpha + m.c).max(1e-9);
    let mut e = e0;
    let mut t = 0.0;
    while t < t_max {
        let k1 = f(e);
        if k1.abs() < tol {
            break;
        }
        let k2 = f(e + 0.5 * h * k1);
        let k3 = f(e + 0.5 * h * k2);
        let k4 = f(e + h * k3);
        e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    e
}

/// Adjusts the NTC `B` constant so the warm/cold gate voltages coincide at
/// `target` °C. Returns the calibrated parameters.
pub fn calibrate_ntc_b(params: &CircuitParams, target: f64) -> Result<CircuitParams, AveragedError> {
    let (lo, hi) = (1000.0, 10000.0);
    let with_b = |b: f64| {
        let mut p = params.clone();
        p.ntc.b = b;
        p
    };
    // warm minus cold gate voltage at the target; decreasing in B
    let gap = |b: f64| {
        let p = with_b(b);
        circuit::gate_voltage_warm(target, &p) - circuit::gate_voltage_cold(target, &p)
    };
    let b = circuit::bisect(gap, lo, hi, 1e-9).ok_or(AveragedError::CalibrationFailed { target, lo, hi })?;
    Ok(with_b(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(slope: f64, zero: f64) -> Vec<UTildeSample> {
        (0..=80)
            .map(|k| UTildeSample {
                temperature: k as f64,
                u_tilde: slope * (k as f64 - zero),
            })
            .collect()
    }

    #[test]
    fn crossing_by_interpolation() {
        let s = [
            UTildeSample {
                temperature: 39.0,
                u_tilde: -0.1,
            },
            UTildeSample {
                temperature: 40.0,
                u_tilde: 0.1,
            },
        ];
        assert_relative_eq!(find_t_set(&s).unwrap(), 39.5, max_relative = 1e-15);
    }

    #[test]
    fn crossing_errors() {
        let flat = line(0.0, 0.0)
            .into_iter()
            .map(|s| UTildeSample { u_tilde: 1.0, ..s })
            .collect::<Vec<_>>();
        assert_eq!(find_t_set(&flat), Err(AveragedError::NoCrossing));
        let mut wiggle = line(0.1, 40.0);
        wiggle[10].u_tilde = 0.5;
        assert!(matches!(
            find_t_set(&wiggle),
            Err(AveragedError::MultipleCrossings { count: 3 })
        ));
    }

    #[test]
    fn slope_of_exact_line() {
        assert_relative_eq!(
            fit_slope_c(&line(0.1, 40.0), (30.0, 50.0), 20.0).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            fit_slope_c(&line(0.1, 40.0), (30.0, 33.0), 20.0),
            Err(AveragedError::InsufficientSamples { found: 4, .. })
        ));
    }

    #[test]
    fn gain_values() {
        assert_relative_eq!(feedforward_gain(2.0, 2.222), 0.9, max_relative = 1e-3);
        assert_eq!(feedforward_gain(0.0, 1.3), 0.0);
        assert_eq!(feedforward_gain(1.7, 1.7), 1.0);
    }

    #[test]
    fn equilibria_of_linear_dynamics() {
        let p = CircuitParams::default();
        let m = AveragedModel::from_samples(&p, line(2.0 / 0.9 / 20.0, 40.0), LINEAR_WINDOW, None).unwrap();
        assert_relative_eq!(m.t_set, 40.0, epsilon = 1e-12);
        assert_relative_eq!(m.k_star, 0.9, max_relative = 1e-12);
        assert_eq!(averaged_error_dynamics(0.0, 0.0, &m, false), 0.0);
        let e = averaged_steady_state(0.0, 10.0, &m, false, 1e-12, 100.0);
        assert_relative_eq!(e, 4.7368, epsilon = 1e-4);
        let e = averaged_steady_state(3.0, 10.0, &m, true, 1e-12, 100.0);
        assert!(e.abs() < 1e-9);
    }

    #[test]
    fn grid_construction() {
        assert_eq!(temperature_grid(0.0, 80.0, 1.0).unwrap().len(), 81);
        assert!(temperature_grid(0.0, 1.0, 2.0).is_err());
        assert!(temperature_grid(1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn calibration_hits_target() {
        let p = calibrate_ntc_b(&CircuitParams::default(), 39.84).unwrap();
        let t = circuit::gate_equality_temperature(&p, 0.0, 100.0).unwrap();
        assert!((t - 39.84).abs() < 1e-6);
    }

    #[test]
    fn u_tilde_signs_around_the_set_point() {
        let p = CircuitParams::default();
        let cfg = SolverConfig::default();
        let cold = u_tilde_at(&p, 30.0, 4.0, &cfg).unwrap();
        let warm = u_tilde_at(&p, 50.0, 4.0, &cfg).unwrap();
        assert!(cold < -0.05 && warm > 0.05, "{cold} {warm}");
    }
}
