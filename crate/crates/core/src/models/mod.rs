//! Hybrid models of the closed-loop thermoregulator.
//!
//! Both models share the physical state
//! `x = (T, V1, V2, V3, V4, V_fb, V_ff, V_LP)`. Neurons 1 and 2 sense the core
//! temperature (warm, cold) and drive the feedback buffer; neurons 3 and 4
//! sense the ambient temperature (warm, cold) and drive the feedforward
//! buffer.
//!
//! * [`ModelA`] keeps the eight switch states and resolves each spike as a
//!   fast capacitor discharge;
//! * [`ModelB`] drops the switches and treats spikes as instantaneous
//!   resets with a closed-form buffer update.
//!
//! When the ambient temperature varies in time, a clock state with unit
//! flow is appended as the last component so the systems stay autonomous.

mod model_a;
mod model_b;
mod spikes;

pub use model_a::ModelA;
pub use model_b::ModelB;
pub use spikes::{jump_ratio, spike_duration, spike_frequencies, SpikeConstants, SpikeError, SpikeTrains};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{self, CircuitError, CircuitParams, ParamError};
use crate::hybrid::{HybridSystem, JumpRecord};

/// Indices into the physical state.
pub mod idx {
    pub const T: usize = 0;
    pub const V1: usize = 1;
    pub const V_FB: usize = 5;
    pub const V_FF: usize = 6;
    pub const V_LP: usize = 7;
    pub const PHYSICAL: usize = 8;

    /// Index of neuron voltage `i ∈ 1..=4`.
    pub const fn v(i: usize) -> usize {
        i
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("at {temperature} °C: {source}")]
    OperatingRange {
        temperature: f64,
        #[source]
        source: CircuitError,
    },
}

/// Ambient temperature as a function of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AmbientProfile {
    Constant {
        t_amb: f64,
    },
    /// Linear from `start` to `end` over `duration`, constant afterwards.
    Ramp {
        start: f64,
        end: f64,
        duration: f64,
    },
}

impl AmbientProfile {
    pub fn constant(t_amb: f64) -> Self {
        AmbientProfile::Constant { t_amb }
    }

    pub fn at(&self, t: f64) -> f64 {
        match *self {
            AmbientProfile::Constant { t_amb } => t_amb,
            AmbientProfile::Ramp { start, end, duration } => {
                let s = if duration > 0.0 {
                    (t / duration).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                start + s * (end - start)
            }
        }
    }

    pub fn is_time_varying(&self) -> bool {
        matches!(self, AmbientProfile::Ramp { start, end, .. } if start != end)
    }

    fn range(&self) -> (f64, f64) {
        match *self {
            AmbientProfile::Constant { t_amb } => (t_amb, t_amb),
            AmbientProfile::Ramp { start, end, .. } => (start.min(end), start.max(end)),
        }
    }
}

/// Initial physical state. Unset neuron voltages are staggered as
/// `V_off + 0.01·i` so no two neurons start in phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConditions {
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "V")]
    pub neuron_voltages: Option<[f64; 4]>,
    #[serde(rename = "V_fb")]
    pub v_fb: Option<f64>,
    #[serde(rename = "V_ff")]
    pub v_ff: Option<f64>,
    #[serde(rename = "V_LP")]
    pub v_lp: f64,
}

impl Default for InitialConditions {
    fn default() -> Self {
        Self {
            temperature: 30.0,
            neuron_voltages: None,
            v_fb: None,
            v_ff: None,
            v_lp: 0.0,
        }
    }
}

impl InitialConditions {
    pub fn physical_state(&self, p: &CircuitParams) -> [f64; idx::PHYSICAL] {
        let v = self
            .neuron_voltages
            .unwrap_or_else(|| std::array::from_fn(|k| p.v_off + 0.01 * (k + 1) as f64));
        [
            self.temperature,
            v[0],
            v[1],
            v[2],
            v[3],
            self.v_fb.unwrap_or(0.5 * p.v_a),
            self.v_ff.unwrap_or(0.5 * p.v_a),
            self.v_lp,
        ]
    }
}

/// How a jump is classified in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JumpCategory {
    /// Model B: neuron `i` spiked (instantaneous reset).
    Spike(usize),
    OutputSwitchOn(usize),
    OutputSwitchOff(usize),
    BufferSwitchOn(usize),
    BufferSwitchOff(usize),
}

impl JumpCategory {
    pub fn label(&self) -> String {
        match *self {
            JumpCategory::Spike(i) => format!("spike_{i}"),
            JumpCategory::OutputSwitchOn(i) => format!("output_switch_on_{i}"),
            JumpCategory::OutputSwitchOff(i) => format!("output_switch_off_{i}"),
            JumpCategory::BufferSwitchOn(i) => format!("buffer_switch_on_{i}"),
            JumpCategory::BufferSwitchOff(i) => format!("buffer_switch_off_{i}"),
        }
    }
}

/// Signals derived from a physical state at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Signals {
    pub u_fb: f64,
    pub u_ff: f64,
    pub u: f64,
    pub v_out: f64,
    pub t_amb: f64,
}

/// Common interface of the regulator models on top of [`HybridSystem`].
pub trait ThermoModel: HybridSystem {
    fn params(&self) -> &CircuitParams;

    fn ambient(&self) -> &AmbientProfile;

    /// Full solver state for the given physical initial conditions.
    fn initial_state(&self, ic: &InitialConditions) -> Vec<f64>;

    /// Neuron `1..=4` whose spike this jump marks, if any. Each spike is
    /// counted exactly once.
    fn spiking_neuron(&self, record: &JumpRecord) -> Option<usize>;

    fn jump_category(&self, record: &JumpRecord) -> JumpCategory;

    /// The physical part `x` of a solver state.
    fn physical<'a>(&self, state: &'a [f64]) -> &'a [f64] {
        &state[..idx::PHYSICAL]
    }

    fn signals(&self, state: &[f64], t: f64) -> Signals {
        let p = self.params();
        let u_fb = circuit::control_signal(state[idx::V_FB], p);
        let u_ff = circuit::control_signal(state[idx::V_FF], p);
        Signals {
            u_fb,
            u_ff,
            u: circuit::combine_control(u_fb, u_ff, p.k),
            v_out: circuit::amplifier_gain(p) * state[idx::V_LP],
            t_amb: self.ambient().at(t),
        }
    }
}

/// Shared flow terms of the physical state given switch states.
pub(crate) struct PhysicalFlow<'a> {
    pub p: &'a CircuitParams,
    pub ambient: &'a AmbientProfile,
    pub frozen_temperature: bool,
}

impl PhysicalFlow<'_> {
    /// Writes `f(x, S)` for the physical components. `clock` is the current
    /// time (only read for time-varying ambient profiles).
    pub fn eval(&self, x: &[f64], s_out: [bool; 4], s_b: [bool; 4], clock: f64, dx: &mut [f64]) {
        let p = self.p;
        let t = x[idx::T];
        let t_amb = self.ambient.at(clock);
        let v_g = [
            circuit::gate_voltage_warm(t, p),
            circuit::gate_voltage_cold(t, p),
            circuit::gate_voltage_warm(t_amb, p),
            circuit::gate_voltage_cold(t_amb, p),
        ];
        for i in 1..=4 {
            let v_i = x[idx::v(i)];
            let mut current = circuit::charge_current(v_g[i - 1], p);
            if s_out[i - 1] {
                current -= v_i / p.r5;
            }
            dx[idx::v(i)] = current / p.neuron_capacitance(i);
        }
        dx[idx::V_FB] = circuit::buffer_derivative(x[idx::V_FB], s_b[0], s_b[1], p, p.c_fb);
        dx[idx::V_FF] = circuit::buffer_derivative(x[idx::V_FF], s_b[2], s_b[3], p, p.c_ff);
        let u = circuit::combine_control(
            circuit::control_signal(x[idx::V_FB], p),
            circuit::control_signal(x[idx::V_FF], p),
            p.k,
        );
        let (dv_lp, v_out) = circuit::lowpass_and_amp(u, x[idx::V_LP], p);
        dx[idx::V_LP] = dv_lp;
        dx[idx::T] = if self.frozen_temperature {
            0.0
        } else {
            circuit::plant_derivative(t, t_amb, v_out, p)
        };
    }
}

/// Validates parameters and checks that every MOSFET stays in saturation
/// over 0–100 °C and over the ambient profile's range.
pub(crate) fn check_operating_range(p: &CircuitParams, ambient: &AmbientProfile) -> Result<(), ModelError> {
    p.validate()?;
    let (lo, hi) = ambient.range();
    let probes = (0..=200).map(|k| 0.5 * k as f64).chain([lo, hi]);
    for t in probes {
        for v_g in [circuit::gate_voltage_warm(t, p), circuit::gate_voltage_cold(t, p)] {
            circuit::i_fet(v_g, p).map_err(|source| ModelError::OperatingRange { temperature: t, source })?;
        }
    }
    Ok(())
}
