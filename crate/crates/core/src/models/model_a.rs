use crate::circuit::CircuitParams;
use crate::hybrid::{HybridSystem, JumpRecord};

use super::{
    check_operating_range, idx, spike_duration, AmbientProfile, InitialConditions, JumpCategory, ModelError,
    PhysicalFlow, ThermoModel,
};

/// Index of output switch `S_{i,out}` in the model-A state.
const fn s_out(i: usize) -> usize {
    idx::PHYSICAL + i - 1
}

/// Index of buffer input switch `S_{i,b}` in the model-A state.
const fn s_buf(i: usize) -> usize {
    idx::PHYSICAL + 4 + i - 1
}

const SWITCHES: usize = 8;

/// Regulator with spikes resolved as fast continuous discharges.
///
/// State: `(x, S_out, S_b)` with switch states stored as `0.0`/`1.0`
/// (16 components, plus a clock for time-varying ambient).
///
/// Jump conditions `0..4` toggle output switch `i = k + 1`
/// (`V_i ≥ V_on` when open, `V_i ≤ V_off` when closed); conditions `4..8`
/// toggle buffer switch `i = k − 3` when the neuron output `V_i S_{i,out}`
/// crosses `V_th_switch`. Guards are written so that each closes the
/// complement of its flow-set piece.
#[derive(Debug, Clone)]
pub struct ModelA {
    params: CircuitParams,
    ambient: AmbientProfile,
    discharge_step_cap: f64,
    clock: Option<usize>,
}

impl ModelA {
    /// Steps are capped at this fraction of the shortest spike duration while
    /// any output switch is closed.
    pub const DISCHARGE_STEPS_PER_SPIKE: f64 = 20.0;

    pub fn new(params: CircuitParams, ambient: AmbientProfile) -> Result<Self, ModelError> {
        check_operating_range(&params, &ambient)?;
        let tau_min = (1..=4)
            .map(|i| spike_duration(&params, params.neuron_capacitance(i)))
            .fold(f64::INFINITY, f64::min);
        let clock = ambient.is_time_varying().then_some(idx::PHYSICAL + SWITCHES);
        Ok(Self {
            params,
            ambient,
            discharge_step_cap: tau_min / Self::DISCHARGE_STEPS_PER_SPIKE,
            clock,
        })
    }

    fn switches(x: &[f64]) -> ([bool; 4], [bool; 4]) {
        (
            std::array::from_fn(|k| x[s_out(k + 1)] > 0.5),
            std::array::from_fn(|k| x[s_buf(k + 1)] > 0.5),
        )
    }

    /// Neuron output voltage `V_{i,out} = V_i S_{i,out}`.
    pub fn neuron_output(x: &[f64], i: usize) -> f64 {
        x[idx::v(i)] * x[s_out(i)]
    }

    pub fn output_switch(x: &[f64], i: usize) -> bool {
        x[s_out(i)] > 0.5
    }

    pub fn buffer_switch(x: &[f64], i: usize) -> bool {
        x[s_buf(i)] > 0.5
    }
}

impl HybridSystem for ModelA {
    fn name(&self) -> &str {
        "model-a"
    }

    fn dimension(&self) -> usize {
        idx::PHYSICAL + SWITCHES + usize::from(self.clock.is_some())
    }

    fn flow(&self, x: &[f64], dx: &mut [f64]) {
        let (s_o, s_b) = Self::switches(x);
        let clock = self.clock.map_or(0.0, |c| x[c]);
        PhysicalFlow {
            p: &self.params,
            ambient: &self.ambient,
            frozen_temperature: false,
        }
        .eval(x, s_o, s_b, clock, dx);
        for d in &mut dx[idx::PHYSICAL..idx::PHYSICAL + SWITCHES] {
            *d = 0.0;
        }
        if let Some(c) = self.clock {
            dx[c] = 1.0;
        }
    }

    fn jump_condition_count(&self) -> usize {
        SWITCHES
    }

    fn jump_guard(&self, k: usize, x: &[f64]) -> f64 {
        let p = &self.params;
        if k < 4 {
            let i = k + 1;
            if Self::output_switch(x, i) {
                p.v_off - x[idx::v(i)]
            } else {
                x[idx::v(i)] - p.v_on
            }
        } else {
            let i = k - 3;
            let v_out = Self::neuron_output(x, i);
            if Self::buffer_switch(x, i) {
                p.v_th_switch - v_out
            } else {
                v_out - p.v_th_switch
            }
        }
    }

    fn jump(&self, k: usize, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        let slot = if k < 4 { s_out(k + 1) } else { s_buf(k - 3) };
        out[slot] = 1.0 - x[slot];
    }

    fn step_limit(&self, x: &[f64]) -> Option<f64> {
        (1..=4)
            .any(|i| Self::output_switch(x, i))
            .then_some(self.discharge_step_cap)
    }
}

impl ThermoModel for ModelA {
    fn params(&self) -> &CircuitParams {
        &self.params
    }

    fn ambient(&self) -> &AmbientProfile {
        &self.ambient
    }

    fn initial_state(&self, ic: &InitialConditions) -> Vec<f64> {
        let mut x = ic.physical_state(&self.params).to_vec();
        x.extend_from_slice(&[0.0; SWITCHES]);
        if self.clock.is_some() {
            x.push(0.0);
        }
        x
    }

    fn spiking_neuron(&self, record: &JumpRecord) -> Option<usize> {
        match self.jump_category(record) {
            JumpCategory::OutputSwitchOn(i) => Some(i),
            _ => None,
        }
    }

    fn jump_category(&self, record: &JumpRecord) -> JumpCategory {
        let k = record.condition;
        if k < 4 {
            let i = k + 1;
            if Self::output_switch(&record.pre, i) {
                JumpCategory::OutputSwitchOff(i)
            } else {
                JumpCategory::OutputSwitchOn(i)
            }
        } else {
            let i = k - 3;
            if Self::buffer_switch(&record.pre, i) {
                JumpCategory::BufferSwitchOff(i)
            } else {
                JumpCategory::BufferSwitchOn(i)
            }
        }
    }
}
