use crate::circuit::CircuitParams;
use crate::hybrid::{HybridSystem, JumpRecord};

use super::{
    check_operating_range, idx, AmbientProfile, InitialConditions, JumpCategory, ModelError, PhysicalFlow,
    SpikeConstants, ThermoModel,
};

/// Regulator with spikes as instantaneous pulses.
///
/// Flow is the switch-free circuit dynamics. Neuron `i` jumps when
/// `V_i ≥ V_on`: `V_i ↦ V_off`, and its buffer moves a fraction `1 − a`
/// toward `V_A` (warm neurons 1, 3) or toward 0 (cold neurons 2, 4).
#[derive(Debug, Clone)]
pub struct ModelB {
    params: CircuitParams,
    ambient: AmbientProfile,
    spikes: [SpikeConstants; 4],
    frozen_temperature: bool,
    clock: Option<usize>,
}

impl ModelB {
    pub fn new(params: CircuitParams, ambient: AmbientProfile) -> Result<Self, ModelError> {
        check_operating_range(&params, &ambient)?;
        let spikes = std::array::from_fn(|k| SpikeConstants::for_neuron(&params, k + 1));
        let clock = ambient.is_time_varying().then_some(idx::PHYSICAL);
        Ok(Self {
            params,
            ambient,
            spikes,
            frozen_temperature: false,
            clock,
        })
    }

    /// Holds the core temperature fixed at its initial value (`Ṫ = 0`).
    pub fn with_frozen_temperature(mut self) -> Self {
        self.frozen_temperature = true;
        self
    }

    pub fn spike_constants(&self, neuron: usize) -> SpikeConstants {
        self.spikes[neuron - 1]
    }

    /// Buffer voltages after a spike of neuron `i`.
    pub fn buffer_after_spike(&self, v_fb: f64, v_ff: f64, neuron: usize) -> (f64, f64) {
        let a = self.spikes[neuron - 1].a;
        let v_a = self.params.v_a;
        match neuron {
            1 => (a * v_fb + (1.0 - a) * v_a, v_ff),
            2 => (a * v_fb, v_ff),
            3 => (v_fb, a * v_ff + (1.0 - a) * v_a),
            4 => (v_fb, a * v_ff),
            _ => panic!("neuron index {neuron} out of range 1..=4"),
        }
    }

    fn time_of(&self, x: &[f64]) -> f64 {
        self.clock.map_or(0.0, |c| x[c])
    }
}

impl HybridSystem for ModelB {
    fn name(&self) -> &str {
        "model-b"
    }

    fn dimension(&self) -> usize {
        idx::PHYSICAL + usize::from(self.clock.is_some())
    }

    fn flow(&self, x: &[f64], dx: &mut [f64]) {
        PhysicalFlow {
            p: &self.params,
            ambient: &self.ambient,
            frozen_temperature: self.frozen_temperature,
        }
        .eval(x, [false; 4], [false; 4], self.time_of(x), dx);
        if let Some(c) = self.clock {
            dx[c] = 1.0;
        }
    }

    fn jump_condition_count(&self) -> usize {
        4
    }

    fn jump_guard(&self, k: usize, x: &[f64]) -> f64 {
        x[idx::v(k + 1)] - self.params.v_on
    }

    fn jump(&self, k: usize, x: &[f64], out: &mut [f64]) {
        let neuron = k + 1;
        out.copy_from_slice(x);
        out[idx::v(neuron)] = self.params.v_off;
        let (v_fb, v_ff) = self.buffer_after_spike(x[idx::V_FB], x[idx::V_FF], neuron);
        out[idx::V_FB] = v_fb;
        out[idx::V_FF] = v_ff;
    }
}

impl ThermoModel for ModelB {
    fn params(&self) -> &CircuitParams {
        &self.params
    }

    fn ambient(&self) -> &AmbientProfile {
        &self.ambient
    }

    fn initial_state(&self, ic: &InitialConditions) -> Vec<f64> {
        let mut x = ic.physical_state(&self.params).to_vec();
        if self.clock.is_some() {
            x.push(0.0);
        }
        x
    }

    fn spiking_neuron(&self, record: &JumpRecord) -> Option<usize> {
        Some(record.condition + 1)
    }

    fn jump_category(&self, record: &JumpRecord) -> JumpCategory {
        JumpCategory::Spike(record.condition + 1)
    }
}
