//! Spike constants and spike-train statistics.

use thiserror::Error;

use crate::circuit::CircuitParams;
use crate::hybrid::HybridArc;

use super::ThermoModel;

/// Duration of one neuron discharge from `V_on` to `V_off` through `R5`,
/// neglecting the charge current: `τ = C_i R5 ln(V_on / V_off)`.
pub fn spike_duration(p: &CircuitParams, c_i: f64) -> f64 {
    c_i * p.r5 * (p.v_on / p.v_off).ln()
}

/// Multiplicative buffer decay caused by one spike of duration `tau`, with
/// the buffer leakage neglected: `a = exp(−τ / (C_b R4))`.
pub fn jump_ratio(tau: f64, p: &CircuitParams, c_b: f64) -> f64 {
    (-tau / (c_b * p.r4)).exp()
}

/// Spike duration and jump ratio for one neuron/buffer pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeConstants {
    pub tau: f64,
    pub a: f64,
}

impl SpikeConstants {
    /// Constants for neuron `1..=4` (1, 2 feed the feedback buffer; 3, 4 the
    /// feedforward buffer).
    pub fn for_neuron(p: &CircuitParams, neuron: usize) -> Self {
        let c_i = p.neuron_capacitance(neuron);
        let c_b = if neuron <= 2 { p.c_fb } else { p.c_ff };
        let tau = spike_duration(p, c_i);
        Self {
            tau,
            a: jump_ratio(tau, p, c_b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpikeError {
    #[error("window {window} s is shorter than two inter-spike intervals at {max_rate:.3} Hz")]
    WindowTooShort { window: f64, max_rate: f64 },
}

/// Spike times of the four neurons extracted from an arc.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpikeTrains {
    pub times: [Vec<f64>; 4],
    /// Span of the arc the trains were taken from.
    pub t_start: f64,
    pub t_end: f64,
}

impl SpikeTrains {
    pub fn from_arc<M: ThermoModel + ?Sized>(model: &M, arc: &HybridArc) -> Self {
        let mut trains = SpikeTrains {
            t_start: arc.first().map_or(0.0, |s| s.t),
            t_end: arc.final_time(),
            ..SpikeTrains::default()
        };
        for rec in arc.jump_records() {
            if let Some(i) = model.spiking_neuron(rec) {
                trains.times[i - 1].push(rec.t);
            }
        }
        trains
    }

    pub fn count(&self, neuron: usize) -> usize {
        self.times[neuron - 1].len()
    }

    /// Mean rate from the first to the last spike; zero with fewer than two spikes.
    pub fn mean_rate(&self, neuron: usize) -> f64 {
        let ts = &self.times[neuron - 1];
        match (ts.first(), ts.last()) {
            (Some(a), Some(b)) if ts.len() >= 2 && b > a => (ts.len() - 1) as f64 / (b - a),
            _ => 0.0,
        }
    }

    /// Mean rate over `[t0, t1]` from spike times, for comparisons restricted
    /// to a window.
    pub fn mean_rate_between(&self, neuron: usize, t0: f64, t1: f64) -> f64 {
        let ts: Vec<f64> = self.times[neuron - 1]
            .iter()
            .copied()
            .filter(|&t| t >= t0 && t <= t1)
            .collect();
        match (ts.first(), ts.last()) {
            (Some(a), Some(b)) if ts.len() >= 2 && b > a => (ts.len() - 1) as f64 / (b - a),
            _ => 0.0,
        }
    }

    fn max_overall_rate(&self) -> f64 {
        let span = self.t_end - self.t_start;
        if span <= 0.0 {
            return 0.0;
        }
        self.times.iter().map(|ts| ts.len() as f64 / span).fold(0.0, f64::max)
    }

    /// Sliding-window rates at each query time: spikes in `(t − window, t]`
    /// divided by the window (or by the elapsed time while `t − t_start <
    /// window`).
    pub fn sliding_rates(&self, window: f64, at: &[f64]) -> Result<Vec<[f64; 4]>, SpikeError> {
        let max_rate = self.max_overall_rate();
        if max_rate > 0.0 && window < 2.0 / max_rate {
            return Err(SpikeError::WindowTooShort { window, max_rate });
        }
        Ok(at
            .iter()
            .map(|&t| {
                let span = window.min(t - self.t_start);
                let mut out = [0.0; 4];
                if span <= 0.0 {
                    return out;
                }
                for (o, ts) in out.iter_mut().zip(&self.times) {
                    let hi = ts.partition_point(|&s| s <= t);
                    let lo = ts.partition_point(|&s| s <= t - window);
                    *o = (hi - lo) as f64 / span;
                }
                out
            })
            .collect())
    }
}

/// Sliding-window spike frequencies of the four neurons at the given times.
pub fn spike_frequencies<M: ThermoModel + ?Sized>(
    model: &M,
    arc: &HybridArc,
    window: f64,
    at: &[f64],
) -> Result<Vec<[f64; 4]>, SpikeError> {
    SpikeTrains::from_arc(model, arc).sliding_rates(window, at)
}
