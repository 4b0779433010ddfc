//! Component-level equations of the regulator circuit.
//!
//! All temperatures are in °C; conversion to kelvin happens inside
//! [`ntc_resistance`] only.

mod params;

pub use params::{CircuitParams, NtcParams, ParamError};

use thiserror::Error;

use crate::models::spike_duration;

const KELVIN_OFFSET: f64 = 273.15;
const T_REF_KELVIN: f64 = 298.15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CircuitError {
    /// The MOSFET would leave its saturation region (`V_G − V_S − V_th > 0`).
    #[error("MOSFET outside saturation: V_G = {v_g} V gives overdrive {overdrive} V > 0")]
    SaturationViolated { v_g: f64, overdrive: f64 },
}

/// NTC resistance at `t` °C (B-parameter model).
pub fn ntc_resistance(t: f64, ntc: &NtcParams) -> f64 {
    debug_assert!(t > -KELVIN_OFFSET);
    ntc.r_25 * (ntc.b * (1.0 / (t + KELVIN_OFFSET) - 1.0 / T_REF_KELVIN)).exp()
}

/// Gate voltage of a warmth-sensitive neuron for a given thermistor resistance.
pub fn gate_voltage_warm_at_resistance(r_ntc: f64, p: &CircuitParams) -> f64 {
    p.v_cc / (1.0 + 0.5 * p.r1 * (1.0 / p.r3 + 1.0 / (r_ntc + p.r2)))
}

/// Gate voltage of a cold-sensitive neuron for a given thermistor resistance.
pub fn gate_voltage_cold_at_resistance(r_ntc: f64, p: &CircuitParams) -> f64 {
    let parallel = 1.0 / (1.0 / (p.r2 + p.r7) + 1.0 / (p.r8 + r_ntc));
    p.v_cc * p.r9 / (p.r9 + parallel)
}

/// Warmth-sensitive gate voltage; decreasing in `t`.
pub fn gate_voltage_warm(t: f64, p: &CircuitParams) -> f64 {
    gate_voltage_warm_at_resistance(ntc_resistance(t, &p.ntc), p)
}

/// Cold-sensitive gate voltage; increasing in `t`.
pub fn gate_voltage_cold(t: f64, p: &CircuitParams) -> f64 {
    gate_voltage_cold_at_resistance(ntc_resistance(t, &p.ntc), p)
}

/// Saturation-region drain current magnitude `K_p (V_G − V_S − V_th)²`.
pub fn i_fet(v_g: f64, p: &CircuitParams) -> Result<f64, CircuitError> {
    let overdrive = v_g - p.v_s - p.v_th_fet;
    if overdrive > 0.0 {
        return Err(CircuitError::SaturationViolated { v_g, overdrive });
    }
    Ok(p.k_p * overdrive * overdrive)
}

/// Charging current used inside the simulations. Outside saturation the
/// current is clamped to zero (cut-off) instead of failing mid-run; models
/// check saturation over the operating range when they are built.
pub(crate) fn charge_current(v_g: f64, p: &CircuitParams) -> f64 {
    let overdrive = (v_g - p.v_s - p.v_th_fet).min(0.0);
    p.k_p * overdrive * overdrive
}

/// Steady firing rate (Hz) of a neuron with capacitance `c_i` at gate
/// voltage `v_g`: one linear charge from `V_off` to `V_on` plus one spike.
pub fn neuron_rate(v_g: f64, p: &CircuitParams, c_i: f64) -> Result<f64, CircuitError> {
    let current = i_fet(v_g, p)?;
    if current == 0.0 {
        return Ok(0.0);
    }
    let t_charge = c_i * (p.v_on - p.v_off) / current;
    Ok(1.0 / (t_charge + spike_duration(p, c_i)))
}

/// `Ṫ = α (T_amb − T) − A(V_out)` with linear actuation.
pub fn plant_derivative(t: f64, t_amb: f64, v_out: f64, p: &CircuitParams) -> f64 {
    p.alpha * (t_amb - t) - p.actuator_gain * v_out
}

/// Buffer capacitor voltage derivative with its warm/cold input switches.
pub fn buffer_derivative(v_b: f64, s_warm: bool, s_cold: bool, p: &CircuitParams, c_b: f64) -> f64 {
    let mut dv = -(2.0 * v_b - p.v_a) / (c_b * p.r10);
    if s_warm {
        dv += (p.v_a - v_b) / (c_b * p.r4);
    }
    if s_cold {
        dv -= v_b / (c_b * p.r4);
    }
    dv
}

/// Low-pass filter derivative and amplifier output for control input `u`.
pub fn lowpass_and_amp(u: f64, v_lp: f64, p: &CircuitParams) -> (f64, f64) {
    let dv = (u - v_lp) / (p.c_lp * p.r_lp_in) - v_lp / (p.c_lp * p.r_lp_gnd);
    (dv, amplifier_gain(p) * v_lp)
}

pub fn amplifier_gain(p: &CircuitParams) -> f64 {
    1.0 + p.r_amp_fb / p.r_amp_gnd
}

/// Buffer voltage shifted so the neutral position is 0 V.
pub fn control_signal(v_buffer: f64, p: &CircuitParams) -> f64 {
    v_buffer - 0.5 * p.v_a
}

/// `u = u_fb + K u_ff`.
pub fn combine_control(u_fb: f64, u_ff: f64, k: f64) -> f64 {
    u_fb + k * u_ff
}

/// DC gain from the control signal to the plant: actuator ∘ amplifier ∘ low-pass.
pub fn dc_actuation_gain(p: &CircuitParams) -> f64 {
    p.actuator_gain * amplifier_gain(p) * p.r_lp_gnd / (p.r_lp_in + p.r_lp_gnd)
}

/// Temperature in `[lo, hi]` where the warm and cold gate voltages coincide,
/// i.e. where both neurons of a pair fire at the same rate.
pub fn gate_equality_temperature(p: &CircuitParams, lo: f64, hi: f64) -> Option<f64> {
    let f = |t: f64| gate_voltage_warm(t, p) - gate_voltage_cold(t, p);
    bisect(f, lo, hi, 1e-12)
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> Option<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> CircuitParams {
        CircuitParams::default()
    }

    #[test]
    fn ntc_reference_point_and_value() {
        let ntc = NtcParams { r_25: 10e3, b: 3977.0 };
        assert_relative_eq!(ntc_resistance(25.0, &ntc), 10e3, max_relative = 1e-15);
        assert_relative_eq!(ntc_resistance(50.0, &ntc), 3563.131937311287, max_relative = 1e-12);
    }

    #[test]
    fn warm_gate_limits() {
        assert_relative_eq!(
            gate_voltage_warm_at_resistance(1e30, &p()),
            9.601634320735444,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            gate_voltage_warm_at_resistance(0.0, &p()),
            8.087412888238836,
            max_relative = 1e-12
        );
    }

    #[test]
    fn cold_gate_limits() {
        assert_relative_eq!(
            gate_voltage_cold_at_resistance(1e30, &p()),
            8.460236886632826,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            gate_voltage_cold_at_resistance(0.0, &p()),
            9.999990000064944,
            max_relative = 1e-12
        );
    }

    #[test]
    fn drain_current_values() {
        let p = p();
        assert!(i_fet(p.v_s + p.v_th_fet, &p).unwrap() < 1e-30);
        assert_relative_eq!(i_fet(8.3, &p).unwrap(), 2.88e-5, max_relative = 1e-12);
        assert_relative_eq!(i_fet(9.3, &p).unwrap(), 9.8e-6, max_relative = 1e-12);
        assert!(matches!(i_fet(11.0, &p), Err(CircuitError::SaturationViolated { .. })));
    }

    #[test]
    fn neuron_rate_from_linear_ramp() {
        let p = p();
        let rate = neuron_rate(8.3, &p, 0.047e-6).unwrap();
        assert_relative_eq!(rate, 94.89003853648904, max_relative = 1e-10);
        // doubling the current halves the charge time
        let i1 = i_fet(8.3, &p).unwrap();
        let t1 = 0.047e-6 * 6.4 / i1;
        let t2 = 0.047e-6 * 6.4 / (2.0 * i1);
        assert_relative_eq!(t2, 0.5 * t1);
        assert!(neuron_rate(p.v_s + p.v_th_fet, &p, 0.047e-6).unwrap() < 1e-20);
    }

    #[test]
    fn plant_values() {
        let p = p();
        assert_eq!(plant_derivative(40.0, 40.0, 0.0, &p), 0.0);
        assert_eq!(plant_derivative(30.0, 40.0, 0.0, &p), 20.0);
        assert_eq!(plant_derivative(40.0, 40.0, 1.0, &p), -2.0);
    }

    #[test]
    fn buffer_equilibria() {
        let p = p();
        assert_eq!(buffer_derivative(1.0, false, false, &p, p.c_fb), 0.0);
        let warm_eq = 1.998003992015968;
        assert!(buffer_derivative(warm_eq, true, false, &p, p.c_fb).abs() < 1e-6);
        let cold_eq = p.v_a - warm_eq;
        assert!(buffer_derivative(cold_eq, false, true, &p, p.c_fb).abs() < 1e-6);
    }

    #[test]
    fn lowpass_and_amplifier() {
        let p = p();
        let (dv, v_out) = lowpass_and_amp(0.0, 0.0, &p);
        assert_eq!((dv, v_out), (0.0, 0.0));
        let u = 0.3;
        let v_star = u * 10.0 / 11.0;
        let (dv, v_out) = lowpass_and_amp(u, v_star, &p);
        assert!(dv.abs() < 1e-12);
        assert_relative_eq!(v_out, 10.0 * u, max_relative = 1e-12);
        assert_relative_eq!(dc_actuation_gain(&p), 20.0, max_relative = 1e-12);
    }

    #[test]
    fn control_combination() {
        let p = p();
        assert_eq!(
            combine_control(control_signal(1.0, &p), control_signal(1.0, &p), 0.9),
            0.0
        );
        assert_relative_eq!(combine_control(0.2, -0.5, 0.9), -0.25, max_relative = 1e-12);
        assert_eq!(combine_control(0.2, -0.5, 0.0), 0.2);
    }

    #[test]
    fn default_set_point_lies_near_forty_degrees() {
        let t = gate_equality_temperature(&p(), 0.0, 100.0).unwrap();
        assert!((t - 39.835).abs() < 0.01, "t = {t}");
    }
}
