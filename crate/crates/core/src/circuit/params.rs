use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{field}` = {value}: {reason}")]
    Invalid {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// B-parameter thermistor curve `R(T) = R₂₅·exp(B·(1/T − 1/298.15 K))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NtcParams {
    /// Resistance at 25 °C, ohms.
    #[serde(rename = "R25")]
    pub r_25: f64,
    /// B-parameter, kelvin.
    #[serde(rename = "B")]
    pub b: f64,
}

impl Default for NtcParams {
    /// 470 kΩ part with B₂₅/₈₅ = 4570 K.
    fn default() -> Self {
        Self { r_25: 470e3, b: 4570.0 }
    }
}

/// Component values of the regulator circuit, plant and actuator.
///
/// Resistors that appear in several sub-circuits are bound through
/// dedicated fields: the low-pass filter uses `r_lp_in`/`r_lp_gnd` and the
/// output amplifier `r_amp_fb`/`r_amp_gnd`, defaulting to the same values as
/// `r9`/`r10` and `r4`/`r5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitParams {
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(rename = "R3")]
    pub r3: f64,
    #[serde(rename = "R4")]
    pub r4: f64,
    #[serde(rename = "R5")]
    pub r5: f64,
    #[serde(rename = "R6")]
    pub r6: f64,
    #[serde(rename = "R7")]
    pub r7: f64,
    #[serde(rename = "R8")]
    pub r8: f64,
    #[serde(rename = "R9")]
    pub r9: f64,
    #[serde(rename = "R10")]
    pub r10: f64,
    /// Neuron capacitors: core warm, core cold, ambient warm, ambient cold.
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C_fb")]
    pub c_fb: f64,
    #[serde(rename = "C_ff")]
    pub c_ff: f64,
    #[serde(rename = "C_LP")]
    pub c_lp: f64,
    #[serde(rename = "V_cc")]
    pub v_cc: f64,
    #[serde(rename = "V_A")]
    pub v_a: f64,
    /// Listed with the components but not used by any equation.
    #[serde(rename = "V_B")]
    pub v_b: f64,
    #[serde(rename = "V_on")]
    pub v_on: f64,
    #[serde(rename = "V_off")]
    pub v_off: f64,
    /// Buffer input switches close while the neuron output is above this.
    #[serde(rename = "V_th_switch")]
    pub v_th_switch: f64,
    #[serde(rename = "K_p")]
    pub k_p: f64,
    #[serde(rename = "V_th_fet")]
    pub v_th_fet: f64,
    /// MOSFET source voltage.
    #[serde(rename = "V_S")]
    pub v_s: f64,
    /// Heat exchange with the surroundings, 1/s.
    pub alpha: f64,
    /// `A(V_out) = actuator_gain · V_out`, °C/(s·V).
    pub actuator_gain: f64,
    /// Feedforward gain.
    #[serde(rename = "K")]
    pub k: f64,
    pub ntc: NtcParams,
    #[serde(rename = "R_lp_in")]
    pub r_lp_in: f64,
    #[serde(rename = "R_lp_gnd")]
    pub r_lp_gnd: f64,
    #[serde(rename = "R_amp_fb")]
    pub r_amp_fb: f64,
    #[serde(rename = "R_amp_gnd")]
    pub r_amp_gnd: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            r1: 39e3,
            r2: 100e3,
            r3: 470e3,
            r4: 10e3,
            r5: 1e3,
            r6: 200e3,
            r7: 82e3,
            r8: 1.0,
            r9: 1e6,
            r10: 10e6,
            c1: 0.047e-6,
            c2: 0.047e-6,
            c3: 0.047e-6,
            c4: 0.047e-6,
            c_fb: 0.047e-6,
            c_ff: 0.047e-6,
            c_lp: 0.47e-6,
            v_cc: 10.0,
            v_a: 2.0,
            v_b: 1.0,
            v_on: 7.4,
            v_off: 1.0,
            v_th_switch: 1.0,
            k_p: 5e-6,
            v_th_fet: 0.7,
            v_s: 10.0,
            alpha: 2.0,
            actuator_gain: 2.0,
            k: 0.0,
            ntc: NtcParams::default(),
            r_lp_in: 1e6,
            r_lp_gnd: 10e6,
            r_amp_fb: 10e3,
            r_amp_gnd: 1e3,
        }
    }
}

impl CircuitParams {
    /// Neuron capacitance by neuron index 1..=4.
    pub fn neuron_capacitance(&self, neuron: usize) -> f64 {
        match neuron {
            1 => self.c1,
            2 => self.c2,
            3 => self.c3,
            4 => self.c4,
            _ => panic!("neuron index {neuron} out of range 1..=4"),
        }
    }

    pub fn with_feedforward_gain(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("R1", self.r1),
            ("R2", self.r2),
            ("R3", self.r3),
            ("R4", self.r4),
            ("R5", self.r5),
            ("R6", self.r6),
            ("R7", self.r7),
            ("R8", self.r8),
            ("R9", self.r9),
            ("R10", self.r10),
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
            ("C4", self.c4),
            ("C_fb", self.c_fb),
            ("C_ff", self.c_ff),
            ("C_LP", self.c_lp),
            ("V_A", self.v_a),
            ("V_off", self.v_off),
            ("K_p", self.k_p),
            ("alpha", self.alpha),
            ("ntc.R25", self.ntc.r_25),
            ("ntc.B", self.ntc.b),
            ("R_lp_in", self.r_lp_in),
            ("R_lp_gnd", self.r_lp_gnd),
            ("R_amp_fb", self.r_amp_fb),
            ("R_amp_gnd", self.r_amp_gnd),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::Invalid {
                    field,
                    value,
                    reason: "must be finite and > 0",
                });
            }
        }
        let finite = [
            ("V_cc", self.v_cc),
            ("V_B", self.v_b),
            ("V_on", self.v_on),
            ("V_th_switch", self.v_th_switch),
            ("V_th_fet", self.v_th_fet),
            ("V_S", self.v_s),
            ("actuator_gain", self.actuator_gain),
            ("K", self.k),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return Err(ParamError::Invalid {
                    field,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if self.v_th_switch < self.v_off {
            return Err(ParamError::Invalid {
                field: "V_th_switch",
                value: self.v_th_switch,
                reason: "must be ≥ V_off",
            });
        }
        if self.v_th_switch >= self.v_on {
            return Err(ParamError::Invalid {
                field: "V_th_switch",
                value: self.v_th_switch,
                reason: "must be < V_on",
            });
        }
        if self.v_on >= self.v_cc {
            return Err(ParamError::Invalid {
                field: "V_on",
                value: self.v_on,
                reason: "must be < V_cc",
            });
        }
        if self.k < 0.0 {
            return Err(ParamError::Invalid {
                field: "K",
                value: self.k,
                reason: "must be ≥ 0",
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        CircuitParams::default().validate().unwrap();
    }

    #[test]
    fn threshold_ordering_is_enforced() {
        let p = CircuitParams {
            v_th_switch: 8.0,
            ..CircuitParams::default()
        };
        assert!(p.validate().is_err());
        let p = CircuitParams {
            v_th_switch: 0.5,
            ..CircuitParams::default()
        };
        assert!(p.validate().is_err());
        let p = CircuitParams {
            k: -0.1,
            ..CircuitParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn non_positive_component_is_named() {
        let p = CircuitParams {
            r5: 0.0,
            ..CircuitParams::default()
        };
        match p.validate() {
            Err(ParamError::Invalid { field, .. }) => assert_eq!(field, "R5"),
            other => panic!("{other:?}"),
        }
    }
}
