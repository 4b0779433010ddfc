//! Sensor chain from temperature to firing rate: NTC resistance, warm and
//! cold gate voltages, drain currents and steady firing rates.
//!
//! ```text
//! cargo run --example thermistor_chain
//! ```

use neurotherm::circuit::{self, CircuitParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = CircuitParams::default();
    println!("   T [°C]    R_NTC [Ω]   V_G warm  V_G cold   f warm [Hz]  f cold [Hz]");
    for t in (0..=100).step_by(10).map(f64::from) {
        let (vw, vc) = (circuit::gate_voltage_warm(t, &p), circuit::gate_voltage_cold(t, &p));
        println!(
            "{t:9.1} {:12.1} {vw:10.4} {vc:9.4} {:12.3} {:12.3}",
            circuit::ntc_resistance(t, &p.ntc),
            circuit::neuron_rate(vw, &p, p.c1)?,
            circuit::neuron_rate(vc, &p, p.c2)?
        );
    }
    match circuit::gate_equality_temperature(&p, 0.0, 100.0) {
        Some(t) => println!("warm and cold rates are equal at {t:.3} °C"),
        None => println!("no rate equality in 0–100 °C"),
    }
    Ok(())
}
