//! Sweeps the frozen-temperature averaged feedback signal over 0–80 °C and
//! prints the curve, the set point and the fitted feedforward gain.
//!
//! ```text
//! cargo run --release --example u_tilde_sweep
//! ```

use neurotherm::averaged::{self, AveragedModel, DEFAULT_HOLD, LINEAR_WINDOW};
use neurotherm::circuit::{self, CircuitParams};
use neurotherm::hybrid::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = CircuitParams::default();
    let solver = SolverConfig::default();
    let grid = averaged::temperature_grid(0.0, 80.0, 1.0)?;

    let started = std::time::Instant::now();
    let samples = averaged::estimate_u_tilde(&params, &grid, DEFAULT_HOLD, &solver)?;
    let t_set = averaged::refine_t_set(&params, &samples, DEFAULT_HOLD, &solver, 0.01)?;
    let model = AveragedModel::from_samples(&params, samples, LINEAR_WINDOW, Some(t_set))?;

    for s in model.samples.iter().step_by(5) {
        println!("{:5.1} °C  ũ = {:+.4} V", s.temperature, s.u_tilde);
    }
    let root = circuit::gate_equality_temperature(&params, 0.0, 100.0).unwrap_or(f64::NAN);
    println!("monotone: {}", model.is_monotone());
    println!("T_set = {:.3} °C (gate equality {:.3} °C)", model.t_set, root);
    println!(
        "c = {:.4} 1/s, K* = {:.4}, gamma = {:.4} 1/s",
        model.c, model.k_star, model.gamma
    );
    println!("elapsed {:.2?}", started.elapsed());
    Ok(())
}
