//! Runs the switch-resolved model A and the impulsive model B on the same
//! 20 s constant-ambient scenario and compares them.
//!
//! ```text
//! cargo run --release --example model_comparison
//! ```

use neurotherm::circuit::CircuitParams;
use neurotherm::experiment::{self, RunContext};
use neurotherm::hybrid::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = RunContext::new(CircuitParams::default(), SolverConfig::default(), "out/compare");
    let c = experiment::compare_models(&ctx, None)?;
    println!("sup |T_A - T_B| = {:.4} °C", c.sup_temperature_difference);
    for (k, d) in c.rate_relative_difference.iter().enumerate() {
        println!(
            "neuron {}: {:.3} Hz vs {:.3} Hz ({:.2} %)",
            k + 1,
            c.a.trains.mean_rate(k + 1),
            c.b.trains.mean_rate(k + 1),
            100.0 * d
        );
    }
    println!(
        "jumps A {} / B {} (ratio {:.2}), wall time A {:.2} s / B {:.2} s",
        c.a.report.jump_count_total,
        c.b.report.jump_count_total,
        c.jump_ratio(),
        c.a.report.wall_time,
        c.b.report.wall_time
    );
    for (k, v) in &c.a.report.jump_counts_by_category {
        println!("  A {k}: {v}");
    }
    Ok(())
}
