//! Ambient ramp 0 → 80 °C over 800 s with and without the tuned
//! feedforward gain. Writes CSV and SVG files into `out/ramp`.
//!
//! ```text
//! cargo run --release --example feedforward_ramp
//! ```

use neurotherm::circuit::CircuitParams;
use neurotherm::experiment::{self, RunContext};
use neurotherm::hybrid::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = RunContext::new(CircuitParams::default(), SolverConfig::default(), "out/ramp");
    let started = std::time::Instant::now();
    let o = experiment::ramp(&ctx, None)?;
    let m = &o.model;
    println!("T_set = {:.3} °C, c = {:.4} 1/s, K* = {:.4}", m.t_set, m.c, m.k_star);
    println!(
        "max |T - T_set| with K*, T_amb in [30, 50]: {:.3} °C",
        o.max_error_with_ff
    );
    println!(
        "at T_amb = 50 °C: K = 0 error {:.3} °C, K* error {:.3} °C",
        o.error_at_50_without_ff, o.error_at_50_with_ff
    );
    println!(
        "slope without feedforward {:.3} (averaged model predicts {:.3})",
        o.slope_without_ff,
        m.alpha / (m.alpha + m.c)
    );
    println!("mean |u_fb| ratio K*/K=0: {:.3}", o.feedback_ratio);
    println!(
        "elapsed {:.2?}, outputs in {}",
        started.elapsed(),
        ctx.out_dir.display()
    );
    Ok(())
}
