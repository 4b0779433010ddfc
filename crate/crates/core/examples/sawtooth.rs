//! A one-dimensional sawtooth: `ẋ = 1` on `x ≤ 1`, `x⁺ = 0` when `x ≥ 1`.
//! Jumps happen at integer times.
//!
//! ```text
//! cargo run --example sawtooth
//! ```

use neurotherm::hybrid::{solve, FnSystem, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let saw = FnSystem::new("sawtooth", 1, |_x, dx| dx[0] = 1.0).with_jump(|x| x[0] - 1.0, |_x, out| out[0] = 0.0);
    let arc = solve(&saw, &[0.0], &SolverConfig::default().with_t_end(5.5))?;
    for rec in arc.jump_records() {
        println!(
            "jump {} at t = {:.12}  (x: {} -> {})",
            rec.j + 1,
            rec.t,
            rec.pre[0],
            rec.post[0]
        );
    }
    let last = arc.last().expect("non-empty arc");
    println!("final (t, j) = ({}, {}), x = {:.6}", last.t, last.j, last.state[0]);
    Ok(())
}
