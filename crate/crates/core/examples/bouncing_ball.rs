//! Bouncing ball with restitution 0.8, the standard hybrid-systems example.
//! The flow set is `h ≥ 0`; impact happens when `h ≤ 0` while falling.
//!
//! ```text
//! cargo run --example bouncing_ball
//! ```

use neurotherm::hybrid::{solve, FnSystem, SolveError, SolverConfig};

const G: f64 = 9.81;
const RESTITUTION: f64 = 0.8;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ball = FnSystem::new("bouncing-ball", 2, |x, dx| {
        dx[0] = x[1];
        dx[1] = -G;
    })
    .with_jump(
        // on the ground and moving down
        |x| (-x[0]).min(-x[1]),
        |x, out| {
            out[0] = 0.0;
            out[1] = -RESTITUTION * x[1];
        },
    )
    .with_flow_guard(|x| -x[0]);

    let cfg = SolverConfig {
        t_end: 3.5,
        sample_interval: Some(0.05),
        ..SolverConfig::default()
    };
    // impacts accumulate at t ≈ 4.06 s (Zeno); stop before that
    match solve(&ball, &[1.0, 0.0], &cfg) {
        Ok(arc) => report(&arc),
        // only with t_end past the accumulation point
        Err(SolveError::NoProgress { t, j, cause }) => println!("stopped at t = {t:.6}, j = {j}: {cause:?}"),
        Err(e) => return Err(e.into()),
    }

    // analytic first impacts for comparison
    let mut t = (2.0 / G).sqrt();
    let mut v = G * t;
    print!("analytic impacts:");
    for _ in 0..5 {
        print!(" {t:.6}");
        v *= RESTITUTION;
        t += 2.0 * v / G;
    }
    println!();
    Ok(())
}

fn report(arc: &neurotherm::hybrid::HybridArc) {
    print!("simulated impacts:");
    for rec in arc.jump_records().iter().take(5) {
        print!(" {:.6}", rec.t);
    }
    println!("\n{} bounces up to t = {:.3}", arc.jump_count(), arc.final_time());
}
