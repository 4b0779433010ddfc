//! One neuron discharge integrated numerically next to the closed forms for
//! the spike duration `τ` and the buffer jump ratio `a`.
//!
//! ```text
//! cargo run --example spike_oracle
//! ```

use neurotherm::circuit::CircuitParams;
use neurotherm::hybrid::{solve, FnSystem, SolverConfig};
use neurotherm::models::SpikeConstants;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = CircuitParams::default();
    let (c_i, c_b) = (p.c1, p.c_fb);
    let (r4, r5, v_a, v_off) = (p.r4, p.r5, p.v_a, p.v_off);

    // (V_i, V_b): capacitor discharging through R5 while the buffer charges
    // toward V_A through R4; charge current and leakage are left out.
    let discharge = FnSystem::new("discharge", 2, move |x, dx| {
        dx[0] = -x[0] / (c_i * r5);
        dx[1] = (v_a - x[1]) / (c_b * r4);
    })
    .with_jump(move |x| v_off - x[0], |x, out| out.copy_from_slice(x));

    let cfg = SolverConfig {
        t_end: 1.0,
        j_max: 1,
        integrator_rel_tol: 1e-12,
        integrator_abs_tol: 1e-14,
        event_tolerance: 1e-12,
        max_step: 1e-6,
        ..SolverConfig::default()
    };
    let v_b0 = 0.5;
    let arc = solve(&discharge, &[p.v_on, v_b0], &cfg)?;
    let end = &arc.jump_records()[0];
    let tau_num = end.t;
    let a_num = (v_a - end.pre[1]) / (v_a - v_b0);

    let closed = SpikeConstants::for_neuron(&p, 1);
    println!("tau: closed form {:.9e} s, integrated {:.9e} s", closed.tau, tau_num);
    println!("a:   closed form {:.12}, integrated {:.12}", closed.a, a_num);
    println!(
        "relative errors: {:.2e}, {:.2e}",
        (tau_num - closed.tau).abs() / closed.tau,
        (a_num - closed.a).abs() / closed.a
    );
    Ok(())
}
