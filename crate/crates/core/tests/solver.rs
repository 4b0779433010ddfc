use neurotherm::hybrid::{solve, FnSystem, HybridSystem, Priority, SolveError, SolverConfig};
use proptest::prelude::*;

fn sawtooth(slope: f64, threshold: f64) -> FnSystem {
    FnSystem::new("sawtooth", 1, move |_x, dx| dx[0] = slope)
        .with_jump(move |x| x[0] - threshold, |_x, out| out[0] = 0.0)
}

/// Ball under gravity with restitution `e`; state `(h, v)`.
fn bouncing_ball(e: f64) -> FnSystem {
    FnSystem::new("ball", 2, |x, dx| {
        dx[0] = x[1];
        dx[1] = -9.81;
    })
    // on the ground and moving down
    .with_jump(
        |x| (-x[0]).min(-x[1]),
        move |x, out| {
            out[0] = 0.0;
            out[1] = -e * x[1];
        },
    )
    .with_flow_guard(|x| -x[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sawtooth_jumps_on_schedule(slope in 0.2f64..5.0, threshold in 0.1f64..2.0, x0 in 0.0f64..1.0) {
        let x0 = x0 * threshold;
        let period = threshold / slope;
        let t_end = 7.3 * period;
        let arc = solve(&sawtooth(slope, threshold), &[x0], &SolverConfig::default().with_t_end(t_end)).unwrap();
        let first = (threshold - x0) / slope;
        let expected = ((t_end - first) / period).floor() as usize + 1;
        prop_assert_eq!(arc.jump_count(), expected);
        for (k, r) in arc.jump_records().iter().enumerate() {
            let t_k = first + k as f64 * period;
            prop_assert!((r.t - t_k).abs() <= 1e-9 * (1.0 + t_k), "jump {} at {} expected {}", k, r.t, t_k);
            prop_assert_eq!(r.j, k);
            prop_assert_eq!(r.post[0], 0.0);
        }
    }

    #[test]
    fn hybrid_time_is_ordered(slope in 0.5f64..3.0) {
        let arc = solve(&sawtooth(slope, 1.0), &[0.0], &SolverConfig::default().with_t_end(5.0)).unwrap();
        let s: Vec<_> = arc.samples().map(|s| (s.t, s.j)).collect();
        for w in s.windows(2) {
            prop_assert!(w[1].0 > w[0].0 && w[1].1 == w[0].1 || w[1].0 == w[0].0 && w[1].1 == w[0].1 + 1);
        }
    }

    #[test]
    fn reruns_are_bitwise_identical(slope in 0.2f64..5.0, interval in proptest::option::of(0.01f64..0.3)) {
        let cfg = SolverConfig { sample_interval: interval, ..SolverConfig::default().with_t_end(4.0) };
        let sys = sawtooth(slope, 1.0);
        prop_assert_eq!(solve(&sys, &[0.25], &cfg).unwrap(), solve(&sys, &[0.25], &cfg).unwrap());
    }

    #[test]
    fn jump_first_leaves_no_flow_sample_in_a_jump_set(slope in 0.2f64..5.0, x0 in -1.0f64..0.999) {
        let sys = sawtooth(slope, 1.0);
        let cfg = SolverConfig::default().with_t_end(6.0);
        let arc = solve(&sys, &[x0], &cfg).unwrap();
        let pre: Vec<(f64, usize)> = arc.jump_records().iter().map(|r| (r.t, r.j)).collect();
        for s in arc.samples() {
            if !pre.contains(&(s.t, s.j)) {
                prop_assert!(sys.jump_guard(0, s.state) <= cfg.event_tolerance, "sample {:?}", s);
            }
        }
    }

    #[test]
    fn linear_flow_matches_the_exponential(lambda in -3.0f64..1.0, x0 in -2.0f64..2.0) {
        let sys = FnSystem::new("linear", 1, move |x, dx| dx[0] = lambda * x[0]);
        let arc = solve(&sys, &[x0], &SolverConfig::default().with_t_end(2.0)).unwrap();
        let last = arc.last().unwrap();
        let exact = x0 * (2.0 * lambda).exp();
        prop_assert!((last.state[0] - exact).abs() <= 1e-6 * (1.0 + exact.abs()));
    }

    #[test]
    fn grid_samples_are_multiples_of_the_interval(k in 1u32..50) {
        let dt = 1.0 / f64::from(k);
        let cfg = SolverConfig { sample_interval: Some(dt), ..SolverConfig::default().with_t_end(2.5) };
        let arc = solve(&sawtooth(1.3, 1.0), &[0.0], &cfg).unwrap();
        let pre: Vec<f64> = arc.jump_records().iter().map(|r| r.t).collect();
        for s in arc.samples() {
            let on_grid = (s.t / dt).round() * dt == s.t;
            prop_assert!(on_grid || pre.contains(&s.t) || s.t == 2.5, "t = {}", s.t);
        }
    }
}

#[test]
fn bouncing_ball_impacts_match_the_closed_form() {
    let e = 0.8;
    let h0 = 1.0;
    let arc = solve(&bouncing_ball(e), &[h0, 0.0], &SolverConfig::default().with_t_end(3.5)).unwrap();
    let g = 9.81;
    let mut t = (2.0 * h0 / g).sqrt();
    let mut v = (2.0 * g * h0).sqrt();
    for r in arc.jump_records().iter().take(6) {
        assert!((r.t - t).abs() < 1e-8, "impact at {} expected {}", r.t, t);
        assert!((r.post[1] - e * v).abs() < 1e-6);
        v *= e;
        t += 2.0 * v / g;
    }
}

#[test]
fn bouncing_ball_without_restitution_loss_keeps_its_height() {
    let arc = solve(
        &bouncing_ball(1.0),
        &[2.0, 0.0],
        &SolverConfig::default().with_t_end(10.0),
    )
    .unwrap();
    let peak = arc.samples().map(|s| s.state[0]).fold(f64::NEG_INFINITY, f64::max);
    assert!((peak - 2.0).abs() < 1e-6);
    assert!(arc.samples().all(|s| s.state[0] > -1e-8));
}

#[test]
fn flow_first_runs_past_the_guard_when_flow_is_allowed() {
    // jump set x ≥ 1, flow set everywhere
    let sys = FnSystem::new("free", 1, |_x, dx| dx[0] = 1.0)
        .with_jump(|x| x[0] - 1.0, |_x, out| out[0] = 0.0)
        .with_flow_guard(|_x| -1.0);
    let jump_first = solve(&sys, &[1.0], &SolverConfig::default().with_t_end(0.5)).unwrap();
    assert_eq!(jump_first.jump_records()[0].t, 0.0);
    let cfg = SolverConfig {
        priority: Priority::FlowFirst,
        ..SolverConfig::default().with_t_end(0.5)
    };
    let flow_first = solve(&sys, &[1.0], &cfg).unwrap();
    assert_eq!(flow_first.jump_count(), 0);
    assert!((flow_first.last().unwrap().state[0] - 1.5).abs() < 1e-12);
}

#[test]
fn instantaneous_loop_is_reported_as_zeno() {
    let sys = FnSystem::new("stuck", 1, |_x, dx| dx[0] = 0.0).with_jump(|_x| 1.0, |x, out| out[0] = x[0]);
    match solve(&sys, &[0.0], &SolverConfig::default()) {
        Err(e @ SolveError::NoProgress { .. }) => assert_eq!(e.hybrid_time().map(|h| h.0), Some(0.0)),
        other => panic!("expected a stall, got {other:?}"),
    }
}

#[test]
fn bad_configs_are_rejected() {
    let sys = sawtooth(1.0, 1.0);
    for cfg in [
        SolverConfig {
            t_end: -1.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            event_tolerance: 0.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            sample_interval: Some(0.0),
            ..SolverConfig::default()
        },
    ] {
        assert!(matches!(solve(&sys, &[0.0], &cfg), Err(SolveError::InvalidConfig(_))));
    }
    assert!(matches!(
        solve(&sys, &[0.0, 1.0], &SolverConfig::default()),
        Err(SolveError::DimensionMismatch { expected: 1, got: 2 })
    ));
}
