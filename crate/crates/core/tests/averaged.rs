use approx::assert_relative_eq;
use neurotherm::averaged::{self, AveragedError, AveragedModel, AveragedPlant, UTildeSample, LINEAR_WINDOW};
use neurotherm::circuit::{self, CircuitParams};
use neurotherm::hybrid::{solve, SolverConfig};
use neurotherm::models::AmbientProfile;
use proptest::prelude::*;

fn samples(f: impl Fn(f64) -> f64) -> Vec<UTildeSample> {
    (0..=80)
        .map(|k| {
            let t = k as f64;
            UTildeSample {
                temperature: t,
                u_tilde: f(t),
            }
        })
        .collect()
}

fn linear_model(slope: f64, zero: f64, alpha: f64) -> AveragedModel {
    let p = CircuitParams {
        alpha,
        ..CircuitParams::default()
    };
    AveragedModel::from_samples(&p, samples(|t| slope * (t - zero)), LINEAR_WINDOW, None).unwrap()
}

proptest! {
    #[test]
    fn synthetic_line_is_recovered(slope in 0.001f64..0.5, zero in 20.5f64..59.5) {
        let m = linear_model(slope, zero, 0.02);
        prop_assert!((m.t_set - zero).abs() < 1e-9);
        prop_assert!((m.c - m.b_gain * slope).abs() <= 1e-12 * m.c);
        prop_assert!(m.is_monotone());
    }

    #[test]
    fn feedforward_gain_cancels_the_loss(alpha in 1e-4f64..1.0, c in 1e-3f64..10.0) {
        let k = averaged::feedforward_gain(alpha, c);
        prop_assert!((k * c - alpha).abs() <= 1e-9 * alpha);
    }

    #[test]
    fn linear_steady_states_match_the_closed_form(
        slope in 0.005f64..0.2,
        alpha in 0.005f64..0.2,
        d in -10.0f64..10.0,
        k_frac in 0.0f64..1.5,
    ) {
        let m = linear_model(slope, 40.0, alpha);
        let k = k_frac * m.k_star;
        // e* is the root of the right-hand side
        let e_star = m.linear_equilibrium(d, k);
        prop_assert!(averaged::error_rate(e_star, d, &m, k).abs() < 1e-9);
        let no_ff = averaged::averaged_steady_state(0.0, d, &m, false, 1e-13, 1e4);
        prop_assert!((no_ff - alpha * d / (alpha + m.c)).abs() < 1e-6);
        let ff = averaged::averaged_steady_state(1.0, d, &m, true, 1e-13, 1e4);
        prop_assert!(ff.abs() < 1e-6);
    }

    #[test]
    fn optimal_gain_eliminates_the_disturbance(slope in 0.005f64..0.2, d in -20.0f64..20.0) {
        let m = linear_model(slope, 40.0, 0.02);
        prop_assert!(averaged::averaged_error_dynamics(0.0, d, &m, true).abs() < 1e-12 * (1.0 + d.abs()));
        let drift = averaged::averaged_error_dynamics(0.0, d, &m, false);
        prop_assert!(d == 0.0 || drift.signum() == d.signum());
    }

    #[test]
    fn grids_are_inclusive_and_uniform(lo in -10.0f64..40.0, span in 1.0f64..60.0, n in 1usize..60) {
        let step = span / n as f64;
        let g = averaged::temperature_grid(lo, lo + span, step).unwrap();
        prop_assert_eq!(g.len(), n + 1);
        prop_assert!((g[n] - (lo + span)).abs() < 1e-9);
    }
}

#[test]
fn crossings_are_validated() {
    assert!(matches!(
        averaged::find_t_set(&samples(|t| t + 1.0)),
        Err(AveragedError::NoCrossing)
    ));
    assert!(matches!(
        averaged::find_t_set(&samples(|t| (t - 20.5) * (t - 60.5))),
        Err(AveragedError::MultipleCrossings { count: 2 })
    ));
    assert_eq!(averaged::find_t_set(&samples(|t| t - 37.0)).unwrap(), 37.0);
}

#[test]
fn bad_grids_are_rejected() {
    assert!(averaged::temperature_grid(0.0, 1.0, 2.0).is_err());
    assert!(averaged::temperature_grid(5.0, 5.0, 1.0).is_err());
    assert!(averaged::temperature_grid(0.0, 10.0, 0.0).is_err());
}

#[test]
fn narrow_window_needs_five_points() {
    let s = samples(|t| t - 40.0);
    assert!(matches!(
        averaged::fit_slope_c(&s, (40.0, 43.0), 1.0),
        Err(AveragedError::InsufficientSamples { found: 4, .. })
    ));
}

#[test]
fn saturating_curve_keeps_the_sampled_shape() {
    let p = CircuitParams::default();
    let m = AveragedModel::from_samples(&p, samples(|t| ((t - 40.0) / 10.0).tanh()), LINEAR_WINDOW, None).unwrap();
    assert_relative_eq!(m.actuation(0.0), 0.0, epsilon = 1e-15);
    assert_relative_eq!(m.actuation(30.0), m.b_gain * 3.0f64.tanh(), max_relative = 1e-12);
    assert_relative_eq!(m.linearized().actuation(30.0), 30.0 * m.c, max_relative = 1e-12);
    let (_, extrapolated) = m.u_tilde(95.0);
    assert!(extrapolated);
}

#[test]
fn averaged_plant_settles_at_the_linear_equilibrium() {
    let m = linear_model(0.05, 40.0, 0.02).linearized();
    let plant = AveragedPlant {
        model: m.clone(),
        ambient: AmbientProfile::constant(46.0),
        k: 0.0,
    };
    let arc = solve(&plant, &[40.0, 0.0], &SolverConfig::default().with_t_end(400.0)).unwrap();
    let t_end = arc.last().unwrap().state[0];
    assert_relative_eq!(t_end - m.t_set, m.linear_equilibrium(6.0, 0.0), max_relative = 1e-6);
}

#[test]
fn simulated_u_tilde_changes_sign_near_the_gate_root() {
    let p = CircuitParams::default();
    let solver = SolverConfig::default();
    let grid = averaged::temperature_grid(34.0, 46.0, 2.0).unwrap();
    let s = averaged::estimate_u_tilde(&p, &grid, 6.0, &solver).unwrap();
    assert!(s.first().unwrap().u_tilde < 0.0 && s.last().unwrap().u_tilde > 0.0);
    let root = circuit::gate_equality_temperature(&p, 0.0, 100.0).unwrap();
    let t_set = averaged::find_t_set(&s).unwrap();
    assert!((t_set - root).abs() < 0.5, "{t_set} vs {root}");
}

#[test]
fn u_tilde_reference_values() {
    // frozen from a default-parameter run with a 20 s hold
    let p = CircuitParams::default();
    let solver = SolverConfig::default();
    for (t, expected) in [(20.0, U_20), (60.0, U_60)] {
        let u = averaged::u_tilde_at(&p, t, 20.0, &solver).unwrap();
        assert_relative_eq!(u, expected, max_relative = 1e-6);
    }
}

const U_20: f64 = -0.28293472235202216;
const U_60: f64 = 0.31998252168162944;

#[test]
fn calibration_places_the_gate_root_on_target() {
    let p = averaged::calibrate_ntc_b(&CircuitParams::default(), 39.84).unwrap();
    let root = circuit::gate_equality_temperature(&p, 0.0, 100.0).unwrap();
    assert!((root - 39.84).abs() < 1e-6);
    assert!(averaged::calibrate_ntc_b(&CircuitParams::default(), 500.0).is_err());
}
