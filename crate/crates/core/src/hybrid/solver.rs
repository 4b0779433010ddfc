//! Event-locating simulation of hybrid systems.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::arc::{HybridArc, JumpRecord};
use super::event::locate_event;
use super::integrator::{DenseOutput, Dopri5};
use super::system::HybridSystem;

/// What to do when the state lies in both the flow set and a jump set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Priority {
    #[default]
    JumpFirst,
    FlowFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub t_end: f64,
    pub j_max: usize,
    pub max_step: f64,
    /// Jumps happen where the firing guard satisfies `|g| ≤ event_tolerance`.
    pub event_tolerance: f64,
    pub integrator_rel_tol: f64,
    pub integrator_abs_tol: f64,
    pub priority: Priority,
    /// Store flow samples on a uniform grid (dense output) instead of at
    /// every accepted step. Jump pre/post states are always stored.
    pub sample_interval: Option<f64>,
    /// More than this many jumps while `t` advances less than
    /// `zeno_min_advance` is reported as Zeno behaviour.
    pub zeno_jump_limit: usize,
    pub zeno_min_advance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            j_max: 100_000_000,
            max_step: 5e-3,
            event_tolerance: 1e-9,
            integrator_rel_tol: 1e-8,
            integrator_abs_tol: 1e-10,
            priority: Priority::JumpFirst,
            sample_interval: None,
            zeno_jump_limit: 1000,
            zeno_min_advance: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |what: &str| Err(SolveError::InvalidConfig(what.to_string()));
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return bad("t_end must be finite and non-negative");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be > 0");
        }
        if !(self.event_tolerance > 0.0) {
            return bad("event_tolerance must be > 0");
        }
        if !(self.integrator_rel_tol > 0.0 && self.integrator_abs_tol > 0.0) {
            return bad("integrator tolerances must be > 0");
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0) {
                return bad("sample_interval must be > 0");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stall {
    /// The state is in neither the flow set nor any jump set.
    OutsideFlowAndJumpSets,
    /// Jumps accumulate without time advancing.
    ZenoAccumulation,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has dimension {got}, system expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no progress at hybrid time (t = {t}, j = {j}): {cause:?}")]
    NoProgress { t: f64, j: usize, cause: Stall },
    #[error("integrator step size underflow (h = {h:e}) at hybrid time (t = {t}, j = {j})")]
    IntegratorFailure { t: f64, j: usize, h: f64 },
}

impl SolveError {
    /// Hybrid time at which the failure happened, if any.
    pub fn hybrid_time(&self) -> Option<(f64, usize)> {
        match *self {
            SolveError::NoProgress { t, j, .. } | SolveError::IntegratorFailure { t, j, .. } => Some((t, j)),
            _ => None,
        }
    }
}

struct Recorder<'a> {
    arc: &'a mut HybridArc,
    last: Option<(f64, usize)>,
    next_grid: Option<(f64, u64)>,
    dt: Option<f64>,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, j: usize, x: &[f64]) {
        if self.last == Some((t, j)) {
            return;
        }
        self.arc.push(t, j, x);
        self.last = Some((t, j));
    }

    /// Emits grid samples in `(t_start, t_stop]` from the step interpolant.
    fn record_grid<D: DenseOutput>(&mut self, dense: &D, t_stop: f64, j: usize, buf: &mut [f64]) {
        let Some(dt) = self.dt else { return };
        while let Some((tg, k)) = self.next_grid {
            if tg > t_stop {
                break;
            }
            dense.eval(tg, buf);
            self.record(tg, j, buf);
            let k = k + 1;
            self.next_grid = Some((k as f64 * dt, k));
        }
    }
}

/// Simulates `system` from `initial_state` at `t = 0` until `t ≥ t_end` or
/// `j ≥ j_max`.
///
/// Flow uses adaptive Dormand–Prince steps. After each accepted step every
/// jump guard is checked for a crossing; the earliest crossing (ties broken by
/// ascending condition index) is located on the step's dense output and the
/// step is truncated there. A jump fires only where its guard is within
/// `event_tolerance` of zero or above; with several enabled conditions the
/// lowest index fires first, one jump per hybrid instant.
pub fn solve<S>(system: &S, initial_state: &[f64], config: &SolverConfig) -> Result<HybridArc, SolveError>
where
    S: HybridSystem + ?Sized,
{
    config.validate()?;
    let n = system.dimension();
    if initial_state.len() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            got: initial_state.len(),
        });
    }
    let tol = config.event_tolerance;
    let n_jump = system.jump_condition_count();
    let n_flow = system.flow_guard_count();
    let flow_first = config.priority == Priority::FlowFirst;

    let mut arc = HybridArc::new(n);
    let mut rec = Recorder {
        arc: &mut arc,
        last: None,
        next_grid: config.sample_interval.map(|dt| (dt, 1)),
        dt: config.sample_interval,
    };

    let mut t = 0.0_f64;
    let mut j = 0usize;
    let mut x = initial_state.to_vec();
    let mut x_post = vec![0.0; n];
    let mut buf = vec![0.0; n];
    let mut guards = vec![0.0; n_jump];
    rec.record(t, j, &x);

    let mut rk = Dopri5::new(n, config.integrator_rel_tol, config.integrator_abs_tol);
    let mut h = config.max_step.min(1e-3).min(config.t_end.max(f64::MIN_POSITIVE));
    let min_h = |t: f64| 1e-14 * t.abs().max(1.0);

    let mut zeno_anchor = t;
    let mut zeno_count = 0usize;
    let mut at_boundary = false;
    let flow = |x: &[f64], dx: &mut [f64]| system.flow(x, dx);

    while t < config.t_end && j < config.j_max {
        for (k, g) in guards.iter_mut().enumerate() {
            *g = system.jump_guard(k, &x);
        }
        let enabled = guards.iter().position(|&g| g >= -tol);
        let in_flow = (0..n_flow).all(|k| system.flow_guard(k, &x) <= tol);

        if let Some(k) = enabled {
            if !flow_first || !in_flow || at_boundary {
                rec.record(t, j, &x);
                system.jump(k, &x, &mut x_post);
                rec.arc.push_jump(JumpRecord {
                    t,
                    j,
                    pre: x.clone(),
                    post: x_post.clone(),
                    condition: k,
                });
                std::mem::swap(&mut x, &mut x_post);
                j += 1;
                rec.record(t, j, &x);
                rk.reset();
                at_boundary = false;

                if t - zeno_anchor >= config.zeno_min_advance {
                    zeno_anchor = t;
                    zeno_count = 0;
                }
                zeno_count += 1;
                if zeno_count > config.zeno_jump_limit {
                    return Err(SolveError::NoProgress {
                        t,
                        j,
                        cause: Stall::ZenoAccumulation,
                    });
                }
                continue;
            }
        }
        // At a flow-set exit with no jump enabled the solution cannot continue.
        if !in_flow || at_boundary {
            return Err(SolveError::NoProgress {
                t,
                j,
                cause: Stall::OutsideFlowAndJumpSets,
            });
        }
        at_boundary = false;

        // One accepted flow step.
        let remaining = config.t_end - t;
        let cap = system
            .step_limit(&x)
            .map_or(config.max_step, |s| s.min(config.max_step))
            .min(remaining);
        h = h.min(cap);
        loop {
            let out = rk.try_step(&flow, &x, h);
            if out.error <= 1.0 {
                rk.accept(t, &x, h);
                let next = out.next_h;
                let t_new = if h == remaining { config.t_end } else { t + h };
                let x_new = rk.proposed();

                // Earliest crossing among jump guards and flow-set exits.
                let mut best: Option<(f64, usize, Vec<f64>)> = None;
                for (k, &g_old) in guards.iter().enumerate() {
                    // Guards already enabled at the step start only occur under
                    // flow-first priority; those jump once the flow exits C.
                    if g_old >= -tol {
                        continue;
                    }
                    let g_new = system.jump_guard(k, x_new);
                    if g_new < -tol {
                        continue;
                    }
                    if g_new <= tol {
                        consider(&mut best, t_new, k, x_new.to_vec());
                    } else {
                        let ev = locate_event(|s| system.jump_guard(k, s), rk.dense(), 0.0, tol)
                            .unwrap_or_else(|_| point_at_end(rk.dense(), t_new));
                        consider(&mut best, ev.t, k, ev.state);
                    }
                }
                for k in 0..n_flow {
                    if system.flow_guard(k, x_new) <= tol {
                        continue;
                    }
                    if let Some((_, _, state)) = &best {
                        if system.flow_guard(k, state) <= tol {
                            continue;
                        }
                    }
                    if let Ok(ev) = locate_event(|s| system.flow_guard(k, s), rk.dense(), 0.0, tol) {
                        consider(&mut best, ev.t, n_jump + k, ev.state);
                    }
                }

                match best {
                    Some((t_ev, idx, state)) => {
                        let dense = rk.dense().clone();
                        rec.record_grid(&dense, t_ev, j, &mut buf);
                        t = t_ev;
                        x.copy_from_slice(&state);
                        rk.reset();
                        // Stopped because the flow would leave C: flowing on is impossible.
                        at_boundary = idx >= n_jump;
                        rec.record(t, j, &x);
                    }
                    None => {
                        let dense = rk.dense().clone();
                        x.copy_from_slice(x_new);
                        rec.record_grid(&dense, t_new, j, &mut buf);
                        t = t_new;
                        if rec.dt.is_none() {
                            rec.record(t, j, &x);
                        }
                    }
                }
                h = next;
                break;
            }
            h = out.next_h.min(cap);
            if h < min_h(t) {
                return Err(SolveError::IntegratorFailure { t, j, h });
            }
        }
    }
    rec.record(t, j, &x);
    Ok(arc)
}

/// Keeps the earliest event, ties broken by lower index.
fn consider(best: &mut Option<(f64, usize, Vec<f64>)>, t_ev: f64, idx: usize, state: Vec<f64>) {
    let better = match best {
        None => true,
        Some((tb, ib, _)) => t_ev < *tb || (t_ev == *tb && idx < *ib),
    };
    if better {
        *best = Some((t_ev, idx, state));
    }
}

fn point_at_end<D: DenseOutput>(dense: &D, t_end: f64) -> super::event::EventPoint {
    let mut state = vec![0.0; dense.dimension()];
    dense.eval(dense.t_end(), &mut state);
    super::event::EventPoint {
        t: t_end,
        state,
        residual: f64::NAN,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::FnSystem;

    fn sawtooth() -> FnSystem {
        FnSystem::new("sawtooth", 1, |_x, dx| dx[0] = 1.0).with_jump(|x| x[0] - 1.0, |_x, out| out[0] = 0.0)
    }

    #[test]
    fn identity_flow_stays_constant() {
        let sys = FnSystem::new("still", 1, |_x, dx| dx[0] = 0.0);
        let arc = solve(&sys, &[5.0], &SolverConfig::default().with_t_end(1.0)).unwrap();
        let last = arc.last().unwrap();
        assert_eq!(last.t, 1.0);
        assert_eq!(last.j, 0);
        assert_eq!(last.state, &[5.0]);
    }

    #[test]
    fn sawtooth_jumps_at_integers() {
        let cfg = SolverConfig {
            t_end: 2.5,
            j_max: 10,
            ..SolverConfig::default()
        };
        let arc = solve(&sawtooth(), &[0.0], &cfg).unwrap();
        let times: Vec<f64> = arc.jump_records().iter().map(|r| r.t).collect();
        assert_eq!(times.len(), 2);
        assert!((times[0] - 1.0).abs() <= 1e-9);
        assert!((times[1] - 2.0).abs() <= 1e-9);
        assert_eq!(arc.last().unwrap().j, 2);
        assert!((arc.last().unwrap().state[0] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn j_max_stops_the_run() {
        let cfg = SolverConfig {
            t_end: 10.0,
            j_max: 3,
            ..SolverConfig::default()
        };
        let arc = solve(&sawtooth(), &[0.0], &cfg).unwrap();
        assert_eq!(arc.jump_count(), 3);
        assert!((arc.final_time() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn zeno_is_reported() {
        // x stays in the jump set forever
        let sys = FnSystem::new("stuck", 1, |_x, dx| dx[0] = 0.0).with_jump(|x| x[0], |x, out| out[0] = x[0]);
        let err = solve(&sys, &[1.0], &SolverConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            SolveError::NoProgress {
                cause: Stall::ZenoAccumulation,
                ..
            }
        ));
    }

    #[test]
    fn outside_both_sets_is_reported() {
        let sys = FnSystem::new("nowhere", 1, |_x, dx| dx[0] = 1.0)
            .with_flow_guard(|x| x[0] - 1.0)
            .with_jump(|x| x[0] - 5.0, |_x, out| out[0] = 0.0);
        let err = solve(&sys, &[2.0], &SolverConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            SolveError::NoProgress {
                cause: Stall::OutsideFlowAndJumpSets,
                ..
            }
        ));
    }

    #[test]
    fn flow_exit_without_jump_stops_at_boundary() {
        let sys = FnSystem::new("wall", 1, |_x, dx| dx[0] = 1.0).with_flow_guard(|x| x[0] - 1.0);
        let err = solve(&sys, &[0.0], &SolverConfig::default().with_t_end(3.0)).unwrap_err();
        match err {
            SolveError::NoProgress { t, .. } => assert!((t - 1.0).abs() < 1e-8, "t = {t}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flow_first_delays_the_jump() {
        // Starts inside C ∩ D; jump-first resets immediately, flow-first
        // flows until the state leaves C.
        let sys = FnSystem::new("band", 1, |_x, dx| dx[0] = 1.0)
            .with_flow_guard(|x| x[0] - 1.0)
            .with_jump(|x| x[0] - 0.5, |_x, out| out[0] = -10.0);
        let jf = solve(&sys, &[0.7], &SolverConfig::default().with_t_end(0.5)).unwrap();
        assert_eq!(jf.jump_records()[0].t, 0.0);
        let cfg = SolverConfig {
            priority: Priority::FlowFirst,
            ..SolverConfig::default().with_t_end(0.5)
        };
        let ff = solve(&sys, &[0.7], &cfg).unwrap();
        let first = &ff.jump_records()[0];
        assert!((first.t - 0.3).abs() < 1e-8, "t = {}", first.t);
    }

    #[test]
    fn grid_sampling_emits_uniform_times() {
        let cfg = SolverConfig {
            t_end: 1.0,
            sample_interval: Some(0.1),
            ..SolverConfig::default()
        };
        let sys = FnSystem::new("decay", 1, |x, dx| dx[0] = -x[0]);
        let arc = solve(&sys, &[1.0], &cfg).unwrap();
        assert_eq!(arc.len(), 11);
        for s in arc.samples() {
            assert!((s.state[0] - (-s.t).exp()).abs() < 1e-7);
        }
    }

    #[test]
    fn mismatched_dimension_is_rejected() {
        let err = solve(&sawtooth(), &[0.0, 1.0], &SolverConfig::default()).unwrap_err();
        assert_eq!(err, SolveError::DimensionMismatch { expected: 1, got: 2 });
    }
}
