use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::averaged::{self, AveragedError, AveragedModel, AveragedPlant, DEFAULT_HOLD, LINEAR_WINDOW};
use crate::circuit::CircuitParams;
use crate::hybrid::{solve, HybridArc, SolveError, SolverConfig};
use crate::models::{ModelA, ModelB, ModelError, SpikeError, SpikeTrains, ThermoModel};

use super::config::{ConfigError, FeedforwardGain, ModelKind, Scenario};
use super::svg::{thin, LinePlot, Series};
use super::trajectory::{grid_indices, trajectory_rows, write_trajectory_csv, RunReport, TrajectoryRow};

const PLOT_POINTS: usize = 2000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Averaged(#[from] AveragedError),
    #[error(transparent)]
    Spike(#[from] SpikeError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExperimentError {
    /// 2 for configuration problems, 3 for failures during simulation.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Model(_) | ExperimentError::Io { .. } => 2,
            ExperimentError::Solve(SolveError::InvalidConfig(_) | SolveError::DimensionMismatch { .. }) => 2,
            ExperimentError::Averaged(
                AveragedError::Model(_)
                | AveragedError::InvalidGrid(_)
                | AveragedError::InvalidHold(_)
                | AveragedError::CalibrationFailed { .. }
                | AveragedError::Solve(SolveError::InvalidConfig(_)),
            ) => 2,
            _ => 3,
        }
    }
}

/// Inputs shared by every command.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub params: CircuitParams,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
}

impl RunContext {
    pub fn new(params: CircuitParams, solver: SolverConfig, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            params,
            solver,
            out_dir: out_dir.into(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_file(
        &self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<PathBuf, ExperimentError> {
        let path = self.path(name);
        let io_err = |source| ExperimentError::Io {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(&self.out_dir).map_err(|source| ExperimentError::Io {
            path: self.out_dir.clone(),
            source,
        })?;
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        Ok(path)
    }
}

/// A finished model-A/B run.
#[derive(Debug, Clone)]
pub struct ModelRun {
    pub arc: HybridArc,
    pub rows: Vec<TrajectoryRow>,
    pub report: RunReport,
    pub trains: SpikeTrains,
}

fn run_with<M: ThermoModel>(
    model: &M,
    scenario: &Scenario,
    solver: &SolverConfig,
) -> Result<ModelRun, ExperimentError> {
    let cfg = SolverConfig {
        t_end: scenario.duration,
        sample_interval: Some(1.0 / scenario.output_decimation),
        ..solver.clone()
    };
    let x0 = model.initial_state(&scenario.initial_state);
    let started = Instant::now();
    let arc = solve(model, &x0, &cfg)?;
    let wall = started.elapsed().as_secs_f64();
    let rows = trajectory_rows(model, &arc, scenario.output_decimation)?;
    Ok(ModelRun {
        report: RunReport::new(model, &arc, wall),
        trains: SpikeTrains::from_arc(model, &arc),
        rows,
        arc,
    })
}

/// Runs model A or B for `scenario` with feedforward gain `k`.
pub fn run_model(
    params: &CircuitParams,
    solver: &SolverConfig,
    scenario: &Scenario,
    k: f64,
) -> Result<ModelRun, ExperimentError> {
    scenario.validate()?;
    let p = params.clone().with_feedforward_gain(k);
    match scenario.model {
        ModelKind::A => run_with(&ModelA::new(p, scenario.ambient)?, scenario, solver),
        ModelKind::B => run_with(&ModelB::new(p, scenario.ambient)?, scenario, solver),
        ModelKind::Averaged => Err(ConfigError::Invalid("averaged scenarios run through run_averaged".into()).into()),
    }
}

/// One output row of the averaged closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedRow {
    pub t: f64,
    pub temperature: f64,
    pub t_amb: f64,
    /// `ũ(T)`.
    pub u_fb: f64,
    /// `ũ(T_amb)`.
    pub u_ff: f64,
    pub u: f64,
}

pub fn run_averaged(
    model: &AveragedModel,
    solver: &SolverConfig,
    scenario: &Scenario,
    k: f64,
) -> Result<(Vec<AveragedRow>, f64), ExperimentError> {
    scenario.validate()?;
    let plant = AveragedPlant {
        model: model.clone(),
        ambient: scenario.ambient,
        k,
    };
    let cfg = SolverConfig {
        t_end: scenario.duration,
        sample_interval: Some(1.0 / scenario.output_decimation),
        ..solver.clone()
    };
    let started = Instant::now();
    let arc = solve(&plant, &[scenario.initial_state.temperature, 0.0], &cfg)?;
    let wall = started.elapsed().as_secs_f64();
    let rows = grid_indices(&arc, scenario.output_decimation)
        .into_iter()
        .map(|i| {
            let s = arc.sample(i);
            let t_amb = scenario.ambient.at(s.t);
            let u_fb = model.u_tilde(s.state[0]).0;
            let u_ff = model.u_tilde(t_amb).0;
            AveragedRow {
                t: s.t,
                temperature: s.state[0],
                t_amb,
                u_fb,
                u_ff,
                u: u_fb + k * u_ff,
            }
        })
        .collect();
    Ok((rows, wall))
}

/// Temperature sweep settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
    pub hold: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            t_min: 0.0,
            t_max: 80.0,
            step: 1.0,
            hold: DEFAULT_HOLD,
        }
    }
}

/// Fits the averaged model with `spec`.
pub fn fit(ctx: &RunContext, spec: &SweepSpec) -> Result<AveragedModel, ExperimentError> {
    let grid = averaged::temperature_grid(spec.t_min, spec.t_max, spec.step)?;
    Ok(averaged::fit_averaged_model(
        &ctx.params,
        &ctx.solver,
        &grid,
        spec.hold,
        LINEAR_WINDOW,
    )?)
}

fn resolve_gain(ctx: &RunContext, k: FeedforwardGain) -> Result<(f64, Option<AveragedModel>), ExperimentError> {
    match k {
        FeedforwardGain::Fixed(k) => Ok((k, None)),
        FeedforwardGain::Auto => {
            let m = fit(ctx, &SweepSpec::default())?;
            Ok((m.k_star, Some(m)))
        }
    }
}

/// `simulate`: one scenario, trajectory CSV, plot and report.
pub fn simulate(ctx: &RunContext, scenario: &Scenario) -> Result<RunReport, ExperimentError> {
    scenario.validate()?;
    let (k, fitted) = resolve_gain(ctx, scenario.feedforward_k)?;
    if scenario.model == ModelKind::Averaged {
        let m = match fitted {
            Some(m) => m,
            None => fit(ctx, &SweepSpec::default())?,
        };
        let (rows, wall) = run_averaged(&m, &ctx.solver, scenario, k)?;
        let csv_path = ctx.write_file("trajectory.csv", |w| write_averaged_csv(&rows, w))?;
        let plot = LinePlot::new("Averaged closed loop", "t [s]", "°C")
            .with_series(Series::new(
                "T",
                thin(
                    &rows.iter().map(|r| (r.t, r.temperature)).collect::<Vec<_>>(),
                    PLOT_POINTS,
                ),
            ))
            .with_series(Series::new(
                "T_amb",
                thin(&rows.iter().map(|r| (r.t, r.t_amb)).collect::<Vec<_>>(), PLOT_POINTS),
            ));
        let svg_path = ctx.write_file("trajectory.svg", |w| w.write_all(plot.render().as_bytes()))?;
        let last = rows.last().copied();
        let mut report = RunReport {
            model: "averaged".into(),
            wall_time: wall,
            jump_count_total: 0,
            jump_counts_by_category: Default::default(),
            final_time: last.map_or(0.0, |r| r.t),
            final_state: last.map(|r| vec![r.temperature]).unwrap_or_default(),
            outputs: vec![csv_path, svg_path],
        };
        let report_path = ctx.path("report.txt");
        report.outputs.push(report_path);
        ctx.write_file("report.txt", |w| report.write(w))?;
        return Ok(report);
    }

    let run = run_model(&ctx.params, &ctx.solver, scenario, k)?;
    let csv_path = ctx.write_file("trajectory.csv", |w| write_trajectory_csv(&run.rows, w))?;
    let pts =
        |f: fn(&TrajectoryRow) -> f64| thin(&run.rows.iter().map(|r| (r.t, f(r))).collect::<Vec<_>>(), PLOT_POINTS);
    let plot = LinePlot::new(format!("Model {}", scenario.model), "t [s]", "°C")
        .with_series(Series::new("T", pts(|r| r.temperature())))
        .with_series(Series::new("T_amb", pts(|r| r.signals.t_amb)));
    let svg_path = ctx.write_file("trajectory.svg", |w| w.write_all(plot.render().as_bytes()))?;
    let mut report = run.report;
    report.outputs = vec![csv_path, svg_path, ctx.path("report.txt")];
    ctx.write_file("report.txt", |w| report.write(w))?;
    Ok(report)
}

pub fn write_averaged_csv(rows: &[AveragedRow], out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "T", "T_amb", "u_fb", "u_ff", "u"])?;
    for r in rows {
        w.write_record([r.t, r.temperature, r.t_amb, r.u_fb, r.u_ff, r.u].map(|v| v.to_string()))?;
    }
    w.flush()
}

/// `sweep-u`: ũ table, fitted constants and plot.
pub fn sweep_u(ctx: &RunContext, spec: &SweepSpec) -> Result<AveragedModel, ExperimentError> {
    let m = fit(ctx, spec)?;
    ctx.write_file("u_tilde.csv", |w| m.write_table(w))?;
    ctx.write_file("u_tilde_summary.txt", |w| m.write_summary(w))?;
    let plot = LinePlot::new("Averaged feedback signal", "T [°C]", "ũ [V]").with_series(Series::new(
        "ũ(T)",
        m.samples.iter().map(|s| (s.temperature, s.u_tilde)).collect(),
    ));
    ctx.write_file("u_tilde.svg", |w| w.write_all(plot.render().as_bytes()))?;
    Ok(m)
}

/// Metrics of the paired ambient-ramp runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RampOutcome {
    pub model: AveragedModel,
    pub without_ff: Vec<TrajectoryRow>,
    pub with_ff: Vec<TrajectoryRow>,
    /// Largest `|T − T_set|` with `K = K*` while `T_amb ∈ [30, 50] °C`.
    pub max_error_with_ff: f64,
    /// `|T − T_set|` of both runs when `T_amb` reaches 50 °C.
    pub error_at_50_without_ff: f64,
    pub error_at_50_with_ff: f64,
    /// Least-squares slope of `T − T_set` against `T_amb − T_set` without
    /// feedforward, over the window.
    pub slope_without_ff: f64,
    /// Mean `|u_fb|` with feedforward divided by the mean without, over the window.
    pub feedback_ratio: f64,
}

fn in_window(r: &TrajectoryRow) -> bool {
    (LINEAR_WINDOW.0..=LINEAR_WINDOW.1).contains(&r.signals.t_amb)
}

/// Paired model-B runs over the 0 → 80 °C ramp with `K = 0` and `K = K*`.
/// `model` is fitted with the default sweep when absent.
pub fn ramp(ctx: &RunContext, model: Option<AveragedModel>) -> Result<RampOutcome, ExperimentError> {
    let m = match model {
        Some(m) => m,
        None => fit(ctx, &SweepSpec::default())?,
    };
    let scenario = Scenario::ambient_ramp(FeedforwardGain::Fixed(0.0));
    let (a, b) = rayon::join(
        || run_model(&ctx.params, &ctx.solver, &scenario, 0.0),
        || run_model(&ctx.params, &ctx.solver, &scenario, m.k_star),
    );
    let (without_ff, with_ff) = (a?.rows, b?.rows);
    let t_set = m.t_set;
    let err = |r: &TrajectoryRow| (r.temperature() - t_set).abs();

    let max_error_with_ff = with_ff.iter().filter(|r| in_window(r)).map(err).fold(0.0, f64::max);
    let at_50 = |rows: &[TrajectoryRow]| rows.iter().find(|r| r.signals.t_amb >= 50.0).map_or(f64::NAN, err);
    let (xs, ys): (Vec<f64>, Vec<f64>) = without_ff
        .iter()
        .filter(|r| in_window(r))
        .map(|r| (r.signals.t_amb - t_set, r.temperature() - t_set))
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let mean_fb = |rows: &[TrajectoryRow]| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| in_window(r))
            .map(|r| r.signals.u_fb.abs())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };

    let outcome = RampOutcome {
        max_error_with_ff,
        error_at_50_without_ff: at_50(&without_ff),
        error_at_50_with_ff: at_50(&with_ff),
        slope_without_ff: sxy / sxx,
        feedback_ratio: mean_fb(&with_ff) / mean_fb(&without_ff),
        model: m,
        without_ff,
        with_ff,
    };
    write_ramp_outputs(ctx, &outcome)?;
    Ok(outcome)
}

fn write_ramp_outputs(ctx: &RunContext, o: &RampOutcome) -> Result<(), ExperimentError> {
    ctx.write_file("ramp.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "t",
            "T_amb",
            "T_K0",
            "u_fb_K0",
            "u_ff_K0",
            "T_Kstar",
            "u_fb_Kstar",
            "u_ff_Kstar",
        ])?;
        for (a, b) in o.without_ff.iter().zip(&o.with_ff) {
            debug_assert_eq!(a.t, b.t);
            c.write_record(
                [
                    a.t,
                    a.signals.t_amb,
                    a.temperature(),
                    a.signals.u_fb,
                    a.signals.u_ff,
                    b.temperature(),
                    b.signals.u_fb,
                    b.signals.u_ff,
                ]
                .map(|v| v.to_string()),
            )?;
        }
        c.flush()
    })?;
    let vs_amb = |rows: &[TrajectoryRow], f: fn(&TrajectoryRow) -> f64| {
        thin(
            &rows.iter().map(|r| (r.signals.t_amb, f(r))).collect::<Vec<_>>(),
            PLOT_POINTS,
        )
    };
    let temps = LinePlot::new("Core temperature under an ambient ramp", "T_amb [°C]", "T [°C]")
        .with_series(Series::new("K = 0", vs_amb(&o.without_ff, |r| r.temperature())))
        .with_series(Series::new("K = K*", vs_amb(&o.with_ff, |r| r.temperature())));
    ctx.write_file("ramp_temperature.svg", |w| w.write_all(temps.render().as_bytes()))?;
    let signals = LinePlot::new("Control signals under an ambient ramp", "T_amb [°C]", "V")
        .with_series(Series::new("u_fb, K = 0", vs_amb(&o.without_ff, |r| r.signals.u_fb)))
        .with_series(Series::new("u_ff, K = 0", vs_amb(&o.without_ff, |r| r.signals.u_ff)))
        .with_series(Series::new("u_fb, K = K*", vs_amb(&o.with_ff, |r| r.signals.u_fb)))
        .with_series(Series::new("u_ff, K = K*", vs_amb(&o.with_ff, |r| r.signals.u_ff)));
    ctx.write_file("ramp_signals.svg", |w| w.write_all(signals.render().as_bytes()))?;
    ctx.write_file("ramp_summary.txt", |w| {
        o.model.write_summary(&mut *w)?;
        writeln!(w, "max_error_with_ff = {}", o.max_error_with_ff)?;
        writeln!(w, "error_at_50_without_ff = {}", o.error_at_50_without_ff)?;
        writeln!(w, "error_at_50_with_ff = {}", o.error_at_50_with_ff)?;
        writeln!(w, "slope_without_ff = {}", o.slope_without_ff)?;
        writeln!(w, "feedback_ratio = {}", o.feedback_ratio)
    })?;
    Ok(())
}

/// Model A against model B on the same scenario.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub a: ModelRun,
    pub b: ModelRun,
    /// `max_t |T_A − T_B|` over the common output grid.
    pub sup_temperature_difference: f64,
    /// `|f_A − f_B| / f_B` of the mean firing rates per neuron.
    pub rate_relative_difference: [f64; 4],
}

impl Comparison {
    pub fn jump_ratio(&self) -> f64 {
        self.a.report.jump_count_total as f64 / self.b.report.jump_count_total as f64
    }
}

/// `compare-models`: both models on `scenario` (default: constant 40 °C, 20 s).
pub fn compare_models(ctx: &RunContext, scenario: Option<&Scenario>) -> Result<Comparison, ExperimentError> {
    let base = scenario
        .cloned()
        .unwrap_or_else(|| Scenario::constant_ambient(ModelKind::B));
    let k = match base.feedforward_k {
        FeedforwardGain::Fixed(k) => k,
        FeedforwardGain::Auto => resolve_gain(ctx, FeedforwardGain::Auto)?.0,
    };
    let a = run_model(
        &ctx.params,
        &ctx.solver,
        &Scenario {
            model: ModelKind::A,
            ..base.clone()
        },
        k,
    )?;
    let b = run_model(
        &ctx.params,
        &ctx.solver,
        &Scenario {
            model: ModelKind::B,
            ..base
        },
        k,
    )?;
    let sup = a
        .rows
        .iter()
        .zip(&b.rows)
        .map(|(ra, rb)| {
            debug_assert_eq!(ra.t, rb.t);
            (ra.temperature() - rb.temperature()).abs()
        })
        .fold(0.0, f64::max);
    let rates = std::array::from_fn(|k| {
        let (fa, fb) = (a.trains.mean_rate(k + 1), b.trains.mean_rate(k + 1));
        (fa - fb).abs() / fb
    });
    let cmp = Comparison {
        a,
        b,
        sup_temperature_difference: sup,
        rate_relative_difference: rates,
    };
    write_comparison(ctx, &cmp)?;
    Ok(cmp)
}

fn write_comparison(ctx: &RunContext, c: &Comparison) -> Result<(), ExperimentError> {
    ctx.write_file("comparison.csv", |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "t", "T_A", "T_B", "f1_A", "f2_A", "f3_A", "f4_A", "f1_B", "f2_B", "f3_B", "f4_B",
        ])?;
        for (ra, rb) in c.a.rows.iter().zip(&c.b.rows) {
            let mut rec = vec![ra.t, ra.temperature(), rb.temperature()];
            rec.extend(ra.rates);
            rec.extend(rb.rates);
            out.write_record(rec.iter().map(f64::to_string))?;
        }
        out.flush()
    })?;
    let pts = |rows: &[TrajectoryRow]| {
        thin(
            &rows.iter().map(|r| (r.t, r.temperature())).collect::<Vec<_>>(),
            PLOT_POINTS,
        )
    };
    let plot = LinePlot::new("Model A against model B", "t [s]", "T [°C]")
        .with_series(Series::new("model A", pts(&c.a.rows)))
        .with_series(Series::new("model B", pts(&c.b.rows)));
    ctx.write_file("comparison.svg", |w| w.write_all(plot.render().as_bytes()))?;
    ctx.write_file("comparison.txt", |w| {
        writeln!(w, "sup_T_difference = {}", c.sup_temperature_difference)?;
        for (k, d) in c.rate_relative_difference.iter().enumerate() {
            writeln!(w, "rate_relative_difference.f{} = {}", k + 1, d)?;
        }
        writeln!(w, "jump_count_A = {}", c.a.report.jump_count_total)?;
        writeln!(w, "jump_count_B = {}", c.b.report.jump_count_total)?;
        writeln!(w, "wall_time_A_s = {}", c.a.report.wall_time)?;
        writeln!(w, "wall_time_B_s = {}", c.b.report.wall_time)
    })?;
    Ok(())
}

/// `calibrate-ntc`: writes parameters whose NTC `B` places the set point at
/// `target` °C.
pub fn calibrate_ntc(ctx: &RunContext, target: f64) -> Result<CircuitParams, ExperimentError> {
    let p = averaged::calibrate_ntc_b(&ctx.params, target)?;
    let text = toml::to_string(&p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    ctx.write_file("params_calibrated.toml", |w| w.write_all(text.as_bytes()))?;
    Ok(p)
}

/// Parameters from a TOML file, or the defaults.
pub fn load_params(path: Option<&Path>) -> Result<CircuitParams, ConfigError> {
    let p: CircuitParams = match path {
        Some(path) => super::config::load_toml(path)?,
        None => CircuitParams::default(),
    };
    p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(p)
}

pub fn load_solver(path: Option<&Path>) -> Result<SolverConfig, ConfigError> {
    let s: SolverConfig = match path {
        Some(path) => super::config::load_toml(path)?,
        None => SolverConfig::default(),
    };
    s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let s: Scenario = super::config::load_toml(path)?;
    s.validate()?;
    Ok(s)
}
