use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use neurotherm::experiment::{self, ExperimentError, ModelKind, RunContext, Scenario, SweepSpec};

/// Simulations of the spiking thermoregulator.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Circuit parameters (TOML); defaults when omitted.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Scenario file (TOML) for `simulate` and `compare-models`.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Solver settings (TOML).
    #[arg(long, global = true)]
    solver: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Reserved; the models are deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trajectory.
    Simulate,
    /// Estimate ũ(T), the set point and the feedforward gain.
    SweepU {
        #[arg(long, default_value_t = 0.0)]
        t_min: f64,
        #[arg(long, default_value_t = 80.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        #[arg(long, default_value_t = 20.0)]
        hold: f64,
    },
    /// Ambient ramp 0 → 80 °C over 800 s, with K = 0 and K = K*.
    Ramp,
    /// Model A against model B.
    CompareModels,
    /// Fit the NTC B constant so the set point lands on a target.
    CalibrateNtc {
        #[arg(long, default_value_t = 39.84)]
        target: f64,
    },
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    let params = experiment::load_params(cli.params.as_deref())?;
    let solver = experiment::load_solver(cli.solver.as_deref())?;
    let scenario = cli.scenario.as_deref().map(experiment::load_scenario).transpose()?;
    let ctx = RunContext::new(params, solver, &cli.out);

    match cli.command {
        Command::Simulate => {
            let scenario = scenario.unwrap_or_else(|| Scenario::constant_ambient(ModelKind::B));
            let report = experiment::simulate(&ctx, &scenario)?;
            println!(
                "model {}: {} jumps in {:.3} s wall time",
                report.model, report.jump_count_total, report.wall_time
            );
        }
        Command::SweepU {
            t_min,
            t_max,
            step,
            hold,
        } => {
            let m = experiment::sweep_u(
                &ctx,
                &SweepSpec {
                    t_min,
                    t_max,
                    step,
                    hold,
                },
            )?;
            println!("T_set = {} °C, c = {} 1/s, K* = {}", m.t_set, m.c, m.k_star);
        }
        Command::Ramp => {
            let o = experiment::ramp(&ctx, None)?;
            println!(
                "K* = {}: max |T - T_set| = {} °C for T_amb in [30, 50]; at 50 °C {} (K = 0) vs {} (K*)",
                o.model.k_star, o.max_error_with_ff, o.error_at_50_without_ff, o.error_at_50_with_ff
            );
        }
        Command::CompareModels => {
            let c = experiment::compare_models(&ctx, scenario.as_ref())?;
            println!(
                "sup |T_A - T_B| = {} °C, jumps {} / {}",
                c.sup_temperature_difference, c.a.report.jump_count_total, c.b.report.jump_count_total
            );
        }
        Command::CalibrateNtc { target } => {
            let p = experiment::calibrate_ntc(&ctx, target)?;
            println!("ntc.B = {}", p.ntc.b);
        }
    }
    println!("outputs in {}", ctx.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
