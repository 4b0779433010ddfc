//! Decimated trajectories and their CSV form.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces the in-memory values bit for bit.

use std::collections::BTreeMap;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use crate::hybrid::HybridArc;
use crate::models::{idx, Signals, SpikeError, SpikeTrains, ThermoModel};

/// Sliding window for the frequency columns, s.
pub const RATE_WINDOW: f64 = 1.0;

pub const TRAJECTORY_COLUMNS: [&str; 19] = [
    "t", "j", "T", "V1", "V2", "V3", "V4", "V_fb", "V_ff", "V_LP", "u_fb", "u_ff", "u", "V_out", "T_amb", "f1", "f2",
    "f3", "f4",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub j: usize,
    pub x: [f64; idx::PHYSICAL],
    pub signals: Signals,
    pub rates: [f64; 4],
}

impl TrajectoryRow {
    pub fn temperature(&self) -> f64 {
        self.x[idx::T]
    }
}

fn on_grid(t: f64, dt: f64) -> bool {
    (t / dt).round() * dt == t
}

/// Indices of the samples on the output grid `k / decimation`; where a jump
/// falls on a grid time the post-jump sample is kept.
pub fn grid_indices(arc: &HybridArc, decimation: f64) -> Vec<usize> {
    let dt = 1.0 / decimation;
    let mut keep: Vec<usize> = Vec::new();
    for (i, s) in arc.samples().enumerate() {
        if !on_grid(s.t, dt) {
            continue;
        }
        match keep.last() {
            Some(&prev) if arc.sample(prev).t == s.t => *keep.last_mut().unwrap() = i,
            _ => keep.push(i),
        }
    }
    keep
}

/// Rows of a model trajectory at the output grid, with spike frequencies
/// over a [`RATE_WINDOW`] sliding window.
pub fn trajectory_rows<M: ThermoModel + ?Sized>(
    model: &M,
    arc: &HybridArc,
    decimation: f64,
) -> Result<Vec<TrajectoryRow>, SpikeError> {
    let keep = grid_indices(arc, decimation);
    let times: Vec<f64> = keep.iter().map(|&i| arc.sample(i).t).collect();
    let rates = SpikeTrains::from_arc(model, arc).sliding_rates(RATE_WINDOW, &times)?;
    Ok(keep
        .iter()
        .zip(rates)
        .map(|(&i, rates)| {
            let s = arc.sample(i);
            let mut x = [0.0; idx::PHYSICAL];
            x.copy_from_slice(model.physical(s.state));
            TrajectoryRow {
                t: s.t,
                j: s.j,
                x,
                signals: model.signals(s.state, s.t),
                rates,
            }
        })
        .collect())
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_COLUMNS)?;
    for r in rows {
        let s = r.signals;
        let mut rec: Vec<String> = vec![r.t.to_string(), r.j.to_string()];
        rec.extend(r.x.iter().map(f64::to_string));
        rec.extend([s.u_fb, s.u_ff, s.u, s.v_out, s.t_amb].iter().map(f64::to_string));
        rec.extend(r.rates.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()
}

fn bad_data(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

pub fn read_trajectory_csv<R: Read>(input: R) -> io::Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(bad_data(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |k: usize| -> io::Result<f64> { rec[k].parse().map_err(|e| bad_data(format!("column {k}: {e}"))) };
        let mut x = [0.0; idx::PHYSICAL];
        for (k, v) in x.iter_mut().enumerate() {
            *v = f(2 + k)?;
        }
        rows.push(TrajectoryRow {
            t: f(0)?,
            j: rec[1].parse().map_err(|e| bad_data(format!("column 1: {e}")))?,
            x,
            signals: Signals {
                u_fb: f(10)?,
                u_ff: f(11)?,
                u: f(12)?,
                v_out: f(13)?,
                t_amb: f(14)?,
            },
            rates: [f(15)?, f(16)?, f(17)?, f(18)?],
        });
    }
    Ok(rows)
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub model: String,
    pub wall_time: f64,
    pub jump_count_total: usize,
    pub jump_counts_by_category: BTreeMap<String, usize>,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn new<M: ThermoModel + ?Sized>(model: &M, arc: &HybridArc, wall_time: f64) -> Self {
        let mut by_category = BTreeMap::new();
        for rec in arc.jump_records() {
            *by_category.entry(model.jump_category(rec).label()).or_insert(0) += 1;
        }
        Self {
            model: model.name().to_string(),
            wall_time,
            jump_count_total: arc.jump_count(),
            jump_counts_by_category: by_category,
            final_time: arc.final_time(),
            final_state: arc.last().map(|s| s.state.to_vec()).unwrap_or_default(),
            outputs: Vec::new(),
        }
    }

    /// `key = value` lines.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "model = {}", self.model)?;
        writeln!(out, "wall_time_s = {}", self.wall_time)?;
        writeln!(out, "jump_count_total = {}", self.jump_count_total)?;
        for (k, v) in &self.jump_counts_by_category {
            writeln!(out, "jumps.{k} = {v}")?;
        }
        writeln!(out, "final_time = {}", self.final_time)?;
        let state: Vec<String> = self.final_state.iter().map(f64::to_string).collect();
        writeln!(out, "final_state = [{}]", state.join(", "))?;
        for p in &self.outputs {
            writeln!(out, "output = {}", p.display())?;
        }
        Ok(())
    }
}
