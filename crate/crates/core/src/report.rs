//! CSV emitters. Column sets are fixed; floats use Rust's shortest
//! round-trip formatting with `.` as decimal separator and `\n` line ends.

use std::io::Write;

use crate::controller::TrackingRun;
use crate::scenario::{DailySummary, MetricSummary, RunResult, SweepCell};
use crate::seird::DailyCounts;
use crate::sir::Trajectory;

pub const TRAJECTORY_COLUMNS: [&str; 4] = ["t", "s", "i", "beta"];
pub const TRACKING_COLUMNS: [&str; 6] = ["t", "s", "i", "s_bar", "i_bar", "beta"];
pub const DAILY_COUNTS_COLUMNS: [&str; 7] = ["day", "S", "E", "I", "R", "D", "beta_n"];
pub const RUN_COLUMNS: [&str; 9] = ["day", "S", "E", "I", "R", "D", "beta_applied", "s_meas", "i_meas"];
pub const ENSEMBLE_COLUMNS: [&str; 7] = ["day", "i_mean", "i_q1", "i_q3", "beta_mean", "beta_q1", "beta_q3"];
pub const METRIC_COLUMNS: [&str; 4] = ["metric", "mean", "q1", "q3"];
pub const SWEEP_COLUMNS: [&str; 7] = ["delay", "update", "mode", "metric", "mean", "q1", "q3"];

fn writer<W: Write>(out: W, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> csv::Result<()> {
    let mut w = writer(out, &TRAJECTORY_COLUMNS)?;
    for k in 0..traj.len() {
        let x = traj.states[k];
        w.write_record([num(traj.times[k]), num(x.s), num(x.i), num(traj.betas[k])])?;
    }
    w.flush()?;
    Ok(())
}

/// Every `stride`-th sample of a tracking run. With `include_samples` false
/// only the header is written.
pub fn write_tracking<W: Write>(out: W, run: &TrackingRun, stride: usize, include_samples: bool) -> csv::Result<()> {
    let mut w = writer(out, &TRACKING_COLUMNS)?;
    if include_samples {
        for k in (0..run.times.len()).step_by(stride.max(1)) {
            let (x, r) = (run.states[k], run.references[k]);
            w.write_record([
                num(run.times[k]),
                num(x.s),
                num(x.i),
                num(r.s),
                num(r.i),
                num(run.betas[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_daily_counts<W: Write>(out: W, daily: &[DailyCounts]) -> csv::Result<()> {
    let mut w = writer(out, &DAILY_COUNTS_COLUMNS)?;
    for d in daily {
        let c = d.counts;
        w.write_record([
            d.day.to_string(),
            c.s.to_string(),
            c.e.to_string(),
            c.i.to_string(),
            c.r.to_string(),
            c.d.to_string(),
            num(d.beta_n),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-run series. Counts are blank for plants without compartments and
/// measurements are blank on days without a policy update.
pub fn write_run<W: Write>(out: W, run: &RunResult) -> csv::Result<()> {
    let mut w = writer(out, &RUN_COLUMNS)?;
    let blank = String::new;
    for d in &run.days {
        let counts = d.counts.map_or_else(
            || vec![blank(); 5],
            |c| [c.s, c.e, c.i, c.r, c.d].iter().map(ToString::to_string).collect(),
        );
        let mut row = vec![d.day.to_string()];
        row.extend(counts);
        row.push(num(d.beta_applied));
        match d.measured {
            Some(m) => row.extend([num(m.s), num(m.i)]),
            None => row.extend([blank(), blank()]),
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ensemble<W: Write>(out: W, daily: &[DailySummary]) -> csv::Result<()> {
    let mut w = writer(out, &ENSEMBLE_COLUMNS)?;
    for d in daily {
        w.write_record([
            d.day.to_string(),
            num(d.i.mean),
            num(d.i.q1),
            num(d.i.q3),
            num(d.beta_applied.mean),
            num(d.beta_applied.q1),
            num(d.beta_applied.q3),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics<W: Write>(out: W, metrics: &MetricSummary) -> csv::Result<()> {
    let mut w = writer(out, &METRIC_COLUMNS)?;
    for (name, s) in metrics.rows() {
        w.write_record([name.to_string(), num(s.mean), num(s.q1), num(s.q3)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, cells: &[SweepCell]) -> csv::Result<()> {
    let mut w = writer(out, &SWEEP_COLUMNS)?;
    for cell in cells {
        for (name, s) in cell.summary.metrics.rows() {
            w.write_record([
                num(cell.delay),
                cell.update.to_string(),
                cell.mode.to_string(),
                name.to_string(),
                num(s.mean),
                num(s.q1),
                num(s.q3),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
