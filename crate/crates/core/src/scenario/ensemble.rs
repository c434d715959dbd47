//! Monte Carlo ensembles, performance metrics and parameter sweeps.

use serde::Serialize;

use super::closed_loop::{
    run_baseline_lockdown, run_closed_loop_with, run_uncontrolled, scenario_reference, RunResult,
};
use super::config::{ReferenceMode, ScenarioConfig, ScenarioError};
use crate::exec::Execution;

/// Mean with first and third quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Stat {
    /// Quartiles by linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Self {
        assert!(!values.is_empty(), "statistic of an empty sample");
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q1: quantile_sorted(&sorted, 0.25),
            q3: quantile_sorted(&sorted, 0.75),
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(D_uncontrolled - D_run) / D_uncontrolled`.
pub fn metric_death_reduction(run: &RunResult, uncontrolled: &RunResult) -> Option<f64> {
    if uncontrolled.final_deaths == 0 {
        return None;
    }
    let base = uncontrolled.final_deaths as f64;
    Some((base - run.final_deaths as f64) / base)
}

/// `(int beta_baseline - int beta_run) / int beta_baseline`, SIR-level rates.
pub fn metric_beta_reduction(run: &RunResult, lockdown_baseline: &RunResult) -> f64 {
    assert_eq!(
        run.days.len(),
        lockdown_baseline.days.len(),
        "runs must share the horizon"
    );
    (lockdown_baseline.beta_integral - run.beta_integral) / lockdown_baseline.beta_integral
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DailySummary {
    pub day: u32,
    pub i: Stat,
    pub beta_applied: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSummary {
    pub death_reduction: Stat,
    pub beta_reduction: Stat,
    pub final_deaths: Stat,
    pub peak_i: Stat,
    pub fraction_days_above: Stat,
}

impl MetricSummary {
    pub fn rows(&self) -> [(&'static str, Stat); 5] {
        [
            ("death_reduction", self.death_reduction),
            ("beta_reduction", self.beta_reduction),
            ("final_deaths", self.final_deaths),
            ("peak_i", self.peak_i),
            ("fraction_days_above", self.fraction_days_above),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub daily: Vec<DailySummary>,
    pub metrics: MetricSummary,
}

/// Per-day statistics of prevalence and applied rate across runs.
pub fn summarize_daily(runs: &[RunResult]) -> Vec<DailySummary> {
    let days = runs[0].days.len();
    (0..days)
        .map(|k| {
            let i: Vec<f64> = runs.iter().map(|r| r.days[k].truth.i).collect();
            let b: Vec<f64> = runs.iter().map(|r| r.days[k].beta_applied).collect();
            DailySummary {
                day: runs[0].days[k].day,
                i: Stat::of(&i),
                beta_applied: Stat::of(&b),
            }
        })
        .collect()
}

/// Baseline runs sharing networks and random streams with the controlled
/// runs of the same index.
#[derive(Debug, Clone, PartialEq)]
pub struct Baselines {
    pub uncontrolled: Vec<RunResult>,
    pub lockdown: Vec<RunResult>,
}

impl Baselines {
    pub fn run(cfg: &ScenarioConfig, exec: Execution) -> Result<Self, ScenarioError> {
        let pairs = exec.map(cfg.runs, |k| -> Result<_, ScenarioError> {
            Ok((run_uncontrolled(cfg, k)?, run_baseline_lockdown(cfg, k)?))
        });
        let mut uncontrolled = Vec::with_capacity(cfg.runs);
        let mut lockdown = Vec::with_capacity(cfg.runs);
        for pair in pairs {
            let (u, l) = pair?;
            uncontrolled.push(u);
            lockdown.push(l);
        }
        Ok(Self { uncontrolled, lockdown })
    }
}

fn summarize(controlled: &[RunResult], baselines: &Baselines) -> Result<EnsembleSummary, ScenarioError> {
    let mut deaths = Vec::with_capacity(controlled.len());
    let mut betas = Vec::with_capacity(controlled.len());
    for (k, run) in controlled.iter().enumerate() {
        deaths.push(
            metric_death_reduction(run, &baselines.uncontrolled[k])
                .ok_or(ScenarioError::NoBaselineDeaths { run: k })?,
        );
        betas.push(metric_beta_reduction(run, &baselines.lockdown[k]));
    }
    let col = |f: fn(&RunResult) -> f64| Stat::of(&controlled.iter().map(f).collect::<Vec<_>>());
    Ok(EnsembleSummary {
        runs: controlled.len(),
        daily: summarize_daily(controlled),
        metrics: MetricSummary {
            death_reduction: Stat::of(&deaths),
            beta_reduction: Stat::of(&betas),
            final_deaths: col(|r| r.final_deaths as f64),
            peak_i: col(|r| r.peak_i),
            fraction_days_above: col(|r| r.fraction_days_above),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub controlled: Vec<RunResult>,
    pub baselines: Baselines,
    pub summary: EnsembleSummary,
}

fn controlled_runs(
    cfg: &ScenarioConfig,
    mode: ReferenceMode,
    exec: Execution,
) -> Result<Vec<RunResult>, ScenarioError> {
    let reference = scenario_reference(cfg, mode)?;
    exec.map(cfg.runs, |k| run_closed_loop_with(cfg, k, &reference))
        .into_iter()
        .collect()
}

/// Runs `cfg.runs` controlled runs plus both baselines. Run `k` draws all
/// its randomness from `(master_seed, k)`, so the result does not depend on
/// `exec`.
pub fn run_monte_carlo(cfg: &ScenarioConfig, exec: Execution) -> Result<MonteCarloResult, ScenarioError> {
    cfg.validate()?;
    let baselines = Baselines::run(cfg, exec)?;
    let controlled = controlled_runs(cfg, cfg.controller.reference, exec)?;
    let summary = summarize(&controlled, &baselines)?;
    Ok(MonteCarloResult {
        controlled,
        baselines,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub delay: f64,
    pub update: u32,
    pub mode: ReferenceMode,
    pub summary: EnsembleSummary,
}

pub const SWEEP_DELAYS: [f64; 3] = [3.0, 7.0, 20.0];
pub const SWEEP_UPDATES: [u32; 3] = [1, 7, 15];

/// Ensemble summaries over every (delay, update interval, reference mode)
/// combination. Baselines do not depend on these settings and are run once.
pub fn sweep(
    template: &ScenarioConfig,
    delays: &[f64],
    updates: &[u32],
    modes: &[ReferenceMode],
    exec: Execution,
) -> Result<Vec<SweepCell>, ScenarioError> {
    template.validate()?;
    let baselines = Baselines::run(template, exec)?;
    let mut cells = Vec::with_capacity(delays.len() * updates.len() * modes.len());
    for &delay in delays {
        for &update in updates {
            for &mode in modes {
                let mut cfg = template.clone();
                cfg.measurement.delay_mean = delay;
                cfg.policy.update_interval = update;
                cfg.controller.reference = mode;
                cfg.validate()?;
                let controlled = controlled_runs(&cfg, mode, exec)?;
                let summary = summarize(&controlled, &baselines)?;
                cells.push(SweepCell {
                    delay,
                    update,
                    mode,
                    summary,
                });
            }
        }
    }
    Ok(cells)
}
