//! Closed-loop experiments on network outbreaks.
//!
//! A run couples a [`NetworkPlant`] to a policy through the output map, a
//! delayed and noisy measurement channel, the saturated controller, a
//! quantizer and the input map. Every run derives its randomness from
//! `(master_seed, run_index)` alone.

mod closed_loop;
mod config;
mod ensemble;
mod measure;

pub use closed_loop::{
    drive, feedback_policy, initial_state, run_baseline_lockdown, run_closed_loop, run_closed_loop_with,
    run_uncontrolled, run_with_policy, scenario_reference, stream_seed, DayRecord, NetworkPlant, Plant, Policy,
    RunResult, SirPlant, Stream,
};
pub use config::{
    ControllerConfig, EpidemicConfig, MeasurementConfig, NetworkConfig, OdeScenario, PolicyConfig, ReferenceMode,
    ScenarioConfig, ScenarioError, NETWORK_PSI_I, NETWORK_PSI_S,
};
pub use ensemble::{
    metric_beta_reduction, metric_death_reduction, run_monte_carlo, summarize_daily, sweep, Baselines, DailySummary,
    EnsembleSummary, MetricSummary, MonteCarloResult, Stat, SweepCell, SWEEP_DELAYS, SWEEP_UPDATES,
};
pub use measure::{level_value, measure, quantize_beta, MeasurementChannel};
