use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{
    reference_trajectory, track_sir, ControllerError, ControllerGains, TrackingRun, DEFAULT_EPSILON, DEFAULT_PSI_I,
    DEFAULT_PSI_S,
};
use crate::coupling::{effective_gamma, sir_beta_from_network, MapParams};
use crate::seird::SeirdParams;
use crate::sir::EpidemicState;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("death reduction undefined: the uncontrolled run {run} has no deaths")]
    NoBaselineDeaths { run: usize },
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// How the controller's reference trajectory is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    /// Reference starts from the true initial state. When that state is
    /// already above capacity the reference first locks down to capacity.
    Matched,
    /// Reference starts at the capacity, `i_bar(0) = i_th`, regardless of
    /// the true initial prevalence.
    Mismatched,
}

impl ReferenceMode {
    pub const ALL: [ReferenceMode; 2] = [ReferenceMode::Mismatched, ReferenceMode::Matched];

    pub fn as_str(self) -> &'static str {
        match self {
            ReferenceMode::Matched => "matched",
            ReferenceMode::Mismatched => "mismatched",
        }
    }
}

impl fmt::Display for ReferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ReferenceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matched" => Ok(ReferenceMode::Matched),
            "mismatched" => Ok(ReferenceMode::Mismatched),
            other => Err(format!(
                "unknown reference mode `{other}` (expected matched|mismatched)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub nodes: usize,
    /// Target mean degree `E[k]`; the edge probability is `E[k] / (N - 1)`.
    pub mean_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicConfig {
    /// Unrestricted per-link transmission rate, 1/day.
    pub beta_n: f64,
    pub gamma_e: f64,
    pub gamma_i: f64,
    pub initial_infected: usize,
    pub p_death_low: f64,
    pub p_death_high: f64,
    /// Health-care capacity as a fraction of the population.
    pub i_th: f64,
    /// Informational only; not used by the dynamics.
    #[serde(default)]
    pub hospitalization_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    pub psi_i: f64,
    pub psi_s: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Lockdown rate as a fraction of the unrestricted rate.
    pub beta_min_fraction: f64,
    pub reference: ReferenceMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    /// Mean reporting delay, days.
    pub delay_mean: f64,
    pub delay_std: f64,
    /// Standard deviation of the multiplicative noise.
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    /// Days between policy changes.
    pub update_interval: u32,
    pub quantization_levels: u32,
    /// Length of the on-off lockdown baseline, days.
    pub lockdown_days: u32,
}

/// Complete description of a closed-loop network experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub horizon_days: u32,
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    pub network: NetworkConfig,
    pub epidemic: EpidemicConfig,
    pub controller: ControllerConfig,
    pub measurement: MeasurementConfig,
    pub policy: PolicyConfig,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// Gains used by the shipped network scenario. The measured susceptible
/// fraction carries 10% multiplicative noise (about 0.09 absolute), so the
/// susceptible gain is kept small enough that this noise alone cannot swing
/// the policy across a quantization level.
pub const NETWORK_PSI_I: f64 = 10.0;
pub const NETWORK_PSI_S: f64 = 0.5;

impl ScenarioConfig {
    /// The Codogno setting: 16000 people, `E[k] = 19`, 800 initially
    /// infectious, 240 days, capacity at 2.5% prevalence.
    pub fn codogno() -> Self {
        Self {
            name: "codogno".into(),
            horizon_days: 240,
            runs: 100,
            master_seed: 0,
            network: NetworkConfig {
                nodes: 16_000,
                mean_degree: 19.0,
            },
            epidemic: EpidemicConfig {
                beta_n: 0.0227,
                gamma_e: 0.25,
                gamma_i: 0.1428,
                initial_infected: 800,
                p_death_low: 0.005,
                p_death_high: 0.02,
                i_th: 0.025,
                hospitalization_rate: Some(0.02),
            },
            controller: ControllerConfig {
                psi_i: NETWORK_PSI_I,
                psi_s: NETWORK_PSI_S,
                epsilon: DEFAULT_EPSILON,
                beta_min_fraction: 0.25,
                reference: ReferenceMode::Mismatched,
            },
            measurement: MeasurementConfig {
                delay_mean: 3.0,
                delay_std: 1.0,
                noise_std: 0.1,
            },
            policy: PolicyConfig {
                update_interval: 7,
                quantization_levels: 5,
                lockdown_days: 60,
            },
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let e = &self.epidemic;
        if self.network.nodes < 2 {
            return Err(invalid("network.nodes must be at least 2"));
        }
        if !(self.network.mean_degree > 0.0) || self.network.mean_degree > (self.network.nodes - 1) as f64 {
            return Err(invalid("network.mean_degree must lie in (0, N - 1]"));
        }
        if self.runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if e.initial_infected == 0 || e.initial_infected >= self.network.nodes {
            return Err(invalid("epidemic.initial_infected must lie strictly between 0 and N"));
        }
        if !(e.beta_n > 0.0 && e.gamma_e > 0.0 && e.gamma_i > 0.0) {
            return Err(invalid("epidemic rates must be positive"));
        }
        if !(0.0 <= e.p_death_low && e.p_death_low <= e.p_death_high && e.p_death_high <= 1.0) {
            return Err(invalid("need 0 <= p_death_low <= p_death_high <= 1"));
        }
        if !(e.i_th > 0.0 && e.i_th < 1.0) {
            return Err(invalid(
                "epidemic.i_th must lie in (0, 1) (a fraction, not a percentage)",
            ));
        }
        let c = &self.controller;
        if !(c.beta_min_fraction > 0.0 && c.beta_min_fraction < 1.0) {
            return Err(invalid("controller.beta_min_fraction must lie in (0, 1)"));
        }
        let m = &self.measurement;
        if !(m.delay_mean >= 0.0 && m.delay_std >= 0.0 && m.noise_std >= 0.0) {
            return Err(invalid("measurement delay and noise parameters must be non-negative"));
        }
        let p = &self.policy;
        if p.update_interval < 1 {
            return Err(invalid("policy.update_interval must be at least 1 day"));
        }
        if p.quantization_levels < 2 {
            return Err(invalid("policy.quantization_levels must be at least 2"));
        }
        self.gains().validate()?;
        Ok(())
    }

    pub fn map_params(&self) -> MapParams {
        MapParams {
            gamma_e: self.epidemic.gamma_e,
            gamma_i: self.epidemic.gamma_i,
            mean_degree: self.network.mean_degree,
        }
    }

    /// Recovery rate of the controller's SIR model.
    pub fn sir_gamma(&self) -> f64 {
        effective_gamma(&self.map_params())
    }

    /// SIR-level equivalent of the unrestricted network rate.
    pub fn beta_max_sir(&self) -> f64 {
        sir_beta_from_network(self.epidemic.beta_n, &self.map_params())
    }

    pub fn beta_min_sir(&self) -> f64 {
        self.controller.beta_min_fraction * self.beta_max_sir()
    }

    pub fn gains(&self) -> ControllerGains {
        ControllerGains {
            psi_i: self.controller.psi_i,
            psi_s: self.controller.psi_s,
            epsilon: self.controller.epsilon,
            beta_min: self.beta_min_sir(),
            beta_max: self.beta_max_sir(),
        }
    }

    /// Network dynamics at the unrestricted rate.
    pub fn seird_params(&self) -> SeirdParams {
        let e = &self.epidemic;
        SeirdParams {
            beta_n: e.beta_n,
            gamma_e: e.gamma_e,
            gamma_i: e.gamma_i,
            p_death_low: e.p_death_low,
            p_death_high: e.p_death_high,
            i_th: e.i_th,
        }
    }

    pub fn edge_probability(&self) -> f64 {
        crate::network::probability_for_mean_degree(self.network.nodes, self.network.mean_degree)
    }
}

/// Deterministic SIR tracking experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeScenario {
    pub gamma: f64,
    pub beta_max: f64,
    /// Lockdown rate as a fraction of `beta_max`.
    pub beta_min_fraction: f64,
    /// True initial prevalence; the population is otherwise susceptible.
    pub i0: f64,
    /// Initial prevalence of the reference.
    pub i0_bar: f64,
    pub i_th: f64,
    pub horizon_days: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Spacing of emitted samples, days. Must be a multiple of `dt`.
    #[serde(default = "default_sample_every")]
    pub sample_every: f64,
    pub psi_i: f64,
    pub psi_s: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_dt() -> f64 {
    crate::sir::DEFAULT_DT
}

fn default_sample_every() -> f64 {
    0.1
}

impl OdeScenario {
    /// Tracking demo with the capacity at 12% and the true state starting
    /// above the reference.
    pub fn figure_three() -> Self {
        Self {
            gamma: 0.1,
            beta_max: 0.22,
            beta_min_fraction: 0.25,
            i0: 0.14,
            i0_bar: 0.1,
            i_th: 0.12,
            horizon_days: 400.0,
            dt: default_dt(),
            sample_every: default_sample_every(),
            psi_i: DEFAULT_PSI_I,
            psi_s: DEFAULT_PSI_S,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn gains(&self) -> ControllerGains {
        ControllerGains {
            psi_i: self.psi_i,
            psi_s: self.psi_s,
            epsilon: self.epsilon,
            beta_min: self.beta_min_fraction * self.beta_max,
            beta_max: self.beta_max,
        }
    }

    /// Closed-loop SIR run from `(1 - i0, i0)` tracking the optimal
    /// reference from `i0_bar`.
    pub fn run(&self) -> Result<TrackingRun, ScenarioError> {
        self.validate()?;
        let reference = reference_trajectory(self.i0_bar, self.i_th, self.gamma, self.horizon_days, self.dt)?;
        Ok(track_sir(
            EpidemicState::from_infected(self.i0),
            &reference,
            &self.gains(),
            self.gamma,
        )?)
    }

    /// Samples between emitted rows.
    pub fn stride(&self) -> usize {
        ((self.sample_every / self.dt).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.gamma > 0.0) {
            return Err(invalid("gamma must be positive"));
        }
        if !(self.i0 > 0.0 && self.i0 < 1.0) {
            return Err(invalid("i0 must lie in (0, 1)"));
        }
        if !(self.horizon_days >= 0.0) {
            return Err(invalid("horizon_days must be non-negative"));
        }
        if !(self.dt > 0.0 && self.sample_every >= self.dt) {
            return Err(invalid("need dt > 0 and sample_every >= dt"));
        }
        if !(self.beta_min_fraction > 0.0 && self.beta_min_fraction < 1.0) {
            return Err(invalid("beta_min_fraction must lie in (0, 1)"));
        }
        self.gains().validate()?;
        crate::optimal::FlatteningProblem::new(self.i0_bar, self.i_th, self.gamma).map_err(ControllerError::from)?;
        Ok(())
    }
}
