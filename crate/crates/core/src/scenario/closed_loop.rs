//! Day-by-day closed loop between a plant and a policy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ReferenceMode, ScenarioConfig, ScenarioError};
use super::measure::{measure, quantize_beta, MeasurementChannel};
use crate::controller::{feedback_beta_saturated, reference_trajectory, ControllerGains, ReferenceTrajectory};
use crate::coupling::{input_map, output_map, MapParams};
use crate::network::{erdos_renyi, Network};
use crate::seird::{init_state, Counts, NetworkSimState, SeirdParams};
use crate::sir::{rk4_step, EpidemicState, SirParams, DEFAULT_DT};

/// Independent random streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Network = 1,
    InitialInfected = 2,
    Dynamics = 3,
    Delay = 4,
    Noise = 5,
}

/// Seed for `stream` of run `run_index`, mixed with SplitMix64 so nearby
/// indices give unrelated seeds.
pub fn stream_seed(master: u64, run_index: usize, stream: Stream) -> u64 {
    let mut z = master
        ^ splitmix(run_index as u64 ^ 0x5851_f42d_4c95_7f2d)
        ^ splitmix((stream as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = splitmix(z);
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The epidemic being controlled, observed once per day.
pub trait Plant {
    /// True `(s, i)` through the output map.
    fn observe(&self) -> EpidemicState;
    /// Compartment counts, when the plant has them.
    fn counts(&self) -> Option<Counts>;
    /// Rate actually applied to the plant for an SIR-level rate.
    fn applied_rate(&self, beta_sir: f64) -> f64;
    /// Runs the plant at SIR-level rate `beta_sir` up to time `day`.
    fn advance(&mut self, beta_sir: f64, day: u32);
}

/// Stochastic SEIRD outbreak on an Erdos-Renyi network.
pub struct NetworkPlant {
    net: Network,
    state: NetworkSimState,
    params: SeirdParams,
    map: MapParams,
    rng: ChaCha8Rng,
}

impl NetworkPlant {
    pub fn new(cfg: &ScenarioConfig, run_index: usize) -> Result<Self, ScenarioError> {
        let seed = |s| stream_seed(cfg.master_seed, run_index, s);
        let net = erdos_renyi(cfg.network.nodes, cfg.edge_probability(), seed(Stream::Network));
        let state = init_state(&net, cfg.epidemic.initial_infected, seed(Stream::InitialInfected))
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        Ok(Self {
            net,
            state,
            params: cfg.seird_params(),
            map: cfg.map_params(),
            rng: ChaCha8Rng::seed_from_u64(seed(Stream::Dynamics)),
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn state(&self) -> &NetworkSimState {
        &self.state
    }
}

impl Plant for NetworkPlant {
    fn observe(&self) -> EpidemicState {
        output_map(&self.state.counts(), self.net.node_count())
    }

    fn counts(&self) -> Option<Counts> {
        Some(self.state.counts())
    }

    fn applied_rate(&self, beta_sir: f64) -> f64 {
        input_map(beta_sir, &self.map)
    }

    fn advance(&mut self, beta_sir: f64, day: u32) {
        let params = SeirdParams {
            beta_n: self.applied_rate(beta_sir),
            ..self.params
        };
        self.state
            .advance_until(&self.net, &params, f64::from(day), &mut self.rng, None);
    }
}

/// Deterministic SIR plant, integrated with RK4 at a fixed step.
pub struct SirPlant {
    pub x: EpidemicState,
    pub gamma: f64,
    pub dt: f64,
    pub time: f64,
}

impl SirPlant {
    pub fn new(x0: EpidemicState, gamma: f64) -> Self {
        Self {
            x: x0,
            gamma,
            dt: DEFAULT_DT,
            time: 0.0,
        }
    }
}

impl Plant for SirPlant {
    fn observe(&self) -> EpidemicState {
        self.x
    }

    fn counts(&self) -> Option<Counts> {
        None
    }

    fn applied_rate(&self, beta_sir: f64) -> f64 {
        beta_sir
    }

    fn advance(&mut self, beta_sir: f64, day: u32) {
        let target = f64::from(day);
        let p = SirParams {
            beta: beta_sir,
            gamma: self.gamma,
        };
        while self.time < target - 1e-9 {
            let h = self.dt.min(target - self.time);
            self.x = rk4_step(self.x, p, h);
            self.time += h;
        }
        self.time = target;
    }
}

/// Rule choosing the SIR-level transmission rate each day.
#[derive(Debug, Clone, Copy)]
pub enum Policy<'a> {
    /// Saturated tracking controller fed by the measurement channel,
    /// quantized, re-evaluated every `update_interval` days.
    Feedback {
        reference: &'a ReferenceTrajectory,
        gains: ControllerGains,
        channel: MeasurementChannel,
        update_interval: u32,
        levels: u32,
    },
    Constant(f64),
    /// `low` for days `0..days`, then `high`.
    OnOff {
        days: u32,
        low: f64,
        high: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayRecord {
    pub day: u32,
    pub truth: EpidemicState,
    pub counts: Option<Counts>,
    /// SIR-level rate in force from this day.
    pub beta_sir: f64,
    /// Plant-level rate in force from this day (`beta_n` on networks).
    pub beta_applied: f64,
    /// Measurement taken this day, on policy-update days only.
    pub measured: Option<EpidemicState>,
}

/// Outcome of one closed-loop run; `days` holds `horizon + 1` records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub days: Vec<DayRecord>,
    pub final_deaths: usize,
    /// Integral of the SIR-level rate over `[0, horizon]`.
    pub beta_integral: f64,
    pub peak_i: f64,
    /// Fraction of recorded days with prevalence above capacity.
    pub fraction_days_above: f64,
}

impl RunResult {
    fn from_days(days: Vec<DayRecord>, i_th: f64) -> Self {
        let horizon = days.len().saturating_sub(1);
        let beta_integral = days[..horizon].iter().map(|d| d.beta_sir).sum();
        let peak_i = days.iter().map(|d| d.truth.i).fold(0.0, f64::max);
        let above = days.iter().filter(|d| d.truth.i > i_th).count();
        let final_deaths = days.last().and_then(|d| d.counts).map_or(0, |c| c.d);
        Self {
            fraction_days_above: above as f64 / days.len() as f64,
            final_deaths,
            beta_integral,
            peak_i,
            days,
        }
    }
}

/// Runs `plant` under `policy` for `horizon` days.
pub fn drive<P: Plant>(
    plant: &mut P,
    policy: &Policy<'_>,
    horizon: u32,
    i_th: f64,
    delay_rng: &mut ChaCha8Rng,
    noise_rng: &mut ChaCha8Rng,
) -> RunResult {
    let mut history = Vec::with_capacity(horizon as usize + 1);
    let mut days = Vec::with_capacity(horizon as usize + 1);
    let mut current = match policy {
        Policy::Feedback { gains, .. } => gains.beta_max,
        Policy::Constant(b) => *b,
        Policy::OnOff { high, .. } => *high,
    };
    for day in 0..=horizon {
        let truth = plant.observe();
        history.push(truth);
        let mut measured = None;
        match policy {
            Policy::Feedback {
                reference,
                gains,
                channel,
                update_interval,
                levels,
            } => {
                if day % update_interval == 0 {
                    let m = measure(&history, day as usize, channel, delay_rng, noise_rng);
                    let raw = feedback_beta_saturated(m, reference.at(f64::from(day)), gains);
                    current = quantize_beta(raw, *levels, gains.beta_min, gains.beta_max);
                    measured = Some(m);
                }
            }
            Policy::Constant(b) => current = *b,
            Policy::OnOff { days: d, low, high } => current = if day < *d { *low } else { *high },
        }
        days.push(DayRecord {
            day,
            truth,
            counts: plant.counts(),
            beta_sir: current,
            beta_applied: plant.applied_rate(current),
            measured,
        });
        if day < horizon {
            plant.advance(current, day + 1);
        }
    }
    RunResult::from_days(days, i_th)
}

/// True initial `(s, i)` of the network scenario.
pub fn initial_state(cfg: &ScenarioConfig) -> EpidemicState {
    let n = cfg.network.nodes as f64;
    let i0 = cfg.epidemic.initial_infected as f64 / n;
    EpidemicState { s: 1.0 - i0, i: i0 }
}

/// Reference tracked by the controller in the given mode.
pub fn scenario_reference(cfg: &ScenarioConfig, mode: ReferenceMode) -> Result<ReferenceTrajectory, ScenarioError> {
    let gamma = cfg.sir_gamma();
    let i_th = cfg.epidemic.i_th;
    let t_final = f64::from(cfg.horizon_days);
    let x0 = initial_state(cfg);
    let reference = match mode {
        ReferenceMode::Mismatched => reference_trajectory(x0.i.min(i_th), i_th, gamma, t_final, DEFAULT_DT)?,
        ReferenceMode::Matched => ReferenceTrajectory::plan(x0, i_th, gamma, cfg.beta_min_sir(), t_final, DEFAULT_DT)?,
    };
    Ok(reference)
}

fn run_rngs(cfg: &ScenarioConfig, run_index: usize) -> (ChaCha8Rng, ChaCha8Rng) {
    (
        ChaCha8Rng::seed_from_u64(stream_seed(cfg.master_seed, run_index, Stream::Delay)),
        ChaCha8Rng::seed_from_u64(stream_seed(cfg.master_seed, run_index, Stream::Noise)),
    )
}

pub fn feedback_policy<'a>(cfg: &ScenarioConfig, reference: &'a ReferenceTrajectory) -> Policy<'a> {
    Policy::Feedback {
        reference,
        gains: cfg.gains(),
        channel: MeasurementChannel {
            delay_mean: cfg.measurement.delay_mean,
            delay_std: cfg.measurement.delay_std,
            noise_std: cfg.measurement.noise_std,
        },
        update_interval: cfg.policy.update_interval,
        levels: cfg.policy.quantization_levels,
    }
}

pub fn run_with_policy(
    cfg: &ScenarioConfig,
    run_index: usize,
    policy: &Policy<'_>,
) -> Result<RunResult, ScenarioError> {
    let mut plant = NetworkPlant::new(cfg, run_index)?;
    let (mut delay_rng, mut noise_rng) = run_rngs(cfg, run_index);
    Ok(drive(
        &mut plant,
        policy,
        cfg.horizon_days,
        cfg.epidemic.i_th,
        &mut delay_rng,
        &mut noise_rng,
    ))
}

/// Controlled run `run_index` on the network plant, tracking `reference`.
pub fn run_closed_loop_with(
    cfg: &ScenarioConfig,
    run_index: usize,
    reference: &ReferenceTrajectory,
) -> Result<RunResult, ScenarioError> {
    run_with_policy(cfg, run_index, &feedback_policy(cfg, reference))
}

/// Controlled run using the reference mode configured in `cfg`.
pub fn run_closed_loop(cfg: &ScenarioConfig, run_index: usize) -> Result<RunResult, ScenarioError> {
    let reference = scenario_reference(cfg, cfg.controller.reference)?;
    run_closed_loop_with(cfg, run_index, &reference)
}

/// Unrestricted transmission throughout.
pub fn run_uncontrolled(cfg: &ScenarioConfig, run_index: usize) -> Result<RunResult, ScenarioError> {
    run_with_policy(cfg, run_index, &Policy::Constant(cfg.beta_max_sir()))
}

/// Full lockdown for `lockdown_days`, then unrestricted.
pub fn run_baseline_lockdown(cfg: &ScenarioConfig, run_index: usize) -> Result<RunResult, ScenarioError> {
    let policy = Policy::OnOff {
        days: cfg.policy.lockdown_days,
        low: cfg.beta_min_sir(),
        high: cfg.beta_max_sir(),
    };
    run_with_policy(cfg, run_index, &policy)
}
