//! Deterministic SIR dynamics on population fractions.
//!
//! ```text
//! ds/dt = -beta * i * s
//! di/dt =  beta * i * s - gamma * i
//! ```
//!
//! Integration is classical fourth-order Runge-Kutta with a fixed step, so
//! runs are bit-reproducible. The transmission rate is read from the
//! schedule at the start of each step and held for the whole step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default integration step, in days.
pub const DEFAULT_DT: f64 = 0.01;

/// Slack allowed on the `[0, 1]` bounds of integrated fractions.
pub const STATE_SLACK: f64 = 1e-9;

/// Susceptible and infected fractions of the population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: f64) -> Self {
        Self { s, i }
    }

    /// Fully susceptible population apart from an infected fraction `i0`.
    pub fn from_infected(i0: f64) -> Self {
        Self { s: 1.0 - i0, i: i0 }
    }

    pub fn is_valid(&self, slack: f64) -> bool {
        self.s >= -slack
            && self.i >= -slack
            && self.s <= 1.0 + slack
            && self.i <= 1.0 + slack
            && self.s + self.i <= 1.0 + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    /// Transmission rate, 1/day.
    pub beta: f64,
    /// Recovery rate, 1/day.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SirError {
    #[error("integration step must be positive, got {0}")]
    BadStep(f64),
    #[error("horizon must be non-negative, got {0}")]
    BadHorizon(f64),
    #[error("state left the unit simplex at t = {t}: s = {s}, i = {i}")]
    LeftSimplex { t: f64, s: f64, i: f64 },
    #[error("susceptible fraction must be positive, got {0}")]
    NonPositiveSusceptible(f64),
    #[error("transmission rate must be positive, got {0}")]
    NonPositiveBeta(f64),
}

/// Sampled solution of the SIR system.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EpidemicState>,
    /// Transmission rate applied over `[times[k], times[k + 1])`. The last
    /// entry repeats the schedule value at the final time.
    pub betas: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest infected fraction along the trajectory.
    pub fn peak_infected(&self) -> f64 {
        self.states.iter().map(|x| x.i).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn final_state(&self) -> Option<EpidemicState> {
        self.states.last().copied()
    }
}

pub fn sir_derivative(x: EpidemicState, p: SirParams) -> (f64, f64) {
    let infection = p.beta * x.i * x.s;
    (-infection, infection - p.gamma * x.i)
}

/// One RK4 step of length `dt` at constant `beta`.
pub fn rk4_step(x: EpidemicState, p: SirParams, dt: f64) -> EpidemicState {
    let shift = |x: EpidemicState, k: (f64, f64), h: f64| EpidemicState {
        s: x.s + h * k.0,
        i: x.i + h * k.1,
    };
    let k1 = sir_derivative(x, p);
    let k2 = sir_derivative(shift(x, k1, 0.5 * dt), p);
    let k3 = sir_derivative(shift(x, k2, 0.5 * dt), p);
    let k4 = sir_derivative(shift(x, k3, dt), p);
    EpidemicState {
        s: x.s + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        i: x.i + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    }
}

/// Number of fixed steps covering `[0, t_final]`; the last one may be short.
pub(crate) fn step_count(t_final: f64, dt: f64) -> usize {
    let n = t_final / dt;
    let rounded = n.round();
    if (n - rounded).abs() < 1e-9 * n.max(1.0) {
        rounded as usize
    } else {
        n.ceil() as usize
    }
}

/// Integrates the SIR system from `x0` over `[0, t_final]`.
pub fn integrate_sir<F>(
    x0: EpidemicState,
    beta_schedule: F,
    gamma: f64,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory, SirError>
where
    F: Fn(f64) -> f64,
{
    if !(dt > 0.0) {
        return Err(SirError::BadStep(dt));
    }
    if !(t_final >= 0.0) {
        return Err(SirError::BadHorizon(t_final));
    }
    let steps = step_count(t_final, dt);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        betas: Vec::with_capacity(steps + 1),
    };
    let mut x = x0;
    let mut t = 0.0;
    for k in 0..steps {
        let beta = beta_schedule(t);
        traj.times.push(t);
        traj.states.push(x);
        traj.betas.push(beta);
        let t_next = if k + 1 == steps { t_final } else { (k + 1) as f64 * dt };
        x = rk4_step(x, SirParams { beta, gamma }, t_next - t);
        t = t_next;
        if !x.is_valid(STATE_SLACK) {
            return Err(SirError::LeftSimplex { t, s: x.s, i: x.i });
        }
    }
    traj.times.push(t);
    traj.states.push(x);
    traj.betas.push(beta_schedule(t));
    Ok(traj)
}

/// Peak infected fraction under constant `beta`, integrating only until the
/// peak has provably passed (`i` decreasing and `s <= gamma / beta`).
pub fn peak_infected_constant(x0: EpidemicState, p: SirParams, dt: f64, max_days: f64) -> f64 {
    let mut x = x0;
    let mut peak = x.i;
    let threshold = if p.beta > 0.0 { p.gamma / p.beta } else { f64::INFINITY };
    let steps = step_count(max_days, dt);
    for _ in 0..steps {
        let next = rk4_step(x, p, dt);
        peak = peak.max(next.i);
        let falling = next.i < x.i;
        x = next;
        if falling && x.s <= threshold {
            break;
        }
    }
    peak
}

/// First integral of the SIR system: the infected fraction as a function of
/// the susceptible fraction along the orbit through `x0`.
///
/// For `x0.s = 1 - x0.i` this is `(gamma/beta) ln(s / (1 - i0)) - s + 1`.
pub fn infected_of_susceptible(s: f64, x0: EpidemicState, p: SirParams) -> Result<f64, SirError> {
    if !(s > 0.0) {
        return Err(SirError::NonPositiveSusceptible(s));
    }
    if !(p.beta > 0.0) {
        return Err(SirError::NonPositiveBeta(p.beta));
    }
    Ok(p.gamma / p.beta * (s / x0.s).ln() - s + x0.s + x0.i)
}

/// Susceptible fraction at the infection peak, `gamma / beta`. If this is at
/// or above the initial susceptible fraction, the peak is at `t = 0`.
pub fn peak_susceptible(p: SirParams) -> f64 {
    p.gamma / p.beta
}
