//! Nonlinear trajectory-tracking controller.
//!
//! The ideal law
//!
//! ```text
//! beta = psi_i (i_ref - i) - psi_s (s_ref - s) + (s_ref i_ref) / (s i) * beta_ref
//! ```
//!
//! makes the SIR state converge exponentially to a reference solution
//! `(s_ref, i_ref, beta_ref)` for `psi_s > 0`, `psi_i >= 0`. The practical
//! form floors `s i` at `epsilon` and clamps the output to
//! `[beta_min, beta_max]`.
//!
//! The convergence argument maps the law onto a PD controller in the
//! coordinate `x = -(i + s) / gamma` with gains `alpha_p = psi_s * gamma`
//! and `alpha_d = psi_i + psi_s`; it additionally needs `alpha_p > gamma`,
//! i.e. `psi_s > 1`. [`ControllerGains::validate`] enforces only the weaker
//! `psi_s > 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimal::{optimal_beta, optimal_beta_from_state, FlatteningProblem, PolicyError};
use crate::sir::{rk4_step, step_count, EpidemicState, SirParams, STATE_SLACK};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("psi_s must be positive, got {0}")]
    PsiS(f64),
    #[error("psi_i must be non-negative, got {0}")]
    PsiI(f64),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("need 0 < beta_min < beta_max, got [{min}, {max}]")]
    Bounds { min: f64, max: f64 },
    #[error("s * i is zero; the ideal law is singular")]
    Singular,
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("lockdown rate {beta} cannot bring prevalence down from s = {s}")]
    LockdownTooWeak { beta: f64, s: f64 },
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    pub psi_i: f64,
    pub psi_s: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_PSI_I: f64 = 50.0;
pub const DEFAULT_PSI_S: f64 = 20.0;

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl ControllerGains {
    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.psi_s > 0.0) {
            return Err(ControllerError::PsiS(self.psi_s));
        }
        if !(self.psi_i >= 0.0) {
            return Err(ControllerError::PsiI(self.psi_i));
        }
        if !(self.epsilon > 0.0) {
            return Err(ControllerError::Epsilon(self.epsilon));
        }
        if !(self.beta_min > 0.0 && self.beta_max > self.beta_min) {
            return Err(ControllerError::Bounds {
                min: self.beta_min,
                max: self.beta_max,
            });
        }
        Ok(())
    }
}

/// Reference sample `(s_ref, i_ref, beta_ref)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePoint {
    pub s: f64,
    pub i: f64,
    pub beta: f64,
}

impl ReferencePoint {
    pub fn state(&self) -> EpidemicState {
        EpidemicState::new(self.s, self.i)
    }
}

/// Nominal SIR solution tracked by the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory {
    pub times: Vec<f64>,
    pub s_bar: Vec<f64>,
    pub i_bar: Vec<f64>,
    /// Transmission rate held over `[times[k], times[k + 1])`. Constant for
    /// references built by [`reference_trajectory`].
    pub beta_bar: Vec<f64>,
}

/// Optimal constant-rate reference starting from `(1 - i0_bar, i0_bar)`.
pub fn reference_trajectory(
    i0_bar: f64,
    i_th: f64,
    gamma: f64,
    t_final: f64,
    dt: f64,
) -> Result<ReferenceTrajectory, ControllerError> {
    let beta = optimal_beta(&FlatteningProblem::new(i0_bar, i_th, gamma)?)?;
    ReferenceTrajectory::integrate(EpidemicState::from_infected(i0_bar), gamma, t_final, dt, |_| Ok(beta))
}

impl ReferenceTrajectory {
    /// Reference from an arbitrary initial state.
    ///
    /// If `x0.i <= i_th` the reference is the optimal constant-rate solution
    /// from `x0`. Otherwise the capacity is already exceeded: the reference
    /// holds `beta_lockdown` until prevalence falls to `i_th`, then switches
    /// to the optimal constant rate from the state reached.
    pub fn plan(
        x0: EpidemicState,
        i_th: f64,
        gamma: f64,
        beta_lockdown: f64,
        t_final: f64,
        dt: f64,
    ) -> Result<Self, ControllerError> {
        if x0.i > i_th && beta_lockdown * x0.s >= gamma {
            return Err(ControllerError::LockdownTooWeak {
                beta: beta_lockdown,
                s: x0.s,
            });
        }
        let mut optimal: Option<f64> = None;
        Self::integrate(x0, gamma, t_final, dt, |x| {
            if let Some(b) = optimal {
                return Ok(b);
            }
            if x.i > i_th {
                return Ok(beta_lockdown);
            }
            let b = optimal_beta_from_state(x, i_th, gamma)?;
            optimal = Some(b);
            Ok(b)
        })
    }

    fn integrate<F>(
        x0: EpidemicState,
        gamma: f64,
        t_final: f64,
        dt: f64,
        mut policy: F,
    ) -> Result<Self, ControllerError>
    where
        F: FnMut(EpidemicState) -> Result<f64, ControllerError>,
    {
        if !(dt > 0.0) {
            return Err(ControllerError::BadStep(dt));
        }
        let steps = step_count(t_final.max(0.0), dt);
        let mut out = Self {
            times: Vec::with_capacity(steps + 1),
            s_bar: Vec::with_capacity(steps + 1),
            i_bar: Vec::with_capacity(steps + 1),
            beta_bar: Vec::with_capacity(steps + 1),
        };
        let mut x = x0;
        let mut t = 0.0;
        for k in 0..=steps {
            let beta = policy(x)?;
            out.times.push(t);
            out.s_bar.push(x.s);
            out.i_bar.push(x.i);
            out.beta_bar.push(beta);
            if k == steps {
                break;
            }
            let t_next = if k + 1 == steps { t_final } else { (k + 1) as f64 * dt };
            x = rk4_step(x, SirParams { beta, gamma }, t_next - t);
            debug_assert!(x.is_valid(STATE_SLACK));
            t = t_next;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, k: usize) -> ReferencePoint {
        ReferencePoint {
            s: self.s_bar[k],
            i: self.i_bar[k],
            beta: self.beta_bar[k],
        }
    }

    /// Zero-order hold at the most recent sample at or before `t`.
    pub fn at(&self, t: f64) -> ReferencePoint {
        let k = self.times.partition_point(|&x| x <= t + 1e-9).saturating_sub(1);
        self.point(k)
    }

    pub fn peak_infected(&self) -> f64 {
        self.i_bar.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Feedback term shared by the ideal and saturated laws, given the
/// (possibly floored) product `s * i`.
fn raw_law(x: EpidemicState, r: ReferencePoint, g: &ControllerGains, si: f64) -> f64 {
    g.psi_i * (r.i - x.i) - g.psi_s * (r.s - x.s) + r.s * r.i / si * r.beta
}

/// The ideal, unclamped control law.
pub fn feedback_beta_ideal(x: EpidemicState, r: ReferencePoint, g: &ControllerGains) -> Result<f64, ControllerError> {
    let si = x.s * x.i;
    if si == 0.0 {
        return Err(ControllerError::Singular);
    }
    Ok(raw_law(x, r, g, si))
}

/// The practical control law: `s i` floored at `epsilon`, output clamped to
/// `[beta_min, beta_max]`. Total for any input.
pub fn feedback_beta_saturated(x: EpidemicState, r: ReferencePoint, g: &ControllerGains) -> f64 {
    let si = (x.s * x.i).max(g.epsilon);
    let beta = raw_law(x, r, g, si);
    if beta.is_nan() {
        return g.beta_min;
    }
    beta.clamp(g.beta_min, g.beta_max)
}

/// Closed-loop SIR run under the saturated controller.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackingRun {
    pub times: Vec<f64>,
    pub states: Vec<EpidemicState>,
    pub references: Vec<EpidemicState>,
    pub betas: Vec<f64>,
}

impl TrackingRun {
    /// Euclidean tracking error at each sample.
    pub fn errors(&self) -> Vec<f64> {
        self.states
            .iter()
            .zip(&self.references)
            .map(|(x, r)| (x.s - r.s).hypot(x.i - r.i))
            .collect()
    }
}

/// Simulates the SIR plant from `x0` under the saturated law tracking
/// `reference`, re-evaluating the law at every reference sample and holding
/// it for one step.
pub fn track_sir(
    x0: EpidemicState,
    reference: &ReferenceTrajectory,
    gains: &ControllerGains,
    gamma: f64,
) -> Result<TrackingRun, ControllerError> {
    gains.validate()?;
    let n = reference.len();
    let mut run = TrackingRun {
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        references: Vec::with_capacity(n),
        betas: Vec::with_capacity(n),
    };
    let mut x = x0;
    for k in 0..n {
        let r = reference.point(k);
        let beta = feedback_beta_saturated(x, r, gains);
        run.times.push(reference.times[k]);
        run.states.push(x);
        run.references.push(r.state());
        run.betas.push(beta);
        if k + 1 < n {
            let h = reference.times[k + 1] - reference.times[k];
            x = rk4_step(x, SirParams { beta, gamma }, h);
        }
    }
    Ok(run)
}
