//! Closed-form optimal curve flattening.
//!
//! Among constant transmission rates, the largest one whose SIR infection
//! peak does not exceed the capacity `i_th` lies on the constraint boundary,
//! `max_t i(t) = i_th`. Inverting the first integral at the peak gives it in
//! terms of the lower real branch of the Lambert W function.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lambert_w::{lambert_w, Branch, LambertError};
use crate::sir::{peak_infected_constant, EpidemicState, SirParams, DEFAULT_DT};

/// Days integrated by [`verify_optimality`] before giving up on finding the
/// peak. Far beyond any epidemic timescale at the rates used here.
const VERIFY_MAX_DAYS: f64 = 20_000.0;

/// Absolute slack on `max_t i <= i_th` when checking numerically integrated
/// peaks against the analytic boundary.
pub const PEAK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("infeasible: initial infected fraction {i0} exceeds capacity {i_th}")]
    Infeasible { i0: f64, i_th: f64 },
    #[error("capacity must lie in (0, 1), got {0}")]
    BadCapacity(f64),
    #[error("initial infected fraction must be positive, got {0}")]
    BadInitial(f64),
    #[error("initial state is outside the unit simplex: s = {s}, i = {i}")]
    BadState { s: f64, i: f64 },
    #[error("recovery rate must be positive, got {0}")]
    BadGamma(f64),
    #[error(transparent)]
    Lambert(#[from] LambertError),
}

/// Initial infected fraction, health-care capacity and recovery rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatteningProblem {
    pub i0: f64,
    pub i_th: f64,
    pub gamma: f64,
}

impl FlatteningProblem {
    pub fn new(i0: f64, i_th: f64, gamma: f64) -> Result<Self, PolicyError> {
        let prob = Self { i0, i_th, gamma };
        prob.validate()?;
        Ok(prob)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !(self.i_th > 0.0 && self.i_th < 1.0) {
            return Err(PolicyError::BadCapacity(self.i_th));
        }
        if !(self.i0 > 0.0) {
            return Err(PolicyError::BadInitial(self.i0));
        }
        if self.i0 > self.i_th {
            return Err(PolicyError::Infeasible {
                i0: self.i0,
                i_th: self.i_th,
            });
        }
        if !(self.gamma > 0.0) {
            return Err(PolicyError::BadGamma(self.gamma));
        }
        Ok(())
    }

    /// The population starts fully susceptible apart from `i0`.
    pub fn initial_state(&self) -> EpidemicState {
        EpidemicState::from_infected(self.i0)
    }

    /// Argument passed to `W-1`: `-(1/e) (1 - i_th) / (1 - i0)`.
    pub fn lambert_argument(&self) -> f64 {
        -(1.0 - self.i_th) / (E * (1.0 - self.i0))
    }
}

/// Largest constant transmission rate keeping the SIR peak at `i_th`:
/// `beta = -gamma / (1 - i_th) * W-1(-(1/e) (1 - i_th) / (1 - i0))`.
pub fn optimal_beta(prob: &FlatteningProblem) -> Result<f64, PolicyError> {
    prob.validate()?;
    if prob.i0 == prob.i_th {
        // Branch point: W-1(-1/e) = -1, the peak is already at t = 0.
        return Ok(prob.gamma / (1.0 - prob.i_th));
    }
    let w = lambert_w(Branch::Minus1, prob.lambert_argument())?;
    Ok(-prob.gamma / (1.0 - prob.i_th) * w)
}

/// Optimal constant transmission rate from an arbitrary starting state
/// `(s0, i0)` with `s0 + i0 <= 1` (a partly recovered population).
///
/// With `c = i_th - s0 - i0`, the boundary condition on the first integral
/// gives `beta = gamma * W-1(c / (e s0)) / c`, which reduces to
/// [`optimal_beta`] when `s0 = 1 - i0`.
pub fn optimal_beta_from_state(x0: EpidemicState, i_th: f64, gamma: f64) -> Result<f64, PolicyError> {
    if !(x0.s > 0.0 && x0.i >= 0.0 && x0.s + x0.i <= 1.0 + 1e-12) {
        return Err(PolicyError::BadState { s: x0.s, i: x0.i });
    }
    if !(i_th > 0.0 && i_th < 1.0) {
        return Err(PolicyError::BadCapacity(i_th));
    }
    if !(gamma > 0.0) {
        return Err(PolicyError::BadGamma(gamma));
    }
    if x0.i > i_th {
        return Err(PolicyError::Infeasible { i0: x0.i, i_th });
    }
    if x0.i == i_th {
        return Ok(gamma / x0.s);
    }
    let c = i_th - x0.s - x0.i;
    let w = lambert_w(Branch::Minus1, c / (E * x0.s))?;
    Ok(gamma * w / c)
}

/// Numerically checks that `beta` sits on the constraint boundary: the SIR
/// peak under `beta` lies in `[i_th - eps, i_th]` and the peak under
/// `beta * (1 + eps)` exceeds `i_th`.
pub fn verify_optimality(prob: &FlatteningProblem, beta: f64, eps: f64) -> bool {
    let x0 = prob.initial_state();
    let peak = |b: f64| {
        peak_infected_constant(
            x0,
            SirParams {
                beta: b,
                gamma: prob.gamma,
            },
            DEFAULT_DT,
            VERIFY_MAX_DAYS,
        )
    };
    let at = peak(beta);
    let within = at >= prob.i_th - eps && at <= prob.i_th + PEAK_SLACK;
    within && peak(beta * (1.0 + eps)) > prob.i_th + PEAK_SLACK
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sir::integrate_sir;

    /// Independent oracle: bisection on beta such that the integrated peak
    /// hits the capacity.
    fn bisect_beta(prob: &FlatteningProblem) -> f64 {
        let x0 = prob.initial_state();
        let (mut lo, mut hi) = (prob.gamma * 1e-3, prob.gamma * 20.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let traj = integrate_sir(x0, |_| mid, prob.gamma, 600.0, DEFAULT_DT).unwrap();
            if traj.peak_infected() > prob.i_th {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point_case() {
        let prob = FlatteningProblem::new(0.12, 0.12, 0.1).unwrap();
        let beta = optimal_beta(&prob).unwrap();
        assert_eq!(beta, 0.1 / 0.88);
        assert!(verify_optimality(&prob, beta, 1e-3));
    }

    #[test]
    fn figure_three_problem_matches_bisection() {
        let prob = FlatteningProblem::new(0.1, 0.12, 0.1).unwrap();
        let beta = optimal_beta(&prob).unwrap();
        let oracle = bisect_beta(&prob);
        assert!((beta - oracle).abs() < 1e-6, "{beta} vs {oracle}");
        assert!((beta - 0.1395).abs() < 1e-4);
        assert!(verify_optimality(&prob, beta, 1e-3));
        assert!(!verify_optimality(&prob, 0.5 * beta, 1e-3));
    }

    #[test]
    fn infeasible_problem_rejected() {
        assert!(matches!(
            FlatteningProblem::new(0.05, 0.025, 0.09),
            Err(PolicyError::Infeasible { .. })
        ));
        let bad = FlatteningProblem {
            i0: 0.05,
            i_th: 0.025,
            gamma: 0.09,
        };
        assert!(optimal_beta(&bad).is_err());
        assert!(matches!(
            FlatteningProblem::new(0.01, 1.0, 0.1),
            Err(PolicyError::BadCapacity(_))
        ));
        assert!(matches!(
            FlatteningProblem::new(0.01, 0.1, 0.0),
            Err(PolicyError::BadGamma(_))
        ));
    }

    #[test]
    fn lambert_argument_in_range() {
        let prob = FlatteningProblem::new(0.001, 0.5, 0.1).unwrap();
        let a = prob.lambert_argument();
        assert!((crate::lambert_w::BRANCH_POINT..0.0).contains(&a));
    }

    #[test]
    fn from_state_reduces_to_closed_form() {
        let prob = FlatteningProblem::new(0.02, 0.07, 0.13).unwrap();
        let a = optimal_beta(&prob).unwrap();
        let b = optimal_beta_from_state(prob.initial_state(), prob.i_th, prob.gamma).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn from_state_hits_capacity_for_recovered_population() {
        let x0 = EpidemicState::new(0.7, 0.01);
        let (i_th, gamma) = (0.05, 0.1);
        let beta = optimal_beta_from_state(x0, i_th, gamma).unwrap();
        let traj = integrate_sir(x0, |_| beta, gamma, 800.0, DEFAULT_DT).unwrap();
        assert!((traj.peak_infected() - i_th).abs() < 1e-6);
        let at_cap = optimal_beta_from_state(EpidemicState::new(0.6, i_th), i_th, gamma).unwrap();
        assert_eq!(at_cap, gamma / 0.6);
        assert!(optimal_beta_from_state(EpidemicState::new(0.6, 0.2), i_th, gamma).is_err());
    }

    #[test]
    fn monotone_and_linear_in_gamma() {
        let grid = [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
        for (a, &i0) in grid.iter().enumerate() {
            for w in grid[a..].windows(2) {
                let lo = optimal_beta(&FlatteningProblem::new(i0, w[0], 0.1).unwrap()).unwrap();
                let hi = optimal_beta(&FlatteningProblem::new(i0, w[1], 0.1).unwrap()).unwrap();
                assert!(hi > lo, "not increasing in i_th at i0={i0}");
            }
        }
        for (b, &i_th) in grid.iter().enumerate() {
            for w in grid[..=b].windows(2) {
                let lo_i0 = optimal_beta(&FlatteningProblem::new(w[0], i_th, 0.1).unwrap()).unwrap();
                let hi_i0 = optimal_beta(&FlatteningProblem::new(w[1], i_th, 0.1).unwrap()).unwrap();
                assert!(hi_i0 < lo_i0, "not decreasing in i0 at i_th={i_th}");
            }
        }
        let base = optimal_beta(&FlatteningProblem::new(0.03, 0.2, 0.1).unwrap()).unwrap();
        for gamma in [0.05, 0.2, 0.7] {
            let b = optimal_beta(&FlatteningProblem::new(0.03, 0.2, gamma).unwrap()).unwrap();
            assert!((b / gamma - base / 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_property_on_grid() {
        for &i_th in &[0.02, 0.1, 0.3, 0.5] {
            for frac in [0.1, 0.5, 0.9, 1.0] {
                for gamma in [0.05, 0.1, 0.3] {
                    let prob = FlatteningProblem::new(frac * i_th, i_th, gamma).unwrap();
                    let beta = optimal_beta(&prob).unwrap();
                    let peak = peak_infected_constant(
                        prob.initial_state(),
                        SirParams { beta, gamma },
                        DEFAULT_DT,
                        VERIFY_MAX_DAYS,
                    );
                    assert!((peak - i_th).abs() < 1e-3, "peak {peak} vs {i_th}");
                }
            }
        }
    }
}
