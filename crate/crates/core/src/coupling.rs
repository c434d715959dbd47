//! Maps between the network simulator and the population-level controller.
//!
//! The output map reduces compartment counts to `(s, i)`; the input map turns
//! an SIR transmission rate into a per-link network rate by matching the
//! basic reproduction number of the two models and closing the S-I link
//! count with the mean-field estimate `E[k] I S / N`.

use serde::{Deserialize, Serialize};

use crate::seird::Counts;
use crate::sir::EpidemicState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapParams {
    pub gamma_e: f64,
    pub gamma_i: f64,
    pub mean_degree: f64,
}

/// Exposed nodes count as susceptible from the controller's point of view.
pub fn output_map(counts: &Counts, n: usize) -> EpidemicState {
    let n = n as f64;
    EpidemicState {
        s: (counts.s + counts.e) as f64 / n,
        i: counts.i as f64 / n,
    }
}

/// Recovery rate handed to the SIR controller, `gamma_e gamma_i / (gamma_e + gamma_i)`.
///
/// Its reciprocal is the mean residence time `1/gamma_e + 1/gamma_i` in the
/// exposed and infectious states together. The residence time itself is
/// hypoexponential, not exponential; only the means agree.
pub fn effective_gamma(m: &MapParams) -> f64 {
    m.gamma_e * m.gamma_i / (m.gamma_e + m.gamma_i)
}

/// Per-link network rate for an SIR rate: `beta (gamma_i + gamma_e) / (gamma_e E[k])`.
pub fn input_map(beta_sir: f64, m: &MapParams) -> f64 {
    beta_sir * (m.gamma_i + m.gamma_e) / (m.gamma_e * m.mean_degree)
}

/// Inverse of [`input_map`].
pub fn sir_beta_from_network(beta_n: f64, m: &MapParams) -> f64 {
    beta_n * m.gamma_e * m.mean_degree / (m.gamma_i + m.gamma_e)
}

/// Mean-field estimate `E[k] I S / N` of the number of S-I links.
pub fn si_links_mean_field(i_count: usize, s_count: usize, n: usize, mean_degree: f64) -> f64 {
    mean_degree * i_count as f64 * s_count as f64 / n as f64
}
