//! Measurement channel (random delay, multiplicative noise) and policy
//! quantization.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::sir::EpidemicState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementChannel {
    pub delay_mean: f64,
    pub delay_std: f64,
    pub noise_std: f64,
}

impl MeasurementChannel {
    pub const IDEAL: Self = Self {
        delay_mean: 0.0,
        delay_std: 0.0,
        noise_std: 0.0,
    };
}

/// Reads the daily history at `t - d` with `d ~ round(N(delay_mean, delay_std))`
/// clamped to `[0, t]`, then scales each component by an independent
/// `1 + eta`, `eta ~ N(0, noise_std)`.
///
/// The result is clamped to `[0, 1]` and rescaled proportionally if
/// `s + i > 1`. Exactly one delay draw and two noise draws are consumed
/// per call.
pub fn measure<R1, R2>(
    history: &[EpidemicState],
    t: usize,
    channel: &MeasurementChannel,
    delay_rng: &mut R1,
    noise_rng: &mut R2,
) -> EpidemicState
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    assert!(t < history.len(), "no history for day {t}");
    let delay = Normal::new(channel.delay_mean, channel.delay_std)
        .expect("delay std is non-negative")
        .sample(delay_rng)
        .round();
    let delay = if delay.is_nan() {
        0
    } else {
        delay.clamp(0.0, t as f64) as usize
    };
    let truth = history[t - delay];

    let noise = Normal::new(0.0, channel.noise_std).expect("noise std is non-negative");
    let eta_s = noise.sample(noise_rng);
    let eta_i = noise.sample(noise_rng);
    let mut s = (truth.s * (1.0 + eta_s)).clamp(0.0, 1.0);
    let mut i = (truth.i * (1.0 + eta_i)).clamp(0.0, 1.0);
    let total = s + i;
    if total > 1.0 {
        s /= total;
        i /= total;
    }
    EpidemicState { s, i }
}

/// Nearest of `levels` equally spaced values from `beta_min` to `beta_max`;
/// ties go to the lower (more restrictive) level.
pub fn quantize_beta(beta: f64, levels: u32, beta_min: f64, beta_max: f64) -> f64 {
    assert!(levels >= 2 && beta_min < beta_max);
    let top = (levels - 1) as f64;
    let step = (beta_max - beta_min) / top;
    let x = ((beta - beta_min) / step).clamp(0.0, top);
    let below = x.floor();
    let k = if x - below > 0.5 { below + 1.0 } else { below };
    level_value(k as u32, levels, beta_min, beta_max)
}

/// Value of grid level `k`, with both endpoints exact.
pub fn level_value(k: u32, levels: u32, beta_min: f64, beta_max: f64) -> f64 {
    if k + 1 >= levels {
        beta_max
    } else {
        beta_min + k as f64 * (beta_max - beta_min) / (levels - 1) as f64
    }
}
