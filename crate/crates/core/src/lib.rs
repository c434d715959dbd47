//! Curve-flattening epidemic control.
//!
//! * [`optimal`]: closed-form largest constant transmission rate keeping
//!   the SIR infection peak at the health-care capacity.
//! * [`controller`]: nonlinear tracking law that follows that nominal
//!   trajectory under feedback.
//! * [`network`], [`seird`]: stochastic SEIRD outbreaks on Erdos-Renyi
//!   contact networks, simulated exactly.
//! * [`coupling`]: input and output maps between the network and the
//!   population-level controller.
//! * [`scenario`]: closed-loop experiments with measurement delay, noise,
//!   quantized policy levels and Monte Carlo ensembles.

// Parameter checks use `!(x > 0.0)` so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod coupling;
pub mod exec;
pub mod indexed_set;
pub mod lambert_w;
pub mod network;
pub mod optimal;
pub mod report;
pub mod scenario;
pub mod seird;
pub mod sir;
