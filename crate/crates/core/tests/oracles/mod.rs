//! Independent reference computations shared by the integration and
//! acceptance tests. Apart from `link_series`, which only replays a plant,
//! nothing here calls into the code under test beyond plain data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use flatcurve::coupling::si_links_mean_field;
use flatcurve::scenario::{NetworkPlant, Plant, ScenarioConfig};
use flatcurve::seird::{NodeState, SeirdParams};
use flatcurve::sir::EpidemicState;

/// Tracking law written as a PD controller on `x = -(i + s) / gamma`,
/// `x' = i`, mapped back to a transmission rate. `alpha_p`, `alpha_d` are
/// the PD gains.
pub fn pd_beta(x: EpidemicState, r: EpidemicState, beta_bar: f64, gamma: f64, alpha_p: f64, alpha_d: f64) -> f64 {
    let (xc, xd) = (-(x.i + x.s) / gamma, x.i);
    let (rc, rd) = (-(r.i + r.s) / gamma, r.i);
    // Reference acceleration from the SIR dynamics in these coordinates.
    let rdd = -(gamma * rc + rd) * rd * beta_bar - gamma * rd;
    -(gamma * rd + rdd) / ((gamma * xc + xd) * xd) + alpha_p * (rc - xc) + alpha_d * (rd - xd)
}

/// PD gains equivalent to the `(psi_i, psi_s)` form.
pub fn pd_gains(psi_i: f64, psi_s: f64, gamma: f64) -> (f64, f64) {
    (gamma * psi_s, psi_i + psi_s)
}

fn code(s: NodeState) -> u8 {
    match s {
        NodeState::S => b'S',
        NodeState::E => b'E',
        NodeState::I => b'I',
        NodeState::R => b'R',
        NodeState::D => b'D',
    }
}

pub fn encode(states: &[NodeState]) -> String {
    states.iter().map(|&s| code(s) as char).collect()
}

/// Exact absorption distribution of the SEIRD chain on a small graph, keyed
/// by the final configuration string (e.g. `"RRSD"`). Every transition moves
/// one node forward in S -> E -> I -> {R, D}, so the chain is acyclic and a
/// memoized first-step recursion is exact.
pub fn exact_absorption(
    n: usize,
    edges: &[(usize, usize)],
    init: &[NodeState],
    p: &SeirdParams,
) -> BTreeMap<String, f64> {
    let start: Vec<u8> = init.iter().map(|&s| code(s)).collect();
    let mut memo = HashMap::new();
    let dist = absorb(&start, n, edges, p, &mut memo);
    dist.into_iter()
        .map(|(k, v)| (String::from_utf8(k).unwrap(), v))
        .collect()
}

type Dist = BTreeMap<Vec<u8>, f64>;

fn absorb(
    state: &[u8],
    n: usize,
    edges: &[(usize, usize)],
    p: &SeirdParams,
    memo: &mut HashMap<Vec<u8>, Dist>,
) -> Dist {
    if let Some(d) = memo.get(state) {
        return d.clone();
    }
    let mut moves: Vec<(f64, Vec<u8>)> = Vec::new();
    let with = |u: usize, c: u8| {
        let mut next = state.to_vec();
        next[u] = c;
        next
    };
    for &(a, b) in edges {
        match (state[a], state[b]) {
            (b'S', b'I') => moves.push((p.beta_n, with(a, b'E'))),
            (b'I', b'S') => moves.push((p.beta_n, with(b, b'E'))),
            _ => {}
        }
    }
    let infectious = state.iter().filter(|&&c| c == b'I').count();
    let pd = if infectious as f64 / n as f64 > p.i_th {
        p.p_death_high
    } else {
        p.p_death_low
    };
    for (u, &c) in state.iter().enumerate() {
        match c {
            b'E' => moves.push((p.gamma_e, with(u, b'I'))),
            b'I' => {
                moves.push((p.gamma_i * pd, with(u, b'D')));
                moves.push((p.gamma_i * (1.0 - pd), with(u, b'R')));
            }
            _ => {}
        }
    }
    let total: f64 = moves.iter().map(|m| m.0).sum();
    let mut dist = Dist::new();
    if total == 0.0 {
        dist.insert(state.to_vec(), 1.0);
    } else {
        for (rate, next) in moves {
            if rate == 0.0 {
                continue;
            }
            for (k, v) in absorb(&next, n, edges, p, memo) {
                *dist.entry(k).or_insert(0.0) += rate / total * v;
            }
        }
    }
    memo.insert(state.to_vec(), dist.clone());
    dist
}

/// Deterministic SEIRD mean-field ODE with per-capita transmission
/// `beta_n * mean_degree`, from `i0` infectious fraction, everyone else
/// susceptible. Returns the largest infectious fraction reached on
/// `[0, t_final]`, integrated by RK4 with step `dt`.
pub fn mean_field_peak(
    beta_n: f64,
    mean_degree: f64,
    gamma_e: f64,
    gamma_i: f64,
    i0: f64,
    t_final: f64,
    dt: f64,
) -> f64 {
    let b = beta_n * mean_degree;
    let f = |y: [f64; 3]| {
        let [s, e, i] = y;
        [-b * s * i, b * s * i - gamma_e * e, gamma_e * e - gamma_i * i]
    };
    let add = |y: [f64; 3], k: [f64; 3], h: f64| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];
    let mut y = [1.0 - i0, 0.0, i0];
    let mut peak = i0;
    let steps = (t_final / dt).round() as usize;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(add(y, k1, dt / 2.0));
        let k3 = f(add(y, k2, dt / 2.0));
        let k4 = f(add(y, k3, dt));
        for j in 0..3 {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        peak = peak.max(y[2]);
    }
    peak
}

/// Peak prevalence of uncontrolled run `k` and its per-day
/// `(true S-I links, mean-field estimate)`.
pub fn link_series(cfg: &ScenarioConfig, k: usize) -> (f64, Vec<(f64, f64)>) {
    let mut plant = NetworkPlant::new(cfg, k).unwrap();
    let n = cfg.network.nodes;
    let beta = cfg.beta_max_sir();
    let mut peak: f64 = 0.0;
    let mut series = Vec::new();
    for day in 0..=cfg.horizon_days {
        if day > 0 {
            plant.advance(beta, day);
        }
        let c = plant.state().counts();
        peak = peak.max(plant.observe().i);
        series.push((
            plant.state().si_edge_count() as f64,
            si_links_mean_field(c.i, c.s, n, cfg.network.mean_degree),
        ));
    }
    (peak, series)
}

/// Ensemble-mean `(true, mean-field)` S-I link counts per day.
pub fn mean_link_series(runs: &[(f64, Vec<(f64, f64)>)]) -> Vec<(f64, f64)> {
    let m = runs.len() as f64;
    (0..runs[0].1.len())
        .map(|d| {
            let t = runs.iter().map(|r| r.1[d].0).sum::<f64>() / m;
            let f = runs.iter().map(|r| r.1[d].1).sum::<f64>() / m;
            (t, f)
        })
        .collect()
}

/// Mean-field SEIRD peak for a network scenario over its horizon.
pub fn scenario_mean_field_peak(cfg: &ScenarioConfig) -> f64 {
    let e = &cfg.epidemic;
    let i0 = e.initial_infected as f64 / cfg.network.nodes as f64;
    mean_field_peak(
        e.beta_n,
        cfg.network.mean_degree,
        e.gamma_e,
        e.gamma_i,
        i0,
        f64::from(cfg.horizon_days),
        0.01,
    )
}

/// Peak infected fraction of the SIR model at constant `beta` from
/// `(s0, i0)`, by RK4 with step `dt`, sampled at the steps.
pub fn sir_peak(s0: f64, i0: f64, beta: f64, gamma: f64, dt: f64) -> f64 {
    let f = |s: f64, i: f64| (-beta * s * i, beta * s * i - gamma * i);
    let (mut s, mut i) = (s0, i0);
    let mut peak = i0;
    loop {
        let (a1, b1) = f(s, i);
        let (a2, b2) = f(s + dt / 2.0 * a1, i + dt / 2.0 * b1);
        let (a3, b3) = f(s + dt / 2.0 * a2, i + dt / 2.0 * b2);
        let (a4, b4) = f(s + dt * a3, i + dt * b3);
        s += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        let next = i + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if next < i && s * beta <= gamma {
            return peak;
        }
        i = next;
        peak = peak.max(i);
    }
}
