//! Exact stochastic SEIRD dynamics on a network (direct Gillespie method).
//!
//! Each infectious node infects each susceptible neighbour at rate `beta_n`;
//! exposed nodes become infectious at rate `gamma_e`; infectious nodes stop
//! being infectious at rate `gamma_i` and then die with a probability that
//! depends on the current prevalence, recovering otherwise. `R` and `D` are
//! absorbing.
//!
//! The simulator keeps the set of S-I edges, the exposed nodes and the
//! infectious nodes in [`IndexedSet`]s, so drawing and applying an event
//! costs `O(degree)`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indexed_set::IndexedSet;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeState {
    S,
    E,
    I,
    R,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeirdParams {
    /// Per-link transmission rate, 1/day.
    pub beta_n: f64,
    /// Rate of leaving the exposed state, 1/day.
    pub gamma_e: f64,
    /// Rate of leaving the infectious state, 1/day.
    pub gamma_i: f64,
    /// Death probability while prevalence is at or below `i_th`.
    pub p_death_low: f64,
    /// Death probability while prevalence is above `i_th`.
    pub p_death_high: f64,
    /// Prevalence threshold (fraction of N).
    pub i_th: f64,
}

impl SeirdParams {
    pub fn validate(&self) -> Result<(), SeirdError> {
        let rates_ok = self.beta_n >= 0.0 && self.gamma_e > 0.0 && self.gamma_i > 0.0;
        let probs_ok = 0.0 <= self.p_death_low && self.p_death_low <= self.p_death_high && self.p_death_high <= 1.0;
        if !(rates_ok && probs_ok && self.i_th >= 0.0) {
            return Err(SeirdError::BadParams(*self));
        }
        Ok(())
    }

    /// Death probability at prevalence `i` (fraction infectious).
    pub fn death_probability(&self, prevalence: f64) -> f64 {
        if prevalence > self.i_th {
            self.p_death_high
        } else {
            self.p_death_low
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeirdError {
    #[error("initial infected count {i0} must lie strictly between 0 and {n}")]
    BadInitial { i0: usize, n: usize },
    #[error("invalid SEIRD parameters: {0:?}")]
    BadParams(SeirdParams),
    #[error("no event possible: the epidemic is over")]
    Absorbed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counts {
    pub s: usize,
    pub e: usize,
    pub i: usize,
    pub r: usize,
    pub d: usize,
}

impl Counts {
    pub fn total(&self) -> usize {
        self.s + self.e + self.i + self.r + self.d
    }

    fn slot(&mut self, state: NodeState) -> &mut usize {
        match state {
            NodeState::S => &mut self.s,
            NodeState::E => &mut self.e,
            NodeState::I => &mut self.i,
            NodeState::R => &mut self.r,
            NodeState::D => &mut self.d,
        }
    }

    fn tally(states: &[NodeState]) -> Self {
        let mut c = Self::default();
        for &st in states {
            *c.slot(st) += 1;
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Infection,
    IncubationEnd,
    Recovery,
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub node: u32,
}

pub type EventLog = Vec<Event>;

/// Full simulator state for one outbreak on one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSimState {
    node_states: Vec<NodeState>,
    counts: Counts,
    time: f64,
    si_edges: IndexedSet,
    exposed: IndexedSet,
    infectious: IndexedSet,
}

/// `i0_count` distinct uniformly chosen nodes infectious, the rest susceptible.
pub fn init_state(net: &Network, i0_count: usize, seed: u64) -> Result<NetworkSimState, SeirdError> {
    let n = net.node_count();
    if i0_count == 0 || i0_count >= n {
        return Err(SeirdError::BadInitial { i0: i0_count, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<u32> = sample(&mut rng, n, i0_count).into_iter().map(|u| u as u32).collect();
    chosen.sort_unstable();
    Ok(NetworkSimState::from_infected(net, &chosen))
}

/// Exact brute-force count of edges joining an `S` node and an `I` node.
pub fn si_edge_recount(state: &NetworkSimState, net: &Network) -> usize {
    net.edges()
        .iter()
        .filter(|&&(u, v)| {
            let (a, b) = (state.node_states[u as usize], state.node_states[v as usize]);
            matches!((a, b), (NodeState::S, NodeState::I) | (NodeState::I, NodeState::S))
        })
        .count()
}

impl NetworkSimState {
    /// State with exactly the listed nodes infectious and all others
    /// susceptible, at time zero.
    pub fn from_infected(net: &Network, infected: &[u32]) -> Self {
        let mut states = vec![NodeState::S; net.node_count()];
        for &u in infected {
            states[u as usize] = NodeState::I;
        }
        Self::from_node_states(net, states)
    }

    /// Arbitrary initial configuration; derived bookkeeping is rebuilt.
    pub fn from_node_states(net: &Network, node_states: Vec<NodeState>) -> Self {
        assert_eq!(node_states.len(), net.node_count());
        let n = net.node_count();
        let mut si_edges = IndexedSet::new(net.edge_count());
        let mut exposed = IndexedSet::new(n);
        let mut infectious = IndexedSet::new(n);
        for (u, &st) in node_states.iter().enumerate() {
            match st {
                NodeState::E => {
                    exposed.insert(u as u32);
                }
                NodeState::I => {
                    infectious.insert(u as u32);
                    for (v, id) in net.incident(u as u32) {
                        if node_states[v as usize] == NodeState::S {
                            si_edges.insert(id);
                        }
                    }
                }
                _ => {}
            }
        }
        Self {
            counts: Counts::tally(&node_states),
            node_states,
            time: 0.0,
            si_edges,
            exposed,
            infectious,
        }
    }

    pub fn counts(&self) -> Counts {
        self.counts
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn node_states(&self) -> &[NodeState] {
        &self.node_states
    }

    pub fn node_count(&self) -> usize {
        self.node_states.len()
    }

    pub fn si_edge_count(&self) -> usize {
        self.si_edges.len()
    }

    /// Total event rate `beta_n |SI| + gamma_e E + gamma_i I`.
    pub fn total_rate(&self, params: &SeirdParams) -> f64 {
        params.beta_n * self.si_edges.len() as f64
            + params.gamma_e * self.counts.e as f64
            + params.gamma_i * self.counts.i as f64
    }

    pub fn is_absorbed(&self) -> bool {
        self.counts.e == 0 && self.counts.i == 0
    }

    fn set_state(&mut self, u: u32, to: NodeState) {
        let from = std::mem::replace(&mut self.node_states[u as usize], to);
        *self.counts.slot(from) -= 1;
        *self.counts.slot(to) += 1;
    }

    /// Draws which event fires given the total rate and applies it.
    fn fire<R: Rng + ?Sized>(&mut self, net: &Network, params: &SeirdParams, total: f64, rng: &mut R) -> Event {
        let infection = params.beta_n * self.si_edges.len() as f64;
        let incubation = params.gamma_e * self.counts.e as f64;
        let u = rng.random::<f64>() * total;
        let (kind, node) = if u < infection && !self.si_edges.is_empty() {
            let (a, b) = net.endpoints(self.si_edges.sample(rng).expect("non-empty"));
            let target = if self.node_states[a as usize] == NodeState::S {
                a
            } else {
                b
            };
            self.expose(net, target);
            (EventKind::Infection, target)
        } else if (u < infection + incubation || self.counts.i == 0) && !self.exposed.is_empty() {
            let node = self.exposed.sample(rng).expect("non-empty");
            self.make_infectious(net, node);
            (EventKind::IncubationEnd, node)
        } else {
            let node = self.infectious.sample(rng).expect("some event must be possible");
            let prevalence = self.counts.i as f64 / self.node_count() as f64;
            let dies = rng.random::<f64>() < params.death_probability(prevalence);
            let outcome = if dies { NodeState::D } else { NodeState::R };
            self.resolve(net, node, outcome);
            (if dies { EventKind::Death } else { EventKind::Recovery }, node)
        };
        Event {
            time: self.time,
            kind,
            node,
        }
    }

    fn expose(&mut self, net: &Network, u: u32) {
        debug_assert_eq!(self.node_states[u as usize], NodeState::S);
        self.set_state(u, NodeState::E);
        self.exposed.insert(u);
        for (v, id) in net.incident(u) {
            if self.node_states[v as usize] == NodeState::I {
                self.si_edges.remove(id);
            }
        }
    }

    fn make_infectious(&mut self, net: &Network, u: u32) {
        self.set_state(u, NodeState::I);
        self.exposed.remove(u);
        self.infectious.insert(u);
        for (v, id) in net.incident(u) {
            if self.node_states[v as usize] == NodeState::S {
                self.si_edges.insert(id);
            }
        }
    }

    fn resolve(&mut self, net: &Network, u: u32, outcome: NodeState) {
        self.set_state(u, outcome);
        self.infectious.remove(u);
        for (v, id) in net.incident(u) {
            if self.node_states[v as usize] == NodeState::S {
                self.si_edges.remove(id);
            }
        }
    }

    /// Runs events at constant parameters until the clock reaches `t_end`
    /// (or the chain is absorbed, in which case the clock jumps to `t_end`).
    /// Returns the number of events fired.
    pub fn advance_until<R: Rng + ?Sized>(
        &mut self,
        net: &Network,
        params: &SeirdParams,
        t_end: f64,
        rng: &mut R,
        mut log: Option<&mut EventLog>,
    ) -> usize {
        let mut fired = 0;
        loop {
            let total = self.total_rate(params);
            if total <= 0.0 {
                break;
            }
            let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
            if self.time + wait >= t_end {
                break;
            }
            self.time += wait;
            let event = self.fire(net, params, total, rng);
            if let Some(log) = log.as_deref_mut() {
                log.push(event);
            }
            fired += 1;
        }
        if self.time < t_end {
            self.time = t_end;
        }
        fired
    }
}

/// One Gillespie step: draws the waiting time and the event, applies it,
/// and returns the event with the waiting time.
pub fn gillespie_step<R: Rng + ?Sized>(
    state: &mut NetworkSimState,
    net: &Network,
    params: &SeirdParams,
    rng: &mut R,
) -> Result<(Event, f64), SeirdError> {
    let total = state.total_rate(params);
    if !(total > 0.0) {
        return Err(SeirdError::Absorbed);
    }
    let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
    state.time += wait;
    Ok((state.fire(net, params, total, rng), wait))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyCounts {
    pub day: u32,
    pub counts: Counts,
    pub beta_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeirdRun {
    pub events: EventLog,
    /// Counts at integer days `0..=t_final`, with the rate in force from
    /// that day on.
    pub daily: Vec<DailyCounts>,
}

/// Simulates from `state` for `t_final` days. The per-link rate is re-read
/// from `beta_n_schedule(day)` at each day boundary.
pub fn run_seird<F>(
    net: &Network,
    mut state: NetworkSimState,
    params: &SeirdParams,
    beta_n_schedule: F,
    t_final: u32,
    seed: u64,
    record_events: bool,
) -> SeirdRun
where
    F: Fn(u32) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = EventLog::new();
    let mut daily = Vec::with_capacity(t_final as usize + 1);
    for day in 0..=t_final {
        let beta_n = beta_n_schedule(day);
        daily.push(DailyCounts {
            day,
            counts: state.counts(),
            beta_n,
        });
        if day == t_final {
            break;
        }
        let p = SeirdParams { beta_n, ..*params };
        let log = if record_events { Some(&mut events) } else { None };
        state.advance_until(net, &p, f64::from(day + 1), &mut rng, log);
    }
    SeirdRun { events, daily }
}
