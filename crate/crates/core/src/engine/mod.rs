//! Discrete-time simulation of normal and Byzantine agents.
//!
//! Every step runs four phases in order:
//!
//! 1. arrivals due at this step are delivered; under periodic relaying the
//!    relay buffers are flushed on period boundaries, and zero-delay relays
//!    are delivered within the same phase;
//! 2. scheduled normal nodes update, the rest hold;
//! 3. normal nodes evaluate the trigger and transmit, with buffered relays
//!    attached under the package model;
//! 4. adversaries emit.
//!
//! A message emitted at step `k` with per-hop delays summing to `d` is
//! delivered at step `k + 1 + d`. Delays on paths made only of normal nodes
//! never exceed `tau` when relays leave as soon as they arrive; buffering
//! under the package or slower periodic models adds age on top. Adversary
//! hops are delivered without delay, and an adversary stays silent toward a
//! target while its value for that target is unchanged (receivers keep the
//! last value per path anyway).

mod metrics;
mod montecarlo;
pub mod report;

use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{adversarial_emit, adversarial_relay, validate_fault_model, FaultModel, FaultModelError};
use crate::graph::{Graph, NodeId, NodeSet};
use crate::msr::{weight_floor, Message};
use crate::protocol::{evaluate_trigger, NodeState, ProtocolError, RelayModel, TriggerParams};
use crate::scalar::Scalar;

pub use metrics::{
    converged_at, joint_envelope, safety_interval, spread, spread_series, theoretical_error_level, Trajectory,
};
pub use montecarlo::{derive_seed, monte_carlo, sample_initial_states, Aggregate, MonteCarloError, Variant};

/// Which normal nodes update at a step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheduler {
    Always,
    /// Each node updates with probability `p`, and always once it has been
    /// idle for `theta - 1` steps.
    Bernoulli { p: f64 },
    /// Node with index `i` among the normal nodes updates when
    /// `k = i (mod theta)`.
    RoundRobin,
}

/// Per-hop delay on normal paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayPolicy {
    Zero,
    /// Independent uniform integer per hop, capped so a path stays within
    /// `tau`.
    Uniform,
    /// One uniform integer per edge drawn at the start, capped the same way.
    PerEdgeFixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SimConfig<T> {
    /// Hop range `l` of relayed messages.
    pub hops: usize,
    /// Trim parameter.
    pub f: usize,
    pub tau: usize,
    pub theta: usize,
    pub relay: RelayModel,
    pub trigger: TriggerParams<T>,
    /// Number of steps `K`; states are recorded for `0..=K`.
    pub horizon: usize,
    pub seed: u64,
    pub scheduler: Scheduler,
    pub delay: DelayPolicy,
    /// Count a package as one transmission instead of one per receiver.
    pub count_packages_once: bool,
    pub changed_values_only: bool,
    /// Spread threshold for `converged_at`; `c0 + 1e-3` when absent.
    pub eps_conv: Option<T>,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            hops: 1,
            f: 1,
            tau: 0,
            theta: 1,
            relay: RelayModel::Package,
            trigger: TriggerParams::standard(),
            horizon: 300,
            seed: 0,
            scheduler: Scheduler::Always,
            delay: DelayPolicy::Uniform,
            count_packages_once: false,
            changed_values_only: false,
            eps_conv: None,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.hops == 0 {
            return Err(EngineError::Config("hops must be at least 1"));
        }
        if self.theta == 0 {
            return Err(EngineError::Config("theta must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(EngineError::Config("horizon must be at least 1"));
        }
        if let Scheduler::Bernoulli { p } = self.scheduler {
            if !(p > 0.0 && p <= 1.0) {
                return Err(EngineError::Config("bernoulli probability must lie in (0, 1]"));
            }
        }
        if let Some(eps) = self.eps_conv {
            if !(eps >= T::zero() && eps.is_finite()) {
                return Err(EngineError::Config("eps_conv must be finite and nonnegative"));
            }
        }
        self.relay.validate()?;
        self.trigger.validate()?;
        Ok(())
    }

    pub fn convergence_threshold(&self) -> T {
        self.eps_conv.unwrap_or(self.trigger.c0 + T::of(1e-3))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    FaultModel(#[from] FaultModelError),
    #[error("expected {expected} initial values (one per normal node), got {got}")]
    InitialStates { expected: usize, got: usize },
    #[error("initial values must be finite")]
    NonFinite,
    #[error("there are no normal nodes")]
    NoNormalNodes,
}

/// Everything recorded about one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunMetrics<T> {
    pub normal_nodes: Vec<NodeId>,
    pub adversaries: Vec<NodeId>,
    #[serde(skip)]
    pub trajectory: Trajectory<T>,
    /// `V[k]` for `k = 0..=horizon`.
    pub spread: Vec<T>,
    pub safety_interval: (T, T),
    pub safety_held: bool,
    /// Broadcasts of the own value, the initial exchange included.
    pub events_per_node: BTreeMap<NodeId, usize>,
    pub transmissions_per_node: BTreeMap<NodeId, usize>,
    pub mean_events: f64,
    pub mean_transmissions: f64,
    pub theoretical_c: T,
    pub gamma: T,
    pub converged_at: Option<usize>,
    pub final_spread: T,
    /// Largest delivery delay observed on an all-normal path.
    pub max_normal_path_delay: usize,
    /// Messages rejected by normal nodes.
    pub dropped: usize,
}

/// Run with `x_hat[0] = x[0]`.
pub fn run<T: Scalar>(g: &Graph, fm: &FaultModel<T>, x0: &[T], cfg: &SimConfig<T>) -> Result<RunMetrics<T>, EngineError> {
    run_with_aux(g, fm, x0, None, cfg)
}

/// Run with explicit initial transmitted states. `x0` and `x_hat0` list the
/// normal nodes in ascending id order.
pub fn run_with_aux<T: Scalar>(
    g: &Graph,
    fm: &FaultModel<T>,
    x0: &[T],
    x_hat0: Option<&[T]>,
    cfg: &SimConfig<T>,
) -> Result<RunMetrics<T>, EngineError> {
    cfg.validate()?;
    validate_fault_model(g, fm, cfg.hops)?;
    let adversaries = fm.adversary_set();
    let normal = g.all().difference(adversaries).to_vec();
    if normal.is_empty() {
        return Err(EngineError::NoNormalNodes);
    }
    for init in std::iter::once(x0).chain(x_hat0) {
        if init.len() != normal.len() {
            return Err(EngineError::InitialStates { expected: normal.len(), got: init.len() });
        }
        if init.iter().any(|v| !v.is_finite()) {
            return Err(EngineError::NonFinite);
        }
    }
    let mut sim = Sim::new(g, fm, &normal, x0, x_hat0, cfg);
    sim.execute();
    Ok(sim.finish())
}

struct Delivery<T> {
    to: NodeId,
    msg: Message<T>,
}

struct Sim<'a, T> {
    g: &'a Graph,
    fm: &'a FaultModel<T>,
    cfg: &'a SimConfig<T>,
    adversaries: NodeSet,
    normal: Vec<NodeId>,
    index: Vec<Option<usize>>,
    states: Vec<NodeState<T>>,
    pending: BTreeMap<i64, Vec<Delivery<T>>>,
    delay_rng: ChaCha8Rng,
    sched_rng: ChaCha8Rng,
    edge_delay: BTreeMap<(NodeId, NodeId), usize>,
    events: Vec<usize>,
    transmissions: Vec<usize>,
    max_delay: usize,
    last_adversary_value: BTreeMap<(NodeId, NodeId), T>,
    traj: Trajectory<T>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<'a, T: Scalar> Sim<'a, T> {
    fn new(
        g: &'a Graph,
        fm: &'a FaultModel<T>,
        normal: &[NodeId],
        x0: &[T],
        x_hat0: Option<&[T]>,
        cfg: &'a SimConfig<T>,
    ) -> Self {
        let mut index = vec![None; g.n() + 1];
        for (idx, &i) in normal.iter().enumerate() {
            index[i] = Some(idx);
        }
        let states: Vec<NodeState<T>> = normal
            .iter()
            .enumerate()
            .map(|(idx, &i)| NodeState::new(i, cfg.hops, g.in_neighbors(i), x0[idx], x_hat0.map(|h| h[idx])))
            .collect();
        let mut edge_rng = stream(cfg.seed, 3);
        let edge_delay = g
            .edges()
            .iter()
            .map(|&e| (e, edge_rng.gen_range(0..=cfg.tau)))
            .collect();
        let traj = Trajectory {
            x: vec![states.iter().map(|s| s.x).collect()],
            x_hat: vec![states.iter().map(|s| s.x_hat).collect()],
            fired: Vec::new(),
            updated: Vec::new(),
        };
        Sim {
            g,
            fm,
            cfg,
            adversaries: fm.adversary_set(),
            normal: normal.to_vec(),
            index,
            states,
            pending: BTreeMap::new(),
            delay_rng: stream(cfg.seed, 1),
            sched_rng: stream(cfg.seed, 2),
            edge_delay,
            events: vec![0; normal.len()],
            transmissions: vec![0; normal.len()],
            max_delay: 0,
            last_adversary_value: BTreeMap::new(),
            traj,
        }
    }

    /// Hand `msg` (path ending at `from`) to `to`. The earliest possible
    /// arrival step is `base`. Returns the arrival step.
    fn send(&mut self, from: NodeId, to: NodeId, msg: Message<T>, base: i64) -> i64 {
        let normal_path = msg.path.node_set().with(to).is_disjoint(self.adversaries);
        let arrival = if normal_path {
            let elapsed = (base - (msg.send_time + 1)).max(0) as usize;
            let room = self.cfg.tau.saturating_sub(elapsed);
            let d = match self.cfg.delay {
                DelayPolicy::Zero => 0,
                DelayPolicy::Uniform => self.delay_rng.gen_range(0..=room),
                DelayPolicy::PerEdgeFixed => self.edge_delay[&(from, to)].min(room),
            };
            let arrival = base + d as i64;
            self.max_delay = self.max_delay.max((arrival - (msg.send_time + 1)) as usize);
            arrival
        } else {
            base
        };
        self.pending.entry(arrival).or_default().push(Delivery { to, msg });
        arrival
    }

    /// Send `msg` to every out-neighbor of `from` not already on its path and
    /// return the number of receivers.
    fn broadcast(&mut self, from: NodeId, msg: &Message<T>, base: i64) -> usize {
        let targets = self.g.out_neighbors(from).difference(msg.path.node_set());
        for t in targets.iter() {
            self.send(from, t, msg.clone(), base);
        }
        targets.len()
    }

    fn count(&self, receivers: usize, own: bool) -> usize {
        match (self.cfg.count_packages_once, own) {
            (true, true) => 1,
            (true, false) => usize::from(receivers > 0),
            (false, true) => receivers.max(1),
            (false, false) => receivers,
        }
    }

    fn flush(&mut self, idx: usize, base: i64) {
        let relays = self.states[idx].take_relays(self.cfg.changed_values_only);
        let from = self.normal[idx];
        for m in relays {
            let receivers = self.broadcast(from, &m, base);
            self.transmissions[idx] += self.count(receivers, false);
        }
    }

    fn initial_exchange(&mut self) {
        for idx in 0..self.states.len() {
            let m = self.states[idx].initial_message();
            let receivers = self.broadcast(self.normal[idx], &m, 0);
            self.events[idx] += 1;
            self.transmissions[idx] += self.count(receivers, true);
        }
        self.adversary_emissions(-1);
    }

    fn adversary_emissions(&mut self, k: i64) {
        for (&a, strategy) in &self.fm.adversaries {
            for (to, m) in adversarial_emit(a, strategy, self.g.out_neighbors(a), k) {
                if self.last_adversary_value.insert((a, to), m.value) == Some(m.value) {
                    continue;
                }
                self.pending.entry(k + 1).or_default().push(Delivery { to, msg: m });
            }
        }
    }

    fn deliver(&mut self, k: i64) {
        let flush = self.cfg.relay.flushes_at(k);
        if flush {
            for idx in 0..self.states.len() {
                self.flush(idx, k);
            }
        }
        let mut queue: VecDeque<Delivery<T>> = self.pending.remove(&k).unwrap_or_default().into();
        while let Some(Delivery { to, msg }) = queue.pop_front() {
            if self.adversaries.contains(to) {
                self.adversary_relay(to, &msg, k);
            } else {
                let idx = self.index[to].expect("normal node has an index");
                self.states[idx].receive(msg);
                if flush {
                    self.flush(idx, k);
                }
            }
            if let Some(now) = self.pending.remove(&k) {
                queue.extend(now);
            }
        }
    }

    fn adversary_relay(&mut self, a: NodeId, msg: &Message<T>, k: i64) {
        let strategy = &self.fm.adversaries[&a];
        let sender = msg.path.last();
        if !self.g.has_edge(sender, a) || msg.path.contains(a) || msg.path.hops() + 1 >= self.cfg.hops {
            return;
        }
        let targets = self.g.out_neighbors(a).difference(msg.path.node_set());
        let out: Vec<(NodeId, Message<T>)> = targets
            .iter()
            .filter_map(|t| adversarial_relay(a, strategy, msg, t, k).map(|m| (t, m)))
            .collect();
        for (t, m) in out {
            self.pending.entry(k).or_default().push(Delivery { to: t, msg: m });
        }
    }

    fn scheduled(&mut self, k: usize) -> Vec<bool> {
        let theta = self.cfg.theta;
        match self.cfg.scheduler {
            Scheduler::Always => vec![true; self.states.len()],
            Scheduler::RoundRobin => (0..self.states.len()).map(|idx| k % theta == idx % theta).collect(),
            Scheduler::Bernoulli { p } => {
                let rng = &mut self.sched_rng;
                self.states
                    .iter()
                    .map(|s| {
                        let draw = rng.gen_bool(p);
                        draw || s.steps_since_update() + 1 >= theta
                    })
                    .collect()
            }
        }
    }

    #[allow(clippy::needless_range_loop)]
    fn step(&mut self, k: usize) {
        let ki = k as i64;
        self.deliver(ki);

        let sched = self.scheduled(k);
        let f = self.cfg.f;
        self.states.par_iter_mut().zip(&sched).for_each(|(s, &on)| {
            if on {
                s.update(f);
            } else {
                s.hold();
            }
        });

        let mut fired = vec![false; self.states.len()];
        for idx in 0..self.states.len() {
            let s = &self.states[idx];
            let trig = evaluate_trigger(s.x_hat, s.x, &self.cfg.trigger, ki);
            let emission = self.states[idx].transmit(trig.fire, self.cfg.relay, ki, self.cfg.changed_values_only);
            let from = self.normal[idx];
            if let Some(own) = emission.own {
                fired[idx] = true;
                self.events[idx] += 1;
                let receivers = self.broadcast(from, &own, ki + 1);
                self.transmissions[idx] += self.count(receivers, true);
                for m in &emission.relays {
                    self.broadcast(from, m, ki + 1);
                }
            }
        }

        self.adversary_emissions(ki);

        self.traj.fired.push(fired);
        self.traj.updated.push(sched);
        self.traj.x.push(self.states.iter().map(|s| s.x).collect());
        self.traj.x_hat.push(self.states.iter().map(|s| s.x_hat).collect());
    }

    fn execute(&mut self) {
        self.initial_exchange();
        for k in 0..self.cfg.horizon {
            self.step(k);
        }
        let n = self.states.len();
        self.traj.fired.push(vec![false; n]);
        self.traj.updated.push(vec![false; n]);
    }

    fn finish(self) -> RunMetrics<T> {
        let cfg = self.cfg;
        let spread = spread_series(&self.traj.x, cfg.tau);
        let (lo, hi) = safety_interval(&self.traj.x[0], &self.traj.x_hat[0]);
        let slack = T::epsilon() * T::of(4.0) * lo.abs().max(hi.abs()).max(T::one());
        let safety_held = self.traj.x.iter().flatten().all(|&v| v >= lo - slack && v <= hi + slack);
        let gamma: T = weight_floor(self.g, cfg.hops);
        let theoretical_c = theoretical_error_level(cfg.trigger.c0, self.normal.len(), cfg.theta, gamma);
        let converged = converged_at(&spread, cfg.convergence_threshold(), 2 * cfg.tau + cfg.theta);
        let n = self.normal.len() as f64;
        let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / n;
        RunMetrics {
            normal_nodes: self.normal.clone(),
            adversaries: self.adversaries.to_vec(),
            final_spread: *spread.last().expect("at least one row"),
            spread,
            safety_interval: (lo, hi),
            safety_held,
            mean_events: mean(&self.events),
            mean_transmissions: mean(&self.transmissions),
            events_per_node: self.normal.iter().copied().zip(self.events.iter().copied()).collect(),
            transmissions_per_node: self.normal.iter().copied().zip(self.transmissions.iter().copied()).collect(),
            theoretical_c,
            gamma,
            converged_at: converged,
            max_normal_path_delay: self.max_delay,
            dropped: self.states.iter().map(NodeState::dropped).sum(),
            trajectory: self.traj,
        }
    }
}
