//! Resilient consensus with multi-hop relaying and event-triggered
//! communication.
//!
//! Normal agents fuse `(value, path)` messages received over paths of at most
//! `l` hops, trimming extreme messages whose paths a small node set could
//! have corrupted, and only broadcast when their state drifts from the last
//! broadcast value. Byzantine agents may equivocate and tamper with relayed
//! values but cannot forge paths.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! and `*F32` aliases below fix the scalar.

pub mod adversary;
pub mod engine;
pub mod graph;
pub mod msr;
pub mod protocol;
pub mod robustness;
pub mod scalar;

pub use adversary::{adversarial_emit, adversarial_relay, validate_fault_model, FaultModel, FaultModelError, Strategy};
pub use engine::{monte_carlo, run, run_with_aux, DelayPolicy, EngineError, RunMetrics, Scheduler, SimConfig, Variant};
pub use graph::{Graph, GraphError, NodeId, NodeSet, Path};
pub use msr::{fuse, msr_update, trim, Message, MessageSet, MsrError, Trimmed};
pub use protocol::{evaluate_trigger, NodeState, RelayModel, TriggerParams};
pub use robustness::{certify, is_strongly_robust, Flavor, RobustnessCertificate, RobustnessQuery};
pub use scalar::Scalar;

pub type MessageF64 = Message<f64>;
pub type MessageF32 = Message<f32>;
pub type NodeStateF64 = NodeState<f64>;
pub type NodeStateF32 = NodeState<f32>;
pub type TriggerParamsF64 = TriggerParams<f64>;
pub type TriggerParamsF32 = TriggerParams<f32>;
pub type StrategyF64 = Strategy<f64>;
pub type StrategyF32 = Strategy<f32>;
pub type FaultModelF64 = FaultModel<f64>;
pub type FaultModelF32 = FaultModel<f32>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimConfigF32 = SimConfig<f32>;
pub type RunMetricsF64 = RunMetrics<f64>;
pub type RunMetricsF32 = RunMetrics<f32>;
