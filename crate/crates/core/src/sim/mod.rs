//! Deterministic in-process model of the software-defined network: hosts,
//! switches with first-match flow tables, and a controller that runs the
//! payload classifier and records its forwarding decisions on the ledger.

pub mod flow;
pub mod simulation;
pub mod switch;
#[cfg(test)]
pub(crate) mod testutil;
pub mod topology;
pub mod trace;

pub use flow::{
    FlowRule, FlowTableEntry, FlowTableSnapshot, Packet, PacketHeader, Payload, Protocol,
    RuleAction, RuleMatch, SnapshotEntry,
};
pub use simulation::{ids_classify, DeliveryOutcome, Simulation, SCADA_PORT};
pub use switch::{Switch, SwitchOutcome};
pub use topology::{build_topology, LinkSpec, NodeKind, Topology, TopologySpec};
pub use trace::{EventKind, Trace, TraceEvent, TRACE_SCHEMA_VERSION};
