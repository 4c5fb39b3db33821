//! Data-plane vocabulary: packets, flow-rule match/action pairs, and the
//! flow-table entries switches keep per rule.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketHeader {
    pub src: String,
    pub dst: String,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: Protocol,
}

/// Either a structured sensor reading (raw, pre-normalization feature row)
/// or opaque bytes the classifier cannot interpret.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Reading(Vec<f64>),
    Opaque(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    pub header: PacketHeader,
    pub payload: Payload,
}

/// Match fields; `None` is a wildcard. At least one field must be set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMatch {
    pub src: Option<String>,
    pub dst: Option<String>,
    pub proto: Option<Protocol>,
    pub dst_port: Option<u16>,
}

impl RuleMatch {
    pub fn is_empty(&self) -> bool {
        self.src.is_none() && self.dst.is_none() && self.proto.is_none() && self.dst_port.is_none()
    }

    pub fn matches(&self, h: &PacketHeader) -> bool {
        self.src.as_deref().is_none_or(|s| s == h.src)
            && self.dst.as_deref().is_none_or(|d| d == h.dst)
            && self.proto.is_none_or(|p| p == h.proto)
            && self.dst_port.is_none_or(|p| p == h.dst_port)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleAction {
    Forward { port: u32 },
    Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRule {
    pub rule_id: u64,
    #[serde(rename = "match")]
    pub match_fields: RuleMatch,
    pub action: RuleAction,
    pub issued_at: u64,
}

/// A rule as a switch holds it, with modification and usage bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTableEntry {
    pub rule: FlowRule,
    /// Tick at which the entry was installed or last altered.
    pub last_modified: u64,
    pub packet_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub rule: FlowRule,
    /// Ticks elapsed since the entry was last modified, at dump time.
    pub hard_age: u64,
    pub packet_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTableSnapshot {
    pub switch_id: String,
    pub tick: u64,
    pub entries: Vec<SnapshotEntry>,
}
