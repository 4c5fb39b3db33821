//! A switch holds an ordered flow table with first-match semantics; a
//! packet that matches no entry is punted to the controller.

use serde::{Deserialize, Serialize};

use super::flow::{FlowRule, FlowTableEntry, FlowTableSnapshot, Packet, RuleAction, SnapshotEntry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchOutcome {
    Forwarded { port: u32 },
    Dropped,
    /// No table entry matched: the packet goes to the controller.
    PacketIn,
}

#[derive(Debug, Clone)]
pub struct Switch {
    pub switch_id: String,
    table: Vec<FlowTableEntry>,
}

impl Switch {
    pub fn new(switch_id: impl Into<String>) -> Self {
        Switch { switch_id: switch_id.into(), table: Vec::new() }
    }

    pub fn table(&self) -> &[FlowTableEntry] {
        &self.table
    }

    /// Direct mutable access; red-team actions edit the table behind the
    /// controller's back through this.
    pub fn table_mut(&mut self) -> &mut Vec<FlowTableEntry> {
        &mut self.table
    }

    /// Appends a forwarding entry at the lowest priority.
    pub fn install_rule(&mut self, rule: FlowRule, tick: u64) {
        self.table.push(FlowTableEntry { rule, last_modified: tick, packet_count: 0 });
    }

    /// Inserts a blocking entry at the highest priority, ahead of any
    /// forwarding rule the same source may already match.
    pub fn install_block_rule(&mut self, rule: FlowRule, tick: u64) {
        self.table.insert(0, FlowTableEntry { rule, last_modified: tick, packet_count: 0 });
    }

    /// First matching entry wins and has its packet counter incremented.
    pub fn process(&mut self, pkt: &Packet) -> SwitchOutcome {
        for entry in &mut self.table {
            if entry.rule.match_fields.matches(&pkt.header) {
                entry.packet_count += 1;
                return match entry.rule.action {
                    RuleAction::Forward { port } => SwitchOutcome::Forwarded { port },
                    RuleAction::Block => SwitchOutcome::Dropped,
                };
            }
        }
        SwitchOutcome::PacketIn
    }

    /// Table contents in priority order, ages computed against `tick`.
    pub fn dump(&self, tick: u64) -> FlowTableSnapshot {
        FlowTableSnapshot {
            switch_id: self.switch_id.clone(),
            tick,
            entries: self
                .table
                .iter()
                .map(|e| SnapshotEntry {
                    rule: e.rule.clone(),
                    hard_age: tick.saturating_sub(e.last_modified),
                    packet_count: e.packet_count,
                })
                .collect(),
        }
    }
}
