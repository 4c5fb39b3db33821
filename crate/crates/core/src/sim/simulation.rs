//! The event loop tying the pieces together: switches punt unmatched
//! packets to the controller, the controller asks the payload classifier
//! for a verdict, and every forwarding decision is recorded on the ledger
//! in the same tick it reaches the switches — the ledger write comes
//! first, so a failed write installs nothing.

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::ClassLabel4;
use crate::error::{Error, Result};
use crate::ledger::{Chain, FlowRuleRecord, NodeRole};
use crate::model_io::{ModelEnvelope, TaskLabel};
use crate::sim::flow::{
    FlowRule, FlowTableSnapshot, Packet, PacketHeader, Payload, Protocol, RuleAction, RuleMatch,
};
use crate::sim::switch::{Switch, SwitchOutcome};
use crate::sim::topology::{build_topology, Topology, TopologySpec};
use crate::sim::trace::{EventKind, Trace};

/// Destination port SCADA readings are addressed to.
pub const SCADA_PORT: u16 = 502;
const EPHEMERAL_SRC_PORT: u16 = 49152;
const MAX_HOPS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered { to: String },
    Dropped { at: String },
}

/// Classifier verdict on a packet payload: 1 flags an attack, 0 clears it.
/// Readings the model cannot process and opaque byte blobs are hostile by
/// default. The second value is the predicted class index when one exists.
pub fn ids_classify(envelope: &ModelEnvelope, payload: &Payload) -> (u8, Option<usize>) {
    match payload {
        Payload::Reading(raw) => match envelope.predict_raw(raw) {
            Ok(label) => (u8::from(label != 0), Some(label)),
            Err(_) => (1, None),
        },
        Payload::Opaque(_) => (1, None),
    }
}

fn class_name(task: TaskLabel, label: usize) -> String {
    match task {
        TaskLabel::Binary => {
            if label == 0 { "Normal".to_string() } else { "Attack".to_string() }
        }
        TaskLabel::Multiclass => ClassLabel4::from_id(label)
            .map(|c| c.name().to_string())
            .unwrap_or_else(|_| format!("class-{label}")),
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    topology: Topology,
    switches: BTreeMap<String, Switch>,
    chain: Chain,
    ids: Option<ModelEnvelope>,
    blocklist: BTreeSet<String>,
    tick: u64,
    seq: u64,
    next_rule_id: u64,
    trace: Trace,
}

impl Simulation {
    pub fn new(spec: &TopologySpec) -> Result<Self> {
        let topology = build_topology(spec)?;
        let switches = topology
            .switch_ids()
            .into_iter()
            .map(|id| (id.clone(), Switch::new(id)))
            .collect();
        Ok(Simulation {
            topology,
            switches,
            chain: Chain::new(),
            ids: None,
            blocklist: BTreeSet::new(),
            tick: 0,
            seq: 0,
            next_rule_id: 1,
            trace: Trace::new(),
        })
    }

    pub fn set_ids(&mut self, envelope: ModelEnvelope) {
        self.ids = Some(envelope);
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn blocklist(&self) -> &BTreeSet<String> {
        &self.blocklist
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn current_tick(&self) -> u64 {
        self.tick
    }

    /// Time only moves forward.
    pub fn advance_to(&mut self, tick: u64) -> Result<()> {
        if tick < self.tick {
            return Err(Error::Scenario(format!(
                "tick {tick} is before the current tick {}",
                self.tick
            )));
        }
        self.tick = tick;
        Ok(())
    }

    pub fn switch(&self, id: &str) -> Result<&Switch> {
        self.switches
            .get(id)
            .ok_or_else(|| Error::Topology(format!("no switch named {id:?}")))
    }

    pub fn switch_mut(&mut self, id: &str) -> Result<&mut Switch> {
        self.switches
            .get_mut(id)
            .ok_or_else(|| Error::Topology(format!("no switch named {id:?}")))
    }

    pub fn record_event(&mut self, kind: EventKind) {
        self.trace.push(self.tick, self.seq, kind);
        self.seq += 1;
    }

    pub fn dump_flow_table(&self, switch_id: &str) -> Result<FlowTableSnapshot> {
        Ok(self.switch(switch_id)?.dump(self.tick))
    }

    /// Snapshot of every switch, keyed by id, all taken at the current tick.
    pub fn all_snapshots(&self) -> BTreeMap<String, FlowTableSnapshot> {
        self.switches.iter().map(|(id, sw)| (id.clone(), sw.dump(self.tick))).collect()
    }

    /// Injects one packet at the source host's ingress switch and walks it
    /// through the network until it is delivered or dropped.
    pub fn send_packet(&mut self, src: &str, dst: &str, payload: Payload) -> Result<DeliveryOutcome> {
        if !self.topology.is_host(src) || !self.topology.is_host(dst) {
            return Err(Error::Topology(format!(
                "packets travel host to host, got {src:?} -> {dst:?}"
            )));
        }
        if src == dst {
            return Err(Error::Topology(format!("{src:?} cannot send to itself")));
        }
        self.record_event(EventKind::PacketSent { src: src.into(), dst: dst.into() });
        let pkt = Packet {
            header: PacketHeader {
                src: src.to_string(),
                dst: dst.to_string(),
                src_port: EPHEMERAL_SRC_PORT,
                dst_port: SCADA_PORT,
                proto: Protocol::Tcp,
            },
            payload,
        };
        let mut current = self.topology.ingress_switch(src)?.to_string();
        let mut punted: BTreeSet<String> = BTreeSet::new();
        for _ in 0..MAX_HOPS {
            let outcome = self.switch_mut(&current)?.process(&pkt);
            match outcome {
                SwitchOutcome::Forwarded { port } => {
                    let next = self
                        .topology
                        .neighbor_on(&current, port)
                        .ok_or_else(|| {
                            Error::Topology(format!("switch {current:?} has no port {port}"))
                        })?
                        .to_string();
                    if self.topology.is_host(&next) {
                        self.record_event(EventKind::PacketDelivered {
                            src: src.into(),
                            dst: dst.into(),
                            to: next.clone(),
                        });
                        return Ok(DeliveryOutcome::Delivered { to: next });
                    }
                    current = next;
                }
                SwitchOutcome::Dropped => {
                    self.record_event(EventKind::PacketDropped {
                        switch: current.clone(),
                        src: src.into(),
                    });
                    return Ok(DeliveryOutcome::Dropped { at: current });
                }
                SwitchOutcome::PacketIn => {
                    if !punted.insert(current.clone()) {
                        return Err(Error::Data(format!(
                            "switch {current:?} punted the same packet twice"
                        )));
                    }
                    self.record_event(EventKind::PacketIn {
                        switch: current.clone(),
                        src: src.into(),
                        dst: dst.into(),
                    });
                    self.handle_packet_in(&current, &pkt)?;
                }
            }
        }
        Err(Error::Topology("forwarding loop: packet exceeded the hop limit".into()))
    }

    /// Controller decision for a punted packet: consult the classifier,
    /// then either quarantine the source or set up the forwarding path.
    fn handle_packet_in(&mut self, at_switch: &str, pkt: &Packet) -> Result<()> {
        let src = pkt.header.src.clone();
        if self.blocklist.contains(&src) {
            self.install_block(at_switch, &src);
            return Ok(());
        }
        let envelope = self
            .ids
            .as_ref()
            .ok_or_else(|| Error::Model("no classifier loaded into the controller".into()))?;
        let (verdict, label) = ids_classify(envelope, &pkt.payload);
        let class = label.map(|l| class_name(envelope.task, l));
        self.record_event(EventKind::IdsVerdict { src: src.clone(), value: verdict, class });
        if verdict == 1 {
            self.install_block(at_switch, &src);
        } else {
            self.install_path_rules(pkt)?;
        }
        Ok(())
    }

    /// Quarantines a host: a top-priority block entry on the switch that
    /// saw the packet. Block rules are a local defensive action and are
    /// deliberately kept off the ledger.
    fn install_block(&mut self, at_switch: &str, host: &str) {
        let rule_id = self.take_rule_id();
        let rule = FlowRule {
            rule_id,
            match_fields: RuleMatch { src: Some(host.to_string()), ..RuleMatch::default() },
            action: RuleAction::Block,
            issued_at: self.tick,
        };
        let tick = self.tick;
        self.switches
            .get_mut(at_switch)
            .expect("block target switch exists")
            .install_block_rule(rule, tick);
        self.blocklist.insert(host.to_string());
        self.record_event(EventKind::BlockInstall {
            switch: at_switch.to_string(),
            host: host.to_string(),
            rule_id,
        });
    }

    /// Installs forwarding entries on every switch along the route and
    /// records the identical rules on the ledger first; if the ledger
    /// write fails nothing is installed.
    fn install_path_rules(&mut self, pkt: &Packet) -> Result<()> {
        let route = self.topology.path(&pkt.header.src, &pkt.header.dst)?;
        let match_fields = RuleMatch {
            src: Some(pkt.header.src.clone()),
            dst: Some(pkt.header.dst.clone()),
            proto: Some(pkt.header.proto),
            dst_port: Some(pkt.header.dst_port),
        };
        let mut pending: Vec<(String, FlowRule)> = Vec::new();
        for hop in route.windows(2) {
            let (node, next) = (&hop[0], &hop[1]);
            if !self.topology.is_switch(node) {
                continue;
            }
            let port = self.topology.port_to(node, next).ok_or_else(|| {
                Error::Topology(format!("switch {node:?} has no port toward {next:?}"))
            })?;
            let action = RuleAction::Forward { port };
            let already = self
                .switch(node)?
                .table()
                .iter()
                .any(|e| e.rule.match_fields == match_fields && e.rule.action == action);
            if already {
                continue;
            }
            let rule_id = self.take_rule_id();
            pending.push((
                node.clone(),
                FlowRule { rule_id, match_fields: match_fields.clone(), action, issued_at: self.tick },
            ));
        }
        if pending.is_empty() {
            return Ok(());
        }
        let records: Vec<FlowRuleRecord> =
            pending.iter().map(|(sw, rule)| FlowRuleRecord::from_rule(sw, rule)).collect();
        let record_count = records.len();
        let block_index = self.chain.append_block(records, self.tick, NodeRole::Generator)?.index;
        self.record_event(EventKind::LedgerAppend { block_index, record_count });
        let tick = self.tick;
        for (sw, rule) in pending {
            let rule_id = rule.rule_id;
            self.switches.get_mut(&sw).expect("path switch exists").install_rule(rule, tick);
            self.record_event(EventKind::RuleInstall { switch: sw, rule_id });
        }
        Ok(())
    }

    fn take_rule_id(&mut self) -> u64 {
        let id = self.next_rule_id;
        self.next_rule_id += 1;
        id
    }
}
