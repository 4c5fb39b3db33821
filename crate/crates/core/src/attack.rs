//! Scriptable adversary. Two families of action: payload attacks smuggle
//! malicious sensor readings inside structurally normal traffic, and
//! flow-rule attacks (in-path tampering between controller and switch)
//! rewrite, add, or remove switch table entries behind the controller's
//! back. Rule attacks touch only switch state — the adversary has no write
//! path to the ledger, so the chain stays valid through any tampering
//! sequence.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{regroup_label, ClassLabel4, RawRecord};
use crate::error::{Error, Result};
use crate::model_io::{ModelEnvelope, TaskLabel};
use crate::sim::flow::{FlowRule, FlowTableEntry, Payload, RuleAction};
use crate::sim::simulation::Simulation;
use crate::sim::trace::EventKind;

/// Raw feature rows bucketed by traffic class, drawn without replacement.
/// Buckets are shuffled once at construction, so two pools built from the
/// same records and seed hand out identical sequences.
#[derive(Debug, Clone)]
pub struct PayloadPool {
    buckets: BTreeMap<ClassLabel4, Vec<Vec<f64>>>,
}

impl PayloadPool {
    /// Pools every record, whether or not a classifier would catch it.
    pub fn new(records: &[RawRecord], seed: u64) -> Self {
        Self::build(records.iter().map(|r| (regroup_label(r.label8), r.features.clone())), seed)
    }

    /// Pools only records the given model labels correctly, so a scripted
    /// attack drawing from it is guaranteed to trip the classifier and a
    /// scripted normal send is guaranteed not to.
    pub fn verified(records: &[RawRecord], envelope: &ModelEnvelope, seed: u64) -> Result<Self> {
        let mut kept = Vec::new();
        for record in records {
            let class = regroup_label(record.label8);
            let predicted = envelope.predict_raw(&record.features)?;
            let truth = match envelope.task {
                TaskLabel::Binary => usize::from(class != ClassLabel4::Normal),
                TaskLabel::Multiclass => class.id(),
            };
            if predicted == truth {
                kept.push((class, record.features.clone()));
            }
        }
        Ok(Self::build(kept.into_iter(), seed))
    }

    fn build(rows: impl Iterator<Item = (ClassLabel4, Vec<f64>)>, seed: u64) -> Self {
        let mut buckets: BTreeMap<ClassLabel4, Vec<Vec<f64>>> = BTreeMap::new();
        for (class, features) in rows {
            buckets.entry(class).or_default().push(features);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for bucket in buckets.values_mut() {
            bucket.shuffle(&mut rng);
        }
        PayloadPool { buckets }
    }

    pub fn remaining(&self, class: ClassLabel4) -> usize {
        self.buckets.get(&class).map_or(0, Vec::len)
    }

    /// Takes the next feature row of the class out of the pool.
    pub fn draw(&mut self, class: ClassLabel4) -> Result<Vec<f64>> {
        self.buckets
            .get_mut(&class)
            .and_then(Vec::pop)
            .ok_or_else(|| Error::data(format!("payload pool has no {class} rows left")))
    }

    /// Like [`draw`](Self::draw), wrapped as a packet payload.
    pub fn payload(&mut self, class: ClassLabel4) -> Result<Payload> {
        Ok(Payload::Reading(self.draw(class)?))
    }
}

/// Builds an attack payload: a real held-out reading of the requested
/// malicious class, in raw feature form as it would travel on the wire.
pub fn craft_malicious_payload(pool: &mut PayloadPool, class: ClassLabel4) -> Result<Payload> {
    if class == ClassLabel4::Normal {
        return Err(Error::data("a payload attack needs a malicious class, not Normal"));
    }
    pool.payload(class)
}

/// How a tampering action picks its victim entry in a switch table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSelector {
    RuleId(u64),
    Position(usize),
}

/// Which rule field an in-path rewrite targets, with its forged value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum TamperField {
    OutPort { port: u32 },
    MatchSrc { src: String },
    MatchDst { dst: String },
    MatchDstPort { dst_port: u16 },
    Action { action: RuleAction },
}

fn entry_index(table: &[FlowTableEntry], selector: RuleSelector) -> Result<usize> {
    match selector {
        RuleSelector::RuleId(id) => table
            .iter()
            .position(|e| e.rule.rule_id == id)
            .ok_or_else(|| Error::data(format!("no table entry with rule id {id}"))),
        RuleSelector::Position(pos) => {
            if pos < table.len() {
                Ok(pos)
            } else {
                Err(Error::data(format!(
                    "table position {pos} out of range for {} entries",
                    table.len()
                )))
            }
        }
    }
}

/// Rewrites one field of an installed rule in place. The entry's
/// modification time moves to the current tick — the rewrite is fresh even
/// though the rule id says it was issued long ago. Returns the victim's
/// rule id.
pub fn mitm_modify(
    sim: &mut Simulation,
    switch_id: &str,
    selector: RuleSelector,
    field: &TamperField,
) -> Result<u64> {
    let tick = sim.current_tick();
    let table = sim.switch_mut(switch_id)?.table_mut();
    let index = entry_index(table, selector)?;
    let entry = &mut table[index];
    match field {
        TamperField::OutPort { port } => entry.rule.action = RuleAction::Forward { port: *port },
        TamperField::MatchSrc { src } => entry.rule.match_fields.src = Some(src.clone()),
        TamperField::MatchDst { dst } => entry.rule.match_fields.dst = Some(dst.clone()),
        TamperField::MatchDstPort { dst_port } => {
            entry.rule.match_fields.dst_port = Some(*dst_port)
        }
        TamperField::Action { action } => entry.rule.action = *action,
    }
    entry.last_modified = tick;
    let rule_id = entry.rule.rule_id;
    sim.record_event(EventKind::Tamper {
        switch: switch_id.to_string(),
        kind: "modify".to_string(),
        rule_id: Some(rule_id),
    });
    Ok(rule_id)
}

/// Plants a rule the controller never issued at the end of a switch table.
pub fn mitm_inject(sim: &mut Simulation, switch_id: &str, rule: FlowRule) -> Result<()> {
    let tick = sim.current_tick();
    let rule_id = rule.rule_id;
    let table = sim.switch_mut(switch_id)?.table_mut();
    table.push(FlowTableEntry { rule, last_modified: tick, packet_count: 0 });
    sim.record_event(EventKind::Tamper {
        switch: switch_id.to_string(),
        kind: "inject".to_string(),
        rule_id: Some(rule_id),
    });
    Ok(())
}

/// Removes an installed rule from a switch table. Returns the removed
/// entry's rule id.
pub fn mitm_delete(
    sim: &mut Simulation,
    switch_id: &str,
    selector: RuleSelector,
) -> Result<u64> {
    let table = sim.switch_mut(switch_id)?.table_mut();
    let index = entry_index(table, selector)?;
    let removed = table.remove(index);
    sim.record_event(EventKind::Tamper {
        switch: switch_id.to_string(),
        kind: "delete".to_string(),
        rule_id: Some(removed.rule.rule_id),
    });
    Ok(removed.rule.rule_id)
}
