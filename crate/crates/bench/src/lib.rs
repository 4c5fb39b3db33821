//! Shared fixtures for the pipeline benchmarks: a synthetic prepared corpus,
//! a ready-to-run network, a populated ledger, and a matched audit input.

use std::collections::BTreeMap;

use flowsentry_core::dataset::{prepare, synthesize_dataset, PreparedData, SynthConfig, DEFAULT_RATIOS};
use flowsentry_core::detection::AuditInput;
use flowsentry_core::ledger::{Chain, ChainStatus, FlowRuleRecord, NodeRole};
use flowsentry_core::nn::{CnnModel, ModelConfig};
use flowsentry_core::sim::{
    FlowRule, FlowTableSnapshot, Protocol, RuleAction, RuleMatch, SnapshotEntry, SCADA_PORT,
};

/// A deterministic synthetic corpus at the usual class mix, already split
/// and normalized.
pub fn prepared_corpus() -> PreparedData {
    let records = synthesize_dataset(&SynthConfig::grouped(60, 60, 30, 30), 41).unwrap();
    prepare(&records, DEFAULT_RATIOS, 41).unwrap()
}

/// The compact training configuration used across tests: narrow enough to
/// converge in seconds, wide enough to exercise every layer.
pub fn compact_config(epochs: usize) -> ModelConfig {
    ModelConfig {
        conv1_filters: 8,
        conv2_filters: 8,
        fc1_units: 16,
        epochs,
        batch_size: 16,
        ..ModelConfig::default_binary(41)
    }
}

/// A freshly initialized full-width detector for forward-pass timing.
pub fn full_width_model(input_len: usize) -> CnnModel {
    CnnModel::init(ModelConfig::default_binary(41), input_len).unwrap()
}

fn rule(n: u64) -> FlowRule {
    FlowRule {
        rule_id: n,
        match_fields: RuleMatch {
            src: Some(format!("host-{}", n % 7)),
            dst: Some("server".to_string()),
            proto: Some(Protocol::Tcp),
            dst_port: Some(SCADA_PORT),
        },
        action: RuleAction::Forward { port: (n % 3 + 1) as u32 },
        issued_at: n,
    }
}

/// A valid chain of `blocks` blocks (a genesis plus `blocks - 1` appends of
/// two records each).
pub fn chain_with(blocks: usize) -> Chain {
    let mut chain = Chain::new();
    let mut n = 0u64;
    for tick in 1..blocks as u64 {
        let records: Vec<FlowRuleRecord> = (0..2)
            .map(|_| {
                n += 1;
                let switch = if n % 2 == 0 { "s1" } else { "s2" };
                FlowRuleRecord::from_rule(switch, &rule(n))
            })
            .collect();
        chain.append_block(records, tick, NodeRole::Generator).unwrap();
    }
    chain
}

/// An audit input whose switch dumps agree with the ledger exactly:
/// two switches holding `rules_per_switch` entries each.
pub fn matched_audit_input(rules_per_switch: usize) -> AuditInput {
    let tick = 10_000u64;
    let mut ledger_rules = Vec::new();
    let mut snapshots = BTreeMap::new();
    for switch in ["s1", "s2"] {
        let mut entries = Vec::new();
        for i in 0..rules_per_switch as u64 {
            let n = i + if switch == "s1" { 0 } else { rules_per_switch as u64 };
            let r = rule(n);
            ledger_rules.push(FlowRuleRecord::from_rule(switch, &r));
            entries.push(SnapshotEntry {
                hard_age: tick - r.issued_at,
                packet_count: i,
                rule: r,
            });
        }
        snapshots.insert(
            switch.to_string(),
            FlowTableSnapshot { switch_id: switch.to_string(), tick, entries },
        );
    }
    AuditInput { tick, ledger_rules, snapshots, chain_status: ChainStatus::Valid }
}
