//! Read-only integrity auditor. It pulls two views of the network — the
//! forwarding rules recorded on the chain and the tables the switches
//! actually hold — and classifies any divergence per switch: a row-count
//! mismatch means rules were injected or deleted in transit, equal counts
//! with differing content means an installed rule was rewritten.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{ChainStatus, FlowRuleRecord};
use crate::sim::flow::{FlowTableSnapshot, RuleAction};
use crate::sim::simulation::Simulation;
use crate::sim::trace::EventKind;

pub const AUDIT_FILE_VERSION: u32 = 1;
/// File A: the forwarding rules read off the chain.
pub const LEDGER_RULES_FILE: &str = "ledger_rules.jsonl";
/// File B: the flow-table dumps collected from the switches.
pub const SWITCH_DUMPS_FILE: &str = "switch_dumps.jsonl";
/// Append-only audit outcome log.
pub const ALERTS_FILE: &str = "alerts.jsonl";

/// Everything one audit looks at, all collected at the same tick.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditInput {
    pub tick: u64,
    pub ledger_rules: Vec<FlowRuleRecord>,
    pub snapshots: BTreeMap<String, FlowTableSnapshot>,
    pub chain_status: ChainStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrityVerdict {
    Safe,
    /// Row counts disagree: rules were injected into or deleted from the
    /// switch behind the controller's back.
    MitmInjection { switch_id: String, expected_rows: usize, observed_rows: usize },
    /// Counts agree but a rule's content was rewritten in place.
    Modification { switch_id: String, rule_id: u64, field_diffs: Vec<String> },
}

impl IntegrityVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            IntegrityVerdict::Safe => "safe",
            IntegrityVerdict::MitmInjection { .. } => "mitm_injection",
            IntegrityVerdict::Modification { .. } => "modification",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            IntegrityVerdict::Safe => "all switch tables match the ledger".to_string(),
            IntegrityVerdict::MitmInjection { switch_id, expected_rows, observed_rows } => {
                format!(
                    "switch {switch_id}: ledger records {expected_rows} forwarding rules but \
                     the table holds {observed_rows}"
                )
            }
            IntegrityVerdict::Modification { switch_id, rule_id, field_diffs } => format!(
                "switch {switch_id}: rule {rule_id} differs from the ledger on {}",
                field_diffs.join(", ")
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub tick: u64,
    /// `[Safe]` exactly when no per-switch finding exists.
    pub verdicts: Vec<IntegrityVerdict>,
    pub evidence: Vec<String>,
}

impl AuditReport {
    pub fn is_safe(&self) -> bool {
        self.verdicts == [IntegrityVerdict::Safe]
    }

    pub fn kinds(&self) -> BTreeSet<&'static str> {
        self.verdicts.iter().map(|v| v.kind()).collect()
    }
}

/// Pure comparison of the two views. Block entries are a controller-local
/// defense and are excluded from both sides before comparing. Refuses to
/// work from a broken chain.
pub fn audit(input: &AuditInput) -> Result<AuditReport> {
    if let ChainStatus::Broken(at) = input.chain_status {
        return Err(Error::BrokenChain(at));
    }
    let mut expected_by_switch: BTreeMap<&str, Vec<&FlowRuleRecord>> = BTreeMap::new();
    for record in &input.ledger_rules {
        if record.action == RuleAction::Block {
            continue;
        }
        expected_by_switch.entry(record.switch_id.as_str()).or_default().push(record);
    }

    let mut switch_ids: BTreeSet<&str> = input.snapshots.keys().map(String::as_str).collect();
    switch_ids.extend(expected_by_switch.keys());

    let mut verdicts = Vec::new();
    let mut evidence = Vec::new();
    for switch_id in switch_ids {
        let expected = expected_by_switch.get(switch_id).cloned().unwrap_or_default();
        let empty = FlowTableSnapshot {
            switch_id: switch_id.to_string(),
            tick: input.tick,
            entries: Vec::new(),
        };
        let snapshot = input.snapshots.get(switch_id).unwrap_or(&empty);
        let observed: Vec<_> = snapshot
            .entries
            .iter()
            .filter(|e| e.rule.action != RuleAction::Block)
            .collect();

        if expected.len() != observed.len() {
            verdicts.push(IntegrityVerdict::MitmInjection {
                switch_id: switch_id.to_string(),
                expected_rows: expected.len(),
                observed_rows: observed.len(),
            });
            continue;
        }

        let expected_by_id: BTreeMap<u64, &FlowRuleRecord> =
            expected.iter().map(|r| (r.rule_id, *r)).collect();
        for entry in observed {
            let as_record = FlowRuleRecord::from_rule(switch_id, &entry.rule);
            match expected_by_id.get(&entry.rule.rule_id) {
                Some(ledger_record) => {
                    let implied_age = input.tick.saturating_sub(ledger_record.issued_at);
                    if entry.hard_age < implied_age {
                        evidence.push(format!(
                            "switch {switch_id}: rule {} was touched {} ticks ago but was \
                             issued {} ticks ago — rewritten after installation",
                            entry.rule.rule_id, entry.hard_age, implied_age
                        ));
                    }
                    let field_diffs = ledger_record.differing_fields(&as_record);
                    if !field_diffs.is_empty() {
                        verdicts.push(IntegrityVerdict::Modification {
                            switch_id: switch_id.to_string(),
                            rule_id: entry.rule.rule_id,
                            field_diffs,
                        });
                    }
                }
                None => {
                    // Equal counts but an id the ledger never issued: some
                    // recorded rule was replaced wholesale.
                    verdicts.push(IntegrityVerdict::Modification {
                        switch_id: switch_id.to_string(),
                        rule_id: entry.rule.rule_id,
                        field_diffs: vec!["rule_id".to_string()],
                    });
                }
            }
        }
    }

    if verdicts.is_empty() {
        verdicts.push(IntegrityVerdict::Safe);
    }
    Ok(AuditReport { tick: input.tick, verdicts, evidence })
}

/// Gathers both views from the running network at the current tick.
pub fn collect(sim: &Simulation) -> Result<AuditInput> {
    let chain_status = sim.chain().validate_chain();
    let ledger_rules = match chain_status {
        ChainStatus::Valid => sim.chain().read_rules(0)?,
        ChainStatus::Broken(_) => Vec::new(),
    };
    Ok(AuditInput {
        tick: sim.current_tick(),
        ledger_rules,
        snapshots: sim.all_snapshots(),
        chain_status,
    })
}

#[derive(Debug, Serialize)]
struct LedgerRuleLine<'a> {
    v: u32,
    audit_tick: u64,
    record: &'a FlowRuleRecord,
}

#[derive(Debug, Serialize)]
struct SwitchDumpLine<'a> {
    v: u32,
    audit_tick: u64,
    snapshot: &'a FlowTableSnapshot,
}

#[derive(Debug, Serialize)]
struct AlertLine<'a> {
    v: u32,
    tick: u64,
    verdict: &'a IntegrityVerdict,
}

/// Writes the auditor's two working files, overwriting previous contents:
/// file A holds the ledger-recorded rules, file B the switch dumps.
pub fn persist_audit_files(input: &AuditInput, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let mut file_a = String::new();
    for record in &input.ledger_rules {
        let line = LedgerRuleLine { v: AUDIT_FILE_VERSION, audit_tick: input.tick, record };
        file_a.push_str(&serde_json::to_string(&line)?);
        file_a.push('\n');
    }
    let a_path = dir.join(LEDGER_RULES_FILE);
    fs::write(&a_path, file_a)?;

    let mut file_b = String::new();
    for snapshot in input.snapshots.values() {
        let line = SwitchDumpLine { v: AUDIT_FILE_VERSION, audit_tick: input.tick, snapshot };
        file_b.push_str(&serde_json::to_string(&line)?);
        file_b.push('\n');
    }
    let b_path = dir.join(SWITCH_DUMPS_FILE);
    fs::write(&b_path, file_b)?;
    Ok((a_path, b_path))
}

/// Appends every verdict of a report to the alerts log.
pub fn append_alerts(report: &AuditReport, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(ALERTS_FILE);
    let mut lines = String::new();
    for verdict in &report.verdicts {
        let line = AlertLine { v: AUDIT_FILE_VERSION, tick: report.tick, verdict };
        lines.push_str(&serde_json::to_string(&line)?);
        lines.push('\n');
    }
    let existing = fs::read_to_string(&path).unwrap_or_default();
    fs::write(&path, existing + &lines)?;
    Ok(path)
}

/// Pushes the audit outcome into the simulation trace: one summary event,
/// then one alert per verdict — safe runs get an explicit all-clear.
pub fn alert_controller(sim: &mut Simulation, report: &AuditReport) {
    let findings =
        report.verdicts.iter().filter(|v| !matches!(v, IntegrityVerdict::Safe)).count();
    sim.record_event(EventKind::AuditRun { findings });
    for verdict in &report.verdicts {
        sim.record_event(EventKind::Alert {
            kind: verdict.kind().to_string(),
            detail: verdict.describe(),
        });
    }
}

/// Full audit pass against a live simulation: collect both views, persist
/// them when a directory is given, compare, and surface the outcome on the
/// trace and the alerts log.
pub fn dn_audit(sim: &mut Simulation, out_dir: Option<&Path>) -> Result<AuditReport> {
    let input = collect(sim)?;
    if let Some(dir) = out_dir {
        persist_audit_files(&input, dir)?;
    }
    let report = audit(&input)?;
    alert_controller(sim, &report);
    if let Some(dir) = out_dir {
        append_alerts(&report, dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::flow::{FlowRule, Protocol, RuleMatch, SnapshotEntry};
    use crate::sim::testutil::{normal_payload, sim_with_ids};

    fn rule(id: u64, port: u32, issued_at: u64) -> FlowRule {
        FlowRule {
            rule_id: id,
            match_fields: RuleMatch {
                src: Some("client".into()),
                dst: Some("server".into()),
                proto: Some(Protocol::Tcp),
                dst_port: Some(502),
            },
            action: RuleAction::Forward { port },
            issued_at,
        }
    }

    fn input_with(
        tick: u64,
        records: Vec<FlowRuleRecord>,
        entries: Vec<SnapshotEntry>,
    ) -> AuditInput {
        let snapshot = FlowTableSnapshot { switch_id: "s1".into(), tick, entries };
        AuditInput {
            tick,
            ledger_rules: records,
            snapshots: BTreeMap::from([("s1".to_string(), snapshot)]),
            chain_status: ChainStatus::Valid,
        }
    }

    fn entry(rule: FlowRule, hard_age: u64) -> SnapshotEntry {
        SnapshotEntry { rule, hard_age, packet_count: 0 }
    }

    #[test]
    fn matching_views_are_safe() {
        let r = rule(1, 3, 2);
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &r)],
            vec![entry(r, 8)],
        );
        let report = audit(&input).unwrap();
        assert!(report.is_safe());
        assert!(report.evidence.is_empty());
    }

    #[test]
    fn extra_row_is_flagged_as_injection() {
        let r = rule(1, 3, 2);
        let rogue = rule(999, 1, 2);
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &r)],
            vec![entry(r, 8), entry(rogue, 0)],
        );
        let report = audit(&input).unwrap();
        assert_eq!(report.verdicts, vec![IntegrityVerdict::MitmInjection {
            switch_id: "s1".into(),
            expected_rows: 1,
            observed_rows: 2,
        }]);
    }

    #[test]
    fn missing_row_is_flagged_as_injection_too() {
        let r1 = rule(1, 3, 2);
        let r2 = rule(2, 2, 2);
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &r1), FlowRuleRecord::from_rule("s1", &r2)],
            vec![entry(r1, 8)],
        );
        let report = audit(&input).unwrap();
        assert_eq!(report.verdicts, vec![IntegrityVerdict::MitmInjection {
            switch_id: "s1".into(),
            expected_rows: 2,
            observed_rows: 1,
        }]);
    }

    #[test]
    fn rewritten_rule_is_a_modification_with_age_evidence() {
        let issued = rule(1, 2, 2);
        let mut tampered = issued.clone();
        tampered.action = RuleAction::Forward { port: 3 };
        // Tampered at tick 8, audited at tick 10: hard_age 2 < implied 8.
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &issued)],
            vec![entry(tampered, 2)],
        );
        let report = audit(&input).unwrap();
        assert_eq!(report.verdicts, vec![IntegrityVerdict::Modification {
            switch_id: "s1".into(),
            rule_id: 1,
            field_diffs: vec!["action".into()],
        }]);
        assert_eq!(report.evidence.len(), 1);
        assert!(report.evidence[0].contains("rewritten after installation"));
    }

    #[test]
    fn swapped_rule_id_counts_as_modification() {
        let issued = rule(1, 2, 2);
        let mut replacement = issued.clone();
        replacement.rule_id = 77;
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &issued)],
            vec![entry(replacement, 0)],
        );
        let report = audit(&input).unwrap();
        assert_eq!(report.verdicts, vec![IntegrityVerdict::Modification {
            switch_id: "s1".into(),
            rule_id: 77,
            field_diffs: vec!["rule_id".into()],
        }]);
    }

    #[test]
    fn block_entries_are_invisible_to_the_audit() {
        let forward = rule(1, 3, 2);
        let block = FlowRule {
            rule_id: 5,
            match_fields: RuleMatch { src: Some("attacker".into()), ..RuleMatch::default() },
            action: RuleAction::Block,
            issued_at: 4,
        };
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &forward)],
            vec![entry(block, 6), entry(forward, 8)],
        );
        let report = audit(&input).unwrap();
        assert!(report.is_safe());
    }

    #[test]
    fn broken_chain_refuses_to_audit() {
        let input = AuditInput {
            tick: 5,
            ledger_rules: Vec::new(),
            snapshots: BTreeMap::new(),
            chain_status: ChainStatus::Broken(2),
        };
        let err = audit(&input).unwrap_err();
        assert!(matches!(err, Error::BrokenChain(2)));
    }

    #[test]
    fn audit_is_a_pure_function_of_its_input() {
        let r = rule(1, 3, 2);
        let mut tampered = r.clone();
        tampered.match_fields.dst = Some("attacker".into());
        let input = input_with(
            10,
            vec![FlowRuleRecord::from_rule("s1", &r)],
            vec![entry(tampered, 0)],
        );
        assert_eq!(audit(&input).unwrap(), audit(&input).unwrap());
    }

    #[test]
    fn empty_network_is_safe() {
        let input = AuditInput {
            tick: 0,
            ledger_rules: Vec::new(),
            snapshots: BTreeMap::new(),
            chain_status: ChainStatus::Valid,
        };
        assert!(audit(&input).unwrap().is_safe());
    }

    #[test]
    fn live_collect_audit_cycle_is_safe_then_catches_tampering() {
        let mut sim = sim_with_ids();
        sim.advance_to(1).unwrap();
        sim.send_packet("client", "server", normal_payload()).unwrap();
        sim.advance_to(2).unwrap();
        let report = dn_audit(&mut sim, None).unwrap();
        assert!(report.is_safe());
        // Rewrite s2's forwarding port behind the controller's back.
        sim.advance_to(3).unwrap();
        let entry = &mut sim.switch_mut("s2").unwrap().table_mut()[0];
        entry.rule.action = RuleAction::Forward { port: 1 };
        entry.last_modified = 3;
        let report = dn_audit(&mut sim, None).unwrap();
        assert_eq!(report.kinds().into_iter().collect::<Vec<_>>(), vec!["modification"]);
        // The trace carries the audit outcome.
        let alerts: Vec<_> = sim
            .trace()
            .events()
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Alert { kind, .. } => Some(kind.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(alerts, vec!["safe", "modification"]);
    }

    #[test]
    fn collect_twice_without_changes_is_identical_and_files_match() {
        let mut sim = sim_with_ids();
        sim.advance_to(1).unwrap();
        sim.send_packet("client", "server", normal_payload()).unwrap();
        sim.advance_to(2).unwrap();
        let first = collect(&sim).unwrap();
        let second = collect(&sim).unwrap();
        assert_eq!(first, second);

        let dir = tempfile::tempdir().unwrap();
        persist_audit_files(&first, dir.path()).unwrap();
        let a1 = std::fs::read_to_string(dir.path().join(LEDGER_RULES_FILE)).unwrap();
        let b1 = std::fs::read_to_string(dir.path().join(SWITCH_DUMPS_FILE)).unwrap();
        persist_audit_files(&second, dir.path()).unwrap();
        let a2 = std::fs::read_to_string(dir.path().join(LEDGER_RULES_FILE)).unwrap();
        let b2 = std::fs::read_to_string(dir.path().join(SWITCH_DUMPS_FILE)).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_eq!(a1.lines().count(), 2, "one line per ledger rule");
        assert_eq!(b1.lines().count(), 2, "one line per switch");

        let report = audit(&first).unwrap();
        append_alerts(&report, dir.path()).unwrap();
        append_alerts(&report, dir.path()).unwrap();
        let alerts = std::fs::read_to_string(dir.path().join(ALERTS_FILE)).unwrap();
        assert_eq!(alerts.lines().count(), 2, "alerts accumulate");
    }
}
