//! Simulation event log: every observable action gets one line, totally
//! ordered by (tick, sequence). Persisted as JSON-lines with a version
//! field on each line so the format can evolve.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "details", rename_all = "snake_case")]
pub enum EventKind {
    PacketSent { src: String, dst: String },
    PacketIn { switch: String, src: String, dst: String },
    IdsVerdict { src: String, value: u8, class: Option<String> },
    RuleInstall { switch: String, rule_id: u64 },
    LedgerAppend { block_index: u64, record_count: usize },
    BlockInstall { switch: String, host: String, rule_id: u64 },
    PacketDelivered { src: String, dst: String, to: String },
    PacketDropped { switch: String, src: String },
    Tamper { switch: String, kind: String, rule_id: Option<u64> },
    AuditRun { findings: usize },
    Alert { kind: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub v: u32,
    pub tick: u64,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Trace::default()
    }

    pub fn push(&mut self, tick: u64, seq: u64, kind: EventKind) {
        self.events.push(TraceEvent { v: TRACE_SCHEMA_VERSION, tick, seq, kind });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jsonl()?)?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path) -> Result<Trace> {
        let text = fs::read_to_string(path)?;
        let mut events = Vec::new();
        for (number, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: TraceEvent = serde_json::from_str(line)
                .map_err(|e| Error::parse(number + 1, format!("unreadable event: {e}")))?;
            events.push(event);
        }
        Ok(Trace { events })
    }
}
