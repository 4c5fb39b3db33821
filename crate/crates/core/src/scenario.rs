//! Scripted runs. A scenario is a JSON list of timed actions — traffic,
//! in-path rule tampering, and integrity audits — replayed against a live
//! simulation. Audit steps may carry an expectation; a mismatch is recorded
//! as a detection-assertion failure rather than an error, so a runner can
//! report every miss in one pass.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attack::{mitm_delete, mitm_inject, mitm_modify, PayloadPool, RuleSelector, TamperField};
use crate::dataset::ClassLabel4;
use crate::detection::{dn_audit, AuditReport};
use crate::error::{Error, Result};
use crate::sim::flow::FlowRule;
use crate::sim::simulation::{DeliveryOutcome, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "params", rename_all = "snake_case")]
pub enum ScenarioAction {
    /// Emit one packet. `src` defaults to the step's actor; the payload is
    /// drawn from the run's payload pool at the named class.
    SendPacket { src: Option<String>, dst: String, payload_class: String },
    /// Rewrite one field of an installed rule behind the controller's back.
    TamperRule {
        switch: String,
        rule: RuleSelector,
        #[serde(flatten)]
        field: TamperField,
    },
    /// Plant a rule the controller never issued.
    InjectRule { switch: String, rule: FlowRule },
    /// Remove an installed rule.
    DeleteRule { switch: String, rule: RuleSelector },
    /// Run an integrity audit; `expect` optionally lists the verdict kinds
    /// the script author requires (e.g. ["safe"] or ["modification"]).
    DnAudit { expect: Option<Vec<String>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub tick: u64,
    pub actor: String,
    #[serde(flatten)]
    pub action: ScenarioAction,
}

/// Parses and validates a scenario script: a JSON array of steps whose
/// ticks never decrease.
pub fn load_scenario(json: &str) -> Result<Vec<ScenarioStep>> {
    let steps: Vec<ScenarioStep> = serde_json::from_str(json)
        .map_err(|e| Error::Scenario(format!("invalid scenario script: {e}")))?;
    validate_steps(&steps)?;
    Ok(steps)
}

pub fn validate_steps(steps: &[ScenarioStep]) -> Result<()> {
    for pair in steps.windows(2) {
        if pair[1].tick < pair[0].tick {
            return Err(Error::Scenario(format!(
                "steps must not go back in time: tick {} follows tick {}",
                pair[1].tick, pair[0].tick
            )));
        }
    }
    Ok(())
}

/// What a replay produced: every audit report in script order, the fate of
/// every sent packet, and one line per missed audit expectation.
#[derive(Debug, Clone, Default)]
pub struct ScenarioOutcome {
    pub audits: Vec<AuditReport>,
    pub deliveries: Vec<DeliveryOutcome>,
    pub expectation_failures: Vec<String>,
}

impl ScenarioOutcome {
    pub fn expectations_met(&self) -> bool {
        self.expectation_failures.is_empty()
    }
}

/// Replays a script against a live simulation. Audit files go to `out_dir`
/// when one is given. Script errors (unknown hosts, exhausted payload pool,
/// bad class names) abort the run; missed audit expectations do not.
pub fn run_scenario(
    sim: &mut Simulation,
    steps: &[ScenarioStep],
    pool: &mut PayloadPool,
    out_dir: Option<&Path>,
) -> Result<ScenarioOutcome> {
    validate_steps(steps)?;
    let mut outcome = ScenarioOutcome::default();
    for (i, step) in steps.iter().enumerate() {
        sim.advance_to(step.tick)?;
        let step_err = |e: Error| {
            Error::Scenario(format!("step {} (tick {}): {e}", i + 1, step.tick))
        };
        match &step.action {
            ScenarioAction::SendPacket { src, dst, payload_class } => {
                let class = ClassLabel4::parse(payload_class).map_err(step_err)?;
                let payload = pool.payload(class).map_err(step_err)?;
                let src = src.as_deref().unwrap_or(&step.actor);
                let delivery = sim.send_packet(src, dst, payload).map_err(step_err)?;
                outcome.deliveries.push(delivery);
            }
            ScenarioAction::TamperRule { switch, rule, field } => {
                mitm_modify(sim, switch, *rule, field).map_err(step_err)?;
            }
            ScenarioAction::InjectRule { switch, rule } => {
                mitm_inject(sim, switch, rule.clone()).map_err(step_err)?;
            }
            ScenarioAction::DeleteRule { switch, rule } => {
                mitm_delete(sim, switch, *rule).map_err(step_err)?;
            }
            ScenarioAction::DnAudit { expect } => {
                let report = dn_audit(sim, out_dir).map_err(step_err)?;
                if let Some(expected) = expect {
                    let want: BTreeSet<&str> = expected.iter().map(String::as_str).collect();
                    let got = report.kinds();
                    if want != got {
                        outcome.expectation_failures.push(format!(
                            "step {} (tick {}): audit returned [{}], script expected [{}]",
                            i + 1,
                            step.tick,
                            got.into_iter().collect::<Vec<_>>().join(", "),
                            want.into_iter().collect::<Vec<_>>().join(", "),
                        ));
                    }
                }
                outcome.audits.push(report);
            }
        }
    }
    Ok(outcome)
}
