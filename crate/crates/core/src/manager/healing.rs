use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::adaptation::{AdaptationSession, MonitorReport, StepRecord};
use crate::kernel::Model;
use crate::metamodels::LifecycleState;

use super::fixture::webshop_container;
use super::scenario::{check, rng, stimulate, Action, Stimulus};
use super::ManagerError;

/// When to act on monitored failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealingPolicy {
    /// Failures on one provided interface, over all exception types, that
    /// trigger a replacement. At least 1.
    pub failure_threshold: u64,
}

impl Default for HealingPolicy {
    fn default() -> Self {
        HealingPolicy {
            failure_threshold: 3,
        }
    }
}

impl HealingPolicy {
    pub fn new(failure_threshold: u64) -> Result<Self, ManagerError> {
        if failure_threshold == 0 {
            return Err(ManagerError::InvalidPolicy(
                "failure threshold must be at least 1".into(),
            ));
        }
        Ok(HealingPolicy { failure_threshold })
    }
}

/// A provided interface whose failures reached the threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symptom {
    pub interface: String,
    pub interface_type: String,
    pub component: String,
    pub component_type: String,
    pub failures: u64,
}

/// A replacement decided for a symptom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub faulty: String,
    pub faulty_type: String,
    pub replacement_type: String,
}

/// A manager that replaces components whose provided interfaces keep
/// failing. It reads the target model and acts only through session
/// operators.
#[derive(Debug, Clone, Default)]
pub struct SelfHealingManager {
    policy: HealingPolicy,
    handled: BTreeSet<String>,
}

fn text(target: &Model, uid: &str, attr: &str) -> String {
    target.text(uid, attr).unwrap_or_default().to_string()
}

fn type_name_of(target: &Model, interface: &str) -> String {
    target
        .slot(interface, "type")
        .first()
        .map(|t| text(target, t, "name"))
        .unwrap_or_default()
}

impl SelfHealingManager {
    pub fn new(policy: HealingPolicy) -> Self {
        SelfHealingManager {
            policy,
            handled: BTreeSet::new(),
        }
    }

    /// Provided interfaces at or over the threshold, in uid order, skipping
    /// those already acted on.
    pub fn analyze(&self, target: &Model) -> Vec<Symptom> {
        let mut out = Vec::new();
        for c in target.elements_of_type("Component") {
            for i in c.slot("provided") {
                if self.handled.contains(i) {
                    continue;
                }
                let failures: u64 = target
                    .slot(i, "failures")
                    .iter()
                    .filter_map(|f| target.attr(f, "count").and_then(|v| v.as_int()))
                    .map(|n| n.max(0) as u64)
                    .sum();
                if failures >= self.policy.failure_threshold {
                    out.push(Symptom {
                        interface: i.clone(),
                        interface_type: type_name_of(target, i),
                        component: c.uid.clone(),
                        component_type: c.slot("type").first().cloned().unwrap_or_default(),
                        failures,
                    });
                }
            }
        }
        out.sort_by(|a, b| a.interface.cmp(&b.interface));
        out
    }

    /// Picks the first other component type, by uid, that provides the
    /// failing interface type.
    pub fn plan(&self, target: &Model, symptom: &Symptom) -> Result<Plan, ManagerError> {
        let mut types: Vec<&str> = target
            .elements_of_type("ComponentType")
            .map(|t| t.uid.as_str())
            .filter(|t| *t != symptom.component_type)
            .collect();
        types.sort();
        let replacement = types
            .into_iter()
            .find(|t| {
                target
                    .slot(t, "providedTypes")
                    .iter()
                    .any(|it| text(target, it, "name") == symptom.interface_type)
            })
            .ok_or_else(|| ManagerError::NoAlternativeType(symptom.interface.clone()))?;
        Ok(Plan {
            faulty: symptom.component.clone(),
            faulty_type: symptom.component_type.clone(),
            replacement_type: replacement.to_string(),
        })
    }

    /// Carries out `plan`: instantiate, deploy and start the replacement,
    /// move the connectors, then stop, undeploy and remove the faulty
    /// component and, if unused, its type. `after_step` runs after every
    /// operator.
    pub fn execute(
        &mut self,
        session: &mut AdaptationSession,
        plan: &Plan,
        mut after_step: impl FnMut(&AdaptationSession),
    ) -> Result<String, ManagerError> {
        let mut op = |session: &mut AdaptationSession,
                      r: Result<(), crate::adaptation::AdaptationError>| {
            r?;
            after_step(session);
            Ok::<_, ManagerError>(())
        };
        let replacement = session.instantiate(&plan.replacement_type)?;
        op(session, Ok(()))?;
        let old = plan.faulty.clone();
        let by_type =
            |session: &AdaptationSession, component: &str, slot: &str| -> Vec<(String, String)> {
                let t = session.target();
                t.slot(component, slot)
                    .iter()
                    .map(|i| (type_name_of(t, i), i.clone()))
                    .collect()
            };
        let r = session.set_lifecycle(&replacement, LifecycleState::Deployed);
        op(session, r)?;
        // the replacement's own dependencies go where the old ones went
        for (name, new_ri) in by_type(session, &replacement, "required") {
            let target = session.target();
            let provider = by_type(session, &old, "required")
                .into_iter()
                .filter(|(n, _)| *n == name)
                .flat_map(|(_, ri)| target.slot(&ri, "connectors").to_vec())
                .find_map(|c| target.slot(&c, "provided").first().cloned());
            if let Some(pi) = provider {
                let r = session.connect(&new_ri, &pi).map(|_| ());
                op(session, r)?;
            }
        }
        let r = session.set_lifecycle(&replacement, LifecycleState::Started);
        op(session, r)?;
        let new_provided = by_type(session, &replacement, "provided");
        for (name, old_pi) in by_type(session, &old, "provided") {
            let Some((_, new_pi)) = new_provided.iter().find(|(n, _)| *n == name) else {
                continue;
            };
            for c in session.target().slot(&old_pi, "connectors").to_vec() {
                let ri = session
                    .target()
                    .slot(&c, "required")
                    .first()
                    .cloned()
                    .unwrap_or_default();
                let r = session.disconnect(&c);
                op(session, r)?;
                let r = session.connect(&ri, new_pi).map(|_| ());
                op(session, r)?;
            }
            self.handled.insert(old_pi);
        }
        let still_used = by_type(session, &old, "provided")
            .iter()
            .any(|(_, i)| !session.target().slot(i, "connectors").is_empty());
        if still_used {
            return Ok(replacement);
        }
        let state = session
            .target()
            .attr(&old, "state")
            .and_then(LifecycleState::from_value);
        if state == Some(LifecycleState::Started) {
            let r = session.set_lifecycle(&old, LifecycleState::Deployed);
            op(session, r)?;
        }
        if state != Some(LifecycleState::Undeployed) {
            let r = session.set_lifecycle(&old, LifecycleState::Undeployed);
            op(session, r)?;
        }
        for (_, ri) in by_type(session, &old, "required") {
            for c in session.target().slot(&ri, "connectors").to_vec() {
                let r = session.disconnect(&c);
                op(session, r)?;
            }
        }
        let r = session.remove_component(&old);
        op(session, r)?;
        if session
            .target()
            .referrers(&plan.faulty_type)
            .next()
            .is_none()
        {
            let r = session.remove_component_type(&plan.faulty_type);
            op(session, r)?;
        }
        Ok(replacement)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// One replacement as carried out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Healing {
    pub symptom: Symptom,
    pub plan: Plan,
    pub replacement: String,
    /// Session log indices of the operators run.
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub stimuli: usize,
    pub monitor: MonitorReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symptoms: Vec<Symptom>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub healings: Vec<Healing>,
}

/// Everything a scenario run produced. Serialized, it is the trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub passed: bool,
    pub seed: u64,
    pub policy: HealingPolicy,
    pub assertions: Vec<Assertion>,
    pub ticks: Vec<TickRecord>,
    pub steps: Vec<StepRecord>,
    pub final_target: serde_json::Value,
    pub final_source: serde_json::Value,
    pub final_corr: serde_json::Value,
    pub final_container: serde_json::Value,
}

impl ScenarioResult {
    pub fn trace_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

/// Runs `script` against a fresh web-shop system under `policy`: each tick
/// applies its stimuli, monitors, and lets the manager heal what crossed the
/// threshold. The cross-model audit runs after every operator.
pub fn run_self_healing(
    policy: HealingPolicy,
    script: &[Stimulus],
    seed: u64,
) -> Result<ScenarioResult, ManagerError> {
    let mut session = AdaptationSession::attach(webshop_container())?;
    run_on(&mut session, policy, script, seed)
}

/// As [`run_self_healing`], on an existing session.
pub fn run_on(
    session: &mut AdaptationSession,
    policy: HealingPolicy,
    script: &[Stimulus],
    seed: u64,
) -> Result<ScenarioResult, ManagerError> {
    let mut manager = SelfHealingManager::new(policy);
    let mut rng = rng(seed);
    let mut assertions = Vec::new();
    let audit_assert =
        |session: &AdaptationSession, name: String, assertions: &mut Vec<Assertion>| {
            let report = session.audit();
            assertions.push(Assertion {
                name,
                passed: report.passed(),
                detail: report.problems.join("; "),
            });
        };
    audit_assert(session, "audit initial".into(), &mut assertions);
    let last = script.iter().map(|s| s.at).max().unwrap_or(0);
    let mut ticks = Vec::new();
    for tick in 0..=last {
        let due: Vec<&Action> = script
            .iter()
            .filter(|s| s.at == tick)
            .map(|s| &s.action)
            .collect();
        for a in &due {
            stimulate(session, a, &mut rng)?;
        }
        let monitor = session.monitor()?;
        let symptoms = manager.analyze(session.target());
        let mut healings = Vec::new();
        for symptom in &symptoms {
            let plan = manager.plan(session.target(), symptom)?;
            let first = session.log().len() + 1;
            let reads = session.foreign_reads();
            let mut audits = Vec::new();
            let replacement = manager.execute(session, &plan, |s| {
                let step = s.log().len();
                audits.push((step, s.audit()));
            })?;
            let touched = session.foreign_reads() - reads;
            assertions.push(Assertion {
                name: format!("manager confined to target model ({})", symptom.interface),
                passed: touched == 0,
                detail: if touched == 0 {
                    String::new()
                } else {
                    format!("{touched} source or container accesses")
                },
            });
            for (step, report) in audits {
                assertions.push(Assertion {
                    name: format!("audit after step {step}"),
                    passed: report.passed(),
                    detail: report.problems.join("; "),
                });
            }
            healings.push(Healing {
                symptom: symptom.clone(),
                plan,
                replacement,
                steps: (first..=session.log().len()).collect(),
            });
        }
        for a in &due {
            if let Action::Expect(e) = a {
                let failures = check(session, e);
                assertions.push(Assertion {
                    name: format!("expectation at tick {tick}"),
                    passed: failures.is_empty(),
                    detail: failures.join("; "),
                });
            }
        }
        audit_assert(session, format!("audit after tick {tick}"), &mut assertions);
        ticks.push(TickRecord {
            tick,
            stimuli: due
                .iter()
                .filter(|a| !matches!(a, Action::Expect(_)))
                .count(),
            monitor,
            symptoms,
            healings,
        });
    }
    let [final_target, final_source, final_corr, final_container] = session.dumps();
    Ok(ScenarioResult {
        passed: assertions.iter().all(|a| a.passed),
        seed,
        policy,
        assertions,
        ticks,
        steps: session.log().to_vec(),
        final_target,
        final_source,
        final_corr,
        final_container,
    })
}
