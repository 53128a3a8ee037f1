use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::AdaptationSession;
use crate::platform::{CallOutcome, EffectorCommand, ModuleTemplate};

use super::fixture;
use super::ManagerError;

/// One scripted stimulus, applied at the start of tick `at`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub at: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "args", rename_all = "snake_case")]
pub enum Action {
    /// Installs a module type: a known fixture type by name, or an inline
    /// template.
    InstallType {
        module_type: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        template: Option<ModuleTemplate>,
    },
    /// Runs `count` calls through a provided interface, each failing with
    /// `exception` when given.
    InjectCall {
        module: String,
        interface: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        exception: Option<String>,
        #[serde(default = "one")]
        count: usize,
    },
    /// Runs `count` calls, each failing with probability `failure_rate`,
    /// drawn from the run's seeded generator.
    RandomCalls {
        module: String,
        interface: String,
        exception: String,
        count: usize,
        failure_rate: f64,
    },
    /// An administrator command issued outside the models.
    Administer { command: EffectorCommand },
    /// Checks element presence once the tick's adaptation has finished.
    Expect(Expectation),
}

fn one() -> usize {
    1
}

/// Which view an expectation inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    Source,
    Target,
    Container,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub present: Vec<(View, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub absent: Vec<(View, String)>,
    /// Pairs of (requiring component, providing component) names that must
    /// be connected in the target model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connected: Vec<(String, String)>,
}

pub type Script = Vec<Stimulus>;

pub fn parse_script(text: &str) -> Result<Script, ManagerError> {
    serde_json::from_str(text).map_err(|e| ManagerError::Script(e.to_string()))
}

/// A fixture module type by name.
pub fn known_type(name: &str) -> Option<ModuleTemplate> {
    [
        fixture::shop_type(),
        fixture::shipment_type(),
        fixture::warehouse_type(),
        fixture::warehouse2_type(),
    ]
    .into_iter()
    .find(|t| t.name == name)
}

/// Applies a non-expectation stimulus to the managed system.
pub(crate) fn stimulate(
    session: &mut AdaptationSession,
    action: &Action,
    rng: &mut ChaCha8Rng,
) -> Result<(), ManagerError> {
    let container = session.container_mut();
    match action {
        Action::InstallType {
            module_type,
            template,
        } => {
            let t = template
                .clone()
                .or_else(|| known_type(module_type))
                .ok_or_else(|| {
                    ManagerError::Script(format!("unknown module type {module_type}"))
                })?;
            container.install_module_type(t)?;
        }
        Action::InjectCall {
            module,
            interface,
            exception,
            count,
        } => {
            for _ in 0..*count {
                let outcome = exception
                    .clone()
                    .map_or(CallOutcome::Ok, CallOutcome::Exception);
                container.inject_call(module, interface, outcome)?;
            }
        }
        Action::RandomCalls {
            module,
            interface,
            exception,
            count,
            failure_rate,
        } => {
            for _ in 0..*count {
                let outcome = if rng.gen_bool(failure_rate.clamp(0.0, 1.0)) {
                    CallOutcome::Exception(exception.clone())
                } else {
                    CallOutcome::Ok
                };
                container.inject_call(module, interface, outcome)?;
            }
        }
        Action::Administer { command } => container.administer(command)?,
        Action::Expect(_) => {}
    }
    Ok(())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Failed checks of `e`, as messages.
pub(crate) fn check(session: &AdaptationSession, e: &Expectation) -> Vec<String> {
    let has = |view: View, uid: &str| match view {
        View::Source => session.source().contains(uid),
        View::Target => session.target().contains(uid),
        View::Container => {
            let c = session.container();
            c.module(uid).is_some() || c.template(uid).is_some() || c.wiring(uid).is_some()
        }
    };
    let mut failures = Vec::new();
    for (view, uid) in &e.present {
        if !has(*view, uid) {
            failures.push(format!("{uid} missing from {view:?}"));
        }
    }
    for (view, uid) in &e.absent {
        if has(*view, uid) {
            failures.push(format!("{uid} still in {view:?}"));
        }
    }
    for (from, to) in &e.connected {
        if !connected(session.target(), from, to) {
            failures.push(format!("{from} is not connected to {to}"));
        }
    }
    failures
}

/// True when a connector runs from a required interface of the component
/// named `from` to a provided interface of the component named `to`.
pub fn connected(target: &crate::kernel::Model, from: &str, to: &str) -> bool {
    let owner = |i: &str| {
        target
            .parent(i)
            .and_then(|(c, _)| target.text(c, "name"))
            .map(str::to_string)
    };
    target.elements_of_type("Connector").any(|c| {
        let end = |r: &str| c.slot(r).first().and_then(|i| owner(i));
        end("required").as_deref() == Some(from) && end("provided").as_deref() == Some(to)
    })
}
