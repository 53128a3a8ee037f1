use serde::Serialize;
use thiserror::Error;

use crate::kernel::{CardinalityViolation, Model};

use super::{SOURCE_METAMODEL, TARGET_METAMODEL};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", content = "uid")]
pub enum Violation {
    ModuleWithoutBean(String),
    ComponentWithoutProvidedInterface(String),
    BadConnectorEndpoints(String),
    FailureNotOnProvidedInterface(String),
    ExceptionOutsideCall(String),
    CallWithoutInterface(String),
    Cardinality {
        uid: String,
        reference: String,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model of metamodel {0} is neither the source nor the target metamodel")]
pub struct ForeignMetamodel(pub String);

/// Lists every constraint violation of `model`. Never mutates.
pub fn check_wellformedness(model: &Model) -> Result<Vec<Violation>, ForeignMetamodel> {
    let mut out = match model.metamodel().name.as_str() {
        SOURCE_METAMODEL => source_violations(model),
        TARGET_METAMODEL => target_violations(model),
        other => return Err(ForeignMetamodel(other.to_string())),
    };
    for CardinalityViolation {
        uid,
        reference,
        count,
    } in model.cardinality_violations()
    {
        let already = out.iter().any(|v| match v {
            Violation::ModuleWithoutBean(u) => *u == uid && reference == "beans",
            Violation::ComponentWithoutProvidedInterface(u) => *u == uid && reference == "provided",
            Violation::BadConnectorEndpoints(u) => *u == uid,
            Violation::CallWithoutInterface(u) => *u == uid,
            _ => false,
        });
        if !already {
            out.push(Violation::Cardinality {
                uid,
                reference,
                count,
            });
        }
    }
    Ok(out)
}

fn source_violations(m: &Model) -> Vec<Violation> {
    let mut out = Vec::new();
    for e in m.elements_of_type("EjbModule") {
        if e.slot("beans").is_empty() {
            out.push(Violation::ModuleWithoutBean(e.uid.clone()));
        }
    }
    for e in m.elements_of_type("EjbConnector") {
        let ok = matches!(e.slot("reference"), [r] if m.is_instance(r, "EjbReference"))
            && matches!(e.slot("interface"), [i] if m.is_instance(i, "EjbInterface"));
        if !ok {
            out.push(Violation::BadConnectorEndpoints(e.uid.clone()));
        }
    }
    for e in m.elements_of_type("ThrownException") {
        if !matches!(m.parent(&e.uid), Some((p, _)) if m.is_instance(p, "Call")) {
            out.push(Violation::ExceptionOutsideCall(e.uid.clone()));
        }
    }
    for e in m.elements_of_type("Call") {
        if e.slot("interface").len() != 1 {
            out.push(Violation::CallWithoutInterface(e.uid.clone()));
        }
    }
    out
}

fn target_violations(m: &Model) -> Vec<Violation> {
    let mut out = Vec::new();
    for e in m.elements_of_type("Component") {
        if e.slot("provided").is_empty() {
            out.push(Violation::ComponentWithoutProvidedInterface(e.uid.clone()));
        }
    }
    let role = |uid: &str| m.parent(uid).map(|(_, slot)| slot.to_string());
    for e in m.elements_of_type("Connector") {
        let ok = matches!(e.slot("required"), [r] if role(r).as_deref() == Some("required"))
            && matches!(e.slot("provided"), [p] if role(p).as_deref() == Some("provided"));
        if !ok {
            out.push(Violation::BadConnectorEndpoints(e.uid.clone()));
        }
    }
    for e in m.elements_of_type("Failure") {
        let on_provided = m
            .parent(&e.uid)
            .is_some_and(|(iface, _)| role(iface).as_deref() == Some("provided"));
        if !on_provided {
            out.push(Violation::FailureNotOnProvidedInterface(e.uid.clone()));
        }
    }
    out
}
