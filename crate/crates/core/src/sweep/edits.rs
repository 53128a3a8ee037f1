//! Random edits of a source model, as a platform might cause them.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adaptation::{Factory, ModuleFactory};
use crate::kernel::{KernelError, Model, Placement, Value};
use crate::metamodels::LifecycleState;

/// What a random edit did, for failure reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: &'static str,
    pub subject: String,
}

const EXCEPTIONS: [&str; 2] = ["TimeoutException", "LookupFailure"];
const VALUES: [&str; 3] = ["UPS", "DHL", "FedEx"];

fn uids_of(model: &Model, type_name: &str) -> Vec<String> {
    let mut v: Vec<String> = model
        .elements_of_type(type_name)
        .map(|e| e.uid.clone())
        .collect();
    v.sort();
    v
}

fn pick<R: Rng>(rng: &mut R, v: &[String]) -> Option<String> {
    v.choose(rng).cloned()
}

/// Applies one random edit to `source`. Returns `None` when the drawn edit
/// had nothing to work on.
pub fn random_edit<R: Rng>(rng: &mut R, source: &mut Model) -> Result<Option<Edit>, KernelError> {
    let kind = rng.gen_range(0..12);
    let edit = |kind: &'static str, subject: String| Ok(Some(Edit { kind, subject }));
    match kind {
        0 => {
            let Some(sb) = pick(rng, &uids_of(source, "SessionBean")) else {
                return Ok(None);
            };
            let Some(bt) = source.slot(&sb, "type").first().cloned() else {
                return Ok(None);
            };
            let Some(it) = pick(rng, source.slot(&bt, "interfaceTypes")) else {
                return Ok(None);
            };
            let name = source.text(&it, "name").unwrap_or_default().to_string();
            let uid = source.fresh_uid("EjbInterface");
            source.create_element(
                "EjbInterface",
                Some(&uid),
                [("name", Value::text(name))],
                Placement::child(&sb, "interfaces"),
            )?;
            source.add_reference(&uid, "type", &it)?;
            edit("add interface", uid)
        }
        1 => {
            let Some(m) = pick(rng, &uids_of(source, "EjbModule")) else {
                return Ok(None);
            };
            let uid = source.fresh_uid("SessionBean");
            source.create_element(
                "SessionBean",
                Some(&uid),
                [("name", Value::text(&uid))],
                Placement::child(&m, "beans"),
            )?;
            if let Some(mt) = source.slot(&m, "type").first().cloned() {
                if let Some(bt) = pick(rng, source.slot(&mt, "beanTypes")) {
                    if source.is_instance(&bt, "SessionBeanType") {
                        source.add_reference(&uid, "type", &bt)?;
                    }
                }
            }
            edit("add bare session bean", uid)
        }
        2 => {
            let Some(m) = pick(rng, &uids_of(source, "EjbModule")) else {
                return Ok(None);
            };
            let s = *LifecycleState::ALL.choose(rng).expect("non-empty");
            source.set_attribute(&m, "state", s.value())?;
            edit("set state", m)
        }
        3 => {
            let Some(e) = pick(rng, &uids_of(source, "SimpleEnvironmentEntry")) else {
                return Ok(None);
            };
            let v = *VALUES.choose(rng).expect("non-empty");
            source.set_attribute(&e, "value", Value::text(v))?;
            edit("set entry", e)
        }
        4 => {
            let (Some(r), Some(i)) = (
                pick(rng, &uids_of(source, "EjbReference")),
                pick(rng, &uids_of(source, "EjbInterface")),
            ) else {
                return Ok(None);
            };
            let Some(ec) = source.roots().first().cloned() else {
                return Ok(None);
            };
            let uid = source.fresh_uid("EjbConnector");
            source.create_element(
                "EjbConnector",
                Some(&uid),
                [("name", Value::text(&uid))],
                Placement::child(&ec, "connectors"),
            )?;
            source.add_reference(&uid, "reference", &r)?;
            source.add_reference(&uid, "interface", &i)?;
            edit("add connector", uid)
        }
        5 | 6 => {
            let mut all: Vec<String> = source
                .elements()
                .filter(|e| e.type_name != "EjbContainer")
                .map(|e| e.uid.clone())
                .collect();
            all.sort();
            let Some(victim) = pick(rng, &all) else {
                return Ok(None);
            };
            source.delete_element(&victim)?;
            edit("delete", victim)
        }
        7 => {
            let Some(inst) = pick(rng, &uids_of(source, "BeanInstance")) else {
                return Ok(None);
            };
            let Some((bean, _)) = source.parent(&inst).map(|(b, r)| (b.to_string(), r)) else {
                return Ok(None);
            };
            let Some(ei) = pick(rng, source.slot(&bean, "interfaces")) else {
                return Ok(None);
            };
            let call = source.fresh_uid("Call");
            source.create_element(
                "Call",
                Some(&call),
                Vec::<(String, Value)>::new(),
                Placement::child(&inst, "calls"),
            )?;
            source.add_reference(&call, "interface", &ei)?;
            if rng.gen_bool(0.8) {
                let ex = *EXCEPTIONS.choose(rng).expect("non-empty");
                source.create_element(
                    "ThrownException",
                    None,
                    [("exception_type", Value::text(ex))],
                    Placement::child(&call, "exception"),
                )?;
            }
            edit("add call", call)
        }
        8 => {
            let Some(bean) = pick(rng, &uids_of(source, "SessionBean")) else {
                return Ok(None);
            };
            let uid = source.fresh_uid("BeanInstance");
            source.create_element(
                "BeanInstance",
                Some(&uid),
                [("name", Value::text(&uid))],
                Placement::child(&bean, "instances"),
            )?;
            edit("add instance", uid)
        }
        9 => {
            let Some(mt) = pick(rng, &uids_of(source, "EjbModuleType")) else {
                return Ok(None);
            };
            match ModuleFactory.instantiate(source, &mt) {
                Ok(m) => edit("add module", m),
                Err(_) => Ok(None),
            }
        }
        10 => {
            let mut named: Vec<String> = source
                .elements()
                .filter(|e| e.attr("name").is_some())
                .map(|e| e.uid.clone())
                .collect();
            named.sort();
            let Some(uid) = pick(rng, &named) else {
                return Ok(None);
            };
            let n: u32 = rng.gen_range(0..100);
            source.set_attribute(&uid, "name", Value::text(format!("renamed{n}")))?;
            edit("rename", uid)
        }
        _ => {
            let Some(ec) = source.roots().first().cloned() else {
                return Ok(None);
            };
            let mt = source.fresh_uid("EjbModuleType");
            source.create_element(
                "EjbModuleType",
                Some(&mt),
                [("name", Value::text(&mt))],
                Placement::child(&ec, "moduleTypes"),
            )?;
            let bt = format!("{mt}.Bean");
            source.create_element(
                "SessionBeanType",
                Some(&bt),
                [("name", Value::text("Bean"))],
                Placement::child(&mt, "beanTypes"),
            )?;
            let it = format!("{bt}.if.IExtra");
            source.create_element(
                "EjbInterfaceType",
                Some(&it),
                [("name", Value::text("IExtra"))],
                Placement::child(&bt, "interfaceTypes"),
            )?;
            edit("add module type", mt)
        }
    }
}
