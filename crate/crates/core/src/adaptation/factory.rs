use std::collections::BTreeMap;
use std::sync::Arc;

use crate::kernel::{Model, Placement, Value};
use crate::platform::naming;

use super::AdaptationError;

/// Creates a deployable unit in the source model from a type element there.
/// The created unit is left undeployed.
pub trait Factory: Send + Sync + std::fmt::Debug {
    /// Creates an instance of `type_uid` and returns its uid.
    fn instantiate(&self, source: &mut Model, type_uid: &str) -> Result<String, AdaptationError>;
}

/// Factories keyed by the source node type they instantiate.
#[derive(Debug, Clone, Default)]
pub struct FactoryRegistry {
    factories: BTreeMap<String, Arc<dyn Factory>>,
}

impl FactoryRegistry {
    /// A registry holding the module factory.
    pub fn standard() -> Self {
        let mut r = FactoryRegistry::default();
        r.register("EjbModuleType", Arc::new(ModuleFactory));
        r
    }

    pub fn register(&mut self, type_name: &str, factory: Arc<dyn Factory>) {
        self.factories.insert(type_name.to_string(), factory);
    }

    pub fn get(&self, type_name: &str) -> Option<&Arc<dyn Factory>> {
        self.factories.get(type_name)
    }
}

/// Clones a module type's bean structure into a new module: each bean type
/// becomes a bean, and each interface, reference and entry is attached to the
/// bean whose type declares it.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModuleFactory;

/// First unused module name for instances of `module_type`.
pub fn module_name(source: &Model, module_type: &str) -> String {
    let base = naming::module_for_type(module_type);
    if !source.contains(&base) {
        return base;
    }
    (2..)
        .map(|n| format!("{base}-{n}"))
        .find(|n| !source.contains(n))
        .expect("unbounded")
}

impl Factory for ModuleFactory {
    fn instantiate(&self, source: &mut Model, type_uid: &str) -> Result<String, AdaptationError> {
        let fail = |reason: String| AdaptationError::FactoryFailure {
            type_uid: type_uid.to_string(),
            reason,
        };
        if !source.is_instance(type_uid, "EjbModuleType") {
            return Err(fail("not a module type".into()));
        }
        let container = match source.parent(type_uid) {
            Some((p, _)) => p.to_string(),
            None => return Err(fail("module type outside a container".into())),
        };
        let module = module_name(source, type_uid);
        let build = |source: &mut Model| -> Result<(), crate::kernel::KernelError> {
            let named = |n: &str| vec![("name", Value::text(n))];
            let mut attrs = named(&module);
            attrs.push((
                "state",
                crate::metamodels::LifecycleState::Undeployed.value(),
            ));
            source.create_element(
                "EjbModule",
                Some(&module),
                attrs,
                Placement::child(&container, "modules"),
            )?;
            source.add_reference(&module, "type", type_uid)?;
            for bt in source.slot(type_uid, "beanTypes").to_vec() {
                let bean_type = source.get(&bt).expect("slot member exists").clone();
                let bean_name = bean_type.text("name").unwrap_or_default().to_string();
                let session = bean_type.type_name == "SessionBeanType";
                let bean = naming::bean(&module, &bean_name);
                let kind = if session {
                    "SessionBean"
                } else {
                    "MessageDrivenBean"
                };
                source.create_element(
                    kind,
                    Some(&bean),
                    named(&bean_name),
                    Placement::child(&module, "beans"),
                )?;
                source.add_reference(&bean, "type", &bt)?;
                let children = [
                    ("interfaceTypes", "EjbInterface", "interfaces"),
                    ("referenceTypes", "EjbReference", "references"),
                    ("entryTypes", "SimpleEnvironmentEntry", "entries"),
                ];
                for (type_slot, kind, slot) in children {
                    if kind == "EjbInterface" && !session {
                        continue;
                    }
                    for t in bean_type.slot(type_slot) {
                        let name = source.text(t, "name").unwrap_or_default().to_string();
                        let uid = match kind {
                            "EjbInterface" => naming::interface(&bean, &name),
                            "EjbReference" => naming::reference(&bean, &name),
                            _ => naming::entry(&bean, &name),
                        };
                        let mut attrs = named(&name);
                        if kind == "SimpleEnvironmentEntry" {
                            attrs.push(("value", Value::text("")));
                        }
                        source.create_element(
                            kind,
                            Some(&uid),
                            attrs,
                            Placement::child(&bean, slot),
                        )?;
                        source.add_reference(&uid, "type", t)?;
                    }
                }
            }
            Ok(())
        };
        build(source).map_err(|e| fail(e.to_string()))?;
        Ok(module)
    }
}
