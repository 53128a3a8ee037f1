use std::sync::{Arc, OnceLock};

use crate::kernel::{AttrKind, Metamodel};

use super::LifecycleState;

pub const TARGET_METAMODEL: &str = "component";

/// The platform-independent component metamodel with failures attached to
/// provided interfaces. Required and provided interfaces live in separate
/// slots of Component and ComponentType.
pub fn build_target_metamodel() -> Arc<Metamodel> {
    static MM: OnceLock<Arc<Metamodel>> = OnceLock::new();
    MM.get_or_init(|| Arc::new(build().expect("target metamodel is well-formed")))
        .clone()
}

fn build() -> Result<Metamodel, crate::kernel::KernelError> {
    use AttrKind::*;
    Metamodel::builder(TARGET_METAMODEL)
        .node("Named")
        .is_abstract()
        .attr("name", Text)
        .done()
        .node("ComponentPlatform")
        .extends("Named")
        .contains("componentTypes", "ComponentType", 0, None)
        .contains("components", "Component", 0, None)
        .contains("connectors", "Connector", 0, None)
        .done()
        .node("ComponentType")
        .extends("Named")
        .contains("providedTypes", "InterfaceType", 1, None)
        .contains("requiredTypes", "InterfaceType", 0, None)
        .contains("propertyTypes", "PropertyType", 0, None)
        .done()
        .node("InterfaceType")
        .extends("Named")
        .done()
        .node("PropertyType")
        .extends("Named")
        .attr("value_type", Text)
        .done()
        .node("Component")
        .extends("Named")
        .attr("state", LifecycleState::attr_kind())
        .refers("type", "ComponentType", 1, Some(1))
        .contains("provided", "Interface", 1, None)
        .contains("required", "Interface", 0, None)
        .contains("properties", "Property", 0, None)
        .done()
        .node("Interface")
        .extends("Named")
        .refers("type", "InterfaceType", 1, Some(1))
        .refers("connectors", "Connector", 0, None)
        .contains("failures", "Failure", 0, None)
        .done()
        .node("Property")
        .extends("Named")
        .attr("value", Text)
        .refers("type", "PropertyType", 1, Some(1))
        .done()
        .node("Connector")
        .extends("Named")
        .refers("required", "Interface", 1, Some(1))
        .refers("provided", "Interface", 1, Some(1))
        .done()
        .node("Failure")
        .attr("exception_type", Text)
        .attr("count", Integer)
        .done()
        .build()
}
