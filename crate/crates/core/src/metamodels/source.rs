use std::sync::{Arc, OnceLock};

use crate::kernel::{AttrKind, Metamodel};

use super::LifecycleState;

pub const SOURCE_METAMODEL: &str = "ejb";

/// The EJB-style metamodel on three layers: types (the configuration space),
/// configurations (deployable modules and their wiring), and instances
/// (bean instances, calls and thrown exceptions).
pub fn build_source_metamodel() -> Arc<Metamodel> {
    static MM: OnceLock<Arc<Metamodel>> = OnceLock::new();
    MM.get_or_init(|| Arc::new(build().expect("source metamodel is well-formed")))
        .clone()
}

fn build() -> Result<Metamodel, crate::kernel::KernelError> {
    use AttrKind::*;
    Metamodel::builder(SOURCE_METAMODEL)
        .node("Named")
        .is_abstract()
        .attr("name", Text)
        .done()
        .node("EjbContainer")
        .extends("Named")
        .contains("moduleTypes", "EjbModuleType", 0, None)
        .contains("modules", "EjbModule", 0, None)
        .contains("connectors", "EjbConnector", 0, None)
        .done()
        // type layer
        .node("EjbModuleType")
        .extends("Named")
        .contains("beanTypes", "EnterpriseBeanType", 1, None)
        .done()
        .node("EnterpriseBeanType")
        .extends("Named")
        .is_abstract()
        .contains("entryTypes", "SimpleEnvironmentEntryType", 0, None)
        .contains("referenceTypes", "EjbReferenceType", 0, None)
        .done()
        .node("SessionBeanType")
        .extends("EnterpriseBeanType")
        .contains("interfaceTypes", "EjbInterfaceType", 0, None)
        .done()
        .node("MessageDrivenBeanType")
        .extends("EnterpriseBeanType")
        .done()
        .node("EjbInterfaceType")
        .extends("Named")
        .done()
        // a reference type names the business interface it needs by `name`
        .node("EjbReferenceType")
        .extends("Named")
        .done()
        .node("SimpleEnvironmentEntryType")
        .extends("Named")
        .attr("value_type", Text)
        .done()
        // configuration layer
        .node("EjbModule")
        .extends("Named")
        .attr("state", LifecycleState::attr_kind())
        .refers("type", "EjbModuleType", 1, Some(1))
        .contains("beans", "EnterpriseBean", 1, None)
        .done()
        .node("EnterpriseBean")
        .extends("Named")
        .is_abstract()
        .refers("type", "EnterpriseBeanType", 1, Some(1))
        .contains("entries", "SimpleEnvironmentEntry", 0, None)
        .contains("references", "EjbReference", 0, None)
        .contains("instances", "BeanInstance", 0, None)
        .done()
        .node("SessionBean")
        .extends("EnterpriseBean")
        .contains("interfaces", "EjbInterface", 0, None)
        .done()
        .node("MessageDrivenBean")
        .extends("EnterpriseBean")
        .done()
        .node("EjbInterface")
        .extends("Named")
        .refers("type", "EjbInterfaceType", 1, Some(1))
        .done()
        .node("EjbReference")
        .extends("Named")
        .refers("type", "EjbReferenceType", 1, Some(1))
        .done()
        .node("SimpleEnvironmentEntry")
        .extends("Named")
        .attr("value", Text)
        .refers("type", "SimpleEnvironmentEntryType", 1, Some(1))
        .done()
        .node("EjbConnector")
        .extends("Named")
        .refers("reference", "EjbReference", 1, Some(1))
        .refers("interface", "EjbInterface", 1, Some(1))
        .done()
        // instance layer
        .node("BeanInstance")
        .extends("Named")
        .contains("calls", "Call", 0, None)
        .done()
        .node("Call")
        .refers("interface", "EjbInterface", 1, Some(1))
        .contains("exception", "ThrownException", 0, Some(1))
        .done()
        .node("ThrownException")
        .attr("exception_type", Text)
        .done()
        .build()
}
