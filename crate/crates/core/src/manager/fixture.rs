//! The web-shop system: three module types, one module of each, wired and
//! started.

use crate::adaptation::{AdaptationError, AdaptationSession, TargetMutation};
use crate::metamodels::LifecycleState;
use crate::platform::naming;
use crate::platform::{Adapter, BeanTemplate, Container, EffectorCommand, ModuleTemplate};

use super::ManagerError;

pub const CONTAINER: &str = "server";

pub fn shop_type() -> ModuleTemplate {
    ModuleTemplate {
        name: "ShopT".into(),
        beans: vec![
            BeanTemplate::session("ShopBean")
                .provides("IWebshop")
                .requires("IShipment")
                .requires("IWarehousing"),
            BeanTemplate::message_driven("OrderListener"),
        ],
    }
}

pub fn shipment_type() -> ModuleTemplate {
    ModuleTemplate {
        name: "ShipmentT".into(),
        beans: vec![BeanTemplate::session("ShipmentBean")
            .provides("IShipment")
            .entry("provider", "String")],
    }
}

pub fn warehouse_type() -> ModuleTemplate {
    warehouse_type_named("WarehouseT")
}

/// The replacement offered for a failing warehouse.
pub fn warehouse2_type() -> ModuleTemplate {
    warehouse_type_named("Warehouse2T")
}

fn warehouse_type_named(name: &str) -> ModuleTemplate {
    ModuleTemplate {
        name: name.into(),
        beans: vec![BeanTemplate::session("WarehouseBean").provides("IWarehousing")],
    }
}

/// Source uid of the EJB reference `reference` of the shop bean.
pub fn shop_reference(interface: &str) -> String {
    naming::reference(&naming::bean("Shop", "ShopBean"), interface)
}

/// Source uid of the EJB interface of the single session bean of `module`.
pub fn provided_interface(module: &str, bean: &str, interface: &str) -> String {
    naming::interface(&naming::bean(module, bean), interface)
}

/// Administers the fixture into `container`. Its events stay queued.
pub fn populate(container: &mut Container) -> Result<(), ManagerError> {
    if !container.is_empty() {
        return Err(ManagerError::NonEmptyContainer);
    }
    for t in [shop_type(), shipment_type(), warehouse_type()] {
        container.install_module_type(t)?;
    }
    use EffectorCommand::*;
    let mut cmds = Vec::new();
    for (m, t) in [
        ("Shop", "ShopT"),
        ("Shipment", "ShipmentT"),
        ("Warehouse", "WarehouseT"),
    ] {
        cmds.push(InstantiateModule {
            module: m.into(),
            module_type: t.into(),
        });
    }
    cmds.push(SetEntry {
        entry: naming::entry(&naming::bean("Shipment", "ShipmentBean"), "provider"),
        value: "UPS".into(),
    });
    for m in ["Shop", "Shipment", "Warehouse"] {
        cmds.push(Deploy { module: m.into() });
    }
    cmds.push(Wire {
        connector: "c1".into(),
        reference: shop_reference("IShipment"),
        interface: provided_interface("Shipment", "ShipmentBean", "IShipment"),
    });
    cmds.push(Wire {
        connector: "c2".into(),
        reference: shop_reference("IWarehousing"),
        interface: provided_interface("Warehouse", "WarehouseBean", "IWarehousing"),
    });
    for m in ["Shipment", "Warehouse", "Shop"] {
        cmds.push(Start { module: m.into() });
    }
    for c in &cmds {
        container.administer(c)?;
    }
    Ok(())
}

/// Administers the fixture into the adapter's container and pumps the
/// resulting events into `source`.
pub fn build_webshop_fixture(
    adapter: &mut Adapter,
    source: &mut crate::kernel::Model,
) -> Result<(), ManagerError> {
    populate(adapter.container_mut())?;
    adapter.pump_events(source)?;
    Ok(())
}

/// A container already holding the fixture, with no pending events.
pub fn webshop_container() -> Container {
    let mut c = Container::new(CONTAINER);
    populate(&mut c).expect("fixture is valid");
    c.drain_events();
    c
}

/// One adaptation a manager might try on the fixture's target model.
#[derive(Debug, Clone, PartialEq)]
pub enum Attempt {
    Apply(TargetMutation),
    Connect {
        required: String,
        provided: String,
    },
    SetLifecycle {
        component: String,
        state: LifecycleState,
    },
    RemoveComponent(String),
    RemoveComponentType(String),
}

impl Attempt {
    pub fn run(&self, session: &mut AdaptationSession) -> Result<(), AdaptationError> {
        match self {
            Attempt::Apply(m) => session.apply(m.clone()),
            Attempt::Connect { required, provided } => {
                session.connect(required, provided).map(drop)
            }
            Attempt::SetLifecycle { component, state } => session.set_lifecycle(component, *state),
            Attempt::RemoveComponent(c) => session.remove_component(c),
            Attempt::RemoveComponentType(t) => session.remove_component_type(t),
        }
    }
}

/// Adaptations of the started fixture that the operators must refuse, by
/// label.
pub fn invalid_attempts() -> Vec<(&'static str, Attempt)> {
    let iface = |uid: String| naming::target::interface(&uid);
    let shop_req = |i: &str| iface(shop_reference(i));
    let warehouse = iface(provided_interface(
        "Warehouse",
        "WarehouseBean",
        "IWarehousing",
    ));
    let shipment = iface(provided_interface("Shipment", "ShipmentBean", "IShipment"));
    let platform = naming::target::platform(CONTAINER);
    vec![
        (
            "delete required interface",
            Attempt::Apply(TargetMutation::DeleteElement {
                uid: shop_req("IWarehousing"),
            }),
        ),
        (
            "create component manually",
            Attempt::Apply(TargetMutation::CreateElement {
                type_name: "Component".into(),
                parent: platform.clone(),
                reference: "components".into(),
            }),
        ),
        (
            "create connector manually",
            Attempt::Apply(TargetMutation::CreateElement {
                type_name: "Connector".into(),
                parent: platform,
                reference: "connectors".into(),
            }),
        ),
        (
            "connect mismatched interface types",
            Attempt::Connect {
                required: shop_req("IShipment"),
                provided: warehouse.clone(),
            },
        ),
        (
            "connect two provided interfaces",
            Attempt::Connect {
                required: shipment,
                provided: warehouse.clone(),
            },
        ),
        (
            "connect an already wired reference",
            Attempt::Connect {
                required: shop_req("IWarehousing"),
                provided: warehouse.clone(),
            },
        ),
        (
            "undeploy a started component",
            Attempt::SetLifecycle {
                component: naming::target::component("Warehouse"),
                state: LifecycleState::Undeployed,
            },
        ),
        (
            "remove a started component",
            Attempt::RemoveComponent(naming::target::component("Warehouse")),
        ),
        (
            "remove a type in use",
            Attempt::RemoveComponentType(naming::target::component_type("WarehouseT")),
        ),
        (
            "detach a connector from its interface",
            Attempt::Apply(TargetMutation::RemoveReference {
                uid: warehouse,
                reference: "connectors".into(),
                target: "c2".into(),
            }),
        ),
    ]
}
