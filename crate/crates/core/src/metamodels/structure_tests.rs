use crate::kernel::{AttrKind, Model, Placement, Value};

use super::*;

#[test]
fn session_bean_is_an_enterprise_bean() {
    let mm = build_source_metamodel();
    let sb = mm.node_type("SessionBean").unwrap();
    assert_eq!(sb.supertype.as_deref(), Some("EnterpriseBean"));
    assert!(mm.node_type("EnterpriseBean").unwrap().is_abstract);
    assert!(mm.is_subtype("MessageDrivenBean", "EnterpriseBean"));
}

#[test]
fn module_must_contain_a_bean() {
    let mm = build_source_metamodel();
    let beans = mm.reference("EjbModule", "beans").unwrap();
    assert!(beans.containment);
    assert_eq!(beans.target, "EnterpriseBean");
    assert_eq!(beans.lower, 1);
}

#[test]
fn builders_are_idempotent() {
    assert_eq!(*build_source_metamodel(), *build_source_metamodel());
    assert_eq!(*build_target_metamodel(), *build_target_metamodel());
}

#[test]
fn component_state_has_three_literals() {
    let mm = build_target_metamodel();
    let state = mm.attribute("Component", "state").unwrap();
    match &state.kind {
        AttrKind::Enumeration(l) => assert_eq!(l, &["UNDEPLOYED", "DEPLOYED", "STARTED"]),
        other => panic!("state is {other:?}"),
    }
}

#[test]
fn failures_hang_off_interfaces_only() {
    let mm = build_target_metamodel();
    let holders: Vec<(String, String)> = mm
        .node_types
        .values()
        .flat_map(|t| {
            t.references
                .iter()
                .filter(|r| r.target == "Failure")
                .map(move |r| (t.name.clone(), r.name.clone()))
        })
        .collect();
    assert_eq!(
        holders,
        vec![("Interface".to_string(), "failures".to_string())]
    );
    assert!(mm.all_references("Failure").is_empty());
}

#[test]
fn mapped_concepts_live_in_exactly_one_metamodel() {
    let src = build_source_metamodel();
    let tgt = build_target_metamodel();
    let concepts = [
        "EjbContainer",
        "ComponentPlatform",
        "EjbModuleType",
        "ComponentType",
        "EnterpriseBeanType",
        "SessionBeanType",
        "MessageDrivenBeanType",
        "SimpleEnvironmentEntryType",
        "EjbReferenceType",
        "EjbInterfaceType",
        "PropertyType",
        "InterfaceType",
        "EjbModule",
        "Component",
        "EnterpriseBean",
        "SimpleEnvironmentEntry",
        "EjbReference",
        "EjbInterface",
        "Property",
        "Interface",
        "EjbConnector",
        "Connector",
        "ThrownException",
        "Failure",
    ];
    for c in concepts {
        assert!(src.has_type(c) ^ tgt.has_type(c), "{c}");
    }
}

#[test]
fn target_has_no_bean_concepts() {
    let tgt = build_target_metamodel();
    for t in tgt.node_types.keys() {
        assert!(
            !t.contains("Bean") && !t.contains("Call") && !t.contains("Instance"),
            "{t}"
        );
    }
}

#[test]
fn module_without_bean_is_reported() {
    let mut m = Model::new(build_source_metamodel());
    m.create_element(
        "EjbContainer",
        Some("ec"),
        Vec::<(String, Value)>::new(),
        Placement::Root,
    )
    .unwrap();
    m.create_element(
        "EjbModuleType",
        Some("mt"),
        Vec::<(String, Value)>::new(),
        Placement::child("ec", "moduleTypes"),
    )
    .unwrap();
    m.create_element(
        "SessionBeanType",
        Some("bt"),
        Vec::<(String, Value)>::new(),
        Placement::child("mt", "beanTypes"),
    )
    .unwrap();
    m.create_element(
        "EjbModule",
        Some("m1"),
        Vec::<(String, Value)>::new(),
        Placement::child("ec", "modules"),
    )
    .unwrap();
    m.add_reference("m1", "type", "mt").unwrap();
    assert_eq!(
        check_wellformedness(&m).unwrap(),
        vec![Violation::ModuleWithoutBean("m1".into())]
    );
}

#[test]
fn connector_between_two_provided_interfaces_is_reported() {
    let mut m = Model::new(build_target_metamodel());
    let none = Vec::<(String, Value)>::new;
    m.create_element("ComponentPlatform", Some("p"), none(), Placement::Root)
        .unwrap();
    m.create_element(
        "ComponentType",
        Some("ct"),
        none(),
        Placement::child("p", "componentTypes"),
    )
    .unwrap();
    m.create_element(
        "InterfaceType",
        Some("it"),
        none(),
        Placement::child("ct", "providedTypes"),
    )
    .unwrap();
    for c in ["a", "b"] {
        m.create_element(
            "Component",
            Some(c),
            none(),
            Placement::child("p", "components"),
        )
        .unwrap();
        m.add_reference(c, "type", "ct").unwrap();
        let i = format!("{c}.i");
        m.create_element(
            "Interface",
            Some(&i),
            none(),
            Placement::child(c, "provided"),
        )
        .unwrap();
        m.add_reference(&i, "type", "it").unwrap();
    }
    m.create_element(
        "Connector",
        Some("c1"),
        none(),
        Placement::child("p", "connectors"),
    )
    .unwrap();
    m.add_reference("c1", "required", "a.i").unwrap();
    m.add_reference("c1", "provided", "b.i").unwrap();
    assert_eq!(
        check_wellformedness(&m).unwrap(),
        vec![Violation::BadConnectorEndpoints("c1".into())]
    );
}

#[test]
fn foreign_models_are_refused() {
    let mm = std::sync::Arc::new(
        crate::kernel::Metamodel::builder("other")
            .node("X")
            .done()
            .build()
            .unwrap(),
    );
    let m = Model::new(mm);
    assert_eq!(
        check_wellformedness(&m),
        Err(ForeignMetamodel("other".into()))
    );
}
