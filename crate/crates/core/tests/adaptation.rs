use rtm_core::adaptation::{
    AdaptationError, AdaptationSession, Factory, ModuleFactory, TargetMutation, ViolationKind,
};
use rtm_core::kernel::{Model, Value};
use rtm_core::manager::fixture::{invalid_attempts, warehouse2_type, webshop_container};
use rtm_core::metamodels::LifecycleState::{self, *};
use rtm_core::platform::{source_model_of, EffectorCommand};
use rtm_core::tgg::Direction;

const PROVIDER: &str = "pr:Shipment.ShipmentBean.env.provider";
const SHOP_NEEDS_WAREHOUSING: &str = "i:Shop.ShopBean.ref.IWarehousing";
const SHOP_NEEDS_SHIPMENT: &str = "i:Shop.ShopBean.ref.IShipment";
const WAREHOUSING: &str = "i:Warehouse.WarehouseBean.if.IWarehousing";
const WAREHOUSE2_WAREHOUSING: &str = "i:Warehouse2.WarehouseBean.if.IWarehousing";

fn session() -> AdaptationSession {
    AdaptationSession::attach(webshop_container()).unwrap()
}

/// The fixture with the replacement type installed and monitored.
fn session_with_warehouse2() -> AdaptationSession {
    let mut s = session();
    s.container_mut()
        .install_module_type(warehouse2_type())
        .unwrap();
    s.monitor().unwrap();
    s
}

fn kind(e: AdaptationError) -> ViolationKind {
    e.violation()
        .unwrap_or_else(|| panic!("not a violation: {e}"))
        .kind
}

fn state(s: &AdaptationSession, component: &str) -> Option<String> {
    s.target().text(component, "state").map(str::to_string)
}

fn assert_audited(s: &AdaptationSession) {
    let report = s.audit();
    assert!(report.passed(), "{:?}", report.problems);
}

#[test]
fn instantiate_creates_undeployed_component() {
    let mut s = session_with_warehouse2();
    let c = s.instantiate("ct:Warehouse2T").unwrap();
    assert_eq!(c, "c:Warehouse2");
    assert_eq!(state(&s, &c).as_deref(), Some("UNDEPLOYED"));
    let t = s.target();
    assert_eq!(t.slot(&c, "provided"), [WAREHOUSE2_WAREHOUSING.to_string()]);
    assert_eq!(t.text(WAREHOUSE2_WAREHOUSING, "name"), Some("IWarehousing"));
    assert_eq!(t.slot(&c, "type"), ["ct:Warehouse2T".to_string()]);
    assert!(s.container().module("Warehouse2").is_some());
    assert_audited(&s);
}

#[test]
fn instantiate_shipment_copies_property_and_interface() {
    let mut s = session();
    let c = s.instantiate("ct:ShipmentT").unwrap();
    let t = s.target();
    assert_eq!(t.slot(&c, "properties").len(), 1);
    assert_eq!(t.slot(&c, "provided").len(), 1);
    assert!(t.slot(&c, "required").is_empty());
    let prop = &t.slot(&c, "properties")[0];
    assert_eq!(t.text(prop, "name"), Some("provider"));
    assert_eq!(
        t.text(&t.slot(&c, "provided")[0], "name"),
        Some("IShipment")
    );
    assert_ne!(c, "c:Shipment");
    assert_audited(&s);
}

#[test]
fn instantiate_unknown_type() {
    let mut s = session();
    assert!(matches!(
        s.instantiate("c:Shop"),
        Err(AdaptationError::UnknownComponentType(_))
    ));
    assert!(matches!(
        s.instantiate("ct:Nope"),
        Err(AdaptationError::UnknownComponentType(_))
    ));
}

#[test]
fn factory_mirrors_template_structure() {
    let mut s = session_with_warehouse2();
    let mut oracle_container = s.container().clone();
    oracle_container
        .administer(&EffectorCommand::InstantiateModule {
            module: "Warehouse2".into(),
            module_type: "Warehouse2T".into(),
        })
        .unwrap();
    let oracle = source_model_of(&oracle_container).unwrap();
    s.instantiate("ct:Warehouse2T").unwrap();
    assert_same_subtree(s.source(), &oracle, "Warehouse2");
}

fn assert_same_subtree(a: &Model, b: &Model, root: &str) {
    let (ta, tb) = (a.subtree(root), b.subtree(root));
    assert_eq!(ta, tb);
    for uid in ta {
        let (ea, eb) = (a.get(&uid).unwrap(), b.get(&uid).unwrap());
        assert_eq!(ea.type_name, eb.type_name, "{uid}");
        assert_eq!(ea.attribute_values, eb.attribute_values, "{uid}");
        assert_eq!(ea.reference_slots, eb.reference_slots, "{uid}");
        assert_eq!(a.parent(&uid), b.parent(&uid), "{uid}");
    }
}

#[test]
fn component_appears_only_after_forward_sync() {
    let s = session_with_warehouse2();
    let mut engine = s.engine().clone();
    let module = ModuleFactory
        .instantiate(engine.source_mut(), "Warehouse2T")
        .unwrap();
    assert_eq!(module, "Warehouse2");
    assert_eq!(
        engine.source().text("Warehouse2", "state"),
        Some("UNDEPLOYED")
    );
    assert!(!engine.target().contains("c:Warehouse2"));
    engine.synchronize(Direction::Forward).unwrap();
    assert_eq!(
        engine.target().text("c:Warehouse2", "state"),
        Some("UNDEPLOYED")
    );
}

#[test]
fn lifecycle_steps_reach_container() {
    let mut s = session_with_warehouse2();
    let c = s.instantiate("ct:Warehouse2T").unwrap();
    s.set_lifecycle(&c, Deployed).unwrap();
    assert_eq!(s.container().module("Warehouse2").unwrap().state, Deployed);
    s.set_lifecycle(&c, Started).unwrap();
    assert_eq!(s.container().module("Warehouse2").unwrap().state, Started);
    assert_eq!(state(&s, &c).as_deref(), Some("STARTED"));
    s.set_lifecycle("c:Warehouse", Deployed).unwrap();
    assert_eq!(s.container().module("Warehouse").unwrap().state, Deployed);
    assert_audited(&s);
    let steps: Vec<&str> = s.log().iter().map(|r| r.operator.as_str()).collect();
    assert_eq!(
        steps,
        [
            "instantiate",
            "set_lifecycle",
            "set_lifecycle",
            "set_lifecycle"
        ]
    );
    assert!(s
        .log()
        .iter()
        .all(|r| r.batch.is_some() && r.forward.is_some()));
}

#[test]
fn lifecycle_cannot_skip_a_state() {
    let mut s = session_with_warehouse2();
    let c = s.instantiate("ct:Warehouse2T").unwrap();
    assert_eq!(
        kind(s.set_lifecycle(&c, Started).unwrap_err()),
        ViolationKind::IllegalTransition
    );
    assert_eq!(state(&s, &c).as_deref(), Some("UNDEPLOYED"));
}

#[test]
fn start_needs_wired_required_interfaces() {
    let mut s = session();
    let c = s.instantiate("ct:ShopT").unwrap();
    s.set_lifecycle(&c, Deployed).unwrap();
    assert_eq!(
        kind(s.set_lifecycle(&c, Started).unwrap_err()),
        ViolationKind::UnwiredStart
    );
}

#[test]
fn property_write_reaches_container() {
    let mut s = session();
    s.set_property(PROVIDER, "DHL").unwrap();
    let entry = &s.container().module("Shipment").unwrap().beans[0].entries[0];
    assert_eq!(entry.value, "DHL");
    assert_eq!(
        s.source()
            .text("Shipment.ShipmentBean.env.provider", "value"),
        Some("DHL")
    );
    assert_audited(&s);
}

#[test]
fn same_value_property_write_still_flushes() {
    let mut s = session();
    s.set_property(PROVIDER, "UPS").unwrap();
    let batch = s.log()[0].batch.clone().unwrap();
    assert_eq!(
        batch.commands,
        [EffectorCommand::SetEntry {
            entry: "Shipment.ShipmentBean.env.provider".into(),
            value: "UPS".into()
        }]
    );
    assert_eq!(
        s.container().module("Shipment").unwrap().beans[0].entries[0].value,
        "UPS"
    );
}

#[test]
fn unknown_property() {
    let mut s = session();
    assert!(matches!(
        s.set_property("pr:nope", "x"),
        Err(AdaptationError::UnknownProperty(_))
    ));
}

#[test]
fn reconnecting_yields_fresh_connector() {
    let mut s = session();
    s.disconnect("c2").unwrap();
    assert!(s.container().wiring("c2").is_none());
    assert!(!s.source().contains("c2"));
    let c = s.connect(SHOP_NEEDS_WAREHOUSING, WAREHOUSING).unwrap();
    assert_eq!(c, "c3");
    let w = s.container().wiring("c3").unwrap();
    assert_eq!(w.reference, "Shop.ShopBean.ref.IWarehousing");
    assert_eq!(w.interface, "Warehouse.WarehouseBean.if.IWarehousing");
    assert!(rtm_core::manager::scenario::connected(
        s.target(),
        "Shop",
        "Warehouse"
    ));
    assert_audited(&s);
}

#[test]
fn connect_checks_roles_and_types() {
    let mut s = session();
    s.disconnect("c1").unwrap();
    let e = s.connect(SHOP_NEEDS_SHIPMENT, WAREHOUSING).unwrap_err();
    assert_eq!(kind(e), ViolationKind::TypeMismatch);
    let e = s
        .connect(WAREHOUSING, "i:Shipment.ShipmentBean.if.IShipment")
        .unwrap_err();
    assert_eq!(kind(e), ViolationKind::RoleMismatch);
    let e = s.connect(SHOP_NEEDS_WAREHOUSING, WAREHOUSING).unwrap_err();
    assert_eq!(kind(e), ViolationKind::AlreadyWired);
    assert_eq!(s.violations().len(), 3);
}

#[test]
fn unknown_connector() {
    let mut s = session();
    assert!(matches!(
        s.disconnect("c7"),
        Err(AdaptationError::UnknownConnector(_))
    ));
}

#[test]
fn removal_preconditions_and_sequence() {
    let mut s = session();
    assert_eq!(
        kind(s.remove_component("c:Warehouse").unwrap_err()),
        ViolationKind::StillDeployed
    );
    assert_eq!(
        kind(s.remove_component_type("ct:WarehouseT").unwrap_err()),
        ViolationKind::TypeInUse
    );
    s.set_lifecycle("c:Shop", Deployed).unwrap();
    s.set_lifecycle("c:Warehouse", Deployed).unwrap();
    s.set_lifecycle("c:Warehouse", Undeployed).unwrap();
    assert_eq!(
        kind(s.remove_component("c:Warehouse").unwrap_err()),
        ViolationKind::StillWired
    );
    s.disconnect("c2").unwrap();
    s.remove_component("c:Warehouse").unwrap();
    assert!(!s.target().contains(WAREHOUSING));
    s.remove_component_type("ct:WarehouseT").unwrap();
    for gone in ["Warehouse", "WarehouseT"] {
        assert!(!s.source().contains(gone));
        assert!(s.container().module(gone).is_none() && s.container().template(gone).is_none());
    }
    assert_audited(&s);
}

#[test]
fn apply_routes_operator_edits() {
    let mut s = session();
    s.apply(TargetMutation::SetAttribute {
        uid: PROVIDER.into(),
        attribute: "value".into(),
        value: Value::text("DHL"),
    })
    .unwrap();
    s.apply(TargetMutation::DeleteElement { uid: "c2".into() })
        .unwrap();
    assert!(s.container().wiring("c2").is_none());
    assert!(s.violations().is_empty());
}

#[test]
fn deleting_required_interface_is_refused() {
    let mut s = session();
    let e = s
        .apply(TargetMutation::DeleteElement {
            uid: SHOP_NEEDS_WAREHOUSING.into(),
        })
        .unwrap_err();
    let v = e.violation().unwrap();
    assert_eq!(v.kind, ViolationKind::NotAnOperator);
    assert!(v
        .reason
        .contains("the component implementation requires the corresponding functionality"));
}

#[test]
fn invalid_attempts_leave_models_untouched() {
    let attempts = invalid_attempts();
    assert_eq!(attempts.len(), 10);
    let mut s = session();
    for (i, (label, attempt)) in attempts.iter().enumerate() {
        let before = s.dumps();
        let err = attempt.run(&mut s).unwrap_err();
        assert!(err.violation().is_some(), "{label}: {err}");
        assert_eq!(s.dumps(), before, "{label}");
        assert_eq!(s.violations().len(), i + 1);
    }
    assert!(s.log().is_empty());
    assert_audited(&s);
}

#[test]
fn batched_skip_fails_where_stepwise_succeeds() {
    let mut s = session_with_warehouse2();
    let c = s.instantiate("ct:Warehouse2T").unwrap();
    let before = s.dumps();

    let mut batched = AdaptationSession::attach(s.container().clone()).unwrap();
    batched.set_batched(true);
    assert_eq!(state(&batched, &c).as_deref(), Some("UNDEPLOYED"));
    batched.set_lifecycle(&c, Deployed).unwrap();
    batched.set_lifecycle(&c, Started).unwrap();
    let err = batched.commit().unwrap_err();
    assert!(
        matches!(
            err,
            AdaptationError::Platform(rtm_core::platform::PlatformError::IllegalTransition { .. })
        ),
        "{err}"
    );
    assert_eq!(
        batched.container().module("Warehouse2").unwrap().state,
        Undeployed
    );

    s.set_lifecycle(&c, Deployed).unwrap();
    s.set_lifecycle(&c, Started).unwrap();
    assert_eq!(s.container().module("Warehouse2").unwrap().state, Started);
    assert_ne!(s.dumps(), before);
    assert_audited(&s);
}

#[test]
fn dismissed_batch_restores_models() {
    let mut s = session();
    let before = s.dumps();
    s.set_batched(true);
    s.set_property(PROVIDER, "DHL").unwrap();
    s.disconnect("c1").unwrap();
    assert!(s.dismiss());
    assert_eq!(s.dumps(), before);
    assert!(!s.dismiss());
    assert_audited(&s);
}

#[test]
fn committed_batch_runs_one_ordered_command_batch() {
    let mut s = session();
    s.set_batched(true);
    s.set_property(PROVIDER, "DHL").unwrap();
    s.disconnect("c1").unwrap();
    let record = s.commit().unwrap();
    let names: Vec<&str> = record
        .batch
        .unwrap()
        .commands
        .iter()
        .map(EffectorCommand::name)
        .collect();
    assert_eq!(names, ["Unwire", "SetEntry"]);
    assert_audited(&s);
}

#[test]
fn step_log_serializes() {
    let mut s = session();
    s.set_property(PROVIDER, "DHL").unwrap();
    let json = serde_json::to_value(s.log()).unwrap();
    assert_eq!(json[0]["operator"], "set_property");
    assert_eq!(json[0]["batch"]["commands"][0]["command"], "SetEntry");
}

#[test]
fn lifecycle_state_names() {
    assert_eq!(
        LifecycleState::ALL.map(LifecycleState::as_str),
        ["UNDEPLOYED", "DEPLOYED", "STARTED"]
    );
}
