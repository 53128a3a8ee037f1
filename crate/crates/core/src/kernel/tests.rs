use std::sync::Arc;

use proptest::prelude::*;

use super::*;

fn states() -> AttrKind {
    AttrKind::Enumeration(vec![
        "UNDEPLOYED".into(),
        "DEPLOYED".into(),
        "STARTED".into(),
    ])
}

fn mm() -> Arc<Metamodel> {
    Arc::new(
        Metamodel::builder("mini")
            .node("Named")
            .is_abstract()
            .attr("name", AttrKind::Text)
            .done()
            .node("Platform")
            .extends("Named")
            .contains("components", "Component", 0, None)
            .contains("connectors", "Connector", 0, None)
            .done()
            .node("Component")
            .extends("Named")
            .attr("state", states())
            .attr("weight", AttrKind::Integer)
            .contains("provided", "Interface", 1, None)
            .done()
            .node("Interface")
            .extends("Named")
            .refers("connectors", "Connector", 0, None)
            .done()
            .node("Connector")
            .extends("Named")
            .refers("required", "Interface", 1, Some(1))
            .refers("provided", "Interface", 1, Some(1))
            .done()
            .build()
            .unwrap(),
    )
}

fn wired() -> (Model, ListenerId) {
    let mut m = Model::new(mm());
    m.create_element(
        "Platform",
        Some("p"),
        [("name", Value::text("platform"))],
        Placement::Root,
    )
    .unwrap();
    for c in ["a", "b"] {
        m.create_element(
            "Component",
            Some(c),
            [("state", Value::text("STARTED"))],
            Placement::child("p", "components"),
        )
        .unwrap();
        m.create_element(
            "Interface",
            Some(&format!("{c}.i")),
            Vec::<(String, Value)>::new(),
            Placement::child(c, "provided"),
        )
        .unwrap();
    }
    m.create_element(
        "Connector",
        Some("c2"),
        Vec::<(String, Value)>::new(),
        Placement::child("p", "connectors"),
    )
    .unwrap();
    m.add_reference("c2", "required", "a.i").unwrap();
    m.add_reference("c2", "provided", "b.i").unwrap();
    m.add_reference("a.i", "connectors", "c2").unwrap();
    m.add_reference("b.i", "connectors", "c2").unwrap();
    let l = m.subscribe();
    (m, l)
}

#[test]
fn create_checks_preconditions() {
    let (mut m, _) = wired();
    assert_eq!(
        m.create_element(
            "Platform",
            Some("p"),
            Vec::<(String, Value)>::new(),
            Placement::Root
        ),
        Err(KernelError::DuplicateUid("p".into()))
    );
    assert_eq!(
        m.create_element(
            "Named",
            None,
            Vec::<(String, Value)>::new(),
            Placement::Root
        ),
        Err(KernelError::AbstractTypeInstantiation("Named".into()))
    );
    assert!(matches!(
        m.create_element(
            "Component",
            None,
            [("weight", Value::text("x"))],
            Placement::child("p", "components")
        ),
        Err(KernelError::AttributeKindMismatch { .. })
    ));
    // a failed create leaves nothing behind
    assert_eq!(m.len(), 6);
}

fn new_connector(m: &mut Model) -> String {
    m.create_element(
        "Connector",
        None,
        Vec::<(String, Value)>::new(),
        Placement::child("p", "connectors"),
    )
    .unwrap()
}

#[test]
fn fresh_uids_stay_above_supplied_ones() {
    let (mut m, _) = wired();
    // "c2" was supplied by the caller
    assert_eq!(new_connector(&mut m), "c3");
    assert_eq!(new_connector(&mut m), "c4");
}

#[test]
fn fresh_uids_are_never_reused() {
    let (mut m, _) = wired();
    m.delete_element("c2").unwrap();
    assert_eq!(new_connector(&mut m), "c3");
    m.delete_element("c3").unwrap();
    assert_eq!(new_connector(&mut m), "c4");
}

#[test]
fn set_attribute_reports_old_and_new() {
    let (mut m, l) = wired();
    m.set_attribute("a", "name", Value::text("UPS")).unwrap();
    m.set_attribute("a", "name", Value::text("DHL")).unwrap();
    let notes = m.drain_notifications(l);
    assert_eq!(notes.len(), 2);
    assert_eq!(notes[1].old_value, Some(Value::text("UPS")));
    assert_eq!(notes[1].new_value, Some(Value::text("DHL")));
}

#[test]
fn identity_write_still_notifies() {
    let (mut m, l) = wired();
    m.set_attribute("a", "state", Value::text("STARTED"))
        .unwrap();
    let notes = m.drain_notifications(l);
    assert_eq!(notes.len(), 1);
    assert_eq!(notes[0].old_value, notes[0].new_value);
}

#[test]
fn enumeration_guard() {
    let (mut m, l) = wired();
    assert!(matches!(
        m.set_attribute("a", "state", Value::text("RUNNING")),
        Err(KernelError::AttributeKindMismatch { .. })
    ));
    assert!(matches!(
        m.set_attribute("a", "colour", Value::text("red")),
        Err(KernelError::UnknownAttribute { .. })
    ));
    assert!(m.drain_notifications(l).is_empty());
}

#[test]
fn delete_leaf_emits_one_deletion() {
    let (mut m, l) = wired();
    m.create_element(
        "Component",
        Some("z"),
        Vec::<(String, Value)>::new(),
        Placement::child("p", "components"),
    )
    .unwrap();
    m.drain_notifications(l);
    m.delete_element("z").unwrap();
    let notes = m.drain_notifications(l);
    assert_eq!(notes.len(), 1);
    assert_eq!(notes[0].kind, ChangeKind::ElementDeleted);
}

#[test]
fn delete_cascades_children_first() {
    let (mut m, l) = wired();
    let removed = m.delete_element("b").unwrap();
    assert_eq!(removed, vec!["b".to_string(), "b.i".to_string()]);
    assert!(!m.contains("b.i"));
    let notes = m.drain_notifications(l);
    let deleted: Vec<&str> = notes
        .iter()
        .filter(|n| n.kind == ChangeKind::ElementDeleted)
        .map(|n| n.subject_uid.as_str())
        .collect();
    assert_eq!(deleted, vec!["b.i", "b"]);
    // the connector lost its provided end
    assert!(m.slot("c2", "provided").is_empty());
    m.check_integrity().unwrap();
}

#[test]
fn deleting_connector_clears_interface_slots() {
    let (mut m, l) = wired();
    m.delete_element("c2").unwrap();
    let notes = m.drain_notifications(l);

    // oracle: the only elements referring to c2 are the two interfaces, one
    // slot each; each loses c2 and then c2 itself goes
    let expected = vec![
        (ChangeKind::ReferenceRemoved, "a.i", Some("connectors")),
        (ChangeKind::ReferenceRemoved, "b.i", Some("connectors")),
        (ChangeKind::ElementDeleted, "c2", Some("connectors")),
    ];
    let got: Vec<_> = notes
        .iter()
        .map(|n| (n.kind, n.subject_uid.as_str(), n.feature.as_deref()))
        .collect();
    assert_eq!(got, expected);
    assert!(notes
        .windows(2)
        .all(|w| w[0].sequence_no < w[1].sequence_no));
}

#[test]
fn delete_unknown() {
    let (mut m, _) = wired();
    assert_eq!(
        m.delete_element("nope"),
        Err(KernelError::UnknownUid("nope".into()))
    );
}

#[test]
fn drain_semantics() {
    let (mut m, l) = wired();
    assert!(m.drain_notifications(l).is_empty());
    m.set_attribute("a", "name", Value::text("x")).unwrap();
    m.set_attribute("b", "name", Value::text("y")).unwrap();
    m.set_attribute("p", "name", Value::text("z")).unwrap();
    let notes = m.drain_notifications(l);
    assert_eq!(notes.len(), 3);
    assert!(notes
        .windows(2)
        .all(|w| w[0].sequence_no < w[1].sequence_no));
    assert!(m.drain_notifications(l).is_empty());
}

#[test]
fn muted_listener_misses_changes() {
    let (mut m, l) = wired();
    let other = m.subscribe();
    m.set_muted(l, true);
    m.set_attribute("a", "name", Value::text("x")).unwrap();
    m.set_muted(l, false);
    assert!(m.drain_notifications(l).is_empty());
    assert_eq!(m.drain_notifications(other).len(), 1);
}

#[test]
fn cardinality_only_reported_on_request() {
    let mut m = Model::new(mm());
    m.create_element(
        "Platform",
        Some("p"),
        Vec::<(String, Value)>::new(),
        Placement::Root,
    )
    .unwrap();
    // a component without its mandatory provided interface is allowed mid-mutation
    m.create_element(
        "Component",
        Some("a"),
        Vec::<(String, Value)>::new(),
        Placement::child("p", "components"),
    )
    .unwrap();
    let v = m.cardinality_violations();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].reference, "provided");
}

#[test]
fn json_round_trip_is_stable() {
    let (m, _) = wired();
    let text = json::to_string_pretty(&m);
    let back = json::from_str(&text, mm()).unwrap();
    assert!(back.same_content(&m));
    assert_eq!(json::to_string_pretty(&back), text);
}

#[test]
fn json_rejects_foreign_documents() {
    let err = json::from_str(r#"{"metamodel":"other","elements":[]}"#, mm());
    assert!(matches!(err, Err(KernelError::Json(_))));
}

// ---- randomized mutation sequences -------------------------------------

#[derive(Debug, Clone)]
enum Op {
    AddComponent,
    AddConnector(u8, u8),
    SetName(u8, u8),
    SetState(u8, u8),
    Delete(u8),
    Unlink(u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::AddComponent),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::AddConnector(a, b)),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::SetName(a, b)),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Op::SetState(a, b)),
        any::<u8>().prop_map(Op::Delete),
        any::<u8>().prop_map(Op::Unlink),
    ]
}

fn pick(m: &Model, ty: &str, k: u8) -> Option<String> {
    let all: Vec<String> = m.elements_of_type(ty).map(|e| e.uid.clone()).collect();
    (!all.is_empty()).then(|| all[k as usize % all.len()].clone())
}

fn apply(m: &mut Model, op: &Op) {
    match op {
        Op::AddComponent => {
            let c = m
                .create_element(
                    "Component",
                    None,
                    Vec::<(String, Value)>::new(),
                    Placement::child("p", "components"),
                )
                .unwrap();
            m.create_element(
                "Interface",
                None,
                Vec::<(String, Value)>::new(),
                Placement::child(c, "provided"),
            )
            .unwrap();
        }
        Op::AddConnector(a, b) => {
            if let (Some(x), Some(y)) = (pick(m, "Interface", *a), pick(m, "Interface", *b)) {
                let c = m
                    .create_element(
                        "Connector",
                        None,
                        Vec::<(String, Value)>::new(),
                        Placement::child("p", "connectors"),
                    )
                    .unwrap();
                m.add_reference(&c, "required", &x).unwrap();
                m.add_reference(&c, "provided", &y).unwrap();
                m.add_reference(&x, "connectors", &c).unwrap();
                if x != y {
                    m.add_reference(&y, "connectors", &c).unwrap();
                }
            }
        }
        Op::SetName(a, v) => {
            if let Some(x) = pick(m, "Named", *a) {
                m.set_attribute(&x, "name", Value::text(format!("n{v}")))
                    .unwrap();
            }
        }
        Op::SetState(a, v) => {
            if let Some(x) = pick(m, "Component", *a) {
                let s = ["UNDEPLOYED", "DEPLOYED", "STARTED"][*v as usize % 3];
                m.set_attribute(&x, "state", Value::text(s)).unwrap();
            }
        }
        Op::Delete(a) => {
            if let Some(x) = pick(m, "Named", *a) {
                if x != "p" {
                    m.delete_element(&x).unwrap();
                }
            }
        }
        Op::Unlink(a) => {
            if let Some(x) = pick(m, "Connector", *a) {
                if let Some(t) = m.slot(&x, "required").first().cloned() {
                    m.remove_reference(&x, "required", &t).unwrap();
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn index_is_reachable_set(ops in prop::collection::vec(op(), 0..40)) {
        let (mut m, _) = wired();
        for o in &ops {
            apply(&mut m, o);
            prop_assert!(m.check_integrity().is_ok(), "{:?}", m.check_integrity());
        }
    }

    #[test]
    fn replaying_notifications_reproduces_state(ops in prop::collection::vec(op(), 0..40)) {
        let (mut m, l) = wired();
        let mut copy = m.clone();
        for o in &ops {
            apply(&mut m, o);
        }
        for n in m.drain_notifications(l) {
            copy.apply_notification(&n).unwrap();
        }
        prop_assert!(copy.same_content(&m));
    }

    #[test]
    fn json_round_trip(ops in prop::collection::vec(op(), 0..25)) {
        let (mut m, _) = wired();
        for o in &ops {
            apply(&mut m, o);
        }
        let text = json::to_string_pretty(&m);
        let back = json::from_str(&text, mm()).unwrap();
        prop_assert!(back.same_content(&m));
    }
}
