use proptest::prelude::*;

use rtm_core::kernel::{Model, Value};
use rtm_core::manager::fixture::{
    build_webshop_fixture, provided_interface, warehouse2_type, webshop_container,
};
use rtm_core::metamodels::{build_source_metamodel, LifecycleState};
use rtm_core::platform::{
    canonical_order, source_model_of, Adapter, CallOutcome, Container, EffectorCommand, EventKind,
    PlatformError,
};

const PROVIDER: &str = "Shipment.ShipmentBean.env.provider";

fn attached() -> (Adapter, Model) {
    let mut source = Model::new(build_source_metamodel());
    let adapter = Adapter::attach(webshop_container(), &mut source).unwrap();
    (adapter, source)
}

fn warehouse_iface() -> String {
    provided_interface("Warehouse", "WarehouseBean", "IWarehousing")
}

fn s(x: &str) -> String {
    x.to_string()
}

#[test]
fn attach_mirrors_container() {
    let (adapter, source) = attached();
    assert!(adapter.in_sync(&source).unwrap());
    assert_eq!(adapter.pending_commands(&source), 0);
    assert_eq!(source.text("Shop", "state"), Some("STARTED"));
    assert_eq!(source.text(PROVIDER, "value"), Some("UPS"));
}

#[test]
fn fixture_build_pumps_into_source() {
    let mut container = Container::new("server");
    let mut source = Model::new(build_source_metamodel());
    let mut adapter = Adapter::attach(Container::new("server"), &mut source).unwrap();
    build_webshop_fixture(&mut adapter, &mut source).unwrap();
    assert!(source.same_graph(&source_model_of(adapter.container()).unwrap()));
    rtm_core::manager::fixture::populate(&mut container).unwrap();
    assert!(matches!(
        rtm_core::manager::fixture::populate(&mut container),
        Err(rtm_core::manager::ManagerError::NonEmptyContainer)
    ));
}

#[test]
fn healing_commands_take_canonical_order() {
    use EffectorCommand::*;
    let mut cmds = vec![
        Start {
            module: s("Warehouse2"),
        },
        Wire {
            connector: s("c3"),
            reference: s("r"),
            interface: s("i"),
        },
        Deploy {
            module: s("Warehouse2"),
        },
        RemoveModuleType {
            module_type: s("WarehouseT"),
        },
        InstantiateModule {
            module: s("Warehouse2"),
            module_type: s("Warehouse2T"),
        },
        RemoveModule {
            module: s("Warehouse"),
        },
        Undeploy {
            module: s("Warehouse"),
        },
        Unwire { connector: s("c2") },
        Stop {
            module: s("Warehouse"),
        },
    ];
    canonical_order(&mut cmds);
    let names: Vec<&str> = cmds.iter().map(EffectorCommand::name).collect();
    assert_eq!(
        names,
        [
            "Stop",
            "Unwire",
            "Undeploy",
            "RemoveModule",
            "RemoveModuleType",
            "InstantiateModule",
            "Deploy",
            "Wire",
            "Start"
        ]
    );
}

#[test]
fn start_needs_deployment() {
    let mut c = webshop_container();
    c.install_module_type(warehouse2_type()).unwrap();
    c.administer(&EffectorCommand::InstantiateModule {
        module: s("W2"),
        module_type: s("Warehouse2T"),
    })
    .unwrap();
    let err = c
        .administer(&EffectorCommand::Start { module: s("W2") })
        .unwrap_err();
    assert_eq!(
        err,
        PlatformError::IllegalTransition {
            module: s("W2"),
            from: LifecycleState::Undeployed,
            to: LifecycleState::Started,
        }
    );
}

#[test]
fn start_needs_wired_references() {
    let mut c = webshop_container();
    c.administer(&EffectorCommand::Stop { module: s("Shop") })
        .unwrap();
    c.administer(&EffectorCommand::Unwire { connector: s("c2") })
        .unwrap();
    let err = c
        .administer(&EffectorCommand::Start { module: s("Shop") })
        .unwrap_err();
    assert!(matches!(err, PlatformError::UnwiredStart { module, .. } if module == "Shop"));
}

#[test]
fn removal_preconditions() {
    let mut c = webshop_container();
    let err = c
        .administer(&EffectorCommand::RemoveModule {
            module: s("Warehouse"),
        })
        .unwrap_err();
    assert_eq!(err, PlatformError::StillDeployed(s("Warehouse")));
    let err = c
        .administer(&EffectorCommand::RemoveModuleType {
            module_type: s("WarehouseT"),
        })
        .unwrap_err();
    assert_eq!(err, PlatformError::TypeInUse(s("WarehouseT")));
    let err = c
        .administer(&EffectorCommand::Wire {
            connector: s("c9"),
            reference: s("Shop.ShopBean.ref.IWarehousing"),
            interface: warehouse_iface(),
        })
        .unwrap_err();
    assert_eq!(
        err,
        PlatformError::AlreadyWired(s("Shop.ShopBean.ref.IWarehousing"))
    );
}

#[test]
fn batches_are_atomic() {
    let mut c = webshop_container();
    let before = c.clone();
    let err = c
        .execute_batch(
            &[
                EffectorCommand::Stop {
                    module: s("Warehouse"),
                },
                EffectorCommand::Start {
                    module: s("Nowhere"),
                },
            ],
            7,
        )
        .unwrap_err();
    assert_eq!(err, PlatformError::UnknownEntity(s("Nowhere")));
    assert_eq!(c, before);
    assert_eq!(c.pending_events(), 0);
}

#[test]
fn calls_need_a_started_module() {
    let mut c = webshop_container();
    c.administer(&EffectorCommand::Stop {
        module: s("Warehouse"),
    })
    .unwrap();
    let err = c
        .inject_call("Warehouse", "IWarehousing", CallOutcome::Ok)
        .unwrap_err();
    assert_eq!(err, PlatformError::NotStarted(s("Warehouse")));
    let err = c
        .inject_call("Shipment", "IWarehousing", CallOutcome::Ok)
        .unwrap_err();
    assert!(matches!(err, PlatformError::UnknownEntity(_)));
}

#[test]
fn calls_rotate_over_instances() {
    let mut c = webshop_container();
    let instances: Vec<String> = (0..4)
        .map(|_| {
            match c
                .inject_call("Warehouse", "IWarehousing", CallOutcome::Ok)
                .unwrap()
                .kind
            {
                EventKind::CallCompleted { instance, .. } => instance,
                other => panic!("unexpected event {other:?}"),
            }
        })
        .collect();
    assert_eq!(
        instances,
        [
            "Warehouse.WarehouseBean#1",
            "Warehouse.WarehouseBean#2",
            "Warehouse.WarehouseBean#3",
            "Warehouse.WarehouseBean#1"
        ]
    );
}

#[test]
fn pumped_calls_appear_in_source() {
    let (mut adapter, mut source) = attached();
    adapter
        .container_mut()
        .inject_call("Warehouse", "IWarehousing", CallOutcome::Ok)
        .unwrap();
    adapter
        .container_mut()
        .inject_call(
            "Warehouse",
            "IWarehousing",
            CallOutcome::Exception(s("LookupFailure")),
        )
        .unwrap();
    assert_eq!(adapter.pump_events(&mut source).unwrap(), 2);
    let ok = "Warehouse.WarehouseBean#1/call1";
    let failed = "Warehouse.WarehouseBean#2/call1";
    assert_eq!(source.slot(ok, "interface"), [warehouse_iface()]);
    assert!(source.slot(ok, "exception").is_empty());
    let ex = &source.slot(failed, "exception")[0];
    assert_eq!(source.text(ex, "exception_type"), Some("LookupFailure"));
    assert!(adapter.in_sync(&source).unwrap());
    assert_eq!(adapter.pending_commands(&source), 0);
}

#[test]
fn administered_changes_reach_source() {
    let (mut adapter, mut source) = attached();
    let c = adapter.container_mut();
    c.install_module_type(warehouse2_type()).unwrap();
    c.administer(&EffectorCommand::InstantiateModule {
        module: s("Warehouse2"),
        module_type: s("Warehouse2T"),
    })
    .unwrap();
    c.administer(&EffectorCommand::Deploy {
        module: s("Warehouse2"),
    })
    .unwrap();
    c.administer(&EffectorCommand::Start {
        module: s("Warehouse2"),
    })
    .unwrap();
    adapter.pump_events(&mut source).unwrap();
    assert!(source.contains("Warehouse2T"));
    assert_eq!(source.text("Warehouse2", "state"), Some("STARTED"));
    assert!(source.contains("Warehouse2.WarehouseBean#3"));
    assert!(adapter.in_sync(&source).unwrap());
}

#[test]
fn flushed_entry_write_skips_its_echo() {
    let (mut adapter, mut source) = attached();
    source
        .set_attribute(PROVIDER, "value", Value::text("DHL"))
        .unwrap();
    let batch = adapter.flush_commands(&mut source).unwrap();
    assert_eq!(batch.batch_id, 1);
    assert_eq!(
        batch.commands,
        [EffectorCommand::SetEntry {
            entry: s(PROVIDER),
            value: s("DHL")
        }]
    );
    assert_eq!(adapter.container().pending_events(), 1);
    assert_eq!(adapter.pump_events(&mut source).unwrap(), 0);
    assert_eq!(adapter.pending_commands(&source), 0);
    assert!(adapter.in_sync(&source).unwrap());
    let entry = &adapter.container().module("Shipment").unwrap().beans[0].entries[0];
    assert_eq!(entry.value, "DHL");
}

#[test]
fn failed_flush_leaves_container_and_queue() {
    let (mut adapter, mut source) = attached();
    let before = adapter.container().clone();
    source
        .set_attribute("Warehouse", "state", LifecycleState::Undeployed.value())
        .unwrap();
    let err = adapter.flush_commands(&mut source).unwrap_err();
    assert!(matches!(err, PlatformError::IllegalTransition { .. }));
    assert_eq!(adapter.container(), &before);
    assert_eq!(adapter.pending_commands(&source), 1);
}

#[test]
fn dismissed_changes_are_not_flushed() {
    let (mut adapter, mut source) = attached();
    source
        .set_attribute(PROVIDER, "value", Value::text("DHL"))
        .unwrap();
    assert_eq!(adapter.dismiss_pending(&mut source), 1);
    assert!(adapter.flush_commands(&mut source).unwrap().is_empty());
    assert!(!adapter.in_sync(&source).unwrap());
    adapter.reconcile(&mut source).unwrap();
    assert!(adapter.in_sync(&source).unwrap());
    assert_eq!(adapter.pending_commands(&source), 0);
}

#[test]
fn unmapped_source_edit_is_unsupported() {
    let (mut adapter, mut source) = attached();
    source
        .set_attribute("Shop", "name", Value::text("Store"))
        .unwrap();
    assert!(matches!(
        adapter.flush_commands(&mut source),
        Err(PlatformError::UnsupportedChange(_))
    ));
}

#[test]
fn events_serialize_flat() {
    let mut c = webshop_container();
    let ev = c
        .inject_call("Warehouse", "IWarehousing", CallOutcome::Exception(s("X")))
        .unwrap();
    let json = serde_json::to_value(&ev).unwrap();
    assert_eq!(json["event"], "CallCompleted");
    assert_eq!(json["exception"], "X");
    assert!(json.get("echo_of").is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn canonical_order_is_stable_sorted_permutation(seed in any::<u64>()) {
        let t = rtm_core::sweep::canonical_order_trial(seed);
        prop_assert!(t.passed, "{}", t.detail);
    }

    #[test]
    fn pumped_source_matches_container(calls in prop::collection::vec((0usize..3, prop::option::of("[A-C]")), 0..20)) {
        let (mut adapter, mut source) = attached();
        let targets = [("Warehouse", "IWarehousing"), ("Shipment", "IShipment"), ("Shop", "IWebshop")];
        for (t, ex) in calls {
            let outcome = ex.map_or(CallOutcome::Ok, CallOutcome::Exception);
            adapter.container_mut().inject_call(targets[t].0, targets[t].1, outcome).unwrap();
        }
        adapter.pump_events(&mut source).unwrap();
        prop_assert!(adapter.in_sync(&source).unwrap());
    }
}
