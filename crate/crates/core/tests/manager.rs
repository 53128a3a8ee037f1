use rtm_core::adaptation::AdaptationSession;
use rtm_core::kernel::Value;
use rtm_core::manager::fixture::webshop_container;
use rtm_core::manager::scenario::{connected, parse_script, Action, Expectation, Stimulus, View};
use rtm_core::manager::{run_self_healing, HealingPolicy, ManagerError, SelfHealingManager};
use rtm_core::platform::CallOutcome;

const SCRIPT: &str = include_str!("../../../scenarios/self-healing.json");
const WAREHOUSING: &str = "i:Warehouse.WarehouseBean.if.IWarehousing";

fn failing_session(n: usize) -> AdaptationSession {
    let mut s = AdaptationSession::attach(webshop_container()).unwrap();
    for _ in 0..n {
        s.container_mut()
            .inject_call(
                "Warehouse",
                "IWarehousing",
                CallOutcome::Exception("LookupFailure".into()),
            )
            .unwrap();
    }
    s.monitor().unwrap();
    s
}

#[test]
fn shipped_scenario_heals_warehouse() {
    let script = parse_script(SCRIPT).unwrap();
    let r = run_self_healing(HealingPolicy::default(), &script, 0).unwrap();
    let failed: Vec<_> = r.assertions.iter().filter(|a| !a.passed).collect();
    assert!(r.passed, "{failed:?}");
    assert_eq!(r.ticks.len(), 4);
    let healed: Vec<_> = r
        .ticks
        .iter()
        .filter(|t| !t.healings.is_empty())
        .map(|t| t.tick)
        .collect();
    assert_eq!(healed, [2]);
    let h = &r.ticks[2].healings[0];
    assert_eq!(h.replacement, "c:Warehouse2");
    assert_eq!(h.plan.faulty, "c:Warehouse");
    assert_eq!(h.plan.replacement_type, "ct:Warehouse2T");
    assert_eq!(h.symptom.failures, 3);
    let ops: Vec<&str> = r.steps.iter().map(|s| s.operator.as_str()).collect();
    assert_eq!(
        ops,
        [
            "instantiate",
            "set_lifecycle",
            "set_lifecycle",
            "disconnect",
            "connect",
            "set_lifecycle",
            "set_lifecycle",
            "remove_component",
            "remove_component_type"
        ]
    );
    assert!(r
        .assertions
        .iter()
        .any(|a| a.name.starts_with("manager confined to target model") && a.passed));
    assert!(
        r.assertions
            .iter()
            .filter(|a| a.name.starts_with("audit after step"))
            .count()
            >= 9
    );
}

#[test]
fn trace_is_json() {
    let script = parse_script(SCRIPT).unwrap();
    let r = run_self_healing(HealingPolicy::default(), &script, 0).unwrap();
    let json: serde_json::Value = serde_json::from_str(&r.trace_json()).unwrap();
    assert_eq!(json["passed"], true);
    assert_eq!(json["policy"]["failure_threshold"], 3);
    assert!(json["final_target"].is_object());
}

#[test]
fn high_threshold_leaves_system_alone() {
    let script: Vec<Stimulus> = parse_script(SCRIPT)
        .unwrap()
        .into_iter()
        .filter(|s| s.at < 3 && !matches!(s.action, Action::Expect(_)))
        .collect();
    let r = run_self_healing(HealingPolicy::new(10).unwrap(), &script, 0).unwrap();
    assert!(r.passed);
    assert!(r.ticks.iter().all(|t| t.healings.is_empty()));
    assert!(r.steps.is_empty());
}

#[test]
fn zero_threshold_is_rejected() {
    assert!(matches!(
        HealingPolicy::new(0),
        Err(ManagerError::InvalidPolicy(_))
    ));
}

#[test]
fn failed_expectation_fails_run() {
    let mut script = parse_script(SCRIPT).unwrap();
    script.push(Stimulus {
        at: 3,
        action: Action::Expect(Expectation {
            present: vec![(View::Target, "c:Warehouse".into())],
            ..Expectation::default()
        }),
    });
    let r = run_self_healing(HealingPolicy::default(), &script, 0).unwrap();
    assert!(!r.passed);
    assert_eq!(r.assertions.iter().filter(|a| !a.passed).count(), 1);
}

#[test]
fn malformed_script_is_reported() {
    assert!(matches!(
        parse_script("[{\"at\": 0}]"),
        Err(ManagerError::Script(_))
    ));
    assert!(matches!(
        parse_script("not json"),
        Err(ManagerError::Script(_))
    ));
}

#[test]
fn random_calls_follow_seed() {
    let script = parse_script(
        r#"[{ "at": 0, "action": "random_calls", "args": { "module": "Warehouse", "interface": "IWarehousing",
              "exception": "Timeout", "count": 40, "failure_rate": 0.5 } }]"#,
    )
    .unwrap();
    let policy = HealingPolicy::new(1000).unwrap();
    let a = run_self_healing(policy, &script, 11).unwrap();
    let b = run_self_healing(policy, &script, 11).unwrap();
    assert_eq!(a.final_target, b.final_target);
    let count = a.final_target.to_string().matches("Timeout").count();
    assert!(count > 0);
}

#[test]
fn analyze_sums_failures_per_interface() {
    let s = failing_session(2);
    let m = SelfHealingManager::new(HealingPolicy::new(2).unwrap());
    let symptoms = m.analyze(s.target());
    assert_eq!(symptoms.len(), 1);
    assert_eq!(symptoms[0].interface, WAREHOUSING);
    assert_eq!(symptoms[0].interface_type, "IWarehousing");
    assert_eq!(symptoms[0].component, "c:Warehouse");
    assert!(SelfHealingManager::new(HealingPolicy::new(3).unwrap())
        .analyze(s.target())
        .is_empty());
}

#[test]
fn plan_needs_an_alternative_type() {
    let s = failing_session(3);
    let m = SelfHealingManager::default();
    let symptom = m.analyze(s.target()).remove(0);
    assert!(matches!(
        m.plan(s.target(), &symptom),
        Err(ManagerError::NoAlternativeType(_))
    ));
}

#[test]
fn failure_counts_aggregate() {
    for n in [1usize, 5, 50] {
        let s = failing_session(n);
        let t = s.target();
        let failures = t.slot(WAREHOUSING, "failures");
        assert_eq!(failures.len(), 1);
        assert_eq!(
            t.attr(&failures[0], "count").and_then(Value::as_int),
            Some(n as i64)
        );
        assert_eq!(t.elements_of_type("Failure").count(), 1);
    }
}

#[test]
fn connection_query() {
    let s = AdaptationSession::attach(webshop_container()).unwrap();
    assert!(connected(s.target(), "Shop", "Warehouse"));
    assert!(connected(s.target(), "Shop", "Shipment"));
    assert!(!connected(s.target(), "Warehouse", "Shop"));
}

#[test]
fn no_failures_leave_fixture_unchanged() {
    let script = parse_script(
        r#"[{ "at": 0, "action": "install_type", "args": { "module_type": "Warehouse2T" } },
            { "at": 1, "action": "inject_call", "args": { "module": "Warehouse", "interface": "IWarehousing", "count": 4 } }]"#,
    )
    .unwrap();
    let r = run_self_healing(HealingPolicy::default(), &[], 0).unwrap();
    let [target, source, corr, container] = AdaptationSession::attach(webshop_container())
        .unwrap()
        .dumps();
    assert_eq!(
        (
            r.final_target,
            r.final_source,
            r.final_corr,
            r.final_container
        ),
        (target, source, corr, container)
    );
    let r = run_self_healing(HealingPolicy::default(), &script, 0).unwrap();
    assert!(r.passed && r.steps.is_empty());
}

#[test]
fn failures_without_alternative_type() {
    let script = parse_script(
        r#"[{ "at": 0, "action": "inject_call", "args": { "module": "Warehouse", "interface": "IWarehousing",
              "exception": "LookupFailure", "count": 3 } }]"#,
    )
    .unwrap();
    let err = run_self_healing(HealingPolicy::default(), &script, 0).unwrap_err();
    assert!(matches!(err, ManagerError::NoAlternativeType(i) if i == WAREHOUSING));
}

#[test]
fn traces_are_deterministic() {
    let script = parse_script(SCRIPT).unwrap();
    let a = run_self_healing(HealingPolicy::default(), &script, 5)
        .unwrap()
        .trace_json();
    let b = run_self_healing(HealingPolicy::default(), &script, 5)
        .unwrap()
        .trace_json();
    assert_eq!(a, b);
}
