use proptest::prelude::*;

use super::*;
use crate::metamodels::{build_source_metamodel, build_target_metamodel};
use crate::sweep::{dsl_fuzz_trial, near_miss};

fn parse(text: &str) -> Result<RuleDocument, Vec<ParseDiagnostic>> {
    parse_rules(text, &build_source_metamodel(), &build_target_metamodel())
}

fn kinds(text: &str) -> Vec<DiagnosticKind> {
    parse(text)
        .unwrap_err()
        .into_iter()
        .map(|d| d.kind)
        .collect()
}

const PLATFORM_RULE: &str = r#"
rule P {
  source { new ec:EjbContainer; }
  corr   { new cc:CorrContainer (src: ec; tgt: p); }
  target { new p:ComponentPlatform; }
  attr   { fwd p.uid := "p:" + ec.uid; fwd p.name := ec.name; }
}
"#;

#[test]
fn shipped_file_has_eleven_rules() {
    let doc = parse(BUILTIN_RULES).unwrap();
    let names: Vec<&str> = doc.rules.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(
        names,
        [
            "ContainerToPlatform",
            "ModuleTypeToComponentType",
            "EntryTypeToPropertyType",
            "ReferenceTypeToRequiredInterfaceType",
            "InterfaceTypeToProvidedInterfaceType",
            "ModuleToComponent",
            "EntryToProperty",
            "ReferenceToRequiredInterface",
            "EjbInterfaceToInterface",
            "ConnectorToConnector",
            "ExceptionToFailure",
        ]
    );
    assert_eq!(doc.spans.len(), 11);
    assert_eq!(doc.spans[0].rule, Pos { line: 5, column: 6 });
}

#[test]
fn ejb_interface_rule_shape() {
    let doc = parse(BUILTIN_RULES).unwrap();
    let r = doc
        .rules
        .iter()
        .find(|r| r.name == "EjbInterfaceToInterface")
        .unwrap();
    assert_eq!(r.source.create_vars(), ["ei"]);
    assert_eq!(r.target.create_vars(), ["i"]);
    assert_eq!(r.corr_type(), "CorrEjbInterface");
    assert!(r.aggregate.is_none());
    assert!(!r.creates_backward());
}

#[test]
fn printing_is_a_fixpoint() {
    let doc = parse(BUILTIN_RULES).unwrap();
    let printed = print_rules(&doc);
    let again = parse(&printed).unwrap();
    assert_eq!(again, doc);
    assert_eq!(print_rules(&again), printed);
    assert_eq!(doc.to_string(), printed);
}

#[test]
fn empty_document_prints_empty() {
    let doc = parse("  // nothing\n").unwrap();
    assert!(doc.rules.is_empty());
    assert_eq!(print_rules(&doc), "");
}

#[test]
fn declaration_order_does_not_matter() {
    let a = parse(PLATFORM_RULE).unwrap();
    let b = parse(&PLATFORM_RULE.replace(
        r#"fwd p.uid := "p:" + ec.uid; fwd p.name := ec.name;"#,
        r#"fwd p.name := ec.name; fwd p.uid := "p:" + ec.uid;"#,
    ))
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(print_rules(&a), print_rules(&b));
}

#[test]
fn rule_without_corr_is_dangling() {
    let d = parse("rule X {}").unwrap_err();
    assert_eq!(d[0].kind, DiagnosticKind::DanglingCorrReference);
    assert_eq!((d[0].line, d[0].column), (1, 6));
    assert_eq!(d[0].severity, Severity::Error);
}

#[test]
fn corr_naming_undeclared_variable_is_dangling() {
    let text = PLATFORM_RULE.replace("(src: ec; tgt: p)", "(src: ec; tgt: q)");
    assert!(kinds(&text).contains(&DiagnosticKind::DanglingCorrReference));
}

#[test]
fn target_type_in_source_is_domain_mixup() {
    let text = PLATFORM_RULE.replace("new ec:EjbContainer", "new ec:ComponentPlatform");
    let d = parse(&text).unwrap_err();
    assert_eq!(d[0].kind, DiagnosticKind::DomainMixup);
    assert_eq!(d[0].line, 3);
}

#[test]
fn unknown_type_is_reported() {
    let text = PLATFORM_RULE.replace("new p:ComponentPlatform", "new p:Platfrom");
    let d = parse(&text).unwrap_err();
    assert_eq!(d[0].kind, DiagnosticKind::UnknownNodeType);
    assert_eq!((d[0].line, d[0].column), (5, 18));
}

#[test]
fn missing_semicolon_is_syntax_error() {
    let text = PLATFORM_RULE.replace("new ec:EjbContainer;", "new ec:EjbContainer");
    let d = parse(&text).unwrap_err();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].kind, DiagnosticKind::SyntaxError);
    assert_eq!(d[0].line, 3);
}

#[test]
fn unterminated_string_is_syntax_error() {
    let d = parse("rule X { attr { fwd p.uid := \"p: ; } }").unwrap_err();
    assert_eq!(d[0].kind, DiagnosticKind::SyntaxError);
    assert_eq!(d[0].line, 1);
}

#[test]
fn unknown_reference_is_invalid_rule() {
    let text = BUILTIN_RULES.replace("edge ec.moduleTypes -> mt;", "edge ec.moduleTypez -> mt;");
    assert!(kinds(&text).contains(&DiagnosticKind::InvalidRule));
}

#[test]
fn duplicate_rule_names_are_invalid() {
    let text = format!("{PLATFORM_RULE}{PLATFORM_RULE}");
    assert_eq!(kinds(&text), [DiagnosticKind::InvalidRule]);
}

#[test]
fn diagnostics_serialize() {
    let d = parse("rule X {}").unwrap_err();
    let json = serde_json::to_value(&d[0]).unwrap();
    assert_eq!(json["severity"], "error");
    assert_eq!(json["kind"], "DanglingCorrReference");
    assert_eq!(json["line"], 1);
}

#[test]
fn builtin_rules_load() {
    assert_eq!(builtin_rules().len(), 11);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn near_misses_never_panic(seed in any::<u64>()) {
        let t = dsl_fuzz_trial(seed);
        prop_assert!(t.passed, "{}", t.detail);
    }

    #[test]
    fn near_miss_is_deterministic(seed in any::<u64>()) {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(near_miss(&mut a, BUILTIN_RULES), near_miss(&mut b, BUILTIN_RULES));
    }

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        if let Err(d) = parse(&text) {
            prop_assert!(!d.is_empty());
            prop_assert!(d.iter().all(|d| d.line >= 1 && d.column >= 1));
        }
    }
}
