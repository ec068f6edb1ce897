use code2api::code_model::{normalize_type, parse_method_signature, ApiSignature};
use code2api::Language;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    language: Language,
    source: String,
    expected: Expected,
}

#[derive(Deserialize)]
struct Expected {
    method_name: String,
    params: Vec<(String, String)>,
    return_type: String,
    return_statements: Vec<String>,
    imports: Vec<String>,
    throws: Vec<String>,
}

fn cases() -> Vec<Case> {
    serde_json::from_str(include_str!("fixtures/signature_oracle.json")).unwrap()
}

fn check(case: &Case, sig: &ApiSignature) {
    let e = &case.expected;
    let params: Vec<_> = sig
        .params
        .iter()
        .map(|p| (p.type_text.clone(), p.name.clone()))
        .collect();
    assert_eq!(sig.method_name, e.method_name, "{}", case.name);
    assert_eq!(params, e.params, "{}", case.name);
    assert_eq!(sig.return_type, e.return_type, "{}", case.name);
    assert_eq!(sig.return_statements, e.return_statements, "{}", case.name);
    assert_eq!(sig.imports, e.imports, "{}", case.name);
    assert_eq!(sig.throws, e.throws, "{}", case.name);
}

#[test]
fn oracle_table_matches() {
    let cases = cases();
    assert_eq!(cases.len(), 30);
    for case in &cases {
        let sig = parse_method_signature(&case.source, case.language).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        check(case, &sig);
    }
}

#[test]
fn rendered_signatures_parse_back() {
    for case in cases() {
        let sig = parse_method_signature(&case.source, case.language).unwrap();
        let rendered = sig.render_source();
        let again = parse_method_signature(&rendered, case.language)
            .unwrap_or_else(|e| panic!("{}: {e}\n{rendered}", case.name));
        assert_eq!(sig, again, "{}", case.name);
    }
}

#[test]
fn normalized_types_are_fixed_points() {
    for case in cases() {
        let sig = parse_method_signature(&case.source, case.language).unwrap();
        let types = sig
            .params
            .iter()
            .map(|p| p.type_text.as_str())
            .chain([sig.return_type.as_str()]);
        for t in types {
            assert_eq!(normalize_type(t, case.language), t, "{}", case.name);
        }
    }
}

fn java_type() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("int".to_string()),
        Just("String".to_string()),
        Just("java.util.List".to_string()),
        Just("Map.Entry".to_string()),
        Just("@NonNull Integer".to_string()),
    ];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (inner.clone(), "[ ]{0,2}").prop_map(|(t, s)| format!("{t}{s}[]")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("Map < {a} ,{b} >")),
            inner.clone().prop_map(|t| format!("List<? extends {t}>")),
            inner.prop_map(|t| format!("{t} ...")),
        ]
    })
}

proptest! {
    #[test]
    fn normalize_type_is_idempotent(t in java_type()) {
        let once = normalize_type(&t, Language::Java);
        prop_assert_eq!(normalize_type(&once, Language::Java), once.clone());
        prop_assert!(!once.contains("  "));
    }
}
