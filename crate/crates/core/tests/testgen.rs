use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use slicegen_core::harness::{execute_test, ErrorKind, OutcomeStatus};
use slicegen_core::ir::*;
use slicegen_core::slicer::*;
use slicegen_core::testgen::*;
use slicegen_testkit::{all_present_profile, load_fixture, method_sig, random_program, GenLimits};

const QUERY: &str = "<android.app.usage.NetworkStatsManager: android.app.usage.NetworkStats queryDetailsForUid(int,java.lang.String,long,long,int)>";

/// Generic and concrete tests for every trace variant of every site.
fn tests_for(p: &IrProgram, app: &str, seed: u64) -> Vec<(TestCase, TestCase)> {
    let ctx = AnalysisContext::new(p);
    let cfg = SliceConfig { seed, ..Default::default() };
    let mut out = Vec::new();
    for site in locate_api_call_sites(p, &BTreeSet::new()).unwrap() {
        for t in split_branches_truncated(&ctx, &cfg, &site).unwrap().0 {
            out.push(construct_test_case(&t, app, seed).unwrap());
        }
    }
    out
}

fn query_pair() -> (TestCase, TestCase) {
    let p = load_fixture("listing3");
    tests_for(&p, "listing3", 0).into_iter().find(|(g, _)| g.target == method_sig(QUERY)).unwrap()
}

fn names(t: &TestCase) -> Vec<&str> {
    t.invocation_sequence().iter().map(|m| m.name.as_str()).collect()
}

#[test]
fn listing4_concrete_shape() {
    let (_, c) = query_pair();
    assert_eq!(c.form, TestForm::Concrete);
    assert_eq!(
        names(&c),
        ["currentTimeMillis", "getPackageManager", "getPackageName", "getApplicationInfo", "getSystemService", "queryDetailsForUid"]
    );
    assert!(c.capture_return);
    assert_eq!(c.target_index, c.body.len() - 2);
    let IrStatement::AssignInvoke { var, call } = &c.body[c.target_index] else { panic!() };
    assert_eq!(call.callee, method_sig(QUERY));
    assert_eq!(&call.args[..3], [Operand::Const(Value::Int(0)), Operand::Const(Value::Str(String::new())), Operand::Const(Value::Long(0))]);
    assert!(call.args[3..].iter().all(|a| a.as_var().is_some()));
    assert_eq!(c.body.last(), Some(&IrStatement::Return { value: Operand::Var(var.clone()) }));
    assert!(c.body.iter().any(|s| matches!(s, IrStatement::AssignFieldLoad { field, .. } if field.name == "uid")));
    assert!(c.body.iter().all(|s| !matches!(s, IrStatement::IdentityParam { .. })));
    let printed: Vec<String> = c.body.iter().map(print_statement).collect();
    assert_eq!(printed[0], "var1 = staticinvoke <java.lang.System: long currentTimeMillis()>();");
}

#[test]
fn listing4_generic_shape() {
    let (g, c) = query_pair();
    assert_eq!(g.form, TestForm::Generic);
    assert_eq!(c.generic_id.as_deref(), Some(g.id.as_str()));
    let params: Vec<(usize, &str)> = g
        .body
        .iter()
        .filter_map(|s| match s {
            IrStatement::IdentityParam { index, ty, .. } => Some((*index, ty.as_str())),
            _ => None,
        })
        .collect();
    assert_eq!(params, [(0, "int"), (1, "java.lang.String"), (2, "long"), (3, "long"), (4, "int")]);
    assert_eq!(names(&g), ["getSystemService", "queryDetailsForUid"]);
    let call = g.body[g.target_index].invoke().unwrap();
    let vars: Vec<&str> = call.args.iter().filter_map(Operand::as_var).collect();
    assert_eq!(vars, ["var1", "var2", "var3", "var4", "var5"]);
}

#[test]
fn static_void_api_is_a_single_call() {
    let src = "framework {\n    class a.F;\n    static method <a.F: void ping()>;\n}\nclass a.B {\n    public static void m() {\n        staticinvoke <a.F: void ping()>();\n        return;\n    }\n}\n";
    let p = parse_program(src).unwrap();
    let (g, c) = tests_for(&p, "x", 0).pop().unwrap();
    assert_eq!(c.body.len(), 1);
    assert_eq!(c.target_index, 0);
    assert!(!c.capture_return);
    assert_eq!(g.body, c.body);
}

#[test]
fn dummy_terminal_becomes_seeded_constant() {
    let src = "framework {\n    class a.F;\n    static method <a.F: void take(int)>;\n}\nclass a.B {\n    public static void m(int) {\n        $i0 := @parameter0: int;\n        staticinvoke <a.F: void take(int)>($i0);\n        return;\n    }\n}\n";
    let p = parse_program(src).unwrap();
    let (_, c) = tests_for(&p, "x", 17).pop().unwrap();
    let target = method_sig("static <a.F: void take(int)>");
    // the uncalled method's parameter is the first automatic dummy of the run
    let seed = dummy_seed(17, &target.to_string(), "dummy0");
    let want: i32 = ChaCha8Rng::seed_from_u64(seed).gen();
    assert_eq!(print_statement(&c.body[0]), format!("var1 = {want};"));
    assert_eq!(print_statement(&c.body[1]), "staticinvoke <a.F: void take(int)>(var1);");
}

#[test]
fn incomplete_bindings_and_dangling_uses_are_rejected() {
    let p = load_fixture("listing3");
    let ctx = AnalysisContext::new(&p);
    let site = locate_api_call_sites(&p, &[method_sig(QUERY)].into_iter().collect()).unwrap().remove(0);
    let t = split_branches(&ctx, &SliceConfig::default(), &site).unwrap().remove(0);
    let mut short = t.clone();
    short.bindings.pop();
    assert!(matches!(
        construct_test_case(&short, "a", 0),
        Err(TestgenError::IncompleteBindings { expected: 5, found: 4, .. })
    ));
    let mut holed = t.clone();
    holed.statements.remove(0);
    assert!(matches!(construct_test_case(&holed, "a", 0), Err(TestgenError::DanglingUse(_))));
}

#[test]
fn equivalent_tests_across_apps() {
    let p = load_fixture("listing3");
    let first: Vec<TestCase> = tests_for(&p, "one", 0).into_iter().map(|(_, c)| c).collect();
    let second: Vec<TestCase> = tests_for(&p, "two", 0).into_iter().map(|(_, c)| c).collect();
    let n = first.len();
    let kept = eliminate_equivalent(first.into_iter().chain(second).collect());
    assert_eq!(kept.len(), n);
    assert!(kept.iter().all(|t| t.id.starts_with("one:")));
    assert!(eliminate_equivalent(Vec::new()).is_empty());
}

fn synthetic(id: &str, calls: &[&str], extra: usize) -> TestCase {
    let mut body: Vec<IrStatement> = (0..extra).map(|i| parse_statement(&format!("x{i} = {i};")).unwrap()).collect();
    body.extend(calls.iter().map(|c| parse_statement(&format!("staticinvoke <a.F: void {c}()>();")).unwrap()));
    TestCase {
        id: id.into(),
        target: method_sig("static <a.F: void f()>"),
        form: TestForm::Concrete,
        target_index: body.len() - 1,
        body,
        capture_return: false,
        generic_id: None,
        provenance: Provenance { app: "a".into(), class: "C".into(), method: "m".into(), stmt_index: 0, trace: 0, seed: 0 },
    }
}

#[test]
fn order_matters_for_equivalence() {
    let kept = eliminate_equivalent(vec![synthetic("1", &["g", "h", "f"], 0), synthetic("2", &["h", "g", "f"], 0)]);
    assert_eq!(kept.len(), 2);
}

#[test]
fn minimal_selection_examples() {
    let group = [synthetic("c", &["g"; 7], 0), synthetic("a", &["g"; 5], 0), synthetic("b", &["g"; 3], 0)];
    assert_eq!(select_minimal(&group).unwrap().id, "b");
    assert_eq!(select_minimal(&group[..1]).unwrap().id, "c");
    let tie = [synthetic("x", &["g", "g", "f"], 6), synthetic("y", &["g", "g", "f"], 3)];
    assert_eq!(select_minimal(&tie).unwrap().body.len(), 6);
    assert_eq!(select_minimal(&tie).unwrap().id, "y");
    assert!(matches!(select_minimal(&[]), Err(TestgenError::EmptyGroup)));
}

#[test]
fn empty_manifest_has_fixed_checksum() {
    let suite = emit_test_suite(Vec::new(), &[]);
    assert!(suite.tests.is_empty());
    let canonical = r#"{"targets":[],"tests":[],"version":1,"versions":[]}"#;
    let want: String = Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(suite.checksum, want);
    let loaded = load_test_suite(&manifest_json(&suite)).unwrap();
    assert_eq!(loaded, suite);
}

#[test]
fn listing4_pair_manifest() {
    let (g, c) = query_pair();
    let versions: Vec<u32> = (21..=30).collect();
    let suite = emit_test_suite(vec![c.clone(), g.clone()], &versions);
    let text = manifest_json(&suite);
    let j: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(j["tests"].as_array().unwrap().len(), 2);
    assert_eq!(j["versions"], serde_json::json!([21, 22, 23, 24, 25, 26, 27, 28, 29, 30]));
    assert_eq!(j["targets"], serde_json::json!([QUERY]));
    // sorted by target then id: concrete before generic
    assert_eq!(suite.tests[0].id, c.id);
    let again = manifest_json(&emit_test_suite(vec![g, c], &versions));
    assert_eq!(text.as_bytes(), again.as_bytes());
    assert_eq!(load_test_suite(&text).unwrap(), suite);
}

#[test]
fn manifest_file_round_trip() {
    let p = load_fixture("notification_policy");
    let tests: Vec<TestCase> = tests_for(&p, "n", 0).into_iter().flat_map(|(g, c)| [g, c]).collect();
    let suite = emit_test_suite(tests, &[21, 22]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("suite.json");
    write_test_suite(&suite, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    write_test_suite(&load_test_suite(std::str::from_utf8(&first).unwrap()).unwrap(), &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn manifest_rejects_tampering_and_unknown_versions() {
    let (g, c) = query_pair();
    let text = manifest_json(&emit_test_suite(vec![g, c], &[21]));
    let tampered = text.replacen("netstats", "wifi", 1);
    assert_ne!(tampered, text);
    let err = load_test_suite(&tampered).unwrap_err();
    assert!(err.to_string().contains("checksum mismatch"), "{err}");
    let future = text.replacen("\"version\": 1", "\"version\": 2", 1);
    let err = load_test_suite(&future).unwrap_err();
    assert!(err.to_string().contains("unsupported manifest version 2"), "{err}");
    assert!(load_test_suite("not json").is_err());
}

#[test]
fn suite_ids_unique_and_paired() {
    let mut all = Vec::new();
    for f in slicegen_testkit::ALL_FIXTURES {
        for (g, c) in tests_for(&load_fixture(f), f, 0) {
            all.push(g);
            all.push(c);
        }
    }
    let suite = emit_test_suite(all, &[21]);
    let ids: BTreeSet<&str> = suite.tests.iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids.len(), suite.tests.len());
    for c in suite.tests.iter().filter(|t| t.form == TestForm::Concrete) {
        let g = suite.get(c.generic_id.as_deref().unwrap()).unwrap();
        assert_eq!(g.form, TestForm::Generic);
        assert_eq!(g.target, c.target);
    }
}

fn generic_params_in_order(g: &TestCase) -> bool {
    let params: Vec<(usize, &str)> = g
        .body
        .iter()
        .filter_map(|s| match s {
            IrStatement::IdentityParam { index, ty, .. } => Some((*index, ty.as_str())),
            _ => None,
        })
        .collect();
    let want: Vec<(usize, &str)> = g.target.param_types.iter().map(String::as_str).enumerate().collect();
    params == want
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_tests_respect_invariants(seed in any::<u64>()) {
        let r = random_program(seed, GenLimits::default());
        let profile = all_present_profile(&r.program, 21);
        for (g, c) in tests_for(&r.program, "r", seed) {
            for t in [&g, &c] {
                let call = t.body[t.target_index].invoke().unwrap();
                prop_assert!(call.callee.same_member(&t.target));
                prop_assert_eq!(t.capture_return, !t.target.is_void());
            }
            prop_assert!(generic_params_in_order(&g));
            // concrete tests are closed
            let out = execute_test(&c, &profile);
            prop_assert!(!matches!(out.status.error_kind(), Some(ErrorKind::Other(k)) if k == "UseBeforeDef"), "{:?}", out);
            prop_assert!(matches!(out.status, OutcomeStatus::Success { .. }), "{:?}", out);
        }
    }

    #[test]
    fn elimination_is_idempotent_and_minimal_is_least(seed in any::<u64>()) {
        let r = random_program(seed, GenLimits { max_methods: 6, max_branches: 3 });
        let tests: Vec<TestCase> = tests_for(&r.program, "r", seed).into_iter().map(|(_, c)| c).collect();
        let once = eliminate_equivalent(tests.clone());
        let twice = eliminate_equivalent(once.clone());
        prop_assert_eq!(&once, &twice);
        let seqs: BTreeSet<Vec<String>> = once.iter().map(|t| t.invocation_sequence().iter().map(|s| target_key(s)).collect()).collect();
        prop_assert_eq!(seqs.len(), once.len());
        for t in &tests {
            let group: Vec<TestCase> = tests.iter().filter(|u| u.target == t.target).cloned().collect();
            let m = select_minimal(&group).unwrap();
            prop_assert!(group.iter().all(|u| m.invocation_count() <= u.invocation_count()));
        }
    }
}
