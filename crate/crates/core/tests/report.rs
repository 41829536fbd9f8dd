use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use slicegen_core::harness::*;
use slicegen_core::ir::IrProgram;
use slicegen_core::report::*;
use slicegen_core::slicer::*;
use slicegen_core::testgen::*;
use slicegen_testkit::*;

const SIGNATURE: [&str; 3] = ["NoSuchMethodError", "NoClassDefFoundError", "NoSuchFieldError"];
const KINDS: [&str; 7] = [
    "NoSuchMethodError",
    "NoClassDefFoundError",
    "NoSuchFieldError",
    "SecurityException",
    "IllegalStateException",
    "NullPointerException",
    "KeyChainException",
];

#[derive(Debug, Clone)]
enum Cell {
    Ok(Option<String>),
    Err(String),
}

fn row(cells: &[(u32, Cell)]) -> Vec<ExecutionOutcome> {
    cells
        .iter()
        .map(|(v, c)| ExecutionOutcome {
            test_id: "t1".into(),
            version: *v,
            status: match c {
                Cell::Ok(render) => OutcomeStatus::Success { render: render.clone() },
                Cell::Err(k) => OutcomeStatus::Error { error_kind: ErrorKind::from(k.clone()), at_index: 2 },
            },
        })
        .collect()
}

fn ok(r: &str) -> Cell {
    Cell::Ok(Some(r.into()))
}

fn err(k: &str) -> Cell {
    Cell::Err(k.into())
}

fn types(r: &[ExecutionOutcome]) -> Vec<IssueType> {
    classify_api("x", r).unwrap().into_iter().map(|i| i.issue_type).collect()
}

/// Issue types straight from the definitions, on plain strings.
fn oracle(cells: &[(u32, Cell)]) -> BTreeSet<IssueType> {
    let is_sig = |c: &Cell| matches!(c, Cell::Err(k) if SIGNATURE.contains(&k.as_str()));
    let sig: BTreeSet<&str> = cells.iter().filter_map(|(_, c)| match c {
        Cell::Err(k) if SIGNATURE.contains(&k.as_str()) => Some(k.as_str()),
        _ => None,
    }).collect();
    let rest: Vec<&Cell> = cells.iter().map(|(_, c)| c).filter(|c| !is_sig(c)).collect();
    let mut out = BTreeSet::new();
    if !sig.is_empty() && (!rest.is_empty() || sig.len() > 1) {
        out.insert(IssueType::Type1);
    }
    let semantic: BTreeSet<&str> = rest.iter().filter_map(|c| match c {
        Cell::Err(k) => Some(k.as_str()),
        Cell::Ok(_) => None,
    }).collect();
    let renders: BTreeSet<String> = rest.iter().filter_map(|c| match c {
        Cell::Ok(r) => Some(r.clone().unwrap_or_else(|| "void".into())),
        Cell::Err(_) => None,
    }).collect();
    if semantic.len() >= 2 || (!semantic.is_empty() && !renders.is_empty()) {
        out.insert(IssueType::Type2_1);
    }
    if renders.len() >= 2 {
        out.insert(IssueType::Type2_2);
    }
    out
}

#[test]
fn error_categories() {
    assert_eq!(categorize_error(&ErrorKind::NoSuchMethodError), ErrorClass::Signature);
    assert_eq!(categorize_error(&ErrorKind::SecurityException), ErrorClass::Semantic);
    assert_eq!(categorize_error(&ErrorKind::other("KeyChainException")), ErrorClass::Semantic);
    for k in KINDS {
        let want = if SIGNATURE.contains(&k) { ErrorClass::Signature } else { ErrorClass::Semantic };
        assert_eq!(categorize_error(&ErrorKind::from(k.to_string())), want, "{k}");
    }
}

#[test]
fn notification_row() {
    let cells: Vec<_> = (21..=30)
        .map(|v| (v, if v <= 22 { err("NoSuchMethodError") } else if v <= 27 { err("SecurityException") } else { ok("P@fresh-id-elided") }))
        .collect();
    let issues = classify_api("x", &row(&cells)).unwrap();
    assert_eq!(issues.iter().map(|i| i.issue_type).collect::<Vec<_>>(), [IssueType::Type1, IssueType::Type2_1]);
    assert_eq!(issues[0].error_kinds, [ErrorKind::NoSuchMethodError]);
    assert_eq!(issues[1].error_kinds, [ErrorKind::SecurityException]);
    assert_eq!(issues[0].evidence.len(), 10);
    assert_eq!(issues[1].evidence.len(), 8);
    assert_eq!(issues[0].test_id, "t1");
}

#[test]
fn shortcut_row() {
    let cells: Vec<_> = (21..=30).map(|v| (v, if v <= 23 { err("NoSuchMethodError") } else { ok("true") })).collect();
    let issues = classify_api("x", &row(&cells)).unwrap();
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].issue_type, IssueType::Type1);
    assert_eq!(issues[0].versions["NoSuchMethodError"], [21, 22, 23]);
    assert_eq!(issues[0].versions["none"], (24..=30).collect::<Vec<_>>());
}

#[test]
fn format_row() {
    let cells: Vec<_> = (21..=30)
        .map(|v| (v, ok(if v <= 22 { "\"1.0B\"" } else if v == 23 { "\"1.0 B\"" } else { "\"1 B\"" })))
        .collect();
    let issues = classify_api("x", &row(&cells)).unwrap();
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].issue_type, IssueType::Type2_2);
    assert_eq!(issues[0].versions.len(), 3);
    assert_eq!(issues[0].versions["\"1.0 B\""], [23]);
    assert!(issues[0].error_kinds.is_empty());
}

#[test]
fn quiet_and_degenerate_rows() {
    assert!(types(&row(&[(21, ok("1")), (22, ok("1")), (23, ok("1"))])).is_empty());
    assert!(types(&row(&[(21, Cell::Ok(None)), (22, Cell::Ok(None))])).is_empty());
    assert_eq!(types(&row(&[(21, Cell::Ok(None)), (22, ok("1"))])), [IssueType::Type2_2]);
    assert_eq!(types(&row(&[(21, err("NoSuchMethodError")), (22, err("NoClassDefFoundError"))])), [IssueType::Type1]);
    assert!(matches!(classify_api("x", &row(&[(21, ok("1"))])), Err(ReportError::InsufficientVersions(1))));
    assert!(matches!(classify_api("x", &row(&[(21, ok("1")), (21, ok("2"))])), Err(ReportError::InsufficientVersions(1))));
}

fn case_study_matrix() -> OutcomeMatrix {
    let profiles: Vec<FrameworkVersionProfile> = (21..=30)
        .map(|v| load_version_profile(&profile_dir("case_studies").join(format!("profile_v{v}.json"))).unwrap())
        .collect();
    let mut tests = Vec::new();
    for f in ["notification_policy", "shortcut_host", "format_short_file_size"] {
        let p: IrProgram = load_fixture(f);
        let ctx = AnalysisContext::new(&p);
        let cfg = SliceConfig::default();
        let targets = ["getNotificationPolicy", "hasShortcutHostPermission", "formatShortFileSize"];
        for site in locate_api_call_sites(&p, &BTreeSet::new()).unwrap() {
            if !targets.contains(&site.target.name.as_str()) {
                continue;
            }
            for t in split_branches_truncated(&ctx, &cfg, &site).unwrap().0 {
                let (g, c) = construct_test_case(&t, f, 0).unwrap();
                tests.push(g);
                tests.push(c);
            }
        }
    }
    let suite = emit_test_suite(tests, &(21..=30).collect::<Vec<_>>());
    run_matrix(&suite, &profiles, DEFAULT_STEP_BUDGET).unwrap()
}

#[test]
fn case_study_tallies() {
    let m = case_study_matrix();
    let dir = tempfile::tempdir().unwrap();
    let r = render_report(&m, dir.path()).unwrap();
    assert_eq!(r.tally(IssueType::Type1), 2);
    assert_eq!(r.tally(IssueType::Type2_1), 1);
    assert_eq!(r.tally(IssueType::Type2_2), 1);
    assert_eq!(r.validity.invalid, 0);
    assert_eq!(r.histogram.get("NoSuchMethodError"), Some(&2));
    assert_eq!(r.histogram.get("SecurityException"), Some(&1));
    let policy = "<android.app.NotificationManager: android.app.NotificationManager$Policy getNotificationPolicy()>";
    assert_eq!(r.issue_types(policy), [IssueType::Type1, IssueType::Type2_1]);

    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(json, r.to_json());
    assert!(text.contains("Type1                        2"), "{text}");

    let again = tempfile::tempdir().unwrap();
    render_report(&OutcomeMatrix::from_json(&m.to_json()).unwrap(), again.path()).unwrap();
    for f in ["report.json", "report.txt"] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(again.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn empty_matrix_report() {
    let m = OutcomeMatrix { versions: vec![21, 22], ..Default::default() };
    let issues = classify_matrix(&m).unwrap();
    let r = Report::build(&issues, &m);
    for t in IssueType::ALL {
        assert_eq!(r.tally(t), 0);
    }
    assert!(r.histogram.is_empty());
    assert_eq!(r.validity.valid, 0);
}

#[test]
fn one_issue_per_target_and_type() {
    let mk = |id: &str, cells: &[(u32, Cell)]| MatrixRow {
        test_id: id.into(),
        target: "x".into(),
        outcomes: row(cells).into_iter().map(|mut o| {
            o.test_id = id.into();
            o
        }).collect(),
    };
    let m = OutcomeMatrix {
        versions: vec![21, 22],
        rows: vec![
            mk("a", &[(21, err("NoSuchMethodError")), (22, ok("1"))]),
            mk("b", &[(21, err("NoSuchFieldError")), (22, ok("1"))]),
        ],
        invalid: vec![],
    };
    let issues = classify_matrix(&m).unwrap();
    assert_eq!(issues["x"].len(), 1);
    assert_eq!(issues["x"][0].test_id, "a");
}

fn cell_strategy() -> impl Strategy<Value = Cell> {
    prop_oneof![
        prop::sample::select(KINDS.to_vec()).prop_map(|k| Cell::Err(k.to_string())),
        prop::option::of(prop::sample::select(vec!["1", "2", "\"a\""])).prop_map(|r| Cell::Ok(r.map(String::from))),
    ]
}

fn row_strategy() -> impl Strategy<Value = Vec<(u32, Cell)>> {
    prop::collection::vec(cell_strategy(), 2..10).prop_map(|cs| cs.into_iter().enumerate().map(|(i, c)| (21 + i as u32, c)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn classification_matches_definitions(cells in row_strategy()) {
        let got: BTreeSet<IssueType> = types(&row(&cells)).into_iter().collect();
        prop_assert_eq!(got, oracle(&cells));
    }

    #[test]
    fn permutation_invariant(cells in row_strategy(), shuffle in any::<u64>()) {
        let base = classify_api("x", &row(&cells)).unwrap();
        let mut perm = cells.clone();
        let n = perm.len();
        for i in 0..n {
            perm.swap(i, (shuffle as usize).wrapping_add(i * 7) % n);
        }
        prop_assert_eq!(classify_api("x", &row(&perm)).unwrap(), base);
    }

    #[test]
    fn identical_rows_are_quiet(c in cell_strategy(), n in 2u32..10) {
        let cells: Vec<_> = (0..n).map(|i| (21 + i, c.clone())).collect();
        prop_assert!(types(&row(&cells)).is_empty());
    }

    #[test]
    fn issues_partition_their_versions(cells in row_strategy()) {
        let versions: BTreeSet<u32> = cells.iter().map(|(v, _)| *v).collect();
        for i in classify_api("x", &row(&cells)).unwrap() {
            prop_assert!(i.versions.len() >= 2, "{:?}", i);
            prop_assert!(i.versions.values().all(|vs| !vs.is_empty()));
            let mut seen = BTreeSet::new();
            for v in i.versions.values().flatten() {
                prop_assert!(seen.insert(*v));
                prop_assert!(versions.contains(v));
            }
            if i.issue_type == IssueType::Type1 {
                prop_assert_eq!(seen, versions.clone());
                prop_assert!(i.error_kinds.iter().all(|k| categorize_error(k) == ErrorClass::Signature));
            }
            if i.issue_type == IssueType::Type2_1 {
                prop_assert!(i.error_kinds.iter().all(|k| categorize_error(k) == ErrorClass::Semantic));
            }
        }
    }
}

#[test]
fn histogram_counts_kinds_per_issue() {
    let mut by_target = BTreeMap::new();
    let cells = [(21, err("NoSuchMethodError")), (22, err("SecurityException")), (23, err("IllegalStateException")), (24, ok("1"))];
    by_target.insert("x".to_string(), classify_api("x", &row(&cells)).unwrap());
    let r = Report::build(&by_target, &OutcomeMatrix { versions: vec![21, 22, 23, 24], ..Default::default() });
    let h: Vec<(&str, usize)> = r.histogram.iter().map(|(k, n)| (k.as_str(), *n)).collect();
    assert_eq!(h, [("IllegalStateException", 1), ("NoSuchMethodError", 1), ("SecurityException", 1)]);
}
