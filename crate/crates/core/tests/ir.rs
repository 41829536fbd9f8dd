use proptest::prelude::*;
use slicegen_core::ir::*;
use slicegen_testkit::{fixture_source, load_fixture, random_program, GenLimits, ALL_FIXTURES};

fn kinds(ds: &[Diagnostic]) -> Vec<DiagnosticKind> {
    ds.iter().map(|d| d.kind).collect()
}

fn program(body: &str) -> String {
    format!(
        "framework {{\n    class a.F;\n    method <a.F: int f(int)>;\n    static method <a.F: a.F make()>;\n}}\nclass a.App {{\n    public static int m(int) {{\n{body}\n    }}\n}}\n"
    )
}

#[test]
fn empty_class() {
    let p = parse_program("class A {}").unwrap();
    assert_eq!(p.classes.len(), 1);
    assert!(p.classes["A"].methods.is_empty());
}

#[test]
fn listing3_transliteration() {
    let p = load_fixture("listing3");
    let class = &p.classes["com.eyoung.myutils.DeviceInfoUtil"];
    let names: Vec<&str> = class.methods.iter().map(|m| m.signature.name.as_str()).collect();
    assert_eq!(names, ["getNetworkStatsManager", "getUid", "getCurAppFlow"]);
    let called: std::collections::BTreeSet<String> = p
        .methods()
        .flat_map(|m| m.body.iter().filter_map(|s| s.invoke()))
        .filter(|c| p.is_framework_method(&c.callee))
        .map(|c| c.callee.name.clone())
        .collect();
    let want = ["currentTimeMillis", "getApplicationInfo", "getPackageManager", "getPackageName", "getSystemService", "queryDetailsForUid"];
    assert_eq!(called.iter().map(String::as_str).collect::<Vec<_>>(), want);
    let uid = FieldSignature::new("android.content.pm.ApplicationInfo", "int", "uid");
    assert!(p.methods().any(|m| m.body.iter().any(|s| matches!(s, IrStatement::AssignFieldLoad { field, .. } if *field == uid))));
    let q = p.framework.methods.iter().find(|m| m.name == "queryDetailsForUid").unwrap();
    assert_eq!(q.to_string(), "<android.app.usage.NetworkStatsManager: android.app.usage.NetworkStats queryDetailsForUid(int,java.lang.String,long,long,int)>");
    assert!(validate_program(&p).is_empty());
}

#[test]
fn undefined_variable_is_reported_with_its_statement() {
    let src = fixture_source("listing3").replace(
        "$r2 = virtualinvoke $r0.<android.content.Context: java.lang.String getPackageName()>();\n",
        "",
    );
    let src = src.replace("getApplicationInfo(java.lang.String,int)>($r2, 1)", "getApplicationInfo(java.lang.String,int)>(r9, 1)");
    let ds = parse_program(&src).unwrap_err();
    let d = ds.iter().find(|d| d.message.contains("r9")).expect("diagnostic naming r9");
    assert_eq!(d.kind, DiagnosticKind::UnresolvedReference);
    assert_eq!(d.locus.stmt, Some(2));
    assert!(d.locus.method.as_deref().unwrap().contains("getUid"));
}

#[test]
fn syntax_errors_carry_positions() {
    let ds = parse_program("class A {\n    public static void m() {\n        x = ;\n    }\n}\n").unwrap_err();
    assert_eq!(ds[0].kind, DiagnosticKind::SyntaxError);
    assert_eq!(ds[0].locus.line, Some(3));
    assert!(ds[0].locus.col.is_some());
}

#[test]
fn missing_label() {
    let p = parse_syntax(&program("        $i0 := @parameter0: int;\n        goto nowhere;\n        return $i0;")).unwrap();
    assert_eq!(kinds(&validate_program(&p)), [DiagnosticKind::MissingLabel]);
}

#[test]
fn use_before_def_on_one_branch() {
    let body = "        $i0 := @parameter0: int;
        if $i0 goto other;
        $i1 = 1;
        goto join;
    other:
        $i2 = 2;
    join:
        return $i1;";
    let p = parse_syntax(&program(body)).unwrap();
    let ds = validate_program(&p);
    assert_eq!(kinds(&ds), [DiagnosticKind::UseBeforeDef]);
    assert_eq!(ds[0].locus.stmt, Some(7));

    // brute force: exactly one of the two entry-to-return paths misses the def
    let m = p.methods().next().unwrap();
    let paths = [vec![0, 1, 2, 3, 6, 7], vec![0, 1, 4, 5, 6, 7]];
    let missing = paths.iter().filter(|path| !path.iter().any(|&i| m.body[i].def() == Some("$i1"))).count();
    assert_eq!(missing, 1);
}

#[test]
fn validator_catches_each_mutation() {
    let cases: [(&str, DiagnosticKind); 6] = [
        ("        $i0 := @parameter0: int;\n        $i1 := @parameter0: int;\n        return $i0;", DiagnosticKind::DuplicateParamIndex),
        ("        $i0 := @parameter3: int;\n        return $i0;", DiagnosticKind::BadParamIndex),
        ("        $i0 := @parameter0: int;\n    l:\n    l:\n        return $i0;", DiagnosticKind::DuplicateLabel),
        (
            "        $i0 := @parameter0: int;\n        $r0 = staticinvoke <a.F: a.F make()>();\n        $i1 = virtualinvoke $r0.<a.F: int f(int)>($i0, $i0);\n        return $i1;",
            DiagnosticKind::ArityMismatch,
        ),
        ("        $r0 := @this: a.App;\n        $r1 := @this: a.App;\n        return 0;", DiagnosticKind::DuplicateThis),
        ("        $i0 := @parameter0: int;\n        $i1 = staticinvoke <a.F: int nope()>();\n        return $i1;", DiagnosticKind::UnresolvedReference),
    ];
    for (body, want) in cases {
        let p = parse_syntax(&program(body)).unwrap();
        let ds = validate_program(&p);
        assert!(kinds(&ds).contains(&want), "{want:?} not in {ds:?}\n{body}");
    }
    let overlap = "framework {\n    class a.F;\n    method <a.App: int m(int)>;\n}\nclass a.App {\n    public static int m(int) {\n        $i0 := @parameter0: int;\n        return $i0;\n    }\n}\n";
    let p = parse_syntax(overlap).unwrap();
    assert!(kinds(&validate_program(&p)).contains(&DiagnosticKind::FrameworkOverlap));
}

#[test]
fn fixtures_are_clean_and_round_trip() {
    for f in ALL_FIXTURES {
        let p = load_fixture(f);
        assert!(validate_program(&p).is_empty(), "{f}");
        let again = parse_program(&print_program(&p)).unwrap();
        assert_eq!(again, p, "{f}");
    }
}

#[test]
fn statements_round_trip() {
    for line in [
        "x = (a.B) y;",
        "x = new a.B;",
        "x = 1.5;",
        "x = -7L;",
        "x = \"a \\\"q\\\"\";",
        "x = int[]{1, 2, 3};",
        "virtualinvoke r.<a.B: void f(int,long)>(1, 2L);",
        "r.<a.B: int n> = 3;",
        "<a.B: int s> = v;",
        "x = <a.B: int s>;",
        "if z goto l;",
        "return;",
    ] {
        let s = parse_statement(line).unwrap_or_else(|d| panic!("{line}: {d}"));
        assert_eq!(parse_statement(&print_statement(&s)).unwrap(), s, "{line}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        let r = random_program(seed, GenLimits::default());
        let printed = print_program(&r.program);
        let again = parse_program(&printed).unwrap();
        prop_assert_eq!(&again, &r.program);
        prop_assert_eq!(print_program(&again), printed);
    }

    #[test]
    fn parsing_never_panics(src in "\\PC{0,200}") {
        let _ = parse_program(&src);
        let _ = parse_statement(&src);
        let _ = parse_member_signature(&src);
    }

    #[test]
    fn mangled_fixtures_never_panic(cut in 0usize..2000, junk in "[{}();:=<>@$a-z. \n]{0,12}") {
        let src = fixture_source("listing3");
        let at = src.char_indices().map(|(i, _)| i).nth(cut % src.chars().count()).unwrap_or(0);
        let mangled = format!("{}{junk}{}", &src[..at], &src[at..]);
        if let Ok(p) = parse_program(&mangled) {
            let _ = validate_program(&p);
        }
    }
}
