use std::collections::BTreeSet;

use proptest::prelude::*;
use slicegen_core::graphs::*;
use slicegen_core::ir::*;
use slicegen_testkit::{load_fixture, method_sig, random_program, GenLimits, ALL_FIXTURES};

/// Call edges read off the printed program text, one per line holding an
/// invoke expression.
fn textual_call_edges(p: &IrProgram) -> BTreeSet<(String, usize, String)> {
    let mut out = BTreeSet::new();
    for m in p.methods() {
        for (i, s) in m.body.iter().enumerate() {
            let line = print_statement(s);
            if !line.contains("invoke ") {
                continue;
            }
            let open = line.find('<').unwrap();
            let close = line[open..].find(">(").unwrap() + open;
            let callee = &line[open..=close];
            let is_static = line.contains("staticinvoke");
            let sig = method_sig(&format!("{}{callee}", if is_static { "static " } else { "" }));
            out.insert((m.signature.to_string(), i, sig.to_string()));
        }
    }
    out
}

/// Statement-level successors, straight from the statement semantics.
fn stmt_succs(m: &IrMethod, i: usize) -> Vec<usize> {
    let label = |name: &str| m.body.iter().position(|s| matches!(s, IrStatement::Label { name: n } if n == name));
    let next = (i + 1 < m.body.len()).then_some(i + 1);
    match &m.body[i] {
        IrStatement::Return { .. } | IrStatement::ReturnVoid => vec![],
        IrStatement::Goto { target } => label(target).into_iter().collect(),
        IrStatement::If { target, .. } => label(target).into_iter().chain(next).collect(),
        _ => next.into_iter().collect(),
    }
}

fn check_cfg(m: &IrMethod) {
    let cfg = build_cfg(m);
    let covered: usize = cfg.blocks.iter().map(|b| b.end - b.start).sum();
    assert_eq!(covered, m.body.len());
    let mut want = BTreeSet::new();
    for b in &cfg.blocks {
        for i in b.start..b.end {
            let succ = stmt_succs(m, i);
            if i + 1 < b.end {
                assert_eq!(succ, vec![i + 1], "{} stmt {i} inside a block", m.signature);
            } else {
                want.extend(succ.into_iter().map(|j| (b.id, cfg.block_of(j))));
            }
        }
    }
    let got: BTreeSet<_> = cfg.edges().into_iter().collect();
    assert_eq!(got, want, "{}", m.signature);
}

fn listing3_sigs() -> (MethodSignature, MethodSignature, MethodSignature) {
    let c = "com.eyoung.myutils.DeviceInfoUtil";
    (
        method_sig(&format!("static <{c}: android.app.usage.NetworkStatsManager getNetworkStatsManager(android.content.Context)>")),
        method_sig(&format!("static <{c}: int getUid(android.content.Context)>")),
        method_sig(&format!("static <{c}: double getCurAppFlow(android.content.Context)>")),
    )
}

#[test]
fn listing3_call_graph() {
    let p = load_fixture("listing3");
    let cg = build_call_graph(&p);
    let (nsm, uid, flow) = listing3_sigs();
    let callees: Vec<(usize, String)> = cg.callees_of(&flow).iter().map(|e| (e.site, e.callee.name.clone())).collect();
    assert_eq!(
        callees,
        [(1, "getNetworkStatsManager".to_string()), (2, "currentTimeMillis".into()), (3, "getUid".into()), (4, "queryDetailsForUid".into())]
    );
    assert_eq!(cg.callers_of(&nsm), [(flow.clone(), 1)]);
    assert_eq!(cg.callers_of(&uid), [(flow.clone(), 3)]);
    assert_eq!(cg.callees_of(&uid).len(), 3);
    assert_eq!(cg.len(), 8);
}

#[test]
fn call_graph_matches_text_on_fixtures() {
    for f in ALL_FIXTURES {
        let p = load_fixture(f);
        let cg = build_call_graph(&p);
        let got: BTreeSet<_> = cg.edges.iter().map(|e| (e.caller.to_string(), e.site, e.callee.to_string())).collect();
        assert_eq!(got, textual_call_edges(&p), "{f}");
    }
}

#[test]
fn cfgs_match_statement_successors_on_fixtures() {
    for f in ALL_FIXTURES {
        for m in load_fixture(f).methods() {
            check_cfg(m);
        }
    }
}

#[test]
fn icfg_nodes_are_all_blocks() {
    for f in ALL_FIXTURES {
        let p = load_fixture(f);
        let icfg = build_icfg(&p, &build_call_graph(&p));
        let blocks: usize = p.methods().map(|m| build_cfg(m).blocks.len()).sum();
        assert_eq!(icfg.nodes.len(), blocks, "{f}");
        let app_edges = build_call_graph(&p).edges.iter().filter(|e| p.method(&e.callee).is_some()).count();
        assert_eq!(icfg.inter.len(), app_edges, "{f}");
    }
}

#[test]
fn return_edge_from_get_network_stats_manager() {
    let p = load_fixture("listing3");
    let icfg = build_icfg(&p, &build_call_graph(&p));
    let (nsm, _, flow) = listing3_sigs();
    let e = icfg.inter.iter().find(|e| e.callee == nsm).unwrap();
    assert_eq!(e.caller, flow);
    assert_eq!(e.site, 1);
    let ret_block = icfg.cfg(&nsm).unwrap().block_of(3);
    assert_eq!(e.ret_from, [icfg.node(&nsm, ret_block).unwrap()]);
    let site_node = icfg.node(&flow, icfg.cfg(&flow).unwrap().block_of(1)).unwrap();
    assert_eq!(e.ret_to, site_node);
    assert!(icfg.predecessors(site_node).contains(&e.ret_from[0]));

    // the target's block reaches back into both helper methods
    let back = icfg.reverse_reachable(&flow, 4);
    let methods: BTreeSet<String> = back.iter().map(|&n| icfg.nodes[n].method.name.clone()).collect();
    assert_eq!(methods.into_iter().collect::<Vec<_>>(), ["getCurAppFlow", "getNetworkStatsManager", "getUid"]);
}

#[test]
fn recursion_builds_finite_graphs() {
    let p = load_fixture("recursion");
    let cg = build_call_graph(&p);
    let name = method_sig("static <demo.rec.Names: java.lang.String name(android.content.Context,boolean)>");
    assert!(cg.callers_of(&name).iter().any(|(c, _)| *c == name));
    let icfg = build_icfg(&p, &cg);
    let ping = method_sig("static <demo.rec.Names: android.content.Context ping(android.content.Context)>");
    let back = icfg.reverse_reachable(&ping, 1);
    assert!(back.len() <= icfg.nodes.len());
    assert!(back.iter().any(|&n| icfg.nodes[n].method.name == "pong"));
}

#[test]
fn loop_back_edge() {
    let src = "class A {\n    public static int f(int) {\n        $i0 := @parameter0: int;\n    top:\n        if $i0 goto out;\n        goto top;\n    out:\n        return $i0;\n    }\n}\n";
    let p = parse_program(src).unwrap();
    let m = p.methods().next().unwrap();
    let cfg = build_cfg(m);
    check_cfg(m);
    let (from, to) = (cfg.block_of(3), cfg.block_of(1));
    assert!(cfg.is_back_edge(from, to));
    let (paths, truncated) = cfg.backward_paths(cfg.block_of(5), 10);
    assert!(!truncated);
    assert_eq!(paths, [vec![0, 1, 3]]);
}

#[test]
fn dot_output_is_deterministic() {
    for f in ALL_FIXTURES {
        let a = load_fixture(f);
        let b = load_fixture(f);
        let (ca, cb) = (build_call_graph(&a), build_call_graph(&b));
        assert_eq!(callgraph_to_dot(&ca), callgraph_to_dot(&cb));
        assert_eq!(icfg_to_dot(&build_icfg(&a, &ca)), icfg_to_dot(&build_icfg(&b, &cb)));
        for m in a.methods() {
            assert_eq!(cfg_to_dot(&build_cfg(m), m), cfg_to_dot(&build_cfg(b.method(&m.signature).unwrap()), m));
        }
    }
    let dot = callgraph_to_dot(&build_call_graph(&load_fixture("listing3")));
    assert!(dot.starts_with("digraph callgraph {"));
    assert_eq!(dot.matches(" -> ").count(), 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graphs_agree_with_oracles(seed in any::<u64>()) {
        let r = random_program(seed, GenLimits::default());
        let cg = build_call_graph(&r.program);
        let got: BTreeSet<_> = cg.edges.iter().map(|e| (e.caller.to_string(), e.site, e.callee.to_string())).collect();
        prop_assert_eq!(got, textual_call_edges(&r.program));
        for m in r.program.methods() {
            check_cfg(m);
        }
        let icfg = build_icfg(&r.program, &cg);
        let blocks: usize = r.program.methods().map(|m| build_cfg(m).blocks.len()).sum();
        prop_assert_eq!(icfg.nodes.len(), blocks);
    }
}
