use std::fmt::Write as _;

use super::callgraph::CallGraph;
use super::cfg::Cfg;
use super::icfg::Icfg;
use crate::ir::{print_statement, IrMethod};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn callgraph_to_dot(cg: &CallGraph) -> String {
    let mut out = String::from("digraph callgraph {\n  node [shape=box];\n");
    for e in &cg.edges {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            escape(&e.caller.to_string()),
            escape(&e.callee.to_string()),
            e.site
        );
    }
    out.push_str("}\n");
    out
}

pub fn cfg_to_dot(cfg: &Cfg, m: &IrMethod) -> String {
    let mut out = format!("digraph \"{}\" {{\n  node [shape=box, fontname=monospace];\n", escape(&cfg.method.to_string()));
    for b in &cfg.blocks {
        let mut label = String::new();
        for i in b.start..b.end {
            let _ = write!(label, "{i}: {}\\l", escape(&print_statement(&m.body[i])));
        }
        let style = if cfg.dead[b.id] { ", style=dashed" } else { "" };
        let _ = writeln!(out, "  b{} [label=\"B{}\\l{label}\"{style}];", b.id, b.id);
    }
    for (f, t) in cfg.edges() {
        let style = if cfg.is_back_edge(f, t) { " [style=bold]" } else { "" };
        let _ = writeln!(out, "  b{f} -> b{t}{style};");
    }
    out.push_str("}\n");
    out
}

pub fn icfg_to_dot(icfg: &Icfg) -> String {
    let mut out = String::from("digraph icfg {\n  node [shape=box];\n");
    for (i, n) in icfg.nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{} B{}\"];", escape(&n.method.to_string()), n.block);
    }
    for (sig, cfg) in &icfg.cfgs {
        for (f, t) in cfg.edges() {
            let (Some(a), Some(b)) = (icfg.node(sig, f), icfg.node(sig, t)) else { continue };
            let _ = writeln!(out, "  n{a} -> n{b};");
        }
    }
    for e in &icfg.inter {
        let _ = writeln!(out, "  n{} -> n{} [color=blue, label=\"call {}\"];", e.call.0, e.call.1, e.site);
        for r in &e.ret_from {
            let _ = writeln!(out, "  n{r} -> n{} [color=red, label=\"ret\"];", e.ret_to);
        }
    }
    out.push_str("}\n");
    out
}
