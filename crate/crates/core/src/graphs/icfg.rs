use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::callgraph::CallGraph;
use super::cfg::{BlockId, Cfg};
use crate::ir::{IrProgram, MethodSignature};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct IcfgNode {
    pub method: MethodSignature,
    pub block: BlockId,
}

/// Call edge from the block holding a call site to the callee entry, paired
/// with the return edge(s) from the callee exits back to that block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InterEdge {
    pub caller: MethodSignature,
    pub site: usize,
    pub callee: MethodSignature,
    pub call: (NodeId, NodeId),
    pub ret_from: Vec<NodeId>,
    pub ret_to: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Icfg {
    pub cfgs: BTreeMap<MethodSignature, Cfg>,
    pub nodes: Vec<IcfgNode>,
    pub inter: Vec<InterEdge>,
    #[serde(skip)]
    index: BTreeMap<(MethodSignature, BlockId), NodeId>,
}

pub fn build_icfg(p: &IrProgram, cg: &CallGraph) -> Icfg {
    let cfgs: BTreeMap<MethodSignature, Cfg> = p.methods().map(|m| (m.signature.clone(), Cfg::build(m))).collect();
    let mut nodes = Vec::new();
    let mut index = BTreeMap::new();
    for (sig, cfg) in &cfgs {
        for b in &cfg.blocks {
            index.insert((sig.clone(), b.id), nodes.len());
            nodes.push(IcfgNode { method: sig.clone(), block: b.id });
        }
    }
    let mut inter = Vec::new();
    for e in &cg.edges {
        let (Some(caller_cfg), Some(callee_cfg)) = (cfgs.get(&e.caller), cfgs.get(&e.callee)) else {
            // framework callees are boundary nodes
            continue;
        };
        let site_node = index[&(e.caller.clone(), caller_cfg.block_of(e.site))];
        let entry = index[&(e.callee.clone(), callee_cfg.entry)];
        let ret_from = callee_cfg
            .exits
            .iter()
            .filter(|&&x| !callee_cfg.dead[x])
            .map(|&x| index[&(e.callee.clone(), x)])
            .collect();
        inter.push(InterEdge {
            caller: e.caller.clone(),
            site: e.site,
            callee: e.callee.clone(),
            call: (site_node, entry),
            ret_from,
            ret_to: site_node,
        });
    }
    Icfg { cfgs, nodes, inter, index }
}

impl Icfg {
    pub fn node(&self, method: &MethodSignature, block: BlockId) -> Option<NodeId> {
        self.index.get(&(method.clone(), block)).copied()
    }

    pub fn cfg(&self, method: &MethodSignature) -> Option<&Cfg> {
        self.cfgs.get(method)
    }

    /// Predecessors of a node: intra-method predecessors, callee exits whose
    /// return edges land here, and call sites of this method if it is an entry.
    pub fn predecessors(&self, n: NodeId) -> BTreeSet<NodeId> {
        let IcfgNode { method, block } = &self.nodes[n];
        let cfg = &self.cfgs[method];
        let mut out: BTreeSet<NodeId> = cfg.preds[*block].iter().map(|&b| self.index[&(method.clone(), b)]).collect();
        for e in &self.inter {
            if e.ret_to == n {
                out.extend(e.ret_from.iter().copied());
            }
            if e.call.1 == n {
                out.insert(e.call.0);
            }
        }
        out
    }

    /// Every node reachable backwards from the block containing `stmt`. The
    /// visited set bounds the walk on recursive programs.
    pub fn reverse_reachable(&self, method: &MethodSignature, stmt: usize) -> BTreeSet<NodeId> {
        let Some(cfg) = self.cfgs.get(method) else { return BTreeSet::new() };
        let start = self.index[&(method.clone(), cfg.block_of(stmt))];
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.predecessors(n));
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::build_call_graph;
    use crate::ir::parse_program;

    #[test]
    fn single_method_icfg_is_its_cfg() {
        let p = parse_program("class A {\n static int f() { x = 1; return x; }\n}").unwrap();
        let icfg = build_icfg(&p, &build_call_graph(&p));
        assert_eq!(icfg.nodes.len(), 1);
        assert!(icfg.inter.is_empty());
    }

    #[test]
    fn recursion_forms_a_cycle_and_walk_terminates() {
        let p = parse_program(
            "class A {\n static int f(int) {\n a := @parameter0: int;\n b = staticinvoke <A: int f(int)>(a);\n return b;\n }\n}",
        )
        .unwrap();
        let icfg = build_icfg(&p, &build_call_graph(&p));
        assert_eq!(icfg.inter.len(), 1);
        assert_eq!(icfg.inter[0].call, (0, 0));
        let f = MethodSignature::new("A", "int", "f", &["int"], true);
        assert_eq!(icfg.reverse_reachable(&f, 2).len(), 1);
    }
}
