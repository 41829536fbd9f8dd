use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::ir::{IrProgram, MethodSignature};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CallEdge {
    pub caller: MethodSignature,
    pub site: usize,
    pub callee: MethodSignature,
}

/// Syntactic call graph: the callee of each edge is the signature written at
/// the call site, with no dispatch resolution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CallGraph {
    pub edges: BTreeSet<CallEdge>,
    #[serde(skip)]
    reverse: BTreeMap<MethodSignature, BTreeSet<(MethodSignature, usize)>>,
}

pub fn build_call_graph(p: &IrProgram) -> CallGraph {
    let mut cg = CallGraph::default();
    for m in p.methods() {
        for (i, s) in m.body.iter().enumerate() {
            if let Some(call) = s.invoke() {
                cg.insert(CallEdge { caller: m.signature.clone(), site: i, callee: call.callee.clone() });
            }
        }
    }
    cg
}

impl CallGraph {
    fn insert(&mut self, e: CallEdge) {
        self.reverse.entry(e.callee.clone()).or_default().insert((e.caller.clone(), e.site));
        self.edges.insert(e);
    }

    /// Call sites `(caller, statement index)` invoking `callee`.
    pub fn callers_of(&self, callee: &MethodSignature) -> Vec<(MethodSignature, usize)> {
        self.reverse.get(callee).map(|s| s.iter().cloned().collect()).unwrap_or_default()
    }

    pub fn callees_of(&self, caller: &MethodSignature) -> Vec<&CallEdge> {
        self.edges.iter().filter(|e| &e.caller == caller).collect()
    }

    pub fn reverse_index(&self) -> &BTreeMap<MethodSignature, BTreeSet<(MethodSignature, usize)>> {
        &self.reverse
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}
