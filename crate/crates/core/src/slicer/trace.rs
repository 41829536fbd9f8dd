use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ir::{print_operand, print_statement, InvokeKind, IrStatement, MethodSignature, Operand, Value};

/// Coordinates of a statement in the analysed program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StmtRef {
    pub method: MethodSignature,
    pub index: usize,
}

/// One located use of a target API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallSite {
    pub method: MethodSignature,
    pub stmt_index: usize,
    pub target: MethodSignature,
    pub kind: InvokeKind,
    pub receiver_var: Option<String>,
    pub args: Vec<Operand>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DummyRule {
    Int,
    Long,
    Double,
    Boolean,
    String,
    PrimitiveArray,
    Object,
    Environment,
    Null,
}

/// How a trace variable without a defining trace statement got its value,
/// or, for framework results, where the value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    Constant { value: Value },
    /// `value` is `None` for objects, which trace statements construct.
    Dummy { rule: DummyRule, seed: u64, ty: String, value: Option<Value> },
    FrameworkResult { api: MethodSignature },
}

impl Terminal {
    /// The literal to materialize for this terminal, if it needs one.
    pub fn literal(&self) -> Option<&Value> {
        match self {
            Terminal::Constant { value } => Some(value),
            Terminal::Dummy { value, .. } => value.as_ref(),
            Terminal::FrameworkResult { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueSource {
    TraceVar { var: String },
    Constant { value: Value },
    Dummy { rule: DummyRule, seed: u64, var: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBinding {
    pub param_index: usize,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStmt {
    /// `None` for statements synthesized by dummy construction.
    pub origin: Option<StmtRef>,
    pub frame: usize,
    pub stmt: IrStatement,
}

/// Ordered definitions that rebuild the receiver and arguments of a call
/// site. Variables are named `t0`, `t1`, ... in definition order.
#[derive(Debug, Clone, PartialEq)]
pub struct CallTrace {
    pub site: CallSite,
    pub variant: usize,
    pub statements: Vec<TraceStmt>,
    pub terminals: BTreeMap<String, Terminal>,
    pub root: Option<Operand>,
    pub bindings: Vec<ParamBinding>,
    pub warnings: Vec<String>,
}

impl CallTrace {
    pub fn empty(site: CallSite) -> Self {
        CallTrace {
            site,
            variant: 0,
            statements: Vec::new(),
            terminals: BTreeMap::new(),
            root: None,
            bindings: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// Framework API signatures invoked by trace statements, in order.
    pub fn invocations(&self) -> Vec<&MethodSignature> {
        self.statements.iter().filter_map(|s| s.stmt.invoke()).map(|c| &c.callee).collect()
    }

    /// Variables used before any definition. Literal terminals count as
    /// defined; objects and framework results need a defining statement.
    /// Empty for every well-formed trace.
    pub fn dangling_uses(&self) -> Vec<String> {
        let mut defined: BTreeSet<&str> =
            self.terminals.iter().filter(|(_, t)| t.literal().is_some()).map(|(v, _)| v.as_str()).collect();
        let mut out = Vec::new();
        for s in &self.statements {
            for u in s.stmt.uses() {
                if !defined.contains(u) {
                    out.push(u.to_string());
                }
            }
            if let Some(d) = s.stmt.def() {
                defined.insert(d);
            }
        }
        let tail = self.root.iter().filter_map(|o| o.as_var()).chain(self.bindings.iter().filter_map(|b| match &b.source {
            ValueSource::TraceVar { var } | ValueSource::Dummy { var, .. } => Some(var.as_str()),
            ValueSource::Constant { .. } => None,
        }));
        for v in tail {
            if !defined.contains(v) {
                out.push(v.to_string());
            }
        }
        out
    }

    /// Stable JSON with statements written in IR syntax.
    pub fn to_json(&self) -> serde_json::Value {
        let stmts: Vec<serde_json::Value> = self
            .statements
            .iter()
            .map(|s| {
                serde_json::json!({
                    "origin": s.origin.as_ref().map(|o| serde_json::json!({"method": o.method.to_string(), "index": o.index})),
                    "frame": s.frame,
                    "stmt": print_statement(&s.stmt),
                })
            })
            .collect();
        serde_json::json!({
            "target": self.site.target.to_string(),
            "site": {"method": self.site.method.to_string(), "index": self.site.stmt_index},
            "variant": self.variant,
            "statements": stmts,
            "terminals": self.terminals,
            "root": self.root.as_ref().map(print_operand),
            "bindings": self.bindings,
            "warnings": self.warnings,
        })
    }
}
