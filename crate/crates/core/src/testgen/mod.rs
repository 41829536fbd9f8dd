//! Turns call traces into paired generic/concrete test cases, removes
//! equivalent ones and writes the suite manifest.

mod manifest;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{Invoke, IrStatement, MethodSignature, Operand};
use crate::slicer::{CallTrace, ValueSource};

pub use manifest::{emit_test_suite, load_test_suite, manifest_json, target_key, write_test_suite, TestSuite, MANIFEST_VERSION};

#[derive(Debug, Error)]
pub enum TestgenError {
    #[error("{target} takes {expected} parameters but {found} bindings were given")]
    IncompleteBindings { target: String, expected: usize, found: usize },
    #[error("trace uses `{0}` without defining it")]
    DanglingUse(String),
    #[error("empty test group")]
    EmptyGroup,
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestForm {
    Generic,
    Concrete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub app: String,
    pub class: String,
    pub method: String,
    pub stmt_index: usize,
    pub trace: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub id: String,
    pub target: MethodSignature,
    pub form: TestForm,
    pub body: Vec<IrStatement>,
    pub target_index: usize,
    pub capture_return: bool,
    /// Concrete tests name their generic sibling.
    pub generic_id: Option<String>,
    pub provenance: Provenance,
}

impl TestCase {
    /// Ordered callee signatures of every invocation in the body.
    pub fn invocation_sequence(&self) -> Vec<&MethodSignature> {
        self.body.iter().filter_map(|s| s.invoke()).map(|c| &c.callee).collect()
    }

    pub fn invocation_count(&self) -> usize {
        self.body.iter().filter(|s| s.invoke().is_some()).count()
    }
}

/// Renames trace variables (`tN`) to `var1`, `var2`, ... in order of first
/// appearance. The two namespaces never overlap, so renaming in place is safe.
/// Literal terminals are written right before their first use.
struct BodyBuilder<'t> {
    trace: &'t CallTrace,
    names: BTreeMap<String, String>,
    body: Vec<IrStatement>,
    next: usize,
}

impl<'t> BodyBuilder<'t> {
    fn new(trace: &'t CallTrace) -> Self {
        BodyBuilder { trace, names: BTreeMap::new(), body: Vec::new(), next: 1 }
    }

    fn fresh(&mut self) -> String {
        let v = format!("var{}", self.next);
        self.next += 1;
        v
    }

    fn name_of(&mut self, trace_var: &str) -> String {
        if let Some(n) = self.names.get(trace_var) {
            return n.clone();
        }
        let n = self.fresh();
        if let Some(value) = self.trace.terminals.get(trace_var).and_then(|t| t.literal()) {
            self.body.push(IrStatement::AssignConst { var: n.clone(), value: value.clone() });
        }
        self.names.insert(trace_var.to_string(), n.clone());
        n
    }

    fn push_trace_stmt(&mut self, stmt: &IrStatement) {
        let mut s = stmt.clone();
        for u in stmt.uses() {
            let n = self.name_of(u);
            s.rename_var(u, &n);
        }
        if let Some(d) = stmt.def() {
            let n = self.fresh();
            self.names.insert(d.to_string(), n.clone());
            s.rename_var(d, &n);
        }
        self.body.push(s);
    }

    fn operand(&mut self, op: &Operand) -> Operand {
        match op {
            Operand::Var(v) => Operand::Var(self.name_of(v)),
            c => c.clone(),
        }
    }
}

/// Statements of the trace needed to compute `roots`, in trace order.
fn closure(trace: &CallTrace, roots: &[&str]) -> Vec<usize> {
    let mut need: BTreeSet<String> = roots.iter().map(|s| s.to_string()).collect();
    let mut keep = Vec::new();
    for (i, s) in trace.statements.iter().enumerate().rev() {
        let defines = s.stmt.def().is_some_and(|d| need.contains(d));
        // constructor calls define nothing but initialize their receiver
        let initializes = matches!(&s.stmt, IrStatement::InvokeVoid { call } if call.callee.is_constructor()
            && call.receiver.as_ref().is_some_and(|r| need.contains(r)));
        if defines || initializes {
            keep.push(i);
            need.extend(s.stmt.uses().into_iter().map(str::to_string));
        }
    }
    keep.reverse();
    keep
}

fn target_statement(trace: &CallTrace, receiver: Option<String>, args: Vec<Operand>, result: Option<String>) -> IrStatement {
    let site = &trace.site;
    let call = Invoke { kind: site.kind, callee: site.target.clone(), receiver, args };
    match result {
        Some(var) => IrStatement::AssignInvoke { var, call },
        None => IrStatement::InvokeVoid { call },
    }
}

/// Builds the generic test (target parameters left open, receiver chain
/// rebuilt) and the concrete test (every statement of the trace, bound
/// arguments, return capture last).
pub fn construct_test_case(trace: &CallTrace, app: &str, seed: u64) -> Result<(TestCase, TestCase), TestgenError> {
    let target = &trace.site.target;
    if trace.bindings.len() != target.arity() {
        return Err(TestgenError::IncompleteBindings {
            target: target.to_string(),
            expected: target.arity(),
            found: trace.bindings.len(),
        });
    }
    if let Some(v) = trace.dangling_uses().into_iter().next() {
        return Err(TestgenError::DanglingUse(v));
    }
    let capture = !target.is_void();
    let base_id = test_id(app, trace);
    let provenance = Provenance {
        app: app.to_string(),
        class: trace.site.method.declaring_class.clone(),
        method: trace.site.method.to_string(),
        stmt_index: trace.site.stmt_index,
        trace: trace.variant,
        seed,
    };

    let mut b = BodyBuilder::new(trace);
    for s in &trace.statements {
        b.push_trace_stmt(&s.stmt);
    }
    let args: Vec<Operand> = trace
        .bindings
        .iter()
        .map(|bind| match &bind.source {
            ValueSource::Constant { value } => Operand::Const(value.clone()),
            ValueSource::TraceVar { var } | ValueSource::Dummy { var, .. } => b.operand(&Operand::Var(var.clone())),
        })
        .collect();
    let receiver = trace.root.as_ref().and_then(|r| r.as_var()).map(|r| b.name_of(r));
    let result = capture.then(|| b.fresh());
    let target_index = b.body.len();
    b.body.push(target_statement(trace, receiver, args, result.clone()));
    if let Some(r) = result {
        b.body.push(IrStatement::Return { value: Operand::Var(r) });
    }
    let concrete_body = b.body;

    let mut g = BodyBuilder::new(trace);
    let params: Vec<Operand> = target
        .param_types
        .iter()
        .enumerate()
        .map(|(i, ty)| {
            let v = g.fresh();
            g.body.push(IrStatement::IdentityParam { var: v.clone(), index: i, ty: ty.clone() });
            Operand::Var(v)
        })
        .collect();
    let root_var = trace.root.as_ref().and_then(|r| r.as_var());
    for i in closure(trace, &root_var.into_iter().collect::<Vec<_>>()) {
        g.push_trace_stmt(&trace.statements[i].stmt);
    }
    let receiver = root_var.map(|r| g.name_of(r));
    let result = capture.then(|| g.fresh());
    let generic_index = g.body.len();
    g.body.push(target_statement(trace, receiver, params, result.clone()));
    if let Some(r) = result {
        g.body.push(IrStatement::Return { value: Operand::Var(r) });
    }

    let generic = TestCase {
        id: format!("{base_id}/generic"),
        target: target.clone(),
        form: TestForm::Generic,
        body: g.body,
        target_index: generic_index,
        capture_return: capture,
        generic_id: None,
        provenance: provenance.clone(),
    };
    let concrete = TestCase {
        id: format!("{base_id}/concrete"),
        target: target.clone(),
        form: TestForm::Concrete,
        body: concrete_body,
        target_index,
        capture_return: capture,
        generic_id: Some(generic.id.clone()),
        provenance,
    };
    Ok((generic, concrete))
}

fn test_id(app: &str, trace: &CallTrace) -> String {
    let site = &trace.site;
    let class = site.method.declaring_class.rsplit('.').next().unwrap_or_default();
    format!("{app}:{class}.{}@{}:{}#{}", site.method.name, site.stmt_index, site.target.name, trace.variant)
}

/// Keeps the first test of every distinct invocation sequence, in input order.
pub fn eliminate_equivalent(tests: Vec<TestCase>) -> Vec<TestCase> {
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    tests
        .into_iter()
        .filter(|t| seen.insert(t.invocation_sequence().iter().map(|s| manifest::target_key(s)).collect()))
        .collect()
}

/// Test with the fewest invocations, then fewest statements, then smallest id.
pub fn select_minimal(tests: &[TestCase]) -> Result<&TestCase, TestgenError> {
    tests
        .iter()
        .min_by(|a, b| {
            (a.invocation_count(), a.body.len(), &a.id).cmp(&(b.invocation_count(), b.body.len(), &b.id))
        })
        .ok_or(TestgenError::EmptyGroup)
}
