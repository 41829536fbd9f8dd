use std::collections::{BTreeMap, BTreeSet};

use super::dummy::{dummy_seed, synthesize_dummy_value, DummyValue};
use super::trace::{CallSite, CallTrace, DummyRule, ParamBinding, StmtRef, Terminal, TraceStmt, ValueSource};
use super::{AnalysisContext, SliceConfig, SliceError};
use crate::graphs::BlockId;
use crate::ir::{Invoke, InvokeKind, IrMethod, IrStatement, MethodSignature, Operand, Value};

/// Upper bound on acyclic paths considered per frame.
const PATH_LIMIT: usize = 256;

/// Replays a prefix of decisions, then takes the first option everywhere.
/// `next_prefix` advances the last decision that still has options left, so
/// repeated runs walk every combination in lexicographic order.
#[derive(Debug, Default)]
pub(crate) struct Chooser {
    prefix: Vec<usize>,
    decisions: Vec<(usize, usize)>,
}

impl Chooser {
    pub(crate) fn new(prefix: Vec<usize>) -> Self {
        Chooser { prefix, decisions: Vec::new() }
    }

    fn choose(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        if n == 1 {
            return 0;
        }
        let c = self.prefix.get(self.decisions.len()).copied().unwrap_or(0).min(n - 1);
        self.decisions.push((c, n));
        c
    }

    pub(crate) fn next_prefix(&self) -> Option<Vec<usize>> {
        let i = self.decisions.iter().rposition(|&(c, n)| c + 1 < n)?;
        let mut p: Vec<usize> = self.decisions[..i].iter().map(|&(c, _)| c).collect();
        p.push(self.decisions[i].0 + 1);
        Some(p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum FrameKey {
    Top { method: MethodSignature, anchor: usize },
    Inlined { parent: usize, site: usize },
}

#[derive(Debug)]
struct Frame {
    method: MethodSignature,
    anchor: usize,
    /// `(parent frame, call site index in the parent)` for inlined callees.
    parent: Option<(usize, usize)>,
    depth: usize,
    path: Option<Vec<BlockId>>,
}

#[derive(Debug, Clone, Default)]
struct State {
    statements: Vec<TraceStmt>,
    terminals: BTreeMap<String, Terminal>,
    memo: BTreeMap<(usize, usize), Operand>,
    next_var: usize,
    dummies: usize,
    warnings: Vec<String>,
}

pub(crate) struct Session<'a> {
    ctx: &'a AnalysisContext<'a>,
    config: &'a SliceConfig,
    scope: String,
    pub(crate) chooser: Chooser,
    frames: Vec<Frame>,
    frame_index: BTreeMap<FrameKey, usize>,
    frame_offset: usize,
    active: BTreeSet<(usize, usize)>,
    pub(crate) visited: BTreeSet<StmtRef>,
    st: State,
}

/// What a finished session produced.
pub(crate) struct SessionOutput {
    pub statements: Vec<TraceStmt>,
    pub terminals: BTreeMap<String, Terminal>,
    pub warnings: Vec<String>,
}

impl<'a> Session<'a> {
    pub(crate) fn new(ctx: &'a AnalysisContext<'a>, config: &'a SliceConfig, scope: String, prefix: Vec<usize>) -> Self {
        Session {
            ctx,
            config,
            scope,
            chooser: Chooser::new(prefix),
            frames: Vec::new(),
            frame_index: BTreeMap::new(),
            frame_offset: 0,
            active: BTreeSet::new(),
            visited: BTreeSet::new(),
            st: State::default(),
        }
    }

    /// Continues naming after an existing trace, used when splicing.
    pub(crate) fn with_offsets(mut self, next_var: usize, frame_offset: usize) -> Self {
        self.st.next_var = next_var;
        self.frame_offset = frame_offset;
        self
    }

    pub(crate) fn finish(self) -> SessionOutput {
        SessionOutput { statements: self.st.statements, terminals: self.st.terminals, warnings: self.st.warnings }
    }

    fn method(&self, sig: &MethodSignature) -> &'a IrMethod {
        self.ctx.program.method(sig).expect("frames only exist for defined methods")
    }

    fn fresh(&mut self) -> String {
        let v = format!("t{}", self.st.next_var);
        self.st.next_var += 1;
        v
    }

    fn emit(&mut self, origin: Option<StmtRef>, frame: usize, stmt: IrStatement) {
        self.st.statements.push(TraceStmt { origin, frame: frame + self.frame_offset, stmt });
    }

    fn origin(&self, f: usize, idx: usize) -> Option<StmtRef> {
        Some(StmtRef { method: self.frames[f].method.clone(), index: idx })
    }

    pub(crate) fn top_frame(&mut self, method: &MethodSignature, anchor: usize, depth: usize) -> Result<usize, SliceError> {
        if depth > self.config.depth_cap {
            return Err(SliceError::DepthExceeded(self.config.depth_cap));
        }
        let key = FrameKey::Top { method: method.clone(), anchor };
        if let Some(&f) = self.frame_index.get(&key) {
            return Ok(f);
        }
        let f = self.frames.len();
        self.frames.push(Frame { method: method.clone(), anchor, parent: None, depth, path: None });
        self.frame_index.insert(key, f);
        Ok(f)
    }

    fn path(&mut self, f: usize) -> Vec<BlockId> {
        if let Some(p) = &self.frames[f].path {
            return p.clone();
        }
        let cfg = self.ctx.icfg.cfg(&self.frames[f].method).expect("cfg for defined method");
        let (paths, _) = cfg.backward_paths(cfg.block_of(self.frames[f].anchor), PATH_LIMIT);
        let c = self.chooser.choose(paths.len());
        let chosen = paths[c].clone();
        self.frames[f].path = Some(chosen.clone());
        chosen
    }

    /// Nearest definition of `var` before `use_idx` along the frame's path.
    fn find_def(&mut self, f: usize, use_idx: usize, var: &str) -> Result<usize, SliceError> {
        let path = self.path(f);
        let m = self.method(&self.frames[f].method);
        let cfg = self.ctx.icfg.cfg(&m.signature).expect("cfg for defined method");
        let b = cfg.block_of(use_idx);
        let start = cfg.blocks[b].start;
        if let Some(i) = (start..use_idx).rev().find(|&i| m.body[i].def() == Some(var)) {
            return Ok(i);
        }
        if let Some(pos) = path.iter().position(|&x| x == b) {
            for &pb in path[..pos].iter().rev() {
                let blk = &cfg.blocks[pb];
                if let Some(i) = (blk.start..blk.end).rev().find(|&i| m.body[i].def() == Some(var)) {
                    return Ok(i);
                }
            }
        }
        Err(SliceError::NoDefinition(var.to_string()))
    }

    pub(crate) fn resolve_var(&mut self, f: usize, use_idx: usize, var: &str) -> Result<Operand, SliceError> {
        let d = self.find_def(f, use_idx, var)?;
        self.resolve_def(f, d)
    }

    pub(crate) fn resolve_operand(&mut self, f: usize, use_idx: usize, op: &Operand) -> Result<Operand, SliceError> {
        match op {
            Operand::Const(v) => Ok(Operand::Const(v.clone())),
            Operand::Var(v) => self.resolve_var(f, use_idx, v),
        }
    }

    fn var_type(&self, f: usize, idx: usize) -> String {
        let m = self.method(&self.frames[f].method);
        let s = &m.body[idx];
        s.def()
            .and_then(|v| m.local_type(v).map(str::to_string))
            .or_else(|| s.defined_type())
            .unwrap_or_else(|| "java.lang.Object".into())
    }

    pub(crate) fn resolve_def(&mut self, f: usize, idx: usize) -> Result<Operand, SliceError> {
        if let Some(op) = self.st.memo.get(&(f, idx)) {
            return Ok(op.clone());
        }
        if self.active.contains(&(f, idx)) {
            let ty = self.var_type(f, idx);
            return self.dummy_auto(&ty);
        }
        self.active.insert((f, idx));
        self.visited.insert(StmtRef { method: self.frames[f].method.clone(), index: idx });
        let res = self.resolve_def_inner(f, idx);
        self.active.remove(&(f, idx));
        if let Ok(op) = &res {
            self.st.memo.insert((f, idx), op.clone());
        }
        res
    }

    fn resolve_def_inner(&mut self, f: usize, idx: usize) -> Result<Operand, SliceError> {
        let p = self.ctx.program;
        let m = self.method(&self.frames[f].method);
        let stmt = m.body[idx].clone();
        match &stmt {
            IrStatement::IdentityParam { index, ty, .. } => self.resolve_param(f, *index, ty),
            IrStatement::IdentityThis { ty, .. } => self.resolve_this(f, ty),
            IrStatement::AssignConst { value, .. } => Ok(Operand::Const(value.clone())),
            IrStatement::AssignCast { ty, src, .. } => {
                let s = self.resolve_var(f, idx, src)?;
                let sv = self.as_var(s);
                let t = self.fresh();
                self.emit(self.origin(f, idx), f, IrStatement::AssignCast { var: t.clone(), ty: ty.clone(), src: sv });
                Ok(Operand::Var(t))
            }
            IrStatement::AssignNew { var, ty } => {
                if p.is_app_class(ty) || !p.is_framework_class(ty) {
                    return self.dummy_auto(ty);
                }
                let init = find_constructor_call(m, idx, var);
                let args = match init {
                    Some((j, call)) => {
                        let mut out = Vec::new();
                        for a in &call.args {
                            let r = self.resolve_operand(f, j, a)?;
                            out.push(r);
                        }
                        Some((j, call.callee.clone(), out))
                    }
                    None => None,
                };
                let t = self.fresh();
                self.emit(self.origin(f, idx), f, IrStatement::AssignNew { var: t.clone(), ty: ty.clone() });
                if let Some((j, callee, args)) = args {
                    let call = Invoke { kind: InvokeKind::Special, callee, receiver: Some(t.clone()), args };
                    self.emit(self.origin(f, j), f, IrStatement::InvokeVoid { call });
                }
                Ok(Operand::Var(t))
            }
            IrStatement::AssignInvoke { call, .. } => {
                if p.is_framework_method(&call.callee) {
                    self.framework_call(f, idx, call)
                } else if p.method(&call.callee).is_some() {
                    self.inline(f, idx, call)
                } else {
                    Err(SliceError::NoDefinition(call.callee.to_string()))
                }
            }
            IrStatement::AssignFieldLoad { field, base, .. } => {
                let base = match base {
                    Some(b) if p.framework.fields.contains(field) => {
                        let r = self.resolve_var(f, idx, b)?;
                        Some(self.as_var(r))
                    }
                    _ => None,
                };
                let t = self.fresh();
                self.emit(
                    self.origin(f, idx),
                    f,
                    IrStatement::AssignFieldLoad { var: t.clone(), field: field.clone(), base },
                );
                Ok(Operand::Var(t))
            }
            other => Err(SliceError::NoDefinition(other.def().unwrap_or("?").to_string())),
        }
    }

    fn framework_call(&mut self, f: usize, idx: usize, call: &Invoke) -> Result<Operand, SliceError> {
        let receiver = match &call.receiver {
            Some(r) => {
                let op = self.resolve_var(f, idx, r)?;
                Some(self.as_var(op))
            }
            None => None,
        };
        let mut args = Vec::new();
        for a in &call.args {
            args.push(self.resolve_operand(f, idx, a)?);
        }
        let t = self.fresh();
        let new_call = Invoke { kind: call.kind, callee: call.callee.clone(), receiver, args };
        self.emit(self.origin(f, idx), f, IrStatement::AssignInvoke { var: t.clone(), call: new_call });
        self.st.terminals.insert(t.clone(), Terminal::FrameworkResult { api: call.callee.clone() });
        Ok(Operand::Var(t))
    }

    fn inline(&mut self, f: usize, idx: usize, call: &Invoke) -> Result<Operand, SliceError> {
        let mut cur = Some(f);
        while let Some(c) = cur {
            if self.frames[c].method == call.callee {
                return self.dummy_auto(&call.callee.return_type);
            }
            cur = self.frames[c].parent.map(|(pf, _)| pf);
        }
        let key = FrameKey::Inlined { parent: f, site: idx };
        let nf = match self.frame_index.get(&key) {
            Some(&nf) => nf,
            None => {
                let depth = self.frames[f].depth + 1;
                if depth > self.config.depth_cap {
                    return Err(SliceError::DepthExceeded(self.config.depth_cap));
                }
                let callee = self.method(&call.callee);
                let cfg = self.ctx.icfg.cfg(&call.callee).expect("cfg for defined method");
                let returns: Vec<usize> = callee
                    .body
                    .iter()
                    .enumerate()
                    .filter(|(i, s)| matches!(s, IrStatement::Return { .. }) && !cfg.dead[cfg.block_of(*i)])
                    .map(|(i, _)| i)
                    .collect();
                if returns.is_empty() {
                    return Err(SliceError::NoDefinition(format!("return value of {}", call.callee)));
                }
                let anchor = returns[self.chooser.choose(returns.len())];
                let nf = self.frames.len();
                self.frames.push(Frame {
                    method: call.callee.clone(),
                    anchor,
                    parent: Some((f, idx)),
                    depth,
                    path: None,
                });
                self.frame_index.insert(key, nf);
                nf
            }
        };
        let anchor = self.frames[nf].anchor;
        let IrStatement::Return { value } = self.method(&call.callee).body[anchor].clone() else {
            unreachable!("inlined frames are anchored at return statements")
        };
        self.resolve_operand(nf, anchor, &value)
    }

    fn resolve_param(&mut self, f: usize, index: usize, ty: &str) -> Result<Operand, SliceError> {
        if let Some((pf, site)) = self.frames[f].parent {
            let pm = self.method(&self.frames[pf].method);
            let arg = pm.body[site].invoke().expect("inline site is a call").args[index].clone();
            return self.resolve_operand(pf, site, &arg);
        }
        let Some((cf, site)) = self.caller_frame(f)? else {
            return self.dummy_auto(ty);
        };
        let cm = self.method(&self.frames[cf].method);
        let Some(arg) = cm.body[site].invoke().and_then(|c| c.args.get(index)).cloned() else {
            return Err(SliceError::NoDefinition(format!("@parameter{index}")));
        };
        self.resolve_operand(cf, site, &arg)
    }

    fn resolve_this(&mut self, f: usize, ty: &str) -> Result<Operand, SliceError> {
        let (cf, site) = match self.frames[f].parent {
            Some(ps) => ps,
            None => match self.caller_frame(f)? {
                Some(x) => x,
                None => return self.dummy_auto(ty),
            },
        };
        let cm = self.method(&self.frames[cf].method);
        let Some(recv) = cm.body[site].invoke().and_then(|c| c.receiver.clone()) else {
            return Err(SliceError::NoDefinition("@this".into()));
        };
        self.resolve_var(cf, site, &recv)
    }

    /// Picks one call site of a top frame's method as its calling context.
    fn caller_frame(&mut self, f: usize) -> Result<Option<(usize, usize)>, SliceError> {
        let callers = self.ctx.cg.callers_of(&self.frames[f].method);
        if callers.is_empty() {
            return Ok(None);
        }
        let (cm, site) = callers[self.chooser.choose(callers.len())].clone();
        let cf = self.top_frame(&cm, site, self.frames[f].depth + 1)?;
        Ok(Some((cf, site)))
    }

    /// Gives a constant a variable name so it can appear where the IR wants one.
    pub(crate) fn as_var(&mut self, op: Operand) -> String {
        match op {
            Operand::Var(v) => v,
            Operand::Const(value) => {
                let t = self.fresh();
                self.st.terminals.insert(t.clone(), Terminal::Constant { value });
                t
            }
        }
    }

    fn dummy_auto(&mut self, ty: &str) -> Result<Operand, SliceError> {
        let slot = format!("dummy{}", self.st.dummies);
        self.st.dummies += 1;
        self.dummy(ty, &slot)
    }

    pub(crate) fn dummy(&mut self, ty: &str, slot: &str) -> Result<Operand, SliceError> {
        let seed = dummy_seed(self.config.seed, &self.scope, slot);
        let d = synthesize_dummy_value(self.ctx.program, ty, seed)?;
        Ok(Operand::Var(self.materialize(&d, ty, seed)))
    }

    pub(crate) fn null_dummy(&mut self, ty: &str) -> Operand {
        let t = self.fresh();
        self.st.terminals.insert(
            t.clone(),
            Terminal::Dummy { rule: DummyRule::Null, seed: 0, ty: ty.to_string(), value: Some(Value::Null) },
        );
        Operand::Var(t)
    }

    fn materialize(&mut self, d: &DummyValue, ty: &str, seed: u64) -> String {
        match d {
            DummyValue::Literal { rule, value } => {
                let t = self.fresh();
                self.st.terminals.insert(
                    t.clone(),
                    Terminal::Dummy { rule: *rule, seed, ty: ty.to_string(), value: Some(value.clone()) },
                );
                t
            }
            DummyValue::Environment { class } => {
                let t = self.fresh();
                self.emit(None, 0, IrStatement::AssignNew { var: t.clone(), ty: class.clone() });
                self.st.terminals.insert(
                    t.clone(),
                    Terminal::Dummy { rule: DummyRule::Environment, seed, ty: ty.to_string(), value: None },
                );
                t
            }
            DummyValue::Construct { class, ctor, args } => {
                let arg_vars: Vec<Operand> = args
                    .iter()
                    .zip(&ctor.param_types)
                    .map(|(a, pty)| Operand::Var(self.materialize(a, pty, seed)))
                    .collect();
                let t = self.fresh();
                self.emit(None, 0, IrStatement::AssignNew { var: t.clone(), ty: class.clone() });
                let call = Invoke { kind: InvokeKind::Special, callee: ctor.clone(), receiver: Some(t.clone()), args: arg_vars };
                self.emit(None, 0, IrStatement::InvokeVoid { call });
                self.st.terminals.insert(
                    t.clone(),
                    Terminal::Dummy { rule: DummyRule::Object, seed, ty: ty.to_string(), value: None },
                );
                t
            }
        }
    }

    fn snapshot(&self) -> State {
        self.st.clone()
    }

    fn restore(&mut self, s: State) {
        self.st = s;
    }

    fn warn(&mut self, msg: String) {
        self.st.warnings.push(msg);
    }

    fn binding_source(&self, op: &Operand) -> ValueSource {
        match op {
            Operand::Const(value) => ValueSource::Constant { value: value.clone() },
            Operand::Var(v) => match self.st.terminals.get(v) {
                Some(Terminal::Dummy { rule, seed, .. }) => ValueSource::Dummy { rule: *rule, seed: *seed, var: v.clone() },
                _ => ValueSource::TraceVar { var: v.clone() },
            },
        }
    }

    /// Resolves the site's arguments (unless `receiver_only`) and then its
    /// receiver, falling back to dummies when a value cannot be traced.
    pub(crate) fn run_site(&mut self, site: &CallSite, receiver_only: bool) -> Result<CallTrace, SliceError> {
        let f = self.top_frame(&site.method, site.stmt_index, 0)?;
        let mut bindings = Vec::new();
        if !receiver_only {
            for (i, arg) in site.args.iter().enumerate() {
                let ty = site.target.param_types.get(i).cloned().unwrap_or_else(|| "java.lang.Object".into());
                let snap = self.snapshot();
                let op = match self.resolve_operand(f, site.stmt_index, arg) {
                    Ok(op) => op,
                    Err(e) => {
                        self.restore(snap);
                        self.warn(format!("argument {i}: {e}; using a dummy value"));
                        match self.dummy(&ty, &format!("param{i}")) {
                            Ok(op) => op,
                            Err(_) => self.null_dummy(&ty),
                        }
                    }
                };
                bindings.push(ParamBinding { param_index: i, source: self.binding_source(&op) });
            }
        }
        let root = match &site.receiver_var {
            None => None,
            Some(r) => {
                let snap = self.snapshot();
                let op = match self.resolve_var(f, site.stmt_index, r) {
                    Ok(op) => op,
                    Err(e) => {
                        self.restore(snap);
                        self.warn(format!("receiver: {e}; using a dummy value"));
                        self.dummy(&site.target.declaring_class, "receiver").map_err(|inner| {
                            SliceError::UnresolvableReceiver { site: site_label(site), reason: format!("{e}; {inner}") }
                        })?
                    }
                };
                Some(Operand::Var(self.as_var(op)))
            }
        };
        let mut trace = CallTrace::empty(site.clone());
        trace.statements = std::mem::take(&mut self.st.statements);
        trace.terminals = std::mem::take(&mut self.st.terminals);
        trace.warnings = std::mem::take(&mut self.st.warnings);
        trace.root = root;
        trace.bindings = bindings;
        Ok(trace)
    }
}

pub(crate) fn site_label(site: &CallSite) -> String {
    format!("{}@{}", site.method, site.stmt_index)
}

/// The `specialinvoke v.<init>(..)` that initializes the object allocated at
/// `idx`, if it follows before `v` is redefined.
fn find_constructor_call<'m>(m: &'m IrMethod, idx: usize, var: &str) -> Option<(usize, &'m Invoke)> {
    for (j, s) in m.body.iter().enumerate().skip(idx + 1) {
        if let IrStatement::InvokeVoid { call } = s {
            if call.kind == InvokeKind::Special && call.callee.is_constructor() && call.receiver.as_deref() == Some(var) {
                return Some((j, call));
            }
        }
        if s.def() == Some(var) {
            return None;
        }
    }
    None
}
