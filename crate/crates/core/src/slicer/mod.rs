//! Backward inter-procedural slicing from target API call sites.
//!
//! A [`Session`](session::Session) resolves every variable a call site needs
//! by walking definitions backwards: along one acyclic path per method frame,
//! into callee return statements for app calls, and out to call sites for
//! parameters. Each point where the walk could go more than one way (path,
//! caller, return statement) is a decision; enumerating decisions yields the
//! per-branch trace variants.

mod dummy;
mod fields;
mod session;
mod trace;

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::graphs::{build_call_graph, build_icfg, CallGraph, Icfg};
use crate::ir::{IrProgram, IrStatement, MethodSignature};

pub use dummy::{dummy_seed, synthesize_dummy_value, DummyValue};
pub use fields::lower_field_access;
pub use trace::{CallSite, CallTrace, DummyRule, ParamBinding, StmtRef, Terminal, TraceStmt, ValueSource};

use session::{site_label, Session};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SliceError {
    #[error("{0} is not a framework API")]
    UnknownTarget(String),
    #[error("no definition of `{0}` on any backward path")]
    NoDefinition(String),
    #[error("cannot build the receiver at {site}: {reason}")]
    UnresolvableReceiver { site: String, reason: String },
    #[error("more than {0} inter-procedural hops")]
    DepthExceeded(usize),
    #[error("more than {limit} distinct traces at {site}")]
    BranchCapExceeded { site: String, limit: usize },
    #[error("no way to construct a value of type {0}")]
    Unconstructible(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceConfig {
    pub depth_cap: usize,
    pub branch_cap: usize,
    /// Session runs allowed per site while enumerating variants.
    pub explore_cap: usize,
    pub seed: u64,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig { depth_cap: 64, branch_cap: 16, explore_cap: 1024, seed: 0 }
    }
}

/// A program together with its call graph and ICFG.
pub struct AnalysisContext<'p> {
    pub program: &'p IrProgram,
    pub cg: CallGraph,
    pub icfg: Icfg,
}

impl<'p> AnalysisContext<'p> {
    pub fn new(program: &'p IrProgram) -> Self {
        let cg = build_call_graph(program);
        let icfg = build_icfg(program, &cg);
        AnalysisContext { program, cg, icfg }
    }
}

/// Every call of a target API, in class, method and statement order. An
/// empty target set selects all framework APIs.
pub fn locate_api_call_sites(p: &IrProgram, targets: &BTreeSet<MethodSignature>) -> Result<Vec<CallSite>, SliceError> {
    if let Some(t) = targets.iter().find(|t| !p.is_framework_method(t)) {
        return Err(SliceError::UnknownTarget(t.to_string()));
    }
    let mut out = Vec::new();
    for m in p.methods() {
        for (i, s) in m.body.iter().enumerate() {
            let Some(call) = s.invoke() else { continue };
            let wanted = if targets.is_empty() { p.is_framework_method(&call.callee) } else { targets.contains(&call.callee) };
            if wanted {
                out.push(CallSite {
                    method: m.signature.clone(),
                    stmt_index: i,
                    target: call.callee.clone(),
                    kind: call.kind,
                    receiver_var: call.receiver.clone(),
                    args: call.args.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Nearest definitions of `var` before statement `use_idx` of `method`, one
/// per distinct definition found across the acyclic backward paths.
pub fn get_definition_stmt(
    ctx: &AnalysisContext<'_>,
    method: &MethodSignature,
    use_idx: usize,
    var: &str,
) -> Result<Vec<StmtRef>, SliceError> {
    let m = ctx.program.method(method).ok_or_else(|| SliceError::NoDefinition(var.to_string()))?;
    let cfg = ctx.icfg.cfg(method).expect("cfg for defined method");
    let b = cfg.block_of(use_idx);
    let (paths, _) = cfg.backward_paths(b, usize::MAX);
    let mut out: Vec<StmtRef> = Vec::new();
    for path in paths {
        let found = path.iter().rev().find_map(|&pb| {
            let blk = &cfg.blocks[pb];
            let end = if pb == b { use_idx } else { blk.end };
            (blk.start..end).rev().find(|&i| m.body[i].def() == Some(var))
        });
        if let Some(i) = found {
            let r = StmtRef { method: method.clone(), index: i };
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    if out.is_empty() {
        return Err(SliceError::NoDefinition(var.to_string()));
    }
    Ok(out)
}

/// Visited statements of one inference run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VisitedSet(pub BTreeSet<StmtRef>);

/// Trace that rebuilds the value defined at `def`, taking the first option at
/// every decision. Statements already in `visited` are not revisited within
/// the run; the set grows by everything the run touched.
pub fn construct_call_trace(
    ctx: &AnalysisContext<'_>,
    config: &SliceConfig,
    def: &StmtRef,
    visited: &mut VisitedSet,
) -> Result<CallTrace, SliceError> {
    let m = ctx.program.method(&def.method).ok_or_else(|| SliceError::NoDefinition(def.method.to_string()))?;
    let stmt = &m.body[def.index];
    let site = CallSite {
        method: def.method.clone(),
        stmt_index: def.index,
        target: stmt.invoke().map(|c| c.callee.clone()).unwrap_or_else(|| def.method.clone()),
        kind: stmt.invoke().map(|c| c.kind).unwrap_or(crate::ir::InvokeKind::Static),
        receiver_var: None,
        args: Vec::new(),
    };
    if visited.0.contains(def) {
        return Ok(CallTrace::empty(site));
    }
    let mut s = Session::new(ctx, config, def.method.to_string(), Vec::new());
    let f = s.top_frame(&def.method, def.index, 0)?;
    let op = s.resolve_def(f, def.index)?;
    visited.0.extend(std::mem::take(&mut s.visited));
    let out = s.finish();
    let mut trace = CallTrace::empty(site);
    trace.statements = out.statements;
    trace.terminals = out.terminals;
    trace.warnings = out.warnings;
    trace.root = Some(op);
    Ok(trace)
}

/// Trace building only the receiver of a call site (no trace for static
/// targets, whose signature alone suffices).
pub fn infer_caller_context(ctx: &AnalysisContext<'_>, config: &SliceConfig, site: &CallSite) -> Result<CallTrace, SliceError> {
    if site.target.is_static {
        return Ok(CallTrace::empty(site.clone()));
    }
    let mut s = Session::new(ctx, config, site.target.to_string(), Vec::new());
    let trace = s.run_site(site, true)?;
    Ok(lower_field_access(trace, ctx, config))
}

/// One binding per target parameter, from the first trace variant.
pub fn infer_parameter_values(
    ctx: &AnalysisContext<'_>,
    config: &SliceConfig,
    site: &CallSite,
) -> Result<Vec<ParamBinding>, SliceError> {
    let mut s = Session::new(ctx, config, site.target.to_string(), Vec::new());
    let trace = s.run_site(site, false)?;
    Ok(lower_field_access(trace, ctx, config).bindings)
}

/// Distinct trace variants of a site, at most `branch_cap` of them. The flag
/// reports whether more existed.
pub fn split_branches_truncated(
    ctx: &AnalysisContext<'_>,
    config: &SliceConfig,
    site: &CallSite,
) -> Result<(Vec<CallTrace>, bool), SliceError> {
    let mut traces: Vec<CallTrace> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut first_err = None;
    let mut prefix = Some(Vec::new());
    let mut runs = 0;
    let mut exceeded = false;
    while let Some(p) = prefix.take() {
        runs += 1;
        let mut s = Session::new(ctx, config, site.target.to_string(), p);
        match s.run_site(site, false) {
            Ok(trace) => {
                let mut trace = lower_field_access(trace, ctx, config);
                let key = trace.to_json().to_string();
                if seen.insert(key) {
                    if traces.len() == config.branch_cap {
                        exceeded = true;
                        break;
                    }
                    trace.variant = traces.len();
                    traces.push(trace);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
        if runs >= config.explore_cap {
            break;
        }
        prefix = s.chooser.next_prefix();
    }
    if traces.is_empty() {
        if let Some(e) = first_err {
            return Err(e);
        }
    }
    Ok((traces, exceeded))
}

/// Distinct trace variants of a site, one per combination of branch, caller
/// and return-statement choices whose definitions differ.
pub fn split_branches(ctx: &AnalysisContext<'_>, config: &SliceConfig, site: &CallSite) -> Result<Vec<CallTrace>, SliceError> {
    let (traces, exceeded) = split_branches_truncated(ctx, config, site)?;
    if exceeded {
        return Err(SliceError::BranchCapExceeded { site: site_label(site), limit: config.branch_cap });
    }
    Ok(traces)
}

/// Largest `tN` index in use plus one.
pub(crate) fn next_trace_var(trace: &CallTrace) -> usize {
    let defs = trace.statements.iter().filter_map(|s| s.stmt.def());
    defs.chain(trace.terminals.keys().map(String::as_str))
        .filter_map(|v| v.strip_prefix('t').and_then(|n| n.parse::<usize>().ok()))
        .map(|n| n + 1)
        .max()
        .unwrap_or(0)
}

/// True for loads of app-declared fields still waiting for lowering.
pub(crate) fn is_field_placeholder(p: &IrProgram, s: &IrStatement) -> bool {
    matches!(s, IrStatement::AssignFieldLoad { field, .. } if !p.framework.fields.contains(field))
}

