use std::collections::{BTreeMap, BTreeSet};

use super::diag::{Diagnostic, DiagnosticKind, Locus};
use super::types::*;
use crate::graphs::Cfg;

/// Checks every static well-formedness rule of a program. An empty result
/// means the program is ready for analysis.
pub fn validate_program(p: &IrProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let fw_locus = |what: String| Locus { class: Some(format!("framework {what}")), ..Default::default() };
    for c in &p.framework.classes {
        if !is_valid_type_name(c) {
            out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("bad class name `{c}`"), fw_locus(c.clone())));
        }
    }
    for m in &p.framework.methods {
        check_signature(m, &fw_locus(m.to_string()), &mut out);
    }
    for f in &p.framework.fields {
        if !is_valid_type_name(&f.declaring_class) || !is_valid_type_name(&f.field_type) || !is_valid_ident(&f.name) {
            out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("bad field signature {f}"), fw_locus(f.to_string())));
        }
    }

    for class in p.classes.values() {
        let class_locus = Locus { class: Some(class.name.clone()), ..Default::default() };
        if !is_valid_type_name(&class.name) {
            out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("bad class name `{}`", class.name), class_locus.clone()));
        }
        if let Some(s) = &class.superclass {
            if !is_valid_type_name(s) {
                out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("bad superclass `{s}`"), class_locus.clone()));
            }
        }
        for f in &class.fields {
            if !is_valid_ident(&f.name) || !is_valid_type_name(&f.ty) {
                out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("bad field `{} {}`", f.ty, f.name), class_locus.clone()));
            }
        }
        for m in &class.methods {
            let locus = Locus { class: Some(class.name.clone()), method: Some(m.signature.to_string()), ..Default::default() };
            check_signature(&m.signature, &locus, &mut out);
            if p.framework.methods.iter().any(|f| f.same_member(&m.signature)) {
                out.push(Diagnostic::new(
                    DiagnosticKind::FrameworkOverlap,
                    format!("{} is both defined and declared as framework", m.signature),
                    locus,
                ));
            }
            out.extend(validate_method_body(m));
        }
    }
    out.extend(reference_diagnostics(p));
    out
}

fn check_signature(sig: &MethodSignature, locus: &Locus, out: &mut Vec<Diagnostic>) {
    let name_ok = sig.name == "<init>" || sig.name == "<clinit>" || is_valid_ident(&sig.name);
    let types_ok = is_valid_type_name(&sig.declaring_class)
        && is_valid_type_name(&sig.return_type)
        && sig.param_types.iter().all(|t| is_valid_type_name(t));
    if !name_ok || !types_ok {
        out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("malformed signature {sig}"), locus.clone()));
    }
}

/// Structural checks that need no program context: identity statements,
/// labels, call arity, type names and path-sensitive use-before-def.
pub fn validate_method_body(m: &IrMethod) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let sig = &m.signature;
    let at = |i: usize| Locus::stmt(&sig.declaring_class, &sig.to_string(), i);

    let mut seen_this = false;
    let mut seen_params = BTreeSet::new();
    let mut labels: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, s) in m.body.iter().enumerate() {
        match s {
            IrStatement::IdentityThis { .. } => {
                if std::mem::replace(&mut seen_this, true) {
                    out.push(Diagnostic::new(DiagnosticKind::DuplicateThis, "second @this identity", at(i)));
                }
            }
            IrStatement::IdentityParam { index, .. } => {
                if *index >= sig.arity() {
                    out.push(Diagnostic::new(
                        DiagnosticKind::BadParamIndex,
                        format!("@parameter{index} but the method takes {} parameters", sig.arity()),
                        at(i),
                    ));
                }
                if !seen_params.insert(*index) {
                    out.push(Diagnostic::new(
                        DiagnosticKind::DuplicateParamIndex,
                        format!("@parameter{index} bound twice"),
                        at(i),
                    ));
                }
            }
            IrStatement::Label { name } => {
                if labels.insert(name, i).is_some() {
                    out.push(Diagnostic::new(DiagnosticKind::DuplicateLabel, format!("label `{name}` defined twice"), at(i)));
                }
            }
            _ => {}
        }
        if let Some(call) = s.invoke() {
            if call.args.len() != call.callee.arity() {
                out.push(Diagnostic::new(
                    DiagnosticKind::ArityMismatch,
                    format!("{} takes {} arguments, {} given", call.callee, call.callee.arity(), call.args.len()),
                    at(i),
                ));
            }
            let mut bad = Vec::new();
            check_signature(&call.callee, &at(i), &mut bad);
            out.extend(bad);
        }
        if let Some(ty) = statement_type_name(s) {
            if !is_valid_type_name(ty) {
                out.push(Diagnostic::new(DiagnosticKind::InvalidName, format!("bad type name `{ty}`"), at(i)));
            }
        }
    }
    for (i, s) in m.body.iter().enumerate() {
        if let Some(t) = s.jump_target() {
            if !labels.contains_key(t) {
                out.push(Diagnostic::new(DiagnosticKind::MissingLabel, format!("jump to undefined label `{t}`"), at(i)));
            }
        }
    }
    // the CFG drops edges to missing labels, which would only add noise here
    if out.iter().all(|d| d.kind != DiagnosticKind::MissingLabel) {
        out.extend(use_before_def(m));
    }
    out
}

fn statement_type_name(s: &IrStatement) -> Option<&str> {
    match s {
        IrStatement::IdentityParam { ty, .. }
        | IrStatement::IdentityThis { ty, .. }
        | IrStatement::AssignCast { ty, .. }
        | IrStatement::AssignNew { ty, .. } => Some(ty),
        _ => None,
    }
}

/// Must-be-defined dataflow over the CFG. A use of a variable defined
/// somewhere in the method, but not on every path reaching the use, is a
/// `UseBeforeDef`; variables never defined are reported by
/// [`reference_diagnostics`].
fn use_before_def(m: &IrMethod) -> Vec<Diagnostic> {
    let cfg = Cfg::build(m);
    let all_defs: BTreeSet<&str> = m.body.iter().filter_map(|s| s.def()).collect();
    let n = cfg.blocks.len();

    let mut out_sets: Vec<Option<BTreeSet<&str>>> = vec![None; n];
    let mut changed = true;
    while changed {
        changed = false;
        for b in 0..n {
            if cfg.dead[b] {
                continue;
            }
            let mut set = block_in(&cfg, &all_defs, b, &out_sets);
            for s in &m.body[cfg.blocks[b].start..cfg.blocks[b].end] {
                if let Some(d) = s.def() {
                    set.insert(d);
                }
            }
            if out_sets[b].as_ref() != Some(&set) {
                out_sets[b] = Some(set);
                changed = true;
            }
        }
    }

    let sig = &m.signature;
    let mut diags = Vec::new();
    for b in 0..n {
        if cfg.dead[b] {
            continue;
        }
        let mut set = block_in(&cfg, &all_defs, b, &out_sets);
        for i in cfg.blocks[b].start..cfg.blocks[b].end {
            let s = &m.body[i];
            let mut reported = BTreeSet::new();
            for u in s.uses() {
                if !set.contains(u) && all_defs.contains(u) && reported.insert(u) {
                    diags.push(Diagnostic::new(
                        DiagnosticKind::UseBeforeDef,
                        format!("`{u}` may be used before it is defined"),
                        Locus::stmt(&sig.declaring_class, &sig.to_string(), i),
                    ));
                }
            }
            if let Some(d) = s.def() {
                set.insert(d);
            }
        }
    }
    diags
}

fn block_in<'a>(
    cfg: &Cfg,
    all_defs: &BTreeSet<&'a str>,
    b: usize,
    out_sets: &[Option<BTreeSet<&'a str>>],
) -> BTreeSet<&'a str> {
    if b == cfg.entry {
        return BTreeSet::new();
    }
    let mut acc: Option<BTreeSet<&str>> = None;
    for &p in &cfg.preds[b] {
        if cfg.dead[p] {
            continue;
        }
        // unvisited predecessors contribute the full universe (optimistic start)
        let ps = out_sets[p].clone().unwrap_or_else(|| all_defs.clone());
        acc = Some(match acc {
            None => ps,
            Some(a) => a.intersection(&ps).copied().collect(),
        });
    }
    acc.unwrap_or_default()
}

/// Unresolved callees, fields and never-defined variables.
pub fn reference_diagnostics(p: &IrProgram) -> Vec<Diagnostic> {
    let defined: BTreeSet<&MethodSignature> = p.methods().map(|m| &m.signature).collect();
    let mut out = Vec::new();
    for m in p.methods() {
        let sig = &m.signature;
        let at = |i: usize| Locus::stmt(&sig.declaring_class, &sig.to_string(), i);
        let defs: BTreeSet<&str> = m.body.iter().filter_map(|s| s.def()).collect();
        for (i, s) in m.body.iter().enumerate() {
            if let Some(call) = s.invoke() {
                if !defined.contains(&call.callee) && !p.framework.methods.contains(&call.callee) {
                    out.push(Diagnostic::new(
                        DiagnosticKind::UnresolvedReference,
                        format!("call to unknown method {}{}", if call.callee.is_static { "static " } else { "" }, call.callee),
                        at(i),
                    ));
                }
            }
            let field = match s {
                IrStatement::AssignFieldLoad { field, .. } | IrStatement::FieldStore { field, .. } => Some(field),
                _ => None,
            };
            if let Some(f) = field {
                if !p.field_declared(f) {
                    out.push(Diagnostic::new(DiagnosticKind::UnresolvedReference, format!("unknown field {f}"), at(i)));
                }
            }
            let mut reported = BTreeSet::new();
            for u in s.uses() {
                if !defs.contains(u) && reported.insert(u) {
                    out.push(Diagnostic::new(
                        DiagnosticKind::UnresolvedReference,
                        format!("variable `{u}` is never defined"),
                        at(i),
                    ));
                }
            }
        }
    }
    out
}
