use super::session::Session;
use super::trace::{CallTrace, Terminal, ValueSource};
use super::{is_field_placeholder, next_trace_var, AnalysisContext, SliceConfig};
use crate::ir::{FieldSignature, IrStatement, Operand};

/// Guards against fields whose stores read other fields in a cycle.
const MAX_LOWERINGS: usize = 64;

/// Replaces each load of an app field by the computation of the value first
/// stored into it (in method, then statement order of the declaring class).
/// Loads of fields never stored, or whose stored value cannot be rebuilt,
/// become dummies.
pub fn lower_field_access(mut trace: CallTrace, ctx: &AnalysisContext<'_>, config: &SliceConfig) -> CallTrace {
    let p = ctx.program;
    let mut lowered = 0;
    let mut i = 0;
    while i < trace.statements.len() {
        if !is_field_placeholder(p, &trace.statements[i].stmt) {
            i += 1;
            continue;
        }
        let IrStatement::AssignFieldLoad { var, field, .. } = trace.statements[i].stmt.clone() else { unreachable!() };
        lowered += 1;
        let next_var = next_trace_var(&trace);
        let frame_offset = trace.statements.iter().map(|s| s.frame + 1).max().unwrap_or(0);
        let mut s = Session::new(ctx, config, field.to_string(), Vec::new()).with_offsets(next_var, frame_offset);

        let store = if lowered > MAX_LOWERINGS { None } else { first_store(ctx, &field) };
        let resolved = store.and_then(|(m, j, src)| {
            let f = s.top_frame(&m, j, 0).ok()?;
            s.resolve_operand(f, j, &src).ok()
        });
        let op = match resolved {
            Some(op) => op,
            None => {
                // a failed attempt may have left partial output behind
                s = Session::new(ctx, config, field.to_string(), Vec::new()).with_offsets(next_var, frame_offset);
                match s.dummy(&field.field_type, "field") {
                    Ok(op) => op,
                    Err(_) => s.null_dummy(&field.field_type),
                }
            }
        };
        let out = s.finish();
        trace.warnings.extend(out.warnings);
        trace.terminals.extend(out.terminals);
        let spliced = out.statements.len();
        trace.statements.splice(i..=i, out.statements);
        match op {
            Operand::Const(value) => {
                trace.terminals.insert(var, Terminal::Constant { value });
            }
            Operand::Var(u) => rename_after(&mut trace, i + spliced, &var, &u),
        }
        // rescan the spliced statements, they may load fields too
    }
    reclassify_bindings(&mut trace);
    trace
}

fn first_store(ctx: &AnalysisContext<'_>, field: &FieldSignature) -> Option<(crate::ir::MethodSignature, usize, Operand)> {
    let class = ctx.program.classes.get(&field.declaring_class)?;
    class.methods.iter().find_map(|m| {
        m.body.iter().enumerate().find_map(|(j, s)| match s {
            IrStatement::FieldStore { field: f, src, .. } if f == field => Some((m.signature.clone(), j, src.clone())),
            _ => None,
        })
    })
}

fn rename_after(trace: &mut CallTrace, from: usize, old: &str, new: &str) {
    for s in &mut trace.statements[from..] {
        s.stmt.rename_var(old, new);
    }
    if trace.root.as_ref().and_then(|r| r.as_var()) == Some(old) {
        trace.root = Some(Operand::Var(new.to_string()));
    }
    for b in &mut trace.bindings {
        if let ValueSource::TraceVar { var } = &mut b.source {
            if var == old {
                *var = new.to_string();
            }
        }
    }
}

fn reclassify_bindings(trace: &mut CallTrace) {
    for b in &mut trace.bindings {
        if let ValueSource::TraceVar { var } = &b.source {
            match trace.terminals.get(var) {
                Some(Terminal::Dummy { rule, seed, .. }) => {
                    b.source = ValueSource::Dummy { rule: *rule, seed: *seed, var: var.clone() };
                }
                Some(Terminal::Constant { value }) if !trace.statements.iter().any(|s| s.stmt.uses().contains(&var.as_str())) => {
                    b.source = ValueSource::Constant { value: value.clone() };
                }
                _ => {}
            }
        }
    }
}
