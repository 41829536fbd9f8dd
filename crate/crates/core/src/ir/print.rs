use std::fmt::Write as _;

use super::types::*;

/// Renders a literal in the form the parser reads back.
pub fn print_value(v: &Value) -> String {
    match v {
        Value::Int(n) => n.to_string(),
        Value::Long(n) => format!("{n}L"),
        Value::Double(d) if d.is_nan() => "NaN".into(),
        Value::Double(d) if d.is_infinite() && *d > 0.0 => "Infinity".into(),
        Value::Double(d) => format!("{d:?}"),
        Value::Bool(b) => b.to_string(),
        Value::Str(s) => {
            let mut out = String::with_capacity(s.len() + 2);
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    '\r' => out.push_str("\\r"),
                    c => out.push(c),
                }
            }
            out.push('"');
            out
        }
        Value::Null => "null".into(),
        Value::Array { elem_type, items } => {
            let items: Vec<String> = items.iter().map(print_value).collect();
            format!("{elem_type}[]{{{}}}", items.join(", "))
        }
    }
}

pub fn print_operand(op: &Operand) -> String {
    match op {
        Operand::Var(v) => v.clone(),
        Operand::Const(c) => print_value(c),
    }
}

fn print_invoke(call: &Invoke) -> String {
    let args: Vec<String> = call.args.iter().map(print_operand).collect();
    match &call.receiver {
        Some(r) => format!("{} {r}.{}({})", call.kind.keyword(), call.callee, args.join(", ")),
        None => format!("{} {}({})", call.kind.keyword(), call.callee, args.join(", ")),
    }
}

/// One statement, without indentation, terminated by `;` (labels by `:`).
pub fn print_statement(stmt: &IrStatement) -> String {
    match stmt {
        IrStatement::IdentityParam { var, index, ty } => format!("{var} := @parameter{index}: {ty};"),
        IrStatement::IdentityThis { var, ty } => format!("{var} := @this: {ty};"),
        IrStatement::AssignConst { var, value } => format!("{var} = {};", print_value(value)),
        IrStatement::AssignCast { var, ty, src } => format!("{var} = ({ty}) {src};"),
        IrStatement::AssignNew { var, ty } => format!("{var} = new {ty};"),
        IrStatement::AssignInvoke { var, call } => format!("{var} = {};", print_invoke(call)),
        IrStatement::InvokeVoid { call } => format!("{};", print_invoke(call)),
        IrStatement::AssignFieldLoad { var, field, base: Some(b) } => format!("{var} = {b}.{field};"),
        IrStatement::AssignFieldLoad { var, field, base: None } => format!("{var} = {field};"),
        IrStatement::FieldStore { field, base: Some(b), src } => {
            format!("{b}.{field} = {};", print_operand(src))
        }
        IrStatement::FieldStore { field, base: None, src } => format!("{field} = {};", print_operand(src)),
        IrStatement::Return { value } => format!("return {};", print_operand(value)),
        IrStatement::ReturnVoid => "return;".into(),
        IrStatement::If { cond, target } => format!("if {cond} goto {target};"),
        IrStatement::Goto { target } => format!("goto {target};"),
        IrStatement::Label { name } => format!("{name}:"),
    }
}

pub fn print_method(m: &IrMethod, out: &mut String) {
    let sig = &m.signature;
    let _ = writeln!(
        out,
        "    {}{} {}({}) {{",
        if sig.is_static { "static " } else { "" },
        sig.return_type,
        sig.name,
        sig.param_types.join(", ")
    );
    for l in &m.locals {
        let _ = writeln!(out, "        {} {};", l.ty, l.name);
    }
    for s in &m.body {
        let _ = writeln!(out, "        {}", print_statement(s));
    }
    out.push_str("    }\n");
}

/// Canonical text of a whole program. Reparsing the output yields an equal
/// program.
pub fn print_program(p: &IrProgram) -> String {
    let mut out = String::new();
    let fw = &p.framework;
    if !(fw.classes.is_empty() && fw.methods.is_empty() && fw.fields.is_empty()) {
        out.push_str("framework {\n");
        for c in &fw.classes {
            let _ = writeln!(out, "    class {c};");
        }
        for m in &fw.methods {
            let _ = writeln!(out, "    {}method {m};", if m.is_static { "static " } else { "" });
        }
        for f in &fw.fields {
            let _ = writeln!(out, "    field {f};");
        }
        out.push_str("}\n");
    }
    for class in p.classes.values() {
        out.push('\n');
        match &class.superclass {
            Some(s) => {
                let _ = writeln!(out, "class {} extends {s} {{", class.name);
            }
            None => {
                let _ = writeln!(out, "class {} {{", class.name);
            }
        }
        for f in &class.fields {
            let _ = writeln!(out, "    {}field {} {};", if f.is_static { "static " } else { "" }, f.ty, f.name);
        }
        for (i, m) in class.methods.iter().enumerate() {
            if i > 0 || !class.fields.is_empty() {
                out.push('\n');
            }
            print_method(m, &mut out);
        }
        out.push_str("}\n");
    }
    out
}
