use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of a method: the class that declares it, its name, parameter and
/// return types, and whether it is invoked statically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodSignature {
    pub declaring_class: String,
    pub name: String,
    pub param_types: Vec<String>,
    pub return_type: String,
    pub is_static: bool,
}

impl MethodSignature {
    pub fn new(
        declaring_class: impl Into<String>,
        return_type: impl Into<String>,
        name: impl Into<String>,
        param_types: &[&str],
        is_static: bool,
    ) -> Self {
        Self {
            declaring_class: declaring_class.into(),
            name: name.into(),
            param_types: param_types.iter().map(|s| s.to_string()).collect(),
            return_type: return_type.into(),
            is_static,
        }
    }

    pub fn arity(&self) -> usize {
        self.param_types.len()
    }

    pub fn is_void(&self) -> bool {
        self.return_type == "void"
    }

    pub fn is_constructor(&self) -> bool {
        self.name == "<init>"
    }

    /// The bracketed form without the static marker, e.g.
    /// `<java.lang.System: long currentTimeMillis()>`.
    pub fn bracketed(&self) -> String {
        self.to_string()
    }

    /// Two signatures that differ only in their static flag name the same member.
    pub fn same_member(&self, other: &MethodSignature) -> bool {
        self.declaring_class == other.declaring_class
            && self.name == other.name
            && self.param_types == other.param_types
            && self.return_type == other.return_type
    }
}

impl fmt::Display for MethodSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{}: {} {}({})>",
            self.declaring_class,
            self.return_type,
            self.name,
            self.param_types.join(",")
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FieldSignature {
    pub declaring_class: String,
    pub field_type: String,
    pub name: String,
}

impl FieldSignature {
    pub fn new(
        declaring_class: impl Into<String>,
        field_type: impl Into<String>,
        name: impl Into<String>,
    ) -> Self {
        Self {
            declaring_class: declaring_class.into(),
            field_type: field_type.into(),
            name: name.into(),
        }
    }
}

impl fmt::Display for FieldSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}: {} {}>", self.declaring_class, self.field_type, self.name)
    }
}

/// A method or field reference in bracketed form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemberSignature {
    Method(MethodSignature),
    Field(FieldSignature),
}

impl fmt::Display for MemberSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberSignature::Method(m) => m.fmt(f),
            MemberSignature::Field(fd) => fd.fmt(f),
        }
    }
}

/// Constant values expressible in the IR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Value {
    Int(i32),
    Long(i64),
    Double(f64),
    Bool(bool),
    Str(String),
    Null,
    Array { elem_type: String, items: Vec<Value> },
}

impl Value {
    /// The IR type name this constant carries.
    pub fn type_name(&self) -> String {
        match self {
            Value::Int(_) => "int".into(),
            Value::Long(_) => "long".into(),
            Value::Double(_) => "double".into(),
            Value::Bool(_) => "boolean".into(),
            Value::Str(_) => "java.lang.String".into(),
            Value::Null => "null".into(),
            Value::Array { elem_type, .. } => format!("{elem_type}[]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Var(String),
    Const(Value),
}

impl Operand {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvokeKind {
    Virtual,
    Special,
    Interface,
    Static,
}

impl InvokeKind {
    pub fn keyword(self) -> &'static str {
        match self {
            InvokeKind::Virtual => "virtualinvoke",
            InvokeKind::Special => "specialinvoke",
            InvokeKind::Interface => "interfaceinvoke",
            InvokeKind::Static => "staticinvoke",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<Self> {
        Some(match kw {
            "virtualinvoke" => InvokeKind::Virtual,
            "specialinvoke" => InvokeKind::Special,
            "interfaceinvoke" => InvokeKind::Interface,
            "staticinvoke" => InvokeKind::Static,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invoke {
    pub kind: InvokeKind,
    pub callee: MethodSignature,
    pub receiver: Option<String>,
    pub args: Vec<Operand>,
}

/// One 3-address statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrStatement {
    IdentityParam { var: String, index: usize, ty: String },
    IdentityThis { var: String, ty: String },
    AssignConst { var: String, value: Value },
    AssignCast { var: String, ty: String, src: String },
    AssignNew { var: String, ty: String },
    AssignInvoke { var: String, call: Invoke },
    InvokeVoid { call: Invoke },
    AssignFieldLoad { var: String, field: FieldSignature, base: Option<String> },
    FieldStore { field: FieldSignature, base: Option<String>, src: Operand },
    Return { value: Operand },
    ReturnVoid,
    If { cond: String, target: String },
    Goto { target: String },
    Label { name: String },
}

impl IrStatement {
    /// The variable this statement defines, if any.
    pub fn def(&self) -> Option<&str> {
        match self {
            IrStatement::IdentityParam { var, .. }
            | IrStatement::IdentityThis { var, .. }
            | IrStatement::AssignConst { var, .. }
            | IrStatement::AssignCast { var, .. }
            | IrStatement::AssignNew { var, .. }
            | IrStatement::AssignInvoke { var, .. }
            | IrStatement::AssignFieldLoad { var, .. } => Some(var),
            _ => None,
        }
    }

    /// Variables read by this statement, in operand order.
    pub fn uses(&self) -> Vec<&str> {
        fn call_uses(call: &Invoke) -> Vec<&str> {
            let mut out: Vec<&str> = call.receiver.iter().map(|s| s.as_str()).collect();
            out.extend(call.args.iter().filter_map(|a| a.as_var()));
            out
        }
        match self {
            IrStatement::AssignCast { src, .. } => vec![src],
            IrStatement::AssignInvoke { call, .. } | IrStatement::InvokeVoid { call } => {
                call_uses(call)
            }
            IrStatement::AssignFieldLoad { base, .. } => base.iter().map(|s| s.as_str()).collect(),
            IrStatement::FieldStore { base, src, .. } => {
                let mut out: Vec<&str> = base.iter().map(|s| s.as_str()).collect();
                out.extend(src.as_var());
                out
            }
            IrStatement::Return { value } => value.as_var().into_iter().collect(),
            IrStatement::If { cond, .. } => vec![cond],
            _ => Vec::new(),
        }
    }

    pub fn invoke(&self) -> Option<&Invoke> {
        match self {
            IrStatement::AssignInvoke { call, .. } | IrStatement::InvokeVoid { call } => Some(call),
            _ => None,
        }
    }

    /// Static type of the value this statement defines.
    pub fn defined_type(&self) -> Option<String> {
        Some(match self {
            IrStatement::IdentityParam { ty, .. }
            | IrStatement::IdentityThis { ty, .. }
            | IrStatement::AssignCast { ty, .. }
            | IrStatement::AssignNew { ty, .. } => ty.clone(),
            IrStatement::AssignConst { value, .. } => value.type_name(),
            IrStatement::AssignInvoke { call, .. } => call.callee.return_type.clone(),
            IrStatement::AssignFieldLoad { field, .. } => field.field_type.clone(),
            _ => return None,
        })
    }

    pub fn jump_target(&self) -> Option<&str> {
        match self {
            IrStatement::If { target, .. } | IrStatement::Goto { target } => Some(target),
            _ => None,
        }
    }

    /// Renames every occurrence (definition and uses) of `from` to `to`.
    pub fn rename_var(&mut self, from: &str, to: &str) {
        let swap = |v: &mut String| {
            if v == from {
                *v = to.to_string();
            }
        };
        let swap_op = |op: &mut Operand| {
            if let Operand::Var(v) = op {
                if v == from {
                    *v = to.to_string();
                }
            }
        };
        match self {
            IrStatement::IdentityParam { var, .. }
            | IrStatement::IdentityThis { var, .. }
            | IrStatement::AssignConst { var, .. }
            | IrStatement::AssignNew { var, .. } => swap(var),
            IrStatement::AssignCast { var, src, .. } => {
                swap(var);
                swap(src);
            }
            IrStatement::AssignInvoke { var, call } => {
                swap(var);
                call.receiver.iter_mut().for_each(swap);
                call.args.iter_mut().for_each(swap_op);
            }
            IrStatement::InvokeVoid { call } => {
                call.receiver.iter_mut().for_each(swap);
                call.args.iter_mut().for_each(swap_op);
            }
            IrStatement::AssignFieldLoad { var, base, .. } => {
                swap(var);
                base.iter_mut().for_each(swap);
            }
            IrStatement::FieldStore { base, src, .. } => {
                base.iter_mut().for_each(swap);
                swap_op(src);
            }
            IrStatement::Return { value } => swap_op(value),
            IrStatement::If { cond, .. } => swap(cond),
            IrStatement::ReturnVoid | IrStatement::Goto { .. } | IrStatement::Label { .. } => {}
        }
    }

    pub fn is_terminator(&self) -> bool {
        matches!(
            self,
            IrStatement::Return { .. }
                | IrStatement::ReturnVoid
                | IrStatement::If { .. }
                | IrStatement::Goto { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Local {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrMethod {
    pub signature: MethodSignature,
    pub locals: Vec<Local>,
    pub body: Vec<IrStatement>,
}

impl IrMethod {
    pub fn local_type(&self, name: &str) -> Option<&str> {
        self.locals.iter().find(|l| l.name == name).map(|l| l.ty.as_str())
    }

    /// Index of the statement `name:`.
    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.body
            .iter()
            .position(|s| matches!(s, IrStatement::Label { name: n } if n == name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: String,
    pub is_static: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrClass {
    pub name: String,
    pub superclass: Option<String>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<IrMethod>,
}

/// Members declared external to the program: the framework boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameworkDecls {
    pub classes: BTreeSet<String>,
    pub methods: BTreeSet<MethodSignature>,
    pub fields: BTreeSet<FieldSignature>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IrProgram {
    pub classes: BTreeMap<String, IrClass>,
    pub framework: FrameworkDecls,
}

impl IrProgram {
    pub fn framework_api_list(&self) -> &BTreeSet<MethodSignature> {
        &self.framework.methods
    }

    pub fn is_framework_method(&self, sig: &MethodSignature) -> bool {
        self.framework.methods.contains(sig)
    }

    /// Framework classes, declared explicitly or implied by a framework member.
    pub fn framework_classes(&self) -> BTreeSet<String> {
        let mut out = self.framework.classes.clone();
        out.extend(self.framework.methods.iter().map(|m| m.declaring_class.clone()));
        out.extend(self.framework.fields.iter().map(|f| f.declaring_class.clone()));
        out
    }

    pub fn is_framework_class(&self, name: &str) -> bool {
        self.framework.classes.contains(name)
            || self.framework.methods.iter().any(|m| m.declaring_class == name)
            || self.framework.fields.iter().any(|f| f.declaring_class == name)
    }

    pub fn is_app_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    pub fn method(&self, sig: &MethodSignature) -> Option<&IrMethod> {
        self.classes
            .get(&sig.declaring_class)?
            .methods
            .iter()
            .find(|m| &m.signature == sig)
    }

    /// All defined methods in (class, declaration) order.
    pub fn methods(&self) -> impl Iterator<Item = &IrMethod> {
        self.classes.values().flat_map(|c| c.methods.iter())
    }

    /// Walks the superclass chain of an app class until it leaves the program,
    /// returning the first framework ancestor.
    pub fn framework_ancestor(&self, class: &str) -> Option<String> {
        let mut cur = class.to_string();
        for _ in 0..64 {
            match self.classes.get(&cur) {
                Some(c) => cur = c.superclass.clone()?,
                None => return self.is_framework_class(&cur).then_some(cur),
            }
        }
        None
    }

    pub fn field_declared(&self, field: &FieldSignature) -> bool {
        if self.framework.fields.contains(field) {
            return true;
        }
        self.classes
            .get(&field.declaring_class)
            .map(|c| c.fields.iter().any(|f| f.name == field.name && f.ty == field.field_type))
            .unwrap_or(false)
    }
}

/// Primitive names accepted by the constant grammar and dummy synthesis.
pub const PRIMITIVE_TYPES: &[&str] = &["int", "long", "double", "boolean"];

pub fn is_primitive(ty: &str) -> bool {
    PRIMITIVE_TYPES.contains(&ty)
}

/// `ident('.'ident)*('[]')*`, where identifiers may contain `$`.
pub fn is_valid_type_name(ty: &str) -> bool {
    let base = ty.trim_end_matches("[]");
    if base.is_empty() || !(ty.len() - base.len()).is_multiple_of(2) {
        return false;
    }
    base.split('.').all(is_valid_ident)
}

pub fn is_valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}
