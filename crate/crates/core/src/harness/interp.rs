use std::collections::BTreeMap;

use super::profile::{ApiBehavior, FrameworkVersionProfile};
use super::render::{canonical_render, RtValue};
use super::{ErrorKind, ExecutionOutcome, OutcomeStatus};
use crate::ir::{is_primitive, Invoke, IrStatement, Operand};
use crate::testgen::TestCase;

pub const DEFAULT_STEP_BUDGET: usize = 10_000;

/// Classes every version has.
fn is_builtin(ty: &str) -> bool {
    ty.ends_with("[]")
        || is_primitive(ty)
        || matches!(
            ty,
            "java.lang.Object"
                | "java.lang.String"
                | "java.lang.CharSequence"
                | "java.lang.Integer"
                | "java.lang.Long"
                | "java.lang.Double"
                | "java.lang.Boolean"
        )
}

/// One interpreter per (test, profile) pair.
pub struct Interpreter<'p> {
    profile: &'p FrameworkVersionProfile,
    step_budget: usize,
    env: BTreeMap<String, RtValue>,
    next_id: u64,
}

type Step<T> = Result<T, ErrorKind>;

impl<'p> Interpreter<'p> {
    pub fn new(profile: &'p FrameworkVersionProfile, step_budget: usize) -> Self {
        Interpreter { profile, step_budget, env: BTreeMap::new(), next_id: 1 }
    }

    pub fn run(mut self, t: &TestCase) -> ExecutionOutcome {
        let status = match self.exec(&t.body) {
            Ok(ret) => OutcomeStatus::Success { render: if t.capture_return { ret.as_ref().map(canonical_render) } else { None } },
            Err((kind, at)) if at < t.target_index => OutcomeStatus::InvalidBeforeTarget { error_kind: kind, at_index: at },
            Err((kind, at)) => OutcomeStatus::Error { error_kind: kind, at_index: at },
        };
        ExecutionOutcome { test_id: t.id.clone(), version: self.profile.version, status }
    }

    fn exec(&mut self, body: &[IrStatement]) -> Result<Option<RtValue>, (ErrorKind, usize)> {
        let labels: BTreeMap<&str, usize> = body
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                IrStatement::Label { name } => Some((name.as_str(), i)),
                _ => None,
            })
            .collect();
        let mut pc = 0;
        let mut steps = 0;
        while pc < body.len() {
            steps += 1;
            if steps > self.step_budget {
                return Err((ErrorKind::other("StepBudgetExceeded"), pc));
            }
            let at = pc;
            let fail = |k: ErrorKind| (k, at);
            pc += 1;
            match &body[at] {
                IrStatement::IdentityParam { .. } | IrStatement::IdentityThis { .. } => {
                    return Err(fail(ErrorKind::other("UnboundParameter")));
                }
                IrStatement::AssignConst { var, value } => {
                    self.env.insert(var.clone(), RtValue::from_const(value));
                }
                IrStatement::AssignCast { var, ty, src } => {
                    let v = self.read(src).map_err(fail)?;
                    let v = self.cast(v, ty).map_err(fail)?;
                    self.env.insert(var.clone(), v);
                }
                IrStatement::AssignNew { var, ty } => {
                    self.require_class(ty).map_err(fail)?;
                    let v = self.fresh(ty);
                    self.env.insert(var.clone(), v);
                }
                IrStatement::AssignInvoke { var, call } => {
                    let v = self.invoke(call).map_err(fail)?;
                    self.env.insert(var.clone(), v);
                }
                IrStatement::InvokeVoid { call } => {
                    self.invoke(call).map_err(fail)?;
                }
                IrStatement::AssignFieldLoad { var, field, base } => {
                    if let Some(b) = base {
                        if self.read(b).map_err(fail)? == RtValue::Null {
                            return Err(fail(ErrorKind::NullPointerException));
                        }
                    }
                    self.require_class(&field.declaring_class).map_err(fail)?;
                    let behavior = self.profile.apis.get(&field.to_string()).ok_or_else(|| fail(ErrorKind::NoSuchFieldError))?;
                    let v = self.apply(behavior, &[]).map_err(fail)?;
                    self.env.insert(var.clone(), v);
                }
                IrStatement::FieldStore { field, base, src } => {
                    if let Some(b) = base {
                        if self.read(b).map_err(fail)? == RtValue::Null {
                            return Err(fail(ErrorKind::NullPointerException));
                        }
                    }
                    self.operand(src).map_err(fail)?;
                    self.require_class(&field.declaring_class).map_err(fail)?;
                    if !self.profile.apis.contains_key(&field.to_string()) {
                        return Err(fail(ErrorKind::NoSuchFieldError));
                    }
                }
                IrStatement::Return { value } => return self.operand(value).map(Some).map_err(fail),
                IrStatement::ReturnVoid => return Ok(None),
                IrStatement::If { cond, target } => {
                    if self.read(cond).map_err(fail)?.truthy() {
                        pc = *labels.get(target.as_str()).ok_or_else(|| fail(ErrorKind::other("MissingLabel")))?;
                    }
                }
                IrStatement::Goto { target } => {
                    pc = *labels.get(target.as_str()).ok_or_else(|| fail(ErrorKind::other("MissingLabel")))?;
                }
                IrStatement::Label { .. } => {}
            }
        }
        Ok(None)
    }

    fn fresh(&mut self, class: &str) -> RtValue {
        let id = self.next_id;
        self.next_id += 1;
        RtValue::Object { class: class.to_string(), id }
    }

    fn read(&self, var: &str) -> Step<RtValue> {
        self.env.get(var).cloned().ok_or_else(|| ErrorKind::other("UseBeforeDef"))
    }

    fn operand(&self, op: &Operand) -> Step<RtValue> {
        match op {
            Operand::Var(v) => self.read(v),
            Operand::Const(c) => Ok(RtValue::from_const(c)),
        }
    }

    fn require_class(&self, ty: &str) -> Step<()> {
        if is_builtin(ty) || self.profile.classes.contains(ty) {
            Ok(())
        } else {
            Err(ErrorKind::NoClassDefFoundError)
        }
    }

    fn cast(&self, v: RtValue, ty: &str) -> Step<RtValue> {
        let numeric = |x: f64| -> Option<RtValue> {
            Some(match ty {
                "int" => RtValue::Int(x as i32),
                "long" => RtValue::Long(x as i64),
                "double" => RtValue::Double(x),
                _ => return None,
            })
        };
        match (&v, ty) {
            (RtValue::Int(n), _) if is_primitive(ty) && ty != "boolean" => return Ok(numeric(*n as f64).expect("numeric type")),
            (RtValue::Long(n), "long") => return Ok(RtValue::Long(*n)),
            (RtValue::Long(n), _) if is_primitive(ty) && ty != "boolean" => return Ok(numeric(*n as f64).expect("numeric type")),
            (RtValue::Double(d), _) if is_primitive(ty) && ty != "boolean" => return Ok(numeric(*d).expect("numeric type")),
            (RtValue::Bool(_), "boolean") => return Ok(v),
            _ => {}
        }
        if is_primitive(ty) {
            return Err(ErrorKind::ClassCastException);
        }
        self.require_class(ty)?;
        let ok = match &v {
            RtValue::Null => true,
            RtValue::Str(_) => matches!(ty, "java.lang.String" | "java.lang.CharSequence" | "java.lang.Object"),
            RtValue::Object { class, .. } => self.profile.is_subtype(class, ty),
            RtValue::Array { .. } => v.class().as_deref() == Some(ty) || ty == "java.lang.Object",
            RtValue::Int(_) => matches!(ty, "java.lang.Integer" | "java.lang.Object"),
            RtValue::Long(_) => matches!(ty, "java.lang.Long" | "java.lang.Object"),
            RtValue::Double(_) => matches!(ty, "java.lang.Double" | "java.lang.Object"),
            RtValue::Bool(_) => matches!(ty, "java.lang.Boolean" | "java.lang.Object"),
        };
        if ok {
            Ok(v)
        } else {
            Err(ErrorKind::ClassCastException)
        }
    }

    fn invoke(&mut self, call: &Invoke) -> Step<RtValue> {
        self.require_class(&call.callee.declaring_class)?;
        let behavior = self.profile.apis.get(&call.callee.to_string()).ok_or(ErrorKind::NoSuchMethodError)?;
        if let Some(r) = &call.receiver {
            if self.read(r)? == RtValue::Null {
                return Err(ErrorKind::NullPointerException);
            }
        }
        let args = call.args.iter().map(|a| self.operand(a)).collect::<Step<Vec<_>>>()?;
        if call.callee.is_void() {
            if let ApiBehavior::Throw { kind, .. } = behavior {
                return Err(kind.clone());
            }
            return Ok(RtValue::Null);
        }
        self.apply(behavior, &args)
    }

    fn apply(&mut self, behavior: &ApiBehavior, args: &[RtValue]) -> Step<RtValue> {
        match behavior {
            ApiBehavior::ReturnConst(v) => Ok(RtValue::from_const(v)),
            ApiBehavior::ReturnNull => Ok(RtValue::Null),
            ApiBehavior::ReturnArg(i) => args.get(*i).cloned().ok_or_else(|| ErrorKind::other("BadProfile")),
            ApiBehavior::Throw { kind, .. } => Err(kind.clone()),
            ApiBehavior::ReturnFresh(class) => Ok(self.fresh(class)),
        }
    }
}

/// Runs a test on one profile with the default step budget.
pub fn execute_test(t: &TestCase, profile: &FrameworkVersionProfile) -> ExecutionOutcome {
    Interpreter::new(profile, DEFAULT_STEP_BUDGET).run(t)
}
