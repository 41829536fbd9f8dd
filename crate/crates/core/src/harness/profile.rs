use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::{ErrorKind, HarnessError};
use crate::ir::{parse_member_signature, MemberSignature, Value};

/// What a framework member does when called (or, for fields, read) on one
/// version.
#[derive(Debug, Clone, PartialEq)]
pub enum ApiBehavior {
    ReturnConst(Value),
    ReturnNull,
    ReturnArg(usize),
    Throw { kind: ErrorKind, message: String },
    ReturnFresh(String),
}

/// One framework version: the classes it ships and how each member behaves.
/// Members without an entry do not exist on this version.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameworkVersionProfile {
    pub version: u32,
    pub classes: BTreeSet<String>,
    /// Keyed by the bracketed member signature, e.g.
    /// `<android.content.Context: java.lang.String getPackageName()>`.
    pub apis: BTreeMap<String, ApiBehavior>,
    /// Direct supertypes, consulted by casts.
    pub supertypes: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    version: u32,
    #[serde(default)]
    classes: Vec<String>,
    #[serde(default)]
    apis: Vec<RawApi>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    supertypes: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApi {
    sig: String,
    effect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

fn parse_err(version: u32, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::ProfileParse(format!("profile v{version}: {msg}"))
}

/// Interprets a JSON literal as a constant of `ty`.
fn typed_value(ty: &str, j: &Json) -> Option<Value> {
    Some(match ty {
        "int" | "java.lang.Integer" => Value::Int(i32::try_from(j.as_i64()?).ok()?),
        "long" | "java.lang.Long" => Value::Long(j.as_i64()?),
        "double" | "java.lang.Double" => Value::Double(j.as_f64()?),
        "boolean" | "java.lang.Boolean" => Value::Bool(j.as_bool()?),
        "java.lang.String" | "java.lang.CharSequence" | "java.lang.Object" if j.is_string() => {
            Value::Str(j.as_str()?.to_string())
        }
        t if t.ends_with("[]") => {
            let elem = &t[..t.len() - 2];
            let items = j.as_array()?.iter().map(|x| typed_value(elem, x)).collect::<Option<Vec<_>>>()?;
            Value::Array { elem_type: elem.to_string(), items }
        }
        _ => return None,
    })
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Int(n) => Json::from(*n),
        Value::Long(n) => Json::from(*n),
        Value::Double(d) => Json::from(*d),
        Value::Bool(b) => Json::from(*b),
        Value::Str(s) => Json::from(s.as_str()),
        Value::Null => Json::Null,
        Value::Array { items, .. } => Json::Array(items.iter().map(value_json).collect()),
    }
}

impl FrameworkVersionProfile {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let raw: RawProfile = serde_json::from_str(text).map_err(|e| HarnessError::ProfileParse(e.to_string()))?;
        let v = raw.version;
        let mut apis = BTreeMap::new();
        for a in raw.apis {
            let member = parse_member_signature(&a.sig).map_err(|d| parse_err(v, format!("`{}`: {d}", a.sig)))?;
            let (ret, arity) = match &member {
                MemberSignature::Method(m) => (m.return_type.clone(), Some(m.arity())),
                MemberSignature::Field(f) => (f.field_type.clone(), None),
            };
            let behavior = match a.effect.as_str() {
                "return_const" => {
                    let j = a.value.as_ref().ok_or_else(|| parse_err(v, format!("{}: return_const needs a value", a.sig)))?;
                    let value = typed_value(&ret, j)
                        .ok_or_else(|| parse_err(v, format!("{}: {j} is not a {ret}", a.sig)))?;
                    ApiBehavior::ReturnConst(value)
                }
                "return_null" => {
                    if crate::ir::is_primitive(&ret) || ret == "void" {
                        return Err(parse_err(v, format!("{}: {ret} cannot be null", a.sig)));
                    }
                    ApiBehavior::ReturnNull
                }
                "return_arg" => {
                    let i = a.value.as_ref().and_then(Json::as_u64).ok_or_else(|| parse_err(v, format!("{}: return_arg needs an index", a.sig)))?
                        as usize;
                    if arity.is_none_or(|n| i >= n) {
                        return Err(parse_err(v, format!("{}: no argument {i}", a.sig)));
                    }
                    ApiBehavior::ReturnArg(i)
                }
                "throw" => {
                    let kind = a.error_kind.as_deref().ok_or_else(|| parse_err(v, format!("{}: throw needs error_kind", a.sig)))?;
                    ApiBehavior::Throw { kind: ErrorKind::from(kind.to_string()), message: a.message.clone().unwrap_or_default() }
                }
                "return_fresh" => {
                    let class = match &a.value {
                        Some(Json::String(c)) => c.clone(),
                        None => ret.clone(),
                        Some(other) => return Err(parse_err(v, format!("{}: fresh class must be a string, got {other}", a.sig))),
                    };
                    if crate::ir::is_primitive(&class) || class == "void" {
                        return Err(parse_err(v, format!("{}: cannot create a fresh {class}", a.sig)));
                    }
                    ApiBehavior::ReturnFresh(class)
                }
                other => return Err(parse_err(v, format!("{}: unknown effect `{other}`", a.sig))),
            };
            let key = member.to_string();
            if apis.insert(key.clone(), behavior).is_some() {
                return Err(HarnessError::DuplicateApi { version: v, sig: key });
            }
        }
        Ok(FrameworkVersionProfile { version: v, classes: raw.classes.into_iter().collect(), apis, supertypes: raw.supertypes })
    }

    pub fn to_json(&self) -> String {
        let apis = self
            .apis
            .iter()
            .map(|(sig, b)| {
                let mut a = RawApi { sig: sig.clone(), effect: String::new(), value: None, error_kind: None, message: None };
                match b {
                    ApiBehavior::ReturnConst(v) => {
                        a.effect = "return_const".into();
                        a.value = Some(value_json(v));
                    }
                    ApiBehavior::ReturnNull => a.effect = "return_null".into(),
                    ApiBehavior::ReturnArg(i) => {
                        a.effect = "return_arg".into();
                        a.value = Some(Json::from(*i));
                    }
                    ApiBehavior::Throw { kind, message } => {
                        a.effect = "throw".into();
                        a.error_kind = Some(kind.to_string());
                        a.message = Some(message.clone());
                    }
                    ApiBehavior::ReturnFresh(c) => {
                        a.effect = "return_fresh".into();
                        a.value = Some(Json::from(c.as_str()));
                    }
                }
                a
            })
            .collect();
        let raw = RawProfile {
            version: self.version,
            classes: self.classes.iter().cloned().collect(),
            apis,
            supertypes: self.supertypes.clone(),
        };
        let mut s = serde_json::to_string_pretty(&raw).expect("profile serializes");
        s.push('\n');
        s
    }

    /// `sub` equals `sup` or reaches it through declared supertypes.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sub == sup || sup == "java.lang.Object" {
            return true;
        }
        let mut stack = vec![sub];
        let mut seen = BTreeSet::new();
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            for s in self.supertypes.get(c).into_iter().flatten() {
                if s == sup {
                    return true;
                }
                stack.push(s);
            }
        }
        false
    }
}

pub fn load_version_profile(path: &Path) -> Result<FrameworkVersionProfile, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    FrameworkVersionProfile::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_profile_loads() {
        let p = FrameworkVersionProfile::from_json(
            r#"{"version": 23, "classes": ["a.B"], "apis": [{"sig": "<a.B: int f()>", "effect": "return_const", "value": 7}]}"#,
        )
        .unwrap();
        assert_eq!(p.version, 23);
        assert_eq!(p.apis["<a.B: int f()>"], ApiBehavior::ReturnConst(Value::Int(7)));
        assert_eq!(FrameworkVersionProfile::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn duplicates_and_bad_values_are_rejected() {
        let dup = r#"{"version": 1, "apis": [{"sig": "<a.B: void f()>", "effect": "return_null"},
            {"sig": "<a.B: void f()>", "effect": "throw", "error_kind": "SecurityException"}]}"#;
        assert!(matches!(FrameworkVersionProfile::from_json(dup), Err(HarnessError::ProfileParse(_) | HarnessError::DuplicateApi { .. })));
        let dup = r#"{"version": 1, "apis": [{"sig": "<a.B: a.C f()>", "effect": "return_null"},
            {"sig": "<a.B: a.C f()>", "effect": "throw", "error_kind": "SecurityException"}]}"#;
        assert!(matches!(FrameworkVersionProfile::from_json(dup), Err(HarnessError::DuplicateApi { version: 1, .. })));
        let mistyped = r#"{"version": 1, "apis": [{"sig": "<a.B: int f()>", "effect": "return_const", "value": "x"}]}"#;
        assert!(matches!(FrameworkVersionProfile::from_json(mistyped), Err(HarnessError::ProfileParse(_))));
        let arg = r#"{"version": 1, "apis": [{"sig": "<a.B: int f(int)>", "effect": "return_arg", "value": 1}]}"#;
        assert!(matches!(FrameworkVersionProfile::from_json(arg), Err(HarnessError::ProfileParse(_))));
        assert!(matches!(FrameworkVersionProfile::from_json("{"), Err(HarnessError::ProfileParse(_))));
    }

    #[test]
    fn subtyping_follows_declared_edges() {
        let mut p = FrameworkVersionProfile::default();
        p.supertypes.insert("a.C".into(), vec!["a.B".into()]);
        p.supertypes.insert("a.B".into(), vec!["a.A".into()]);
        assert!(p.is_subtype("a.C", "a.A"));
        assert!(p.is_subtype("a.C", "java.lang.Object"));
        assert!(!p.is_subtype("a.A", "a.C"));
    }
}
