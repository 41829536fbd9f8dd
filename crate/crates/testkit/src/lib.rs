//! Shared test support: shipped fixtures, profile builders and a generator
//! of small random programs whose every value can be rebuilt by slicing.

use std::collections::BTreeSet;
use std::path::PathBuf;

use slicegen_core::harness::{ApiBehavior, ErrorKind, FrameworkVersionProfile};
use slicegen_core::ir::{parse_program, IrProgram, MethodSignature, Value};

mod random;

pub use random::{random_program, GenLimits, RandomProgram};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join(format!("{name}.ir"))
}

pub fn fixture_source(name: &str) -> String {
    let p = fixture_path(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn load_fixture(name: &str) -> IrProgram {
    parse_program(&fixture_source(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

/// Directory of the profile bundle for one scenario.
pub fn profile_dir(scenario: &str) -> PathBuf {
    fixtures_dir().join("profiles").join(scenario)
}

pub const ALL_FIXTURES: &[&str] = &[
    "listing3",
    "notification_policy",
    "shortcut_host",
    "format_short_file_size",
    "field_replacement",
    "branch2",
    "branch2x2",
    "recursion",
];

/// Default behavior of a member returning `ty`: a fixed constant for
/// primitives and strings, a fresh object otherwise.
pub fn default_behavior(ty: &str) -> ApiBehavior {
    match ty {
        "int" | "java.lang.Integer" => ApiBehavior::ReturnConst(Value::Int(1)),
        "long" | "java.lang.Long" => ApiBehavior::ReturnConst(Value::Long(1)),
        "double" | "java.lang.Double" => ApiBehavior::ReturnConst(Value::Double(1.0)),
        "boolean" | "java.lang.Boolean" => ApiBehavior::ReturnConst(Value::Bool(true)),
        "java.lang.String" | "java.lang.CharSequence" => ApiBehavior::ReturnConst(Value::Str("s".into())),
        "void" => ApiBehavior::ReturnNull,
        t => ApiBehavior::ReturnFresh(t.to_string()),
    }
}

/// A profile on which every framework class, method and field the program
/// declares exists and behaves as [`default_behavior`].
pub fn all_present_profile(p: &IrProgram, version: u32) -> FrameworkVersionProfile {
    let mut prof = FrameworkVersionProfile { version, classes: p.framework_classes(), ..Default::default() };
    for m in &p.framework.methods {
        prof.apis.insert(m.to_string(), default_behavior(&m.return_type));
    }
    for f in &p.framework.fields {
        prof.apis.insert(f.to_string(), default_behavior(&f.field_type));
    }
    prof
}

/// Makes `from` castable to every class in `to`.
pub fn with_supertypes(mut prof: FrameworkVersionProfile, from: &str, to: &[&str]) -> FrameworkVersionProfile {
    prof.supertypes.entry(from.to_string()).or_default().extend(to.iter().map(|s| s.to_string()));
    prof
}

pub fn without_api(mut prof: FrameworkVersionProfile, sig: &MethodSignature) -> FrameworkVersionProfile {
    prof.apis.remove(&sig.to_string());
    prof
}

pub fn throwing(mut prof: FrameworkVersionProfile, sig: &MethodSignature, kind: ErrorKind) -> FrameworkVersionProfile {
    prof.apis.insert(sig.to_string(), ApiBehavior::Throw { kind, message: String::new() });
    prof
}

pub fn returning(mut prof: FrameworkVersionProfile, sig: &MethodSignature, b: ApiBehavior) -> FrameworkVersionProfile {
    prof.apis.insert(sig.to_string(), b);
    prof
}

/// One profile per version, each built by `f`.
pub fn profile_range(versions: impl IntoIterator<Item = u32>, f: impl Fn(u32) -> FrameworkVersionProfile) -> Vec<FrameworkVersionProfile> {
    versions
        .into_iter()
        .map(|v| {
            let mut p = f(v);
            p.version = v;
            p
        })
        .collect()
}

/// Framework methods a program calls, in signature order.
pub fn called_framework_methods(p: &IrProgram) -> BTreeSet<MethodSignature> {
    p.methods()
        .flat_map(|m| m.body.iter().filter_map(|s| s.invoke()).map(|c| c.callee.clone()))
        .filter(|c| p.is_framework_method(c))
        .collect()
}

pub fn method_sig(src: &str) -> MethodSignature {
    let (is_static, rest) = match src.strip_prefix("static ") {
        Some(r) => (true, r),
        None => (false, src),
    };
    match slicegen_core::ir::parse_member_signature(rest) {
        Ok(slicegen_core::ir::MemberSignature::Method(mut m)) => {
            m.is_static = is_static;
            m
        }
        other => panic!("not a method signature: {src} ({other:?})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse() {
        for f in ALL_FIXTURES {
            let p = load_fixture(f);
            assert!(!p.classes.is_empty(), "{f}");
        }
    }

    #[test]
    fn all_present_covers_every_call() {
        let p = load_fixture("listing3");
        let prof = all_present_profile(&p, 21);
        for m in called_framework_methods(&p) {
            assert!(prof.apis.contains_key(&m.to_string()), "{m}");
        }
        assert!(prof.classes.contains("java.lang.System"));
    }
}
