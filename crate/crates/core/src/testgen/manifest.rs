use std::path::Path;

use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use super::{Provenance, TestCase, TestForm, TestgenError};
use crate::ir::{parse_member_signature, parse_statement, print_statement, MemberSignature, MethodSignature};

pub const MANIFEST_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TestSuite {
    /// Sorted by target signature, then id.
    pub tests: Vec<TestCase>,
    pub versions: Vec<u32>,
    pub checksum: String,
}

impl TestSuite {
    pub fn get(&self, id: &str) -> Option<&TestCase> {
        self.tests.iter().find(|t| t.id == id)
    }

    pub fn targets(&self) -> Vec<&MethodSignature> {
        let mut out: Vec<&MethodSignature> = self.tests.iter().map(|t| &t.target).collect();
        out.dedup();
        out
    }
}

pub fn target_key(s: &MethodSignature) -> String {
    format!("{}{}", if s.is_static { "static " } else { "" }, s)
}

fn parse_target(s: &str) -> Result<MethodSignature, TestgenError> {
    let (is_static, rest) = match s.strip_prefix("static ") {
        Some(r) => (true, r),
        None => (false, s),
    };
    match parse_member_signature(rest) {
        Ok(MemberSignature::Method(mut m)) => {
            m.is_static = is_static;
            Ok(m)
        }
        Ok(MemberSignature::Field(_)) => Err(TestgenError::Manifest(format!("`{s}` is a field, not a method"))),
        Err(d) => Err(TestgenError::Manifest(format!("bad target `{s}`: {d}"))),
    }
}

fn sort_tests(tests: &mut [TestCase]) {
    tests.sort_by_cached_key(|t| (target_key(&t.target), t.id.clone()));
}

fn test_json(t: &TestCase) -> Json {
    json!({
        "id": t.id,
        "target": target_key(&t.target),
        "form": t.form,
        "body": t.body.iter().map(print_statement).collect::<Vec<_>>(),
        "target_index": t.target_index,
        "capture_return": t.capture_return,
        "generic_id": t.generic_id,
        "provenance": t.provenance,
    })
}

fn unsigned_json(tests: &[TestCase], versions: &[u32]) -> Json {
    let mut targets: Vec<String> = tests.iter().map(|t| target_key(&t.target)).collect();
    targets.dedup();
    json!({
        "version": MANIFEST_VERSION,
        "versions": versions,
        "targets": targets,
        "tests": tests.iter().map(test_json).collect::<Vec<_>>(),
    })
}

fn checksum_of(unsigned: &Json) -> String {
    let digest = Sha256::digest(unsigned.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Orders the tests by target signature then id and seals them with a
/// checksum over the canonical manifest bytes.
pub fn emit_test_suite(mut tests: Vec<TestCase>, versions: &[u32]) -> TestSuite {
    sort_tests(&mut tests);
    let checksum = checksum_of(&unsigned_json(&tests, versions));
    TestSuite { tests, versions: versions.to_vec(), checksum }
}

pub fn manifest_json(suite: &TestSuite) -> String {
    let mut j = unsigned_json(&suite.tests, &suite.versions);
    j["checksum"] = Json::String(suite.checksum.clone());
    let mut s = serde_json::to_string_pretty(&j).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn write_test_suite(suite: &TestSuite, path: &Path) -> Result<(), TestgenError> {
    std::fs::write(path, manifest_json(suite))?;
    Ok(())
}

/// Parses a manifest, rejecting unknown versions and checksum mismatches.
pub fn load_test_suite(text: &str) -> Result<TestSuite, TestgenError> {
    let bad = |m: &str| TestgenError::Manifest(m.to_string());
    let j: Json = serde_json::from_str(text).map_err(|e| TestgenError::Manifest(e.to_string()))?;
    match j.get("version").and_then(Json::as_u64) {
        Some(MANIFEST_VERSION) => {}
        Some(v) => return Err(TestgenError::Manifest(format!("unsupported manifest version {v}"))),
        None => return Err(bad("missing version")),
    }
    let versions: Vec<u32> = serde_json::from_value(j.get("versions").cloned().unwrap_or(Json::Array(Vec::new())))
        .map_err(|e| TestgenError::Manifest(format!("versions: {e}")))?;
    let raw = j.get("tests").and_then(Json::as_array).ok_or_else(|| bad("missing tests"))?;
    let mut tests = Vec::with_capacity(raw.len());
    for t in raw {
        let field = |k: &str| t.get(k).ok_or_else(|| TestgenError::Manifest(format!("test without `{k}`")));
        let id = field("id")?.as_str().ok_or_else(|| bad("id must be a string"))?.to_string();
        let target = parse_target(field("target")?.as_str().ok_or_else(|| bad("target must be a string"))?)?;
        let form: TestForm = serde_json::from_value(field("form")?.clone()).map_err(|e| TestgenError::Manifest(e.to_string()))?;
        let mut body = Vec::new();
        for line in field("body")?.as_array().ok_or_else(|| bad("body must be a list"))? {
            let line = line.as_str().ok_or_else(|| bad("body lines must be strings"))?;
            body.push(parse_statement(line).map_err(|d| TestgenError::Manifest(format!("{id}: `{line}`: {d}")))?);
        }
        let target_index = field("target_index")?.as_u64().ok_or_else(|| bad("target_index must be a number"))? as usize;
        let capture_return = field("capture_return")?.as_bool().ok_or_else(|| bad("capture_return must be a bool"))?;
        let generic_id = t.get("generic_id").and_then(Json::as_str).map(str::to_string);
        let provenance: Provenance = serde_json::from_value(field("provenance")?.clone())
            .map_err(|e| TestgenError::Manifest(format!("{id}: provenance: {e}")))?;
        tests.push(TestCase { id, target, form, body, target_index, capture_return, generic_id, provenance });
    }
    let checksum = j.get("checksum").and_then(Json::as_str).ok_or_else(|| bad("missing checksum"))?;
    let expected = checksum_of(&unsigned_json(&tests, &versions));
    if checksum != expected {
        return Err(bad("checksum mismatch"));
    }
    Ok(TestSuite { tests, versions, checksum: expected })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_has_fixed_checksum_and_round_trips() {
        let a = emit_test_suite(Vec::new(), &[]);
        let b = emit_test_suite(Vec::new(), &[]);
        assert_eq!(a.checksum, b.checksum);
        assert_eq!(a.checksum.len(), 64);
        let back = load_test_suite(&manifest_json(&a)).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_unknown_version_and_tampering() {
        let text = manifest_json(&emit_test_suite(Vec::new(), &[21, 22]));
        let v2 = text.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(load_test_suite(&v2), Err(TestgenError::Manifest(m)) if m.contains("version 2")));
        let tampered = text.replace("22", "23");
        assert!(matches!(load_test_suite(&tampered), Err(TestgenError::Manifest(m)) if m.contains("checksum")));
    }

    #[test]
    fn static_prefix_survives() {
        let m = parse_target("static <a.B: void f(int)>").unwrap();
        assert!(m.is_static);
        assert_eq!(target_key(&m), "static <a.B: void f(int)>");
        assert!(!parse_target("<a.B: void f(int)>").unwrap().is_static);
    }
}
