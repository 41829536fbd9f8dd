//! Interprets test bodies against per-version framework profiles.

mod interp;
mod profile;
mod render;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{validate_method_body, IrMethod, IrStatement, MethodSignature};
use crate::testgen::{TestCase, TestForm, TestSuite};

pub use interp::{execute_test, Interpreter, DEFAULT_STEP_BUDGET};
pub use profile::{load_version_profile, ApiBehavior, FrameworkVersionProfile};
pub use render::{canonical_render, format_g17, RtValue};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad profile: {0}")]
    ProfileParse(String),
    #[error("profile v{version} lists {sig} twice")]
    DuplicateApi { version: u32, sig: String },
    #[error("two profiles claim version {0}")]
    DuplicateVersion(u32),
    #[error("need at least 2 profiles, got {0}")]
    TooFewProfiles(usize),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors and exceptions observable at run time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum ErrorKind {
    NoSuchMethodError,
    NoClassDefFoundError,
    NoSuchFieldError,
    SecurityException,
    NullPointerException,
    RuntimeException,
    IllegalArgumentException,
    IllegalStateException,
    ClassCastException,
    Other(String),
}

const NAMED_KINDS: [(ErrorKind, &str); 9] = [
    (ErrorKind::NoSuchMethodError, "NoSuchMethodError"),
    (ErrorKind::NoClassDefFoundError, "NoClassDefFoundError"),
    (ErrorKind::NoSuchFieldError, "NoSuchFieldError"),
    (ErrorKind::SecurityException, "SecurityException"),
    (ErrorKind::NullPointerException, "NullPointerException"),
    (ErrorKind::RuntimeException, "RuntimeException"),
    (ErrorKind::IllegalArgumentException, "IllegalArgumentException"),
    (ErrorKind::IllegalStateException, "IllegalStateException"),
    (ErrorKind::ClassCastException, "ClassCastException"),
];

impl ErrorKind {
    pub fn other(name: &str) -> ErrorKind {
        ErrorKind::Other(name.to_string())
    }

    /// Missing method, class or field.
    pub fn is_signature(&self) -> bool {
        matches!(self, ErrorKind::NoSuchMethodError | ErrorKind::NoClassDefFoundError | ErrorKind::NoSuchFieldError)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorKind::Other(s) => f.write_str(s),
            k => f.write_str(NAMED_KINDS.iter().find(|(n, _)| n == k).map(|(_, s)| *s).unwrap_or("?")),
        }
    }
}

impl From<String> for ErrorKind {
    fn from(s: String) -> Self {
        NAMED_KINDS.iter().find(|(_, n)| *n == s).map(|(k, _)| k.clone()).unwrap_or(ErrorKind::Other(s))
    }
}

impl From<ErrorKind> for String {
    fn from(k: ErrorKind) -> String {
        k.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum OutcomeStatus {
    Success { render: Option<String> },
    Error { error_kind: ErrorKind, at_index: usize },
    InvalidBeforeTarget { error_kind: ErrorKind, at_index: usize },
}

impl OutcomeStatus {
    pub fn error_kind(&self) -> Option<&ErrorKind> {
        match self {
            OutcomeStatus::Success { .. } => None,
            OutcomeStatus::Error { error_kind, .. } | OutcomeStatus::InvalidBeforeTarget { error_kind, .. } => Some(error_kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub test_id: String,
    pub version: u32,
    #[serde(flatten)]
    pub status: OutcomeStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ValidityVerdict {
    Valid,
    Invalid { reason: String, versions: Vec<u32> },
}

/// Checks that need no profile: the analog of "the test compiles".
pub fn static_check(t: &TestCase) -> Result<(), String> {
    if t.body.is_empty() {
        return Err("empty body".into());
    }
    if t.form != TestForm::Concrete {
        return Err("not a concrete test".into());
    }
    match t.body.get(t.target_index).and_then(IrStatement::invoke) {
        Some(call) if call.callee.same_member(&t.target) => {}
        _ => return Err(format!("statement {} does not invoke {}", t.target_index, t.target)),
    }
    if t.capture_return == t.target.is_void() {
        return Err("return capture does not match the target's return type".into());
    }
    if let Some(i) = t.body.iter().position(|s| matches!(s, IrStatement::IdentityParam { .. } | IrStatement::IdentityThis { .. })) {
        return Err(format!("open parameter at statement {i}"));
    }
    let m = IrMethod { signature: test_method_signature(), locals: Vec::new(), body: t.body.clone() };
    if let Some(d) = validate_method_body(&m).into_iter().next() {
        return Err(d.to_string());
    }
    let defs: std::collections::BTreeSet<&str> = t.body.iter().filter_map(IrStatement::def).collect();
    for (i, s) in t.body.iter().enumerate() {
        if let Some(u) = s.uses().into_iter().find(|u| !defs.contains(u)) {
            return Err(format!("statement {i} uses undefined `{u}`"));
        }
    }
    Ok(())
}

fn test_method_signature() -> MethodSignature {
    MethodSignature::new("slicegen.GeneratedTest", "void", "run", &[], true)
}

/// Valid iff the static checks pass and no profile fails before the target.
pub fn check_validity(t: &TestCase, profiles: &[FrameworkVersionProfile], step_budget: usize) -> ValidityVerdict {
    if let Err(reason) = static_check(t) {
        return ValidityVerdict::Invalid { reason: format!("static: {reason}"), versions: profiles.iter().map(|p| p.version).collect() };
    }
    let mut first = None;
    let mut versions = Vec::new();
    for p in profiles {
        let o = Interpreter::new(p, step_budget).run(t);
        if let OutcomeStatus::InvalidBeforeTarget { error_kind, at_index } = o.status {
            first.get_or_insert(format!("{error_kind} at statement {at_index}, before the target"));
            versions.push(p.version);
        }
    }
    match first {
        None => ValidityVerdict::Valid,
        Some(reason) => ValidityVerdict::Invalid { reason, versions },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub test_id: String,
    /// Target signature, `static `-prefixed for static methods.
    pub target: String,
    pub outcomes: Vec<ExecutionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidTest {
    pub test_id: String,
    pub target: String,
    pub reason: String,
    pub versions: Vec<u32>,
}

/// Outcomes of every valid concrete test on every version, row-major by test.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutcomeMatrix {
    pub versions: Vec<u32>,
    pub rows: Vec<MatrixRow>,
    pub invalid: Vec<InvalidTest>,
}

impl OutcomeMatrix {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("matrix serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Sorts profiles by version, rejecting duplicates and sets too small to compare.
pub fn order_profiles(mut profiles: Vec<FrameworkVersionProfile>) -> Result<Vec<FrameworkVersionProfile>, HarnessError> {
    if profiles.len() < 2 {
        return Err(HarnessError::TooFewProfiles(profiles.len()));
    }
    profiles.sort_by_key(|p| p.version);
    if let Some(w) = profiles.windows(2).find(|w| w[0].version == w[1].version) {
        return Err(HarnessError::DuplicateVersion(w[0].version));
    }
    Ok(profiles)
}

/// Runs every concrete test of the suite on every profile. Generic tests are
/// skipped; invalid ones are listed instead of run.
pub fn run_matrix(suite: &TestSuite, profiles: &[FrameworkVersionProfile], step_budget: usize) -> Result<OutcomeMatrix, HarnessError> {
    let profiles = order_profiles(profiles.to_vec())?;
    let concrete: Vec<&TestCase> = suite.tests.iter().filter(|t| t.form == TestForm::Concrete).collect();
    let results: Vec<Result<MatrixRow, InvalidTest>> = concrete
        .par_iter()
        .map(|t| {
            let target = crate::testgen::target_key(&t.target);
            match check_validity(t, &profiles, step_budget) {
                ValidityVerdict::Invalid { reason, versions } => Err(InvalidTest { test_id: t.id.clone(), target, reason, versions }),
                ValidityVerdict::Valid => {
                    let outcomes = profiles.iter().map(|p| Interpreter::new(p, step_budget).run(t)).collect();
                    Ok(MatrixRow { test_id: t.id.clone(), target, outcomes })
                }
            }
        })
        .collect();
    let mut m = OutcomeMatrix { versions: profiles.iter().map(|p| p.version).collect(), ..Default::default() };
    for r in results {
        match r {
            Ok(row) => m.rows.push(row),
            Err(inv) => m.invalid.push(inv),
        }
    }
    Ok(m)
}
