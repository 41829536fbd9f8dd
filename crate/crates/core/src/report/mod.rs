//! Compatibility-issue classification and report rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::{ErrorKind, ExecutionOutcome, OutcomeMatrix, OutcomeStatus};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("a row needs at least 2 versions, got {0}")]
    InsufficientVersions(usize),
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorClass {
    Signature,
    Semantic,
}

pub fn categorize_error(k: &ErrorKind) -> ErrorClass {
    if k.is_signature() {
        ErrorClass::Signature
    } else {
        ErrorClass::Semantic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IssueType {
    Type1,
    Type2_1,
    Type2_2,
}

impl IssueType {
    pub const ALL: [IssueType; 3] = [IssueType::Type1, IssueType::Type2_1, IssueType::Type2_2];

    pub fn name(self) -> &'static str {
        match self {
            IssueType::Type1 => "Type1",
            IssueType::Type2_1 => "Type2_1",
            IssueType::Type2_2 => "Type2_2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub version: u32,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibilityIssue {
    pub target: String,
    #[serde(rename = "type")]
    pub issue_type: IssueType,
    pub test_id: String,
    /// Cell label (error kind, `success`, `none` or a rendered value) to the
    /// versions in that cell.
    pub versions: BTreeMap<String, Vec<u32>>,
    pub evidence: Vec<Evidence>,
    /// Error kinds that make up the divergence.
    pub error_kinds: Vec<ErrorKind>,
}

fn summarize(o: &ExecutionOutcome) -> String {
    match &o.status {
        OutcomeStatus::Success { render: Some(r) } => format!("success {r}"),
        OutcomeStatus::Success { render: None } => "success".into(),
        OutcomeStatus::Error { error_kind, at_index } => format!("{error_kind} at statement {at_index}"),
        OutcomeStatus::InvalidBeforeTarget { error_kind, at_index } => format!("{error_kind} at statement {at_index}, before the target"),
    }
}

/// Issues shown by one test's per-version outcomes. Signature errors present
/// on some but not all versions make a Type1 issue; among the remaining
/// versions, differing semantic errors (or errors next to successes) make a
/// Type2_1 issue; differing return values make a Type2_2 issue.
pub fn classify_api(target: &str, row: &[ExecutionOutcome]) -> Result<Vec<CompatibilityIssue>, ReportError> {
    let versions: BTreeSet<u32> = row.iter().map(|o| o.version).collect();
    if versions.len() < 2 {
        return Err(ReportError::InsufficientVersions(versions.len()));
    }
    let mut row: Vec<&ExecutionOutcome> = row.iter().collect();
    row.sort_by_key(|o| o.version);
    let test_id = row[0].test_id.clone();
    let issue = |issue_type, cells: BTreeMap<String, Vec<u32>>, kinds: BTreeSet<ErrorKind>, members: &[&ExecutionOutcome]| CompatibilityIssue {
        target: target.to_string(),
        issue_type,
        test_id: test_id.clone(),
        versions: cells,
        evidence: members.iter().map(|o| Evidence { version: o.version, outcome: summarize(o) }).collect(),
        error_kinds: kinds.into_iter().collect(),
    };
    let mut out = Vec::new();

    let (sig, rest): (Vec<&ExecutionOutcome>, Vec<&ExecutionOutcome>) =
        row.iter().partition(|o| o.status.error_kind().is_some_and(|k| categorize_error(k) == ErrorClass::Signature));
    if !sig.is_empty() && !rest.is_empty() {
        let mut cells: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for o in &row {
            let key = o.status.error_kind().filter(|k| k.is_signature()).map_or("none".to_string(), ToString::to_string);
            cells.entry(key).or_default().push(o.version);
        }
        let kinds = sig.iter().filter_map(|o| o.status.error_kind().cloned()).collect();
        out.push(issue(IssueType::Type1, cells, kinds, &row));
    } else if sig.len() == row.len() {
        // one or more signature kinds on every version, no reference point
        let kinds: BTreeSet<&ErrorKind> = sig.iter().filter_map(|o| o.status.error_kind()).collect();
        if kinds.len() > 1 {
            let mut cells: BTreeMap<String, Vec<u32>> = BTreeMap::new();
            for o in &row {
                cells.entry(o.status.error_kind().expect("signature error").to_string()).or_default().push(o.version);
            }
            out.push(issue(IssueType::Type1, cells, kinds.into_iter().cloned().collect(), &row));
        }
    }

    let semantic: BTreeSet<ErrorKind> = rest.iter().filter_map(|o| o.status.error_kind().cloned()).collect();
    let successes: Vec<&&ExecutionOutcome> = rest.iter().filter(|o| o.status.error_kind().is_none()).collect();
    if semantic.len() >= 2 || (!semantic.is_empty() && !successes.is_empty()) {
        let mut cells: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for o in &rest {
            let key = o.status.error_kind().map_or("success".to_string(), ToString::to_string);
            cells.entry(key).or_default().push(o.version);
        }
        out.push(issue(IssueType::Type2_1, cells, semantic, &rest));
    }

    let mut renders: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for o in &successes {
        if let OutcomeStatus::Success { render } = &o.status {
            renders.entry(render.clone().unwrap_or_else(|| "void".into())).or_default().push(o.version);
        }
    }
    if renders.len() >= 2 {
        let members: Vec<&ExecutionOutcome> = successes.iter().map(|o| **o).collect();
        out.push(issue(IssueType::Type2_2, renders, BTreeSet::new(), &members));
    }
    Ok(out)
}

/// Issues of every target in the matrix, at most one per (target, type); the
/// first row (in matrix order) showing a type wins.
pub fn classify_matrix(m: &OutcomeMatrix) -> Result<BTreeMap<String, Vec<CompatibilityIssue>>, ReportError> {
    let mut out: BTreeMap<String, Vec<CompatibilityIssue>> = BTreeMap::new();
    for row in &m.rows {
        let issues = out.entry(row.target.clone()).or_default();
        for i in classify_api(&row.target, &row.outcomes)? {
            if !issues.iter().any(|e| e.issue_type == i.issue_type) {
                issues.push(i);
            }
        }
        issues.sort_by_key(|i| i.issue_type);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetReport {
    pub sig: String,
    pub issues: Vec<CompatibilityIssue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidityStats {
    pub valid: usize,
    pub invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub targets: Vec<TargetReport>,
    pub validity: ValidityStats,
    pub tallies: BTreeMap<IssueType, usize>,
    /// Per error kind, the number of Type1 and Type2_1 issues it takes part in.
    pub histogram: BTreeMap<String, usize>,
    pub versions: Vec<u32>,
}

impl Report {
    pub fn build(issues: &BTreeMap<String, Vec<CompatibilityIssue>>, m: &OutcomeMatrix) -> Report {
        let mut tallies: BTreeMap<IssueType, usize> = IssueType::ALL.iter().map(|t| (*t, 0)).collect();
        let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
        for i in issues.values().flatten() {
            *tallies.entry(i.issue_type).or_default() += 1;
            for k in &i.error_kinds {
                *histogram.entry(k.to_string()).or_default() += 1;
            }
        }
        Report {
            targets: issues.iter().map(|(sig, is)| TargetReport { sig: sig.clone(), issues: is.clone() }).collect(),
            validity: ValidityStats { valid: m.rows.len(), invalid: m.invalid.len() },
            tallies,
            histogram,
            versions: m.versions.clone(),
        }
    }

    pub fn tally(&self, t: IssueType) -> usize {
        self.tallies.get(&t).copied().unwrap_or(0)
    }

    pub fn issue_types(&self, target: &str) -> Vec<IssueType> {
        self.targets.iter().filter(|t| t.sig == target).flat_map(|t| t.issues.iter().map(|i| i.issue_type)).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "versions        {}", ranges(&self.versions, &self.versions));
        let _ = writeln!(s, "valid tests     {}", self.validity.valid);
        let _ = writeln!(s, "invalid tests   {}", self.validity.invalid);
        s.push('\n');
        let _ = writeln!(s, "{:<24}{:>6}", "issue type", "count");
        for t in IssueType::ALL {
            let _ = writeln!(s, "{:<24}{:>6}", t.name(), self.tally(t));
        }
        s.push('\n');
        let _ = writeln!(s, "{:<24}{:>6}", "error kind", "count");
        for (k, n) in &self.histogram {
            let _ = writeln!(s, "{k:<24}{n:>6}");
        }
        for t in self.targets.iter().filter(|t| !t.issues.is_empty()) {
            let _ = writeln!(s, "\n{}", t.sig);
            for i in &t.issues {
                let cells: Vec<String> = i.versions.iter().map(|(k, vs)| format!("{k}: {}", ranges(vs, &self.versions))).collect();
                let _ = writeln!(s, "  {:<8} {}", i.issue_type.name(), cells.join(" | "));
            }
        }
        s
    }
}

/// `21-23, 25` style listing; runs follow the order of `all`.
fn ranges(vs: &[u32], all: &[u32]) -> String {
    let pos = |v: &u32| all.iter().position(|a| a == v);
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < vs.len() {
        let mut j = i;
        while j + 1 < vs.len() && matches!((pos(&vs[j]), pos(&vs[j + 1])), (Some(a), Some(b)) if b == a + 1) {
            j += 1;
        }
        parts.push(if i == j { vs[i].to_string() } else { format!("{}-{}", vs[i], vs[j]) });
        i = j + 1;
    }
    parts.join(", ")
}

/// Classifies the matrix and writes `report.json` and `report.txt` to `dir`.
pub fn render_report(m: &OutcomeMatrix, dir: &Path) -> Result<Report, ReportError> {
    let issues = classify_matrix(m)?;
    let report = Report::build(&issues, m);
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    std::fs::write(dir.join("report.txt"), report.to_text())?;
    Ok(report)
}
