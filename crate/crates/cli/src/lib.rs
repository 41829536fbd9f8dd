//! The end-to-end pipeline behind the `slicegen` command: parse IR apps,
//! slice target API usages into tests, run them against version profiles and
//! report compatibility issues.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

use slicegen_core::graphs::{callgraph_to_dot, icfg_to_dot};
use slicegen_core::harness::{load_version_profile, run_matrix, FrameworkVersionProfile, HarnessError, OutcomeMatrix, DEFAULT_STEP_BUDGET};
use slicegen_core::ir::{parse_member_signature, parse_program, validate_program, IrProgram, MemberSignature, MethodSignature};
use slicegen_core::report::{render_report, Report, ReportError};
use slicegen_core::slicer::{locate_api_call_sites, split_branches_truncated, AnalysisContext, SliceConfig};
use slicegen_core::testgen::{
    construct_test_case, eliminate_equivalent, emit_test_suite, load_test_suite, select_minimal, target_key, write_test_suite, TestCase,
    TestForm, TestSuite, TestgenError,
};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: malformed files, unknown targets, too few profiles.
    #[error("{0}")]
    Input(String),
    /// Missing or unwritable files.
    #[error("{0}")]
    Env(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Env(_) => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Env(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Env(format!("{}: {e}", path.display())))
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Env(format!("{}: {e}", dir.display())))
}

pub const DEFAULT_VERSIONS: std::ops::RangeInclusive<u32> = 21..=30;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(20 * 60);

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub ir_paths: Vec<PathBuf>,
    pub profile_paths: Vec<PathBuf>,
    /// Empty means every framework API.
    pub targets: Vec<MethodSignature>,
    pub seed: u64,
    pub depth_cap: usize,
    pub branch_cap: usize,
    pub step_budget: usize,
    pub versions: Vec<u32>,
    /// Wall-clock budget per app.
    pub timeout: Duration,
    pub dot_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let slice = SliceConfig::default();
        RunConfig {
            ir_paths: Vec::new(),
            profile_paths: Vec::new(),
            targets: Vec::new(),
            seed: 0,
            depth_cap: slice.depth_cap,
            branch_cap: slice.branch_cap,
            step_budget: DEFAULT_STEP_BUDGET,
            versions: DEFAULT_VERSIONS.collect(),
            timeout: DEFAULT_TIMEOUT,
            dot_dir: None,
            output_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    fn check_caps(&self) -> Result<(), CliError> {
        if self.depth_cap == 0 || self.branch_cap == 0 || self.step_budget == 0 {
            return Err(CliError::Input("caps must be positive".into()));
        }
        Ok(())
    }
}

/// Reads a target list: one signature per line, `static ` prefix for static
/// methods, `#` comments.
pub fn parse_targets(text: &str) -> Result<Vec<MethodSignature>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (is_static, rest) = match line.strip_prefix("static ") {
            Some(r) => (true, r.trim()),
            None => (false, line),
        };
        match parse_member_signature(rest) {
            Ok(MemberSignature::Method(mut m)) => {
                m.is_static = is_static;
                out.push(m);
            }
            Ok(MemberSignature::Field(f)) => return Err(CliError::Input(format!("line {}: {f} is a field", n + 1))),
            Err(d) => return Err(CliError::Input(format!("line {}: {d}", n + 1))),
        }
    }
    Ok(out)
}

/// Validator-clean program, or every diagnostic prefixed with the path.
pub fn load_app(path: &Path) -> Result<IrProgram, CliError> {
    let src = read(path)?;
    let p = parse_program(&src).map_err(|ds| CliError::Input(format_diags(path, &ds)))?;
    let ds = validate_program(&p);
    if !ds.is_empty() {
        return Err(CliError::Input(format_diags(path, &ds)));
    }
    Ok(p)
}

fn format_diags(path: &Path, ds: &[slicegen_core::ir::Diagnostic]) -> String {
    ds.iter().map(|d| format!("{}: {d}", path.display())).collect::<Vec<_>>().join("\n")
}

/// Checks every file; returns the per-file report and whether all passed.
pub fn cmd_parse(paths: &[PathBuf]) -> Result<(String, bool), CliError> {
    let mut report = String::new();
    let mut ok = true;
    for p in paths {
        match load_app(p) {
            Ok(prog) => {
                let _ = writeln!(report, "{}: ok ({} classes, {} methods)", p.display(), prog.classes.len(), prog.methods().count());
            }
            Err(CliError::Input(msg)) => {
                ok = false;
                let _ = writeln!(report, "{msg}");
            }
            Err(e) => return Err(e),
        }
    }
    Ok((report, ok))
}

/// Labels apps by file stem, numbering repeated stems.
pub fn app_labels(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> =
        paths.iter().map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "app".into())).collect();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    stems
        .iter()
        .map(|s| {
            let n = seen.entry(s).or_insert(0);
            *n += 1;
            if *n == 1 {
                s.clone()
            } else {
                format!("{s}.{n}")
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenStats {
    pub sites: usize,
    /// Concrete tests built from every trace variant.
    pub raw: usize,
    /// Concrete tests left after removing equivalent ones.
    pub distinct: usize,
    /// One per target API.
    pub selected: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

impl GenStats {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sites           {}", self.sites);
        let _ = writeln!(s, "raw tests       {}", self.raw);
        let _ = writeln!(s, "distinct tests  {}", self.distinct);
        let _ = writeln!(s, "selected tests  {}", self.selected.len());
        for (api, id) in &self.selected {
            let _ = writeln!(s, "  {api}  {id}");
        }
        s
    }
}

pub struct GenOutput {
    pub suite: TestSuite,
    pub stats: GenStats,
    pub traces: serde_json::Value,
}

/// Target signatures as declared by this app's framework block, matched
/// irrespective of the static marker.
fn app_targets(p: &IrProgram, targets: &[MethodSignature]) -> BTreeSet<MethodSignature> {
    targets.iter().filter_map(|t| p.framework.methods.iter().find(|m| m.same_member(t)).cloned()).collect()
}

/// Slices every target usage of every app into tests, keeps one test per
/// distinct invocation sequence and then the smallest per target API.
pub fn generate(apps: &[(String, IrProgram)], config: &RunConfig) -> Result<GenOutput, CliError> {
    config.check_caps()?;
    for t in &config.targets {
        if !apps.iter().any(|(_, p)| p.framework.methods.iter().any(|m| m.same_member(t))) {
            return Err(CliError::Input(format!("target {t} is not declared by any app")));
        }
    }
    let slice = SliceConfig { depth_cap: config.depth_cap, branch_cap: config.branch_cap, seed: config.seed, ..Default::default() };
    let mut stats = GenStats::default();
    let mut concrete: Vec<TestCase> = Vec::new();
    let mut generic: BTreeMap<String, TestCase> = BTreeMap::new();
    let mut traces = Vec::new();

    for (label, p) in apps {
        let targets = app_targets(p, &config.targets);
        if !config.targets.is_empty() && targets.is_empty() {
            continue;
        }
        let started = Instant::now();
        let ctx = AnalysisContext::new(p);
        let sites = locate_api_call_sites(p, &targets).map_err(|e| CliError::Input(format!("{label}: {e}")))?;
        stats.sites += sites.len();
        for site in sites {
            if started.elapsed() > config.timeout {
                stats.warnings.push(format!("{label}: time budget exhausted, remaining sites skipped"));
                break;
            }
            let where_ = format!("{label}: {}@{} -> {}", site.method, site.stmt_index, site.target);
            let (variants, truncated) = match split_branches_truncated(&ctx, &slice, &site) {
                Ok(r) => r,
                Err(e) => {
                    stats.warnings.push(format!("{where_}: {e}"));
                    continue;
                }
            };
            if truncated {
                stats.warnings.push(format!("{where_}: more than {} variants, kept the first {}", config.branch_cap, config.branch_cap));
            }
            for t in variants {
                match construct_test_case(&t, label, config.seed) {
                    Ok((g, c)) => {
                        traces.push(json!({"app": label, "test": c.id, "trace": t.to_json()}));
                        generic.insert(g.id.clone(), g);
                        concrete.push(c);
                    }
                    Err(e) => stats.warnings.push(format!("{where_}#{}: {e}", t.variant)),
                }
            }
        }
    }
    stats.raw = concrete.len();
    let distinct = eliminate_equivalent(concrete);
    stats.distinct = distinct.len();

    let mut groups: BTreeMap<String, Vec<TestCase>> = BTreeMap::new();
    for t in distinct {
        groups.entry(target_key(&t.target)).or_default().push(t);
    }
    let mut selected = Vec::new();
    for (api, group) in &groups {
        let best = select_minimal(group).map_err(|e: TestgenError| CliError::Input(e.to_string()))?;
        stats.selected.insert(api.clone(), best.id.clone());
        if let Some(g) = best.generic_id.as_ref().and_then(|id| generic.get(id)) {
            selected.push(g.clone());
        }
        selected.push(best.clone());
    }
    let suite = emit_test_suite(selected, &config.versions);
    Ok(GenOutput { suite, stats, traces: serde_json::Value::Array(traces) })
}

/// `gen`: writes `suite.json` and `traces.json` (and DOT graphs on request).
pub fn cmd_gen(config: &RunConfig) -> Result<GenOutput, CliError> {
    if config.ir_paths.is_empty() {
        return Err(CliError::Input("no IR files given".into()));
    }
    let labels = app_labels(&config.ir_paths);
    let mut apps = Vec::new();
    for (path, label) in config.ir_paths.iter().zip(labels) {
        apps.push((label, load_app(path)?));
    }
    let out = generate(&apps, config)?;
    make_dir(&config.output_dir)?;
    write_test_suite(&out.suite, &config.output_dir.join("suite.json")).map_err(|e| CliError::Env(e.to_string()))?;
    let mut traces = serde_json::to_string_pretty(&out.traces).expect("traces serialize");
    traces.push('\n');
    write(&config.output_dir.join("traces.json"), &traces)?;
    if let Some(dir) = &config.dot_dir {
        make_dir(dir)?;
        for (label, p) in &apps {
            let ctx = AnalysisContext::new(p);
            write(&dir.join(format!("{label}.callgraph.dot")), &callgraph_to_dot(&ctx.cg))?;
            write(&dir.join(format!("{label}.icfg.dot")), &icfg_to_dot(&ctx.icfg))?;
        }
    }
    Ok(out)
}

/// Profiles from files and directories (`profile_v*.json` inside them).
pub fn load_profiles(paths: &[PathBuf]) -> Result<Vec<FrameworkVersionProfile>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| CliError::Env(format!("{}: {e}", p.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    name.starts_with("profile_v") && name.ends_with(".json")
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if p.exists() {
            files.push(p.clone());
        } else {
            return Err(CliError::Env(format!("{}: no such profile file or directory", p.display())));
        }
    }
    files
        .iter()
        .map(|f| {
            load_version_profile(f).map_err(|e| match e {
                HarnessError::Io(io) => CliError::Env(format!("{}: {io}", f.display())),
                other => CliError::Input(format!("{}: {other}", f.display())),
            })
        })
        .collect()
}

pub struct RunOutput {
    pub matrix: OutcomeMatrix,
    pub report: Report,
}

/// Runs a suite on the given profiles and reports, writing nothing.
pub fn run_suite(suite: &TestSuite, profiles: &[FrameworkVersionProfile], step_budget: usize, out: &Path) -> Result<RunOutput, CliError> {
    let matrix = run_matrix(suite, profiles, step_budget).map_err(|e| match e {
        HarnessError::Io(io) => CliError::Env(io.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    make_dir(out)?;
    write(&out.join("matrix.json"), &matrix.to_json())?;
    let report = render_report(&matrix, out).map_err(report_err)?;
    Ok(RunOutput { matrix, report })
}

fn report_err(e: ReportError) -> CliError {
    match e {
        ReportError::Io(io) => CliError::Env(io.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

/// `run`: writes `matrix.json`, `report.json` and `report.txt`.
pub fn cmd_run(suite_path: &Path, profile_paths: &[PathBuf], step_budget: usize, out: &Path) -> Result<RunOutput, CliError> {
    if step_budget == 0 {
        return Err(CliError::Input("caps must be positive".into()));
    }
    let suite = load_test_suite(&read(suite_path)?).map_err(|e| CliError::Input(format!("{}: {e}", suite_path.display())))?;
    let profiles = load_profiles(profile_paths)?;
    run_suite(&suite, &profiles, step_budget, out)
}

/// `report`: re-renders the report files from a saved matrix.
pub fn cmd_report(matrix_path: &Path, out: &Path) -> Result<Report, CliError> {
    let matrix = OutcomeMatrix::from_json(&read(matrix_path)?).map_err(|e| CliError::Input(format!("{}: {e}", matrix_path.display())))?;
    render_report(&matrix, out).map_err(report_err)
}

/// Concrete tests of a suite.
pub fn concrete_tests(suite: &TestSuite) -> impl Iterator<Item = &TestCase> {
    suite.tests.iter().filter(|t| t.form == TestForm::Concrete)
}
