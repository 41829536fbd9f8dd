use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use slicegen::{cmd_gen, cmd_parse, cmd_report, cmd_run, parse_targets, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "slicegen", version, about = "Mine API usages into minimal tests and check them across framework versions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate IR files.
    Parse {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Generate a test suite from IR apps.
    Gen {
        #[arg(long = "ir", required = true, num_args = 1..)]
        ir: Vec<PathBuf>,
        /// File with one target signature per line; all framework APIs if omitted.
        #[arg(long)]
        targets: Option<PathBuf>,
        #[arg(long, env = "SLICEGEN_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        depth_cap: usize,
        #[arg(long, default_value_t = 16)]
        branch_cap: usize,
        /// Inclusive version range recorded in the suite, e.g. `21-30`.
        #[arg(long, default_value = "21-30")]
        versions: String,
        /// Wall-clock budget per app.
        #[arg(long, default_value_t = 1200)]
        timeout_secs: u64,
        /// Also write call graph and ICFG DOT files here.
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a suite against version profiles and classify issues.
    Run {
        #[arg(long)]
        suite: PathBuf,
        /// Profile files or directories holding `profile_v<N>.json`.
        #[arg(long, required = true, num_args = 1..)]
        profiles: Vec<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        step_budget: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Re-render report files from a saved matrix.
    Report {
        /// Defaults to `<output>/matrix.json`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn parse_versions(s: &str) -> Result<Vec<u32>, CliError> {
    let bad = || CliError::Input(format!("bad version range `{s}`"));
    let (lo, hi) = match s.split_once('-') {
        Some((a, b)) => (a.trim().parse::<u32>().map_err(|_| bad())?, b.trim().parse::<u32>().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse::<u32>().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Parse { files } => {
            let (report, ok) = cmd_parse(&files)?;
            eprint!("{report}");
            if !ok {
                return Err(CliError::Input("validation failed".into()));
            }
        }
        Command::Gen { ir, targets, seed, depth_cap, branch_cap, versions, timeout_secs, dot, output } => {
            let targets = match targets {
                Some(p) => parse_targets(
                    &std::fs::read_to_string(&p).map_err(|e| CliError::Env(format!("{}: {e}", p.display())))?,
                )?,
                None => Vec::new(),
            };
            let config = RunConfig {
                ir_paths: ir,
                targets,
                seed,
                depth_cap,
                branch_cap,
                versions: parse_versions(&versions)?,
                timeout: Duration::from_secs(timeout_secs),
                dot_dir: dot,
                output_dir: output,
                ..Default::default()
            };
            let out = cmd_gen(&config)?;
            for w in &out.stats.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.stats.summary());
        }
        Command::Run { suite, profiles, step_budget, output } => {
            let out = cmd_run(&suite, &profiles, step_budget, &output)?;
            print!("{}", out.report.to_text());
        }
        Command::Report { matrix, output } => {
            let matrix = matrix.unwrap_or_else(|| output.join("matrix.json"));
            let report = cmd_report(&matrix, &output)?;
            print!("{}", report.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
