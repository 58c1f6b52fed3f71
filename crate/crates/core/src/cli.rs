//! Command-line front end: `validate`, `analyze`, `cohort` and `dump-rules`.
//!
//! Exit codes: 0 success, 1 data error, 2 environment or I/O error (and
//! usage errors).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::ingest::{self, IngestDiagnostic, UserArtifacts};
use crate::kpi::{KpiParams, DEFAULT_TAIL_MINUTES};
use crate::phases::{PhaseRules, DEFAULT_RULES};
use crate::pipeline::{analyze_cohort, AnalysisConfig};
use crate::report::{render_tables, write_report, TableFormat};
use crate::timeline::DEFAULT_GAP_MINUTES;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_ENV: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nbtrace", version, about = "Analyze notebook cell-execution logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse inputs and report diagnostics without analyzing.
    Validate(InputArgs),
    /// Analyze a single user's log and final notebook.
    Analyze {
        #[command(flatten)]
        input: UserInput,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Analyze a cohort directory and pool the results.
    Cohort {
        #[arg(long, value_name = "DIR")]
        cohort: PathBuf,
        #[command(flatten)]
        opts: AnalysisArgs,
    },
    /// Print the built-in phase rules file.
    DumpRules,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long, value_name = "DIR", conflicts_with_all = ["log", "notebook", "schema"])]
    pub cohort: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub notebook: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub schema: Option<PathBuf>,
    #[arg(long, value_name = "FILE", env = "NBTRACE_RULES")]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UserInput {
    #[arg(long, value_name = "FILE")]
    pub log: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub notebook: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub schema: PathBuf,
    /// User id for the report; defaults to the log file's stem.
    #[arg(long)]
    pub user: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long, value_name = "F", default_value_t = DEFAULT_GAP_MINUTES, value_parser = positive)]
    pub gap_minutes: f64,
    #[arg(long, value_name = "F", default_value_t = DEFAULT_TAIL_MINUTES, value_parser = positive)]
    pub tail_minutes: f64,
    #[arg(long, value_name = "FILE", env = "NBTRACE_RULES")]
    pub rules: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "md|csv|json", default_value = "md")]
    pub format: TableFormat,
    /// Worker threads for per-user analysis (0 = one per core).
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub jobs: usize,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn exit_code(err: &Error) -> i32 {
    if err.is_environmental() {
        EXIT_ENV
    } else {
        EXIT_DATA
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ENV } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    run(cli, stdout, stderr)
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Validate(input) => cmd_validate(&input, stdout),
        Command::Analyze { input, opts } => cmd_analyze(&input, &opts, stdout, stderr),
        Command::Cohort { cohort, opts } => cmd_cohort(&cohort, &opts, stdout, stderr),
        Command::DumpRules => cmd_dump_rules(stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "nbtrace: {e}");
            exit_code(&e)
        }
    }
}

fn load_rules(path: Option<&Path>) -> Result<(PhaseRules, String)> {
    match path {
        None => Ok((PhaseRules::default(), "default".to_string())),
        Some(p) => {
            let bytes = ingest::read_file(p)?;
            let text = String::from_utf8(bytes).map_err(|_| Error::Rules {
                line: 0,
                message: "rules file is not UTF-8".into(),
            })?;
            Ok((PhaseRules::parse(&text)?, p.display().to_string()))
        }
    }
}

fn print_diagnostics(out: &mut dyn Write, diagnostics: &[IngestDiagnostic]) {
    for d in diagnostics {
        let _ = writeln!(out, "{d}");
    }
}

pub fn cmd_validate(input: &InputArgs, stdout: &mut dyn Write) -> Result<i32> {
    let mut diagnostics: Vec<IngestDiagnostic> = Vec::new();
    let mut fatal = Vec::new();
    if let Some(path) = input.rules.as_deref() {
        if let Err(e) = load_rules(Some(path)) {
            if e.is_environmental() {
                return Err(e);
            }
            fatal.push(format!("{}: {e}", path.display()));
        }
    }
    if let Some(root) = &input.cohort {
        match ingest::load_cohort(root) {
            Ok(cohort) => diagnostics.extend(cohort.diagnostics),
            Err(e) if e.is_environmental() => return Err(e),
            Err(e) => fatal.push(e.to_string()),
        }
    } else {
        if input.log.is_none() && input.notebook.is_none() && input.schema.is_none() {
            return Err(Error::InvalidParameter(
                "nothing to validate: pass --cohort or --log/--notebook/--schema".into(),
            ));
        }
        if let Some(path) = &input.log {
            let bytes = ingest::read_file(path)?;
            let user = user_id_from(path);
            let (_, diags) = ingest::parse_execution_log(&bytes, &user)?;
            let label = path.display().to_string();
            diagnostics.extend(diags.into_iter().map(|d| d.in_file(label.clone())));
        }
        if let Some(path) = &input.notebook {
            let bytes = ingest::read_file(path)?;
            if let Err(e) = ingest::parse_final_notebook(&bytes, "user") {
                fatal.push(format!("{}: {e}", path.display()));
            }
        }
        if let Some(path) = &input.schema {
            let bytes = ingest::read_file(path)?;
            if let Err(e) = ingest::parse_schema(&bytes) {
                fatal.push(format!("{}: {e}", path.display()));
            }
        }
    }
    print_diagnostics(stdout, &diagnostics);
    for f in &fatal {
        let _ = writeln!(stdout, "error: {f}");
    }
    let errors = diagnostics.iter().filter(|d| d.is_error()).count() + fatal.len();
    let warnings = diagnostics.len() + fatal.len() - errors;
    let _ = writeln!(stdout, "{errors} error(s), {warnings} warning(s)");
    Ok(if errors == 0 { EXIT_OK } else { EXIT_DATA })
}

fn user_id_from(log: &Path) -> String {
    log.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "user".to_string())
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {jobs} worker(s): {e}")))?;
    Ok(pool.install(f))
}

fn emit(
    users: &[UserArtifacts],
    schema: &crate::model::Schema,
    diagnostics: Vec<IngestDiagnostic>,
    opts: &AnalysisArgs,
    stdout: &mut dyn Write,
) -> Result<i32> {
    let (rules, rules_label) = load_rules(opts.rules.as_deref())?;
    let config = AnalysisConfig {
        params: KpiParams {
            gap_minutes: opts.gap_minutes,
            tail_minutes: opts.tail_minutes,
        },
        rules,
        rules_label,
    };
    let report = with_pool(opts.jobs, || analyze_cohort(users, schema, &config, diagnostics))??;
    if let Some(out) = &opts.out {
        write_report(&report, out)?;
    }
    let tables = render_tables(&report, opts.format)?;
    stdout
        .write_all(&tables)
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}

pub fn cmd_analyze(
    input: &UserInput,
    opts: &AnalysisArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    let user = input.user.clone().unwrap_or_else(|| user_id_from(&input.log));
    let schema = ingest::parse_schema(&ingest::read_file(&input.schema)?)?;
    let (artifacts, diagnostics) = ingest::load_user(
        &user,
        &input.log,
        &input.notebook,
        &input.log.display().to_string(),
        &input.notebook.display().to_string(),
    )?;
    print_diagnostics(stderr, &diagnostics);
    emit(&[artifacts], &schema, diagnostics, opts, stdout)
}

pub fn cmd_cohort(
    root: &Path,
    opts: &AnalysisArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "cohort directory not found"),
        ));
    }
    let cohort = with_pool(opts.jobs, || ingest::load_cohort(root))??;
    print_diagnostics(stderr, &cohort.diagnostics);
    if cohort.users.is_empty() {
        let _ = writeln!(stderr, "nbtrace: no user could be loaded");
        return Ok(EXIT_DATA);
    }
    emit(&cohort.users, &cohort.schema, cohort.diagnostics, opts, stdout)
}

pub fn cmd_dump_rules(stdout: &mut dyn Write) -> Result<i32> {
    stdout
        .write_all(DEFAULT_RULES.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}
