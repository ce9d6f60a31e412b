//! `resdet`: runs residue-trace and residue-determinant tasks from a JSON
//! config and writes one report per task.

mod config;
mod operators;
mod report;
mod selfcheck;
mod tasks;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::{Overrides, SchemaError};
use report::TaskReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "resdet", version, about = "Residue traces and residue determinants on flat tori")]
struct Args {
    /// Task configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Run only tasks with this name or kind.
    #[arg(long)]
    task: Option<String>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    sphere_res: Option<usize>,
    #[arg(long)]
    contour_nodes: Option<usize>,
    #[arg(long)]
    x_grid: Option<usize>,
    /// Spectral cut angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Spot-check the resolvent identity at a few points per task.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug)]
pub enum CliError {
    Schema(SchemaError),
    Syntax { pointer: String, error: resdet::Error },
    Numeric { pointer: String, error: resdet::Error },
    Verify { pointer: String, defect: f64 },
    SelfcheckFailed(usize),
    Io(String),
}

impl From<SchemaError> for CliError {
    fn from(e: SchemaError) -> Self {
        CliError::Schema(e)
    }
}

impl CliError {
    pub fn numeric(pointer: &str, error: resdet::Error) -> Self {
        match error {
            resdet::Error::SyntaxError { .. } | resdet::Error::UnknownIdentifier { .. } => {
                CliError::Syntax {
                    pointer: pointer.to_string(),
                    error,
                }
            }
            _ => CliError::Numeric {
                pointer: pointer.to_string(),
                error,
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) | CliError::Syntax { .. } => 2,
            CliError::Numeric { .. } | CliError::Verify { .. } | CliError::SelfcheckFailed(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Schema(e) => write!(f, "{e}"),
            CliError::Syntax { pointer, error } | CliError::Numeric { pointer, error } => {
                write!(f, "{} at {pointer}: {error}", error.kind())
            }
            CliError::Verify { pointer, defect } => {
                write!(f, "VerifyFailed at {pointer}: resolvent identity defect {defect:.3e}")
            }
            CliError::SelfcheckFailed(n) => write!(f, "SelfcheckFailed: {n} checks failed"),
            CliError::Io(m) => write!(f, "IoError: {m}"),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn file_stem(index: usize, name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect();
    format!("{index:02}-{safe}")
}

fn emit(out: Option<&Path>, format: Format, reports: &[(usize, TaskReport)]) -> Result<(), CliError> {
    let all: Vec<TaskReport> = reports.iter().map(|(_, r)| r.clone()).collect();
    match (out, format) {
        (None, Format::Json) => {
            let text = serde_json::to_string_pretty(&all).expect("reports serialize");
            println!("{text}");
        }
        (None, Format::Csv) => {
            report::write_csv(&all, std::io::stdout()).map_err(|e| CliError::Io(e.to_string()))?
        }
        (Some(dir), format) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            for (i, r) in reports {
                let ext = if format == Format::Json { "json" } else { "csv" };
                let path = dir.join(format!("{}.{ext}", file_stem(*i, &r.name)));
                let mut f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                match format {
                    Format::Json => f.write_all(r.to_json().as_bytes()).map_err(|e| io_err(&path, e))?,
                    Format::Csv => report::write_csv(std::slice::from_ref(r), f)
                        .map_err(|e| io_err(&path, e))?,
                }
            }
        }
    }
    Ok(())
}

fn run(args: &Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let mut cfg = config::parse_config(&text)?;
    cfg.apply(&Overrides {
        sphere_res: args.sphere_res,
        contour_nodes: args.contour_nodes,
        x_grid: args.x_grid,
        theta: args.theta,
        seed: args.seed,
    });
    cfg.validate()?;
    let chart = operators::chart(&cfg)?;
    let ops = operators::build_all(&cfg, &chart)?;
    let cx = tasks::Context {
        cfg: &cfg,
        chart: &chart,
        ops: &ops,
        hash: cfg.hash(),
        verify: args.verify,
    };
    let selected: Vec<_> = cfg
        .tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| match &args.task {
            None => true,
            Some(want) => t.display_name() == *want || t.kind.name() == want,
        })
        .collect();
    if selected.is_empty() {
        return Err(SchemaError::new("/tasks", format!(
            "no task matches `{}`",
            args.task.as_deref().unwrap_or("")
        ))
        .into());
    }
    let mut reports = Vec::new();
    let mut failed_checks = 0;
    for (i, task) in selected {
        let r = tasks::run(&cx, i, task)?;
        if let Some(checks) = &r.checks {
            failed_checks += checks.iter().filter(|c| !c.passed).count();
        }
        reports.push((i, r));
    }
    emit(args.out.as_deref(), args.format, &reports)?;
    if failed_checks > 0 {
        return Err(CliError::SelfcheckFailed(failed_checks));
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
