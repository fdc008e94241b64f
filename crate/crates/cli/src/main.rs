//! `degor`: batch front-end for seeds, verification suites, deformations and the Fock oracle.

mod commands;
mod fields;
mod params;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use degor_core::DegorError;
use serde_json::json;

use params::Params;

#[derive(Debug, Parser)]
#[command(name = "degor", version, about = "Darboux-Egoroff seeds, wave hierarchies, special deformations and oracle checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
    /// JSON file of parameters; its values override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Trivial,
    AnalyticN2,
    Hurwitz0,
    RandomControl,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a field descriptor (seed.json).
    Seed {
        #[arg(long, value_enum)]
        family: Family,
        /// Builtin hurwitz0 polynomial P^d/d − P.
        #[arg(long)]
        degree: Option<usize>,
        /// PolyMap JSON (hurwitz0) or rational data {"num", "den"} (analytic-n2).
        input: Option<PathBuf>,
    },
    /// DE residuals on a grid around the base point.
    Verify { input: PathBuf },
    /// Wave jets Ψ₀..Ψ_D on a grid or at given points.
    Hierarchy {
        input: PathBuf,
        /// JSON list of points; defaults to the verification grid.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Special flow over an ε-grid with DE closure and flow checks.
    Deform {
        input: PathBuf,
        /// g×g symmetric matrix M as rows of [re, im]; random if absent.
        #[arg(long)]
        m: Option<PathBuf>,
    },
    /// Finite-section oracle values for a loop element.
    Oracle {
        input: PathBuf,
        /// Point u as a JSON list of [re, im] pairs; zero if absent.
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
    },
    /// Every oracle-vs-formula comparison as a pass/fail matrix.
    Crosscheck,
}

pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { kind: "malformed_input", message: message.into(), code: 2 }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError { kind: "io", message: format!("{}: {e}", path.display()), code: 2 }
    }

    pub fn core(e: DegorError) -> Self {
        let code = match e {
            DegorError::Precondition(_) | DegorError::BadDimensions(_) | DegorError::ParityViolation { .. } => 2,
            _ => 1,
        };
        CliError { kind: e.kind(), message: e.to_string(), code }
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let p = cli.params.with_config(cli.config.as_deref())?;
    p.validate()?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Seed { family, degree, input } => commands::seed(*family, *degree, input.as_deref(), &p, out),
        Command::Verify { input } => commands::verify(input, &p, out),
        Command::Hierarchy { input, points } => commands::hierarchy(input, points.as_deref(), &p, out),
        Command::Deform { input, m } => commands::deform(input, m.as_deref(), &p, out),
        Command::Oracle { input, u } => commands::oracle(input, u.as_deref(), &p, out),
        Command::Crosscheck => commands::crosscheck(&p, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({"error": "malformed_input", "message": e.to_string().trim()}));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            if o.passed {
                println!("PASS {}", o.summary);
                ExitCode::SUCCESS
            } else {
                println!("FAIL {}", o.summary);
                eprintln!("{}", json!({"error": "tolerance_failure", "message": o.summary}));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind, "message": e.message}));
            ExitCode::from(e.code)
        }
    }
}
