use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use copart_core::{
    solve_binary_thresholds, solve_bruteforce, solve_dp_identity, solve_iterative, Error, ProblemSpec,
    SolveReport, SolverOptions,
};

use crate::error::CliError;
use crate::problem::{ProblemFile, SolverName};
use crate::report::{write_posteriors, ReportFile};

/// Exact solvers must agree to this tolerance.
pub const AGREEMENT_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "copart", version, about = "Design channel-optimized partitions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem file and write a JSON report.
    Solve(SolveArgs),
    /// Run several solvers on one problem file and check that they agree.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub input: PathBuf,
    /// Overrides the solver named in the file.
    #[arg(long, value_enum)]
    pub solver: Option<SolverName>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Writes data points, posteriors and assigned cells as CSV.
    #[arg(long, value_name = "PATH")]
    pub emit_posteriors: Option<PathBuf>,
    /// Writes the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    /// Solvers to run, default all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub solvers: Option<Vec<SolverName>>,
}

pub fn load(path: &Path) -> Result<(ProblemFile, ProblemSpec), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let file = ProblemFile::parse(&text)?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

pub fn run_solver(spec: &ProblemSpec, solver: SolverName, opts: &SolverOptions) -> Result<SolveReport, Error> {
    match solver {
        SolverName::Iterative => solve_iterative(spec, opts),
        SolverName::Bruteforce => solve_bruteforce(spec),
        SolverName::Thresholds => solve_binary_thresholds(spec),
        SolverName::Dp => solve_dp_identity(spec),
    }
}

/// Returns the report text. Files named by `--emit-posteriors` and
/// `--output` are written as a side effect.
pub fn solve(args: &SolveArgs) -> Result<String, CliError> {
    let (mut file, spec) = load(&args.input)?;
    if let Some(seed) = args.seed {
        file.options.seed = seed;
    }
    if let Some(restarts) = args.restarts {
        if restarts == 0 {
            return Err(CliError::Input("--restarts: must be at least 1".into()));
        }
        file.options.restarts = restarts;
    }
    let solver = args.solver.unwrap_or(file.solver);
    let report = run_solver(&spec, solver, &file.options.to_solver_options())?;
    let doc = ReportFile::build(&spec, &report)?;

    if let Some(path) = &args.emit_posteriors {
        let out = fs::File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        write_posteriors(&spec, &doc.assignment, out)?;
    }
    let text = doc.to_json();
    if let Some(path) = &args.output {
        fs::write(path, &text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompareRow {
    Ran {
        solver: SolverName,
        objective: f64,
        seconds: f64,
    },
    NotApplicable {
        solver: SolverName,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub rows: Vec<CompareRow>,
    /// Set when solvers disagree.
    pub disagreement: Option<String>,
}

impl CompareOutcome {
    pub fn table(&self) -> String {
        let mut out = format!("{:<12} {:>20} {:>12}\n", "solver", "objective", "runtime_ms");
        for row in &self.rows {
            match row {
                CompareRow::Ran { solver, objective, seconds } => {
                    let _ = writeln!(out, "{:<12} {:>20.12} {:>12.3}", solver.name(), objective, seconds * 1e3);
                }
                CompareRow::NotApplicable { solver, reason } => {
                    let _ = writeln!(out, "{:<12} {:>20} ({reason})", solver.name(), "not applicable");
                }
            }
        }
        out
    }
}

pub fn compare(args: &CompareArgs) -> Result<CompareOutcome, CliError> {
    let (file, spec) = load(&args.input)?;
    let solvers = args.solvers.clone().unwrap_or_else(|| SolverName::ALL.to_vec());
    let opts = file.options.to_solver_options();
    let mut rows = Vec::new();
    for solver in solvers {
        let start = Instant::now();
        match run_solver(&spec, solver, &opts) {
            Ok(report) => rows.push(CompareRow::Ran {
                solver,
                objective: report.objective,
                seconds: start.elapsed().as_secs_f64(),
            }),
            Err(e @ (Error::NotBinary(_) | Error::PreconditionViolated(_))) => rows.push(CompareRow::NotApplicable {
                solver,
                reason: e.to_string(),
            }),
            Err(e) => return Err(CliError::Precondition(format!("{}: {e}", solver.name()))),
        }
    }
    let disagreement = find_disagreement(&rows);
    Ok(CompareOutcome { rows, disagreement })
}

fn find_disagreement(rows: &[CompareRow]) -> Option<String> {
    let ran: Vec<(SolverName, f64)> = rows
        .iter()
        .filter_map(|r| match r {
            CompareRow::Ran { solver, objective, .. } => Some((*solver, *objective)),
            CompareRow::NotApplicable { .. } => None,
        })
        .collect();
    let exact: Vec<_> = ran.iter().filter(|(s, _)| s.is_exact()).collect();
    for (i, (a, va)) in exact.iter().enumerate() {
        for (b, vb) in &exact[i + 1..] {
            if (va - vb).abs() > AGREEMENT_TOL {
                return Some(format!("{} ({va}) and {} ({vb}) disagree", a.name(), b.name()));
            }
        }
    }
    if exact.is_empty() {
        return None;
    }
    let best_exact = exact.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    for (s, v) in ran.iter().filter(|(s, _)| !s.is_exact()) {
        if *v < best_exact - AGREEMENT_TOL {
            return Some(format!("{} ({v}) beats the exact optimum ({best_exact})", s.name()));
        }
    }
    None
}
