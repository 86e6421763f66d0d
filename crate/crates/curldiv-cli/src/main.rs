//! Command-line front end for the curl-div solver library: operator
//! assembly summaries, symbol sampling, eigenvalue-bound checks, the
//! spectrum-versus-symbol comparison, single solves, and the full
//! iteration-count benchmark tables, emitted as CSV or JSON.
//!
//! Exit codes: 0 on success, 2 on an invalid configuration (or any other
//! failure to produce a result), 3 when an iterative solve does not reach
//! its tolerance.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curldiv::bspline::Degree;
use curldiv::figures::{spectrum_comparison_csv, symbol_bounds_csv, COMPARISON_GAP_THRESHOLD};
use curldiv::kron::assemble_isotropic;
use curldiv::spectrum::compare_spectrum;
use curldiv::symbol::{sample_symbol, verify_bounds, ProblemParams};
use curldiv::tables::{
    run_cell, run_cell_against_reference, table_csv, CellConfig, Method, ReferenceTable, RhsMode,
    TableReport, BENCHMARK_MAXIT, BENCHMARK_TOL,
};

#[derive(Parser)]
#[command(
    name = "curldiv",
    about = "B-spline Galerkin curl-div operators, their spectral symbols, and symbol-guided solvers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ProblemArgs {
    /// spatial dimension
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// B-spline degree
    #[arg(long, default_value_t = 3)]
    p: usize,
    /// mesh intervals per direction
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// weight of the curl-curl part
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// weight of the div-div part
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
}

#[derive(Args)]
struct OutputArgs {
    /// write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// cg, pwl, pmim, or mim
    #[arg(long)]
    method: String,
    /// stopping tolerance on the relative residual
    #[arg(long, default_value_t = BENCHMARK_TOL)]
    tol: f64,
    #[arg(long, default_value_t = BENCHMARK_MAXIT)]
    maxit: usize,
    /// manufactured (spline interpolant of a fixed smooth field) or random
    #[arg(long, default_value = "manufactured")]
    rhs: String,
    /// seed for the random right-hand side
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TableArgs {
    /// spatial dimension of the benchmark table
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// div-div weight of the benchmark table (0.1 or 0.01)
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = BENCHMARK_TOL)]
    tol: f64,
    #[arg(long, default_value_t = BENCHMARK_MAXIT)]
    maxit: usize,
    /// only run cells whose per-direction grid size is at most this
    #[arg(long)]
    max_grid: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the operator and report its structure
    Assemble {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sample the symbol eigenvalues over the canonical frequency grid
    Symbol {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check the closed-form eigenvalue bounds over the sampling grid
    Bounds {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compare the operator spectrum with the symbol samples rank by rank
    Spectrum {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve one system and report the iteration count
    Solve(SolveArgs),
    /// Run an iteration-count benchmark table against its reference values
    Table(TableArgs),
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn json_line(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn problem_degree(problem: &ProblemArgs) -> Result<Degree, String> {
    Degree::new(problem.p).map_err(|e| e.to_string())
}

fn run_assemble(problem: &ProblemArgs, output: &OutputArgs) -> Result<ExitCode, String> {
    let p = problem_degree(problem)?;
    let op = assemble_isotropic(p, problem.dim, problem.n, problem.alpha, problem.beta)
        .map_err(|e| e.to_string())?;
    let m = op.sizes()[0];
    let content = match output.format {
        Format::Json => json_line(&serde_json::json!({
            "dim": problem.dim,
            "degree": problem.p,
            "n": problem.n,
            "alpha": problem.alpha,
            "beta": problem.beta,
            "per_direction_size": m,
            "components": op.components(),
            "component_len": op.component_len(),
            "unknowns": op.total_len(),
        })),
        Format::Csv => {
            let mut s = String::from("key,value\n");
            for (k, v) in [
                ("dim", problem.dim),
                ("degree", problem.p),
                ("n", problem.n),
                ("per_direction_size", m),
                ("components", op.components()),
                ("component_len", op.component_len()),
                ("unknowns", op.total_len()),
            ] {
                s.push_str(&format!("{k},{v}\n"));
            }
            s
        }
    };
    emit(&output.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_symbol(problem: &ProblemArgs, output: &OutputArgs) -> Result<ExitCode, String> {
    let p = problem_degree(problem)?;
    let params = ProblemParams::isotropic(problem.dim, p, problem.alpha, problem.beta)
        .map_err(|e| e.to_string())?;
    let samples = sample_symbol(&params, problem.n).map_err(|e| e.to_string())?;
    let content = match output.format {
        Format::Json => {
            let sorted = samples.sorted_eigs();
            json_line(&serde_json::json!({
                "dim": problem.dim,
                "degree": problem.p,
                "n": problem.n,
                "alpha": problem.alpha,
                "beta": problem.beta,
                "points_per_direction": samples.m,
                "grid_points": samples.num_points(),
                "samples": sorted.len(),
                "max_delta": samples.max_delta(),
                "min_eig": sorted.first().copied().unwrap_or(0.0),
                "max_eig": sorted.last().copied().unwrap_or(0.0),
            }))
        }
        Format::Csv => {
            let d = samples.dim;
            let mut s = String::from("index,delta");
            for i in 1..=d {
                s.push_str(&format!(",lambda_{i}"));
            }
            s.push('\n');
            for (idx, &dl) in samples.delta.iter().enumerate() {
                s.push_str(&format!("{idx},{dl:.16e}"));
                for i in 0..d {
                    s.push_str(&format!(",{:.16e}", samples.eigs[idx * d + i]));
                }
                s.push('\n');
            }
            s
        }
    };
    emit(&output.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_bounds(problem: &ProblemArgs, output: &OutputArgs) -> Result<ExitCode, String> {
    let p = problem_degree(problem)?;
    let params = ProblemParams::isotropic(problem.dim, p, problem.alpha, problem.beta)
        .map_err(|e| e.to_string())?;
    let content = match output.format {
        Format::Json => {
            let report = verify_bounds(&params, problem.n, 1e-12).map_err(|e| e.to_string())?;
            json_line(&serde_json::json!({
                "dim": problem.dim,
                "degree": problem.p,
                "n": problem.n,
                "alpha": problem.alpha,
                "beta": problem.beta,
                "grid_points": report.points,
                "checked": report.checked,
                "violations": report.violations,
                "worst_slack": report.worst_slack,
                "max_delta": report.max_delta,
                "tolerance": report.tolerance,
            }))
        }
        Format::Csv => {
            symbol_bounds_csv(problem.dim, problem.p, problem.n, problem.alpha, problem.beta)
                .map_err(|e| e.to_string())?
        }
    };
    emit(&output.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_spectrum(problem: &ProblemArgs, output: &OutputArgs) -> Result<ExitCode, String> {
    let content = match output.format {
        Format::Json => {
            let p = problem_degree(problem)?;
            let op = assemble_isotropic(p, problem.dim, problem.n, problem.alpha, problem.beta)
                .map_err(|e| e.to_string())?;
            let params = ProblemParams::isotropic(problem.dim, p, problem.alpha, problem.beta)
                .map_err(|e| e.to_string())?;
            let samples = sample_symbol(&params, problem.n).map_err(|e| e.to_string())?;
            let scale = (problem.n as f64).powi(problem.dim as i32 - 2);
            let cmp = compare_spectrum(&op, &samples, scale, COMPARISON_GAP_THRESHOLD)
                .map_err(|e| e.to_string())?;
            json_line(&serde_json::json!({
                "dim": problem.dim,
                "degree": problem.p,
                "n": problem.n,
                "alpha": problem.alpha,
                "beta": problem.beta,
                "pairs": cmp.len(),
                "gap_threshold": cmp.threshold,
                "aligned_fraction": cmp.aligned_fraction(),
                "outliers": cmp.outliers,
                "matrix_low_cluster_at_0.05": cmp.low_cluster_fraction(0.05),
                "symbol_low_cluster_at_0.05": cmp.symbol_low_cluster_fraction(0.05),
            }))
        }
        Format::Csv => {
            spectrum_comparison_csv(problem.dim, problem.p, problem.n, problem.alpha, problem.beta)
                .map_err(|e| e.to_string())?
        }
    };
    emit(&output.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn run_solve(args: &SolveArgs) -> Result<ExitCode, String> {
    let method: Method = args.method.parse().map_err(|e: curldiv::Error| e.to_string())?;
    let rhs = match args.rhs.as_str() {
        "manufactured" => RhsMode::Manufactured,
        "random" => RhsMode::Random(args.seed),
        other => {
            return Err(format!(
                "unknown rhs mode '{other}' (expected manufactured or random)"
            ))
        }
    };
    if !(args.tol > 0.0) {
        return Err(format!("tolerance must be positive, got {}", args.tol));
    }
    let cfg = CellConfig {
        method,
        dim: args.problem.dim,
        degree: args.problem.p,
        n: args.problem.n,
        alpha: args.problem.alpha,
        beta: args.problem.beta,
        tol: args.tol,
        maxit: args.maxit,
        rhs,
    };
    let record = run_cell(&cfg).map_err(|e| e.to_string())?;
    let content = match args.output.format {
        Format::Json => {
            let mut v = serde_json::to_value(&record).expect("serializable record");
            v["tol"] = args.tol.into();
            v["maxit"] = args.maxit.into();
            json_line(&v)
        }
        Format::Csv => format!(
            "method,dim,degree,n,alpha,beta,iterations,converged,final_relres\n\
             {},{},{},{},{},{},{},{},{:.16e}\n",
            record.method,
            record.dim,
            record.degree,
            record.n,
            record.alpha,
            record.beta,
            record.iterations,
            record.converged,
            record.final_relres
        ),
    };
    emit(&args.output.out, &content)?;
    if record.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "did not converge: relative residual {:.3e} after {} iterations",
            record.final_relres, record.iterations
        );
        Ok(ExitCode::from(3))
    }
}

fn run_table(args: &TableArgs) -> Result<ExitCode, String> {
    let table = ReferenceTable::find(args.dim, args.beta).ok_or_else(|| {
        format!(
            "no reference table for dim {} and beta {}; available: 2/0.1, 2/0.01, 3/0.1, 3/0.01",
            args.dim, args.beta
        )
    })?;
    let mut cells = Vec::new();
    for (cfg, reference) in table.cells(args.tol, args.maxit) {
        let m = cfg.n + cfg.degree - 2;
        if args.max_grid.is_some_and(|cap| m > cap) {
            continue;
        }
        let report = run_cell_against_reference(&cfg, reference).map_err(|e| e.to_string())?;
        cells.push(report);
    }
    let report = TableReport {
        dim: table.dim,
        alpha: table.alpha,
        beta: table.beta,
        tol: args.tol,
        maxit: args.maxit,
        cells,
    };
    let content = match args.output.format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&report).expect("serializable table report");
            s.push('\n');
            s
        }
        Format::Csv => table_csv(&report),
    };
    emit(&args.output.out, &content)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Assemble { problem, output } => run_assemble(problem, output),
        Command::Symbol { problem, output } => run_symbol(problem, output),
        Command::Bounds { problem, output } => run_bounds(problem, output),
        Command::Spectrum { problem, output } => run_spectrum(problem, output),
        Command::Solve(args) => run_solve(args),
        Command::Table(args) => run_table(args),
    };
    match outcome {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
