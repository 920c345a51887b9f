//! Command-line interface.
//!
//! Exit codes: 0 success, 1 failed check suite, 2 input or parse error, 3 solver
//! non-convergence (the report is still written), 4 internal numerical error.

mod config;
mod input;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::check::{self, CheckOptions};
use crate::error::{Error, NewtonFailure, Result};
use crate::fci::{aufbau_diagonal, contract_2rdm, solve_fci, DEFAULT_DETERMINANT_CAP, DENSE_LIMIT};
use crate::hamiltonians::{reduced_from_integrals, spinify};
use crate::newton::{linear_grid, sample_delta_curve, solve_system, NewtonConfig};
use crate::projection::ProjectionOptions;
use crate::representability::ConditionSet;

pub use input::{InputArgs, Item, Toy};
use report::{Output, SolveReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dualrdm", version, about = "Dual 2-RDM lower bounds for fermionic ground-state energies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower bound for one system
    Solve(SolveArgs),
    /// Sample the distance curve on a grid of shifts
    Curve(CurveArgs),
    /// Batch of independent solves, one row per item
    Dissociate(DissociateArgs),
    /// Full-CI ground state
    Fci(FciArgs),
    /// Run the invariant suites
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of standard output
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Omit the timestamp header line so reruns are byte-identical
    #[arg(long)]
    pub no_timestamp: bool,
    /// Flat key = value file of flag defaults; flags override it
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProjectionArgs {
    /// Comma-separated subset of P,Q,G (P required)
    #[arg(long, default_value = "P,Q,G")]
    pub conditions: String,
    /// Absolute gradient tolerance (default 1e-7 max(1, |K|))
    #[arg(long)]
    pub tol_g: Option<f64>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// L-BFGS history length
    #[arg(long)]
    pub memory: Option<usize>,
}

impl ProjectionArgs {
    fn options(&self) -> Result<ProjectionOptions> {
        let mut opts = ProjectionOptions { conditions: ConditionSet::parse(&self.conditions)?, ..Default::default() };
        opts.tol_g = self.tol_g;
        if let Some(m) = self.max_inner {
            opts.max_inner = m;
        }
        if let Some(m) = self.memory {
            opts.memory = m;
        }
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[command(flatten)]
    pub projection: ProjectionArgs,
    /// Starting shift (default from the Aufbau determinant)
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub damping: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Tolerance factor of the final re-projection (1 disables)
    #[arg(long)]
    pub polish: Option<f64>,
    /// Newton steps after extrapolation (0 disables)
    #[arg(long)]
    pub refine: Option<usize>,
    /// Skip the confirmation probe
    #[arg(long)]
    pub no_confirm: bool,
}

impl SolverArgs {
    fn config(&self) -> Result<NewtonConfig> {
        let d = NewtonConfig::default();
        let cfg = NewtonConfig {
            mu0: self.mu0,
            damping: self.damping.unwrap_or(d.damping),
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            projection: self.projection.options()?,
            confirm: !self.no_confirm,
            polish: self.polish.unwrap_or(d.polish),
            refine: self.refine.unwrap_or(d.refine),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Hartree-Fock reference energy, enables the correlation percentage
    #[arg(long, allow_negative_numbers = true)]
    pub e_ref_hf: Option<f64>,
    /// Full-CI reference energy
    #[arg(long, allow_negative_numbers = true)]
    pub e_ref_fci: Option<f64>,
    /// Compute the full-CI reference
    #[arg(long, conflicts_with = "e_ref_fci")]
    pub fci: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub projection: ProjectionArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_min: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 21)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DissociateArgs {
    /// LABEL=SOURCE, SOURCE a FCIDUMP path, hubbard-dimer:t=..,U=.. or random:seed=..,norb=..,nelec=..
    #[arg(long = "item", required = true)]
    pub items: Vec<Item>,
    /// Also compute the full-CI energy per item
    #[arg(long)]
    pub fci: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FciArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest determinant space accepted
    #[arg(long, default_value_t = DEFAULT_DETERMINANT_CAP)]
    pub cap: usize,
    /// Write 2-RDM components p<q, r<s as CSV p,q,r,s,value
    #[arg(long, value_name = "PATH")]
    pub rdm_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long, default_value_t = check::DEFAULT_SEED)]
    pub seed: u64,
    /// Run only these suites
    #[arg(long = "suite")]
    pub suites: Vec<String>,
    /// Test hook: perturb the G adjoint
    #[arg(long, hide = true)]
    pub corrupt_adjoint: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        _ if err.is_non_convergence() => EXIT_NOT_CONVERGED,
        Error::NewtonFailed { reason: NewtonFailure::InitialBelowOptimum { .. }, .. } => EXIT_INPUT,
        Error::NewtonFailed { reason: NewtonFailure::Projection { source, .. }, .. } => exit_code(source),
        Error::InvalidInput(_) | Error::Parse { .. } | Error::Data(_) | Error::CapExceeded { .. } | Error::Io(_) => {
            EXIT_INPUT
        }
        _ => EXIT_NUMERICAL,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let args = match splice_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let matches = match Cli::command().try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_INPUT;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Curve(a) => cmd_curve(&a),
        Command::Dissociate(a) => cmd_dissociate(&a),
        Command::Fci(a) => cmd_fci(&a),
        Command::Check(a) => cmd_check(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn splice_config(args: Vec<String>) -> Result<Vec<String>> {
    if args.len() < 2 {
        return Ok(args);
    }
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&args[1]) else {
        return Ok(args);
    };
    let rest = &args[2..];
    let Some(path) = config::find_config(rest) else {
        return Ok(args);
    };
    let mut out = args[..2].to_vec();
    out.extend(config::expand(path.as_ref(), sub, rest)?);
    out.extend_from_slice(rest);
    Ok(out)
}

fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let start = Instant::now();
    let cfg = a.solver.config()?;
    let (source, ints) = a.input.load()?;
    let spin = spinify(&ints)?;
    let e_fci = match (a.e_ref_fci, a.fci) {
        (Some(e), _) => Some(e),
        (None, true) => Some(solve_fci(&spin, DEFAULT_DETERMINANT_CAP)?.energy()),
        (None, false) => None,
    };
    let mut report = SolveReport::new(source, spin.basis(), ints.e_core(), cfg.projection.conditions);
    report.e_ref_fci = e_fci;
    report.e_ref_hf = a.e_ref_hf;
    let (code, failure) = match solve_system(&spin, &cfg) {
        Ok((_, trace)) => {
            report.fill(&trace);
            (EXIT_OK, None)
        }
        Err(Error::NewtonFailed { reason, trace }) => {
            report.fill(&trace);
            let err = Error::NewtonFailed { reason, trace };
            (exit_code(&err), Some(err))
        }
        Err(e) => return Err(e),
    };
    if let Some(err) = &failure {
        report.status = "failed";
        report.error = Some(err.to_string());
        if exit_code(err) != EXIT_NOT_CONVERGED {
            return Err(failure.expect("checked"));
        }
    }
    let out = Output::new(&a.output, start);
    out.emit(&report.csv(), &report)?;
    if let Some(err) = failure {
        eprintln!("error: {err}");
    }
    Ok(code)
}

fn cmd_curve(a: &CurveArgs) -> Result<i32> {
    let start = Instant::now();
    let opts = a.projection.options()?;
    let grid = linear_grid(a.mu_min, a.mu_max, a.points)?;
    let (_, ints) = a.input.load()?;
    let (_, k) = reduced_from_integrals(&ints)?;
    let points = sample_delta_curve(&k, &grid, &opts)?;
    let mut csv = String::from("mu,delta,derivative,error\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            report::num(p.mu),
            report::opt(p.delta),
            report::opt(p.derivative),
            p.error.as_deref().map(report::quote).unwrap_or_default()
        ));
    }
    Output::new(&a.output, start).emit(&csv, &points)?;
    let ok = points.iter().filter(|p| p.error.is_none()).count();
    if ok < points.len() {
        eprintln!("warning: {} of {} grid points failed", points.len() - ok, points.len());
    }
    Ok(if ok > 0 { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[derive(Debug, serde::Serialize)]
struct DissociationRow {
    label: String,
    e_app: Option<f64>,
    e_fci: Option<f64>,
    gap: Option<f64>,
    error: Option<String>,
    #[serde(skip)]
    code: i32,
}

fn dissociation_row(item: &Item, cfg: &NewtonConfig, with_fci: bool) -> DissociationRow {
    let solved = (|| -> Result<(Option<f64>, Option<f64>)> {
        let (_, ints) = item.input()?.load()?;
        let spin = spinify(&ints)?;
        let e_fci = if with_fci { Some(solve_fci(&spin, DEFAULT_DETERMINANT_CAP)?.energy()) } else { None };
        let (_, trace) = solve_system(&spin, cfg)?;
        Ok((trace.energy, e_fci))
    })();
    match solved {
        Ok((e_app, e_fci)) => DissociationRow {
            label: item.label.clone(),
            e_app,
            e_fci,
            gap: e_app.zip(e_fci).map(|(a, f)| a - f),
            error: None,
            code: EXIT_OK,
        },
        Err(e) => DissociationRow {
            label: item.label.clone(),
            e_app: None,
            e_fci: None,
            gap: None,
            code: exit_code(&e),
            error: Some(e.to_string()),
        },
    }
}

fn cmd_dissociate(a: &DissociateArgs) -> Result<i32> {
    let start = Instant::now();
    let cfg = a.solver.config()?;
    let rows: Vec<DissociationRow> = a.items.par_iter().map(|item| dissociation_row(item, &cfg, a.fci)).collect();
    let mut csv = String::from("label,e_app,e_fci,gap,error\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.label,
            report::opt(r.e_app),
            report::opt(r.e_fci),
            report::opt(r.gap),
            r.error.as_deref().map(report::quote).unwrap_or_default()
        ));
    }
    Output::new(&a.output, start).emit(&csv, &rows)?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("error: item {}: {}", r.label, r.error.as_deref().unwrap_or_default());
    }
    if rows.iter().any(|r| r.code == EXIT_OK) {
        Ok(EXIT_OK)
    } else {
        Ok(rows.first().map_or(EXIT_INPUT, |r| r.code))
    }
}

#[derive(Debug, serde::Serialize)]
struct FciReport {
    source: String,
    n_orbitals: usize,
    n_electrons: usize,
    dimension: usize,
    method: &'static str,
    energy: f64,
    aufbau_diagonal: f64,
    e_core: f64,
}

fn cmd_fci(a: &FciArgs) -> Result<i32> {
    let start = Instant::now();
    let (source, ints) = a.input.load()?;
    let spin = spinify(&ints)?;
    let psi = solve_fci(&spin, a.cap)?;
    let basis = spin.basis();
    let dimension = psi.determinants().len();
    let report = FciReport {
        source,
        n_orbitals: basis.n_orbitals(),
        n_electrons: basis.n_electrons(),
        dimension,
        method: if dimension <= DENSE_LIMIT { "dense" } else { "lanczos" },
        energy: psi.energy(),
        aufbau_diagonal: aufbau_diagonal(&spin),
        e_core: spin.e_core(),
    };
    if let Some(path) = &a.rdm_out {
        let gamma = contract_2rdm(&psi);
        let r = basis.n_orbitals();
        let mut csv = String::from("p,q,r,s,value\n");
        for (p, q) in crate::pairspace::pair_list(r) {
            for (s, t) in crate::pairspace::pair_list(r) {
                let v = gamma.component(p, q, s, t);
                if v.abs() > 1e-14 {
                    csv.push_str(&format!("{p},{q},{s},{t},{}\n", report::num(v)));
                }
            }
        }
        std::fs::write(path, csv)?;
    }
    let csv = format!(
        "key,value\nsource,{}\nn_orbitals,{}\nn_electrons,{}\ndimension,{}\nmethod,{}\nenergy,{}\naufbau_diagonal,{}\ne_core,{}\n",
        report::quote(&report.source),
        report.n_orbitals,
        report.n_electrons,
        report.dimension,
        report.method,
        report::num(report.energy),
        report::num(report.aufbau_diagonal),
        report::num(report.e_core)
    );
    Output::new(&a.output, start).emit(&csv, &report)?;
    Ok(EXIT_OK)
}

fn cmd_check(a: &CheckArgs) -> Result<i32> {
    let start = Instant::now();
    let opts = CheckOptions { seed: a.seed, corrupt_adjoint: a.corrupt_adjoint };
    let names: Vec<&str> =
        if a.suites.is_empty() { check::SUITES.to_vec() } else { a.suites.iter().map(String::as_str).collect() };
    let reports = names.iter().map(|n| check::run_suite(n, &opts)).collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("suite,passed,cases,worst,tolerance\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.name,
            r.passed,
            r.cases,
            report::num(r.worst),
            report::num(r.tolerance)
        ));
    }
    Output::new(&a.output, start).emit(&csv, &reports)?;
    for r in &reports {
        eprintln!("{r}");
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("failed suites: {}", failed.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::Parse { line: 1, message: "x".into() }), EXIT_INPUT);
        assert_eq!(exit_code(&Error::Numerical("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::Eigensolver("x".into())), EXIT_NOT_CONVERGED);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "dualrdm",
            "solve",
            "--toy",
            "hubbard-dimer",
            "--t",
            "1",
            "--U",
            "4",
            "--mu0",
            "-0.5",
        ])
        .unwrap();
        match cli.command {
            Command::Solve(a) => {
                assert_eq!(a.input.toy, Some(Toy::HubbardDimer));
                assert_eq!(a.solver.mu0, Some(-0.5));
            }
            _ => panic!(),
        }
    }
}
