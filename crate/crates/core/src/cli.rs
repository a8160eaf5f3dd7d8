//! Command-line front end: `solve`, `check` and `eigen`.
//!
//! Every flag is echoed into `manifest.json`, both as a structured
//! [`RunConfig`] and as an argument list that parses back to the same
//! config. User-defined φ or f are supplied at compile time through
//! [`Plugins`] and selected with `--op custom` / `--nl custom`; the stock
//! binary ships none, so those presets are usage errors there.
//!
//! `OSCILLAX_SEEDLESS` is reserved and ignored; nothing here is random.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::eigen::{first_eigenpair, EigenPair, EigenSummary};
use crate::error::{Error, Result};
use crate::hypotheses::{
    check_leray_lions, check_oscillation_hypotheses, check_subsolution_inequality, log_grid, HypothesisReport,
    OscillationConfig, ReportDigest, Verdict,
};
use crate::io::write_text;
use crate::mesh::{build_mesh, DomainSpec, Mesh};
use crate::model::{make_example_nonlinearity, make_p_laplacian, make_regularized_power, Nonlinearity, PhiOperator};
use crate::par::{self, Execution};
use crate::solver::{branch_csv, run_branches, BranchSet, DecayRow, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Check,
    Eigen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum OperatorPreset {
    PLaplacian,
    PaperExamplePhi,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NonlinearityPreset {
    PaperExample,
    Custom,
}

#[derive(Debug, Parser)]
#[command(name = "oscillax", version, about = "Small positive solution branches of φ-Laplacian problems")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Minimize the energy on every branch box and write the decay table
    Solve(RunArgs),
    /// Audit the structural hypotheses and write JSON reports
    Check(RunArgs),
    /// Compute the first Dirichlet eigenpair
    Eigen(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "interval")]
    domain: DomainKind,
    /// Left end of the interval
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    /// Right end of the interval
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    b: f64,
    /// Cells per side
    #[arg(long, default_value_t = 256)]
    cells: usize,
    #[arg(long, value_enum, default_value = "p_laplacian")]
    op: OperatorPreset,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long, value_enum, default_value = "paper_example")]
    nl: NonlinearityPreset,
    #[arg(long, default_value_t = 2)]
    n_start: u32,
    #[arg(long, default_value_t = 8)]
    n_end: u32,
    #[arg(long, default_value_t = 1e-9)]
    grad_tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    eigen_tol: f64,
    /// Output directory
    #[arg(long, default_value = "oscillax-out")]
    out: PathBuf,
    /// Worker threads (1 runs sequentially)
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 1 when a hypothesis check fails
    #[arg(long)]
    fatal_hypotheses: bool,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub domain: DomainSpec,
    pub resolution: usize,
    pub op: OperatorPreset,
    pub p: f64,
    pub kappa: f64,
    pub nl: NonlinearityPreset,
    pub n_start: u32,
    pub n_end: u32,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub eigen_tol: f64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub fatal_hypotheses: bool,
}

impl RunConfig {
    /// Parses arguments without the program name, e.g. `["eigen", "--cells", "64"]`.
    pub fn from_args<I, T>(args: I) -> Result<RunConfig>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        let argv = std::iter::once(OsString::from("oscillax")).chain(args.into_iter().map(Into::into));
        let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
        Self::from_cli(cli)
    }

    fn from_cli(cli: Cli) -> Result<RunConfig> {
        let (command, a) = match cli.command {
            CliCommand::Solve(a) => (Command::Solve, a),
            CliCommand::Check(a) => (Command::Check, a),
            CliCommand::Eigen(a) => (Command::Eigen, a),
        };
        let domain = match a.domain {
            DomainKind::Interval => DomainSpec::Interval { a: a.a, b: a.b },
            DomainKind::Square => DomainSpec::UnitSquare,
        };
        let config = RunConfig {
            command,
            domain,
            resolution: a.cells,
            op: a.op,
            p: a.p,
            kappa: a.kappa,
            nl: a.nl,
            n_start: a.n_start,
            n_end: a.n_end,
            grad_tol: a.grad_tol,
            max_iter: a.max_iter,
            eigen_tol: a.eigen_tol,
            out: a.out,
            threads: a.threads,
            fatal_hypotheses: a.fatal_hypotheses,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |msg: String| Err(Error::Usage(msg));
        if self.resolution < 2 {
            return usage(format!("--cells must be at least 2, got {}", self.resolution));
        }
        if let DomainSpec::Interval { a, b } = self.domain {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return usage(format!("interval needs finite a < b, got a={a} b={b}"));
            }
        }
        if self.n_start > self.n_end {
            return usage(format!("--n-start {} exceeds --n-end {}", self.n_start, self.n_end));
        }
        for (name, v) in [("--grad-tol", self.grad_tol), ("--eigen-tol", self.eigen_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_iter == 0 {
            return usage("--max-iter must be positive".into());
        }
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return usage(format!("--p must be at least 2, got {}", self.p));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return usage(format!("--kappa must be nonnegative, got {}", self.kappa));
        }
        if self.op == OperatorPreset::PLaplacian && self.kappa != 0.0 && self.p != 2.0 {
            return usage("--kappa with p_laplacian is only defined for p = 2".into());
        }
        if self.threads == Some(0) {
            return usage("--threads must be positive".into());
        }
        Ok(())
    }

    /// Argument list (without program name) that parses back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let command = match self.command {
            Command::Solve => "solve",
            Command::Check => "check",
            Command::Eigen => "eigen",
        };
        let mut args: Vec<String> = vec![command.into()];
        let mut push = |flag: &str, value: String| {
            args.push(format!("--{flag}"));
            args.push(value);
        };
        match self.domain {
            DomainSpec::Interval { a, b } => {
                push("domain", "interval".into());
                push("a", a.to_string());
                push("b", b.to_string());
            }
            DomainSpec::UnitSquare => push("domain", "square".into()),
        }
        push("cells", self.resolution.to_string());
        push("op", value_name(self.op));
        push("p", self.p.to_string());
        push("kappa", self.kappa.to_string());
        push("nl", value_name(self.nl));
        push("n-start", self.n_start.to_string());
        push("n-end", self.n_end.to_string());
        push("grad-tol", self.grad_tol.to_string());
        push("max-iter", self.max_iter.to_string());
        push("eigen-tol", self.eigen_tol.to_string());
        push("out", self.out.display().to_string());
        if let Some(t) = self.threads {
            push("threads", t.to_string());
        }
        if self.fatal_hypotheses {
            args.push("--fatal-hypotheses".into());
        }
        args
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        }
    }

    fn execution(&self) -> Execution {
        if self.threads == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

/// Factory for a user nonlinearity; receives the computed `λ₁`.
pub type NonlinearityFactory = Box<dyn Fn(f64) -> Box<dyn Nonlinearity> + Send + Sync>;

/// Compile-time extensions selected by `--op custom` and `--nl custom`.
#[derive(Default)]
pub struct Plugins {
    pub phi: Option<Box<dyn PhiOperator>>,
    pub nonlinearity: Option<NonlinearityFactory>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshSummary {
    pub dim: usize,
    pub nodes: usize,
    pub elements: usize,
    pub h: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub eigen_seconds: f64,
    pub hypotheses_seconds: f64,
    pub solve_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    /// Arguments that reproduce this run.
    pub args: Vec<String>,
    pub operator: String,
    pub nonlinearity: Option<String>,
    pub lambda1: f64,
    pub eigen: EigenSummary,
    pub mesh: MeshSummary,
    pub branches: Vec<DecayRow>,
    pub n0: Option<u32>,
    pub hypotheses: Vec<ReportDigest>,
    pub timings: Timings,
    pub exit_status: i32,
}

/// Runs the CLI on `args` (without program name) and returns the exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(args, &Plugins::default())
}

pub fn run_cli_with<I, T>(args: I, plugins: &Plugins) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("oscillax")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let config = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match execute(&config, plugins) {
        Ok(status) => status,
        Err(e @ Error::Usage(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed configuration, writes its outputs, and returns the exit status.
pub fn execute(config: &RunConfig, plugins: &Plugins) -> Result<i32> {
    config.validate()?;
    match config.threads {
        Some(t) if t > 1 => par::with_threads(t, || execute_inner(config, plugins)),
        _ => execute_inner(config, plugins),
    }
}

fn select_operator<'a>(config: &RunConfig, plugins: &'a Plugins) -> Result<Box<dyn PhiOperator + 'a>> {
    Ok(match config.op {
        OperatorPreset::PLaplacian => {
            let op = make_p_laplacian(config.p)?;
            if config.kappa != 0.0 {
                Box::new(op.with_kappa(config.kappa)?)
            } else {
                Box::new(op)
            }
        }
        OperatorPreset::PaperExamplePhi => Box::new(make_regularized_power(config.p, config.kappa)?),
        OperatorPreset::Custom => match &plugins.phi {
            Some(phi) => Box::new(Borrowed(phi.as_ref())),
            None => return Err(Error::Usage("--op custom needs a compiled-in φ plugin".into())),
        },
    })
}

fn select_nonlinearity(config: &RunConfig, plugins: &Plugins, lambda1: f64) -> Result<Box<dyn Nonlinearity>> {
    match config.nl {
        NonlinearityPreset::PaperExample => Ok(Box::new(make_example_nonlinearity(lambda1)?)),
        NonlinearityPreset::Custom => match &plugins.nonlinearity {
            Some(factory) => Ok(factory(lambda1)),
            None => Err(Error::Usage("--nl custom needs a compiled-in nonlinearity plugin".into())),
        },
    }
}

struct Borrowed<'a>(&'a dyn PhiOperator);

impl PhiOperator for Borrowed<'_> {
    fn name(&self) -> String {
        self.0.name()
    }
    fn phi(&self, s: f64) -> f64 {
        self.0.phi(s)
    }
    fn phi_prime(&self, s: f64) -> f64 {
        self.0.phi_prime(s)
    }
    fn capital_phi(&self, s: f64) -> f64 {
        self.0.capital_phi(s)
    }
    fn capital_phi_increment(&self, s: f64, ds: f64) -> f64 {
        self.0.capital_phi_increment(s, ds)
    }
    fn constants(&self) -> crate::model::EllipticityConstants {
        self.0.constants()
    }
}

/// Grid for the ellipticity and growth brackets.
fn bracket_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 121)
}

fn run_hypotheses(
    config: &RunConfig,
    mesh: &Mesh,
    op: &dyn PhiOperator,
    nl: &dyn Nonlinearity,
    eig: &EigenPair,
    exec: Execution,
) -> Result<Vec<HypothesisReport>> {
    let mut reports = check_oscillation_hypotheses(
        mesh,
        nl,
        eig,
        config.n_start..=config.n_end,
        &OscillationConfig::default(),
        exec,
    )?;
    reports.extend(check_leray_lions(op, &bracket_grid()));
    for n in config.n_start..=config.n_end {
        reports.push(check_subsolution_inequality(mesh, op, nl, eig, n)?);
    }
    Ok(reports)
}

fn execute_inner(config: &RunConfig, plugins: &Plugins) -> Result<i32> {
    let start = Instant::now();
    let exec = config.execution();
    let mesh = build_mesh(config.domain, config.resolution)?;
    let op = select_operator(config, plugins)?;
    if config.nl == NonlinearityPreset::Custom && plugins.nonlinearity.is_none() && config.command != Command::Eigen {
        return Err(Error::Usage("--nl custom needs a compiled-in nonlinearity plugin".into()));
    }

    let mut timings = Timings::default();
    let t = Instant::now();
    let eig = first_eigenpair(&mesh, config.eigen_tol)?;
    timings.eigen_seconds = t.elapsed().as_secs_f64();

    let out = config.out.as_path();
    let (nodes_csv, elements_csv) = mesh.to_csv();
    write_text(&out.join("mesh_nodes.csv"), &nodes_csv)?;
    write_text(&out.join("mesh_elements.csv"), &elements_csv)?;
    write_text(&out.join("eigen.csv"), &eig.to_csv(&mesh))?;

    let mut status = 0;
    let mut digests = Vec::new();
    let mut branches = Vec::new();
    let mut n0 = None;
    let mut nl_name = None;

    if config.command != Command::Eigen {
        let nl = select_nonlinearity(config, plugins, eig.lambda1)?;
        nl_name = Some(nl.name());

        let t = Instant::now();
        let reports = run_hypotheses(config, &mesh, op.as_ref(), nl.as_ref(), &eig, exec)?;
        timings.hypotheses_seconds = t.elapsed().as_secs_f64();
        write_text(&out.join("hypotheses.json"), &serde_json::to_string_pretty(&reports)?)?;
        if config.fatal_hypotheses && reports.iter().any(|r| r.verdict == Verdict::Fail) {
            status = 1;
        }
        digests = reports.iter().map(HypothesisReport::digest).collect();

        if config.command == Command::Solve {
            let t = Instant::now();
            let set = run_branches(
                &mesh,
                op.as_ref(),
                nl.as_ref(),
                &eig,
                config.n_start..=config.n_end,
                &config.solver_config(),
                exec,
            )?;
            timings.solve_seconds = t.elapsed().as_secs_f64();
            write_branches(out, &mesh, &set)?;
            if set.failures().next().is_some() {
                status = 1;
            }
            branches = set.decay_table();
            n0 = set.n0;
        }
    }

    timings.total_seconds = start.elapsed().as_secs_f64();
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        args: config.to_args(),
        operator: op.name(),
        nonlinearity: nl_name,
        lambda1: eig.lambda1,
        eigen: eig.summary(),
        mesh: MeshSummary {
            dim: mesh.dim(),
            nodes: mesh.node_count(),
            elements: mesh.element_count(),
            h: mesh.h(),
        },
        branches,
        n0,
        hypotheses: digests,
        timings,
        exit_status: status,
    };
    write_text(&out.join("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    print_summary(&manifest);
    Ok(status)
}

fn write_branches(out: &Path, mesh: &Mesh, set: &BranchSet) -> Result<()> {
    write_text(&out.join("decay.csv"), &set.decay_csv())?;
    for s in set.solutions() {
        write_text(&out.join(format!("branch_{}.csv", s.n)), &branch_csv(mesh, s))?;
    }
    Ok(())
}

fn print_summary(m: &RunManifest) {
    println!("lambda1 = {:.12e} ({} nodes, h = {:.3e})", m.lambda1, m.mesh.nodes, m.mesh.h);
    for r in &m.branches {
        match r.sup_norm {
            Some(sup) => println!(
                "n = {:>3}  sup = {:.6e}  grad_sup = {:.6e}  verified = {}",
                r.n,
                sup,
                r.grad_sup.unwrap_or(f64::NAN),
                r.verified
            ),
            None => println!("n = {:>3}  {}", r.n, r.status),
        }
    }
    for d in &m.hypotheses {
        println!("{:?}: {:?}", d.condition, d.verdict);
    }
}
