//! Command-line surface: every subcommand reads a JSON config, runs the
//! corresponding module, and writes results atomically (JSON by default,
//! CSV for the tabular reports) together with a run manifest.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 violated assertion (equivalence breaks, failed validation).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Deserialize;

use kolmo::criterion::{self, CriterionParams};
use kolmo::data::BoundaryData;
use kolmo::domain::{Cylinder, Domain, Shape};
use kolmo::error::KolmoError;
use kolmo::harness::{self, ExperimentSpec};
use kolmo::io::{atomic_write, RunManifest};
use kolmo::kernel::FundamentalSolution;
use kolmo::operator::{OperatorConfig, OuOperator};
use kolmo::solver::{self, ProbeConfig, SolverConfig};
use kolmo::{barrier, GroupPoint};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(name = "kolmo", version, about = "Degenerate Ornstein-Uhlenbeck operator toolkit")]
struct Cli {
    /// JSON config file for the subcommand
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: KOLMO_WORKERS or all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every operator invariant and print the report
    Validate,
    /// Evaluate the fundamental solution at a point
    Gamma {
        /// Comma-separated coordinates, e.g. --x 1,0
        #[arg(long)]
        x: String,
        #[arg(long)]
        t: f64,
    },
    /// Evaluate the boundary-regularity series criterion
    Criterion,
    /// Solve a Dirichlet problem at a point (stationary or evolution)
    Solve,
    /// Probe boundary regularity at a point
    Probe,
    /// Build and verify the strictly superharmonic barrier
    Barrier,
    /// Run the lateral/base equivalence suite
    Equivalence,
}

fn exit_code_for(err: &KolmoError) -> u8 {
    match err {
        KolmoError::Structural(_) | KolmoError::Domain(_) | KolmoError::Config(_) => 1,
        KolmoError::Io(_) => 1,
        KolmoError::Numerical(_) => 2,
        KolmoError::Assertion(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("KOLMO_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: failed to build worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let effective_workers = pool.current_num_threads();
    match pool.install(|| run(&cli, effective_workers)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn read_config_bytes(cli: &Cli) -> kolmo::Result<Vec<u8>> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| KolmoError::Config("--config is required".to_string()))?;
    Ok(std::fs::read(path)?)
}

fn parse_config<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> kolmo::Result<T> {
    serde_json::from_slice(bytes).map_err(|e| KolmoError::Config(e.to_string()))
}

fn emit(cli: &Cli, subcommand: &str, config_bytes: &[u8], workers: usize, body: String) -> kolmo::Result<()> {
    match &cli.out {
        Some(path) => {
            atomic_write(path, body.as_bytes())?;
            let manifest = RunManifest::new(subcommand, config_bytes, cli.seed, workers);
            let mpath = PathBuf::from(format!("{}.manifest.json", path.display()));
            atomic_write(
                &mpath,
                serde_json::to_string_pretty(&manifest)
                    .map_err(|e| KolmoError::Config(e.to_string()))?
                    .as_bytes(),
            )?;
            eprintln!(
                "wrote {} (config {}, seed {:?}, {} workers)",
                path.display(),
                manifest.config_hash,
                cli.seed,
                workers
            );
        }
        None => {
            if body.ends_with('\n') {
                print!("{body}");
            } else {
                println!("{body}");
            }
        }
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> kolmo::Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| KolmoError::Config(e.to_string()))
}

/// Build an operator and gate on its invariant checks; every subcommand
/// except `validate` itself refuses to run on an invalid operator.
fn build_operator(cfg: &OperatorConfig) -> kolmo::Result<OuOperator> {
    let op = OuOperator::from_config(cfg)?;
    let report = op.validate();
    if !report.passed() {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(KolmoError::Config(format!(
            "operator failed validation: {}",
            failed.join(", ")
        )));
    }
    Ok(op)
}

#[derive(Deserialize)]
struct CriterionCmdConfig {
    operator: OperatorConfig,
    domain: Shape,
    x0: Vec<f64>,
    #[serde(default)]
    params: CriterionParams,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum SolveMode {
    Stationary,
    Evolution,
}

#[derive(Deserialize)]
struct SolveCmdConfig {
    operator: OperatorConfig,
    domain: Shape,
    mode: SolveMode,
    data: BoundaryData,
    point: Vec<f64>,
    #[serde(default)]
    time: Option<f64>,
    #[serde(default)]
    t_end: Option<f64>,
    #[serde(default)]
    solver: SolverConfig,
}

#[derive(Deserialize)]
struct ProbeCmdConfig {
    operator: OperatorConfig,
    domain: Shape,
    mode: SolveMode,
    x0: Vec<f64>,
    #[serde(default)]
    t0: Option<f64>,
    #[serde(default)]
    t_end: Option<f64>,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    probe: ProbeConfig,
}

#[derive(Deserialize)]
struct BarrierCmdConfig {
    operator: OperatorConfig,
    region: Shape,
    x0: Vec<f64>,
    #[serde(default)]
    lambda: Option<f64>,
    #[serde(default)]
    grid: barrier::GridConfig,
}

fn run(cli: &Cli, workers: usize) -> kolmo::Result<u8> {
    let bytes = read_config_bytes(cli)?;
    match &cli.cmd {
        Cmd::Validate => {
            let op = OuOperator::from_config(&parse_config::<OperatorConfig>(&bytes)?)?;
            let report = op.validate();
            emit(cli, "validate", &bytes, workers, to_json(&report)?)?;
            Ok(if report.passed() { 0 } else { 3 })
        }
        Cmd::Gamma { x, t } => {
            let op = build_operator(&parse_config::<OperatorConfig>(&bytes)?)?;
            let fs = FundamentalSolution::new(op)?;
            let coords: Vec<f64> = x
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| KolmoError::Config(format!("bad --x: {e}")))?;
            if coords.len() != fs.operator().dim() {
                return Err(KolmoError::Config(format!(
                    "--x has {} coordinates, operator lives in dimension {}",
                    coords.len(),
                    fs.operator().dim()
                )));
            }
            let xv = DVector::from_column_slice(&coords);
            let z = GroupPoint::new(xv.clone(), *t);
            let body = serde_json::json!({
                "x": coords,
                "t": t,
                "value": fs.eval(&xv, *t),
                "log_value": fs.log_eval(&xv, *t),
                "norm_sq": fs.norm_sq(&xv),
                "homogeneous_dim": fs.homogeneous_dim(),
                "norm_const": fs.norm_const(),
                "pair_with_origin": fs.eval_pair(&z, &GroupPoint::origin(coords.len())),
            });
            emit(cli, "gamma", &bytes, workers, serde_json::to_string_pretty(&body).unwrap())?;
            Ok(0)
        }
        Cmd::Criterion => {
            let mut cfg: CriterionCmdConfig = parse_config(&bytes)?;
            if let Some(seed) = cli.seed {
                cfg.params.seed = seed;
            }
            let op = build_operator(&cfg.operator)?;
            let fs = FundamentalSolution::new(op)?;
            let domain = Domain::new(cfg.domain, "criterion")?;
            let x0 = DVector::from_column_slice(&cfg.x0);
            let report = criterion::evaluate(&fs, &domain, &x0, &cfg.params)?;
            let body = match cli.format {
                OutputFormat::Json => to_json(&report)?,
                OutputFormat::Csv => kolmo::io::criterion_csv(&report),
            };
            emit(cli, "criterion", &bytes, workers, body)?;
            Ok(0)
        }
        Cmd::Solve => {
            let mut cfg: SolveCmdConfig = parse_config(&bytes)?;
            if let Some(seed) = cli.seed {
                cfg.solver.seed = seed;
            }
            let op = build_operator(&cfg.operator)?;
            let fs = FundamentalSolution::new(op)?;
            let domain = Domain::new(cfg.domain, "solve")?;
            let x = DVector::from_column_slice(&cfg.point);
            let est = match cfg.mode {
                SolveMode::Stationary => {
                    let data = cfg.data.clone();
                    data.eval_space(&cfg.point)?; // reject time-dependent data early
                    let phi = move |p: &[f64]| data.eval_space(p).unwrap_or(f64::NAN);
                    solver::solve_stationary(&fs, &domain, &phi, &x, &cfg.solver)?
                }
                SolveMode::Evolution => {
                    let t = cfg.time.ok_or_else(|| {
                        KolmoError::Config("evolution solve needs \"time\"".to_string())
                    })?;
                    let t_end = cfg.t_end.unwrap_or(1.0);
                    let cyl = Cylinder::new(domain, 0.0, t_end)?;
                    let data = cfg.data.clone();
                    let psi = move |p: &[f64], s: f64| data.eval_spacetime(p, s);
                    solver::solve_evolution(&fs, &cyl, &psi, &x, t, &cfg.solver)?
                }
            };
            emit(cli, "solve", &bytes, workers, to_json(&est)?)?;
            Ok(0)
        }
        Cmd::Probe => {
            let mut cfg: ProbeCmdConfig = parse_config(&bytes)?;
            if let Some(seed) = cli.seed {
                cfg.solver.seed = seed;
            }
            let op = build_operator(&cfg.operator)?;
            let fs = FundamentalSolution::new(op)?;
            let domain = Domain::new(cfg.domain, "probe")?;
            let x0 = DVector::from_column_slice(&cfg.x0);
            let verdict = match cfg.mode {
                SolveMode::Stationary => solver::regularity_probe_stationary(
                    &fs, &domain, &x0, &cfg.solver, &cfg.probe,
                )?,
                SolveMode::Evolution => {
                    let t_end = cfg.t_end.unwrap_or(1.0);
                    let t0 = cfg.t0.unwrap_or(0.5 * t_end);
                    let cyl = Cylinder::new(domain, 0.0, t_end)?;
                    solver::regularity_probe_evolution(&fs, &cyl, &x0, t0, &cfg.solver, &cfg.probe)?
                }
            };
            let body = match cli.format {
                OutputFormat::Json => to_json(&verdict)?,
                OutputFormat::Csv => kolmo::io::probe_csv(&verdict),
            };
            emit(cli, "probe", &bytes, workers, body)?;
            Ok(0)
        }
        Cmd::Barrier => {
            let cfg: BarrierCmdConfig = parse_config(&bytes)?;
            let op = build_operator(&cfg.operator)?;
            let region = Domain::new(cfg.region, "barrier")?;
            let mut b = barrier::Barrier::for_operator(
                &op,
                DVector::from_column_slice(&cfg.x0),
                region,
            )?;
            if let Some(l) = cfg.lambda {
                b = b.with_lambda(l);
            }
            let report = barrier::verify_strict_superharmonicity(&b, &op, &cfg.grid)?;
            emit(cli, "barrier", &bytes, workers, to_json(&report)?)?;
            Ok(0)
        }
        Cmd::Equivalence => {
            let mut spec: ExperimentSpec = parse_config(&bytes)?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let table = harness::run_equivalence_suite(&spec)?;
            let sufficiency = harness::check_sufficiency(&table);
            let violated = !table.all_agree()
                || !sufficiency.passed
                || !table.expectation_mismatches().is_empty();
            let body = match cli.format {
                OutputFormat::Json => to_json(&serde_json::json!({
                    "table": table,
                    "sufficiency": sufficiency,
                    "equivalence_holds": table.all_agree(),
                }))?,
                OutputFormat::Csv => kolmo::io::equivalence_csv(&table),
            };
            emit(cli, "equivalence", &bytes, workers, body)?;
            Ok(if violated { 3 } else { 0 })
        }
    }
}
