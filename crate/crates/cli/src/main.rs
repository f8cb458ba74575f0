use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use oplaceran_client::Client;
use oplaceran_core::api::{PlacementSubmission, DEFAULT_PORT};
use oplaceran_core::catalogs::Catalogs;
use oplaceran_core::deployer::NfviSimulator;
use oplaceran_core::optimizer::jobs::{JobRunner, JobRunnerConfig, JobStatus};
use oplaceran_core::optimizer::{
    brute_force_oracle, ObjectiveKind, PlacementRequest, PlacementResult, SolveError, SolverRegistry,
};
use oplaceran_core::placer::{ExternalInputs, OrchestrationRecord, Outcome, Placer, PlacerConfig};
use oplaceran_core::report;
use oplaceran_core::scenario::{load_scenario, Scenario};
use oplaceran_service::{AppState, ServiceConfig};

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

const POLL: Duration = Duration::from_millis(50);

#[derive(Parser)]
#[command(name = "oplaceran", version, about = "Place, deploy and inspect vRAN function chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Remote {
    /// Service base URL.
    #[arg(long, env = "OPLACERAN_URL", default_value = "http://127.0.0.1:8080")]
    server: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    /// Human-readable tables.
    Table,
    /// The JSON document encoding.
    Doc,
}

#[derive(Subcommand)]
enum Command {
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "OPLACERAN_DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Concurrent placement jobs.
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
    /// Run the full workflow on a scenario.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Defaults to the scenario's solver.
        #[arg(long)]
        solver: Option<String>,
        /// Run in-process instead of against the service.
        #[arg(long)]
        offline: bool,
        #[command(flatten)]
        remote: Remote,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Parse and validate a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Export a deployment's timeline.
    Timeline {
        #[arg(long)]
        deployment: String,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        remote: Remote,
    },
    /// Solve one scenario with several solvers.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        solvers: Vec<String>,
        #[arg(long)]
        offline: bool,
        #[command(flatten)]
        remote: Remote,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Exhaustive search, for checking the solvers.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        /// aggregation-max or du-pinned.
        #[arg(long, default_value = "aggregation-max")]
        objective: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Serve {
            data_dir,
            port,
            host,
            workers,
        } => serve(data_dir, host, port, workers),
        Command::Run {
            scenario,
            solver,
            offline,
            remote,
            format,
        } => run(&scenario, solver, offline, &remote, format),
        Command::Validate { scenario } => validate(&scenario),
        Command::Timeline {
            deployment,
            out,
            remote,
        } => timeline(&deployment, out.as_deref(), &remote),
        Command::Compare {
            scenario,
            solvers,
            offline,
            remote,
            format,
        } => compare(&scenario, &solvers, offline, &remote, format),
        Command::Oracle {
            scenario,
            objective,
            format,
        } => oracle(&scenario, &objective, format),
    }
}

fn read_scenario(path: &Path) -> Result<Scenario> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_scenario(std::io::BufReader::new(file)).with_context(|| format!("loading {}", path.display()))
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Runtime::new().context("starting async runtime")
}

fn print_doc<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn serve(data_dir: Option<PathBuf>, host: IpAddr, port: u16, workers: usize) -> Result<u8> {
    tracing_subscriber::fmt().with_max_level(tracing_subscriber::filter::LevelFilter::INFO).init();
    let state = AppState::new(ServiceConfig {
        data_dir,
        job_workers: workers,
        ..ServiceConfig::default()
    })?;
    runtime()?.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .with_context(|| format!("binding {host}:{port}"))?;
        oplaceran_service::serve(listener, state).await?;
        Ok(0)
    })
}

fn offline_placer() -> Result<Placer> {
    let jobs = JobRunner::new(Arc::new(SolverRegistry::with_builtins()), JobRunnerConfig::default())?;
    Ok(Placer::new(
        Arc::new(Catalogs::in_memory()),
        Arc::new(jobs),
        Arc::new(NfviSimulator::empty()),
        PlacerConfig::default(),
    )?)
}

fn run(path: &Path, solver: Option<String>, offline: bool, remote: &Remote, format: Format) -> Result<u8> {
    let scenario = read_scenario(path)?;
    let solver = solver.unwrap_or_else(|| scenario.solver.clone());
    let inputs = ExternalInputs::from_scenario(&scenario, solver);
    let record: OrchestrationRecord = if offline {
        offline_placer()?.run_workflow(inputs)
    } else {
        let client = Client::new(&remote.server);
        runtime()?.block_on(async {
            let run_id = client.start_orchestration(&inputs).await?;
            client.wait_orchestration(&run_id, POLL).await
        })?
    };
    match format {
        Format::Table => print!("{}", report::run_report(&record, &scenario.topology)),
        Format::Doc => print_doc(&record)?,
    }
    Ok(match record.outcome {
        Some(Outcome::Deployed) => 0,
        Some(Outcome::Infeasible) => EXIT_INFEASIBLE,
        _ => EXIT_ERROR,
    })
}

fn validate(path: &Path) -> Result<u8> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    match load_scenario(std::io::BufReader::new(file)) {
        Ok(s) => {
            println!(
                "ok: {} nodes, {} links, {} chains",
                s.topology.nodes.len(),
                s.topology.links.len(),
                s.chains.len()
            );
            Ok(0)
        }
        Err(e) => {
            eprintln!("invalid scenario {}: {e}", path.display());
            Ok(EXIT_ERROR)
        }
    }
}

fn timeline(deployment: &str, out: Option<&Path>, remote: &Remote) -> Result<u8> {
    let client = Client::new(&remote.server);
    let text = runtime()?.block_on(client.timeline(deployment))?;
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

#[derive(Serialize)]
struct Compared<'a> {
    solver: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<&'a PlacementResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Outcome of one solver: a result, or the reason and whether it was
/// infeasibility.
type SolverRun = (String, Result<PlacementResult, String>, bool);

fn compare(path: &Path, solvers: &[String], offline: bool, remote: &Remote, format: Format) -> Result<u8> {
    let scenario = read_scenario(path)?;
    let runs: Vec<SolverRun> = if offline {
        let registry = SolverRegistry::with_builtins();
        solvers
            .iter()
            .map(|id| {
                let r = registry.solve(&PlacementRequest::from_scenario(&scenario).with_solver(id));
                let infeasible = matches!(r, Err(SolveError::Infeasible(_)));
                (id.clone(), r.map_err(|e| e.to_string()), infeasible)
            })
            .collect()
    } else {
        let client = Client::new(&remote.server);
        runtime()?.block_on(async {
            let mut out = Vec::new();
            for id in solvers {
                let sub = PlacementSubmission {
                    solver_id: id.clone(),
                    scenario: Some(scenario.clone()),
                    chains: None,
                    split_profile: None,
                };
                let entry = match client.submit_placement(&sub).await {
                    Ok(token) => {
                        let t = client.wait_placement(&token, POLL).await?;
                        match t.status {
                            JobStatus::Succeeded => (id.clone(), Ok(t.result.expect("result")), false),
                            JobStatus::Infeasible => {
                                (id.clone(), Err(format!("infeasible: {}", t.reason.unwrap_or_default())), true)
                            }
                            _ => (id.clone(), Err(t.error.unwrap_or_default()), false),
                        }
                    }
                    Err(e) => (id.clone(), Err(e.to_string()), false),
                };
                out.push(entry);
            }
            anyhow::Ok(out)
        })?
    };
    match format {
        Format::Table => {
            let rows: Vec<(String, Result<PlacementResult, String>)> =
                runs.iter().map(|(s, r, _)| (s.clone(), r.clone())).collect();
            print!("{}", report::compare_table(&rows));
        }
        Format::Doc => {
            let doc: Vec<Compared> = runs
                .iter()
                .map(|(s, r, _)| Compared {
                    solver: s,
                    result: r.as_ref().ok(),
                    error: r.as_ref().err().map(String::as_str),
                })
                .collect();
            print_doc(&doc)?;
        }
    }
    Ok(if runs.iter().any(|(_, r, inf)| r.is_err() && !inf) {
        EXIT_ERROR
    } else if runs.iter().any(|(_, _, inf)| *inf) {
        EXIT_INFEASIBLE
    } else {
        0
    })
}

fn oracle(path: &Path, objective: &str, format: Format) -> Result<u8> {
    let Some(kind) = ObjectiveKind::parse(objective) else {
        eprintln!("unknown objective {objective}; expected aggregation-max or du-pinned");
        return Ok(EXIT_USAGE);
    };
    let scenario = read_scenario(path)?;
    let request = PlacementRequest::from_scenario(&scenario).with_solver(objective);
    match brute_force_oracle(&request, kind) {
        Ok(mut result) => {
            result.solver_id = format!("oracle:{objective}");
            match format {
                Format::Table => {
                    print!("{}", report::placement_table(&result, &scenario.topology));
                    print!("{}", report::objective_line(&result));
                }
                Format::Doc => print_doc(&result)?,
            }
            Ok(0)
        }
        Err(SolveError::Infeasible(reason)) => {
            println!("infeasible: {reason}");
            for d in oplaceran_core::optimizer::diagnose_infeasibility(&request) {
                println!("  - {d}");
            }
            Ok(EXIT_INFEASIBLE)
        }
        Err(e) => Err(e.into()),
    }
}
