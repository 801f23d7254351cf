//! `lmcma`: runs benchmark experiments through the optimizer service.
//!
//! `run` starts an in-process server on a loopback port unless `--server`
//! points at a running one. Exit status is 0 when the batch completes, 2 when
//! the experiment specification is rejected and 1 on any other failure.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tokio::sync::oneshot;

use lmcma_client::{Client, ClientError};
use lmcma_core::harness::{parse_config, RunRequest};
use lmcma_core::optimizer::ResolvedConfig;
use lmcma_service::api::MemorySlotsRequest;

#[derive(Parser)]
#[command(name = "lmcma", version, about = "Limited-memory CMA-ES experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated seeded trials of one (algorithm, function, n) cell.
    Run(RunArgs),
    /// Serve the HTTP API until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
    /// Report the optimizer's memory footprint in stored doubles.
    Memory(MemoryArgs),
}

#[derive(Args, Default)]
struct Settings {
    /// lmcma or cholcma.
    #[arg(long)]
    algo: Option<String>,
    /// Function id, e.g. `elli` or `rot_elli`.
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    /// Stored direction vectors: an integer or `2sqrt`.
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    settings: Settings,
    #[arg(long)]
    sigma0: Option<String>,
    /// First run's seed; run `i` uses `seed + i`.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    /// Evaluations per run; `10⁴·n` by default.
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    rotation_seed: Option<String>,
    /// Directory for per-run CSV/JSON files and the cell summary.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_eigenspectrum: bool,
    /// Write zero wall-clock columns so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// `key=value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base URL of a running service instead of an in-process one.
    #[arg(long)]
    server: Option<String>,
}

#[derive(Args)]
struct MemoryArgs {
    #[command(flatten)]
    settings: Settings,
    #[arg(long)]
    server: Option<String>,
}

enum Failure {
    Spec(String),
    Other(String),
}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        if e.is_client_error() {
            Failure::Spec(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

fn spec_error(e: impl std::fmt::Display) -> Failure {
    Failure::Spec(e.to_string())
}

impl Settings {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("algo", &self.algo),
            ("function", &self.function),
            ("dim", &self.dim),
            ("m", &self.m),
            ("lambda", &self.lambda),
            ("preset", &self.preset),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }
}

fn build_request(args: &RunArgs) -> Result<RunRequest, Failure> {
    let mut req = RunRequest::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Spec(format!("cannot read {}: {e}", path.display())))?;
        let pairs = parse_config(&text).map_err(spec_error)?;
        req.apply_all(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
            .map_err(spec_error)?;
    }
    let mut pairs = args.settings.pairs();
    for (k, v) in [
        ("sigma0", &args.sigma0),
        ("seed", &args.seed),
        ("runs", &args.runs),
        ("budget", &args.budget),
        ("target", &args.target),
        ("rotation-seed", &args.rotation_seed),
    ] {
        if let Some(v) = v {
            pairs.push((k, v));
        }
    }
    if args.emit_eigenspectrum {
        pairs.push(("emit-eigenspectrum", "true"));
    }
    if args.no_timing {
        pairs.push(("timing", "false"));
    }
    req.apply_all(pairs).map_err(spec_error)?;
    if let Some(out) = &args.out {
        req.out_dir = Some(std::path::absolute(out).map_err(spec_error)?);
    }
    req.cell.validate().map_err(spec_error)?;
    Ok(req)
}

/// Connects to `server`, or starts an in-process service on a loopback port.
async fn connect(server: Option<&str>) -> Result<Client, Failure> {
    if let Some(url) = server {
        return Ok(Client::new(url));
    }
    let (tx, rx) = oneshot::channel();
    let addr: SocketAddr = ([127, 0, 0, 1], 0).into();
    tokio::spawn(async move {
        if let Err(e) = lmcma_service::serve(addr, |bound| {
            let _ = tx.send(bound);
        })
        .await
        {
            eprintln!("embedded server failed: {e}");
        }
    });
    let bound = rx
        .await
        .map_err(|_| Failure::Other("embedded server did not start".into()))?;
    Ok(Client::new(format!("http://{bound}")))
}

async fn run(args: RunArgs) -> Result<(), Failure> {
    let req = build_request(&args)?;
    let client = connect(args.server.as_deref()).await?;
    let response = client.run_experiment(&req.into_experiment()).await?;
    for cell in &response.cells {
        let line = serde_json::to_string(cell).map_err(|e| Failure::Other(e.to_string()))?;
        println!("{line}");
        if cell.failures > 0 {
            eprintln!("{}: {} run(s) errored", cell.label, cell.failures);
        }
    }
    Ok(())
}

async fn memory(args: MemoryArgs) -> Result<(), Failure> {
    let mut req = RunRequest::default();
    req.apply_all(args.settings.pairs()).map_err(spec_error)?;
    let cfg = req.cell.algorithm.resolve(req.cell.n).map_err(spec_error)?;
    let m = match &cfg {
        ResolvedConfig::Lmcma(c) => c.m,
        ResolvedConfig::Cholcma(_) => 0,
    };
    let client = connect(args.server.as_deref()).await?;
    let body = MemorySlotsRequest {
        algorithm: cfg.algorithm(),
        n: req.cell.n as u64,
        m: m as u64,
        lambda: cfg.lambda() as u64,
    };
    let slots = client.memory_slots(&body).await?;
    println!(
        "{} n={} m={} lambda={}: {} doubles ({} bytes)",
        body.algorithm,
        body.n,
        body.m,
        body.lambda,
        slots,
        slots.saturating_mul(8)
    );
    Ok(())
}

async fn serve(addr: SocketAddr) -> Result<(), Failure> {
    lmcma_service::serve(addr, |bound| eprintln!("listening on http://{bound}"))
        .await
        .map_err(|e| Failure::Other(format!("cannot serve on {addr}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = runtime.block_on(async {
        match cli.command {
            Command::Run(args) => run(args).await,
            Command::Serve { addr } => serve(addr).await,
            Command::Memory(args) => memory(args).await,
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
