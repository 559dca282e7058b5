//! The `posivote` command line.
//!
//! ```text
//! posivote curves    --methods all --k 1,3,5 --s 0.2,0.5,0.8 --r 0:2:0.01
//! posivote cap       --r 0.5 --s 0.5
//! posivote simulate  --n 100000 --q 0.2 --k 3 --s 0.5 --r 0.5 --method q-lw --trials 20
//! posivote aggregate --ballots ballots.json --dim 0 --method q-lw
//! posivote serve     --port 8080 --output sessions.json
//! ```
//!
//! Every command takes `--output <path>` (stdout otherwise) and
//! `--format csv|json`; CSV is the default.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use posivote_core::analytic::{format_sig9, DEFAULT_K_VALUES, DEFAULT_S_VALUES};
use posivote_core::ballot::{decompose_and_aggregate, DEFAULT_TAU};
use posivote_core::formats::load_ballots;
use posivote_core::{
    classify_ballots, curve_grid, minority_cap, run_trials, write_curves_csv, AggregateResult,
    Ballot, BudgetRule, MethodSpec, PopulationParams, RGrid, SimConfig, VotingRule,
};
use posivote_service::SessionStore;

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "POSIVOTE_SEED";

#[derive(Debug, Parser)]
#[command(name = "posivote", version, about = "Positionality-weighted cumulative voting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean-ratio curves over r for each method, k and s.
    Curves(CurvesArgs),
    /// Upper bound on the minority fraction m/n.
    Cap(CapArgs),
    /// Seeded Monte Carlo check of the aggregation formula.
    Simulate(SimulateArgs),
    /// Aggregate a ballot file on one dimension.
    Aggregate(AggregateArgs),
    /// Run the session service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpFormat {
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Comma-separated method codes, or `all`.
    #[arg(long, default_value = "all")]
    pub methods: String,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_K_VALUES)]
    pub k: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_S_VALUES)]
    pub s: Vec<f64>,
    /// Grid as `lo:hi:step`.
    #[arg(long, default_value = "0:2:0.01")]
    pub r: RGrid,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// mu_m / mu_o
    #[arg(long)]
    pub r: f64,
    /// sigma_o / mu_o
    #[arg(long)]
    pub s: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("minority").args(["m", "q"])))]
#[command(group(ArgGroup::new("spread").args(["sigma_o", "s"])))]
#[command(group(ArgGroup::new("minority_mean").args(["mu_m", "r"])))]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    /// Minority size; or give `--q`.
    #[arg(long)]
    pub m: Option<u64>,
    /// Minority fraction m/n, rounded to the nearest voter. Default 0.2.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 3)]
    pub k: u64,
    /// Per-voter budget.
    #[arg(long, default_value_t = 9.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub mu_o: f64,
    /// Majority spread; or give `--s` as a multiple of mu_o.
    #[arg(long)]
    pub sigma_o: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    /// Minority mean; or give `--r` as a multiple of mu_o.
    #[arg(long, allow_negative_numbers = true)]
    pub mu_m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    /// Defaults to sigma_o.
    #[arg(long)]
    pub sigma_m: Option<f64>,
    #[arg(long, default_value = "q-lw")]
    pub method: MethodSpec,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Ballot file, JSON array or CSV (`voter_id,dim,position,votes`).
    #[arg(long)]
    pub ballots: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub dim: usize,
    #[arg(long, default_value = "q-lw")]
    pub method: MethodSpec,
    /// Voting rule; defaults to the method's.
    #[arg(long)]
    pub rule: Option<VotingRule>,
    /// Per-voter budget; defaults to the largest ballot cost.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    /// Write all sessions here on shutdown.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DumpFormat::Json)]
    pub format: DumpFormat,
}

type CliResult = Result<(), String>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status: 0 iff nothing was written to `stderr`
/// as an error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Curves(a) => curves(a, stdout),
        Command::Cap(a) => cap(a, stdout),
        Command::Simulate(a) => simulate(a, stdout),
        Command::Aggregate(a) => aggregate(a, stdout),
        Command::Serve(a) => serve(a, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

fn emit(path: Option<&Path>, stdout: &mut dyn Write, body: &[u8]) -> CliResult {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut w = BufWriter::new(file);
            w.write_all(body).and_then(|_| w.flush())
        }
        None => stdout.write_all(body).and_then(|_| stdout.flush()),
    }
    .map_err(|e| e.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, String> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|e| e.to_string())?;
    body.push(b'\n');
    Ok(body)
}

fn curves(a: CurvesArgs, stdout: &mut dyn Write) -> CliResult {
    let methods = MethodSpec::parse_list(&a.methods).map_err(|e| e.to_string())?;
    let series = curve_grid(&methods, &a.k, &a.s, &a.r).map_err(|e| e.to_string())?;
    let body = match a.out.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_curves_csv(&series, &mut buf).map_err(|e| e.to_string())?;
            buf
        }
        Format::Json => to_json(&series)?,
    };
    emit(a.out.output.as_deref(), stdout, &body)
}

fn cap(a: CapArgs, stdout: &mut dyn Write) -> CliResult {
    let cap = minority_cap(a.r, a.s).map_err(|e| e.to_string())?;
    let body = match a.out.format {
        Format::Csv => format!(
            "r,s,cap\n{},{},{}\n",
            format_sig9(a.r),
            format_sig9(a.s),
            format_sig9(cap)
        )
        .into_bytes(),
        Format::Json => to_json(&serde_json::json!({ "r": a.r, "s": a.s, "cap": cap }))?,
    };
    emit(a.out.output.as_deref(), stdout, &body)
}

impl SimulateArgs {
    pub fn config(&self) -> Result<SimConfig, String> {
        let m = match (self.m, self.q) {
            (Some(m), _) => m,
            (None, q) => {
                let q = q.unwrap_or(0.2);
                if !(0.0..=0.5).contains(&q) {
                    return Err(format!("--q must lie in [0, 0.5], got {q}"));
                }
                (q * self.n as f64).round() as u64
            }
        };
        let sigma_o = self.sigma_o.unwrap_or(self.s.unwrap_or(0.5) * self.mu_o);
        let mu_m = self.mu_m.unwrap_or(self.r.unwrap_or(0.5) * self.mu_o);
        let mut params = PopulationParams {
            n: self.n,
            m,
            k: self.k,
            p: self.p,
            mu_o: self.mu_o,
            sigma_o,
            mu_m,
            sigma_m: sigma_o,
        };
        if let Some(sigma_m) = self.sigma_m {
            params.sigma_m = sigma_m;
        }
        SimConfig::new(params, self.method, self.seed, self.trials).map_err(|e| e.to_string())
    }
}

fn simulate(a: SimulateArgs, stdout: &mut dyn Write) -> CliResult {
    let config = a.config()?;
    let report = run_trials(&config).map_err(|e| e.to_string())?;
    let body = match a.format {
        ReportFormat::Csv => report.to_csv().into_bytes(),
        ReportFormat::Json => to_json(&report)?,
        ReportFormat::Table => report.to_table().into_bytes(),
    };
    emit(a.output.as_deref(), stdout, &body)?;
    if report.passed {
        Ok(())
    } else {
        Err(format!(
            "simulation failed: {} consistency failures, {}/{} trials within 3 standard errors (need {})",
            report.consistency_failures,
            report.within_3se,
            report.trials.len(),
            report.required_within_3se
        ))
    }
}

/// Largest cost any ballot spends under `voting`.
fn inferred_budget(ballots: &[Ballot], voting: VotingRule) -> f64 {
    ballots
        .iter()
        .map(|b| b.allocations.iter().map(|a| voting.cost(a.votes)).sum::<f64>())
        .fold(0.0, f64::max)
}

pub const AGGREGATE_CSV_HEADER: &str =
    "dimension,method,mu,mu_o_hat,mu_m_hat,m_hat,n,a,b,w_eff,sigma_hat,fallback_non_weighted";

fn aggregate_csv(r: &AggregateResult) -> String {
    format!(
        "{AGGREGATE_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.dimension,
        r.method,
        r.mu,
        r.mu_o_hat,
        r.mu_m_hat.map(|v| v.to_string()).unwrap_or_default(),
        r.m_hat,
        r.n,
        r.a,
        r.b,
        r.w_eff,
        r.sigma_hat,
        r.fallback_non_weighted
    )
}

fn aggregate(a: AggregateArgs, stdout: &mut dyn Write) -> CliResult {
    let ballots = load_ballots(&a.ballots).map_err(|e| format!("{}: {e}", a.ballots.display()))?;
    let voting = a.rule.unwrap_or(a.method.voting());
    let p = a.p.unwrap_or_else(|| inferred_budget(&ballots, voting));
    let rule = BudgetRule::new(voting, p).map_err(|e| e.to_string())?;
    let classified = classify_ballots(&ballots, &rule, a.tau).map_err(|e| e.to_string())?;
    let result =
        decompose_and_aggregate(&classified, a.dim, a.method, &rule).map_err(|e| e.to_string())?;
    let body = match a.out.format {
        Format::Csv => aggregate_csv(&result).into_bytes(),
        Format::Json => to_json(&result)?,
    };
    emit(a.out.output.as_deref(), stdout, &body)
}

fn serve(a: ServeArgs, stderr: &mut dyn Write) -> CliResult {
    let DumpFormat::Json = a.format;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let store = Arc::new(SessionStore::new());
    let addr = SocketAddr::new(a.host, a.port);
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| format!("bind {addr}: {e}"))?;
        let local = listener.local_addr().map_err(|e| e.to_string())?;
        let _ = writeln!(stderr, "listening on http://{local}");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        posivote_service::serve(listener, store.clone(), shutdown)
            .await
            .map_err(|e| e.to_string())
    })?;
    if let Some(path) = &a.output {
        store
            .write_dump(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let _ = writeln!(stderr, "wrote {} sessions to {}", store.dump().len(), path.display());
    }
    Ok(())
}

/// Runs against the real process streams. The handles stay unlocked so the
/// server's log output can interleave with ours.
pub fn main_with_env() -> i32 {
    run(std::env::args_os(), &mut io::stdout(), &mut io::stderr())
}
