//! Command-line surface.
//!
//! Exit codes: 0 success, 1 data or runtime failure, 2 usage error. Commands
//! that read several inputs report each unreadable file on stderr, keep
//! going, and still write the rows they could compute.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use txconflict_core::aggregate::aggregate;
use txconflict_core::conflict::effective_accesses;
use txconflict_core::gen::{generate, worked_example, GeneratorParams};
use txconflict_core::hotspot::hotspots;
use txconflict_core::metrics::metrics_for_graph;
use txconflict_core::{
    build_graph, filter_for_analysis, speedup_report, AccessMode, AggregateMode, AnalysisConfig, BlockMetrics,
    BlockWorkload, Chain, SuccessFilter, Workers,
};

use crate::fetch::{self, FetchTarget};
use crate::load::{expand_inputs, load_workload};
use crate::report::{self, Format, HotspotRow, SpeedupRow};
use crate::{fsio, workload_json};

#[derive(Debug, Parser)]
#[command(name = "txconflict", version, about = "Transaction conflict analysis for blockchain blocks")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download raw blocks into a cache directory.
    #[command(subcommand)]
    Fetch(FetchChain),
    /// Convert raw blocks to canonical workload JSON.
    Ingest(IngestArgs),
    /// Per-block conflict metrics.
    Analyze(AnalyzeArgs),
    /// Conflict-respecting schedules and speedups per worker count.
    Simulate(SimulateArgs),
    /// Aggregate per-block metrics into a period summary.
    Report(ReportArgs),
    /// Generate a synthetic workload.
    Gen(GenArgs),
}

#[derive(Debug, Subcommand)]
pub enum FetchChain {
    /// Ethereum blocks with prestate traces.
    Eth {
        #[arg(long, env = "ETH_RPC_URL")]
        rpc_url: String,
        #[command(flatten)]
        common: FetchArgs,
    },
    /// Solana slots.
    Sol {
        #[arg(long, env = "SOL_RPC_URL")]
        rpc_url: String,
        #[command(flatten)]
        common: FetchArgs,
    },
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    #[arg(long)]
    pub from: u64,
    #[arg(long)]
    pub to: u64,
    #[arg(long)]
    pub cache: PathBuf,
    /// Refetch blocks already in the cache.
    #[arg(long)]
    pub force: bool,
    /// Requests per second.
    #[arg(long, default_value_t = fetch::DEFAULT_RATE, value_parser = positive_f64)]
    pub rate: f64,
    #[arg(long, default_value_t = fetch::DEFAULT_RETRIES)]
    pub retries: u32,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = fetch::DEFAULT_TIMEOUT.as_secs_f64(), value_parser = positive_f64)]
    pub timeout: f64,
    /// Blocks in flight at once.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub concurrency: u64,
    /// Print the request plan and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChainArg {
    Eth,
    Sol,
    Generic,
}

impl From<ChainArg> for Chain {
    fn from(c: ChainArg) -> Chain {
        match c {
            ChainArg::Eth => Chain::Ethereum,
            ChainArg::Sol => Chain::Solana,
            ChainArg::Generic => Chain::Generic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exclusive,
    Rw,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Chain whose defaults apply; each input's own chain otherwise.
    #[arg(long, value_enum)]
    pub chain: Option<ChainArg>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Keep Solana vote transactions.
    #[arg(long)]
    pub include_voting: bool,
    /// Keep coinbase accesses in the conflict sets.
    #[arg(long)]
    pub no_coinbase_filter: bool,
    /// Drop failed transactions.
    #[arg(long)]
    pub successful_only: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl AnalysisArgs {
    pub fn config(&self, input_chain: Chain) -> AnalysisConfig {
        let mut cfg = AnalysisConfig::for_chain(self.chain.map_or(input_chain, Chain::from));
        if let Some(mode) = self.mode {
            cfg.access_mode = match mode {
                ModeArg::Exclusive => AccessMode::ExclusiveAccess,
                ModeArg::Rw => AccessMode::ReadWriteAware,
            };
        }
        if self.include_voting {
            cfg.include_voting = true;
        }
        if self.no_coinbase_filter {
            cfg.coinbase_filter = false;
        }
        if self.successful_only {
            cfg.success_filter = SuccessFilter::SuccessfulOnly;
        }
        cfg
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Output path, `-` for stdout.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    /// Output format; inferred from the extension of --out otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also emit the N most accessed keys per block.
    #[arg(long, value_name = "N", requires = "hotspots_out")]
    pub hotspots: Option<usize>,
    #[arg(long, requires = "hotspots")]
    pub hotspots_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Comma-separated worker counts; `inf` for unbounded.
    #[arg(long, default_value = "1,2,4,8,inf", value_parser = parse_workers)]
    pub workers: WorkerList,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metrics files written by `analyze` (CSV or JSON).
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Strictly ascending percentages.
    #[arg(long, default_value = "40,50,60,70,80", value_parser = parse_thresholds)]
    pub thresholds: Thresholds,
    #[arg(long, default_value = "all")]
    pub label: String,
    /// Ratios of summed counts instead of per-block means.
    #[arg(long)]
    pub pooled: bool,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub txs: usize,
    #[arg(long, default_value_t = 1000)]
    pub keys: usize,
    /// Zipf exponent; 0 is uniform.
    #[arg(long, default_value_t = 1.0)]
    pub skew: f64,
    #[arg(long, default_value_t = 0.5)]
    pub write_prob: f64,
    #[arg(long, default_value_t = 1)]
    pub min_set: usize,
    #[arg(long, default_value_t = 4)]
    pub max_set: usize,
    #[arg(long, default_value_t = 0)]
    pub block: u64,
    /// Emit the eight-transaction worked example instead.
    #[arg(long, conflicts_with_all = ["seed", "txs", "keys", "skew", "write_prob", "min_set", "max_set", "block"])]
    pub worked_example: bool,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkerList(pub Vec<Workers>);

#[derive(Clone, Debug, PartialEq)]
pub struct Thresholds(pub Vec<f64>);

fn parse_workers(s: &str) -> Result<WorkerList, String> {
    s.split(',').map(|w| w.parse::<Workers>().map_err(|e| e.to_string())).collect::<Result<_, _>>().map(WorkerList)
}

fn parse_thresholds(s: &str) -> Result<Thresholds, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<Result<_, _>>()?;
    if values.iter().any(|t| !t.is_finite()) {
        return Err("thresholds must be finite".into());
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err("thresholds must be strictly ascending".into());
    }
    Ok(Thresholds(values))
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{}\n", msg.into())).into()
}

/// Runs a parsed command line. Usage problems found after parsing come back
/// as a [`clap::Error`] inside the `anyhow::Error`.
pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Fetch(chain) => run_fetch(chain),
        Command::Ingest(args) => run_ingest(args),
        Command::Analyze(args) => run_analyze(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Report(args) => run_report(args),
        Command::Gen(args) => run_gen(args),
    }
}

fn exit(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn format_for(format: Option<Format>, out: &Path) -> Format {
    format.unwrap_or_else(|| Format::from_path(out))
}

fn run_fetch(chain: FetchChain) -> anyhow::Result<ExitCode> {
    let (chain, url, args) = match chain {
        FetchChain::Eth { rpc_url, common } => (Chain::Ethereum, rpc_url, common),
        FetchChain::Sol { rpc_url, common } => (Chain::Solana, rpc_url, common),
    };
    if args.from > args.to {
        return Err(usage(format!("--from {} is after --to {}", args.from, args.to)));
    }
    let mut target = FetchTarget::new(chain, url, args.from, args.to, &args.cache);
    target.force = args.force;
    target.rate = args.rate;
    target.max_retries = args.retries;
    target.timeout = Duration::from_secs_f64(args.timeout);
    target.concurrency = usize::try_from(args.concurrency).unwrap_or(usize::MAX);

    let planned = target.planned_requests();
    eprintln!(
        "{planned} requests planned at {} req/s, estimated wall time >= {:.0} s",
        target.rate,
        target.estimated_wall_time().as_secs_f64()
    );
    if args.dry_run {
        return Ok(ExitCode::SUCCESS);
    }
    let summary = fetch::fetch_range(&target)?;
    eprintln!("{summary}");
    if !summary.failures.is_empty() {
        eprintln!("failures (see {}):", args.cache.join(fetch::MANIFEST_FILE).display());
        for (n, msg) in &summary.failures {
            eprintln!("  {n}: {msg}");
        }
    }
    Ok(exit(summary.is_success()))
}

/// Loads every input on the pool, reporting failures on stderr.
fn load_all(inputs: &[PathBuf]) -> anyhow::Result<(Vec<BlockWorkload>, bool)> {
    let paths = expand_inputs(inputs)?;
    if paths.is_empty() {
        return Err(usage("no input files found"));
    }
    let results: Vec<_> = paths.par_iter().map(|p| (p, load_workload(p))).collect();
    let mut ok = true;
    let mut workloads = Vec::with_capacity(results.len());
    for (path, result) in results {
        match result {
            Ok(wl) => workloads.push(wl),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ok = false;
            }
        }
    }
    Ok((workloads, ok))
}

fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().context("building worker pool")
}

fn run_ingest(args: IngestArgs) -> anyhow::Result<ExitCode> {
    let (workloads, mut ok) = load_all(&args.inputs)?;
    for wl in &workloads {
        match workload_json::write_into(&args.out, wl) {
            Ok(path) => log::info!("wrote {}", path.display()),
            Err(e) => {
                eprintln!("error: {e}");
                ok = false;
            }
        }
    }
    Ok(exit(ok))
}

struct Analyzed {
    metrics: BlockMetrics,
    hotspots: Vec<HotspotRow>,
}

fn analyze_one(wl: &BlockWorkload, args: &AnalysisArgs, top: Option<usize>) -> Analyzed {
    let cfg = args.config(wl.chain());
    let filtered = filter_for_analysis(wl, &cfg);
    let accesses = effective_accesses(&filtered, &cfg);
    let graph = txconflict_core::ConflictGraph::from_access(&accesses);
    let metrics = metrics_for_graph(wl.len(), &filtered, &graph);
    let hotspots = top.map_or_else(Vec::new, |n| report::hotspot_rows(wl.block_number(), &hotspots(&accesses, n)));
    Analyzed { metrics, hotspots }
}

fn run_analyze(args: AnalyzeArgs) -> anyhow::Result<ExitCode> {
    let pool = pool(args.analysis.jobs)?;
    let (workloads, ok) = pool.install(|| load_all(&args.analysis.inputs))?;
    let analyzed: Vec<Analyzed> =
        pool.install(|| workloads.par_iter().map(|wl| analyze_one(wl, &args.analysis, args.hotspots)).collect());

    let metrics: Vec<BlockMetrics> = analyzed.iter().map(|a| a.metrics.clone()).collect();
    let bytes = report::render_metrics(&metrics, format_for(args.format, &args.out))?;
    fsio::write_output(&args.out, &bytes)?;

    if let Some(path) = &args.hotspots_out {
        let rows: Vec<HotspotRow> = analyzed.into_iter().flat_map(|a| a.hotspots).collect();
        let bytes = report::render_hotspots(&rows, Format::from_path(path))?;
        fsio::write_output(path, &bytes)?;
    }
    Ok(exit(ok))
}

fn run_simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let pool = pool(args.analysis.jobs)?;
    let (workloads, ok) = pool.install(|| load_all(&args.analysis.inputs))?;
    let rows: Vec<Vec<SpeedupRow>> = pool.install(|| {
        workloads
            .par_iter()
            .map(|wl| {
                let cfg = args.analysis.config(wl.chain());
                let filtered = filter_for_analysis(wl, &cfg);
                let graph = build_graph(&filtered, &cfg);
                let points = speedup_report(&graph, &args.workers.0)?;
                Ok(points.iter().map(|p| SpeedupRow::new(wl.block_number(), filtered.len(), p)).collect())
            })
            .collect::<Result<_, txconflict_core::Error>>()
    })?;
    let rows: Vec<SpeedupRow> = rows.into_iter().flatten().collect();
    let bytes = report::render_speedups(&rows, format_for(args.format, &args.out))?;
    fsio::write_output(&args.out, &bytes)?;
    Ok(exit(ok))
}

fn run_report(args: ReportArgs) -> anyhow::Result<ExitCode> {
    let mut metrics = Vec::new();
    let mut ok = true;
    for path in &args.inputs {
        match report::read_metrics(path) {
            Ok(rows) => metrics.extend(rows),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                ok = false;
            }
        }
    }
    if metrics.is_empty() {
        eprintln!("error: no metrics rows to aggregate");
        return Ok(ExitCode::from(1));
    }
    let mode = if args.pooled { AggregateMode::Pooled } else { AggregateMode::PerBlock };
    let agg = aggregate(&metrics, &args.label, &args.thresholds.0, mode)?;
    let bytes = report::render_aggregates(&[agg], format_for(args.format, &args.out))?;
    fsio::write_output(&args.out, &bytes)?;
    Ok(exit(ok))
}

fn run_gen(args: GenArgs) -> anyhow::Result<ExitCode> {
    let wl = if args.worked_example {
        worked_example()
    } else {
        let params = GeneratorParams {
            seed: args.seed,
            block_number: args.block,
            n_txs: args.txs,
            n_keys: args.keys,
            skew: args.skew,
            write_prob: args.write_prob,
            set_size: (args.min_set, args.max_set),
        };
        generate(&params).map_err(|e| usage(e.to_string()))?
    };
    workload_json::write(&args.out, &wl)?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn thresholds_must_ascend() {
        assert_eq!(parse_thresholds("40,50,60").unwrap(), Thresholds(vec![40.0, 50.0, 60.0]));
        assert!(parse_thresholds("50,40").is_err());
        assert!(parse_thresholds("40,40").is_err());
        assert!(parse_thresholds("40,x").is_err());
    }

    #[test]
    fn workers_list() {
        assert_eq!(
            parse_workers("1,2,inf").unwrap(),
            WorkerList(vec![Workers::Bounded(1), Workers::Bounded(2), Workers::Unbounded])
        );
        assert!(parse_workers("0").is_err());
        assert!(parse_workers("2,").is_err());
    }

    #[test]
    fn zero_workers_is_a_usage_error() {
        let err = Cli::try_parse_from(["txconflict", "simulate", "--in", "x.json", "--workers", "0"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn chain_flag_selects_defaults() {
        let cli = Cli::try_parse_from(["txconflict", "analyze", "--in", "x", "--chain", "eth"]).unwrap();
        let Command::Analyze(args) = cli.command else { panic!() };
        let cfg = args.analysis.config(Chain::Generic);
        assert_eq!(cfg.access_mode, AccessMode::ExclusiveAccess);
        assert!(cfg.coinbase_filter);

        let cli = Cli::try_parse_from([
            "txconflict",
            "analyze",
            "--in",
            "x",
            "--mode",
            "rw",
            "--no-coinbase-filter",
            "--include-voting",
        ])
        .unwrap();
        let Command::Analyze(args) = cli.command else { panic!() };
        let cfg = args.analysis.config(Chain::Ethereum);
        assert_eq!(cfg.access_mode, AccessMode::ReadWriteAware);
        assert!(!cfg.coinbase_filter && cfg.include_voting);
    }
}
