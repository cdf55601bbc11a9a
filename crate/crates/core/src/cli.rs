//! The `fogstore` command line: one-shot placement, parameter sweeps and RLNC
//! demonstrations. Data goes to stdout (or `--out`), diagnostics to stderr.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible constraints,
//! 4 output could not be written.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::allocator::{AllocConstraints, AllocError};
use crate::model::{download_time, Allocation, Snapshot, Strategy};
use crate::rlnc::{self, decode, encode, full_rank_probability, DecodeOutcome, FieldOrder, Generation};
use crate::scenario::{
    allocate, run_sweep, sample_snapshot, InjectionKind, ScenarioConfig, SweepParam, SweepSpec, SweepValue,
    LOAD_INTERVAL_PRESETS,
};
use crate::stats::SweepResult;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_UNWRITABLE: i32 = 4;

pub const ALLOCATION_HEADER: &str = "node_index,tier,rate_mbps,link_ms,load,d_request_ms,alpha,t_download_s";
pub const SWEEP_HEADER: &str = "sweep_value,strategy,n,min,q1,median,q3,max,mean,variance";

#[derive(Debug, Parser)]
#[command(
    name = "fogstore",
    version,
    about = "Download-time optimal placement over fog and cloud nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Allocate one seeded snapshot and print the per-node split.
    Optimize(OptimizeArgs),
    /// Run a parameter sweep and write aggregate statistics.
    Sweep(SweepArgs),
    /// Encode and decode random generations and report the decoding rate.
    Rlnc(RlncArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Eq,
    Rb,
    Opt,
    Single,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
struct OptimizeArgs {
    /// Scenario config (JSON).
    config: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    strategy: StrategyArg,
    /// Enforce the MSR per-node storage floor alpha_i >= 1/(N-1).
    #[arg(long)]
    msr: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run index of the snapshot to draw.
    #[arg(long, default_value_t = 0)]
    run: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ParamArg {
    Fogs,
    Clouds,
    FogLoad,
    CloudLoad,
    Gensize,
    LatencyNodes,
    LoadNodes,
    OutageNodes,
}

impl ParamArg {
    fn sweep_param(self) -> SweepParam {
        match self {
            ParamArg::Fogs => SweepParam::FogCount,
            ParamArg::Clouds => SweepParam::CloudCount,
            ParamArg::FogLoad => SweepParam::FogLoadInterval,
            ParamArg::CloudLoad => SweepParam::CloudLoadInterval,
            ParamArg::Gensize => SweepParam::GenerationSize,
            ParamArg::LatencyNodes => SweepParam::InjectionCount(InjectionKind::HighLatency),
            ParamArg::LoadNodes => SweepParam::InjectionCount(InjectionKind::HighLoad),
            ParamArg::OutageNodes => SweepParam::InjectionCount(InjectionKind::Outage),
        }
    }
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    /// Base scenario config (JSON).
    config: PathBuf,
    #[arg(long, value_enum)]
    param: ParamArg,
    /// Comma-separated values; `a..b` is an inclusive integer range, `a..b:s`
    /// steps by `s`. Load sweeps take `lo-hi` intervals or `presets`.
    #[arg(long)]
    values: String,
    #[arg(long, default_value_t = 200)]
    runs: usize,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Comma-separated subset of eq,rb,opt,single.
    #[arg(long, default_value = "eq,rb,opt")]
    strategies: String,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct RlncArgs {
    /// Generation size M.
    #[arg(long, default_value_t = 16)]
    packets: usize,
    /// Packet size in bytes.
    #[arg(long, default_value_t = 1024)]
    size: usize,
    /// Field size: 2, 16 or 256.
    #[arg(long, default_value_t = 256)]
    field: u32,
    /// Coded packets sent beyond M.
    #[arg(long, default_value_t = 0)]
    extra: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let sink: &mut dyn Write = if err.use_stderr() { stderr } else { stdout };
            let _ = write!(sink, "{}", err.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Optimize(args) => cmd_optimize(&args, stdout),
        Command::Sweep(args) => cmd_sweep(&args, stderr),
        Command::Rlnc(args) => cmd_rlnc(&args, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(stderr, "error: {}", failure.message);
            failure.code
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let mut config: ScenarioConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        Failure::invalid(format!("config {}: field `{field}`: {}", path.display(), e.inner()))
    })?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    config
        .validate()
        .map_err(|e| Failure::invalid(format!("config {}: {e}", path.display())))?;
    Ok(config)
}

/// `%.6g`-style formatting: six significant digits, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exponent.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// The value a reader of the six-digit text would recover.
fn sig6(x: f64) -> f64 {
    format_sig6(x).parse().expect("formatted float parses")
}

#[derive(Debug, Serialize)]
struct NodeRecord {
    node_index: usize,
    tier: String,
    rate_mbps: f64,
    link_ms: f64,
    load: f64,
    d_request_ms: f64,
    alpha: f64,
    t_download_s: f64,
}

#[derive(Debug, Serialize)]
struct AllocationRecord {
    strategy: String,
    t_total_s: f64,
    nodes: Vec<NodeRecord>,
}

fn allocation_record(snapshot: &Snapshot, allocation: &Allocation) -> AllocationRecord {
    let nodes = snapshot
        .nodes()
        .iter()
        .zip(&allocation.alphas)
        .enumerate()
        .map(|(i, (node, &alpha))| {
            let spec = node.spec();
            let t = download_time(node, alpha, snapshot.data_bits()).expect("alpha in [0,1]");
            NodeRecord {
                node_index: i + 1,
                tier: spec.tier().to_string(),
                rate_mbps: sig6(spec.rate_bps() / 1e6),
                link_ms: sig6(spec.link_delay_s() * 1e3),
                load: sig6(spec.load()),
                d_request_ms: sig6(node.request_delay_s() * 1e3),
                alpha: sig6(alpha),
                t_download_s: sig6(t),
            }
        })
        .collect();
    AllocationRecord {
        strategy: allocation.strategy.label().to_string(),
        t_total_s: sig6(allocation.total_time_s),
        nodes,
    }
}

fn cmd_optimize(args: &OptimizeArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let config = load_config(&args.config, args.seed)?;
    let snapshot = sample_snapshot(&config, &[], args.run).map_err(|e| Failure::invalid(e.to_string()))?;
    let strategies: Vec<Strategy> = match args.strategy {
        StrategyArg::Eq => vec![Strategy::Eq],
        StrategyArg::Rb => vec![Strategy::Rb],
        StrategyArg::Opt => vec![Strategy::Opt],
        StrategyArg::Single => vec![Strategy::Single],
        StrategyArg::All => Strategy::ALL.to_vec(),
    };
    let constraints = AllocConstraints {
        msr_lower_bound: args.msr,
    };

    let mut records = Vec::with_capacity(strategies.len());
    for strategy in strategies {
        let allocation = allocate(&snapshot, strategy, constraints).map_err(|e| match e {
            AllocError::InfeasibleConstraints(_) | AllocError::MsrNeedsTwoNodes => Failure {
                code: EXIT_INFEASIBLE,
                message: e.to_string(),
            },
            other => Failure::invalid(other.to_string()),
        })?;
        records.push(allocation_record(&snapshot, &allocation));
    }

    let text = match args.format {
        Format::Csv => allocations_csv(&records),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&records).expect("serializable");
            s.push('\n');
            s
        }
    };
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::invalid(format!("cannot write output: {e}")))
}

fn allocations_csv(records: &[AllocationRecord]) -> String {
    let mut out = String::new();
    for (k, record) in records.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&format!(
            "# strategy={} t_total_s={}\n",
            record.strategy,
            format_sig6(record.t_total_s)
        ));
        out.push_str(ALLOCATION_HEADER);
        out.push('\n');
        for n in &record.nodes {
            let fields = [n.rate_mbps, n.link_ms, n.load, n.d_request_ms, n.alpha, n.t_download_s].map(format_sig6);
            out.push_str(&format!("{},{},{}\n", n.node_index, n.tier, fields.join(",")));
        }
    }
    out
}

fn parse_number_list(text: &str) -> Result<Vec<f64>, String> {
    let mut values = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, rest)) = item.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((hi, step)) => (hi, step),
                None => (rest, "1"),
            };
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad range `{item}`"));
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if step.is_nan() || step <= 0.0 || hi < lo {
                return Err(format!("bad range `{item}`"));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            values.extend((0..=count).map(|i| lo + i as f64 * step));
        } else {
            values.push(item.parse::<f64>().map_err(|_| format!("bad value `{item}`"))?);
        }
    }
    if values.is_empty() {
        return Err("no sweep values given".to_string());
    }
    Ok(values)
}

fn parse_sweep_values(param: SweepParam, text: &str) -> Result<Vec<SweepValue>, String> {
    match param {
        SweepParam::FogLoadInterval | SweepParam::CloudLoadInterval => {
            if text.trim() == "presets" {
                return Ok(LOAD_INTERVAL_PRESETS
                    .iter()
                    .map(|&(lo, hi)| SweepValue::Interval(lo, hi))
                    .collect());
            }
            text.split(',')
                .map(|item| {
                    let (lo, hi) = item
                        .trim()
                        .split_once('-')
                        .ok_or_else(|| format!("bad interval `{item}`, expected lo-hi"))?;
                    let lo: f64 = lo.parse().map_err(|_| format!("bad interval `{item}`"))?;
                    let hi: f64 = hi.parse().map_err(|_| format!("bad interval `{item}`"))?;
                    if !(0.0 <= lo && lo <= hi && hi < 1.0) {
                        return Err(format!("load interval `{item}` must satisfy 0 <= lo <= hi < 1"));
                    }
                    Ok(SweepValue::Interval(lo, hi))
                })
                .collect()
        }
        SweepParam::GenerationSize => Ok(parse_number_list(text)?
            .into_iter()
            .map(SweepValue::Megabytes)
            .collect()),
        _ => parse_number_list(text)?
            .into_iter()
            .map(|v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(SweepValue::Count(v as usize))
                } else {
                    Err(format!("{param} takes non-negative integers, got {v}"))
                }
            })
            .collect(),
    }
}

fn parse_strategies(text: &str) -> Result<Vec<Strategy>, String> {
    text.split(',')
        .map(|s| match s.trim() {
            "eq" => Ok(Strategy::Eq),
            "rb" => Ok(Strategy::Rb),
            "opt" => Ok(Strategy::Opt),
            "single" => Ok(Strategy::Single),
            other => Err(format!("unknown strategy `{other}`")),
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SweepRecord {
    sweep_value: String,
    strategy: String,
    n: usize,
    min: Option<f64>,
    q1: Option<f64>,
    median: Option<f64>,
    q3: Option<f64>,
    max: Option<f64>,
    mean: Option<f64>,
    variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sweep_records(result: &SweepResult) -> Vec<SweepRecord> {
    result
        .rows
        .iter()
        .map(|row| {
            let base = SweepRecord {
                sweep_value: row.value.to_string(),
                strategy: row.strategy.label().to_string(),
                n: 0,
                min: None,
                q1: None,
                median: None,
                q3: None,
                max: None,
                mean: None,
                variance: None,
                error: None,
            };
            match &row.outcome {
                Ok(s) => SweepRecord {
                    n: s.n,
                    min: Some(sig6(s.min)),
                    q1: Some(sig6(s.q1)),
                    median: Some(sig6(s.median)),
                    q3: Some(sig6(s.q3)),
                    max: Some(sig6(s.max)),
                    mean: Some(sig6(s.mean)),
                    variance: Some(sig6(s.variance)),
                    ..base
                },
                Err(message) => SweepRecord {
                    error: Some(message.clone()),
                    ..base
                },
            }
        })
        .collect()
}

fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        let stats =
            [r.min, r.q1, r.median, r.q3, r.max, r.mean, r.variance].map(|v| v.map(format_sig6).unwrap_or_default());
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.sweep_value,
            r.strategy,
            r.n,
            stats.join(",")
        ));
    }
    out
}

fn cmd_sweep(args: &SweepArgs, stderr: &mut dyn Write) -> Result<(), Failure> {
    let started = Instant::now();
    if args.runs == 0 {
        return Err(Failure::invalid("--runs must be at least 1"));
    }
    let config = load_config(&args.config, args.seed)?;
    let parameter = args.param.sweep_param();
    let values = parse_sweep_values(parameter, &args.values).map_err(Failure::invalid)?;
    let strategies = parse_strategies(&args.strategies).map_err(Failure::invalid)?;
    let spec = SweepSpec {
        parameter,
        values,
        runs_per_value: args.runs,
        base: config,
    };
    spec.validate().map_err(|e| Failure::invalid(e.to_string()))?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Failure::invalid("--jobs must be at least 1"));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::invalid(format!("cannot start worker pool: {e}")))?;
    let result = pool
        .install(|| run_sweep(&spec, &strategies))
        .map_err(|e| Failure::invalid(e.to_string()))?;

    let records = sweep_records(&result);
    let text = match args.format {
        Format::Csv => sweep_csv(&records),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&records).expect("serializable");
            s.push('\n');
            s
        }
    };
    fs::write(&args.out, text).map_err(|e| Failure {
        code: EXIT_UNWRITABLE,
        message: format!("cannot write {}: {e}", args.out.display()),
    })?;
    let _ = writeln!(
        stderr,
        "wrote {} ({} rows) in {:.3} s",
        args.out.display(),
        records.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Outcome of decoding trials with `M + extra` random coded packets each.
#[derive(Debug, Clone, PartialEq)]
pub struct RlncReport {
    pub field: FieldOrder,
    pub packets: usize,
    pub extra: usize,
    pub packet_size: usize,
    pub trials: usize,
    pub full_rank: usize,
    /// Full-rank trials whose decoded output differed from the source.
    pub mismatches: usize,
    pub first_rank: usize,
    pub analytic_rate: f64,
}

impl RlncReport {
    pub fn empirical_rate(&self) -> f64 {
        self.full_rank as f64 / self.trials as f64
    }
}

/// Each trial draws its own generation and coding vectors from `(seed, trial)`.
pub fn rlnc_trials(
    packets: usize,
    packet_size: usize,
    field: FieldOrder,
    extra: usize,
    seed: u64,
    trials: usize,
) -> Result<RlncReport, rlnc::RlncError> {
    let mut full_rank = 0;
    let mut mismatches = 0;
    let mut first_rank = 0;
    for trial in 0..trials {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(trial as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        let generation = Generation::random(packets, packet_size, field, &mut rng)?;
        let coded = encode(&generation, packets + extra, &mut rng)?;
        let rank = match decode(&coded, packets, field)? {
            DecodeOutcome::Decoded(decoded) => {
                full_rank += 1;
                if decoded != generation {
                    mismatches += 1;
                }
                packets
            }
            DecodeOutcome::RankDeficient { rank } => rank,
        };
        if trial == 0 {
            first_rank = rank;
        }
    }
    Ok(RlncReport {
        field,
        packets,
        extra,
        packet_size,
        trials,
        full_rank,
        mismatches,
        first_rank,
        analytic_rate: full_rank_probability(packets, extra, field.size()),
    })
}

fn cmd_rlnc(args: &RlncArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let field = FieldOrder::from_size(args.field).map_err(|e| Failure::invalid(e.to_string()))?;
    if args.packets == 0 || args.packets > u16::MAX as usize {
        return Err(Failure::invalid("--packets must be in 1..=65535"));
    }
    if args.size == 0 {
        return Err(Failure::invalid("--size must be at least 1"));
    }
    if args.trials == 0 {
        return Err(Failure::invalid("--trials must be at least 1"));
    }
    let report = rlnc_trials(args.packets, args.size, field, args.extra, args.seed, args.trials)
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let text = format!(
        "field: {}\npackets: {}\nextra: {}\npacket_size: {}\nrank: {}\ndecoded: {}\ntrials: {}\nfull_rank: {}\nmismatches: {}\nempirical_rate: {}\nanalytic_rate: {}\n",
        report.field,
        report.packets,
        report.extra,
        report.packet_size,
        report.first_rank,
        report.first_rank == report.packets,
        report.trials,
        report.full_rank,
        report.mismatches,
        format_sig6(report.empirical_rate()),
        format_sig6(report.analytic_rate),
    );
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::invalid(format!("cannot write output: {e}")))
}
