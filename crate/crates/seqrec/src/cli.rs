//! The `seqrec` command-line front end.
//!
//! Subcommands: `stats`, `synth`, `recommend`, `evaluate`, `sweep`. Data
//! goes to standard output or the `--out` path; diagnostics go to standard
//! error, gated by the `SEQREC_LOG_LEVEL` environment variable
//! (`error|warn|info|debug`, default `warn`). Exit codes: 0 success, 1
//! usage error, 2 data error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::eval::{
    best_per_method, evaluate, reports_to_tsv, sweep, Method, MethodConfig, Models, SweepGrid,
};
use crate::hybrid::RecommendationRecord;
use crate::log::{parse_log, EventLog, ParseOptions};
use crate::sequence::{build_sequences, cutoff_split, SequenceSet};
use crate::similarity::NeighborOrder;
use crate::stats::corpus_stats;
use crate::synth::{synth_generate, SynthConfig};

#[derive(Parser)]
#[command(
    name = "seqrec",
    version,
    about = "Next-search-term recommendation over clinical search logs",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error.\n\
                  SEQREC_LOG_LEVEL=error|warn|info|debug controls diagnostics on stderr."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print corpus statistics of a log as JSON
    Stats(StatsArgs),
    /// Generate a seeded synthetic search log as TSV
    Synth(SynthArgs),
    /// Recommend next terms for one (physician, patient, last-term) query
    Recommend(RecommendArgs),
    /// Evaluate one method configuration under the cutoff protocol
    Evaluate(EvaluateArgs),
    /// Evaluate a hyperparameter grid under the cutoff protocol
    Sweep(SweepArgs),
}

#[derive(Args)]
struct LogInput {
    /// Training log (TSV: physician_id, patient_id, visit_id, timestamp, term)
    #[arg(long)]
    log: PathBuf,
    /// Skip one header line
    #[arg(long)]
    has_header: bool,
    /// Lowercase terms while parsing
    #[arg(long)]
    lowercase_terms: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: LogInput,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// RNG seed; identical (config, seed) pairs give identical logs
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().n_physicians)]
    n_physicians: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_patients)]
    n_patients: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_terms)]
    n_terms: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_sequences)]
    n_sequences: usize,
    /// Geometric length parameter; mean sequence length is its reciprocal
    #[arg(long, default_value_t = SynthConfig::default().seq_len_geometric_p)]
    seq_len_geometric_p: f64,
    /// Probability that a term is followed by its planted successor
    #[arg(long, default_value_t = SynthConfig::default().dominant_transition_prob)]
    dominant_transition_prob: f64,
    /// Window width in seconds over which sequences are spread
    #[arg(long, default_value_t = SynthConfig::default().time_span)]
    time_span: i64,
    /// Epoch seconds of the window start
    #[arg(long, default_value_t = SynthConfig::default().start_time)]
    start_time: i64,
    /// Write the TSV log here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MethodFlags {
    /// Scoring method
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Neighbor identification order (ypCF methods only)
    #[arg(long, value_enum)]
    sim: Option<SimArg>,
    /// CF weight in the DmCF blend (DmCF methods only)
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of similar patients (CF methods)
    #[arg(long)]
    kp: Option<usize>,
    /// Number of similar physicians (ypCF methods only)
    #[arg(long)]
    ky: Option<usize>,
    /// Term-similarity threshold (TptCF methods only)
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    input: LogInput,
    #[command(flatten)]
    method: MethodFlags,
    /// Optional cutoff; only searches strictly before it train the models
    #[arg(long)]
    cutoff: Option<String>,
    /// Target physician id
    #[arg(long)]
    physician: String,
    /// Target patient id
    #[arg(long)]
    patient: String,
    /// Last searched term of the ongoing sequence
    #[arg(long)]
    last_term: String,
    /// Number of recommendations
    #[arg(long, default_value_t = 5)]
    topn: usize,
    /// Min-max normalize both components to [0, 1] before blending
    #[arg(long)]
    normalize: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: LogInput,
    #[command(flatten)]
    method: MethodFlags,
    /// Cutoff time: ISO-8601 date (midnight UTC) or epoch seconds
    #[arg(long)]
    cutoff: String,
    /// Hit-rate cutoffs, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    ns: Vec<u32>,
    /// Emit JSON instead of TSV
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: LogInput,
    /// Cutoff time: ISO-8601 date (midnight UTC) or epoch seconds
    #[arg(long)]
    cutoff: String,
    /// Methods to sweep, comma separated
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Vec<MethodArg>,
    /// Neighbor orders for ypCF methods
    #[arg(long, value_enum, value_delimiter = ',')]
    sims: Vec<SimArg>,
    /// Alpha values for DmCF methods
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Similar-patient counts
    #[arg(long, value_delimiter = ',')]
    kps: Vec<usize>,
    /// Similar-physician counts
    #[arg(long, value_delimiter = ',')]
    kys: Vec<usize>,
    /// Term-similarity thresholds for TptCF methods
    #[arg(long, value_delimiter = ',')]
    betas: Vec<f64>,
    /// Hit-rate cutoffs, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    ns: Vec<u32>,
    /// Parallel evaluation threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Emit JSON (reports plus best-per-method summary) instead of TSV
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum MethodArg {
    Fomc,
    Ypcf,
    Tptcf,
    DmcfYpcf,
    DmcfTptcf,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Method {
        match arg {
            MethodArg::Fomc => Method::FoMc,
            MethodArg::Ypcf => Method::YpCf,
            MethodArg::Tptcf => Method::TptCf,
            MethodArg::DmcfYpcf => Method::DmCfYpCf,
            MethodArg::DmcfTptcf => Method::DmCfTptCf,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum SimArg {
    P2y,
    Y2p,
}

impl From<SimArg> for NeighborOrder {
    fn from(arg: SimArg) -> NeighborOrder {
        match arg {
            SimArg::P2y => NeighborOrder::P2Y,
            SimArg::Y2p => NeighborOrder::Y2P,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum Level {
    Error,
    Warn,
    Info,
    Debug,
}

impl Level {
    fn from_env() -> Level {
        match std::env::var("SEQREC_LOG_LEVEL").ok().as_deref() {
            Some("error") => Level::Error,
            Some("info") => Level::Info,
            Some("debug") => Level::Debug,
            _ => Level::Warn,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Level::Error => "error",
            Level::Warn => "warning",
            Level::Info => "info",
            Level::Debug => "debug",
        }
    }
}

struct Diag<'a> {
    sink: &'a mut dyn Write,
    level: Level,
}

impl Diag<'_> {
    fn log(&mut self, at: Level, message: &str) {
        if at <= self.level {
            let _ = writeln!(self.sink, "{}: {message}", at.prefix());
        }
    }
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Parses `args` and runs one subcommand, writing data to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    1
                }
            };
        }
    };
    let mut diag = Diag {
        sink: err,
        level: Level::from_env(),
    };
    let result = match &cli.command {
        Command::Stats(args) => run_stats(args, out, &mut diag),
        Command::Synth(args) => run_synth(args, out, &mut diag),
        Command::Recommend(args) => run_recommend(args, out, &mut diag),
        Command::Evaluate(args) => run_evaluate(args, out, &mut diag),
        Command::Sweep(args) => run_sweep(args, out, &mut diag),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(message)) => {
            diag.log(Level::Error, &message);
            1
        }
        Err(CliError::Data(message)) => {
            diag.log(Level::Error, &message);
            2
        }
    }
}

fn read_log(input: &LogInput, diag: &mut Diag) -> Result<EventLog, CliError> {
    let file = File::open(&input.log)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", input.log.display())))?;
    let options = ParseOptions {
        has_header: input.has_header,
        lowercase_terms: input.lowercase_terms,
    };
    let log = parse_log(BufReader::new(file), &options)?;
    diag.log(
        Level::Info,
        &format!("parsed {} events from {}", log.len(), input.log.display()),
    );
    Ok(log)
}

/// Accepts `YYYY-MM-DD` (midnight UTC) or raw epoch seconds.
fn parse_cutoff(text: &str) -> Result<i64, CliError> {
    let epoch = if let Ok(seconds) = text.parse::<i64>() {
        seconds
    } else {
        chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d")
            .map_err(|_| {
                CliError::Usage(format!(
                    "cutoff {text:?} is neither epoch seconds nor an ISO-8601 date"
                ))
            })?
            .and_hms_opt(0, 0, 0)
            .expect("midnight exists")
            .and_utc()
            .timestamp()
    };
    if epoch <= 0 {
        return Err(CliError::Usage(format!("cutoff must be positive, got {epoch}")));
    }
    Ok(epoch)
}

fn build_config(flags: &MethodFlags) -> Result<MethodConfig, CliError> {
    let config = MethodConfig {
        method: flags.method.into(),
        sim_order: flags.sim.map(NeighborOrder::from),
        alpha: flags.alpha,
        k_p: flags.kp,
        k_y: flags.ky,
        beta: flags.beta,
    };
    config.validate().map_err(CliError::from)?;
    Ok(config)
}

fn write_output(data: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, data)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            out.write_all(data.as_bytes())
                .map_err(|e| CliError::Data(format!("cannot write output: {e}")))
        }
    }
}

fn run_stats(args: &StatsArgs, out: &mut dyn Write, diag: &mut Diag) -> Result<(), CliError> {
    let log = read_log(&args.input, diag)?;
    let set = build_sequences(&log);
    let report = corpus_stats(&set);
    if report.empty {
        diag.log(Level::Warn, "empty corpus: averages reported as 0");
    }
    let mut json = report.to_json();
    json.push('\n');
    write_output(&json, args.out.as_deref(), out)
}

fn run_synth(args: &SynthArgs, out: &mut dyn Write, diag: &mut Diag) -> Result<(), CliError> {
    let config = SynthConfig {
        n_physicians: args.n_physicians,
        n_patients: args.n_patients,
        n_terms: args.n_terms,
        n_sequences: args.n_sequences,
        seq_len_geometric_p: args.seq_len_geometric_p,
        dominant_transition_prob: args.dominant_transition_prob,
        time_span: args.time_span,
        start_time: args.start_time,
    };
    let log = synth_generate(&config, args.seed)?;
    diag.log(
        Level::Info,
        &format!("generated {} events in {} sequences", log.len(), args.n_sequences),
    );
    write_output(&log.to_tsv_string(), args.out.as_deref(), out)
}

fn training_set(
    input: &LogInput,
    cutoff: Option<i64>,
    diag: &mut Diag,
) -> Result<SequenceSet, CliError> {
    let log = read_log(input, diag)?;
    let full = build_sequences(&log);
    Ok(match cutoff {
        Some(cutoff) => cutoff_split(&full, cutoff).0,
        None => full,
    })
}

fn run_recommend(args: &RecommendArgs, out: &mut dyn Write, diag: &mut Diag) -> Result<(), CliError> {
    let config = build_config(&args.method)?;
    if args.topn < 1 {
        return Err(CliError::Usage("topn must be >= 1".into()));
    }
    let cutoff = args.cutoff.as_deref().map(parse_cutoff).transpose()?;
    let train = training_set(&args.input, cutoff, diag)?;
    let models = Models::build(&train);
    let uses_dynamics = matches!(
        config.method,
        Method::FoMc | Method::DmCfYpCf | Method::DmCfTptCf
    );
    if uses_dynamics && models.transitions.row(&args.last_term).is_none() {
        diag.log(
            Level::Warn,
            &format!(
                "cold start: term {:?} has no outgoing transitions in training",
                args.last_term
            ),
        );
    }
    let recommendation = crate::eval::score_query(
        &models,
        &config,
        &args.physician,
        &args.patient,
        &args.last_term,
        args.topn,
        args.normalize,
    );
    let record =
        RecommendationRecord::new(&args.physician, &args.patient, &args.last_term, &recommendation);
    let mut json = record.to_json();
    json.push('\n');
    write_output(&json, args.out.as_deref(), out)
}

fn run_evaluate(args: &EvaluateArgs, out: &mut dyn Write, diag: &mut Diag) -> Result<(), CliError> {
    let config = build_config(&args.method)?;
    let cutoff = parse_cutoff(&args.cutoff)?;
    let log = read_log(&args.input, diag)?;
    let (train, tests) = cutoff_split(&build_sequences(&log), cutoff);
    diag.log(
        Level::Info,
        &format!(
            "training on {} sequences, {} test cases",
            train.sequences.len(),
            tests.len()
        ),
    );
    let report = evaluate(&config, &train, &tests, cutoff, &args.ns)?;
    let rendered = if args.json {
        let mut json = serde_json::to_string_pretty(&report).expect("report serialize");
        json.push('\n');
        json
    } else {
        reports_to_tsv(std::slice::from_ref(&report))
    };
    write_output(&rendered, args.out.as_deref(), out)
}

fn run_sweep(args: &SweepArgs, out: &mut dyn Write, diag: &mut Diag) -> Result<(), CliError> {
    if args.jobs < 1 {
        return Err(CliError::Usage("jobs must be >= 1".into()));
    }
    let grid = SweepGrid {
        methods: args.methods.iter().map(|&m| m.into()).collect(),
        sim_orders: args.sims.iter().map(|&s| s.into()).collect(),
        alphas: args.alphas.clone(),
        k_ps: args.kps.clone(),
        k_ys: args.kys.clone(),
        betas: args.betas.clone(),
    };
    // Validate the grid before touching the log file.
    let configs = crate::eval::expand_grid(&grid).map_err(CliError::from)?;
    let cutoff = parse_cutoff(&args.cutoff)?;
    let log = read_log(&args.input, diag)?;
    let (train, tests) = cutoff_split(&build_sequences(&log), cutoff);
    diag.log(
        Level::Info,
        &format!(
            "sweeping {} configurations over {} test cases with {} job(s)",
            configs.len(),
            tests.len(),
            args.jobs
        ),
    );
    let reports = sweep(&grid, &train, &tests, cutoff, &args.ns, args.jobs)?;
    let best = best_per_method(&reports);
    for entry in &best {
        diag.log(
            Level::Info,
            &format!(
                "best {} {}: HR@{} = {:.3}",
                entry.method.label(),
                entry
                    .sim_order
                    .map_or("-", |o| if o == NeighborOrder::P2Y { "simP2Y" } else { "simY2P" }),
                entry.n,
                entry.hit_rate
            ),
        );
    }
    let rendered = if args.json {
        let doc = serde_json::json!({ "reports": reports, "best": best });
        let mut json = serde_json::to_string_pretty(&doc).expect("sweep serialize");
        json.push('\n');
        json
    } else {
        reports_to_tsv(&reports)
    };
    write_output(&rendered, args.out.as_deref(), out)
}
