//! Command-line front end shared by the `cancoach` binary and its tests.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::analytics::{self, LabeledTrace, Pairing, Report};
use crate::codec::{format_log, load_catalog, parse_log, Catalog};
use crate::config::{load_config, ConfigError};
use crate::gateway::{LiveSession, ServeError, ServeOptions, Server};
use crate::sim::{self, read_trace_csv, study, write_trace_csv, ReplayOptions, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PORT_BUSY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cancoach", version, about = "Time-gap coaching simulator, CAN replay and analytics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured simulation and write its trace as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild a trace from a CAN log.
    Replay {
        /// Log file with one `<ts> <bus> <ID>#<DATA>` frame per line.
        log: PathBuf,
        /// Signal catalog (TOML); the built-in one if omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Config whose schedule drives the recomputed cues.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a CAN log from a trace.
    Synth {
        trace: PathBuf,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Distractor tracks per tick (0-15).
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(0..=15))]
        distractors: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error statistics per driver and mode, with percent reductions.
    Report(ReportArgs),
    /// Comparative study over the built-in driver presets.
    Study {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Report CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Directory to write one trace CSV per driver.
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Live session over TCP (newline-delimited JSON) or WebSocket.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8765)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the session trace here on completion.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Wall-clock tick period in milliseconds.
        #[arg(long, default_value_t = 50)]
        tick_ms: u64,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trace CSVs, optionally labelled as `driver=path`; otherwise the file
    /// stem is the driver label.
    #[arg(required = true)]
    pub traces: Vec<String>,
    /// `baseline:treatment` mode pairs; inferred from labels if omitted.
    #[arg(long = "pair")]
    pub pairs: Vec<String>,
    /// Report CSV path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::invalid(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::Config(_) | SimError::Codec(_) | SimError::Csv(_) | SimError::EmptyTrace => EXIT_INVALID,
            SimError::Io(_) => EXIT_IO,
            SimError::Coach { .. } => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn catalog(path: Option<&Path>) -> Result<Catalog, CliError> {
    match path {
        None => Ok(Catalog::builtin()),
        Some(p) => load_catalog(&read_input(p)?).map_err(|e| CliError::invalid(format!("{}: {e}", p.display()))),
    }
}

/// Write through `f` to `path`, or to stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|()| w.flush()).map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn write_trace(trace: &sim::Trace, out: Option<&Path>) -> Result<(), CliError> {
    with_output(out, |w| write_trace_csv(trace, w).map_err(|e| io::Error::other(e.to_string())))
}

fn write_report(report: &Report, out: Option<&Path>, json: Option<&Path>) -> Result<(), CliError> {
    with_output(out, |w| analytics::write_report_csv(report, w))?;
    if let Some(p) = json {
        with_output(Some(p), |w| writeln!(w, "{}", analytics::report_json(report)))?;
    }
    Ok(())
}

fn simulate(config: &Path, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let trace = sim::run(&cfg)?;
    log::info!(
        "{} samples, {} publishes, {} ghost resets",
        trace.len(),
        trace.stats.directive_publishes,
        trace.stats.ghost_resets
    );
    write_trace(&trace, out)
}

fn replay(log_path: &Path, catalog_path: Option<&Path>, config: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let cat = catalog(catalog_path)?;
    let text = read_input(log_path)?;
    let frames = parse_log(&text).map_err(|e| CliError::invalid(format!("{}: {e}", log_path.display())))?;
    let mut opts = ReplayOptions::default();
    if let Some(c) = config {
        opts.schedule = Some(load_config(c)?.schedule);
    }
    if frames.is_empty() {
        log::warn!("{}: log has no frames", log_path.display());
    }
    let result = sim::replay(&frames, &cat, &opts)?;
    eprintln!(
        "replayed {} frames: {} samples, {} skipped frames, {} samples without lead",
        frames.len(),
        result.trace.len(),
        result.skipped,
        result.unmatched
    );
    write_trace(&result.trace, out)
}

fn synth(trace: &Path, catalog_path: Option<&Path>, distractors: u8, out: Option<&Path>) -> Result<(), CliError> {
    let cat = catalog(catalog_path)?;
    let trace = read_trace_csv(read_input(trace)?.as_bytes())?;
    let frames = sim::synth_can_log(&trace, &cat, distractors)?;
    with_output(out, |w| w.write_all(format_log(&frames).as_bytes()))
}

fn report(args: &ReportArgs) -> Result<(), CliError> {
    let mut inputs = Vec::new();
    for spec in &args.traces {
        let (driver, path) = match spec.split_once('=') {
            Some((d, p)) if !d.is_empty() => (d.to_owned(), PathBuf::from(p)),
            _ => {
                let p = PathBuf::from(spec);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, p)
            }
        };
        let trace = read_trace_csv(read_input(&path)?.as_bytes())
            .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
        inputs.push(LabeledTrace { driver, trace });
    }
    let pairs = args
        .pairs
        .iter()
        .map(|p| Pairing::parse(p).ok_or_else(|| CliError::invalid(format!("bad pairing {p:?}, expected baseline:treatment"))))
        .collect::<Result<Vec<_>, _>>()?;
    let rep = analytics::report(&inputs, &pairs);
    write_report(&rep, args.out.as_deref(), args.json.as_deref())
}

fn run_study(seed: u64, out: Option<&Path>, json: Option<&Path>, traces: Option<&Path>) -> Result<(), CliError> {
    let result = study::default_study(seed)?;
    if let Some(dir) = traces {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for lt in &result.traces {
            write_trace(&lt.trace, Some(&dir.join(format!("{}.csv", lt.driver))))?;
        }
    }
    if let Some(c) = result.compare("ctg_instructed", "ctg_coached") {
        eprintln!(
            "constant time-gap: |mean| {:.3} -> {:.3} s, std {:.3} -> {:.3} s",
            c.baseline_abs_mean, c.treatment_abs_mean, c.baseline_std, c.treatment_std
        );
    }
    write_report(&result.report, out, json)
}

fn serve(config: &Path, host: &str, port: u16, seed: Option<u64>, out: Option<&Path>, tick_ms: u64) -> Result<(), CliError> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let session = LiveSession::new(cfg)?;
    let server = Server::bind((host, port)).map_err(|e| match e {
        ServeError::PortBusy(e) => CliError {
            code: EXIT_PORT_BUSY,
            message: format!("port {port} busy: {e}"),
        },
        other => CliError {
            code: EXIT_IO,
            message: other.to_string(),
        },
    })?;
    let addr = server.local_addr().map_err(|e| CliError::io(Path::new("<socket>"), e))?;
    eprintln!("listening on {addr}");
    let opts = ServeOptions {
        tick_period: Duration::from_millis(tick_ms.max(1)),
        ..ServeOptions::default()
    };
    let trace = server.run(session, &opts).map_err(|e| match e {
        ServeError::Sim(e) => CliError::from(e),
        other => CliError {
            code: EXIT_IO,
            message: other.to_string(),
        },
    })?;
    if let Some(p) = out {
        write_trace(&trace, Some(p))?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate { config, seed, out } => simulate(config, *seed, out.as_deref()),
        Command::Replay {
            log,
            catalog,
            config,
            out,
        } => replay(log, catalog.as_deref(), config.as_deref(), out.as_deref()),
        Command::Synth {
            trace,
            catalog,
            distractors,
            out,
        } => synth(trace, catalog.as_deref(), *distractors, out.as_deref()),
        Command::Report(args) => report(args),
        Command::Study {
            seed,
            out,
            json,
            traces,
        } => run_study(*seed, out.as_deref(), json.as_deref(), traces.as_deref()),
        Command::Serve {
            config,
            port,
            host,
            seed,
            out,
            tick_ms,
        } => serve(config, host, *port, *seed, out.as_deref(), *tick_ms),
    }
}

/// Parse arguments, run, and map the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
