//! `evcp` — continuous CP decomposition of sparse tensor streams.
//!
//! One subcommand per experiment: `run` replays a stream and reports the
//! fitness series, `sweep-theta` and `sweep-scale` cover the sensitivity and
//! scalability studies, `anomaly` runs the injection task, `synth` writes a
//! synthetic event file, and `validate-config` echoes a normalized config.
//!
//! Exit codes: 0 success, 1 configuration/parse errors, 2 runtime numerical
//! failure. `SNS_THREADS` caps sweep parallelism (default: logical cores);
//! note that parallel sweeps share cores, so latency columns are only
//! meaningful with `SNS_THREADS=1`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use evcp_core::cpd::save_checkpoint;
use evcp_core::harness::{
    self, emit_report, inject_and_detect, run_experiment, scalability_sweep, theta_point,
    write_json, HarnessError, ReportFormat,
};
use evcp_core::io::{
    load_config, read_events, suggested_theta, synth_events, write_events, RunConfig, StreamSpec,
    SynthKind, SynthParams,
};
use evcp_core::stream::{StreamWindow, TimestampedTuple};
use evcp_core::updates::{Algorithm, UpdateError};

#[derive(Parser)]
#[command(name = "evcp", version, about = "Continuous CP decomposition of sparse tensor streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Event CSV; falls back to the config's `synth` section when absent.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long)]
    out: PathBuf,
    /// Series/summary on `run`: `csv` (default) or a single `json`.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config algorithm (mat|vec|rnd|vec_plus|rnd_plus).
    #[arg(long)]
    algorithm: Option<String>,
    /// Suppress progress output (report bytes are unaffected).
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a stream and report fitness, relative fitness, and latency.
    Run(CommonArgs),
    /// Rerun the experiment across sampling thresholds.
    SweepTheta {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated θ values, e.g. 5,10,20,40.
        #[arg(long, value_delimiter = ',', required = true)]
        thetas: Vec<usize>,
    },
    /// Replay synthetic streams of growing size and fit the runtime slope.
    SweepScale {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated event counts, e.g. 10000,100000,1000000.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<u64>,
    },
    /// Inject oversized events and score detection precision and latency.
    Anomaly {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of injected anomalies.
        #[arg(long, default_value_t = 20)]
        injections: usize,
        /// Injection magnitude as a multiple of the largest warm-up change.
        #[arg(long, default_value_t = 5.0)]
        magnitude: f64,
    },
    /// Write a synthetic event stream as CSV.
    Synth {
        /// Optional config whose `synth` section drives generation.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
    /// Parse, validate, and echo a config with defaults applied.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match &e {
            HarnessError::Update(UpdateError::NonFinite { .. }) => {
                Failure::Numerical(format!("error: {e}"))
            }
            HarnessError::Cpd(evcp_core::cpd::CpdError::NonFinite { .. }) => {
                Failure::Numerical(format!("error: {e}"))
            }
            _ => Failure::Config(format!("error: {e}")),
        }
    }
}

impl From<evcp_core::io::IoError> for Failure {
    fn from(e: evcp_core::io::IoError) -> Self {
        Failure::Config(format!("error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2 on usage errors; the contract says 1.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(common) => cmd_run(common),
        Command::SweepTheta { common, thetas } => cmd_sweep_theta(common, &thetas),
        Command::SweepScale { common, sizes } => cmd_sweep_scale(common, &sizes),
        Command::Anomaly {
            common,
            injections,
            magnitude,
        } => cmd_anomaly(common, injections, magnitude),
        Command::Synth {
            config,
            out,
            seed,
            quiet,
        } => cmd_synth(config.as_deref(), &out, seed, quiet),
        Command::ValidateConfig { config } => cmd_validate(&config),
    }
}

fn effective_config(common: &CommonArgs) -> Result<RunConfig, Failure> {
    let mut config = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(name) = &common.algorithm {
        config.algorithm = Algorithm::parse(name)
            .ok_or_else(|| Failure::Config(format!("error: unknown algorithm {name:?}")))?;
    }
    Ok(config)
}

/// Events from `--events`, or generated from the config's synth section.
fn load_stream(
    common: &CommonArgs,
    config: &RunConfig,
) -> Result<Vec<TimestampedTuple<f64>>, Failure> {
    match &common.events {
        Some(path) => {
            let lengths = config.mode_lengths()?;
            Ok(read_events(path, StreamSpec::new(lengths))?)
        }
        None => {
            let synth = config.synth.clone().ok_or_else(|| {
                Failure::Config(
                    "error: no --events file and no synth section in the config".into(),
                )
            })?;
            Ok(synth_events(&synth, config.seed))
        }
    }
}

fn report_format(common: &CommonArgs) -> Result<ReportFormat, Failure> {
    ReportFormat::parse(&common.format)
        .ok_or_else(|| Failure::Config(format!("error: unknown format {:?}", common.format)))
}

fn sweep_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = std::env::var("SNS_THREADS")
        .ok()
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| Failure::Config(format!("error: bad SNS_THREADS value {v:?}")))
        })
        .transpose()?
        .unwrap_or(0); // 0 = rayon default (logical cores)
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Config(format!("error: thread pool: {e}")))
}

fn cmd_run(common: CommonArgs) -> Result<(), Failure> {
    let config = effective_config(&common)?;
    let format = report_format(&common)?;
    let events = load_stream(&common, &config)?;

    if !common.quiet {
        eprintln!(
            "run: {} events, algorithm {}, R={}, W={}, T={:?}",
            events.len(),
            config.algorithm.as_str(),
            config.rank,
            config.window,
            config.period
        );
        if let (Ok(period), Ok(lengths)) = (config.period(), config.mode_lengths()) {
            // Surface the θ guide computed from the first window span.
            let mut full = lengths;
            full.push(config.window);
            if let Ok(mut sw) = StreamWindow::new(full, period) {
                let warm_end = events
                    .first()
                    .map(|e| e.timestamp + config.window as i64 * period)
                    .unwrap_or(0);
                for e in events.iter().take_while(|e| e.timestamp <= warm_end) {
                    let _ = sw.ingest(e, |_, _| {});
                }
                if sw.window().nnz() > 0 {
                    eprintln!(
                        "hint: suggested theta from the first window: {}",
                        suggested_theta(sw.window())
                    );
                }
            }
        }
    }

    let report = run_experiment(&events, &config)?;
    std::fs::create_dir_all(&common.out).map_err(|e| Failure::Config(format!("error: {e}")))?;
    let files = emit_report(&report, &common.out, format)?;

    // Factor checkpoint next to the reports.
    let ckpt = common.out.join("factors.json");
    let replayed = harness_model(&events, &config)?;
    save_checkpoint(&ckpt, &replayed, config.seed)
        .map_err(|e| Failure::Config(format!("error: {e}")))?;

    if !common.quiet {
        eprintln!(
            "done: fitness {:.4}, avg relative fitness {:?}, mean update {:.0} ns",
            report.summary.final_fitness,
            report.summary.avg_relative_fitness,
            report.summary.mean_update_ns
        );
        for f in files {
            eprintln!("wrote {}", f.display());
        }
        eprintln!("wrote {}", ckpt.display());
    }
    Ok(())
}

/// Rebuilds the final factor state for checkpointing. The experiment report
/// only carries metrics, so the run is replayed without metric sampling;
/// outputs are deterministic per (stream, config, seed).
fn harness_model(
    events: &[TimestampedTuple<f64>],
    config: &RunConfig,
) -> Result<evcp_core::FactorModelF64, Failure> {
    let mut cfg = config.clone();
    cfg.oracle = false;
    let replay = harness::replay_to_end(events, &cfg)?;
    Ok(replay.model)
}

fn cmd_sweep_theta(common: CommonArgs, thetas: &[usize]) -> Result<(), Failure> {
    let config = effective_config(&common)?;
    let events = load_stream(&common, &config)?;
    let pool = sweep_pool()?;
    let rows: Result<Vec<_>, HarnessError> = pool.install(|| {
        thetas
            .par_iter()
            .map(|&theta| theta_point(&events, &config, theta))
            .collect()
    });
    let report = harness::theta_report(config.seed, rows?);

    std::fs::create_dir_all(&common.out).map_err(|e| Failure::Config(format!("error: {e}")))?;
    let json = common.out.join("theta_report.json");
    write_json(&json, &report)?;
    let csv = common.out.join("theta.csv");
    let mut text = String::from("theta,avg_relative_fitness,final_fitness,mean_update_ns\n");
    for r in &report.rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.theta,
            r.avg_relative_fitness.map(|v| v.to_string()).unwrap_or_default(),
            r.final_fitness,
            r.mean_update_ns
        ));
    }
    std::fs::write(&csv, text).map_err(|e| Failure::Config(format!("error: {e}")))?;
    if !common.quiet {
        eprintln!("wrote {}", json.display());
        eprintln!("wrote {}", csv.display());
    }
    Ok(())
}

fn cmd_sweep_scale(common: CommonArgs, sizes: &[u64]) -> Result<(), Failure> {
    let config = effective_config(&common)?;
    // Timing experiment: sizes run sequentially regardless of SNS_THREADS.
    let report = scalability_sweep(&config, sizes)?;
    std::fs::create_dir_all(&common.out).map_err(|e| Failure::Config(format!("error: {e}")))?;
    let json = common.out.join("scale_report.json");
    write_json(&json, &report)?;
    let csv = common.out.join("scale.csv");
    let mut text = String::from("num_events,events_processed,total_update_ns,total_replay_ns\n");
    for r in &report.rows {
        text.push_str(&format!(
            "{},{},{},{}\n",
            r.num_events, r.events_processed, r.total_update_ns, r.total_replay_ns
        ));
    }
    std::fs::write(&csv, text).map_err(|e| Failure::Config(format!("error: {e}")))?;
    if !common.quiet {
        if let Some(slope) = report.loglog_slope {
            eprintln!("log-log slope: {slope:.3}");
        }
        eprintln!("wrote {}", json.display());
        eprintln!("wrote {}", csv.display());
    }
    Ok(())
}

fn cmd_anomaly(common: CommonArgs, injections: usize, magnitude: f64) -> Result<(), Failure> {
    let config = effective_config(&common)?;
    let events = load_stream(&common, &config)?;
    let record = inject_and_detect(&events, &config, injections, magnitude)?;
    std::fs::create_dir_all(&common.out).map_err(|e| Failure::Config(format!("error: {e}")))?;
    let path = common.out.join("anomaly.json");
    write_json(&path, &record)?;
    if !common.quiet {
        eprintln!(
            "precision@{}: {:.2}, mean detection latency: {:?}",
            record.k, record.precision_at_k, record.mean_detection_latency
        );
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_synth(config: Option<&Path>, out: &Path, seed: u64, quiet: bool) -> Result<(), Failure> {
    let params = match config {
        Some(path) => {
            let config = load_config(path)?;
            config.synth.ok_or_else(|| {
                Failure::Config("error: config has no synth section".into())
            })?
        }
        None => SynthParams {
            mode_lengths: vec![20, 20],
            num_events: 10_000,
            kind: SynthKind::Random {
                mean_interarrival: 2.0,
                index_skew: 1.0,
                value_max: 5.0,
                integer_values: false,
            },
        },
    };
    let events = synth_events::<f64>(&params, seed);
    write_events(out, None, &events)?;
    if !quiet {
        eprintln!("wrote {} events to {}", events.len(), out.display());
    }
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<(), Failure> {
    let config = load_config(config)?;
    let text = serde_json::to_string_pretty(&config)
        .map_err(|e| Failure::Config(format!("error: {e}")))?;
    println!("{text}");
    Ok(())
}
