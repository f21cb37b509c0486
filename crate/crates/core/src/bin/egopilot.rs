use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use egopilot_core::audio::PlayingSchedule;
use egopilot_core::config::{assemble, AppConfig};
use egopilot_core::event_log::{ingest_log_file, EventLog};
use egopilot_core::harness::{self, McParams, QaRun, RunReport};
use egopilot_core::providers::{load_stub_table, KeywordSummarizer, StubLanguageModel, StubTable};
use egopilot_core::transport::serve;

#[derive(Parser)]
#[command(name = "egopilot", version, about = "Offline harnesses and the framed session server")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSONL run report here.
    #[arg(long, global = true)]
    report_out: Option<PathBuf>,
    /// tracing filter, e.g. `info` or `egopilot_core=debug`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiple-choice QA over a fixture and an event log.
    Qa(QaArgs),
    /// Replay a WAV through the VAD and diff against expected events.
    ReplayAudio(ReplayArgs),
    /// Monte-Carlo check of the temporal board vote.
    BoardMc(McArgs),
    /// Run the framed session server until interrupted.
    Serve(ServeArgs),
}

#[derive(Args)]
struct QaArgs {
    /// JSONL fixture: question, options, answer[, hint, now_ms, id].
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    fixture: Option<PathBuf>,
    /// Generate this many synthetic questions with their log and stub table.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Event log, one `ms<TAB>modality<TAB>source<TAB>content` per line.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Start time of day of the log, HH:MM.
    #[arg(long, default_value = "00:00")]
    epoch: String,
    /// Scripted model table.
    #[arg(long)]
    stub_table: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    chunk_ms: Option<u64>,
    #[arg(long)]
    variants: Option<usize>,
    /// Answer from the question alone.
    #[arg(long)]
    no_context: bool,
    /// Exit nonzero below this accuracy.
    #[arg(long)]
    floor: Option<f64>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    wav: PathBuf,
    /// `chunk<TAB>halt|dispatch[<TAB>samples]` lines.
    #[arg(long)]
    expected: PathBuf,
    /// Chunk range START..END during which playback is active; repeatable.
    #[arg(long, value_parser = PlayingSchedule::parse_range)]
    playing: Vec<std::ops::Range<usize>>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long, default_value = egopilot_core::board::START_FEN)]
    fen: String,
    #[arg(long, default_value_t = 0.2)]
    p: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    listen: Option<String>,
    /// Scripted model table.
    #[arg(long)]
    stub_table: Option<PathBuf>,
    /// Scripted recognizer table keyed by `segment ms=<duration>`.
    #[arg(long)]
    asr_table: Option<PathBuf>,
    /// Per-session JSONL traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Event log copied into every session.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value = "00:00")]
    epoch: String,
}

fn load_config(cli: &Cli) -> Result<AppConfig> {
    let mut cfg = match &cli.config {
        Some(p) => AppConfig::load(p)?,
        None => AppConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn table(path: Option<&Path>, fallback: StubTable) -> Result<StubTable> {
    match path {
        Some(p) => Ok(load_stub_table(p)?),
        None => Ok(fallback),
    }
}

fn event_log(path: Option<&Path>, epoch: &str) -> Result<EventLog> {
    let epoch = egopilot_core::event_log::Epoch::parse_time_of_day(epoch)
        .with_context(|| format!("--epoch `{epoch}` is not HH:MM"))?;
    match path {
        Some(p) => Ok(ingest_log_file(p, epoch)?),
        None => Ok(EventLog::new(epoch)),
    }
}

fn finish(cli: &Cli, report: &RunReport) -> Result<ExitCode> {
    if let Some(out) = &cli.report_out {
        fs::write(out, report.to_jsonl()).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{}", report.summary());
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_qa(cli: &Cli, cfg: &AppConfig, a: &QaArgs) -> Result<ExitCode> {
    let (log, items, lm_table) = match a.synthetic {
        Some(n) => {
            let syn = harness::synthetic_qa(n, cfg.seed);
            let t = table(a.stub_table.as_deref(), syn.lm_table)?;
            (syn.log, syn.items, t)
        }
        None => {
            let fixture = a.fixture.as_ref().expect("clap enforces one source");
            let items = harness::load_qa_fixture(fixture)?;
            let log = event_log(a.log.as_deref(), &a.epoch)?;
            let t = table(a.stub_table.as_deref(), StubTable::new(harness::synthetic::BLIND_REPLY))?;
            (log, items, t)
        }
    };
    let mut answer = cfg.answer.clone();
    if a.no_context {
        answer.use_context = false;
    }
    if let Some(ms) = a.chunk_ms {
        answer.context.chunk_duration_ms = ms;
    }
    if let Some(v) = a.variants {
        answer.variants = v;
    }
    let lm = StubLanguageModel::new(lm_table);
    let run = QaRun {
        log: &log,
        summarizer: &KeywordSummarizer::default(),
        lm: &lm,
        budget: a.budget.unwrap_or(cfg.orchestrator.budget),
        answer,
        accuracy_floor: a.floor.unwrap_or(cfg.qa.accuracy_floor),
    };
    finish(cli, &harness::run_qa(&items, &run))
}

fn run_serve(cfg: &mut AppConfig, a: &ServeArgs) -> Result<ExitCode> {
    if let Some(l) = &a.listen {
        cfg.server.listen = l.clone();
    }
    if a.trace_dir.is_some() {
        cfg.server.trace_dir = a.trace_dir.clone();
    }
    if let Some(dir) = &cfg.server.trace_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating trace dir {}", dir.display()))?;
    }
    let lm = table(
        a.stub_table.as_deref(),
        StubTable::new("Sorry, I have no scripted answer for that.").with("plan for:", "[]"),
    )?;
    let asr = table(a.asr_table.as_deref(), StubTable::new(""))?;
    let log = event_log(a.log.as_deref(), &a.epoch)?;
    let assembled = assemble(cfg, lm, asr, log)?;
    let server = serve(cfg.server.listen.as_str(), assembled.runtime, assembled.session)?;
    println!("listening on {}", server.local_addr());

    let (tx, rx) = mpsc::channel();
    ctrlc::set_handler(move || {
        let _ = tx.send(());
    })
    .context("installing the interrupt handler")?;
    let _ = rx.recv();
    let sessions = server.shutdown();
    eprintln!("served {} session(s)", sessions.len());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Qa(a) => run_qa(cli, &cfg, a),
        Command::ReplayAudio(a) => {
            let report = harness::replay_audio(&a.wav, &a.expected, &cfg.vad, &PlayingSchedule(a.playing.clone()))?;
            finish(cli, &report)
        }
        Command::BoardMc(a) => {
            let report = harness::board_montecarlo(&McParams {
                fen: a.fen.clone(),
                p: a.p,
                n: a.n.unwrap_or(cfg.board.n),
                tau: a.tau.unwrap_or(cfg.board.tau),
                trials: a.trials,
                seed: cfg.seed,
                tolerance: a.tolerance,
            })?;
            finish(cli, &report)
        }
        Command::Serve(a) => run_serve(&mut cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log_level).unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
