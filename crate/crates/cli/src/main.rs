//! `triagenet`: evaluation harness, report tooling and the session service.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 validation error,
//! 3 inconsistent evidence.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use triagenet_core::consult::journal::{write_events, SessionSettings, SystemClock};
use triagenet_core::eval::report::{write_csv, write_json};
use triagenet_core::eval::{
    compare_sources, evaluate, load_pack, sweep_thresholds, CaseResult, EvalConfig, EvalError, EvalReport, Mode,
};
use triagenet_core::inference::InferenceMethod;
use triagenet_core::model::{validate_document, ModelDocument, ModelError};
use triagenet_core::vignette::Vignette;
use triagenet_core::Network;
use triagenet_service::SessionStore;

#[derive(Parser)]
#[command(name = "triagenet", version, about = "Noisy-OR diagnostic and triage engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a vignette pack through the engine and write a JSON report.
    Eval(EvalArgs),
    /// Precision/recall trade-off over a grid of display thresholds.
    Sweep(SweepArgs),
    /// Re-render a saved eval report as JSON or CSV.
    Report(ReportArgs),
    /// Score externally produced case results (one or more sources).
    Score(ScoreArgs),
    /// Serve the session HTTP API.
    Serve(ServeArgs),
    /// Check a model document and optionally a vignette pack.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct PackArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vignettes: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum InferenceKind {
    Exact,
    Sampled,
}

#[derive(Args)]
struct EngineArgs {
    /// Overrides the model's display threshold base.
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    inference: InferenceKind,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    /// Overtriage penalty per action rank.
    #[arg(long)]
    overtriage: Option<f64>,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_questions: Option<usize>,
    /// Label recorded as the source of each case result.
    #[arg(long, default_value = "engine")]
    source: String,
}

impl EngineArgs {
    fn settings(&self) -> SessionSettings {
        let mut s = SessionSettings {
            tau0: self.tau0,
            ..Default::default()
        };
        if let Some(c) = self.overtriage {
            s.overtriage = c;
        }
        if let Some(k) = self.top_k {
            s.consult.top_k = k;
        }
        if let Some(e) = self.epsilon {
            s.consult.epsilon = e;
        }
        if let Some(m) = self.max_questions {
            s.consult.max_questions = m;
        }
        if let InferenceKind::Sampled = self.inference {
            s.consult.inference = InferenceMethod::Sampled {
                samples: self.samples,
                seed: self.seed,
            };
        }
        s
    }

    fn config(&self, mode: Mode) -> EvalConfig {
        EvalConfig {
            mode,
            settings: self.settings(),
            seed: self.seed,
            source: self.source.clone(),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    pack: PackArgs,
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    #[command(flatten)]
    engine: EngineArgs,
    /// JSON report destination.
    #[arg(long)]
    out: PathBuf,
    /// Also write one CSV row per case here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write each case's event log to `<dir>/<vignette>.jsonl`.
    #[arg(long)]
    session_logs: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pack: PackArgs,
    /// Comma-separated ascending tau0 values.
    #[arg(long, value_delimiter = ',', required = true)]
    tau0_grid: Vec<f64>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ReportArgs {
    /// A report written by `eval`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Needed for CSV (modelled disease and judge ranges).
    #[arg(long, requires = "vignettes")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    vignettes: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    pack: PackArgs,
    /// JSON array of case results.
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    overtriage: Option<f64>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    vignettes: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Inconsistent(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Inconsistent(_) => 3,
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        if e.is_inconsistent_evidence() {
            return CliError::Inconsistent(e.to_string());
        }
        match e {
            EvalError::Io(_) => CliError::Other(e.to_string()),
            EvalError::Vignette { .. } | EvalError::EmptyPack | EvalError::InvalidGrid | EvalError::Metric(_) => {
                CliError::Validation(e.to_string())
            }
            EvalError::Consult { .. } => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Arc<Network>, CliError> {
    match triagenet_core::load_network(open(path)?) {
        Ok(net) => Ok(Arc::new(net)),
        Err(ModelError::Io(e)) => Err(CliError::Other(format!("{}: {e}", path.display()))),
        Err(e) => Err(CliError::Validation(format!("{}: {e}", path.display()))),
    }
}

fn load(pack: &PackArgs) -> Result<(Arc<Network>, Vec<Vignette>), CliError> {
    let net = load_model(&pack.model)?;
    let vignettes = load_pack(net.as_ref(), &pack.vignettes)?;
    Ok((net, vignettes))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn csv_error(e: triagenet_core::eval::report::CsvError) -> CliError {
    CliError::Other(e.to_string())
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let (net, vignettes) = load(&args.pack)?;
    let cfg = args.engine.config(args.mode);
    let (report, runs) = evaluate(&net, &vignettes, &cfg)?;
    write_json(create(&args.out)?, &report)?;
    if let Some(path) = &args.csv {
        write_csv(create(path)?, &report, &vignettes).map_err(csv_error)?;
    }
    if let Some(dir) = &args.session_logs {
        fs::create_dir_all(dir)?;
        for run in &runs {
            write_events(
                create(&dir.join(format!("{}.jsonl", run.result.vignette)))?,
                &run.events,
            )?;
        }
    }
    let m = &report.metrics;
    eprintln!(
        "{} cases: recall {:.1}%, precision {:.1}%, F1 {:.1}%",
        m.n_cases, m.recall, m.precision, m.f1
    );
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), CliError> {
    let (net, vignettes) = load(&args.pack)?;
    let points = sweep_thresholds(&net, &vignettes, &args.tau0_grid, &args.engine.config(Mode::Full))?;
    write_json(output(args.out.as_deref())?, &points)?;
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<(), CliError> {
    let report: EvalReport = serde_json::from_reader(open(&args.input)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.input.display())))?;
    let out = output(args.out.as_deref())?;
    match args.format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => {
            let (Some(model), Some(vignettes)) = (args.model, args.vignettes) else {
                return Err(CliError::Validation(
                    "--format csv needs --model and --vignettes".into(),
                ));
            };
            let (_, vignettes) = load(&PackArgs { model, vignettes })?;
            write_csv(out, &report, &vignettes).map_err(csv_error)?;
        }
    }
    Ok(())
}

fn run_score(args: ScoreArgs) -> Result<(), CliError> {
    let (net, vignettes) = load(&args.pack)?;
    let results: Vec<CaseResult> = serde_json::from_reader(open(&args.results)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.results.display())))?;
    let comparison =
        compare_sources(&results, &vignettes, net.as_ref()).map_err(|e| CliError::Validation(e.to_string()))?;
    write_json(output(args.out.as_deref())?, &comparison)?;
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<(), CliError> {
    let net = load_model(&args.model)?;
    let mut settings = SessionSettings {
        tau0: args.tau0,
        ..Default::default()
    };
    if let Some(c) = args.overtriage {
        settings.overtriage = c;
    }
    let store = SessionStore::new(net, settings, Some(args.data_dir.clone()), Box::new(SystemClock))
        .map_err(|e| CliError::Other(e.to_string()))?;
    let restored = store.recover().map_err(|e| CliError::Other(e.to_string()))?;
    eprintln!("restored {restored} sessions from {}", args.data_dir.display());
    eprintln!("listening on http://{}", args.addr);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(triagenet_service::serve(Arc::new(store), args.addr))?;
    Ok(())
}

fn run_validate(args: ValidateArgs) -> Result<(), CliError> {
    let doc: ModelDocument = serde_json::from_reader(open(&args.model)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.model.display())))?;
    let violations = validate_document(&doc);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Err(CliError::Validation(format!(
            "{}: {} violation(s)",
            args.model.display(),
            violations.len()
        )));
    }
    println!(
        "{}: ok ({} risk factors, {} diseases, {} symptoms)",
        args.model.display(),
        doc.risk_factors.len(),
        doc.diseases.len(),
        doc.symptoms.len()
    );
    if let Some(dir) = &args.vignettes {
        let net = load_model(&args.model)?;
        let pack = load_pack(net.as_ref(), dir)?;
        println!("{}: ok ({} vignettes)", dir.display(), pack.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Report(a) => run_report(a),
        Command::Score(a) => run_score(a),
        Command::Serve(a) => run_serve(a),
        Command::Validate(a) => run_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
