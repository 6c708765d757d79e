//! The `cook` command line. [`run`] does the work and returns the exit code
//! so it can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cook_core::evaluation::DatasetFormat;
use cook_core::integration::{run_engine, AnswerFormat};
use cook_core::providers::{self as prov, ProviderError};
use cook_core::registry::roles;
use cook_core::{Engine, PipelineError, Providers, QueryTask, Registry};

use crate::dataset::{load_dataset, load_dataset_inferred, IclBlocks};
use crate::eval::{record_rng, run_eval, summary_table, to_json, ComparisonReport, EvalError, EvalOptions};
use crate::http::HttpProvider;
use crate::jsonl::{read_jsonl, write_jsonl};
use crate::registry_io::{load_registry, to_toml};
use crate::resolve::{build_providers, endpoint_roles};
use crate::transcript::{render, turn_records, TurnRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_DATASET: i32 = 4;

const DEFAULT_JOBS: usize = 4;

#[derive(Debug, Parser)]
#[command(name = "cook", version, about = "Answer questions with a black-box LLM helped by knowledge cards")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question and print the answer.
    Query(QueryArgs),
    /// Evaluate a dataset and write a JSON report.
    Eval(EvalArgs),
    /// List, check or print the registry.
    Registry(RegistryArgs),
    /// Check that every provider endpoint answers.
    Probe(ProbeArgs),
    /// Print a transcript file as readable text.
    Transcript(TranscriptArgs),
}

#[derive(Debug, Args)]
pub struct RegistryPath {
    /// Registry file (TOML).
    #[arg(long, env = "COOK_REGISTRY", value_name = "PATH")]
    pub registry: PathBuf,
}

/// Pipeline settings that override the registry.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Top-down knowledge requests allowed per question.
    #[arg(long, value_name = "INT")]
    pub max_iterations: Option<u32>,
    /// Documents generated per card.
    #[arg(long, value_name = "INT")]
    pub n1: Option<u32>,
    /// Documents kept by the relevance filter.
    #[arg(long, value_name = "INT")]
    pub n2: Option<u32>,
    /// Documents kept by factuality sampling.
    #[arg(long, value_name = "INT")]
    pub n3: Option<u32>,
    /// Size of the candidate set factuality sampling draws from.
    #[arg(long, value_name = "INT")]
    pub fact_top_k: Option<u32>,
}

#[derive(Debug, Args)]
pub struct RunFlags {
    /// RNG seed (defaults to the registry's rng_seed).
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
    /// Parallel workers.
    #[arg(long, value_name = "INT", default_value_t = DEFAULT_JOBS)]
    pub jobs: usize,
    /// Write every LLM turn to this file (JSON lines).
    #[arg(long, value_name = "PATH")]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub registry: RegistryPath,
    /// vanilla|bottom-up|top-down-auto|top-down-exp
    #[arg(long, value_name = "ENGINE", default_value = "bottom-up", value_parser = parse_engine)]
    pub engine: Engine,
    #[command(flatten)]
    pub run: RunFlags,
    /// Text file with in-context examples placed before the question.
    #[arg(long, value_name = "PATH")]
    pub icl: Option<PathBuf>,
    /// An answer choice; repeat for multiple choice (lettered A, B, ...).
    #[arg(long = "choice", value_name = "TEXT")]
    pub choices: Vec<String>,
    pub question: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub registry: RegistryPath,
    /// vanilla|bottom-up|top-down-auto|top-down-exp; a comma-separated list
    /// compares engines on the same records.
    #[arg(long, value_name = "ENGINE", default_value = "bottom-up", value_delimiter = ',', value_parser = parse_engine)]
    pub engine: Vec<Engine>,
    /// Dataset file (JSON lines).
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// Report file; without it the report goes to stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunFlags,
    /// Dataset format; inferred from the records when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// JSON object mapping icl_group names to demonstration text.
    #[arg(long, value_name = "PATH")]
    pub icl: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    MultipleChoice,
    OpenBook,
    Classification,
}

impl From<FormatArg> for DatasetFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::MultipleChoice => DatasetFormat::MultipleChoice,
            FormatArg::OpenBook => DatasetFormat::OpenBook,
            FormatArg::Classification => DatasetFormat::Classification,
        }
    }
}

#[derive(Debug, Args)]
pub struct RegistryArgs {
    #[command(flatten)]
    pub registry: RegistryPath,
    #[arg(value_enum, default_value = "list")]
    pub action: RegistryAction,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegistryAction {
    /// Card ids and descriptions in registration order.
    List,
    /// Validate, including required provider roles.
    Check,
    /// Print the normalized registry.
    Show,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub registry: RegistryPath,
}

#[derive(Debug, Args)]
pub struct TranscriptArgs {
    /// Transcript file written by `--transcript`.
    pub file: PathBuf,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse()
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl ToString) -> Self {
        Self { code, message: message.to_string() }
    }

    fn config(message: impl ToString) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    fn dataset(message: impl ToString) -> Self {
        Self::new(EXIT_DATASET, message)
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, format!("cannot write {}: {e}", path.display()))
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::InvalidTask(_) | PipelineError::NoCards => EXIT_CONFIG,
            _ if e.provider_error().is_some() => EXIT_PROVIDER,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e)
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Query(a) => cmd_query(a, out),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Registry(a) => cmd_registry(a, out),
        Command::Probe(a) => cmd_probe(a, out),
        Command::Transcript(a) => cmd_transcript(a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Loads the registry and applies command-line overrides.
fn registry_with_overrides(path: &Path, o: &Overrides) -> Result<Registry, Failure> {
    let registry = load_registry(path).map_err(Failure::config)?;
    let mut config = registry.config().clone();
    if let Some(v) = o.max_iterations {
        config.max_iterations = v;
    }
    if let Some(v) = o.n1 {
        config.n1 = v;
    }
    if let Some(v) = o.n2 {
        config.n2 = v;
    }
    if let Some(v) = o.n3 {
        config.n3 = v;
    }
    if let Some(v) = o.fact_top_k {
        config.fact_top_k = v;
    }
    if &config == registry.config() {
        return Ok(registry);
    }
    registry.with_config(config).map_err(|e| Failure::config(format!("after command-line overrides: {e}")))
}

fn providers_for(registry: &Registry, path: &Path, jobs: usize) -> Result<Providers, Failure> {
    let base = path.parent().unwrap_or(Path::new("."));
    build_providers(registry, base, jobs).map_err(Failure::config)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn write_turns(path: &Path, turns: &[TurnRecord]) -> Result<(), Failure> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, turns).map_err(|e| Failure::io(path, e))?;
    write_file(path, &buf)
}

fn cmd_query(a: QueryArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let path = &a.registry.registry;
    let registry = registry_with_overrides(path, &a.run.overrides)?;
    let providers = providers_for(&registry, path, a.run.jobs)?;
    let icl_prefix = match &a.icl {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let task = QueryTask {
        question: a.question.clone(),
        icl_prefix,
        answer_format: if a.choices.is_empty() {
            AnswerFormat::FreeText
        } else {
            AnswerFormat::MultipleChoice(a.choices.clone())
        },
        stop_sequences: vec!["\n".into()],
    };
    let seed = a.run.seed.unwrap_or(registry.config().rng_seed);
    let mut rng = record_rng(seed, 0);
    let result = run_engine(a.engine, &task, &registry, &providers, &mut rng)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    if let Some(t) = &a.run.transcript {
        write_turns(t, &turn_records(None, &result.transcript))?;
    }
    writeln!(out, "{}", result.answer).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    Ok(EXIT_OK)
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let path = &a.registry.registry;
    let registry = registry_with_overrides(path, &a.run.overrides)?;
    let providers = providers_for(&registry, path, a.run.jobs)?;
    let (records, format) = match a.format {
        Some(f) => load_dataset(&a.dataset, f.into()).map(|r| (r, f.into())),
        None => load_dataset_inferred(&a.dataset),
    }
    .map_err(Failure::dataset)?;
    let icl = match &a.icl {
        Some(p) => IclBlocks::load(p).map_err(Failure::dataset)?,
        None => IclBlocks::default(),
    };
    let seed = a.run.seed.unwrap_or(registry.config().rng_seed);

    let mut engines = a.engine.clone();
    engines.dedup();
    let mut reports = Vec::new();
    let mut turns = Vec::new();
    for engine in engines {
        let opts = EvalOptions { engine, format, seed, jobs: a.run.jobs };
        let run = run_eval(&records, &registry, &providers, &icl, &opts).map_err(|e| match e {
            EvalError::Outage { .. } => Failure::new(EXIT_PROVIDER, e),
            EvalError::Icl(m) => Failure::dataset(m),
            EvalError::Config(c) => Failure::config(c),
        })?;
        for (id, t) in &run.transcripts {
            turns.extend(turn_records(Some(&format!("{}/{id}", engine.name())), t));
        }
        reports.push(run.report);
    }

    let json = if reports.len() == 1 {
        to_json(&reports[0])
    } else {
        to_json(&ComparisonReport::new(reports.clone()))
    };
    if let Some(t) = &a.run.transcript {
        write_turns(t, &turns)?;
    }
    let table = summary_table(&reports);
    let io = |e: std::io::Error| Failure::new(EXIT_FAILURE, e);
    match &a.out {
        Some(p) => {
            write_file(p, json.as_bytes())?;
            out.write_all(table.as_bytes()).map_err(io)?;
        }
        None => {
            out.write_all(json.as_bytes()).map_err(io)?;
            err.write_all(table.as_bytes()).map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_registry(a: RegistryArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let registry = load_registry(&a.registry.registry).map_err(Failure::config)?;
    let io = |e: std::io::Error| Failure::new(EXIT_FAILURE, e);
    match a.action {
        RegistryAction::List => {
            for (id, description) in registry.list_card_descriptions() {
                writeln!(out, "{id}\t{description}").map_err(io)?;
            }
        }
        RegistryAction::Check => {
            let missing = registry.missing_roles();
            if !missing.is_empty() {
                return Err(Failure::config(format!("missing provider roles: {}", missing.join(", "))));
            }
            providers_for(&registry, &a.registry.registry, 1)?;
            writeln!(out, "ok: {} cards, {} endpoints", registry.cards().len(), registry.providers().len()).map_err(io)?;
        }
        RegistryAction::Show => out.write_all(to_toml(&registry).as_bytes()).map_err(io)?,
    }
    Ok(EXIT_OK)
}

/// Sends the smallest valid request for the endpoint's first role.
fn probe_remote(h: &HttpProvider, role: &str) -> Result<(), ProviderError> {
    match role {
        roles::LLM => prov::llm_complete(h, "ping", &[], &mut Vec::new()).map(drop),
        roles::EMBEDDER => prov::embed(h, &["ping".to_string()]).map(drop),
        roles::SUMMARIZER => prov::summarize(h, "ping.").map(drop),
        roles::FACT_SCORER | roles::SUMMARY_FACT_SCORER => prov::fact_score(h, "ping", "ping").map(drop),
        roles::RETRIEVER => prov::retrieve(h, "ping", 1).map(drop),
        _ => {
            let req = prov::GenerationRequest { prompt: "ping".into(), n: 1, temperature: 0.0, max_new_tokens: 1 };
            prov::generate(h, &req).map(drop)
        }
    }
}

fn cmd_probe(a: ProbeArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let registry = load_registry(&a.registry.registry).map_err(Failure::config)?;
    let roles = endpoint_roles(&registry);
    let io = |e: std::io::Error| Failure::new(EXIT_FAILURE, e);
    let mut down = 0;
    for (endpoint, binding) in registry.providers() {
        let Some(used_as) = roles.get(endpoint) else {
            writeln!(out, "{endpoint}: unused").map_err(io)?;
            continue;
        };
        let status = match &binding.url {
            None => "ok (in-process)".to_string(),
            Some(url) => {
                let h = HttpProvider::new(endpoint.clone(), url, binding.timeout_secs.map(std::time::Duration::from_secs_f64));
                let started = Instant::now();
                match probe_remote(&h, &used_as[0]) {
                    Ok(()) => format!("ok ({} ms)", started.elapsed().as_millis()),
                    Err(e @ (ProviderError::Transport { .. } | ProviderError::RateLimited { .. })) => {
                        down += 1;
                        format!("unreachable ({e})")
                    }
                    Err(e) => {
                        down += 1;
                        format!("error ({e})")
                    }
                }
            }
        };
        writeln!(out, "{endpoint}: {status}").map_err(io)?;
    }
    for role in registry.missing_roles() {
        down += 1;
        writeln!(out, "{role}: missing").map_err(io)?;
    }
    Ok(if down == 0 { EXIT_OK } else { EXIT_PROVIDER })
}

fn cmd_transcript(a: TranscriptArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let turns: Vec<TurnRecord> =
        read_jsonl(&a.file).map_err(|e| Failure::config(format!("{}: {e}", a.file.display())))?;
    out.write_all(render(&turns).as_bytes()).map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    Ok(EXIT_OK)
}
