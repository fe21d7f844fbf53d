//! Command-line front end: `verify`, `eval`, `ablate` and `cache`.
//!
//! Settings are merged as flags, then the `--config` TOML file, then
//! defaults. Exit codes: 0 success, 1 other failure, 2 configuration,
//! 3 data, 4 backend.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, DatasetKind};
use crate::eval::{self, AblationVariant, EvalOptions, EvalReport};
use crate::llm::{
    BackendConfig, BackendKind, LlmClient, ResponseCache, DEFAULT_API_KEY_ENV, DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
};
use crate::pipeline::{ClaimInstance, EvidencePiece, Pipeline, PipelineConfig, StageModel};
use crate::prompts::PromptSet;

pub const DEFAULT_CACHE_DIR: &str = ".claimpipe-cache";
const DEFAULT_VARIANTS: &str = "none,no-cd,no-ea,no-keyword,no-selection,no-raw";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Backend(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "claimpipe",
    version,
    about = "Verify claims against gold evidence with an LLM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify one claim and print its JSON report.
    Verify(VerifyArgs),
    /// Evaluate a dataset and print Macro-F1.
    Eval(EvalArgs),
    /// Evaluate a dataset under several ablation variants.
    Ablate(AblateArgs),
    /// Inspect or clear the response cache.
    Cache(CacheArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Http,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetArg {
    Hover,
    Feverous,
    Generic,
}

impl From<DatasetArg> for DatasetKind {
    fn from(d: DatasetArg) -> Self {
        match d {
            DatasetArg::Hover => DatasetKind::Hover,
            DatasetArg::Feverous => DatasetKind::Feverous,
            DatasetArg::Generic => DatasetKind::Generic,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Chat-completions URL for the http backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Verification model (also the abstraction model unless overridden).
    #[arg(long, visible_alias = "verification-model")]
    pub model: Option<String>,
    #[arg(long)]
    pub abstraction_model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Response script for the scripted backend (JSON lines).
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Partial-ratio threshold for keyword selection.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Token-set-ratio threshold for keyword selection.
    #[arg(long)]
    pub t2: Option<f64>,
    /// Selected keywords needed before a piece is summarized.
    #[arg(long)]
    pub min_keywords: Option<usize>,
    /// Add the claim-context sentence to verification prompts.
    #[arg(long, overrides_with = "no_claim_context")]
    pub with_claim_context: bool,
    #[arg(long, overrides_with = "with_claim_context")]
    pub no_claim_context: bool,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
    /// Stop verifying subclaims after the first False.
    #[arg(long)]
    pub short_circuit: bool,
    /// Response cache directory [default: .claimpipe-cache].
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    /// Directory of prompt files overriding the built-in ones.
    #[arg(long)]
    pub prompts_dir: Option<PathBuf>,
    /// Concurrent claims [default: logical CPUs, at most 8].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetArg>,
    #[arg(long)]
    pub data_path: Option<PathBuf>,
    /// Keep only HOVER claims with this many hops.
    #[arg(long)]
    pub hops: Option<u32>,
    /// Directory for report.json, table.txt and traces/.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub claim: String,
    /// JSON array of pieces (strings or {title, text}) or one piece per line.
    #[arg(long)]
    pub evidence: PathBuf,
    #[arg(long, default_value = "claim")]
    pub id: String,
    /// Writes the report here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    /// Comma-separated: none, no-cd, no-ea, no-keyword, no-selection, no-raw,
    /// with-claim, without-claim.
    #[arg(long)]
    pub variants: Option<String>,
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CacheArgs {
    #[command(subcommand)]
    pub action: CacheAction,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum CacheAction {
    Stats,
    Clear,
}

/// Keys accepted in the `--config` file. Names match the long flags with
/// underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendArg>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub abstraction_model: Option<String>,
    pub api_key_env: Option<String>,
    pub script: Option<PathBuf>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub min_keywords: Option<usize>,
    pub with_claim_context: Option<bool>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub short_circuit: Option<bool>,
    pub cache_dir: Option<PathBuf>,
    pub no_cache: Option<bool>,
    pub prompts_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub max_retries: Option<u32>,
    pub request_timeout_secs: Option<u64>,
    pub dataset: Option<DatasetArg>,
    pub data_path: Option<PathBuf>,
    pub hops: Option<u32>,
    pub out: Option<PathBuf>,
    pub variants: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings; embedded in every eval report.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub backend: BackendConfig,
    pub model: String,
    pub abstraction_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub pipeline: PipelineConfig,
    pub cache_dir: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub workers: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSettings>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetSettings {
    pub kind: DatasetKind,
    pub path: PathBuf,
    pub hops: Option<u32>,
}

fn resolve(
    common: &CommonArgs,
    file: &FileConfig,
    dataset: Option<DatasetKind>,
) -> Result<Settings, CliError> {
    let backend_kind = common.backend.or(file.backend).unwrap_or(BackendArg::Http);
    let mut backend = match backend_kind {
        BackendArg::Http => {
            let endpoint = common
                .endpoint
                .clone()
                .or_else(|| file.endpoint.clone())
                .ok_or_else(|| {
                    CliError::Config("--endpoint is required for the http backend".into())
                })?;
            BackendConfig::http(endpoint)
        }
        BackendArg::Scripted => {
            let script = common
                .script
                .clone()
                .or_else(|| file.script.clone())
                .ok_or_else(|| {
                    CliError::Config("--script is required for the scripted backend".into())
                })?;
            BackendConfig::scripted(script)
        }
    };
    backend.api_key_env = common
        .api_key_env
        .clone()
        .or_else(|| file.api_key_env.clone())
        .unwrap_or_else(|| DEFAULT_API_KEY_ENV.to_owned());
    if let Some(n) = file.max_retries {
        backend.max_retries = n;
    }
    if let Some(s) = file.request_timeout_secs {
        backend.request_timeout = std::time::Duration::from_secs(s);
    }

    let model = match common.model.clone().or_else(|| file.model.clone()) {
        Some(m) => m,
        None if backend.kind == BackendKind::Scripted => "scripted".to_owned(),
        None => {
            return Err(CliError::Config(
                "--model is required for the http backend".into(),
            ))
        }
    };
    let abstraction_model = common
        .abstraction_model
        .clone()
        .or_else(|| file.abstraction_model.clone())
        .unwrap_or_else(|| model.clone());

    let with_claim_context = if common.with_claim_context {
        true
    } else if common.no_claim_context {
        false
    } else {
        file.with_claim_context
            .unwrap_or(dataset == Some(DatasetKind::Hover))
    };
    let defaults = PipelineConfig::default();
    let pipeline = PipelineConfig {
        t1: common.t1.or(file.t1).unwrap_or(defaults.t1),
        t2: common.t2.or(file.t2).unwrap_or(defaults.t2),
        min_keywords_for_summary: common
            .min_keywords
            .or(file.min_keywords)
            .unwrap_or(defaults.min_keywords_for_summary),
        with_claim_context,
        ablation: defaults.ablation,
        short_circuit: common.short_circuit || file.short_circuit.unwrap_or(false),
    };
    pipeline.validate().map_err(CliError::Config)?;

    let temperature = common
        .temperature
        .or(file.temperature)
        .unwrap_or(DEFAULT_TEMPERATURE);
    if !(0.0..=2.0).contains(&temperature) {
        return Err(CliError::Config(format!(
            "temperature must lie in [0, 2], got {temperature}"
        )));
    }
    let max_tokens = common
        .max_tokens
        .or(file.max_tokens)
        .unwrap_or(DEFAULT_MAX_TOKENS);
    if max_tokens == 0 {
        return Err(CliError::Config("max tokens must be positive".into()));
    }
    let workers = common
        .workers
        .or(file.workers)
        .unwrap_or_else(eval::default_workers);
    if workers == 0 {
        return Err(CliError::Config("workers must be positive".into()));
    }

    // Scripted runs only use a cache when a directory is named explicitly.
    let explicit_cache = common.cache_dir.clone().or_else(|| file.cache_dir.clone());
    let cache_dir = if common.no_cache || file.no_cache.unwrap_or(false) {
        None
    } else {
        match backend.kind {
            BackendKind::HttpChat => {
                Some(explicit_cache.unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)))
            }
            BackendKind::Scripted => explicit_cache,
        }
    };

    Ok(Settings {
        backend,
        model,
        abstraction_model,
        temperature,
        max_tokens,
        pipeline,
        cache_dir,
        prompts_dir: common
            .prompts_dir
            .clone()
            .or_else(|| file.prompts_dir.clone()),
        workers,
        dataset: None,
    })
}

fn load_file_config(common: &CommonArgs) -> Result<FileConfig, CliError> {
    common
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .map(Option::unwrap_or_default)
}

fn build_pipeline(settings: &Settings) -> Result<Pipeline, CliError> {
    let cache = settings
        .cache_dir
        .as_ref()
        .map(ResponseCache::open)
        .transpose()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let client = LlmClient::from_config(&settings.backend, cache)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let client: Arc<dyn crate::llm::Completer> = Arc::new(client);
    let stage = |model: &str| {
        let mut m = StageModel::new(client.clone(), model);
        m.temperature = settings.temperature;
        m.max_tokens = settings.max_tokens;
        m
    };
    let prompts = match &settings.prompts_dir {
        Some(dir) => PromptSet::load_dir(dir).map_err(|e| CliError::Config(e.to_string()))?,
        None => PromptSet::default(),
    };
    Ok(Pipeline::new(
        settings.pipeline.clone(),
        Arc::new(prompts),
        stage(&settings.abstraction_model),
        stage(&settings.model),
    ))
}

/// Reads evidence for `verify`: a JSON array of strings or `{title, text}`
/// objects, otherwise one piece per non-empty line.
pub fn read_evidence_file(path: &Path) -> Result<Vec<EvidencePiece>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading evidence file {}: {e}", path.display())))?;
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Piece {
        Text(String),
        Full(EvidencePiece),
    }
    let pieces: Vec<EvidencePiece> = if text.trim_start().starts_with('[') {
        serde_json::from_str::<Vec<Piece>>(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
            .into_iter()
            .map(|p| match p {
                Piece::Text(t) => EvidencePiece::new(t),
                Piece::Full(f) => f,
            })
            .collect()
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(EvidencePiece::new)
            .collect()
    };
    if pieces.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no evidence pieces",
            path.display()
        )));
    }
    Ok(pieces)
}

fn install_interrupt_handler() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let f = flag.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        eprintln!("interrupt: finishing claims in flight");
        f.store(true, Ordering::SeqCst);
    }) {
        log::debug!("interrupt handler not installed: {e}");
    }
    flag
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body)
        .map_err(|e| CliError::Other(format!("writing {}: {e}", path.display())))
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load_file_config(&args.common)?;
    let settings = resolve(&args.common, &file, None)?;
    let evidence = read_evidence_file(&args.evidence)?;
    let instance = ClaimInstance {
        id: args.id.clone(),
        claim: args.claim.clone(),
        evidence,
        gold_label: None,
    };
    instance.validate().map_err(CliError::Data)?;
    let pipeline = build_pipeline(&settings)?;
    let report = pipeline.verify_claim(&instance).map_err(|e| {
        if e.is_backend() {
            CliError::Backend(e.to_string())
        } else {
            CliError::Other(e.to_string())
        }
    })?;
    let json = report.to_json_pretty() + "\n";
    if let Some(path) = &args.out {
        write_file(path, &json)?;
    }
    out.write_all(json.as_bytes())
        .map_err(|e| CliError::Other(e.to_string()))
}

struct Prepared {
    settings: Settings,
    instances: Vec<ClaimInstance>,
    pipeline: Pipeline,
    out: Option<PathBuf>,
}

fn prepare(
    data: &DatasetArgs,
    common: &CommonArgs,
    file: &FileConfig,
) -> Result<Prepared, CliError> {
    let kind: DatasetKind = data
        .dataset
        .or(file.dataset)
        .ok_or_else(|| CliError::Config("--dataset is required".into()))?
        .into();
    let path = data
        .data_path
        .clone()
        .or_else(|| file.data_path.clone())
        .ok_or_else(|| CliError::Config("--data-path is required".into()))?;
    let hops = data.hops.or(file.hops);
    if hops.is_some() && kind != DatasetKind::Hover {
        return Err(CliError::Config(
            "--hops only applies to the hover dataset".into(),
        ));
    }
    let mut settings = resolve(common, file, Some(kind))?;
    let instances = data::load(kind, &path, hops).map_err(|e| CliError::Data(e.to_string()))?;
    if instances.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no claims loaded",
            path.display()
        )));
    }
    settings.dataset = Some(DatasetSettings { kind, path, hops });
    let pipeline = build_pipeline(&settings)?;
    Ok(Prepared {
        settings,
        instances,
        pipeline,
        out: data.out.clone().or_else(|| file.out.clone()),
    })
}

fn eval_err(e: eval::EvalError) -> CliError {
    match e {
        eval::EvalError::Io { .. } => CliError::Other(e.to_string()),
        eval::EvalError::MissingGold(_) | eval::EvalError::NoInstances => {
            CliError::Data(e.to_string())
        }
        _ => CliError::Config(e.to_string()),
    }
}

fn finish(
    reports: &mut [EvalReport],
    settings: &Settings,
    out_dir: Option<&Path>,
    json: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let snapshot = serde_json::to_value(settings).expect("settings serialize");
    for r in reports.iter_mut() {
        r.settings = Some(snapshot.clone());
    }
    if let Some(dir) = out_dir {
        eval::write_outputs(dir, reports).map_err(eval_err)?;
    }
    let body = if json {
        match &*reports {
            [one] => one.to_json_pretty() + "\n",
            many => serde_json::to_string_pretty(many).expect("reports serialize") + "\n",
        }
    } else {
        eval::comparison_table(reports)
    };
    out.write_all(body.as_bytes())
        .map_err(|e| CliError::Other(e.to_string()))?;
    if let Some(r) = reports
        .iter()
        .find(|r| r.claims > 0 && r.counts.error_count == r.claims)
    {
        return Err(CliError::Backend(format!(
            "variant {}: every claim failed; first error: {}",
            r.variant,
            r.rows[0].error.as_deref().unwrap_or("")
        )));
    }
    if reports.iter().any(|r| r.interrupted) {
        return Err(CliError::Other(
            "interrupted; partial results written".into(),
        ));
    }
    Ok(())
}

fn eval_options(p: &Prepared, cancel: Arc<AtomicBool>) -> EvalOptions {
    EvalOptions {
        workers: p.settings.workers,
        trace_dir: p.out.as_ref().map(|d| d.join("traces")),
        cancel: Some(cancel),
    }
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load_file_config(&args.common)?;
    let p = prepare(&args.data, &args.common, &file)?;
    let opts = eval_options(&p, install_interrupt_handler());
    let report = eval::run_eval(&p.instances, &p.pipeline, &opts).map_err(eval_err)?;
    finish(
        &mut [report],
        &p.settings,
        p.out.as_deref(),
        args.data.json,
        out,
    )
}

fn cmd_ablate(args: &AblateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load_file_config(&args.common)?;
    let list = args
        .variants
        .clone()
        .or_else(|| file.variants.clone())
        .unwrap_or_else(|| DEFAULT_VARIANTS.to_owned());
    let variants = AblationVariant::parse_list(&list).map_err(CliError::Config)?;
    let p = prepare(&args.data, &args.common, &file)?;
    let opts = eval_options(&p, install_interrupt_handler());
    let mut reports =
        eval::run_ablation_matrix(&p.instances, &p.pipeline, &variants, &opts).map_err(eval_err)?;
    finish(
        &mut reports,
        &p.settings,
        p.out.as_deref(),
        args.data.json,
        out,
    )
}

fn cmd_cache(args: &CacheArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = args
        .cache_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
    let cache = ResponseCache::open(&dir).map_err(|e| CliError::Config(e.to_string()))?;
    let line = match args.action {
        CacheAction::Stats => {
            let s = cache.stats().map_err(|e| CliError::Other(e.to_string()))?;
            format!(
                "{}: {} entries, {} bytes\n",
                dir.display(),
                s.entries,
                s.bytes
            )
        }
        CacheAction::Clear => {
            let n = cache.clear().map_err(|e| CliError::Other(e.to_string()))?;
            format!("{}: removed {n} entries\n", dir.display())
        }
    };
    out.write_all(line.as_bytes())
        .map_err(|e| CliError::Other(e.to_string()))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Verify(a) => cmd_verify(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Ablate(a) => cmd_ablate(a, out),
        Command::Cache(a) => cmd_cache(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("claimpipe: {e}");
            e.exit_code()
        }
    }
}
