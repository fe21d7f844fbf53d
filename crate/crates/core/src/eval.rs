//! Macro-F1 scoring, dataset evaluation and the ablation matrix.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{
    Ablation, ClaimInstance, ModelSnapshot, Pipeline, PipelineConfig, TokenUsage, Verdict,
};

pub const EVAL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricError {
    #[error("{predictions} predictions but {golds} gold labels")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("no predictions to score")]
    Empty,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no instances to evaluate")]
    NoInstances,
    #[error("instance {0} has no gold label")]
    MissingGold(String),
    #[error("no ablation variants given")]
    NoVariants,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.to_owned(),
        source,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ClassCounts {
    /// Precision, recall and F1 on the 0 to 100 scale; any 0/0 is 0.
    pub fn metrics(&self) -> ClassMetrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let p = ratio(self.tp, self.tp + self.fp);
        let r = ratio(self.tp, self.tp + self.fn_);
        let f1 = if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        };
        ClassMetrics {
            precision: 100.0 * p,
            recall: 100.0 * r,
            f1: 100.0 * f1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_class: ClassCounts,
    pub false_class: ClassCounts,
    /// Claims whose pipeline failed; they are scored as predicted False.
    pub error_count: usize,
    /// Claims with at least one abstained subclaim.
    pub abstain_count: usize,
}

impl ConfusionCounts {
    pub fn add(&mut self, predicted: Verdict, gold: Verdict) {
        let (hit, other) = match gold {
            Verdict::True => (&mut self.true_class, &mut self.false_class),
            Verdict::False => (&mut self.false_class, &mut self.true_class),
        };
        if predicted == gold {
            hit.tp += 1;
        } else {
            hit.fn_ += 1;
            other.fp += 1;
        }
    }

    pub fn from_pairs(predictions: &[Verdict], golds: &[Verdict]) -> Result<Self, MetricError> {
        if predictions.len() != golds.len() {
            return Err(MetricError::LengthMismatch {
                predictions: predictions.len(),
                golds: golds.len(),
            });
        }
        if predictions.is_empty() {
            return Err(MetricError::Empty);
        }
        let mut c = ConfusionCounts::default();
        for (&p, &g) in predictions.iter().zip(golds) {
            c.add(p, g);
        }
        Ok(c)
    }

    /// Number of scored claims.
    pub fn total(&self) -> usize {
        self.true_class.tp + self.false_class.tp + self.true_class.fp + self.true_class.fn_
    }

    pub fn macro_f1(&self) -> f64 {
        (self.true_class.metrics().f1 + self.false_class.metrics().f1) / 2.0
    }
}

/// Macro-averaged F1 over the True and False classes, on the 0 to 100 scale.
pub fn macro_f1(predictions: &[Verdict], golds: &[Verdict]) -> Result<f64, MetricError> {
    ConfusionCounts::from_pairs(predictions, golds).map(|c| c.macro_f1())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRow {
    pub id: String,
    pub gold: Verdict,
    pub predicted: Verdict,
    /// Abstained subclaims.
    pub abstained: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub variant: String,
    pub config: PipelineConfig,
    pub models: ModelSnapshot,
    /// Run settings supplied by the caller (dataset, backend, paths).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<serde_json::Value>,
    pub claims: usize,
    pub counts: ConfusionCounts,
    pub true_class: ClassMetrics,
    pub false_class: ClassMetrics,
    pub macro_f1: f64,
    pub rows: Vec<EvalRow>,
    pub usage: TokenUsage,
    /// Set when the run was cancelled before every claim finished.
    pub interrupted: bool,
    pub timing: Timing,
}

impl EvalReport {
    fn from_rows(
        variant: String,
        pipeline: &Pipeline,
        rows: Vec<EvalRow>,
        usage: TokenUsage,
        interrupted: bool,
        timing: Timing,
    ) -> Self {
        let mut counts = ConfusionCounts::default();
        for row in &rows {
            counts.add(row.predicted, row.gold);
            counts.error_count += usize::from(row.error.is_some());
            counts.abstain_count += usize::from(row.abstained > 0);
        }
        EvalReport {
            schema_version: EVAL_SCHEMA_VERSION,
            variant,
            config: pipeline.config.clone(),
            models: pipeline.models(),
            settings: None,
            claims: rows.len(),
            true_class: counts.true_class.metrics(),
            false_class: counts.false_class.metrics(),
            macro_f1: counts.macro_f1(),
            counts,
            rows,
            usage,
            interrupted,
            timing,
        }
    }

    /// Macro-F1 recomputed from the rows.
    pub fn recomputed_macro_f1(&self) -> Result<f64, MetricError> {
        let preds: Vec<_> = self.rows.iter().map(|r| r.predicted).collect();
        let golds: Vec<_> = self.rows.iter().map(|r| r.gold).collect();
        macro_f1(&preds, &golds)
    }

    /// Pretty JSON with timing zeroed, for comparing runs.
    pub fn body_json(&self) -> String {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Claims verified concurrently; 0 means rayon's default.
    pub workers: usize,
    /// Per-claim traces are written here as claims finish.
    pub trace_dir: Option<PathBuf>,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl EvalOptions {
    fn cancelled(&self) -> bool {
        self.cancel
            .as_ref()
            .is_some_and(|c| c.load(Ordering::SeqCst))
    }
}

/// Default worker count: logical processors, at most 8.
pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8)
}

fn trace_file_name(id: &str) -> String {
    let safe: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{safe}.json")
}

struct Outcome {
    row: EvalRow,
    usage: TokenUsage,
}

fn evaluate_one(
    pipeline: &Pipeline,
    instance: &ClaimInstance,
    gold: Verdict,
    trace_dir: Option<&Path>,
) -> Result<Outcome, EvalError> {
    let (row, usage, body) = match pipeline.verify_claim(instance) {
        Ok(report) => (
            EvalRow {
                id: instance.id.clone(),
                gold,
                predicted: report.final_verdict,
                abstained: report.abstained_count(),
                error: None,
            },
            report.usage,
            report.to_json_pretty(),
        ),
        Err(e) => {
            log::warn!("{e}");
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "claim_id": instance.id,
                "claim": instance.claim,
                "config": pipeline.config,
                "stage": e.stage,
                "index": e.index,
                "error": e.to_string(),
            }))
            .expect("error trace serializes");
            (
                EvalRow {
                    id: instance.id.clone(),
                    gold,
                    predicted: Verdict::False,
                    abstained: 0,
                    error: Some(e.to_string()),
                },
                TokenUsage::default(),
                body,
            )
        }
    };
    if let Some(dir) = trace_dir {
        let path = dir.join(trace_file_name(&instance.id));
        std::fs::write(&path, body + "\n").map_err(io_err(&path))?;
    }
    Ok(Outcome { row, usage })
}

fn run_variant(
    variant: String,
    instances: &[ClaimInstance],
    pipeline: &Pipeline,
    opts: &EvalOptions,
    trace_dir: Option<&Path>,
) -> Result<EvalReport, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::NoInstances);
    }
    pipeline.config.validate().map_err(EvalError::Config)?;
    let golds = instances
        .iter()
        .map(|i| {
            i.gold_label
                .ok_or_else(|| EvalError::MissingGold(i.id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(dir) = trace_dir {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| EvalError::Config(format!("worker pool: {e}")))?;

    let start = Instant::now();
    let outcomes: Vec<Option<Outcome>> = pool.install(|| {
        instances
            .par_iter()
            .zip(golds.par_iter())
            .map(|(inst, &gold)| {
                if opts.cancelled() {
                    return Ok(None);
                }
                evaluate_one(pipeline, inst, gold, trace_dir).map(Some)
            })
            .collect::<Result<_, EvalError>>()
    })?;
    let timing = Timing {
        wall_clock_ms: start.elapsed().as_millis() as u64,
    };

    let interrupted = outcomes.iter().any(Option::is_none);
    let mut usage = TokenUsage::default();
    let rows = outcomes
        .into_iter()
        .flatten()
        .map(|o| {
            usage += o.usage;
            o.row
        })
        .collect();
    Ok(EvalReport::from_rows(
        variant,
        pipeline,
        rows,
        usage,
        interrupted,
        timing,
    ))
}

/// Verifies every instance under `pipeline.config`. Per-claim failures are
/// scored as False and counted; only configuration and I/O errors abort.
pub fn run_eval(
    instances: &[ClaimInstance],
    pipeline: &Pipeline,
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let name = AblationVariant::from_config(&pipeline.config).to_string();
    run_variant(name, instances, pipeline, opts, opts.trace_dir.as_deref())
}

/// One row of the ablation matrix: an ablation plus an optional claim-context
/// override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationVariant {
    pub ablation: Ablation,
    pub with_claim_context: Option<bool>,
}

impl AblationVariant {
    pub fn new(ablation: Ablation) -> Self {
        AblationVariant {
            ablation,
            with_claim_context: None,
        }
    }

    fn from_config(cfg: &PipelineConfig) -> Self {
        AblationVariant::new(cfg.ablation)
    }

    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut cfg = base.clone().with_ablation(self.ablation);
        if let Some(on) = self.with_claim_context {
            cfg.with_claim_context = on;
        }
        cfg
    }

    /// Parses a comma-separated list; an empty list is an error.
    pub fn parse_list(s: &str) -> Result<Vec<Self>, String> {
        let variants = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Self>, _>>()?;
        if variants.is_empty() {
            return Err("variant list is empty".into());
        }
        Ok(variants)
    }
}

impl fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.ablation, self.with_claim_context) {
            (Ablation::None, Some(true)) => f.write_str("with-claim"),
            (Ablation::None, Some(false)) => f.write_str("without-claim"),
            (a, None) => f.write_str(a.short_name()),
            (a, Some(true)) => write!(f, "{}+with-claim", a.short_name()),
            (a, Some(false)) => write!(f, "{}+without-claim", a.short_name()),
        }
    }
}

impl FromStr for AblationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, ctx) = match s.trim().split_once('+') {
            Some((h, c)) => (h, Some(c)),
            None => (s.trim(), None),
        };
        let context = |c: &str| match c.to_ascii_lowercase().as_str() {
            "with-claim" => Ok(true),
            "without-claim" => Ok(false),
            other => Err(format!("unknown claim-context setting `{other}`")),
        };
        if ctx.is_none() {
            if let Ok(on) = context(head) {
                return Ok(AblationVariant {
                    ablation: Ablation::None,
                    with_claim_context: Some(on),
                });
            }
        }
        Ok(AblationVariant {
            ablation: head.parse()?,
            with_claim_context: ctx.map(context).transpose()?,
        })
    }
}

/// Runs one evaluation per variant over the same backends, so cached
/// responses are shared where prompts coincide. Traces for each variant go
/// to `<trace_dir>/<variant>/`.
pub fn run_ablation_matrix(
    instances: &[ClaimInstance],
    pipeline: &Pipeline,
    variants: &[AblationVariant],
    opts: &EvalOptions,
) -> Result<Vec<EvalReport>, EvalError> {
    if variants.is_empty() {
        return Err(EvalError::NoVariants);
    }
    let mut reports = Vec::with_capacity(variants.len());
    for v in variants {
        if opts.cancelled() {
            break;
        }
        let p = pipeline.with_config(v.apply(&pipeline.config));
        let dir = opts.trace_dir.as_ref().map(|d| d.join(v.to_string()));
        reports.push(run_variant(
            v.to_string(),
            instances,
            &p,
            opts,
            dir.as_deref(),
        )?);
    }
    Ok(reports)
}

/// Aligned plain-text table, one line per report.
pub fn comparison_table(reports: &[EvalReport]) -> String {
    let header = [
        "variant",
        "claims",
        "macro-F1",
        "F1 True",
        "F1 False",
        "errors",
        "abstained",
    ];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            [
                format!(
                    "{}{}",
                    r.variant,
                    if r.interrupted { " (interrupted)" } else { "" }
                ),
                r.claims.to_string(),
                format!("{:.2}", r.macro_f1),
                format!("{:.2}", r.true_class.f1),
                format!("{:.2}", r.false_class.f1),
                r.counts.error_count.to_string(),
                r.counts.abstain_count.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&header);
    for row in &rows {
        line(&row.each_ref().map(String::as_str));
    }
    out
}

/// Writes `report.json` (an object for one report, an array otherwise) and
/// `table.txt` into `dir`.
pub fn write_outputs(dir: &Path, reports: &[EvalReport]) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json = match reports {
        [one] => one.to_json_pretty(),
        many => serde_json::to_string_pretty(many).expect("reports serialize"),
    };
    let path = dir.join("report.json");
    std::fs::write(&path, json + "\n").map_err(io_err(&path))?;
    let path = dir.join("table.txt");
    std::fs::write(&path, comparison_table(reports)).map_err(io_err(&path))?;
    Ok(())
}
