//! Executes experiment plans against a backend and persists every trial to a
//! resumable JSONL transcript.

mod plan;
mod transcript;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::backends::{Backend, BackendError, ChatExchange, Request, RequestContext};
use crate::encode::{
    parse_number_list, parse_response, render_generation_prompt, render_prompt_with, Encoding,
    PromptTemplates,
};
use crate::exec::Executor;
use crate::problems::{gen_instance, verify, Origin, TaskInstance, TaskKind};
use crate::seed::mix64;

pub use plan::{BackendSettings, ExperimentPlan, FamiliaritySpec, TrialKey};
pub use transcript::{
    read_transcript, Transcript, TranscriptHeader, TranscriptRecord, TrialStatus,
    TRANSCRIPT_SCHEMA, TRANSCRIPT_VERSION,
};

use transcript::TranscriptWriter;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("transcript does not match the plan: {0}")]
    PlanMismatch(String),
    #[error("transcript line {line} is corrupt: {reason}")]
    CorruptTranscript { line: usize, reason: String },
    #[error("{0} already exists; pass resume to continue it")]
    TranscriptExists(PathBuf),
    #[error("cannot write transcript: {0}")]
    Sink(String),
    #[error("backend rejected credentials: {0}")]
    Auth(String),
}

/// Knobs that do not belong in the plan because they do not change results.
#[derive(Default)]
pub struct RunOptions {
    /// Continue an existing transcript instead of creating a new one.
    pub resume: bool,
    /// Stop after this many new trials (simulates an interrupted run).
    pub stop_after: Option<usize>,
    /// Overrides the executor built from `plan.max_in_flight`.
    pub executor: Option<Executor>,
    /// Overrides the default prompt templates.
    pub templates: Option<PromptTemplates>,
    /// Fixed timestamp for every record, for reproducible fixtures.
    pub fixed_timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub planned: usize,
    pub already_done: usize,
    pub executed: usize,
    pub failed: usize,
}

impl RunSummary {
    pub fn complete(&self) -> bool {
        self.already_done + self.executed == self.planned
    }
}

/// Runs `plan` and writes the transcript to `path`, or continues it when
/// `options.resume` is set.
///
/// Trials run in batches of at most `max_in_flight` concurrent backend
/// calls; each batch's records are written in trial order before the next
/// batch starts, so the file is always a prefix of the uninterrupted run.
pub fn run(
    plan: &ExperimentPlan,
    backend: &dyn Backend,
    path: &Path,
    options: RunOptions,
) -> Result<RunSummary, RunError> {
    plan.validate()?;
    let templates = options.templates.clone().unwrap_or_default();
    let header = TranscriptHeader::new(plan, &templates);
    let (mut writer, existing) = if options.resume && path.exists() {
        TranscriptWriter::resume(path, &header)?
    } else {
        (TranscriptWriter::create(path, &header)?, Vec::new())
    };

    let trials = plan.trials();
    let mut done = HashSet::new();
    for r in &existing {
        if r.plan_id != plan.plan_id || r.trial as usize >= trials.len() {
            return Err(RunError::PlanMismatch(format!("record for unknown trial {}", r.trial)));
        }
        if !done.insert(r.trial) {
            return Err(RunError::PlanMismatch(format!("trial {} recorded twice", r.trial)));
        }
    }
    let mut pending: Vec<&TrialKey> = trials.iter().filter(|t| !done.contains(&t.ordinal)).collect();
    if let Some(limit) = options.stop_after {
        pending.truncate(limit);
    }

    let executor = options
        .executor
        .unwrap_or_else(|| Executor::parallel(plan.max_in_flight));
    let batch = plan.max_in_flight.max(1);
    let ctx = TrialContext {
        plan,
        backend,
        templates: &templates,
        fixed_timestamp: options.fixed_timestamp.as_deref(),
    };

    let mut summary = RunSummary {
        planned: trials.len(),
        already_done: existing.len(),
        executed: 0,
        failed: 0,
    };
    for chunk in pending.chunks(batch) {
        let outcomes = executor.map(chunk, |key| ctx.execute(key));
        for outcome in outcomes {
            let record = outcome?;
            if !record.is_completed() {
                summary.failed += 1;
            }
            writer.append(&record)?;
            summary.executed += 1;
        }
    }
    Ok(summary)
}

struct TrialContext<'a> {
    plan: &'a ExperimentPlan,
    backend: &'a dyn Backend,
    templates: &'a PromptTemplates,
    fixed_timestamp: Option<&'a str>,
}

impl TrialContext<'_> {
    fn timestamp(&self) -> String {
        match self.fixed_timestamp {
            Some(t) => t.to_string(),
            None => chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }

    fn blank(&self, key: &TrialKey) -> TranscriptRecord {
        TranscriptRecord {
            plan_id: self.plan.plan_id.clone(),
            trial: key.ordinal,
            origin: key.origin,
            task: key.task,
            requested_n: key.size,
            repetition: key.repetition,
            encoding: key.encoding.clone(),
            instance: None,
            prompt: String::new(),
            response: None,
            latency_s: 0.0,
            input_tokens: 0,
            output_tokens: 0,
            answer: None,
            verdict: None,
            status: TrialStatus::Completed,
            generation: None,
            model_id: self.backend.model_id(),
            attempts: 0,
            timestamp: String::new(),
        }
    }

    fn execute(&self, key: &TrialKey) -> Result<TranscriptRecord, RunError> {
        let mut record = self.blank(key);
        let seed = self.plan.seed_for(key);
        let instance = match key.origin {
            Origin::Generated => gen_instance(key.task, seed, key.size, &self.plan.gen_config())
                .map_err(|e| RunError::InvalidPlan(e.to_string()))?,
            Origin::LlmFamiliar => {
                let spec = self.plan.familiarity.as_ref().expect("familiar trials need a spec");
                let generated = request_familiar(self.backend, self.templates, key.size, spec.min, spec.max, seed);
                let (exchange, parsed) = match generated {
                    Ok(pair) => pair,
                    Err(e) => return self.failed(record, e),
                };
                record.generation = Some(exchange.clone());
                match parsed {
                    Some(numbers) => familiar_instance(numbers, mix64(seed ^ 0x9e37_79b9_7f4a_7c15)),
                    None => {
                        record.prompt = exchange.prompt;
                        record.response = Some(exchange.response);
                        record.status = TrialStatus::GenerationDropped {
                            reason: "no non-empty integer list in the response".into(),
                        };
                        record.timestamp = self.timestamp();
                        return Ok(record);
                    }
                }
            }
        };
        record.prompt = render_prompt_with(self.templates, &instance, &key.encoding)
            .map_err(|e| RunError::InvalidPlan(format!("trial {}: {e}", key.ordinal)))?;
        let request = Request {
            prompt: record.prompt.clone(),
            context: RequestContext::Solve {
                instance: instance.clone(),
                encoding: key.encoding.clone(),
                stream: self.plan.stream_for(key),
            },
        };
        record.instance = Some(instance);
        match self.backend.complete(&request) {
            Ok(exchange) => {
                let instance = record.instance.as_ref().expect("set above");
                let answer = parse_response(key.task, &exchange.response, &key.encoding);
                record.verdict = Some(verify(instance, &answer));
                record.answer = Some(answer);
                record.response = Some(exchange.response);
                record.latency_s = exchange.latency_s;
                record.input_tokens = exchange.input_tokens;
                record.output_tokens = exchange.output_tokens;
                record.model_id = exchange.model_id;
                record.attempts = exchange.attempts;
                record.timestamp = self.timestamp();
                Ok(record)
            }
            Err(e) => self.failed(record, e),
        }
    }

    fn failed(&self, mut record: TranscriptRecord, error: BackendError) -> Result<TranscriptRecord, RunError> {
        if let BackendError::AuthFailure(msg) = error {
            return Err(RunError::Auth(msg));
        }
        record.status = TrialStatus::BackendFailed { error: error.to_string() };
        record.timestamp = self.timestamp();
        Ok(record)
    }
}

fn familiar_instance(numbers: Vec<i64>, seed: u64) -> TaskInstance {
    let mut instance = TaskInstance::sort(numbers);
    instance.seed = seed;
    instance.origin = Origin::LlmFamiliar;
    instance
}

/// One generation call. The parsed list is `None` when the response holds
/// no non-empty integer list.
fn request_familiar(
    backend: &dyn Backend,
    templates: &PromptTemplates,
    n: usize,
    min: i64,
    max: i64,
    seed: u64,
) -> Result<(ChatExchange, Option<Vec<i64>>), BackendError> {
    let request = Request {
        prompt: render_generation_prompt(templates, n, min, max),
        context: RequestContext::Generate { n, min, max, seed },
    };
    let exchange = backend.complete(&request)?;
    let parsed = parse_number_list(&exchange.response, &Encoding::Digits).filter(|xs| !xs.is_empty());
    Ok((exchange, parsed))
}

/// Result of [`gen_familiar_instances`].
#[derive(Debug, Clone, PartialEq)]
pub struct FamiliarBatch {
    pub instances: Vec<TaskInstance>,
    /// Generations that failed or could not be parsed.
    pub dropped: usize,
}

/// Asks the backend `count` times for `n` random integers in `[0, 10·n]`
/// and turns every parseable list into a sorting instance whose `n` is the
/// length actually returned.
pub fn gen_familiar_instances(backend: &dyn Backend, n: usize, count: usize) -> FamiliarBatch {
    gen_familiar_instances_with(backend, &PromptTemplates::default(), n, count, 0, 10 * n as i64, 0)
}

pub fn gen_familiar_instances_with(
    backend: &dyn Backend,
    templates: &PromptTemplates,
    n: usize,
    count: usize,
    min: i64,
    max: i64,
    base_seed: u64,
) -> FamiliarBatch {
    let mut batch = FamiliarBatch {
        instances: Vec::new(),
        dropped: 0,
    };
    for k in 0..count as u64 {
        let seed = mix64(mix64(base_seed) ^ mix64(k) ^ n as u64);
        match request_familiar(backend, templates, n, min, max, seed) {
            Ok((_, Some(numbers))) => batch.instances.push(familiar_instance(numbers, seed)),
            _ => batch.dropped += 1,
        }
    }
    batch
}

/// Whether a task/encoding pair can be rendered at all.
pub fn applicable(task: TaskKind, encoding: &Encoding) -> bool {
    task.is_numeric() || *encoding == Encoding::Digits
}
