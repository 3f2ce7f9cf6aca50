use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentPlan, RunError};
use crate::backends::ChatExchange;
use crate::encode::{Encoding, PromptTemplates};
use crate::problems::{Answer, Origin, TaskInstance, TaskKind, Verdict};

pub const TRANSCRIPT_SCHEMA: &str = "emplab-transcript";
pub const TRANSCRIPT_VERSION: u32 = 1;

/// First line of every transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub schema: String,
    pub version: u32,
    pub plan: ExperimentPlan,
    pub templates: PromptTemplates,
}

impl TranscriptHeader {
    pub fn new(plan: &ExperimentPlan, templates: &PromptTemplates) -> Self {
        TranscriptHeader {
            schema: TRANSCRIPT_SCHEMA.into(),
            version: TRANSCRIPT_VERSION,
            plan: plan.clone(),
            templates: templates.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialStatus {
    Completed,
    /// The backend failed even after retries; no answer was obtained.
    BackendFailed { error: String },
    /// A familiarity generation produced no usable list.
    GenerationDropped { reason: String },
}

/// One trial, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub plan_id: String,
    pub trial: u64,
    pub origin: Origin,
    pub task: TaskKind,
    /// Size asked for; `instance.n` holds the actual size.
    pub requested_n: usize,
    pub repetition: u32,
    pub encoding: Encoding,
    pub instance: Option<TaskInstance>,
    pub prompt: String,
    pub response: Option<String>,
    pub latency_s: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub answer: Option<Answer>,
    pub verdict: Option<Verdict>,
    pub status: TrialStatus,
    /// For familiar trials, the call that produced the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<ChatExchange>,
    pub model_id: String,
    pub attempts: u32,
    pub timestamp: String,
}

impl TranscriptRecord {
    pub fn is_completed(&self) -> bool {
        self.status == TrialStatus::Completed
    }

    /// Actual instance size, falling back to the requested one.
    pub fn n(&self) -> usize {
        self.instance.as_ref().map_or(self.requested_n, |i| i.n)
    }

    pub fn is_correct(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.correct)
    }
}

/// A parsed transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<TranscriptRecord>,
}

/// Reads a complete transcript. Any malformed line is an error.
pub fn read_transcript(path: &Path) -> Result<Transcript, RunError> {
    let file = File::open(path).map_err(|e| RunError::Sink(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| RunError::CorruptTranscript { line: 1, reason: "empty file".into() })?
        .map_err(|e| RunError::Sink(e.to_string()))?;
    let header = parse_header(&header_line)?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| RunError::Sink(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| RunError::CorruptTranscript {
            line: i + 2,
            reason: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(Transcript { header, records })
}

fn parse_header(line: &str) -> Result<TranscriptHeader, RunError> {
    let header: TranscriptHeader = serde_json::from_str(line).map_err(|e| RunError::CorruptTranscript {
        line: 1,
        reason: format!("bad header: {e}"),
    })?;
    if header.schema != TRANSCRIPT_SCHEMA || header.version != TRANSCRIPT_VERSION {
        return Err(RunError::CorruptTranscript {
            line: 1,
            reason: format!("unsupported schema {} v{}", header.schema, header.version),
        });
    }
    Ok(header)
}

/// Append-only JSONL writer; each record is flushed before the next.
pub(crate) struct TranscriptWriter {
    out: BufWriter<File>,
}

impl TranscriptWriter {
    pub(crate) fn create(path: &Path, header: &TranscriptHeader) -> Result<Self, RunError> {
        let file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists => RunError::TranscriptExists(path.to_path_buf()),
                _ => RunError::Sink(format!("{}: {e}", path.display())),
            })?;
        let mut w = TranscriptWriter { out: BufWriter::new(file) };
        w.write_line(header)?;
        Ok(w)
    }

    /// Opens an existing transcript for resumption. Returns the writer and
    /// the records already present. A torn final line is cut off so its
    /// trial runs again; damage anywhere else is an error.
    pub(crate) fn resume(
        path: &Path,
        expected: &TranscriptHeader,
    ) -> Result<(Self, Vec<TranscriptRecord>), RunError> {
        let sink = |e: std::io::Error| RunError::Sink(format!("{}: {e}", path.display()));
        let text = std::fs::read(path).map_err(sink)?;
        if text.is_empty() {
            let file = OpenOptions::new().write(true).open(path).map_err(sink)?;
            let mut w = TranscriptWriter { out: BufWriter::new(file) };
            w.write_line(expected)?;
            return Ok((w, Vec::new()));
        }

        // Split into lines, remembering each line's byte offset.
        let mut lines: Vec<(usize, &[u8])> = Vec::new();
        let mut start = 0;
        for (i, &b) in text.iter().enumerate() {
            if b == b'\n' {
                lines.push((start, &text[start..i]));
                start = i + 1;
            }
        }
        if start < text.len() {
            lines.push((start, &text[start..]));
        }

        let header_text = std::str::from_utf8(lines[0].1).unwrap_or("");
        let header = parse_header(header_text)?;
        if header.plan.plan_id != expected.plan.plan_id {
            return Err(RunError::PlanMismatch(format!(
                "transcript belongs to plan {:?}, not {:?}",
                header.plan.plan_id, expected.plan.plan_id
            )));
        }
        let as_json = |h: &TranscriptHeader| serde_json::to_value(h).ok();
        if as_json(&header) != as_json(expected) {
            return Err(RunError::PlanMismatch(
                "plan settings or prompt templates differ from the transcript header".into(),
            ));
        }

        let mut records = Vec::new();
        let mut keep_len = text.len();
        let last = lines.len() - 1;
        for (idx, &(offset, bytes)) in lines.iter().enumerate().skip(1) {
            if bytes.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let parsed = std::str::from_utf8(bytes)
                .ok()
                .and_then(|s| serde_json::from_str::<TranscriptRecord>(s).ok());
            match parsed {
                Some(r) => records.push(r),
                None if idx == last => keep_len = offset,
                None => {
                    return Err(RunError::CorruptTranscript {
                        line: idx + 1,
                        reason: "malformed record before the end of the file".into(),
                    })
                }
            }
        }

        let mut file = OpenOptions::new().write(true).open(path).map_err(sink)?;
        file.set_len(keep_len as u64).map_err(sink)?;
        file.seek(SeekFrom::End(0)).map_err(sink)?;
        let mut w = TranscriptWriter { out: BufWriter::new(file) };
        if keep_len > 0 && text[keep_len - 1] != b'\n' {
            w.out.write_all(b"\n").map_err(sink)?;
        }
        Ok((w, records))
    }

    pub(crate) fn append(&mut self, record: &TranscriptRecord) -> Result<(), RunError> {
        self.write_line(record)
    }

    fn write_line<T: Serialize>(&mut self, value: &T) -> Result<(), RunError> {
        let sink = |e: std::io::Error| RunError::Sink(e.to_string());
        serde_json::to_writer(&mut self.out, value).map_err(|e| RunError::Sink(e.to_string()))?;
        self.out.write_all(b"\n").map_err(sink)?;
        self.out.flush().map_err(sink)
    }
}
