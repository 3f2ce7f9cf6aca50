//! Harness for measuring how often, and how fast, a language model solves
//! classic computational problems when simply asked to.
//!
//! The pipeline is: [`problems`] draws seeded instances and owns the exact
//! oracles, [`encode`] turns instances into prompts (digits or number words)
//! and responses back into answers, [`backends`] answers prompts (a live
//! chat-completions endpoint or a seeded mock), [`runner`] sweeps a plan and
//! writes a resumable JSONL transcript, [`analysis`] aggregates the
//! transcript and [`report`] renders CSV, SVG and markdown.

pub mod analysis;
pub mod backends;
pub mod encode;
pub mod exec;
pub mod problems;
pub mod report;
pub mod runner;
pub mod seed;

pub use problems::{Answer, FailureMode, Origin, TaskInstance, TaskKind, Verdict};
