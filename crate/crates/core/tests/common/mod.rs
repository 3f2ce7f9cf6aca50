#![allow(dead_code)]

use emplab::encode::Encoding;
use emplab::runner::{TranscriptRecord, TrialStatus};
use emplab::{Answer, Origin, TaskInstance, TaskKind, Verdict};

/// A completed sorting record with the given outcome and latency.
pub fn record(n: usize, origin: Origin, correct: bool, latency_s: f64) -> TranscriptRecord {
    record_for(TaskKind::Sort, n, Encoding::Digits, origin, correct, latency_s)
}

pub fn record_for(
    task: TaskKind,
    n: usize,
    encoding: Encoding,
    origin: Origin,
    correct: bool,
    latency_s: f64,
) -> TranscriptRecord {
    let mut instance = TaskInstance::sort((0..n as i64).rev().collect());
    instance.task = task;
    instance.origin = origin;
    TranscriptRecord {
        plan_id: "synthetic".into(),
        trial: 0,
        origin,
        task,
        requested_n: n,
        repetition: 0,
        encoding,
        instance: Some(instance),
        prompt: String::new(),
        response: Some(String::new()),
        latency_s,
        input_tokens: 0,
        output_tokens: 0,
        answer: Some(Answer::NumberList(Vec::new())),
        verdict: Some(if correct {
            Verdict::correct()
        } else {
            Verdict::incorrect([emplab::FailureMode::MissingElements])
        }),
        status: TrialStatus::Completed,
        generation: None,
        model_id: "synthetic".into(),
        attempts: 1,
        timestamp: "2024-01-01T00:00:00.000Z".into(),
    }
}

/// `total` records for one group, the first `correct` of them correct.
pub fn group(n: usize, origin: Origin, correct: usize, total: usize) -> Vec<TranscriptRecord> {
    (0..total)
        .map(|i| record(n, origin, i < correct, 1.0 + i as f64 / 100.0))
        .collect()
}

/// Sorting records whose aggregates match the published random versus
/// familiar table: (size, random correct of 100, familiar correct, familiar
/// count).
pub const TABLE1: [(usize, usize, usize, usize); 5] = [
    (10, 99, 100, 100),
    (20, 95, 100, 100),
    (30, 81, 95, 100),
    (40, 66, 82, 122),
    (50, 56, 113, 161),
];

pub fn table1_records() -> Vec<TranscriptRecord> {
    let mut out = Vec::new();
    for (n, random, familiar, count) in TABLE1 {
        out.extend(group(n, Origin::Generated, random, 100));
        out.extend(group(n, Origin::LlmFamiliar, familiar, count));
    }
    out
}

/// `(start, len)` of the leftmost longest palindrome by checking every
/// substring.
pub fn brute_lps(s: &[char]) -> (usize, usize) {
    let mut best = (0, s.len().min(1));
    for i in 0..s.len() {
        for j in i + 1..=s.len() {
            let w = &s[i..j];
            if w.len() > best.1 && w.iter().eq(w.iter().rev()) {
                best = (i, w.len());
            }
        }
    }
    best
}

/// Whether some nonempty subset of `xs` sums to `target`, by enumerating all
/// 2^n masks.
pub fn brute_subset_sum(xs: &[i64], target: i64) -> bool {
    (1u64..1 << xs.len()).any(|mask| {
        xs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).sum::<i64>() == target
    })
}
