//! Aggregation of transcripts into per-group correctness, latency and
//! expected-time-to-first-correct metrics.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::encode::Encoding;
use crate::problems::{Origin, TaskKind};
use crate::runner::TranscriptRecord;

/// Two-sided 95% normal quantile, as conventionally rounded.
pub const Z_95: f64 = 1.96;
/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

/// Rows with fewer trials than this are flagged as unreliable.
pub const MIN_RELIABLE_TRIALS: usize = 5;

/// A duration that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seconds {
    Finite(f64),
    Infinite,
}

impl Seconds {
    pub fn finite(self) -> Option<f64> {
        match self {
            Seconds::Finite(s) => Some(s),
            Seconds::Infinite => None,
        }
    }
}

impl fmt::Display for Seconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seconds::Finite(s) => match f.precision() {
                Some(p) => write!(f, "{s:.p$}"),
                None => write!(f, "{s}"),
            },
            Seconds::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Seconds {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Seconds::Finite(v) => s.serialize_f64(*v),
            Seconds::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Seconds::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(Seconds::Infinite),
            Raw::Text(t) => t
                .parse()
                .map(Seconds::Finite)
                .map_err(|_| serde::de::Error::custom(format!("bad duration {t:?}"))),
        }
    }
}

/// Metrics for one (task, n, encoding, origin) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub task: TaskKind,
    pub n: usize,
    pub encoding: Encoding,
    pub origin: Origin,
    pub trials: usize,
    pub correct: usize,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean latency in seconds (median when so configured).
    pub mean_latency: f64,
    pub e_first_correct: Seconds,
    /// Too few trials to take the row at face value.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencyStat {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub z: f64,
    pub latency: LatencyStat,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            z: Z_95,
            latency: LatencyStat::Mean,
        }
    }
}

/// Wilson score interval for `correct` successes out of `trials`, clamped
/// to `[0, 1]`. Returns `(0, 1)` for zero trials.
pub fn wilson_interval(correct: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = correct as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if correct == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let high = if correct == trials { 1.0 } else { (centre + half).clamp(p, 1.0) };
    (low, high)
}

/// Expected time until the first correct answer when every attempt costs
/// `mean_latency` and succeeds independently with probability `p_hat`.
pub fn expected_time_first_correct(mean_latency: f64, p_hat: f64) -> Seconds {
    if p_hat > 0.0 {
        Seconds::Finite(mean_latency / p_hat)
    } else {
        Seconds::Infinite
    }
}

type GroupKey = (TaskKind, usize, Encoding, Origin);

/// Groups completed trials and computes one row per group, sorted by
/// (task, n, encoding, origin). Familiar instances are grouped by their
/// actual size. Trials without an answer (backend failures, dropped
/// generations) are left out.
pub fn aggregate(records: &[TranscriptRecord]) -> Vec<MetricRow> {
    aggregate_with(records, &AnalysisOptions::default())
}

pub fn aggregate_with(records: &[TranscriptRecord], options: &AnalysisOptions) -> Vec<MetricRow> {
    let mut groups: BTreeMap<GroupKey, (usize, Vec<f64>)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.is_completed()) {
        let key = (r.task, r.n(), r.encoding.clone(), r.origin);
        let entry = groups.entry(key).or_default();
        entry.0 += usize::from(r.is_correct());
        entry.1.push(r.latency_s);
    }
    groups
        .into_iter()
        .map(|((task, n, encoding, origin), (correct, mut latencies))| {
            // Sorting first makes the sum independent of record order.
            latencies.sort_by(f64::total_cmp);
            let trials = latencies.len();
            let latency = match options.latency {
                LatencyStat::Mean => latencies.iter().sum::<f64>() / trials as f64,
                LatencyStat::Median => median(&latencies),
            };
            let p_hat = correct as f64 / trials as f64;
            let (ci_low, ci_high) = wilson_interval(correct, trials, options.z);
            MetricRow {
                task,
                n,
                encoding,
                origin,
                trials,
                correct,
                p_hat,
                ci_low,
                ci_high,
                mean_latency: latency,
                e_first_correct: expected_time_first_correct(latency, p_hat),
                flagged: trials < MIN_RELIABLE_TRIALS,
            }
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2]
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) / 2.0
    }
}
