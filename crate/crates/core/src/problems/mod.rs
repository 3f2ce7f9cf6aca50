//! The five benchmark problems: instance generation, reference oracles and
//! answer verification.

mod generate;
mod oracle;
mod verify;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{gen_instance, GenConfig, NumberSpec, DEFAULT_ALPHABET};
pub use oracle::{
    is_palindrome, lps_span, oracle_lps, oracle_search, oracle_sort, oracle_subset_sum, search_linear,
    search_sorted, solve, SUBSET_SUM_CAP,
};
pub use verify::verify;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProblemError {
    #[error("instance size must be at least 1")]
    InvalidSize,
    #[error("cannot draw {n} distinct numbers from [{min}, {max}]")]
    SpecTooNarrow { n: usize, min: i64, max: i64 },
    #[error("invalid number spec: {0}")]
    InvalidSpec(String),
    #[error("subset-sum oracle is capped at {cap} elements, got {n}")]
    SizeCapExceeded { n: usize, cap: usize },
    #[error("unknown task kind {0:?}")]
    UnknownTask(String),
    #[error("no subset sums to the target")]
    NoSolution,
    #[error("instance payload does not match task {0}")]
    MalformedInstance(TaskKind),
}

/// One of the benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Sort,
    SearchSorted,
    SearchUnsorted,
    #[serde(rename = "lps")]
    LongestPalindromicSubstring,
    SubsetSum,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Sort,
        TaskKind::SearchSorted,
        TaskKind::SearchUnsorted,
        TaskKind::LongestPalindromicSubstring,
        TaskKind::SubsetSum,
    ];

    /// Asymptotic cost of the best known classical algorithm.
    pub fn complexity_label(self) -> &'static str {
        match self {
            TaskKind::Sort => "O(n log n)",
            TaskKind::SearchSorted => "O(log n)",
            TaskKind::SearchUnsorted => "O(n)",
            TaskKind::LongestPalindromicSubstring => "O(n)",
            TaskKind::SubsetSum => "O(2^{n/2})",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Sort => "sort",
            TaskKind::SearchSorted => "search_sorted",
            TaskKind::SearchUnsorted => "search_unsorted",
            TaskKind::LongestPalindromicSubstring => "lps",
            TaskKind::SubsetSum => "subset_sum",
        }
    }

    /// Whether the payload is a list of numbers (as opposed to a string).
    pub fn is_numeric(self) -> bool {
        self != TaskKind::LongestPalindromicSubstring
    }

    pub fn is_search(self) -> bool {
        matches!(self, TaskKind::SearchSorted | TaskKind::SearchUnsorted)
    }

    pub(crate) fn index(self) -> u64 {
        match self {
            TaskKind::Sort => 0,
            TaskKind::SearchSorted => 1,
            TaskKind::SearchUnsorted => 2,
            TaskKind::LongestPalindromicSubstring => 3,
            TaskKind::SubsetSum => 4,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match norm.as_str() {
            "sort" | "sorting" => TaskKind::Sort,
            "search_sorted" => TaskKind::SearchSorted,
            "search_unsorted" | "search" => TaskKind::SearchUnsorted,
            "lps" | "palindrome" | "longest_palindromic_substring" => {
                TaskKind::LongestPalindromicSubstring
            }
            "subset_sum" | "ssp" => TaskKind::SubsetSum,
            _ => return Err(ProblemError::UnknownTask(s.to_string())),
        })
    }
}

/// Where an instance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Drawn by the harness's seeded generator.
    #[default]
    Generated,
    /// A sequence produced by the model itself when asked for random numbers.
    LlmFamiliar,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Generated => "generated",
            Origin::LlmFamiliar => "familiar",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "generated" | "random" => Ok(Origin::Generated),
            "familiar" | "llm_familiar" => Ok(Origin::LlmFamiliar),
            other => Err(format!("unknown origin {other:?}")),
        }
    }
}

/// A single problem instance.
///
/// `n` is the length of `numbers` for list tasks and the character count of
/// `text` for the palindrome task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub task: TaskKind,
    pub seed: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub numbers: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub origin: Origin,
}

impl TaskInstance {
    /// A sorting instance over explicit numbers (seed 0).
    pub fn sort(numbers: Vec<i64>) -> Self {
        TaskInstance {
            task: TaskKind::Sort,
            seed: 0,
            n: numbers.len(),
            numbers,
            target: None,
            text: None,
            origin: Origin::Generated,
        }
    }

    pub fn search(task: TaskKind, numbers: Vec<i64>, target: i64) -> Self {
        debug_assert!(task.is_search());
        TaskInstance {
            task,
            seed: 0,
            n: numbers.len(),
            numbers,
            target: Some(target),
            text: None,
            origin: Origin::Generated,
        }
    }

    pub fn palindrome(text: impl Into<String>) -> Self {
        let text = text.into();
        TaskInstance {
            task: TaskKind::LongestPalindromicSubstring,
            seed: 0,
            n: text.chars().count(),
            numbers: Vec::new(),
            target: None,
            text: Some(text),
            origin: Origin::Generated,
        }
    }

    pub fn subset_sum(numbers: Vec<i64>, target: i64) -> Self {
        TaskInstance {
            task: TaskKind::SubsetSum,
            seed: 0,
            n: numbers.len(),
            numbers,
            target: Some(target),
            text: None,
            origin: Origin::Generated,
        }
    }

    pub fn text(&self) -> &str {
        self.text.as_deref().unwrap_or("")
    }

    /// Checks the payload shape against the task kind.
    pub fn validate(&self) -> Result<(), ProblemError> {
        let ok = match self.task {
            TaskKind::LongestPalindromicSubstring => {
                self.text.as_ref().is_some_and(|t| t.chars().count() == self.n)
            }
            TaskKind::Sort => self.numbers.len() == self.n,
            TaskKind::SearchSorted => {
                self.numbers.len() == self.n
                    && self.target.is_some()
                    && self.numbers.windows(2).all(|w| w[0] <= w[1])
            }
            TaskKind::SearchUnsorted | TaskKind::SubsetSum => {
                self.numbers.len() == self.n && self.target.is_some()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ProblemError::MalformedInstance(self.task))
        }
    }
}

/// A parsed model answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Answer {
    NumberList(Vec<i64>),
    Index(i64),
    Substring(String),
    Subset(Vec<i64>),
    Unparseable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    AddedElements,
    MissingElements,
    DuplicatedElements,
    NotSorted,
    Truncated,
    RepeatedSequence,
    WrongIndex,
    WrongSubstring,
    WrongSubsetSum,
    SubsetNotInInput,
    ParseFailure,
}

/// Outcome of checking one answer. `correct` implies `failures` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub correct: bool,
    pub failures: BTreeSet<FailureMode>,
}

impl Verdict {
    pub fn correct() -> Self {
        Verdict {
            correct: true,
            failures: BTreeSet::new(),
        }
    }

    pub fn incorrect(failures: impl IntoIterator<Item = FailureMode>) -> Self {
        Verdict {
            correct: false,
            failures: failures.into_iter().collect(),
        }
    }
}
