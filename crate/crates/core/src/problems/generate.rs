use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Origin, ProblemError, TaskInstance, TaskKind};

pub const DEFAULT_ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz";

/// Range and shape of generated numbers.
///
/// With `max = None` the upper bound scales with the instance size to
/// `min + 10·n`, so the default draws distinct integers from `[0, 10·n]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumberSpec {
    pub min: i64,
    pub max: Option<i64>,
    pub distinct: bool,
    /// Upper bound on the decimal digit count of any generated number.
    pub max_digits: Option<u32>,
    /// Digits after the decimal point. Only integers are supported, so this
    /// must stay 0.
    pub precision: u32,
}

impl Default for NumberSpec {
    fn default() -> Self {
        NumberSpec {
            min: 0,
            max: None,
            distinct: true,
            max_digits: None,
            precision: 0,
        }
    }
}

impl NumberSpec {
    pub fn range(min: i64, max: i64) -> Self {
        NumberSpec {
            min,
            max: Some(max),
            ..Default::default()
        }
    }

    pub fn with_distinct(mut self, distinct: bool) -> Self {
        self.distinct = distinct;
        self
    }

    /// The inclusive bounds in force for an instance of size `n`.
    pub fn bounds(&self, n: usize) -> Result<(i64, i64), ProblemError> {
        if self.precision != 0 {
            return Err(ProblemError::InvalidSpec(
                "only integer numbers are supported (precision must be 0)".into(),
            ));
        }
        let mut lo = self.min;
        let mut hi = match self.max {
            Some(max) => max,
            None => self.min.saturating_add((n as i64).saturating_mul(10)),
        };
        if let Some(d) = self.max_digits {
            if d == 0 || d > 18 {
                return Err(ProblemError::InvalidSpec(format!(
                    "max_digits must be in 1..=18, got {d}"
                )));
            }
            let bound = 10i64.pow(d) - 1;
            lo = lo.max(-bound);
            hi = hi.min(bound);
        }
        if lo >= hi {
            return Err(ProblemError::InvalidSpec(format!(
                "empty number range [{lo}, {hi}]"
            )));
        }
        Ok((lo, hi))
    }
}

/// Everything besides `(task, seed, n)` that shapes a generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub numbers: NumberSpec,
    /// Probability that a search target is absent from the list.
    pub absent_prob: f64,
    /// Characters used for palindrome instances.
    pub alphabet: String,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            numbers: NumberSpec::default(),
            absent_prob: 0.0,
            alphabet: DEFAULT_ALPHABET.to_string(),
        }
    }
}

/// Draws one instance. The result is a pure function of the arguments.
pub fn gen_instance(
    task: TaskKind,
    seed: u64,
    n: usize,
    config: &GenConfig,
) -> Result<TaskInstance, ProblemError> {
    if n == 0 {
        return Err(ProblemError::InvalidSize);
    }
    if !(0.0..=1.0).contains(&config.absent_prob) {
        return Err(ProblemError::InvalidSpec(format!(
            "absent_prob must be in [0, 1], got {}",
            config.absent_prob
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut instance = TaskInstance {
        task,
        seed,
        n,
        numbers: Vec::new(),
        target: None,
        text: None,
        origin: Origin::Generated,
    };

    match task {
        TaskKind::LongestPalindromicSubstring => {
            let alphabet: Vec<char> = config.alphabet.chars().collect();
            if alphabet.is_empty() {
                return Err(ProblemError::InvalidSpec("alphabet is empty".into()));
            }
            let text: String = (0..n)
                .map(|_| *alphabet.choose(&mut rng).expect("nonempty"))
                .collect();
            instance.text = Some(text);
        }
        TaskKind::Sort => {
            instance.numbers = draw_numbers(&mut rng, n, &config.numbers)?;
        }
        TaskKind::SearchSorted | TaskKind::SearchUnsorted => {
            let (lo, hi) = config.numbers.bounds(n)?;
            let mut numbers = draw_numbers(&mut rng, n, &config.numbers)?;
            if task == TaskKind::SearchSorted {
                numbers.sort_unstable();
            }
            let absent = rng.gen_bool(config.absent_prob);
            let target = if absent {
                absent_value(&mut rng, &numbers, lo, hi)
            } else {
                numbers[rng.gen_range(0..n)]
            };
            instance.numbers = numbers;
            instance.target = Some(target);
        }
        TaskKind::SubsetSum => {
            let numbers = draw_numbers(&mut rng, n, &config.numbers)?;
            let target = loop {
                let picks: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                if picks.iter().any(|&p| p) {
                    let mut sum = 0i64;
                    for (x, _) in numbers.iter().zip(&picks).filter(|(_, &p)| p) {
                        sum = sum.checked_add(*x).ok_or_else(|| {
                            ProblemError::InvalidSpec("subset sum overflows i64".into())
                        })?;
                    }
                    break sum;
                }
            };
            instance.numbers = numbers;
            instance.target = Some(target);
        }
    }
    Ok(instance)
}

fn draw_numbers(
    rng: &mut ChaCha8Rng,
    n: usize,
    spec: &NumberSpec,
) -> Result<Vec<i64>, ProblemError> {
    let (lo, hi) = spec.bounds(n)?;
    let span = hi as i128 - lo as i128 + 1;
    if !spec.distinct {
        return Ok((0..n).map(|_| rng.gen_range(lo..=hi)).collect());
    }
    if span < n as i128 {
        return Err(ProblemError::SpecTooNarrow {
            n,
            min: lo,
            max: hi,
        });
    }
    match usize::try_from(span) {
        Ok(len) => Ok(rand::seq::index::sample(rng, len, n)
            .into_iter()
            .map(|i| (lo as i128 + i as i128) as i64)
            .collect()),
        Err(_) => {
            // Span wider than usize: collisions are vanishingly rare.
            let mut seen = HashSet::with_capacity(n);
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let x = rng.gen_range(lo..=hi);
                if seen.insert(x) {
                    out.push(x);
                }
            }
            Ok(out)
        }
    }
}

fn absent_value(rng: &mut ChaCha8Rng, numbers: &[i64], lo: i64, hi: i64) -> i64 {
    let present: HashSet<i64> = numbers.iter().copied().collect();
    let span = hi as i128 - lo as i128 + 1;
    let free = span - present.len() as i128;
    if free <= 0 {
        return if hi < i64::MAX { hi + 1 } else { lo - 1 };
    }
    if span <= 4 * numbers.len() as i128 + 64 {
        let candidates: Vec<i64> = (lo..=hi).filter(|x| !present.contains(x)).collect();
        return candidates[rng.gen_range(0..candidates.len())];
    }
    loop {
        let x = rng.gen_range(lo..=hi);
        if !present.contains(&x) {
            return x;
        }
    }
}
