use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::backends::{ErrorModel, LiveConfig, RetryPolicy};
use crate::encode::{Encoding, MAX_WORD_VALUE};
use crate::problems::{gen_instance, GenConfig, NumberSpec, Origin, TaskKind, DEFAULT_ALPHABET};
use crate::seed::{fnv1a, mix64};

const TASK_BITS: u32 = 3;
const ORIGIN_BITS: u32 = 1;
const ENCODING_BITS: u32 = 16;
const SIZE_BITS: u32 = 20;
const REPETITION_BITS: u32 = 24;

/// A declarative experiment: the sweep grid plus everything needed to draw
/// instances and talk to a backend. Read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub plan_id: String,
    pub tasks: Vec<TaskKind>,
    pub sizes: Vec<usize>,
    #[serde(default = "default_encodings")]
    pub encodings: Vec<Encoding>,
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub absent_prob: f64,
    /// Reuse one instance per (task, size, encoding) across repetitions
    /// instead of drawing a fresh one each time.
    #[serde(default)]
    pub fixed_instance: bool,
    #[serde(default)]
    pub numbers: NumberSpec,
    #[serde(default = "default_alphabet")]
    pub alphabet: String,
    #[serde(default)]
    pub backend: BackendSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub familiarity: Option<FamiliaritySpec>,
}

fn default_encodings() -> Vec<Encoding> {
    vec![Encoding::Digits]
}

fn default_repetitions() -> u32 {
    30
}

fn default_in_flight() -> usize {
    4
}

fn default_alphabet() -> String {
    DEFAULT_ALPHABET.to_string()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSettings {
    pub mock: ErrorModel,
    pub live: LiveConfig,
    pub retry: RetryPolicy,
}

/// The familiarity protocol: for each plan size, ask the model `count`
/// times for that many integers in `[min, max]`, then have a fresh call sort
/// each returned list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamiliaritySpec {
    pub count: u32,
    #[serde(default)]
    pub min: i64,
    #[serde(default = "default_familiar_max")]
    pub max: i64,
}

fn default_familiar_max() -> i64 {
    1000
}

/// Coordinates of one trial in the sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TrialKey {
    pub ordinal: u64,
    pub origin: Origin,
    pub task: TaskKind,
    /// Requested size. Familiar instances may come back with another length.
    pub size: usize,
    pub encoding: Encoding,
    pub repetition: u32,
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<Self, RunError> {
        let plan: ExperimentPlan =
            toml::from_str(text).map_err(|e| RunError::InvalidPlan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::InvalidPlan(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn gen_config(&self) -> GenConfig {
        GenConfig {
            numbers: self.numbers.clone(),
            absent_prob: self.absent_prob,
            alphabet: self.alphabet.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |msg: String| Err(RunError::InvalidPlan(msg));
        if self.plan_id.trim().is_empty() {
            return bad("plan_id must not be empty".into());
        }
        if self.tasks.is_empty() {
            return bad("tasks must not be empty".into());
        }
        if self.sizes.is_empty() {
            return bad("sizes must not be empty".into());
        }
        if self.encodings.is_empty() {
            return bad("encodings must not be empty".into());
        }
        if self.repetitions == 0 || self.repetitions >= 1 << REPETITION_BITS {
            return bad(format!("repetitions must be in 1..{}", 1u32 << REPETITION_BITS));
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1".into());
        }
        for &n in &self.sizes {
            if n == 0 || n >= 1 << SIZE_BITS {
                return bad(format!("size {n} must be in 1..{}", 1usize << SIZE_BITS));
            }
        }
        let mut ids: HashMap<u64, &Encoding> = HashMap::new();
        for enc in &self.encodings {
            if let Some(prev) = ids.insert(encoding_id(enc), enc) {
                if prev != enc {
                    return bad(format!("encodings {prev} and {enc} collide in seed space"));
                }
                return bad(format!("encoding {enc} listed twice"));
            }
        }
        if let Some(f) = &self.familiarity {
            if f.count == 0 || f.count >= 1 << REPETITION_BITS {
                return bad("familiarity.count must be positive".into());
            }
            if f.min >= f.max {
                return bad("familiarity.min must be below familiarity.max".into());
            }
        }
        self.backend
            .mock
            .validate()
            .map_err(RunError::InvalidPlan)?;
        // Every (task, size) pair must be drawable.
        let config = self.gen_config();
        for &task in &self.tasks {
            for &n in &self.sizes {
                gen_instance(task, 0, n, &config)
                    .map_err(|e| RunError::InvalidPlan(format!("{task} at size {n}: {e}")))?;
            }
        }
        // Word encodings need every number, target and sum to be spellable.
        let uses_words = self.encodings.iter().any(|e| *e != Encoding::Digits);
        for &task in self.tasks.iter().filter(|t| t.is_numeric() && uses_words) {
            for &n in &self.sizes {
                let (lo, hi) = self.numbers.bounds(n).map_err(|e| RunError::InvalidPlan(e.to_string()))?;
                let widest = lo.unsigned_abs().max(hi.unsigned_abs()) + 1;
                let widest = if task == TaskKind::SubsetSum { widest.saturating_mul(n as u64) } else { widest };
                if widest > MAX_WORD_VALUE as u64 {
                    return bad(format!(
                        "{task} at size {n} can reach {widest}, beyond the spellable range ±{MAX_WORD_VALUE}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// All trials in execution order: repetition-major round robin over
    /// tasks, sizes and encodings, then the familiarity slots. Palindrome
    /// tasks only run with digit encoding, since their payload has no numbers.
    pub fn trials(&self) -> Vec<TrialKey> {
        let mut out = Vec::new();
        let mut ordinal = 0;
        for repetition in 0..self.repetitions {
            for &task in &self.tasks {
                for &size in &self.sizes {
                    for encoding in &self.encodings {
                        if !super::applicable(task, encoding) {
                            continue;
                        }
                        out.push(TrialKey {
                            ordinal,
                            origin: Origin::Generated,
                            task,
                            size,
                            encoding: encoding.clone(),
                            repetition,
                        });
                        ordinal += 1;
                    }
                }
            }
        }
        if let Some(f) = &self.familiarity {
            for repetition in 0..f.count {
                for &size in &self.sizes {
                    out.push(TrialKey {
                        ordinal,
                        origin: Origin::LlmFamiliar,
                        task: TaskKind::Sort,
                        size,
                        encoding: Encoding::Digits,
                        repetition,
                    });
                    ordinal += 1;
                }
            }
        }
        out
    }

    /// The seed for a trial. Injective over a valid plan's grid: the key
    /// fields are packed into disjoint bit ranges and the packing is passed
    /// through a bijective mixer.
    pub fn seed_for(&self, key: &TrialKey) -> u64 {
        let repetition = if self.fixed_instance && key.origin == Origin::Generated {
            0
        } else {
            key.repetition as u64
        };
        let origin = match key.origin {
            Origin::Generated => 0,
            Origin::LlmFamiliar => 1,
        };
        let mut packed = key.task.index();
        packed = packed << ORIGIN_BITS | origin;
        packed = packed << ENCODING_BITS | encoding_id(&key.encoding);
        packed = packed << SIZE_BITS | key.size as u64;
        packed = packed << REPETITION_BITS | repetition;
        mix64(packed ^ mix64(self.base_seed))
    }

    /// Seed for the simulated model's randomness on a trial. Differs from
    /// the instance seed only when instances are fixed across repetitions.
    pub fn stream_for(&self, key: &TrialKey) -> u64 {
        if self.fixed_instance && key.origin == Origin::Generated {
            mix64(self.seed_for(key) ^ mix64(key.repetition as u64 + 1))
        } else {
            self.seed_for(key)
        }
    }
}

const _: () = assert!(TASK_BITS + ORIGIN_BITS + ENCODING_BITS + SIZE_BITS + REPETITION_BITS == 64);

fn encoding_id(encoding: &Encoding) -> u64 {
    match encoding {
        Encoding::Digits => 0,
        Encoding::Words(code) => 1 + fnv1a(code.as_bytes()) % ((1 << ENCODING_BITS) - 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn plan(text: &str) -> ExperimentPlan {
        ExperimentPlan::from_toml(text).unwrap()
    }

    #[test]
    fn defaults() {
        let p = plan("plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\n");
        assert_eq!(p.repetitions, 30);
        assert_eq!(p.encodings, vec![Encoding::Digits]);
        assert_eq!(p.absent_prob, 0.0);
        assert!(!p.fixed_instance);
        assert_eq!(p.trials().len(), 30);
    }

    #[test]
    fn rejects_bad_plans() {
        for text in [
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = []\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\nrepetitions = 0\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\nbogus = 1\n",
            "plan_id = \"p\"\ntasks = [\"nope\"]\nsizes = [10]\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\nencodings = [\"words:xx\"]\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\nencodings = [\"digits\", \"digits\"]\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\n[numbers]\nmin = 0\nmax = 3\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\n[backend.mock]\np_drop = 2.0\n",
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\nencodings = [\"words:en\"]\n[numbers]\nmax = 5000000\n",
        ] {
            assert!(ExperimentPlan::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn trial_order_is_round_robin() {
        let p = plan(
            "plan_id = \"p\"\ntasks = [\"sort\", \"lps\"]\nsizes = [10, 20]\n\
             encodings = [\"digits\", \"words:de\"]\nrepetitions = 2\n",
        );
        let trials = p.trials();
        // lps skips the word encoding: (2 + 1) * 2 sizes * 2 reps.
        assert_eq!(trials.len(), 12);
        let first: Vec<_> = trials[..6]
            .iter()
            .map(|t| (t.task, t.size, t.encoding.to_string(), t.repetition))
            .collect();
        assert_eq!(
            first,
            vec![
                (TaskKind::Sort, 10, "digits".to_string(), 0),
                (TaskKind::Sort, 10, "words:de".to_string(), 0),
                (TaskKind::Sort, 20, "digits".to_string(), 0),
                (TaskKind::Sort, 20, "words:de".to_string(), 0),
                (TaskKind::LongestPalindromicSubstring, 10, "digits".to_string(), 0),
                (TaskKind::LongestPalindromicSubstring, 20, "digits".to_string(), 0),
            ]
        );
        assert!(trials.iter().enumerate().all(|(i, t)| t.ordinal == i as u64));
    }

    #[test]
    fn seeds_are_unique_across_the_grid() {
        let p = plan(
            "plan_id = \"p\"\ntasks = [\"sort\", \"search_sorted\", \"search_unsorted\", \"subset_sum\", \"lps\"]\n\
             sizes = [5, 10, 20, 30, 40, 50]\nencodings = [\"digits\", \"words:en\", \"words:de\", \"words:ko\", \"words:fr\", \"words:es\", \"words:nl\"]\n\
             repetitions = 40\nbase_seed = 7\n[familiarity]\ncount = 50\n",
        );
        let trials = p.trials();
        let seeds: HashSet<u64> = trials.iter().map(|t| p.seed_for(t)).collect();
        assert_eq!(seeds.len(), trials.len());
    }

    #[test]
    fn fixed_instances_share_seeds_but_not_streams() {
        let p = plan(
            "plan_id = \"p\"\ntasks = [\"sort\"]\nsizes = [10]\nrepetitions = 3\nfixed_instance = true\n",
        );
        let t = p.trials();
        assert_eq!(p.seed_for(&t[0]), p.seed_for(&t[2]));
        assert_ne!(p.stream_for(&t[0]), p.stream_for(&t[2]));
    }
}
