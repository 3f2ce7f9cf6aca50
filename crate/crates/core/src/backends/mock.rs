use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{estimate_tokens, Backend, BackendError, ChatExchange, Request, RequestContext};
use crate::encode::{
    format_list, parse_generation_prompt, parse_prompt, Encoding, PromptTemplates,
};
use crate::problems::{solve, Answer, TaskInstance, TaskKind};
use crate::seed::{fnv1a, mix64};

/// Per-element error rates of the simulated model.
///
/// List answers are damaged in four passes: each element is dropped with
/// `p_drop`; a foreign element is inserted into each gap with `p_insert`;
/// non-overlapping adjacent pairs are swapped with `p_swap`; the result is
/// cut to `truncate_at` elements. A search answer stays correct only if all
/// `n` element reads survive `p_drop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorModel {
    pub p_drop: f64,
    pub p_insert: f64,
    pub p_swap: f64,
    pub truncate_at: Option<usize>,
    pub latency_base: f64,
    pub latency_per_token: f64,
    pub rng_seed: u64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            p_drop: 0.0,
            p_insert: 0.0,
            p_swap: 0.0,
            truncate_at: None,
            latency_base: 0.5,
            latency_per_token: 0.01,
            rng_seed: 0,
        }
    }
}

impl ErrorModel {
    pub fn perfect() -> Self {
        ErrorModel::default()
    }

    pub fn with_drop(p_drop: f64) -> Self {
        ErrorModel {
            p_drop,
            ..ErrorModel::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, p) in [("p_drop", self.p_drop), ("p_insert", self.p_insert), ("p_swap", self.p_swap)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        for (name, t) in [("latency_base", self.latency_base), ("latency_per_token", self.latency_per_token)] {
            if !(t.is_finite() && t >= 0.0) {
                return Err(format!("{name} must be a finite non-negative number, got {t}"));
            }
        }
        Ok(())
    }

    /// Simulated seconds for a call moving `tokens` tokens in total.
    pub fn latency(&self, tokens: u64) -> f64 {
        self.latency_base + self.latency_per_token * tokens as f64
    }

    fn damage<T: Clone>(
        &self,
        rng: &mut ChaCha8Rng,
        items: &[T],
        mut foreign: impl FnMut(&mut ChaCha8Rng) -> T,
    ) -> Vec<T> {
        let kept: Vec<T> = items
            .iter()
            .filter(|_| !rng.gen_bool(self.p_drop))
            .cloned()
            .collect();
        let mut out = Vec::with_capacity(kept.len() + 4);
        for i in 0..=kept.len() {
            if rng.gen_bool(self.p_insert) {
                out.push(foreign(rng));
            }
            if let Some(x) = kept.get(i) {
                out.push(x.clone());
            }
        }
        let mut i = 0;
        while i + 1 < out.len() {
            if rng.gen_bool(self.p_swap) {
                out.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
        if let Some(k) = self.truncate_at {
            out.truncate(k);
        }
        out
    }
}

/// The mock's response to `instance`, with its PRNG seeded by
/// `(model.rng_seed, instance.seed)`.
pub fn mock_answer(instance: &TaskInstance, encoding: &Encoding, model: &ErrorModel) -> String {
    MockBackend::new(model.clone()).answer(instance, encoding, instance.seed)
}

/// A simulated model whose answers are the oracle's, damaged by an
/// [`ErrorModel`]. Fully deterministic: the same request always yields the
/// same exchange, and latency is computed rather than slept.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub errors: ErrorModel,
    templates: PromptTemplates,
    model_id: String,
}

impl MockBackend {
    pub fn new(errors: ErrorModel) -> Self {
        MockBackend {
            errors,
            templates: PromptTemplates::default(),
            model_id: "mock".into(),
        }
    }

    pub fn perfect() -> Self {
        MockBackend::new(ErrorModel::perfect())
    }

    /// Templates used to read instances back out of bare prompts.
    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_model_id(mut self, id: impl Into<String>) -> Self {
        self.model_id = id.into();
        self
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix64(self.errors.rng_seed ^ mix64(stream)))
    }

    fn answer(&self, instance: &TaskInstance, encoding: &Encoding, stream: u64) -> String {
        let mut rng = self.rng(stream);
        let reference = solve(instance);
        match instance.task {
            TaskKind::Sort | TaskKind::SubsetSum => {
                let values = match reference {
                    Ok(Answer::NumberList(xs) | Answer::Subset(xs)) => xs,
                    _ => Vec::new(),
                };
                let present: HashSet<i64> = instance.numbers.iter().copied().collect();
                let damaged = self
                    .errors
                    .damage(&mut rng, &values, |r| foreign_number(r, &instance.numbers, &present));
                format_list(&damaged, encoding)
                    .or_else(|_| format_list(&damaged, &Encoding::Digits))
                    .expect("digits never fail")
            }
            TaskKind::SearchSorted | TaskKind::SearchUnsorted => {
                let Ok(Answer::Index(index)) = reference else {
                    return "-1".into();
                };
                let n = instance.numbers.len() as i32;
                let survives = (1.0 - self.errors.p_drop).powi(n);
                if rng.gen_bool(survives.clamp(0.0, 1.0)) {
                    index.to_string()
                } else {
                    wrong_index(index, instance.numbers.len()).to_string()
                }
            }
            TaskKind::LongestPalindromicSubstring => {
                let chars: Vec<char> = match reference {
                    Ok(Answer::Substring(s)) => s.chars().collect(),
                    _ => Vec::new(),
                };
                let damaged = self
                    .errors
                    .damage(&mut rng, &chars, |r| r.gen_range(b'a'..=b'z') as char);
                damaged.into_iter().collect()
            }
        }
    }

    fn generate(&self, n: usize, min: i64, max: i64, stream: u64) -> String {
        let mut rng = self.rng(stream);
        let (lo, hi) = (min.min(max), min.max(max));
        let values: Vec<i64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
        let damaged = self.errors.damage(&mut rng, &values, |r| r.gen_range(lo..=hi));
        format_list(&damaged, &Encoding::Digits).expect("digits never fail")
    }
}

/// A wrong index for a search answer: the next position, or a miss/hit flip.
fn wrong_index(index: i64, n: usize) -> i64 {
    match (index, n) {
        (-1, _) => 0,
        (_, 0 | 1) => -1,
        (i, n) => (i + 1) % n as i64,
    }
}

/// A value that does not occur in `input`.
fn foreign_number(rng: &mut ChaCha8Rng, input: &[i64], present: &HashSet<i64>) -> i64 {
    let lo = input.iter().copied().min().unwrap_or(0);
    let hi = input.iter().copied().max().unwrap_or(100);
    let spread = (input.len() as i64).max(10);
    let (a, b) = (lo.saturating_sub(spread), hi.saturating_add(spread));
    for _ in 0..64 {
        let v = rng.gen_range(a..=b);
        if !present.contains(&v) {
            return v;
        }
    }
    hi.saturating_add(1)
}

impl Backend for MockBackend {
    fn model_id(&self) -> String {
        self.model_id.clone()
    }

    fn complete(&self, request: &Request) -> Result<ChatExchange, BackendError> {
        let response = match &request.context {
            RequestContext::Solve {
                instance,
                encoding,
                stream,
            } => self.answer(instance, encoding, *stream),
            RequestContext::Generate { n, min, max, seed } => self.generate(*n, *min, *max, *seed),
            RequestContext::None => {
                let stream = fnv1a(request.prompt.as_bytes());
                if let Some((instance, encoding)) = parse_prompt(&self.templates, &request.prompt) {
                    self.answer(&instance, &encoding, stream)
                } else if let Some((n, min, max)) =
                    parse_generation_prompt(&self.templates, &request.prompt)
                {
                    self.generate(n, min, max, stream)
                } else {
                    "I don't know how to answer that.".into()
                }
            }
        };
        let input_tokens = estimate_tokens(&request.prompt);
        let output_tokens = estimate_tokens(&response);
        let latency_s = self.errors.latency(input_tokens + output_tokens);
        Ok(ChatExchange {
            prompt: request.prompt.clone(),
            response,
            latency_s,
            input_tokens,
            output_tokens,
            model_id: self.model_id.clone(),
            attempts: 1,
        })
    }
}
