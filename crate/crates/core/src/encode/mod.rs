//! Rendering instances into prompts and parsing free-text responses back
//! into structured answers.

mod words;

use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::problems::{Answer, TaskInstance, TaskKind};

pub use words::{
    language, normalize, number_to_words, register_language, supported_languages,
    words_to_number, CompositionRule, LanguageTable, MAX_WORD_VALUE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("unsupported language {0:?}")]
    UnsupportedLanguage(String),
    #[error("{0} is outside the spellable range ±999999")]
    OutOfRange(i64),
    #[error("cannot parse {0:?} as a number word")]
    UnparseableNumberWord(String),
    #[error("the language table has no words for {0}")]
    Unspellable(i64),
    #[error("invalid language table: {0}")]
    InvalidTable(String),
    #[error("encoding {encoding} does not apply to task {task}")]
    EncodingMismatch { task: TaskKind, encoding: Encoding },
    #[error("invalid encoding {0:?}, expected `digits` or `words:<lang>`")]
    InvalidEncoding(String),
}

/// How numbers appear in prompts and answers.
///
/// Written as `digits` or `words:<code>` in plans and transcripts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Encoding {
    Digits,
    Words(String),
}

impl Encoding {
    pub fn words(code: &str) -> Self {
        Encoding::Words(code.to_string())
    }

    pub fn language(&self) -> Option<&str> {
        match self {
            Encoding::Digits => None,
            Encoding::Words(code) => Some(code),
        }
    }

    pub fn encode_number(&self, value: i64) -> Result<String, EncodeError> {
        match self {
            Encoding::Digits => Ok(value.to_string()),
            Encoding::Words(code) => number_to_words(value, code),
        }
    }

    pub fn decode_number(&self, text: &str) -> Result<i64, EncodeError> {
        match self {
            Encoding::Digits => text
                .trim()
                .parse()
                .map_err(|_| EncodeError::UnparseableNumberWord(text.trim().to_string())),
            Encoding::Words(code) => words_to_number(text, code),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Encoding::Digits => f.write_str("digits"),
            Encoding::Words(code) => write!(f, "words:{code}"),
        }
    }
}

impl FromStr for Encoding {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "digits" {
            return Ok(Encoding::Digits);
        }
        match s.split_once(':') {
            Some(("words", code)) if !code.trim().is_empty() => {
                let table = language(code)?;
                Ok(Encoding::Words(table.code.clone()))
            }
            _ => Err(EncodeError::InvalidEncoding(s.to_string())),
        }
    }
}

impl Serialize for Encoding {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Encoding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The prompt wording for every task. Placeholders: `{list}`, `{target}`,
/// `{text}`, and for the generation prompt `{n}`, `{min}`, `{max}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub sort: String,
    pub search_sorted: String,
    pub search_unsorted: String,
    pub lps: String,
    pub subset_sum: String,
    pub generate: String,
}

pub const SORT_TEMPLATE: &str = "Sort the elements in the given collection in ascending order, \
and return only the sorted collection in the list format: {list}";
pub const SEARCH_SORTED_TEMPLATE: &str = "Find the index of the target value {target} in the \
given sorted collection. Indices start at 0; if the target is not present, the answer is -1. \
Return only the index: {list}";
pub const SEARCH_UNSORTED_TEMPLATE: &str = "Find the index of the target value {target} in the \
given collection. Indices start at 0; if the target is not present, the answer is -1. \
Return only the index: {list}";
pub const LPS_TEMPLATE: &str = "Find the longest palindromic substring of the given string, \
and return only that substring: {text}";
pub const SUBSET_SUM_TEMPLATE: &str = "Find a subset of the elements in the given collection \
whose sum is {target}, and return only that subset in the list format: {list}";
pub const GENERATE_TEMPLATE: &str = "Generate a list of {n} random integers between {min} and \
{max}, and return only the list in the list format.";

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            sort: SORT_TEMPLATE.into(),
            search_sorted: SEARCH_SORTED_TEMPLATE.into(),
            search_unsorted: SEARCH_UNSORTED_TEMPLATE.into(),
            lps: LPS_TEMPLATE.into(),
            subset_sum: SUBSET_SUM_TEMPLATE.into(),
            generate: GENERATE_TEMPLATE.into(),
        }
    }
}

impl PromptTemplates {
    pub fn for_task(&self, task: TaskKind) -> &str {
        match task {
            TaskKind::Sort => &self.sort,
            TaskKind::SearchSorted => &self.search_sorted,
            TaskKind::SearchUnsorted => &self.search_unsorted,
            TaskKind::LongestPalindromicSubstring => &self.lps,
            TaskKind::SubsetSum => &self.subset_sum,
        }
    }
}

/// Formats a number list as `[a, b, c]`.
pub fn format_list(values: &[i64], encoding: &Encoding) -> Result<String, EncodeError> {
    let items = values
        .iter()
        .map(|&v| encoding.encode_number(v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(format!("[{}]", items.join(", ")))
}

/// Renders the prompt for an instance using the default templates.
pub fn render_prompt(instance: &TaskInstance, encoding: &Encoding) -> Result<String, EncodeError> {
    render_prompt_with(&PromptTemplates::default(), instance, encoding)
}

pub fn render_prompt_with(
    templates: &PromptTemplates,
    instance: &TaskInstance,
    encoding: &Encoding,
) -> Result<String, EncodeError> {
    let template = templates.for_task(instance.task);
    if instance.task == TaskKind::LongestPalindromicSubstring {
        if *encoding != Encoding::Digits {
            return Err(EncodeError::EncodingMismatch {
                task: instance.task,
                encoding: encoding.clone(),
            });
        }
        return Ok(template.replace("{text}", instance.text()));
    }
    let list = format_list(&instance.numbers, encoding)?;
    let mut prompt = template.to_string();
    if let Some(target) = instance.target {
        prompt = prompt.replace("{target}", &encoding.encode_number(target)?);
    }
    Ok(prompt.replace("{list}", &list))
}

/// The prompt asking the model for a list of random integers.
pub fn render_generation_prompt(templates: &PromptTemplates, n: usize, min: i64, max: i64) -> String {
    templates
        .generate
        .replace("{n}", &n.to_string())
        .replace("{min}", &min.to_string())
        .replace("{max}", &max.to_string())
}

/// Extracts an answer from a raw response. Never fails: anything that cannot
/// be read becomes [`Answer::Unparseable`] carrying the raw text.
pub fn parse_response(task: TaskKind, raw: &str, encoding: &Encoding) -> Answer {
    let body = strip_code_fences(raw);
    let parsed = match task {
        TaskKind::Sort => parse_number_list(&body, encoding).map(Answer::NumberList),
        TaskKind::SubsetSum => parse_number_list(&body, encoding).map(Answer::Subset),
        TaskKind::SearchSorted | TaskKind::SearchUnsorted => {
            parse_index(&body, encoding).map(Answer::Index)
        }
        TaskKind::LongestPalindromicSubstring => parse_substring(&body).map(Answer::Substring),
    };
    parsed.unwrap_or_else(|| Answer::Unparseable(raw.to_string()))
}

fn strip_code_fences(raw: &str) -> String {
    raw.lines()
        .filter(|line| !line.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Content of the last top-level `[...]` group.
fn last_bracketed(text: &str) -> Option<&str> {
    let mut depth = 0usize;
    let mut open = 0usize;
    let mut last = None;
    for (i, c) in text.char_indices() {
        match c {
            '[' => {
                if depth == 0 {
                    open = i;
                }
                depth += 1;
            }
            ']' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    last = Some(&text[open + 1..i]);
                }
            }
            _ => {}
        }
    }
    last
}

const QUOTES: &[char] = &['"', '\'', '`', '“', '”', '‘', '’'];

/// Parses the last bracketed list in `text`.
///
/// In word mode an element may itself contain commas (English spells 1234
/// as "one thousand, two hundred and thirty-four"), so comma-separated
/// pieces are grouped greedily: each element is the longest run of pieces
/// that reads as one number whose spelling itself has that many commas.
pub fn parse_number_list(text: &str, encoding: &Encoding) -> Option<Vec<i64>> {
    let mut inner = last_bracketed(text)?.trim();
    // Tolerate redundant nesting such as [[1, 2]].
    while inner.starts_with('[') && inner.ends_with(']') && last_bracketed(inner)?.len() + 2 == inner.len() {
        inner = inner[1..inner.len() - 1].trim();
    }
    if inner.is_empty() {
        return Some(Vec::new());
    }
    let mut pieces: Vec<&str> = inner.split(',').map(str::trim).collect();
    if pieces.last() == Some(&"") {
        pieces.pop();
    }
    let clean = |s: &str| s.trim().trim_matches(QUOTES).trim().to_string();

    let mut out = Vec::with_capacity(pieces.len());
    let mut i = 0;
    while i < pieces.len() {
        let one = clean(pieces[i]);
        if one.is_empty() {
            return None;
        }
        let longest = match encoding {
            Encoding::Digits => encoding.decode_number(&one).ok().map(|v| (v, 1)),
            Encoding::Words(_) => (1..=pieces.len() - i).rev().find_map(|k| {
                let joined = clean(&pieces[i..i + k].join(", "));
                let v = encoding.decode_number(&joined).ok()?;
                // Only join pieces if the number's own spelling has commas.
                let spelled = encoding.encode_number(v).ok()?;
                (k == 1 || spelled.matches(',').count() >= k - 1).then_some((v, k))
            }),
        };
        let (value, used) = longest?;
        out.push(value);
        i += used;
    }
    Some(out)
}

fn parse_index(text: &str, encoding: &Encoding) -> Option<i64> {
    let trimmed = text.trim().trim_matches(QUOTES).trim();
    if let Ok(v) = trimmed.parse::<i64>() {
        return Some(v);
    }
    static INT: std::sync::LazyLock<Regex> =
        std::sync::LazyLock::new(|| Regex::new(r"-?\d+").expect("valid regex"));
    if let Some(m) = INT.find_iter(text).last() {
        return m.as_str().parse().ok();
    }
    let word = trimmed.trim_end_matches(['.', '!']);
    match encoding {
        Encoding::Words(code) => words_to_number(word, code).ok(),
        Encoding::Digits => None,
    }
}

fn parse_substring(text: &str) -> Option<String> {
    let quoted: Vec<&str> = text.split('"').collect();
    if quoted.len() >= 3 {
        // Segments at odd positions lie between a pair of quotes.
        let last_closed = if quoted.len() % 2 == 1 {
            quoted.len() - 2
        } else {
            quoted.len() - 3
        };
        let candidate = quoted[last_closed];
        if !candidate.is_empty() {
            return Some(candidate.to_string());
        }
    }
    let line = text.lines().rev().find(|l| !l.trim().is_empty())?;
    let line = match line.rsplit_once(':') {
        Some((_, after)) if !after.trim().is_empty() => after,
        _ => line,
    };
    let s = line.trim().trim_matches(QUOTES).trim();
    if s.is_empty() {
        None
    } else {
        Some(s.to_string())
    }
}

/// Recovers the instance and encoding from a prompt produced by
/// [`render_prompt_with`]. Used by backends that are given only the prompt.
/// The recovered instance has seed 0.
pub fn parse_prompt(templates: &PromptTemplates, prompt: &str) -> Option<(TaskInstance, Encoding)> {
    for task in TaskKind::ALL {
        let template = templates.for_task(task);
        let Some(caps) = template_regex(template)?.captures(prompt) else {
            continue;
        };
        if task == TaskKind::LongestPalindromicSubstring {
            let text = caps.name("text")?.as_str();
            return Some((TaskInstance::palindrome(text), Encoding::Digits));
        }
        let list = caps.name("list")?.as_str();
        let target = caps.name("target").map(|m| m.as_str());
        for encoding in candidate_encodings() {
            let Some(numbers) = parse_number_list(list, &encoding) else {
                continue;
            };
            // Reject partial matches: the list must render back verbatim.
            if format_list(&numbers, &encoding).ok().as_deref() != Some(list) {
                continue;
            }
            let inst = match (task, target) {
                (TaskKind::Sort, _) => TaskInstance::sort(numbers),
                (TaskKind::SubsetSum, Some(t)) => {
                    TaskInstance::subset_sum(numbers, encoding.decode_number(t).ok()?)
                }
                (_, Some(t)) => TaskInstance::search(task, numbers, encoding.decode_number(t).ok()?),
                (_, None) => return None,
            };
            return Some((inst, encoding));
        }
    }
    None
}

/// Recovers `(n, min, max)` from a generation prompt.
pub fn parse_generation_prompt(templates: &PromptTemplates, prompt: &str) -> Option<(usize, i64, i64)> {
    let caps = template_regex(&templates.generate)?.captures(prompt)?;
    Some((
        caps.name("n")?.as_str().parse().ok()?,
        caps.name("min")?.as_str().parse().ok()?,
        caps.name("max")?.as_str().parse().ok()?,
    ))
}

fn candidate_encodings() -> impl Iterator<Item = Encoding> {
    std::iter::once(Encoding::Digits)
        .chain(supported_languages().into_iter().map(Encoding::Words))
}

fn template_regex(template: &str) -> Option<Regex> {
    let mut pattern = String::from("(?s)^");
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        pattern.push_str(&regex::escape(&rest[..start]));
        let end = rest[start..].find('}')? + start;
        match &rest[start + 1..end] {
            "list" => pattern.push_str(r"(?P<list>\[.*\])"),
            "target" => pattern.push_str("(?P<target>.+?)"),
            "text" => pattern.push_str("(?P<text>.*)"),
            name if name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                pattern.push_str(&format!("(?P<{name}>.+?)"))
            }
            _ => pattern.push_str(".*?"),
        }
        rest = &rest[end + 1..];
    }
    pattern.push_str(&regex::escape(rest));
    pattern.push('$');
    Regex::new(&pattern).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sort_prompt_matches_template() {
        let inst = TaskInstance::sort(vec![3, 1, 2]);
        assert_eq!(
            render_prompt(&inst, &Encoding::Digits).unwrap(),
            "Sort the elements in the given collection in ascending order, and return only the \
             sorted collection in the list format: [3, 1, 2]"
        );
        let de = render_prompt(&TaskInstance::sort(vec![2, 1]), &Encoding::words("de")).unwrap();
        assert!(de.ends_with("list format: [zwei, eins]"), "{de}");
    }

    #[test]
    fn lps_rejects_word_encoding() {
        let inst = TaskInstance::palindrome("abba");
        assert!(matches!(
            render_prompt(&inst, &Encoding::words("en")),
            Err(EncodeError::EncodingMismatch { .. })
        ));
        assert!(render_prompt(&inst, &Encoding::Digits).unwrap().ends_with(": abba"));
    }

    #[test]
    fn out_of_range_numbers_fail_in_word_mode() {
        let inst = TaskInstance::sort(vec![1_000_000]);
        assert_eq!(
            render_prompt(&inst, &Encoding::words("en")),
            Err(EncodeError::OutOfRange(1_000_000))
        );
        assert!(render_prompt(&inst, &Encoding::Digits).is_ok());
    }

    #[test]
    fn encoding_strings() {
        assert_eq!("digits".parse::<Encoding>().unwrap(), Encoding::Digits);
        assert_eq!("words:de".parse::<Encoding>().unwrap(), Encoding::words("de"));
        assert_eq!("words:German".parse::<Encoding>().unwrap(), Encoding::words("de"));
        assert!("words:".parse::<Encoding>().is_err());
        assert!(matches!(
            "words:xx".parse::<Encoding>(),
            Err(EncodeError::UnsupportedLanguage(_))
        ));
        assert_eq!(
            serde_json::to_string(&Encoding::words("ko")).unwrap(),
            "\"words:ko\""
        );
    }

    #[test]
    fn parse_sort_responses() {
        let d = Encoding::Digits;
        assert_eq!(
            parse_response(TaskKind::Sort, "[1, 2, 3]", &d),
            Answer::NumberList(vec![1, 2, 3])
        );
        assert_eq!(
            parse_response(TaskKind::Sort, "Sure! Here it is:\n```\n[1,2, 3]\n```", &d),
            Answer::NumberList(vec![1, 2, 3])
        );
        assert_eq!(
            parse_response(TaskKind::Sort, "[9] then [1, 2]", &d),
            Answer::NumberList(vec![1, 2])
        );
        assert_eq!(parse_response(TaskKind::Sort, "[]", &d), Answer::NumberList(vec![]));
        assert_eq!(
            parse_response(TaskKind::Sort, "I cannot", &d),
            Answer::Unparseable("I cannot".into())
        );
        assert_eq!(
            parse_response(TaskKind::Sort, "[1, x]", &d),
            Answer::Unparseable("[1, x]".into())
        );
        assert_eq!(
            parse_response(TaskKind::Sort, "[[4, 5]]", &d),
            Answer::NumberList(vec![4, 5])
        );
    }

    #[test]
    fn parse_word_lists() {
        let de = Encoding::words("de");
        assert_eq!(
            parse_response(TaskKind::Sort, "[eins, zwei]", &de),
            Answer::NumberList(vec![1, 2])
        );
        assert_eq!(
            parse_response(TaskKind::Sort, "['eins', \"zwei\"]", &de),
            Answer::NumberList(vec![1, 2])
        );
        let en = Encoding::words("en");
        assert_eq!(
            parse_response(
                TaskKind::Sort,
                "[five, one thousand, two hundred and thirty-four]",
                &en
            ),
            Answer::NumberList(vec![5, 1234])
        );
    }

    #[test]
    fn parse_search_and_lps() {
        let d = Encoding::Digits;
        assert_eq!(parse_response(TaskKind::SearchSorted, "2", &d), Answer::Index(2));
        assert_eq!(
            parse_response(TaskKind::SearchSorted, "The index is 4.", &d),
            Answer::Index(4)
        );
        assert_eq!(parse_response(TaskKind::SearchUnsorted, "-1", &d), Answer::Index(-1));
        assert_eq!(
            parse_response(TaskKind::SearchUnsorted, "minus one", &Encoding::words("en")),
            Answer::Index(-1)
        );
        assert_eq!(
            parse_response(TaskKind::LongestPalindromicSubstring, "\"bab\"", &d),
            Answer::Substring("bab".into())
        );
        assert_eq!(
            parse_response(TaskKind::LongestPalindromicSubstring, "Answer: aba", &d),
            Answer::Substring("aba".into())
        );
        assert!(matches!(
            parse_response(TaskKind::LongestPalindromicSubstring, "  \n ", &d),
            Answer::Unparseable(_)
        ));
    }

    #[test]
    fn prompts_roundtrip_through_parse_prompt() {
        let templates = PromptTemplates::default();
        let cases = [
            (TaskInstance::sort(vec![3, 1, 2]), Encoding::Digits),
            (TaskInstance::sort(vec![21, 7, 0]), Encoding::words("fr")),
            (
                TaskInstance::search(TaskKind::SearchSorted, vec![1, 3, 5], 5),
                Encoding::Digits,
            ),
            (
                TaskInstance::search(TaskKind::SearchUnsorted, vec![40, 2], 7),
                Encoding::words("ko"),
            ),
            (TaskInstance::subset_sum(vec![5, 3, 8], 11), Encoding::words("es")),
            (TaskInstance::palindrome("abacab"), Encoding::Digits),
            (TaskInstance::sort(vec![]), Encoding::Digits),
        ];
        for (inst, enc) in cases {
            let prompt = render_prompt(&inst, &enc).unwrap();
            let (back, back_enc) = parse_prompt(&templates, &prompt).expect(&prompt);
            assert_eq!(back, inst, "{prompt}");
            if !inst.numbers.is_empty() {
                assert_eq!(back_enc, enc);
            }
        }
        assert!(parse_prompt(&templates, "What is the capital of France?").is_none());
    }

    #[test]
    fn generation_prompt_roundtrip() {
        let t = PromptTemplates::default();
        let p = render_generation_prompt(&t, 12, -5, 99);
        assert_eq!(parse_generation_prompt(&t, &p), Some((12, -5, 99)));
        assert_eq!(parse_generation_prompt(&t, "Sort this"), None);
    }

    #[test]
    fn generation_prompt() {
        assert_eq!(
            render_generation_prompt(&PromptTemplates::default(), 5, 0, 50),
            "Generate a list of 5 random integers between 0 and 50, and return only the list \
             in the list format."
        );
    }
}
