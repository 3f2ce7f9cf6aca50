//! Cardinal number words for several languages.
//!
//! A [`LanguageTable`] is plain data: a list of "cards" (value → word) plus
//! the name of a composition rule. Spelling follows the classic
//! split-and-merge scheme: a value is split recursively into
//! `multiplier × card + remainder`, then adjacent pieces are merged pairwise
//! left to right by the language's rule, which decides joiners, word order
//! and inflection (German `zweiundvierzig`, French `quatre-vingts`, Spanish
//! `doscientos`, Sino-Korean `구십구만 구천`).
//!
//! Parsing is the exact inverse over the canonical spellings: an input is
//! normalised (case, diacritics, spaces, hyphens and commas are ignored),
//! split at the scale word and looked up in tables derived from the
//! spelling function itself, and the result is accepted only if it spells
//! back to the same normalised text.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, LazyLock, OnceLock, RwLock};

use super::EncodeError;

/// Largest magnitude that can be spelled.
pub const MAX_WORD_VALUE: i64 = 999_999;

const BUILTIN_TABLES: [&str; 6] = [
    include_str!("../../languages/en.txt"),
    include_str!("../../languages/de.txt"),
    include_str!("../../languages/ko.txt"),
    include_str!("../../languages/fr.txt"),
    include_str!("../../languages/es.txt"),
    include_str!("../../languages/nl.txt"),
];

/// How the pieces of a number are joined in a language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompositionRule {
    English,
    German,
    Dutch,
    French,
    Spanish,
    SinoKorean,
}

impl CompositionRule {
    pub fn as_str(self) -> &'static str {
        match self {
            CompositionRule::English => "english",
            CompositionRule::German => "german",
            CompositionRule::Dutch => "dutch",
            CompositionRule::French => "french",
            CompositionRule::Spanish => "spanish",
            CompositionRule::SinoKorean => "sino-korean",
        }
    }
}

impl FromStr for CompositionRule {
    type Err = EncodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "english" => CompositionRule::English,
            "german" => CompositionRule::German,
            "dutch" => CompositionRule::Dutch,
            "french" => CompositionRule::French,
            "spanish" => CompositionRule::Spanish,
            "sino-korean" => CompositionRule::SinoKorean,
            other => {
                return Err(EncodeError::InvalidTable(format!(
                    "unknown composition rule {other:?}"
                )))
            }
        })
    }
}

impl fmt::Display for CompositionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A word and the value it stands for.
type Piece = (String, u64);

enum Node {
    Leaf(Piece),
    List(Vec<Node>),
}

/// Word tables for one language.
pub struct LanguageTable {
    pub code: String,
    pub name: String,
    pub rule: CompositionRule,
    pub minus: String,
    /// Descending by value.
    cards: Vec<Piece>,
    lookup: OnceLock<Lookup>,
}

impl fmt::Debug for LanguageTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LanguageTable")
            .field("code", &self.code)
            .field("rule", &self.rule)
            .field("cards", &self.cards.len())
            .finish()
    }
}

impl LanguageTable {
    /// Parses the plain-text table format:
    ///
    /// ```text
    /// # comment
    /// code = de
    /// name = German
    /// rule = german
    /// minus = minus
    /// 1000 = tausend
    /// 100 = hundert
    /// ...
    /// 0 = null
    /// ```
    pub fn parse(text: &str) -> Result<Self, EncodeError> {
        let mut code = None;
        let mut name = None;
        let mut rule = None;
        let mut minus = None;
        let mut cards: Vec<Piece> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(EncodeError::InvalidTable(format!(
                    "line {}: expected `key = value`",
                    lineno + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            if value.is_empty() {
                return Err(EncodeError::InvalidTable(format!(
                    "line {}: empty value for {key}",
                    lineno + 1
                )));
            }
            match key {
                "code" => code = Some(value),
                "name" => name = Some(value),
                "rule" => rule = Some(value.parse::<CompositionRule>()?),
                "minus" => minus = Some(value),
                k => {
                    let n: u64 = k.parse().map_err(|_| {
                        EncodeError::InvalidTable(format!("line {}: unknown key {k:?}", lineno + 1))
                    })?;
                    if cards.iter().any(|(_, v)| *v == n) {
                        return Err(EncodeError::InvalidTable(format!(
                            "line {}: duplicate entry for {n}",
                            lineno + 1
                        )));
                    }
                    cards.push((value, n));
                }
            }
        }

        let code = code.ok_or_else(|| EncodeError::InvalidTable("missing `code`".into()))?;
        let rule = rule.ok_or_else(|| EncodeError::InvalidTable("missing `rule`".into()))?;
        let minus = minus.ok_or_else(|| EncodeError::InvalidTable("missing `minus`".into()))?;
        cards.sort_by_key(|c| std::cmp::Reverse(c.1));
        for required in [0, 1] {
            if !cards.iter().any(|(_, v)| *v == required) {
                return Err(EncodeError::InvalidTable(format!("missing entry for {required}")));
            }
        }
        let top = cards[0].1;
        if top.saturating_mul(top) <= MAX_WORD_VALUE as u64 {
            return Err(EncodeError::InvalidTable(format!(
                "largest entry {top} is too small to spell {MAX_WORD_VALUE}"
            )));
        }
        Ok(LanguageTable {
            name: name.unwrap_or_else(|| code.clone()),
            code,
            rule,
            minus,
            cards,
            lookup: OnceLock::new(),
        })
    }

    fn card(&self, value: u64) -> Option<&str> {
        self.cards
            .iter()
            .find(|(_, v)| *v == value)
            .map(|(w, _)| w.as_str())
    }

    pub fn to_words(&self, value: i64) -> Result<String, EncodeError> {
        if value.unsigned_abs() > MAX_WORD_VALUE as u64 {
            return Err(EncodeError::OutOfRange(value));
        }
        let words = self.spell(value.unsigned_abs())?;
        Ok(if value < 0 {
            format!("{} {}", self.minus, words)
        } else {
            words
        })
    }

    fn spell(&self, value: u64) -> Result<String, EncodeError> {
        let tree = self.split(value)?;
        Ok(self.clean(tree).0)
    }

    fn split(&self, value: u64) -> Result<Vec<Node>, EncodeError> {
        let one = self.card(1).expect("validated").to_string();
        for (word, elem) in &self.cards {
            if *elem > value {
                continue;
            }
            let (div, rem) = if value == 0 {
                (1, 0)
            } else {
                (value / elem, value % elem)
            };
            let mut out = Vec::with_capacity(3);
            if div == 1 {
                out.push(Node::Leaf((one.clone(), 1)));
            } else {
                if div == value {
                    // Only reachable when the table lacks the cards needed.
                    return Err(EncodeError::Unspellable(value as i64));
                }
                out.push(Node::List(self.split(div)?));
            }
            out.push(Node::Leaf((word.clone(), *elem)));
            if rem != 0 {
                out.push(Node::List(self.split(rem)?));
            }
            return Ok(out);
        }
        Err(EncodeError::Unspellable(value as i64))
    }

    fn clean(&self, mut val: Vec<Node>) -> Piece {
        while val.len() != 1 {
            let both_leaves = matches!((&val[0], &val[1]), (Node::Leaf(_), Node::Leaf(_)));
            let mut out = Vec::with_capacity(2);
            if both_leaves {
                let rest = val.split_off(2);
                let mut it = val.into_iter();
                let (Some(Node::Leaf(l)), Some(Node::Leaf(r))) = (it.next(), it.next()) else {
                    unreachable!()
                };
                out.push(Node::Leaf(self.merge(l, r)));
                if !rest.is_empty() {
                    out.push(Node::List(rest));
                }
            } else {
                for elem in val {
                    match elem {
                        Node::List(mut inner) if inner.len() == 1 => {
                            out.push(inner.pop().expect("len 1"))
                        }
                        Node::List(inner) => out.push(Node::Leaf(self.clean(inner))),
                        leaf => out.push(leaf),
                    }
                }
            }
            val = out;
        }
        match val.pop().expect("len 1") {
            Node::Leaf(p) => p,
            Node::List(inner) => self.clean(inner),
        }
    }

    fn merge(&self, left: Piece, right: Piece) -> Piece {
        match self.rule {
            CompositionRule::English => merge_english(left, right),
            CompositionRule::German => merge_german(left, right),
            CompositionRule::Dutch => merge_dutch(left, right),
            CompositionRule::French => merge_french(left, right),
            CompositionRule::Spanish => merge_spanish(left, right),
            CompositionRule::SinoKorean => merge_sino_korean(left, right),
        }
    }

    /// Inverse of [`to_words`](Self::to_words).
    pub fn parse_words(&self, text: &str) -> Result<i64, EncodeError> {
        let unparseable = || EncodeError::UnparseableNumberWord(text.trim().to_string());
        let key = normalize(text);
        if key.is_empty() {
            return Err(unparseable());
        }
        let lookup = self.lookup();

        if let Some(rest) = key.strip_prefix(&lookup.minus) {
            if let Some(v) = lookup.unsigned(rest) {
                let v = -(v as i64);
                if self.to_words(v).map(|w| normalize(&w)).as_deref() == Ok(key.as_str()) {
                    return Ok(v);
                }
            }
        }
        match lookup.unsigned(&key) {
            Some(v) if self.to_words(v as i64).map(|w| normalize(&w)).as_deref() == Ok(&key) => {
                Ok(v as i64)
            }
            _ => Err(unparseable()),
        }
    }

    fn lookup(&self) -> &Lookup {
        self.lookup.get_or_init(|| Lookup::build(self))
    }
}

/// Reverse indices derived from the spelling function.
struct Lookup {
    minus: String,
    scale: u64,
    scale_key: String,
    /// Standalone spellings of `0..scale`.
    whole: HashMap<String, u64>,
    /// Spellings of the multiplier `c` as it appears in `c × scale`.
    multiplier: HashMap<String, u64>,
    /// Spellings of the remainder `r` as it appears after the scale word.
    remainder: HashMap<String, u64>,
}

impl Lookup {
    fn build(table: &LanguageTable) -> Self {
        let (scale_word, scale) = table
            .cards
            .iter()
            .find(|(_, v)| *v <= MAX_WORD_VALUE as u64)
            .cloned()
            .expect("validated table has small cards");
        let scale_key = normalize(&scale_word);
        let spell = |v: u64| table.spell(v).map(|w| normalize(&w)).ok();

        let mut whole = HashMap::new();
        for v in 0..scale {
            if let Some(w) = spell(v) {
                whole.entry(w).or_insert(v);
            }
        }
        let mut multiplier = HashMap::new();
        for c in 1..=(MAX_WORD_VALUE as u64 / scale) {
            if let Some(w) = spell(c * scale) {
                if let Some(prefix) = w.strip_suffix(&scale_key) {
                    multiplier.entry(prefix.to_string()).or_insert(c);
                }
            }
        }
        let mut remainder = HashMap::new();
        if let Some(head) = spell(scale) {
            for r in 1..scale {
                if let Some(w) = spell(scale + r) {
                    if let Some(tail) = w.strip_prefix(&head) {
                        remainder.entry(tail.to_string()).or_insert(r);
                    }
                }
            }
        }
        Lookup {
            minus: normalize(&table.minus),
            scale,
            scale_key,
            whole,
            multiplier,
            remainder,
        }
    }

    fn unsigned(&self, key: &str) -> Option<u64> {
        if let Some(&v) = self.whole.get(key) {
            return Some(v);
        }
        for (pos, _) in key.match_indices(&self.scale_key) {
            let (left, right) = (&key[..pos], &key[pos + self.scale_key.len()..]);
            let hi = if left.is_empty() {
                Some(1)
            } else {
                self.multiplier.get(left).copied()
            };
            let lo = if right.is_empty() {
                Some(0)
            } else {
                self.remainder.get(right).copied()
            };
            if let (Some(hi), Some(lo)) = (hi, lo) {
                return Some(hi * self.scale + lo);
            }
        }
        None
    }
}

/// Lowercases, strips Latin diacritics and drops whitespace, hyphens,
/// commas and periods.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() || matches!(c, '-' | '‐' | '‑' | '–' | ',' | '.') {
            continue;
        }
        out.push(fold_diacritic(c));
    }
    out
}

fn fold_diacritic(c: char) -> char {
    match c {
        'à' | 'á' | 'â' | 'ä' | 'ã' | 'å' => 'a',
        'è' | 'é' | 'ê' | 'ë' => 'e',
        'ì' | 'í' | 'î' | 'ï' => 'i',
        'ò' | 'ó' | 'ô' | 'ö' | 'õ' => 'o',
        'ù' | 'ú' | 'û' | 'ü' => 'u',
        'ñ' => 'n',
        'ç' => 'c',
        'ý' | 'ÿ' => 'y',
        other => other,
    }
}

fn merge_english((lt, ln): Piece, (rt, rn): Piece) -> Piece {
    if ln == 1 && rn < 100 {
        (rt, rn)
    } else if 100 > ln && ln > rn {
        (format!("{lt}-{rt}"), ln + rn)
    } else if ln >= 100 && 100 > rn {
        (format!("{lt} and {rt}"), ln + rn)
    } else if rn > ln {
        (format!("{lt} {rt}"), ln * rn)
    } else {
        (format!("{lt}, {rt}"), ln + rn)
    }
}

fn merge_german((mut ct, cn): Piece, (mut nt, nn): Piece) -> Piece {
    if cn == 1 {
        if nn == 100 || nn == 1000 {
            return (format!("ein{nt}"), nn);
        } else if nn < 1_000_000 {
            return (nt, nn);
        }
        ct = "eine".into();
    }
    let val;
    if nn > cn {
        if nn >= 1_000_000 {
            if cn > 1 {
                nt.push_str(if nt.ends_with('e') { "n" } else { "en" });
            }
            ct.push(' ');
        }
        val = cn * nn;
    } else {
        if nn < 10 && 10 < cn && cn < 100 {
            if nn == 1 {
                nt = "ein".into();
            }
            (nt, ct) = (ct, format!("{nt}und"));
        } else if cn >= 1_000_000 {
            ct.push(' ');
        }
        val = cn + nn;
    }
    (ct + &nt, val)
}

fn merge_dutch((mut ct, cn): Piece, (mut nt, nn): Piece) -> Piece {
    if cn == 1 {
        if nn < 1_000_000 {
            return (nt, nn);
        }
        ct = "een".into();
    }
    let val;
    if nn > cn {
        if nn >= 1_000_000 {
            ct.push(' ');
        }
        val = cn * nn;
    } else {
        if nn < 10 && 10 < cn && cn < 100 {
            if nn == 1 {
                nt = "een".into();
            }
            nt.push_str(if nt.ends_with('e') { "ën" } else { "en" });
            (nt, ct) = (ct, nt);
        } else if cn >= 1_000_000 {
            ct.push(' ');
        }
        val = cn + nn;
    }
    (ct + &nt, val)
}

fn merge_french((mut ct, cn): Piece, (mut nt, nn): Piece) -> Piece {
    if cn == 1 {
        if nn < 1_000_000 {
            return (nt, nn);
        }
    } else {
        let eighty_like = (cn as i64 - 80).rem_euclid(100) == 0;
        let round_hundreds = cn % 100 == 0 && cn < 1000;
        if (eighty_like || round_hundreds) && nn < 1_000_000 && ct.ends_with('s') {
            ct.pop();
        }
        if cn < 1000 && nn != 1000 && !nt.ends_with('s') && nn % 100 == 0 {
            nt.push('s');
        }
    }
    if nn < cn && cn < 100 {
        if nn % 10 == 1 && cn != 80 {
            return (format!("{ct} et {nt}"), cn + nn);
        }
        return (format!("{ct}-{nt}"), cn + nn);
    }
    if nn > cn {
        return (format!("{ct} {nt}"), cn * nn);
    }
    (format!("{ct} {nt}"), cn + nn)
}

fn merge_spanish((mut ct, cn): Piece, (mut nt, nn): Piece) -> Piece {
    if cn == 1 {
        if nn < 1_000_000 {
            return (nt, nn);
        }
        ct = "un".into();
    } else if cn == 100 && nn % 1000 != 0 {
        ct.push_str("to");
    }
    if nn < cn {
        if cn < 100 {
            return (format!("{ct} y {nt}"), cn + nn);
        }
        return (format!("{ct} {nt}"), cn + nn);
    } else if nn % 1_000_000 == 0 && cn > 1 {
        let keep = nt.chars().count().saturating_sub(3);
        nt = nt.chars().take(keep).collect::<String>() + "lones";
    }
    if nn == 100 {
        match cn {
            5 => {
                ct = "quinien".into();
                nt.clear();
            }
            7 => ct = "sete".into(),
            9 => ct = "nove".into(),
            _ => {}
        }
        nt.push_str("tos");
    } else {
        nt = format!(" {nt}");
    }
    (ct + &nt, cn * nn)
}

fn merge_sino_korean((lt, ln): Piece, (rt, rn): Piece) -> Piece {
    if ln == 1 && rn <= 10_000 {
        (rt, rn)
    } else if 10_000 > ln && ln > rn {
        (format!("{lt}{rt}"), ln + rn)
    } else if ln >= 10_000 && ln > rn {
        (format!("{lt} {rt}"), ln + rn)
    } else {
        (format!("{lt}{rt}"), ln * rn)
    }
}

static REGISTRY: LazyLock<RwLock<Vec<Arc<LanguageTable>>>> = LazyLock::new(|| {
    let tables = BUILTIN_TABLES
        .iter()
        .map(|text| Arc::new(LanguageTable::parse(text).expect("builtin language table")))
        .collect();
    RwLock::new(tables)
});

/// Looks a language up by code (`de`) or name (`German`), case-insensitively.
pub fn language(code: &str) -> Result<Arc<LanguageTable>, EncodeError> {
    let wanted = code.trim().to_lowercase();
    let registry = REGISTRY.read().expect("language registry poisoned");
    registry
        .iter()
        .find(|t| t.code.to_lowercase() == wanted)
        .or_else(|| registry.iter().find(|t| t.name.to_lowercase() == wanted))
        .cloned()
        .ok_or_else(|| EncodeError::UnsupportedLanguage(code.to_string()))
}

/// Adds a table to the registry, replacing any table with the same code.
pub fn register_language(table: LanguageTable) {
    let mut registry = REGISTRY.write().expect("language registry poisoned");
    registry.retain(|t| !t.code.eq_ignore_ascii_case(&table.code));
    registry.push(Arc::new(table));
}

/// Codes of all registered languages, in registration order.
pub fn supported_languages() -> Vec<String> {
    REGISTRY
        .read()
        .expect("language registry poisoned")
        .iter()
        .map(|t| t.code.clone())
        .collect()
}

pub fn number_to_words(value: i64, language_code: &str) -> Result<String, EncodeError> {
    language(language_code)?.to_words(value)
}

pub fn words_to_number(text: &str, language_code: &str) -> Result<i64, EncodeError> {
    language(language_code)?.parse_words(text)
}
