//! Label splitting, stop-word filtering and per-service token bags.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::wsdl::WsdlDocument;

/// A lowercase, ASCII-alphabetic, non-empty word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Token(String);

impl Token {
    pub fn new(text: &str) -> Option<Token> {
        let valid = !text.is_empty() && text.bytes().all(|b| b.is_ascii_lowercase());
        valid.then(|| Token(text.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<String> for Token {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Token::new(&value).ok_or_else(|| format!("invalid token `{value}`"))
    }
}

impl From<Token> for String {
    fn from(t: Token) -> String {
        t.0
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// English function words plus WSDL/SOAP boilerplate.
pub const BUILTIN_STOP_WORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "either",
    "else", "etc", "ever", "every", "few", "for", "from", "further", "had", "has", "have",
    "having", "he", "her", "here", "hers", "him", "his", "how", "however", "if", "in", "into",
    "is", "it", "its", "itself", "just", "may", "me", "might", "more", "most", "must", "my",
    "neither", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other",
    "our", "ours", "out", "over", "own", "per", "same", "shall", "she", "should", "so", "some",
    "such", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this",
    "those", "through", "thus", "to", "too", "under", "until", "up", "upon", "us", "very", "via",
    "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "within", "without", "would", "yet", "you", "your",
    // WSDL boilerplate
    "get", "set", "request", "response", "soap", "http", "input", "output", "type", "array",
];

/// Immutable set of lowercase stop words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWordList {
    words: BTreeSet<String>,
}

impl StopWordList {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        Self::from_words(BUILTIN_STOP_WORDS.iter().copied())
    }

    /// Normalizes entries (trim, lowercase) and drops blanks.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let words = words
            .into_iter()
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty())
            .collect();
        StopWordList { words }
    }

    /// Parses the one-word-per-line format; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Self::from_words(text.lines().map(|l| l.split('#').next().unwrap_or("")))
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn extend(&mut self, other: &StopWordList) {
        self.words.extend(other.words.iter().cloned());
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

/// Splits an identifier-like label into lowercase word tokens.
///
/// Boundaries: any non-ASCII-alphanumeric character, lower→upper,
/// the last capital of an uppercase run followed by a lowercase letter
/// (`XMLParser` → `xml`, `parser`) and letter↔digit transitions.
/// Digit fragments are dropped.
pub fn split_label(raw: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for run in raw.split(|c: char| !c.is_ascii_alphanumeric()) {
        let bytes = run.as_bytes();
        let mut start = 0;
        for i in 1..bytes.len() {
            let (prev, cur) = (bytes[i - 1], bytes[i]);
            let next_lower = bytes.get(i + 1).is_some_and(u8::is_ascii_lowercase);
            let boundary = (prev.is_ascii_lowercase() && cur.is_ascii_uppercase())
                || (prev.is_ascii_alphabetic() != cur.is_ascii_alphabetic())
                || (prev.is_ascii_uppercase() && cur.is_ascii_uppercase() && next_lower);
            if boundary {
                push_fragment(&run[start..i], &mut out);
                start = i;
            }
        }
        push_fragment(&run[start..], &mut out);
    }
    out
}

fn push_fragment(fragment: &str, out: &mut Vec<Token>) {
    if fragment.bytes().all(|b| b.is_ascii_alphabetic()) {
        out.extend(Token::new(&fragment.to_ascii_lowercase()));
    }
}

/// Drops stop words and tokens shorter than `min_len`, keeping order and
/// duplicates of the survivors.
pub fn filter_tokens(tokens: Vec<Token>, stoplist: &StopWordList, min_len: usize) -> Vec<Token> {
    tokens
        .into_iter()
        .filter(|t| t.len() >= min_len && !stoplist.contains(t.as_str()))
        .collect()
}

/// Strips a plural `s` (not `ss`) from words longer than three letters.
pub fn stem_plural(token: Token) -> Token {
    let s = token.as_str();
    if s.len() > 3 && s.ends_with('s') && !s.ends_with("ss") {
        Token(s[..s.len() - 1].to_owned())
    } else {
        token
    }
}

pub const DEFAULT_MIN_LEN: usize = 2;

/// Split + filter configuration shared by every text source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    pub stoplist: StopWordList,
    pub min_len: usize,
    pub stem_plurals: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(StopWordList::builtin())
    }
}

impl Tokenizer {
    pub fn new(stoplist: StopWordList) -> Self {
        Tokenizer {
            stoplist,
            min_len: DEFAULT_MIN_LEN,
            stem_plurals: false,
        }
    }

    pub fn with_min_len(mut self, min_len: usize) -> Self {
        self.min_len = min_len.max(1);
        self
    }

    pub fn with_stemming(mut self, on: bool) -> Self {
        self.stem_plurals = on;
        self
    }

    /// Split, optionally stem, then filter.
    pub fn tokens(&self, text: &str) -> Vec<Token> {
        let mut tokens = split_label(text);
        if self.stem_plurals {
            tokens = tokens.into_iter().map(stem_plural).collect();
        }
        filter_tokens(tokens, &self.stoplist, self.min_len)
    }

    pub fn token_set(&self, text: &str) -> BTreeSet<Token> {
        self.tokens(text).into_iter().collect()
    }
}

/// Term counts of one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBag")]
pub struct TokenBag {
    pub service_id: String,
    counts: BTreeMap<Token, u64>,
    total: u64,
}

#[derive(Deserialize)]
struct RawBag {
    service_id: String,
    counts: BTreeMap<Token, u64>,
    total: u64,
}

impl TryFrom<RawBag> for TokenBag {
    type Error = String;

    fn try_from(raw: RawBag) -> Result<Self, Self::Error> {
        if raw.counts.values().any(|&c| c == 0) {
            return Err(format!("bag `{}` has a zero count", raw.service_id));
        }
        let sum: u64 = raw.counts.values().sum();
        if sum != raw.total {
            return Err(format!(
                "bag `{}`: total {} does not match count sum {sum}",
                raw.service_id, raw.total
            ));
        }
        Ok(TokenBag {
            service_id: raw.service_id,
            counts: raw.counts,
            total: raw.total,
        })
    }
}

impl TokenBag {
    pub fn from_tokens(service_id: impl Into<String>, tokens: impl IntoIterator<Item = Token>) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for t in tokens {
            *counts.entry(t).or_insert(0) += 1;
            total += 1;
        }
        TokenBag {
            service_id: service_id.into(),
            counts,
            total,
        }
    }

    /// Builds a bag from explicit counts; zero counts are dropped.
    pub fn from_counts(service_id: impl Into<String>, counts: impl IntoIterator<Item = (Token, u64)>) -> Self {
        let counts: BTreeMap<Token, u64> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let total = counts.values().sum();
        TokenBag {
            service_id: service_id.into(),
            counts,
            total,
        }
    }

    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Token, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn terms(&self) -> impl Iterator<Item = &Token> {
        self.counts.keys()
    }
}

/// All filtered tokens of a service's labels, in label order.
pub fn service_tokens(doc: &WsdlDocument, tokenizer: &Tokenizer) -> Vec<Token> {
    doc.labels
        .iter()
        .flat_map(|l| tokenizer.tokens(&l.raw))
        .collect()
}

pub fn tokenize_service(doc: &WsdlDocument, tokenizer: &Tokenizer) -> TokenBag {
    TokenBag::from_tokens(doc.service_id.clone(), service_tokens(doc, tokenizer))
}
