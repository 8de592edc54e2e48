//! Corpus statistics and TF/IDF descriptor selection.
//!
//! `tf = count / total`, `idf = ln(N / df)`, `weight = tf * idf`. No
//! smoothing: every vocabulary term has `df >= 1` by construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::TfidfError;
use crate::scalar::{cmp_desc, Scalar};
use crate::tokenize::{Token, TokenBag};

pub const DEFAULT_K: usize = 10;

/// Document count and per-term document frequency of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    n_docs: u64,
    doc_freq: BTreeMap<Token, u64>,
}

impl CorpusStats {
    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn doc_freq(&self, term: &str) -> Option<u64> {
        self.doc_freq.get(term).copied()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &Token> {
        self.doc_freq.keys()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.doc_freq.len()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.doc_freq.contains_key(term)
    }

    /// `ln(N / df)`, or `None` for terms outside the vocabulary.
    pub fn idf<S: Scalar>(&self, term: &str) -> Option<S> {
        let df = self.doc_freq(term)?;
        Some((S::from_count(self.n_docs) / S::from_count(df)).ln())
    }
}

/// Counts documents and document frequencies. Needs at least two bags with
/// distinct service ids.
pub fn build_corpus_stats<'a>(bags: impl IntoIterator<Item = &'a TokenBag>) -> Result<CorpusStats, TfidfError> {
    let stats = count_corpus(bags)?;
    if stats.n_docs < 2 {
        return Err(TfidfError::CorpusTooSmall {
            n_docs: stats.n_docs as usize,
        });
    }
    Ok(stats)
}

/// Like [`build_corpus_stats`] without the minimum size; a one-document
/// corpus gives every term `idf = 0`.
pub(crate) fn count_corpus<'a>(bags: impl IntoIterator<Item = &'a TokenBag>) -> Result<CorpusStats, TfidfError> {
    let mut ids = BTreeSet::new();
    let mut doc_freq: BTreeMap<Token, u64> = BTreeMap::new();
    for bag in bags {
        if !ids.insert(bag.service_id.as_str()) {
            return Err(TfidfError::DuplicateServiceId {
                service_id: bag.service_id.clone(),
            });
        }
        for term in bag.terms() {
            *doc_freq.entry(term.clone()).or_insert(0) += 1;
        }
    }
    Ok(CorpusStats {
        n_docs: ids.len() as u64,
        doc_freq,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight<S> {
    pub term: Token,
    pub tf: S,
    pub idf: S,
    pub weight: S,
}

/// TF/IDF weight of `term` in `bag`. Terms absent from the bag get `tf = 0`.
pub fn tfidf_weight<S: Scalar>(term: &str, bag: &TokenBag, stats: &CorpusStats) -> Result<TermWeight<S>, TfidfError> {
    if bag.is_empty() {
        return Err(TfidfError::EmptyBag {
            service_id: bag.service_id.clone(),
        });
    }
    let (token, idf) = stats
        .doc_freq
        .get_key_value(term)
        .map(|(t, _)| (t.clone(), stats.idf::<S>(term).unwrap_or_else(S::zero)))
        .ok_or_else(|| TfidfError::UnknownTerm { term: term.to_owned() })?;
    let tf = S::from_count(bag.count(term)) / S::from_count(bag.total());
    Ok(TermWeight {
        term: token,
        tf,
        idf,
        weight: tf * idf,
    })
}

/// A service's highest-weighted terms, ordered by descending weight then
/// ascending term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet<S> {
    pub service_id: String,
    pub descriptors: Vec<TermWeight<S>>,
}

impl<S: Scalar> DescriptorSet<S> {
    pub fn terms(&self) -> impl Iterator<Item = &Token> {
        self.descriptors.iter().map(|d| &d.term)
    }

    pub fn weight_of(&self, term: &str) -> Option<S> {
        self.descriptors.iter().find(|d| d.term.as_str() == term).map(|d| d.weight)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

pub(crate) fn sort_term_weights<S: Scalar>(v: &mut [TermWeight<S>]) {
    v.sort_by(|a, b| cmp_desc(a.weight, b.weight).then_with(|| a.term.cmp(&b.term)));
}

/// The at most `k` terms of `bag` whose weight is strictly above
/// `min_weight`.
pub fn top_descriptors<S: Scalar>(
    bag: &TokenBag,
    stats: &CorpusStats,
    k: usize,
    min_weight: S,
) -> Result<DescriptorSet<S>, TfidfError> {
    if k == 0 {
        return Err(TfidfError::InvalidParameter {
            name: "k",
            value: k.to_string(),
        });
    }
    if min_weight.is_nan() || min_weight < S::zero() {
        return Err(TfidfError::InvalidParameter {
            name: "min_weight",
            value: min_weight.to_string(),
        });
    }
    if bag.is_empty() {
        return Err(TfidfError::EmptyBag {
            service_id: bag.service_id.clone(),
        });
    }
    let mut weights = Vec::with_capacity(bag.counts().len());
    for term in bag.terms() {
        let w = tfidf_weight::<S>(term.as_str(), bag, stats)?;
        if w.weight > min_weight {
            weights.push(w);
        }
    }
    sort_term_weights(&mut weights);
    weights.truncate(k);
    Ok(DescriptorSet {
        service_id: bag.service_id.clone(),
        descriptors: weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Token {
        Token::new(s).unwrap()
    }

    fn bag(id: &str, counts: &[(&str, u64)]) -> TokenBag {
        TokenBag::from_counts(id, counts.iter().map(|&(w, c)| (t(w), c)))
    }

    #[test]
    fn corpus_stats_counting() {
        let bags = [
            bag("a", &[("weather", 2)]),
            bag("b", &[("stock", 1)]),
            bag("c", &[("weather", 1), ("stock", 1)]),
        ];
        let stats = build_corpus_stats(&bags).unwrap();
        assert_eq!(stats.n_docs(), 3);
        assert_eq!(stats.doc_freq("weather"), Some(2));
        assert_eq!(stats.doc_freq("stock"), Some(2));
        assert_eq!(stats.vocabulary_len(), 2);
    }

    #[test]
    fn corpus_stats_errors() {
        let one = [bag("a", &[("x", 1)])];
        assert_eq!(build_corpus_stats(&one), Err(TfidfError::CorpusTooSmall { n_docs: 1 }));
        let dup = [bag("a", &[("x", 1)]), bag("a", &[("y", 1)])];
        assert!(matches!(build_corpus_stats(&dup), Err(TfidfError::DuplicateServiceId { .. })));
        let same = [bag("a", &[("x", 3), ("y", 1)]), bag("b", &[("x", 3), ("y", 1)])];
        let stats = build_corpus_stats(&same).unwrap();
        assert_eq!(stats.doc_freq("x"), Some(2));
        assert_eq!(stats.doc_freq("y"), Some(2));
    }

    fn four_doc_corpus() -> Vec<TokenBag> {
        vec![
            bag("a", &[("weather", 2), ("city", 3), ("zip", 5)]),
            bag("b", &[("city", 1), ("zip", 1)]),
            bag("c", &[("city", 1), ("zip", 2), ("stock", 1)]),
            bag("d", &[("city", 4), ("stock", 1)]),
        ]
    }

    #[test]
    fn weight_example() {
        let bags = four_doc_corpus();
        let stats = build_corpus_stats(&bags).unwrap();
        let w = tfidf_weight::<f64>("weather", &bags[0], &stats).unwrap();
        assert_eq!(w.tf, 0.2);
        assert!((w.idf - 1.386_294_361_119_890_6).abs() < 1e-15);
        // 0.2 * ln 4, computed independently
        assert!((w.weight - 0.277_258_872_223_978_1).abs() < 1e-12);
    }

    #[test]
    fn term_in_every_document_scores_zero() {
        let bags = four_doc_corpus();
        let stats = build_corpus_stats(&bags).unwrap();
        let w = tfidf_weight::<f64>("city", &bags[3], &stats).unwrap();
        assert_eq!(w.idf, 0.0);
        assert_eq!(w.weight, 0.0);
    }

    #[test]
    fn absent_and_unknown_terms() {
        let bags = four_doc_corpus();
        let stats = build_corpus_stats(&bags).unwrap();
        let w = tfidf_weight::<f64>("weather", &bags[1], &stats).unwrap();
        assert_eq!((w.tf, w.weight), (0.0, 0.0));
        assert_eq!(
            tfidf_weight::<f64>("nothing", &bags[1], &stats),
            Err(TfidfError::UnknownTerm { term: "nothing".into() })
        );
        let empty = bag("e", &[]);
        assert!(matches!(tfidf_weight::<f64>("city", &empty, &stats), Err(TfidfError::EmptyBag { .. })));
    }

    #[test]
    fn single_precision_agrees() {
        let bags = four_doc_corpus();
        let stats = build_corpus_stats(&bags).unwrap();
        let w32 = tfidf_weight::<f32>("weather", &bags[0], &stats).unwrap();
        assert!((w32.weight as f64 - 0.277_258_872_223_978_1).abs() < 1e-6);
    }

    #[test]
    fn top_descriptors_order_and_filter() {
        // weather: 2/10 * ln4, zip: 5/10 * ln(4/3), stock absent, city idf 0
        let bags = four_doc_corpus();
        let stats = build_corpus_stats(&bags).unwrap();
        let set = top_descriptors::<f64>(&bags[0], &stats, 5, 0.0).unwrap();
        let terms: Vec<_> = set.terms().map(Token::as_str).collect();
        // brute force: weather = 0.27726, zip = 0.14384
        assert_eq!(terms, ["weather", "zip"]);
        let set = top_descriptors::<f64>(&bags[0], &stats, 1, 0.0).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn top_descriptors_tie_break() {
        let bags = [bag("x", &[("a", 1), ("b", 1)]), bag("y", &[("c", 1)])];
        let stats = build_corpus_stats(&bags).unwrap();
        let set = top_descriptors::<f64>(&bags[0], &stats, 1, 0.0).unwrap();
        assert_eq!(set.terms().map(Token::as_str).collect::<Vec<_>>(), ["a"]);
    }

    #[test]
    fn all_zero_weights_give_empty_set() {
        let bags = [bag("x", &[("a", 1)]), bag("y", &[("a", 4)])];
        let stats = build_corpus_stats(&bags).unwrap();
        assert!(top_descriptors::<f64>(&bags[0], &stats, 3, 0.0).unwrap().is_empty());
    }

    #[test]
    fn top_descriptors_errors() {
        let bags = four_doc_corpus();
        let stats = build_corpus_stats(&bags).unwrap();
        assert!(matches!(top_descriptors::<f64>(&bags[0], &stats, 0, 0.0), Err(TfidfError::InvalidParameter { .. })));
        assert!(matches!(top_descriptors::<f64>(&bags[0], &stats, 1, -1.0), Err(TfidfError::InvalidParameter { .. })));
        assert!(matches!(top_descriptors::<f64>(&bag("e", &[]), &stats, 1, 0.0), Err(TfidfError::EmptyBag { .. })));
    }
}
