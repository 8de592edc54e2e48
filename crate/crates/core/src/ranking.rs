//! Query-time ranking: concept overlap, TF/IDF cosine similarity and a
//! visit-count priority, blended linearly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::RankingError;
use crate::ontology::Ontology;
use crate::scalar::{cmp_desc, Scalar};
use crate::tfidf::{count_corpus, CorpusStats};
use crate::tokenize::{Token, TokenBag, Tokenizer};

pub const DEFAULT_TOP_K: usize = 10;

/// Blend weights, normalized to sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights<S>", bound = "S: Scalar")]
pub struct RankingWeights<S> {
    pub alpha: S,
    pub beta: S,
    pub gamma: S,
}

#[derive(Deserialize)]
struct RawWeights<S> {
    alpha: S,
    beta: S,
    gamma: S,
}

impl<S: Scalar> TryFrom<RawWeights<S>> for RankingWeights<S> {
    type Error = RankingError;

    fn try_from(raw: RawWeights<S>) -> Result<Self, Self::Error> {
        RankingWeights::new(raw.alpha, raw.beta, raw.gamma)
    }
}

impl<S: Scalar> RankingWeights<S> {
    /// Rejects negative or non-finite values and an all-zero triple, then
    /// divides by the sum.
    pub fn new(alpha: S, beta: S, gamma: S) -> Result<Self, RankingError> {
        let parts = [alpha, beta, gamma];
        if parts.iter().any(|w| !w.is_finite() || *w < S::zero()) {
            return Err(RankingError::InvalidWeights {
                reason: format!("({alpha}, {beta}, {gamma}) must be finite and non-negative"),
            });
        }
        let sum = alpha + beta + gamma;
        if sum <= S::zero() {
            return Err(RankingError::InvalidWeights {
                reason: "weights sum to zero".to_owned(),
            });
        }
        Ok(RankingWeights {
            alpha: alpha / sum,
            beta: beta / sum,
            gamma: gamma / sum,
        })
    }
}

impl<S: Scalar> Default for RankingWeights<S> {
    fn default() -> Self {
        RankingWeights::new(S::lit(0.5), S::lit(0.3), S::lit(0.2)).expect("valid defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub service_id: String,
    pub bag: TokenBag,
    pub concepts: BTreeSet<Token>,
    pub visits: u64,
}

/// Registered services plus everything needed to score them.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry<S> {
    records: BTreeMap<String, ServiceRecord>,
    stats: CorpusStats,
    ontology: Ontology,
    pub weights: RankingWeights<S>,
}

impl<S: Scalar> Registry<S> {
    /// Derives corpus statistics from the records' bags and checks that
    /// every record concept exists in `ontology`.
    pub fn new(
        records: impl IntoIterator<Item = ServiceRecord>,
        ontology: Ontology,
        weights: RankingWeights<S>,
    ) -> Result<Self, RankingError> {
        let records: BTreeMap<String, ServiceRecord> =
            records.into_iter().map(|r| (r.service_id.clone(), r)).collect();
        for r in records.values() {
            if r.bag.service_id != r.service_id {
                return Err(RankingError::InvalidParameter {
                    name: "bag.service_id",
                    value: r.bag.service_id.clone(),
                });
            }
            if let Some(c) = r.concepts.iter().find(|c| !ontology.contains_concept(c.as_str())) {
                return Err(RankingError::InvalidParameter {
                    name: "concepts",
                    value: format!("{}: `{c}` is not an ontology concept", r.service_id),
                });
            }
        }
        let stats = count_corpus(records.values().map(|r| &r.bag))?;
        Ok(Registry {
            records,
            stats,
            ontology,
            weights,
        })
    }

    pub fn records(&self) -> impl Iterator<Item = &ServiceRecord> {
        self.records.values()
    }

    pub fn record(&self, service_id: &str) -> Option<&ServiceRecord> {
        self.records.get(service_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn max_visits(&self) -> u64 {
        self.records.values().map(|r| r.visits).max().unwrap_or(0)
    }

    /// Increments the visit counter and returns the new count.
    pub fn record_visit(&mut self, service_id: &str) -> Result<u64, RankingError> {
        let rec = self
            .records
            .get_mut(service_id)
            .ok_or_else(|| RankingError::UnknownService {
                service_id: service_id.to_owned(),
            })?;
        rec.visits = rec.visits.saturating_add(1);
        Ok(rec.visits)
    }

    pub fn set_visits(&mut self, service_id: &str, visits: u64) -> Result<(), RankingError> {
        let rec = self
            .records
            .get_mut(service_id)
            .ok_or_else(|| RankingError::UnknownService {
                service_id: service_id.to_owned(),
            })?;
        rec.visits = visits;
        Ok(())
    }
}

/// Non-empty list of filtered query tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    tokens: Vec<Token>,
}

impl Query {
    /// Splits and filters raw user terms.
    pub fn parse<T: AsRef<str>>(terms: &[T], tokenizer: &Tokenizer) -> Result<Self, RankingError> {
        Self::from_tokens(terms.iter().flat_map(|t| tokenizer.tokens(t.as_ref())).collect())
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self, RankingError> {
        if tokens.is_empty() {
            Err(RankingError::EmptyQuery)
        } else {
            Ok(Query { tokens })
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents<S> {
    pub concept_score: S,
    pub text_score: S,
    pub priority_score: S,
}

impl<S: Scalar> ScoreComponents<S> {
    pub fn blend(&self, w: &RankingWeights<S>) -> S {
        let s = w.alpha * self.concept_score + w.beta * self.text_score + w.gamma * self.priority_score;
        s.max(S::zero()).min(S::one())
    }

    pub fn scaled(&self, factor: S) -> Self {
        ScoreComponents {
            concept_score: self.concept_score * factor,
            text_score: self.text_score * factor,
            priority_score: self.priority_score * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry<S> {
    pub service_id: String,
    pub score: S,
    pub components: ScoreComponents<S>,
}

fn tfidf_vector<S: Scalar>(counts: impl Iterator<Item = (Token, u64)>, total: u64, stats: &CorpusStats) -> BTreeMap<Token, S> {
    let total = S::from_count(total);
    counts
        .filter_map(|(t, c)| {
            let idf = stats.idf::<S>(t.as_str())?;
            Some((t, S::from_count(c) / total * idf))
        })
        .collect()
}

fn cosine<S: Scalar>(a: &BTreeMap<Token, S>, b: &BTreeMap<Token, S>) -> S {
    let dot: S = a.iter().filter_map(|(t, x)| b.get(t).map(|y| *x * *y)).sum();
    let na = a.values().map(|x| *x * *x).sum::<S>().sqrt();
    let nb = b.values().map(|x| *x * *x).sum::<S>().sqrt();
    if na <= S::zero() || nb <= S::zero() {
        return S::zero();
    }
    (dot / (na * nb)).max(S::zero()).min(S::one())
}

/// Jaccard overlap of two sets, zero when both are empty.
fn overlap<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

pub fn score_components<S: Scalar>(query: &Query, record: &ServiceRecord, registry: &Registry<S>) -> ScoreComponents<S> {
    let q_concepts: BTreeSet<&Token> = query
        .tokens
        .iter()
        .filter(|t| registry.ontology.contains_concept(t.as_str()))
        .collect();
    let r_concepts: BTreeSet<&Token> = record.concepts.iter().collect();
    let concept_score = S::lit(overlap(&q_concepts, &r_concepts));

    let mut q_counts: BTreeMap<Token, u64> = BTreeMap::new();
    for t in &query.tokens {
        *q_counts.entry(t.clone()).or_insert(0) += 1;
    }
    let q_vec = tfidf_vector::<S>(q_counts.into_iter(), query.tokens.len() as u64, &registry.stats);
    let d_vec = tfidf_vector::<S>(
        record.bag.counts().iter().map(|(t, &c)| (t.clone(), c)),
        record.bag.total().max(1),
        &registry.stats,
    );
    let text_score = cosine(&q_vec, &d_vec);

    let max = registry.max_visits();
    let priority_score = if max == 0 {
        S::zero()
    } else {
        (S::from_count(record.visits).ln_1p() / S::from_count(max).ln_1p()).min(S::one())
    };

    ScoreComponents {
        concept_score,
        text_score,
        priority_score,
    }
}

pub fn score_service<S: Scalar>(
    query: &Query,
    record: &ServiceRecord,
    registry: &Registry<S>,
    weights: &RankingWeights<S>,
) -> RankedEntry<S> {
    let components = score_components(query, record, registry);
    RankedEntry {
        service_id: record.service_id.clone(),
        score: components.blend(weights),
        components,
    }
}

/// Orders entries by descending score, then ascending service id.
pub fn sort_entries<S: Scalar>(entries: &mut [RankedEntry<S>]) {
    entries.sort_by(|a, b| cmp_desc(a.score, b.score).then_with(|| a.service_id.cmp(&b.service_id)));
}

pub fn rank_query<S: Scalar>(
    query: &Query,
    registry: &Registry<S>,
    weights: &RankingWeights<S>,
    top_k: usize,
) -> Result<Vec<RankedEntry<S>>, RankingError> {
    if top_k == 0 {
        return Err(RankingError::InvalidParameter {
            name: "top_k",
            value: "0".to_owned(),
        });
    }
    let mut entries: Vec<RankedEntry<S>> = registry
        .records()
        .map(|r| score_service(query, r, registry, weights))
        .collect();
    sort_entries(&mut entries);
    entries.truncate(top_k);
    Ok(entries)
}
