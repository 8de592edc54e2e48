//! Web-context extraction against a pluggable search provider.
//!
//! The shipped provider is a local TF/IDF index over a directory of text
//! files. Results are clustered by single-link connected components over a
//! Jaccard threshold graph of their descriptor sets; the heaviest cluster
//! supplies the service's context descriptors.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::ContextError;
use crate::scalar::{cmp_desc, Scalar};
use crate::tfidf::{build_corpus_stats, tfidf_weight, top_descriptors, CorpusStats, TermWeight};
use crate::tokenize::{Token, TokenBag, Tokenizer};

pub const DEFAULT_THETA: f64 = 0.3;
pub const DEFAULT_RESULT_DESCRIPTORS: usize = 10;
pub const DEFAULT_RESULTS: usize = 10;
pub const DEFAULT_CONTEXT_DESCRIPTORS: usize = 10;

/// Local stand-in for a web search engine: tokenized documents plus their
/// corpus statistics.
#[derive(Debug, Clone)]
pub struct ContextIndex {
    docs: BTreeMap<String, TokenBag>,
    stats: CorpusStats,
    /// Files that could not be read, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl ContextIndex {
    /// Indexes `(doc_id, text)` pairs with the given tokenizer.
    pub fn from_documents<I, K, V>(docs: I, tokenizer: &Tokenizer) -> Result<Self, ContextError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: AsRef<str>,
    {
        let docs: BTreeMap<String, TokenBag> = docs
            .into_iter()
            .map(|(id, text)| {
                let id = id.into();
                let bag = TokenBag::from_tokens(id.clone(), tokenizer.tokens(text.as_ref()));
                (id, bag)
            })
            .collect();
        let stats = build_corpus_stats(docs.values())
            .map_err(|_| ContextError::CorpusTooSmall { n_docs: docs.len() })?;
        Ok(ContextIndex {
            docs,
            stats,
            skipped: Vec::new(),
        })
    }

    /// Indexes every `.txt` file of `dir`; the doc id is the file stem.
    /// Unreadable files are skipped with a warning.
    pub fn from_dir(dir: &Path, tokenizer: &Tokenizer) -> Result<Self, ContextError> {
        let io_err = |source| ContextError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths = Vec::new();
        for entry in fs::read_dir(dir).map_err(io_err)? {
            let path = entry.map_err(io_err)?.path();
            if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
                paths.push(path);
            }
        }
        paths.sort();

        let mut texts = Vec::new();
        let mut skipped = Vec::new();
        for path in paths {
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else {
                skipped.push((path, "file name is not valid UTF-8".to_owned()));
                continue;
            };
            match fs::read_to_string(&path) {
                Ok(text) => texts.push((id, text)),
                Err(e) => {
                    let err = ContextError::UnreadableFile {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    };
                    warn!("skipping {err}");
                    skipped.push((path, e.to_string()));
                }
            }
        }
        let mut index = Self::from_documents(texts, tokenizer)?;
        index.skipped = skipped;
        Ok(index)
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn docs(&self) -> &BTreeMap<String, TokenBag> {
        &self.docs
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }
}

/// One scored hit with the hit document's own top descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult<S> {
    pub doc_id: String,
    pub score: S,
    pub descriptors: Vec<TermWeight<S>>,
}

impl<S> SearchResult<S> {
    pub fn token_set(&self) -> BTreeSet<&Token> {
        self.descriptors.iter().map(|d| &d.term).collect()
    }
}

/// Anything that answers a token query with scored, described results.
pub trait SearchProvider<S: Scalar> {
    fn search(&self, query: &[Token], n: usize) -> Vec<SearchResult<S>>;
}

/// [`SearchProvider`] backed by a [`ContextIndex`].
#[derive(Debug, Clone, Copy)]
pub struct LocalSearch<'a> {
    pub index: &'a ContextIndex,
    /// Descriptors attached to each result.
    pub result_descriptors: usize,
}

impl<'a> LocalSearch<'a> {
    pub fn new(index: &'a ContextIndex, result_descriptors: usize) -> Self {
        LocalSearch {
            index,
            result_descriptors,
        }
    }
}

impl<S: Scalar> SearchProvider<S> for LocalSearch<'_> {
    fn search(&self, query: &[Token], n: usize) -> Vec<SearchResult<S>> {
        search(self.index, query, n, self.result_descriptors)
    }
}

/// Scores every non-empty document by the summed TF/IDF weight of the
/// distinct query tokens and returns the top `n` positive hits, ordered by
/// descending score then doc id.
pub fn search<S: Scalar>(index: &ContextIndex, query: &[Token], n: usize, j: usize) -> Vec<SearchResult<S>> {
    if n == 0 || j == 0 {
        return Vec::new();
    }
    let terms: BTreeSet<&Token> = query.iter().filter(|t| index.stats.contains(t.as_str())).collect();
    if terms.is_empty() {
        return Vec::new();
    }
    let mut hits: Vec<(&String, S)> = index
        .docs
        .iter()
        .filter(|(_, bag)| !bag.is_empty())
        .filter_map(|(id, bag)| {
            let score: S = terms
                .iter()
                .filter_map(|t| tfidf_weight::<S>(t.as_str(), bag, &index.stats).ok())
                .map(|w| w.weight)
                .sum();
            (score > S::zero()).then_some((id, score))
        })
        .collect();
    hits.sort_by(|a, b| cmp_desc(a.1, b.1).then_with(|| a.0.cmp(b.0)));
    hits.truncate(n);
    hits.into_iter()
        .map(|(id, score)| {
            let descriptors = top_descriptors(&index.docs[id], &index.stats, j, S::zero())
                .map(|d| d.descriptors)
                .unwrap_or_default();
            SearchResult {
                doc_id: id.clone(),
                score,
                descriptors,
            }
        })
        .collect()
}

/// A connected group of results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorCluster<S> {
    pub member_ids: BTreeSet<String>,
    /// Member descriptor weights summed per token.
    pub aggregate: BTreeMap<Token, S>,
    /// Sum of member scores.
    pub mass: S,
}

/// The external-perspective descriptors of one service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebContext<S> {
    pub service_id: String,
    pub descriptors: Vec<(Token, S)>,
}

impl<S: Scalar> WebContext<S> {
    pub fn empty(service_id: impl Into<String>) -> Self {
        WebContext {
            service_id: service_id.into(),
            descriptors: Vec::new(),
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.descriptors.iter().map(|(t, _)| t)
    }

    pub fn weight_of(&self, token: &str) -> Option<S> {
        self.descriptors.iter().find(|(t, _)| t.as_str() == token).map(|&(_, w)| w)
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }
}

/// `|A ∩ B| / |A ∪ B|`; two empty sets count as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn check_theta(theta: f64) -> Result<(), ContextError> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(ContextError::InvalidParameter {
            name: "theta",
            value: theta.to_string(),
        })
    }
}

/// Groups results into connected components of the graph linking every pair
/// whose descriptor sets have Jaccard similarity `>= theta`.
///
/// Clusters come out ordered by their smallest member id. Sums are taken in
/// doc-id order so the result does not depend on input order.
pub fn cluster_results<S: Scalar>(results: &[SearchResult<S>], theta: f64) -> Result<Vec<DescriptorCluster<S>>, ContextError> {
    check_theta(theta)?;
    let mut sorted: Vec<&SearchResult<S>> = results.iter().collect();
    sorted.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let sets: Vec<BTreeSet<&Token>> = sorted.iter().map(|r| r.token_set()).collect();

    let mut ds = DisjointSet::new(sorted.len());
    for i in 0..sorted.len() {
        for k in i + 1..sorted.len() {
            if jaccard(&sets[i], &sets[k]) >= theta {
                ds.union(i, k);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..sorted.len() {
        let root = ds.find(i);
        groups.entry(root).or_default().push(i);
    }
    Ok(groups
        .into_values()
        .map(|members| {
            let mut aggregate: BTreeMap<Token, S> = BTreeMap::new();
            let mut mass = S::zero();
            for &i in &members {
                mass = mass + sorted[i].score;
                for d in &sorted[i].descriptors {
                    let slot = aggregate.entry(d.term.clone()).or_insert_with(S::zero);
                    *slot = *slot + d.weight;
                }
            }
            DescriptorCluster {
                member_ids: members.iter().map(|&i| sorted[i].doc_id.clone()).collect(),
                aggregate,
                mass,
            }
        })
        .collect())
}

/// Picks the heaviest cluster (ties: smallest member id) and returns its
/// top `m` aggregated tokens.
pub fn extract_web_context<S: Scalar>(
    service_id: &str,
    results: &[SearchResult<S>],
    theta: f64,
    m: usize,
) -> Result<WebContext<S>, ContextError> {
    if m == 0 {
        return Err(ContextError::InvalidParameter {
            name: "m",
            value: m.to_string(),
        });
    }
    let clusters = cluster_results(results, theta)?;
    // clusters are already ordered by smallest member id, so the first
    // maximum wins ties
    let winner = clusters.iter().fold(None::<&DescriptorCluster<S>>, |best, c| match best {
        Some(b) if b.mass >= c.mass => Some(b),
        _ => Some(c),
    });
    let Some(winner) = winner else {
        return Ok(WebContext::empty(service_id));
    };
    let mut descriptors: Vec<(Token, S)> = winner
        .aggregate
        .iter()
        .filter(|(_, &w)| w > S::zero())
        .map(|(t, &w)| (t.clone(), w))
        .collect();
    descriptors.sort_by(|a, b| cmp_desc(a.1, b.1).then_with(|| a.0.cmp(&b.0)));
    descriptors.truncate(m);
    Ok(WebContext {
        service_id: service_id.to_owned(),
        descriptors,
    })
}
