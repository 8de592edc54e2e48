//! Fixture locations and brute-force oracles shared by the integration
//! tests. The oracles work on plain strings and `f64` and deliberately avoid
//! the library's counting, weighting, ranking and clustering code; only
//! tokenization is borrowed, which has its own golden suite.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use ontoboot::tokenize::service_tokens;
use ontoboot::wsdl::load_corpus;
use ontoboot::{Config, Tokenizer};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn desk() -> PathBuf {
    fixtures().join("desk")
}

pub fn moderation() -> PathBuf {
    fixtures().join("moderation")
}

pub fn config_for(root: &Path, output_dir: &Path) -> Config {
    let mut cfg = Config::default();
    cfg.paths.wsdl_dir = Some(root.join("wsdl"));
    cfg.paths.context_dir = Some(root.join("ctx"));
    cfg.paths.output_dir = output_dir.to_path_buf();
    cfg
}

/// Copies a fixture tree (one level of subdirectories) so a test can edit it.
pub fn copy_fixture(root: &Path, into: &Path) {
    for sub in ["wsdl", "ctx"] {
        let dst = into.join(sub);
        fs::create_dir_all(&dst).unwrap();
        for entry in fs::read_dir(root.join(sub)).unwrap() {
            let entry = entry.unwrap();
            fs::copy(entry.path(), dst.join(entry.file_name())).unwrap();
        }
    }
}

/// A document as the oracles see it: an id and its token stream.
#[derive(Debug, Clone)]
pub struct RawDoc {
    pub id: String,
    pub tokens: Vec<String>,
}

pub fn wsdl_docs(root: &Path, tk: &Tokenizer) -> Vec<RawDoc> {
    let corpus = load_corpus(&root.join("wsdl")).unwrap();
    corpus
        .services
        .iter()
        .map(|s| RawDoc {
            id: s.doc.service_id.clone(),
            tokens: service_tokens(&s.doc, tk).iter().map(|t| t.to_string()).collect(),
        })
        .collect()
}

pub fn context_docs(root: &Path, tk: &Tokenizer) -> Vec<RawDoc> {
    let mut docs: Vec<RawDoc> = fs::read_dir(root.join("ctx"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .map(|p| RawDoc {
            id: p.file_stem().unwrap().to_string_lossy().into_owned(),
            tokens: tk.tokens(&fs::read_to_string(&p).unwrap()).iter().map(|t| t.to_string()).collect(),
        })
        .collect();
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    docs
}

/// tf·ln(N/df) by direct recount: occurrences of `term` over the document
/// length, and the number of documents that mention it at all.
pub fn brute_tfidf(docs: &[RawDoc], doc: &RawDoc, term: &str) -> f64 {
    let count = doc.tokens.iter().filter(|t| *t == term).count();
    let df = docs.iter().filter(|d| d.tokens.iter().any(|t| t == term)).count();
    let tf = count as f64 / doc.tokens.len() as f64;
    tf * (docs.len() as f64 / df as f64).ln()
}

fn distinct(tokens: &[String]) -> Vec<String> {
    let mut v: Vec<String> = tokens.iter().cloned().collect::<HashSet<_>>().into_iter().collect();
    v.sort();
    v
}

fn by_weight_desc(v: &mut [(String, f64)]) {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
}

/// The `k` heaviest terms of `doc` strictly above `min_weight`.
pub fn brute_top(docs: &[RawDoc], doc: &RawDoc, k: usize, min_weight: f64) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = distinct(&doc.tokens)
        .into_iter()
        .map(|t| {
            let w = brute_tfidf(docs, doc, &t);
            (t, w)
        })
        .filter(|(_, w)| *w > min_weight)
        .collect();
    by_weight_desc(&mut all);
    all.truncate(k);
    all
}

#[derive(Debug, Clone)]
pub struct BruteHit {
    pub id: String,
    pub score: f64,
    pub descriptors: Vec<(String, f64)>,
}

pub fn brute_search(ctx: &[RawDoc], query: &[String], n: usize, j: usize) -> Vec<BruteHit> {
    let vocab: HashSet<&String> = ctx.iter().flat_map(|d| d.tokens.iter()).collect();
    let terms: Vec<String> = distinct(query).into_iter().filter(|t| vocab.contains(t)).collect();
    let mut hits: Vec<(usize, f64)> = Vec::new();
    for (i, d) in ctx.iter().enumerate() {
        if d.tokens.is_empty() {
            continue;
        }
        let score: f64 = terms
            .iter()
            .filter(|t| d.tokens.contains(t))
            .map(|t| brute_tfidf(ctx, d, t))
            .sum();
        if score > 0.0 {
            hits.push((i, score));
        }
    }
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| ctx[a.0].id.cmp(&ctx[b.0].id)));
    hits.truncate(n);
    hits.into_iter()
        .map(|(i, score)| BruteHit {
            id: ctx[i].id.clone(),
            score,
            descriptors: brute_top(ctx, &ctx[i], j, 0.0),
        })
        .collect()
}

pub fn brute_jaccard(a: &HashSet<&str>, b: &HashSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Connected components by breadth-first search over the explicit
/// similarity graph; members sorted, components ordered by first member.
pub fn brute_components(hits: &[BruteHit], theta: f64) -> Vec<Vec<usize>> {
    let sets: Vec<HashSet<&str>> = hits
        .iter()
        .map(|h| h.descriptors.iter().map(|(t, _)| t.as_str()).collect())
        .collect();
    let mut order: Vec<usize> = (0..hits.len()).collect();
    order.sort_by(|&a, &b| hits[a].id.cmp(&hits[b].id));
    let mut seen = vec![false; hits.len()];
    let mut out = Vec::new();
    for &start in &order {
        if seen[start] {
            continue;
        }
        let mut comp = vec![start];
        seen[start] = true;
        let mut frontier = vec![start];
        while let Some(i) = frontier.pop() {
            for k in 0..hits.len() {
                if !seen[k] && brute_jaccard(&sets[i], &sets[k]) >= theta {
                    seen[k] = true;
                    comp.push(k);
                    frontier.push(k);
                }
            }
        }
        comp.sort_by(|&a, &b| hits[a].id.cmp(&hits[b].id));
        out.push(comp);
    }
    out
}

/// Web context: heaviest component (first wins ties), its summed
/// descriptor weights, top `m` positive entries.
pub fn brute_context(hits: &[BruteHit], theta: f64, m: usize) -> Vec<(String, f64)> {
    let comps = brute_components(hits, theta);
    let mut best: Option<(&Vec<usize>, f64)> = None;
    for c in &comps {
        let mass: f64 = c.iter().map(|&i| hits[i].score).sum();
        if best.is_none_or(|(_, b)| mass > b) {
            best = Some((c, mass));
        }
    }
    let Some((members, _)) = best else {
        return Vec::new();
    };
    let mut agg: HashMap<String, f64> = HashMap::new();
    for &i in members {
        for (t, w) in &hits[i].descriptors {
            *agg.entry(t.clone()).or_default() += w;
        }
    }
    let mut v: Vec<(String, f64)> = agg.into_iter().filter(|(_, w)| *w > 0.0).collect();
    by_weight_desc(&mut v);
    v.truncate(m);
    v
}

/// Everything the oracle derives for one service.
#[derive(Debug, Clone)]
pub struct BruteService {
    pub id: String,
    pub descriptors: Vec<(String, f64)>,
    pub context: Vec<(String, f64)>,
    pub intersection: HashSet<String>,
}

pub fn brute_services(root: &Path, cfg: &Config, tk: &Tokenizer) -> Vec<BruteService> {
    let wsdl = wsdl_docs(root, tk);
    let ctx = context_docs(root, tk);
    wsdl.iter()
        .map(|d| {
            if d.tokens.is_empty() {
                return BruteService {
                    id: d.id.clone(),
                    descriptors: Vec::new(),
                    context: Vec::new(),
                    intersection: HashSet::new(),
                };
            }
            let descriptors = brute_top(&wsdl, d, cfg.tfidf.k, cfg.tfidf.min_weight);
            let hits = brute_search(&ctx, &d.tokens, cfg.context.n, cfg.context.j);
            let context = brute_context(&hits, cfg.context.theta, cfg.context.m);
            let a: HashSet<String> = descriptors.iter().map(|(t, _)| t.clone()).collect();
            let b: HashSet<String> = context.iter().map(|(t, _)| t.clone()).collect();
            let intersection = a.intersection(&b).cloned().collect();
            BruteService {
                id: d.id.clone(),
                descriptors,
                context,
                intersection,
            }
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
