//! The end-to-end bootstrapping run: ingest, weigh, contextualize, evoke,
//! moderate and evolve, one service at a time in a fixed order.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::context::{extract_web_context, ContextIndex, LocalSearch, SearchProvider, WebContext};
use crate::error::{ConfigError, Result};
use crate::ontology::{evoke_concepts, resolve_conflict, verify_concept, Admitted, Ontology, Resolution, Verification};
use crate::ranking::{Registry, ServiceRecord};
use crate::scalar::Scalar;
use crate::tfidf::{build_corpus_stats, top_descriptors, DescriptorSet};
use crate::tokenize::{service_tokens, Token, TokenBag, Tokenizer};
use crate::wsdl::{load_corpus, SkipReason, WsdlCorpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceStatus {
    Processed,
    Skipped,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceFlags {
    /// No token survived filtering.
    pub unresolvable: bool,
    /// The search returned nothing usable.
    pub context_less: bool,
    pub free_text_empty: bool,
}

/// Outcome for one WSDL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceReport {
    pub service_id: String,
    pub status: ServiceStatus,
    pub skip_reason: Option<SkipReason>,
    pub token_count: u64,
    pub descriptors: Vec<(Token, f64)>,
    pub context: Vec<(Token, f64)>,
    pub candidates: Vec<Token>,
    pub accepted: Vec<Token>,
    pub merged: Vec<Token>,
    pub quarantined: Vec<Token>,
    /// Unverified against a non-empty free text.
    pub rejected: Vec<Token>,
    pub flags: ServiceFlags,
}

impl ServiceReport {
    fn skipped(service_id: &str, reason: SkipReason) -> Self {
        ServiceReport {
            service_id: service_id.to_owned(),
            status: ServiceStatus::Skipped,
            skip_reason: Some(reason),
            token_count: 0,
            descriptors: Vec::new(),
            context: Vec::new(),
            candidates: Vec::new(),
            accepted: Vec::new(),
            merged: Vec::new(),
            quarantined: Vec::new(),
            rejected: Vec::new(),
            flags: ServiceFlags::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub analysis: Duration,
    pub evolution: Duration,
}

/// Everything a run did, one entry per WSDL file (sorted by id).
///
/// Timings are kept out of the serialized form so identical runs produce
/// identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub services: Vec<ServiceReport>,
    pub processing_order: Vec<String>,
    pub config: Config,
    #[serde(skip)]
    pub timings: Timings,
}

impl RunReport {
    pub fn service(&self, id: &str) -> Option<&ServiceReport> {
        self.services.iter().find(|s| s.service_id == id)
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapOutput<S> {
    pub ontology: Ontology,
    pub registry: Registry<S>,
    pub report: RunReport,
}

/// Per-service analysis that does not depend on the ontology.
struct Analysis<S> {
    bag: TokenBag,
    descriptors: DescriptorSet<S>,
    context: WebContext<S>,
}

fn to_f64_pairs<S: Scalar>(it: impl Iterator<Item = (Token, S)>) -> Vec<(Token, f64)> {
    it.map(|(t, w)| (t, w.to_f64_lossy())).collect()
}

fn resolve_order(ids: &BTreeSet<String>, order: Option<&[String]>) -> Result<Vec<String>> {
    let Some(order) = order else {
        return Ok(ids.iter().cloned().collect());
    };
    let given: BTreeSet<String> = order.iter().cloned().collect();
    if given != *ids || given.len() != order.len() {
        return Err(ConfigError::Invalid {
            field: "debug_order".to_owned(),
            message: "must list every ingested service id exactly once".to_owned(),
        }
        .into());
    }
    Ok(order.to_vec())
}

/// Runs the pipeline over an ingested corpus using `provider` for web
/// context. `order` overrides the ascending-id processing order (debugging
/// aid; must be a permutation of the service ids).
pub fn bootstrap_with_provider<S: Scalar>(
    corpus: &WsdlCorpus,
    provider: &dyn SearchProvider<S>,
    config: &Config,
    tokenizer: &Tokenizer,
    order: Option<&[String]>,
) -> Result<BootstrapOutput<S>> {
    config.validate()?;
    let started = Instant::now();
    let sources: BTreeMap<&str, _> = corpus.services.iter().map(|s| (s.doc.service_id.as_str(), s)).collect();
    let tokens: BTreeMap<&str, Vec<Token>> = sources
        .iter()
        .map(|(&id, s)| (id, service_tokens(&s.doc, tokenizer)))
        .collect();
    let bags: Vec<TokenBag> = tokens
        .iter()
        .map(|(&id, toks)| TokenBag::from_tokens(id, toks.iter().cloned()))
        .collect();
    let stats = build_corpus_stats(&bags)?;

    let min_weight = S::lit(config.tfidf.min_weight);
    let mut analyses: BTreeMap<&str, Analysis<S>> = BTreeMap::new();
    for bag in bags {
        let id = sources
            .get_key_value(bag.service_id.as_str())
            .map(|(k, _)| *k)
            .expect("bag ids come from sources");
        let (descriptors, context) = if bag.is_empty() {
            (
                DescriptorSet {
                    service_id: id.to_owned(),
                    descriptors: Vec::new(),
                },
                WebContext::empty(id),
            )
        } else {
            let descriptors = top_descriptors(&bag, &stats, config.tfidf.k, min_weight)?;
            let results = provider.search(&tokens[id], config.context.n);
            let context = extract_web_context(id, &results, config.context.theta, config.context.m)?;
            (descriptors, context)
        };
        analyses.insert(id, Analysis { bag, descriptors, context });
    }
    let analysis_time = started.elapsed();

    let ids: BTreeSet<String> = sources.keys().map(|s| (*s).to_owned()).collect();
    let order = resolve_order(&ids, order)?;
    let evolve_started = Instant::now();
    let mut ontology = Ontology::new();
    let mut reports: BTreeMap<String, ServiceReport> = BTreeMap::new();
    let mut record_concepts: BTreeMap<&str, BTreeSet<Token>> = BTreeMap::new();

    for id in &order {
        let a = &analyses[id.as_str()];
        let free_text = &sources[id.as_str()].free_text;
        let candidates = evoke_concepts(&a.descriptors, &a.context)?;
        let context_tokens: BTreeSet<Token> = a.context.tokens().cloned().collect();

        let mut report = ServiceReport {
            service_id: id.clone(),
            status: ServiceStatus::Processed,
            skip_reason: None,
            token_count: a.bag.total(),
            descriptors: to_f64_pairs(a.descriptors.descriptors.iter().map(|d| (d.term.clone(), d.weight))),
            context: to_f64_pairs(a.context.descriptors.iter().cloned()),
            candidates: candidates.iter().map(|c| c.name.clone()).collect(),
            accepted: Vec::new(),
            merged: Vec::new(),
            quarantined: Vec::new(),
            rejected: Vec::new(),
            flags: ServiceFlags {
                unresolvable: a.bag.is_empty(),
                context_less: a.context.is_empty(),
                free_text_empty: free_text.is_empty(),
            },
        };

        let mut admitted = Vec::new();
        for cand in candidates {
            let own_contexts: BTreeSet<Token> = context_tokens.iter().filter(|t| **t != cand.name).cloned().collect();
            if ontology.is_conflict(cand.name.as_str(), &own_contexts) {
                match resolve_conflict(&mut ontology, id, &cand, &own_contexts, free_text, tokenizer)? {
                    Resolution::Merge => {
                        report.merged.push(cand.name.clone());
                        report.accepted.push(cand.name.clone());
                        admitted.push(Admitted {
                            candidate: cand,
                            merged: true,
                            unverified: false,
                        });
                    }
                    Resolution::Quarantine => report.quarantined.push(cand.name.clone()),
                }
                continue;
            }
            match verify_concept(&cand, free_text, tokenizer) {
                Verification::Accepted => {
                    report.accepted.push(cand.name.clone());
                    admitted.push(Admitted::verified(cand));
                }
                Verification::Unverified if free_text.is_empty() => {
                    report.accepted.push(cand.name.clone());
                    admitted.push(Admitted {
                        candidate: cand,
                        merged: false,
                        unverified: true,
                    });
                }
                Verification::Unverified => report.rejected.push(cand.name.clone()),
            }
        }
        debug!("{id}: {} admitted", admitted.len());
        // a quarantined name stays out of the graph entirely, including as a
        // context of this service's other concepts
        let evolve_context = if report.quarantined.is_empty() {
            a.context.clone()
        } else {
            WebContext {
                service_id: a.context.service_id.clone(),
                descriptors: a
                    .context
                    .descriptors
                    .iter()
                    .filter(|(t, _)| !report.quarantined.contains(t))
                    .cloned()
                    .collect(),
            }
        };
        ontology.evolve_with_service(id, &admitted, &evolve_context);
        record_concepts.insert(id.as_str(), admitted.iter().map(|adm| adm.candidate.name.clone()).collect());
        reports.insert(id.clone(), report);
    }
    let evolution_time = evolve_started.elapsed();

    for skipped in &corpus.skipped {
        reports.insert(
            skipped.service_id.clone(),
            ServiceReport::skipped(&skipped.service_id, skipped.reason),
        );
    }

    let records: Vec<ServiceRecord> = analyses
        .into_values()
        .map(|a| ServiceRecord {
            service_id: a.bag.service_id.clone(),
            concepts: record_concepts.remove(a.bag.service_id.as_str()).unwrap_or_default(),
            bag: a.bag,
            visits: 0,
        })
        .collect();
    let registry = Registry::new(records, ontology.clone(), config.ranking_weights()?)?;

    info!(
        "bootstrapped {} services: {} concepts, {} relations",
        order.len(),
        ontology.concept_count(),
        ontology.relation_count()
    );
    Ok(BootstrapOutput {
        ontology,
        registry,
        report: RunReport {
            services: reports.into_values().collect(),
            processing_order: order,
            config: config.clone(),
            timings: Timings {
                analysis: analysis_time,
                evolution: evolution_time,
            },
        },
    })
}

/// [`bootstrap_with_provider`] over the local context index.
pub fn bootstrap<S: Scalar>(
    corpus: &WsdlCorpus,
    index: &ContextIndex,
    config: &Config,
    tokenizer: &Tokenizer,
) -> Result<BootstrapOutput<S>> {
    let provider = LocalSearch::new(index, config.context.j);
    bootstrap_with_provider(corpus, &provider, config, tokenizer, None)
}

/// Loads the corpus and context directories named in `config` and runs the
/// pipeline.
pub fn bootstrap_from_config<S: Scalar>(config: &Config, order: Option<&[String]>) -> Result<BootstrapOutput<S>> {
    let missing = |field: &str| ConfigError::Invalid {
        field: field.to_owned(),
        message: "required".to_owned(),
    };
    let wsdl_dir = config.paths.wsdl_dir.as_deref().ok_or_else(|| missing("paths.wsdl_dir"))?;
    let context_dir = config.paths.context_dir.as_deref().ok_or_else(|| missing("paths.context_dir"))?;
    let tokenizer = config.tokenizer()?;
    let corpus = load_corpus(wsdl_dir)?;
    let index = ContextIndex::from_dir(context_dir, &tokenizer)?;
    let provider = LocalSearch::new(&index, config.context.j);
    bootstrap_with_provider(&corpus, &provider, config, &tokenizer, order)
}
