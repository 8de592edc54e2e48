//! Concept evocation, free-text verification, conflict moderation and
//! sequential evolution of the concept/relation graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::context::WebContext;
use crate::error::OntologyError;
use crate::scalar::{cmp_desc, Scalar};
use crate::tfidf::DescriptorSet;
use crate::tokenize::{Token, Tokenizer};
use crate::wsdl::FreeTextDescriptor;

/// A concept and the context tokens it has been observed with.
///
/// `contexts` maps each context token to the number of services that
/// contributed it; the key set is the concept's context set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub name: Token,
    pub support: u64,
    pub contexts: BTreeMap<Token, u64>,
}

impl Concept {
    pub fn context_set(&self) -> BTreeSet<&Token> {
        self.contexts.keys().collect()
    }

    pub fn has_context(&self, token: &str) -> bool {
        self.contexts.contains_key(token)
    }
}

#[derive(Serialize, Deserialize)]
struct ConceptRepr {
    name: Token,
    support: u64,
    contexts: Vec<Token>,
    context_weights: BTreeMap<Token, u64>,
}

impl Serialize for Concept {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        ConceptRepr {
            name: self.name.clone(),
            support: self.support,
            contexts: self.contexts.keys().cloned().collect(),
            context_weights: self.contexts.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Concept {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = ConceptRepr::deserialize(d)?;
        let keys: Vec<&Token> = repr.context_weights.keys().collect();
        if keys != repr.contexts.iter().collect::<Vec<_>>() {
            return Err(D::Error::custom(format!(
                "concept `{}`: contexts and context_weights disagree",
                repr.name
            )));
        }
        Ok(Concept {
            name: repr.name,
            support: repr.support,
            contexts: repr.context_weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    /// Two concepts accepted for the same service. Stored with `from < to`.
    CoOccurrence,
    /// `from` appeared in the web context of concept `to`.
    ContextOf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub from: Token,
    pub to: Token,
    pub kind: RelationKind,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeKind {
    DomainChange,
    ConceptualizationChange,
    SpecificationChange,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvolutionEvent {
    pub version: u64,
    pub service_id: String,
    pub kind: ChangeKind,
    pub detail: String,
}

/// A candidate rejected by moderation, kept out of the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarantineEntry {
    pub version: u64,
    pub service_id: String,
    pub name: Token,
    pub contexts: BTreeSet<Token>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateConcept<S> {
    pub name: Token,
    pub tfidf_weight: S,
    pub context_weight: S,
}

type RelationKey = (RelationKind, Token, Token);

/// Versioned concept/relation graph with an append-only event log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    concepts: BTreeMap<Token, Concept>,
    relations: BTreeMap<RelationKey, u64>,
    events: Vec<EvolutionEvent>,
    version: u64,
    quarantine: Vec<QuarantineEntry>,
}

/// Exchange form; every array is in its pinned order.
#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct OntologyRepr {
    pub concepts: Vec<Concept>,
    pub relations: Vec<Relation>,
    pub events: Vec<EvolutionEvent>,
    pub version: u64,
    pub quarantine: Vec<QuarantineEntry>,
}

/// An ontology invariant violated by deserialized data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantViolation {
    pub key: &'static str,
    pub message: String,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

impl Ontology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn concept(&self, name: &str) -> Option<&Concept> {
        self.concepts.get(name)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn concept_names(&self) -> impl Iterator<Item = &Token> {
        self.concepts.keys()
    }

    pub fn contains_concept(&self, name: &str) -> bool {
        self.concepts.contains_key(name)
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    /// Relations sorted by `(kind, from, to)`.
    pub fn relations(&self) -> impl Iterator<Item = Relation> + '_ {
        self.relations.iter().map(|((kind, from, to), &weight)| Relation {
            from: from.clone(),
            to: to.clone(),
            kind: *kind,
            weight,
        })
    }

    pub fn relation_weight(&self, kind: RelationKind, from: &str, to: &str) -> Option<u64> {
        let key = (kind, Token::new(from)?, Token::new(to)?);
        self.relations.get(&key).copied()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn events(&self) -> &[EvolutionEvent] {
        &self.events
    }

    pub fn quarantine(&self) -> &[QuarantineEntry] {
        &self.quarantine
    }

    fn log(&mut self, service_id: &str, kind: ChangeKind, detail: String) {
        self.events.push(EvolutionEvent {
            version: self.version + 1,
            service_id: service_id.to_owned(),
            kind,
            detail,
        });
    }

    fn add_contexts(&mut self, name: &str, contexts: &BTreeSet<Token>) -> Vec<Token> {
        let concept = self.concepts.get_mut(name).expect("concept exists");
        let mut fresh = Vec::new();
        for ctx in contexts.iter().filter(|c| c.as_str() != name) {
            let slot = concept.contexts.entry(ctx.clone()).or_insert(0);
            if *slot == 0 {
                fresh.push(ctx.clone());
            }
            *slot += 1;
        }
        fresh
    }

    /// Whether admitting `name` with `contexts` would contradict the graph:
    /// the concept exists, both context sets are non-empty, and they share
    /// no token.
    pub fn is_conflict(&self, name: &str, contexts: &BTreeSet<Token>) -> bool {
        let Some(existing) = self.concepts.get(name) else {
            return false;
        };
        let theirs: BTreeSet<&Token> = contexts.iter().filter(|c| c.as_str() != name).collect();
        !existing.contexts.is_empty()
            && !theirs.is_empty()
            && theirs.iter().all(|c| !existing.contexts.contains_key(c.as_str()))
    }

    /// Applies one service's admitted concepts and bumps the version.
    ///
    /// Concepts admitted through [`Resolution::Merge`] already had their
    /// support and contexts updated and only take part in relations here.
    pub fn evolve_with_service<S: Scalar>(&mut self, service_id: &str, accepted: &[Admitted<S>], context: &WebContext<S>) {
        let next = self.version + 1;
        let context_tokens: BTreeSet<Token> = context.tokens().cloned().collect();
        let mut admitted: Vec<&Admitted<S>> = accepted.iter().collect();
        admitted.sort_by(|a, b| a.candidate.name.cmp(&b.candidate.name));
        admitted.dedup_by(|a, b| a.candidate.name == b.candidate.name);

        for adm in &admitted {
            let name = adm.candidate.name.clone();
            if adm.merged && self.concepts.contains_key(name.as_str()) {
                continue;
            }
            if let Some(c) = self.concepts.get_mut(name.as_str()) {
                c.support += 1;
            } else {
                self.concepts.insert(
                    name.clone(),
                    Concept {
                        name: name.clone(),
                        support: 1,
                        contexts: BTreeMap::new(),
                    },
                );
                self.log(service_id, ChangeKind::DomainChange, format!("new concept `{name}`"));
            }
            let fresh = self.add_contexts(name.as_str(), &context_tokens);
            if !fresh.is_empty() {
                let list: Vec<&str> = fresh.iter().map(Token::as_str).collect();
                self.log(
                    service_id,
                    ChangeKind::ConceptualizationChange,
                    format!("contexts of `{name}` extended with [{}]", list.join(", ")),
                );
            }
            if adm.unverified {
                self.log(service_id, ChangeKind::ConceptualizationChange, format!("unverified `{name}`"));
            }
        }

        for (i, a) in admitted.iter().enumerate() {
            for b in &admitted[i + 1..] {
                // sorted and deduplicated, so a < b
                let key = (RelationKind::CoOccurrence, a.candidate.name.clone(), b.candidate.name.clone());
                self.bump_relation(service_id, key, None);
            }
        }

        self.sync_context_relations(service_id);

        if !self.events.last().is_some_and(|e| e.version == next) {
            self.log(service_id, ChangeKind::ConceptualizationChange, "no-op".to_owned());
        }
        self.version = next;
    }

    fn bump_relation(&mut self, service_id: &str, key: RelationKey, target: Option<u64>) {
        let old = self.relations.get(&key).copied();
        let new = target.unwrap_or(old.unwrap_or(0) + 1);
        if old == Some(new) {
            return;
        }
        let (kind, from, to) = &key;
        let detail = match old {
            None => format!("relation {kind:?}({from}, {to}) added"),
            Some(w) => format!("relation {kind:?}({from}, {to}) reweighted {w} -> {new}"),
        };
        self.relations.insert(key, new);
        self.log(service_id, ChangeKind::ConceptualizationChange, detail);
    }

    /// ContextOf relations mirror every context observation whose token is
    /// itself a concept, whenever that concept appeared. This keeps the
    /// final graph independent of processing order.
    fn sync_context_relations(&mut self, service_id: &str) {
        let wanted: Vec<(RelationKey, u64)> = self
            .concepts
            .values()
            .flat_map(|c| {
                c.contexts
                    .iter()
                    .filter(|(ctx, _)| self.concepts.contains_key(ctx.as_str()))
                    .map(|(ctx, &n)| ((RelationKind::ContextOf, ctx.clone(), c.name.clone()), n))
            })
            .collect();
        for (key, weight) in wanted {
            self.bump_relation(service_id, key, Some(weight));
        }
    }

    pub(crate) fn to_repr(&self) -> OntologyRepr {
        OntologyRepr {
            concepts: self.concepts.values().cloned().collect(),
            relations: self.relations().collect(),
            events: self.events.clone(),
            version: self.version,
            quarantine: self.quarantine.clone(),
        }
    }

    pub(crate) fn from_repr(repr: OntologyRepr) -> Result<Self, InvariantViolation> {
        let bad = |key, message: String| Err(InvariantViolation { key, message });
        let mut concepts = BTreeMap::new();
        for c in repr.concepts {
            if c.support == 0 {
                return bad("concepts", format!("concept `{}` has zero support", c.name));
            }
            if c.contexts.contains_key(c.name.as_str()) {
                return bad("concepts", format!("concept `{}` lists itself as context", c.name));
            }
            if c.contexts.values().any(|&n| n == 0) {
                return bad("concepts", format!("concept `{}` has a zero context weight", c.name));
            }
            if let Some(dup) = concepts.insert(c.name.clone(), c) {
                return bad("concepts", format!("duplicate concept `{}`", dup.name));
            }
        }
        let mut relations = BTreeMap::new();
        for r in repr.relations {
            let ok = r.weight > 0
                && r.from != r.to
                && match r.kind {
                    RelationKind::CoOccurrence => {
                        r.from < r.to && concepts.contains_key(&r.from) && concepts.contains_key(&r.to)
                    }
                    RelationKind::ContextOf => concepts
                        .get(&r.to)
                        .is_some_and(|c: &Concept| c.contexts.contains_key(r.from.as_str())),
                };
            if !ok {
                return bad("relations", format!("invalid relation {:?}({}, {})", r.kind, r.from, r.to));
            }
            if relations.insert((r.kind, r.from.clone(), r.to.clone()), r.weight).is_some() {
                return bad("relations", format!("duplicate relation {:?}({}, {})", r.kind, r.from, r.to));
            }
        }
        if (repr.events.len() as u64) < repr.version {
            return bad(
                "version",
                format!("version {} exceeds event count {}", repr.version, repr.events.len()),
            );
        }
        if let Some(e) = repr.events.iter().find(|e| e.version == 0 || e.version > repr.version) {
            return bad("version", format!("event version {} outside 1..={}", e.version, repr.version));
        }
        if let Some(q) = repr.quarantine.iter().find(|q| q.version == 0 || q.version > repr.version) {
            return bad("quarantine", format!("entry `{}` has version {}", q.name, q.version));
        }
        Ok(Ontology {
            concepts,
            relations,
            events: repr.events,
            version: repr.version,
            quarantine: repr.quarantine,
        })
    }
}

impl Serialize for Ontology {
    fn serialize<Ser: serde::Serializer>(&self, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        self.to_repr().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ontology {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        Ontology::from_repr(OntologyRepr::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Tokens present in both descriptor lists, ordered by descending combined
/// weight then token.
pub fn evoke_concepts<S: Scalar>(
    tfidf: &DescriptorSet<S>,
    context: &WebContext<S>,
) -> Result<Vec<CandidateConcept<S>>, OntologyError> {
    if tfidf.service_id != context.service_id {
        return Err(OntologyError::ServiceMismatch {
            tfidf: tfidf.service_id.clone(),
            context: context.service_id.clone(),
        });
    }
    let context_weights: BTreeMap<&Token, S> = context.descriptors.iter().map(|(t, w)| (t, *w)).collect();
    let mut out: Vec<CandidateConcept<S>> = tfidf
        .descriptors
        .iter()
        .filter_map(|d| {
            context_weights.get(&d.term).map(|&cw| CandidateConcept {
                name: d.term.clone(),
                tfidf_weight: d.weight,
                context_weight: cw,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        cmp_desc(a.tfidf_weight + a.context_weight, b.tfidf_weight + b.context_weight).then_with(|| a.name.cmp(&b.name))
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verification {
    Accepted,
    Unverified,
}

/// Accepted iff the candidate occurs among the free text's tokens.
pub fn verify_concept<S>(candidate: &CandidateConcept<S>, free_text: &FreeTextDescriptor, tokenizer: &Tokenizer) -> Verification {
    if tokenizer.tokens(&free_text.text).contains(&candidate.name) {
        Verification::Accepted
    } else {
        Verification::Unverified
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Merge,
    Quarantine,
}

/// Moderates a candidate that collides with an existing concept of the
/// same name but disjoint contexts, using the free text as the arbiter.
pub fn resolve_conflict<S>(
    ontology: &mut Ontology,
    service_id: &str,
    candidate: &CandidateConcept<S>,
    candidate_contexts: &BTreeSet<Token>,
    free_text: &FreeTextDescriptor,
    tokenizer: &Tokenizer,
) -> Result<Resolution, OntologyError> {
    let name = &candidate.name;
    if !ontology.is_conflict(name.as_str(), candidate_contexts) {
        return Err(OntologyError::NotAConflict { name: name.to_string() });
    }
    let contexts: BTreeSet<Token> = candidate_contexts.iter().filter(|c| *c != name).cloned().collect();
    let listed = contexts.iter().map(Token::as_str).collect::<Vec<_>>().join(", ");
    match verify_concept(candidate, free_text, tokenizer) {
        Verification::Accepted => {
            ontology.add_contexts(name.as_str(), &contexts);
            ontology.concepts.get_mut(name.as_str()).expect("conflict implies existence").support += 1;
            ontology.log(
                service_id,
                ChangeKind::SpecificationChange,
                format!("merged `{name}` with contexts [{listed}]"),
            );
            Ok(Resolution::Merge)
        }
        Verification::Unverified => {
            ontology.quarantine.push(QuarantineEntry {
                version: ontology.version + 1,
                service_id: service_id.to_owned(),
                name: name.clone(),
                contexts,
            });
            ontology.log(
                service_id,
                ChangeKind::SpecificationChange,
                format!("quarantined `{name}` with contexts [{listed}]"),
            );
            Ok(Resolution::Quarantine)
        }
    }
}

/// A candidate cleared for [`Ontology::evolve_with_service`].
#[derive(Debug, Clone, PartialEq)]
pub struct Admitted<S> {
    pub candidate: CandidateConcept<S>,
    /// Admitted through conflict moderation.
    pub merged: bool,
    /// Admitted without free text to check against.
    pub unverified: bool,
}

impl<S> Admitted<S> {
    pub fn verified(candidate: CandidateConcept<S>) -> Self {
        Admitted {
            candidate,
            merged: false,
            unverified: false,
        }
    }
}
