//! Error types for each stage of the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: malformed XML: {message}")]
    MalformedXml { path: String, message: String },
    #[error("{path}: not a WSDL 1.1 document (root element `{root}`)")]
    NotWsdl { path: String, root: String },
    #[error("{path}: cannot derive a service id from this path")]
    InvalidPath { path: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate service id `{service_id}`: {first} and {second}")]
    DuplicateServiceId {
        service_id: String,
        first: String,
        second: String,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum TfidfError {
    #[error("corpus too small: {n_docs} document(s), at least 2 required")]
    CorpusTooSmall { n_docs: usize },
    #[error("duplicate service id `{service_id}` in corpus")]
    DuplicateServiceId { service_id: String },
    #[error("term `{term}` is not in the corpus vocabulary")]
    UnknownTerm { term: String },
    #[error("service `{service_id}` has no tokens")]
    EmptyBag { service_id: String },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: String },
}

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("context corpus too small: {n_docs} readable document(s), at least 2 required")]
    CorpusTooSmall { n_docs: usize },
    #[error("{path}: unreadable context file: {message}")]
    UnreadableFile { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OntologyError {
    #[error("candidate `{name}` does not conflict with the ontology")]
    NotAConflict { name: String },
    #[error("descriptor sets belong to different services: `{tfidf}` vs `{context}`")]
    ServiceMismatch { tfidf: String, context: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum RankingError {
    #[error("query is empty after stop-word filtering")]
    EmptyQuery,
    #[error("unknown service `{service_id}`")]
    UnknownService { service_id: String },
    #[error("invalid ranking weights: {reason}")]
    InvalidWeights { reason: String },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: String },
    #[error(transparent)]
    Tfidf(#[from] TfidfError),
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema error at `{key}`: {message}")]
    Schema {
        path: String,
        key: String,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

/// Any error the pipeline can surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Tfidf(#[from] TfidfError),
    #[error(transparent)]
    Context(#[from] ContextError),
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
