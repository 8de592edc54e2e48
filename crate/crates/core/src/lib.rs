//! Ontology bootstrapping for web services.
//!
//! Each service is analysed from two sides: an internal one (TF/IDF
//! descriptors of its WSDL name labels) and an external one (the context
//! recovered by querying a search corpus with its tokens and clustering the
//! hits). Terms both sides agree on become candidate concepts, which are
//! checked against the service's free-text description and folded into an
//! evolving concept/relation graph. The resulting registry ranks services
//! for user queries by concept overlap, text similarity and visit counts.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the pipeline and the CLI use.

pub mod config;
pub mod context;
pub mod error;
pub mod ontology;
pub mod persist;
pub mod pipeline;
pub mod ranking;
pub mod scalar;
pub mod tfidf;
pub mod tokenize;
pub mod wsdl;

pub use config::Config;
pub use error::{Error, Result};
pub use ontology::{Ontology, Relation, RelationKind};
pub use pipeline::RunReport;
pub use scalar::Scalar;
pub use tokenize::{StopWordList, Token, TokenBag, Tokenizer};
pub use wsdl::{FreeTextDescriptor, WsdlDocument};

pub type TermWeight = tfidf::TermWeight<f64>;
pub type DescriptorSet = tfidf::DescriptorSet<f64>;
pub type SearchResult = context::SearchResult<f64>;
pub type DescriptorCluster = context::DescriptorCluster<f64>;
pub type WebContext = context::WebContext<f64>;
pub type CandidateConcept = ontology::CandidateConcept<f64>;
pub type RankingWeights = ranking::RankingWeights<f64>;
pub type Registry = ranking::Registry<f64>;
pub type RankedEntry = ranking::RankedEntry<f64>;
pub type BootstrapOutput = pipeline::BootstrapOutput<f64>;

pub type TermWeightF32 = tfidf::TermWeight<f32>;
pub type DescriptorSetF32 = tfidf::DescriptorSet<f32>;
pub type WebContextF32 = context::WebContext<f32>;
pub type RegistryF32 = ranking::Registry<f32>;
pub type RankedEntryF32 = ranking::RankedEntry<f32>;
