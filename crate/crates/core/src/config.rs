//! TOML configuration with documented defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::context;
use crate::error::ConfigError;
use crate::ranking::{self, RankingWeights};
use crate::scalar::Scalar;
use crate::tfidf;
use crate::tokenize::{StopWordList, Tokenizer, DEFAULT_MIN_LEN};

/// Environment variable that may name the config file.
pub const CONFIG_ENV: &str = "ONTO_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct Config {
    pub paths: PathsConfig,
    pub tfidf: TfidfConfig,
    pub context: ContextConfig,
    pub ranking: RankingConfig,
    pub flags: FlagsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsConfig {
    pub wsdl_dir: Option<PathBuf>,
    pub context_dir: Option<PathBuf>,
    pub stopwords_file: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            wsdl_dir: None,
            context_dir: None,
            stopwords_file: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TfidfConfig {
    pub k: usize,
    pub min_weight: f64,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            k: tfidf::DEFAULT_K,
            min_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextConfig {
    /// Results per query.
    pub n: usize,
    /// Descriptors per result.
    pub j: usize,
    /// Context descriptors kept per service.
    pub m: usize,
    /// Jaccard linking threshold.
    pub theta: f64,
}

impl Default for ContextConfig {
    fn default() -> Self {
        ContextConfig {
            n: context::DEFAULT_RESULTS,
            j: context::DEFAULT_RESULT_DESCRIPTORS,
            m: context::DEFAULT_CONTEXT_DESCRIPTORS,
            theta: context::DEFAULT_THETA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub top_k: usize,
}

impl Default for RankingConfig {
    fn default() -> Self {
        RankingConfig {
            alpha: 0.5,
            beta: 0.3,
            gamma: 0.2,
            top_k: ranking::DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlagsConfig {
    /// Strip plural `s` before filtering.
    pub stemming: bool,
    /// The stop-word file replaces the built-in list instead of extending it.
    pub stopwords_replace: bool,
    pub min_token_len: usize,
}

impl Default for FlagsConfig {
    fn default() -> Self {
        FlagsConfig {
            stemming: false,
            stopwords_replace: false,
            min_token_len: DEFAULT_MIN_LEN,
        }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        message: message.into(),
    }
}

impl Config {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_owned(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Range checks; ranking weights are normalized to sum to one.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tfidf.k == 0 {
            return Err(invalid("tfidf.k", "must be at least 1"));
        }
        if !(self.tfidf.min_weight.is_finite() && self.tfidf.min_weight >= 0.0) {
            return Err(invalid("tfidf.min_weight", "must be finite and non-negative"));
        }
        for (field, v) in [("context.n", self.context.n), ("context.j", self.context.j), ("context.m", self.context.m)] {
            if v == 0 {
                return Err(invalid(field, "must be at least 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.context.theta) {
            return Err(invalid("context.theta", "must lie in [0, 1]"));
        }
        if self.ranking.top_k == 0 {
            return Err(invalid("ranking.top_k", "must be at least 1"));
        }
        if self.flags.min_token_len == 0 {
            return Err(invalid("flags.min_token_len", "must be at least 1"));
        }
        self.ranking_weights::<f64>()?;
        Ok(())
    }

    pub fn ranking_weights<S: Scalar>(&self) -> Result<RankingWeights<S>, ConfigError> {
        let r = &self.ranking;
        RankingWeights::new(S::lit(r.alpha), S::lit(r.beta), S::lit(r.gamma))
            .map_err(|e| invalid("ranking", e.to_string()))
    }

    /// Built-in stop words, extended (or replaced) by the configured file.
    pub fn tokenizer(&self) -> Result<Tokenizer, ConfigError> {
        let mut stoplist = if self.flags.stopwords_replace && self.paths.stopwords_file.is_some() {
            StopWordList::empty()
        } else {
            StopWordList::builtin()
        };
        if let Some(path) = &self.paths.stopwords_file {
            let extra = StopWordList::load(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            stoplist.extend(&extra);
        }
        Ok(Tokenizer::new(stoplist)
            .with_min_len(self.flags.min_token_len)
            .with_stemming(self.flags.stemming))
    }
}
