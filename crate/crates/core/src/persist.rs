//! On-disk artifacts: `ontology.json`, `registry.json` and `report.json`.
//!
//! Every file is written with sorted object keys and pinned array orders so
//! identical inputs give byte-identical files. Writes go to a temporary file
//! in the target directory and are renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::warn;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::PersistError;
use crate::ontology::{Ontology, OntologyRepr};
use crate::pipeline::{BootstrapOutput, RunReport};
use crate::ranking::{RankingWeights, Registry, ServiceRecord};
use crate::scalar::Scalar;

pub const ONTOLOGY_FILE: &str = "ontology.json";
pub const REGISTRY_FILE: &str = "registry.json";
pub const REPORT_FILE: &str = "report.json";

const ONTOLOGY_KEYS: &[&str] = &["concepts", "events", "quarantine", "relations", "version"];
const REGISTRY_KEYS: &[&str] = &["records", "weights"];

/// Pretty JSON with lexicographically sorted object keys and a trailing
/// newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    // serde_json::Map is a BTreeMap unless `preserve_order` is enabled
    let value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `contents` to `path` through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), PersistError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| PersistError::Io {
        path: path.display().to_string(),
        source: e.error,
    })?;
    Ok(())
}

fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PersistError> {
    let json = to_canonical_json(value).map_err(|e| PersistError::Schema {
        path: path.display().to_string(),
        key: "<document>".to_owned(),
        message: e.to_string(),
    })?;
    write_atomic(path, json.as_bytes())
}

/// Parses `path` as a JSON object, warns about top-level keys outside
/// `known`, then deserializes. Schema errors name the offending key path.
fn load_json<T: DeserializeOwned>(path: &Path, known: &[&str]) -> Result<T, PersistError> {
    let shown = path.display().to_string();
    let schema = |key: String, message: String| PersistError::Schema {
        path: shown.clone(),
        key,
        message,
    };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| schema("<document>".to_owned(), e.to_string()))?;
    let Some(obj) = value.as_object() else {
        return Err(schema("<document>".to_owned(), "expected a JSON object".to_owned()));
    };
    for key in obj.keys().filter(|k| !known.contains(&k.as_str())) {
        warn!("{shown}: ignoring unknown key `{key}`");
    }
    if let Some(missing) = known.iter().find(|k| !obj.contains_key(**k)) {
        return Err(schema((*missing).to_owned(), "missing field".to_owned()));
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        schema(key, e.into_inner().to_string())
    })
}

pub fn save_ontology(ontology: &Ontology, path: &Path) -> Result<(), PersistError> {
    save_json(ontology, path)
}

pub fn ontology_json(ontology: &Ontology) -> String {
    to_canonical_json(ontology).expect("ontology serializes")
}

pub fn load_ontology(path: &Path) -> Result<Ontology, PersistError> {
    let repr: OntologyRepr = load_json(path, ONTOLOGY_KEYS)?;
    Ontology::from_repr(repr).map_err(|v| PersistError::Schema {
        path: path.display().to_string(),
        key: v.key.to_owned(),
        message: v.message,
    })
}

/// Serialized registry: records sorted by service id plus blend weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct RegistryFile<S> {
    pub records: Vec<ServiceRecord>,
    pub weights: RankingWeights<S>,
}

impl<S: Scalar> RegistryFile<S> {
    pub fn from_registry(registry: &Registry<S>) -> Self {
        RegistryFile {
            records: registry.records().cloned().collect(),
            weights: registry.weights,
        }
    }
}

pub fn save_registry<S: Scalar>(registry: &Registry<S>, path: &Path) -> Result<(), PersistError> {
    save_json(&RegistryFile::from_registry(registry), path)
}

/// Loads a registry file and attaches `ontology` to it.
pub fn load_registry<S: Scalar>(path: &Path, ontology: Ontology) -> Result<Registry<S>, PersistError> {
    let file: RegistryFile<S> = load_json(path, REGISTRY_KEYS)?;
    let mut ids: Vec<&str> = file.records.iter().map(|r| r.service_id.as_str()).collect();
    ids.dedup();
    if ids.len() != file.records.len() {
        return Err(PersistError::Schema {
            path: path.display().to_string(),
            key: "records".to_owned(),
            message: "duplicate service id".to_owned(),
        });
    }
    Registry::new(file.records, ontology, file.weights).map_err(|e| PersistError::Schema {
        path: path.display().to_string(),
        key: "records".to_owned(),
        message: e.to_string(),
    })
}

pub fn save_report(report: &RunReport, path: &Path) -> Result<(), PersistError> {
    save_json(report, path)
}

pub fn load_report(path: &Path) -> Result<RunReport, PersistError> {
    load_json(path, &["config", "processing_order", "services"])
}

/// Paths of the three bootstrap artifacts inside `dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub ontology: PathBuf,
    pub registry: PathBuf,
    pub report: PathBuf,
}

impl ArtifactPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ArtifactPaths {
            ontology: dir.join(ONTOLOGY_FILE),
            registry: dir.join(REGISTRY_FILE),
            report: dir.join(REPORT_FILE),
        }
    }
}

pub fn write_artifacts<S: Scalar>(output: &BootstrapOutput<S>, dir: &Path) -> Result<ArtifactPaths, PersistError> {
    let paths = ArtifactPaths::in_dir(dir);
    save_ontology(&output.ontology, &paths.ontology)?;
    save_registry(&output.registry, &paths.registry)?;
    save_report(&output.report, &paths.report)?;
    Ok(paths)
}

/// Loads the ontology and registry written by a bootstrap run.
pub fn load_artifacts<S: Scalar>(dir: &Path) -> Result<Registry<S>, PersistError> {
    let paths = ArtifactPaths::in_dir(dir);
    let ontology = load_ontology(&paths.ontology)?;
    load_registry(&paths.registry, ontology)
}

static REGISTRY_WRITER: Mutex<()> = Mutex::new(());

/// Read-modify-write of one visit under the process-wide registry writer
/// lock. Returns the new visit count.
pub fn record_visit_in_dir(dir: &Path, service_id: &str) -> Result<u64, crate::Error> {
    let _guard = REGISTRY_WRITER.lock().unwrap_or_else(|p| p.into_inner());
    let mut registry: Registry<f64> = load_artifacts(dir)?;
    let visits = registry.record_visit(service_id)?;
    save_registry(&registry, &ArtifactPaths::in_dir(dir).registry)?;
    Ok(visits)
}
