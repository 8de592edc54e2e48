//! WSDL 1.1 ingestion: name labels, documentation blocks and the free-text
//! descriptor that accompanies each service.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use roxmltree::{Document, Node, ParsingOptions};
use serde::{Deserialize, Serialize};

use crate::error::IngestError;

const WSDL11_NS: &str = "http://schemas.xmlsoap.org/wsdl/";

/// Which WSDL construct a label was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SourceKind {
    Service,
    Port,
    PortType,
    Binding,
    Operation,
    Message,
    Part,
    SchemaElement,
}

impl SourceKind {
    fn from_local_name(name: &str) -> Option<Self> {
        Some(match name {
            "service" => SourceKind::Service,
            "port" => SourceKind::Port,
            "portType" => SourceKind::PortType,
            "binding" => SourceKind::Binding,
            "operation" => SourceKind::Operation,
            "message" => SourceKind::Message,
            _ => return None,
        })
    }
}

/// A `name`-like attribute value as written in the document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NameLabel {
    pub raw: String,
    pub source_kind: SourceKind,
}

impl NameLabel {
    /// Returns `None` when `raw` is blank.
    pub fn new(raw: &str, source_kind: SourceKind) -> Option<Self> {
        let raw = raw.trim();
        (!raw.is_empty()).then(|| NameLabel {
            raw: raw.to_owned(),
            source_kind,
        })
    }
}

impl fmt::Display for NameLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:?})", self.raw, self.source_kind)
    }
}

/// A parsed WSDL descriptor. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WsdlDocument {
    pub service_id: String,
    /// Labels in document order; duplicates are kept.
    pub labels: Vec<NameLabel>,
    pub documentation: Vec<String>,
    pub source_path: String,
}

/// Natural-language description of what a service does.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FreeTextDescriptor {
    pub service_id: String,
    pub text: String,
}

impl FreeTextDescriptor {
    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

/// Derives the service id from a path: the file stem, lowercased.
pub fn service_id_for(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?.trim();
    (!stem.is_empty()).then(|| stem.to_lowercase())
}

fn local_part(qname: &str) -> &str {
    qname.rsplit(':').next().unwrap_or(qname)
}

fn in_schema(node: Node<'_, '_>) -> bool {
    node.ancestors()
        .skip(1)
        .any(|a| a.is_element() && a.tag_name().name() == "schema")
}

/// Parses a WSDL 1.1 document.
///
/// Element names are matched on their local part, so any namespace prefix
/// works. The root must be `definitions` in the WSDL 1.1 namespace (or in no
/// namespace); anything else is reported as [`IngestError::NotWsdl`].
pub fn parse_wsdl(bytes: &[u8], source_path: &str) -> Result<WsdlDocument, IngestError> {
    let service_id = service_id_for(Path::new(source_path)).ok_or_else(|| IngestError::InvalidPath {
        path: source_path.to_owned(),
    })?;
    let malformed = |message: String| IngestError::MalformedXml {
        path: source_path.to_owned(),
        message,
    };

    let text = std::str::from_utf8(bytes).map_err(|e| malformed(format!("invalid UTF-8: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let xml = Document::parse_with_options(text, opts).map_err(|e| malformed(e.to_string()))?;

    let root = xml.root_element();
    let root_tag = root.tag_name();
    let wsdl_ns = matches!(root_tag.namespace(), None | Some(WSDL11_NS));
    if root_tag.name() != "definitions" || !wsdl_ns {
        return Err(IngestError::NotWsdl {
            path: source_path.to_owned(),
            root: root_tag.name().to_owned(),
        });
    }

    let mut labels = Vec::new();
    let mut documentation = Vec::new();
    for node in root.descendants().filter(Node::is_element) {
        let local = node.tag_name().name();
        if let Some(kind) = SourceKind::from_local_name(local) {
            labels.extend(node.attribute("name").and_then(|n| NameLabel::new(n, kind)));
            continue;
        }
        match local {
            "part" => {
                labels.extend(node.attribute("name").and_then(|n| NameLabel::new(n, SourceKind::Part)));
                labels.extend(
                    node.attribute("element")
                        .and_then(|e| NameLabel::new(local_part(e), SourceKind::Part)),
                );
            }
            "element" | "attribute" if in_schema(node) => {
                labels.extend(
                    node.attribute("name")
                        .and_then(|n| NameLabel::new(n, SourceKind::SchemaElement)),
                );
            }
            "documentation" => {
                let block: String = node
                    .descendants()
                    .filter(Node::is_text)
                    .filter_map(|t| t.text())
                    .collect();
                documentation.push(block.trim().to_owned());
            }
            "import" => {
                warn!(
                    "{source_path}: ignoring import of {}",
                    node.attribute("location")
                        .or_else(|| node.attribute("schemaLocation"))
                        .or_else(|| node.attribute("namespace"))
                        .unwrap_or("<unspecified>")
                );
            }
            _ => {}
        }
    }

    Ok(WsdlDocument {
        service_id,
        labels,
        documentation,
        source_path: source_path.to_owned(),
    })
}

/// Joins the sidecar text and the embedded documentation blocks, one per
/// line, skipping blank parts.
pub fn extract_free_text(doc: &WsdlDocument, sidecar_text: Option<&str>) -> FreeTextDescriptor {
    let text = sidecar_text
        .into_iter()
        .chain(doc.documentation.iter().map(String::as_str))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    FreeTextDescriptor {
        service_id: doc.service_id.clone(),
        text,
    }
}

/// One successfully ingested service: its descriptor and free text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceSource {
    pub doc: WsdlDocument,
    pub free_text: FreeTextDescriptor,
}

/// Why a corpus file was not ingested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    MalformedXml,
    NotWsdl,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub service_id: String,
    pub path: PathBuf,
    pub reason: SkipReason,
    pub message: String,
}

/// Every WSDL file of a corpus directory, ingested or skipped.
/// Services are sorted by id.
#[derive(Debug, Clone, Default)]
pub struct WsdlCorpus {
    pub services: Vec<ServiceSource>,
    pub skipped: Vec<SkippedFile>,
}

impl WsdlCorpus {
    /// Number of WSDL files seen, whether ingested or skipped.
    pub fn file_count(&self) -> usize {
        self.services.len() + self.skipped.len()
    }
}

fn is_wsdl_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wsdl") || e.eq_ignore_ascii_case("xml"))
}

/// Loads every `.wsdl`/`.xml` file in `dir` along with its optional
/// `<stem>.txt` sidecar.
pub fn load_corpus(dir: &Path) -> Result<WsdlCorpus, IngestError> {
    let io_err = |path: &Path, source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if is_wsdl_file(&path) {
            paths.push(path);
        }
    }
    paths.sort();

    let mut seen: BTreeMap<String, PathBuf> = BTreeMap::new();
    for path in &paths {
        let id = service_id_for(path).ok_or_else(|| IngestError::InvalidPath {
            path: path.display().to_string(),
        })?;
        if let Some(first) = seen.insert(id.clone(), path.clone()) {
            return Err(IngestError::DuplicateServiceId {
                service_id: id,
                first: first.display().to_string(),
                second: path.display().to_string(),
            });
        }
    }

    let mut corpus = WsdlCorpus::default();
    for (service_id, path) in seen {
        let shown = path.display().to_string();
        let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
        match parse_wsdl(&bytes, &shown) {
            Ok(doc) => {
                let sidecar_path = path.with_extension("txt");
                let sidecar = if sidecar_path.is_file() {
                    Some(fs::read_to_string(&sidecar_path).map_err(|e| io_err(&sidecar_path, e))?)
                } else {
                    None
                };
                let free_text = extract_free_text(&doc, sidecar.as_deref());
                corpus.services.push(ServiceSource { doc, free_text });
            }
            Err(err @ (IngestError::MalformedXml { .. } | IngestError::NotWsdl { .. })) => {
                warn!("skipping {err}");
                let reason = match err {
                    IngestError::MalformedXml { .. } => SkipReason::MalformedXml,
                    _ => SkipReason::NotWsdl,
                };
                corpus.skipped.push(SkippedFile {
                    service_id,
                    path,
                    reason,
                    message: err.to_string(),
                });
            }
            Err(err) => return Err(err),
        }
    }
    Ok(corpus)
}
