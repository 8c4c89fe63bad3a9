//! Labeled corpora of compressed-file fragments.
//!
//! Source documents are each placed in their own directory and compressed
//! with every configured tool (directly for archivers, via a tar for stream
//! compressors). The outputs are cut into 4096-byte fragments, indexed, and
//! sampled per class with the seeded generator from [`crate::rng`].

mod adapter;
pub mod builtin;
mod chunk;
pub mod lzw;
mod manifest;
mod sample;
pub mod synthetic;
pub mod tools;

use std::path::PathBuf;

pub use adapter::{compress_document, CompressedFile};
pub use chunk::{chunk_compressed, read_fragment, ChunkIndex, ChunkRecord};
pub use manifest::{
    build_manifest, discover_documents, BuildOutcome, DatasetManifest, EntryFailure, ManifestEntry,
    MANIFEST_FORMAT_VERSION,
};
pub use sample::{sample_chunks, SamplerConfig};
pub use tools::{parse_adapter_config, BackendPreference, CompressorSpec, Invocation, Packaging, ToolId};

/// Size of every fragment, in bytes.
pub const FRAGMENT_SIZE: usize = 4096;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{tool}: tool not available ({reason})")]
    ToolNotFound { tool: ToolId, reason: String },
    #[error("{tool}: tool failed: {diagnostics}")]
    ToolFailed { tool: ToolId, diagnostics: String },
    #[error("{tool}: command template {template:?} must name a program and contain {{input}}")]
    BadTemplate { tool: ToolId, template: String },
    #[error("unknown tool {0:?}")]
    UnknownTool(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("duplicate source id {0:?}")]
    DuplicateSourceId(String),
    #[error("class {class} has {available} chunks, {requested} requested")]
    InsufficientSamples {
        class: String,
        available: usize,
        requested: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.into(),
            source,
        }
    }
}

/// A document to be compressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub id: String,
    pub path: PathBuf,
    pub size: u64,
}

/// A labeled 4096-byte chunk of a compressed file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fragment {
    data: Box<[u8; FRAGMENT_SIZE]>,
    pub label: String,
    pub origin: Option<(String, u64)>,
}

impl Fragment {
    /// Builds a fragment; `data` must be exactly [`FRAGMENT_SIZE`] bytes.
    pub fn new(data: &[u8], label: impl Into<String>) -> Option<Self> {
        let data: Box<[u8; FRAGMENT_SIZE]> = data.to_vec().into_boxed_slice().try_into().ok()?;
        Some(Fragment {
            data,
            label: label.into(),
            origin: None,
        })
    }

    pub fn with_origin(mut self, path: impl Into<String>, ordinal: u64) -> Self {
        self.origin = Some((path.into(), ordinal));
        self
    }

    pub fn data(&self) -> &[u8; FRAGMENT_SIZE] {
        &self.data
    }
}

/// Turns a relative document path into a directory-safe identifier.
pub fn sanitize_id(relative: &str) -> String {
    relative
        .chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' | '_' => c,
            _ => '_',
        })
        .collect()
}
