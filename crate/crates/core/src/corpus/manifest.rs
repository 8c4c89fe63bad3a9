use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::tools::{CompressorSpec, ToolId};
use super::{compress_document, sanitize_id, CorpusError, SourceDocument, FRAGMENT_SIZE};
use crate::rng::Seed;

pub const MANIFEST_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "fragsleuth-manifest";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub source_id: String,
    pub tool_id: ToolId,
    pub tool_version: String,
    pub compressed_path: String,
    pub compressed_size: u64,
    pub chunk_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: Seed,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(seed: Seed, mut entries: Vec<ManifestEntry>) -> Self {
        entries.sort_by(|a, b| (a.tool_id, &a.source_id).cmp(&(b.tool_id, &b.source_id)));
        DatasetManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            seed,
            entries,
        }
    }

    pub fn total_chunks(&self) -> u64 {
        self.entries.iter().map(|e| e.chunk_count).sum()
    }

    pub fn tools(&self) -> BTreeSet<ToolId> {
        self.entries.iter().map(|e| e.tool_id).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} v{} seed={}\n", self.format_version, self.seed);
        for e in &self.entries {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.source_id, e.tool_id, e.tool_version, e.compressed_path, e.compressed_size, e.chunk_count
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CorpusError::Parse("empty manifest".into()))?;
        let rest = header
            .strip_prefix(MAGIC)
            .and_then(|r| r.strip_prefix(" v"))
            .ok_or_else(|| CorpusError::Parse(format!("bad manifest header {header:?}")))?;
        let (version, seed) = rest
            .split_once(" seed=")
            .ok_or_else(|| CorpusError::Parse(format!("bad manifest header {header:?}")))?;
        let format_version: u32 = version
            .parse()
            .map_err(|_| CorpusError::Parse(format!("bad manifest version {version:?}")))?;
        if format_version != MANIFEST_FORMAT_VERSION {
            return Err(CorpusError::Parse(format!(
                "unsupported manifest version {format_version}"
            )));
        }
        let seed = Seed::new(seed).ok_or_else(|| CorpusError::Parse("bad manifest seed".into()))?;

        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || CorpusError::Parse(format!("manifest line {}: {line:?}", i + 2));
            if fields.len() != 6 {
                return Err(bad());
            }
            entries.push(ManifestEntry {
                source_id: fields[0].to_string(),
                tool_id: fields[1].parse()?,
                tool_version: fields[2].to_string(),
                compressed_path: fields[3].to_string(),
                compressed_size: fields[4].parse().map_err(|_| bad())?,
                chunk_count: fields[5].parse().map_err(|_| bad())?,
            });
        }
        Ok(DatasetManifest {
            format_version,
            seed,
            entries,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_text()).map_err(|e| CorpusError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug)]
pub struct EntryFailure {
    pub source_id: String,
    pub tool: ToolId,
    pub error: CorpusError,
}

#[derive(Debug)]
pub struct BuildOutcome {
    pub manifest: DatasetManifest,
    pub failures: Vec<EntryFailure>,
}

/// Compresses every document with every tool under `workdir`.
///
/// Pairs run in parallel; failures are collected per entry and the manifest
/// keeps every pair that succeeded.
pub fn build_manifest(
    docs: &[SourceDocument],
    specs: &[CompressorSpec],
    workdir: &Path,
    seed: &Seed,
) -> BuildOutcome {
    let pairs: Vec<(&SourceDocument, &CompressorSpec)> = specs
        .iter()
        .flat_map(|s| docs.iter().map(move |d| (d, s)))
        .collect();
    let results: Vec<_> = pairs
        .par_iter()
        .map(|(doc, spec)| (doc, spec, compress_document(doc, spec, workdir)))
        .collect();

    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (doc, spec, result) in results {
        match result {
            Ok(file) => entries.push(ManifestEntry {
                source_id: doc.id.clone(),
                tool_id: spec.tool_id,
                tool_version: spec.version.clone(),
                compressed_path: file.relative,
                compressed_size: file.size,
                chunk_count: file.size / FRAGMENT_SIZE as u64,
            }),
            Err(error) => failures.push(EntryFailure {
                source_id: doc.id.clone(),
                tool: spec.tool_id,
                error,
            }),
        }
    }
    let staging = workdir.join(".staging");
    if staging.is_dir() {
        let _ = fs::remove_dir_all(staging);
    }
    BuildOutcome {
        manifest: DatasetManifest::new(seed.clone(), entries),
        failures,
    }
}

/// Lists every nonempty regular file under `root`, sorted by relative path.
pub fn discover_documents(root: &Path) -> Result<Vec<SourceDocument>, CorpusError> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| CorpusError::io(&dir, e))? {
            let entry = entry.map_err(|e| CorpusError::io(&dir, e))?;
            let path = entry.path();
            let kind = entry.file_type().map_err(|e| CorpusError::io(&path, e))?;
            if kind.is_dir() {
                stack.push(path);
            } else if kind.is_file() {
                files.push(path);
            }
        }
    }
    files.sort();

    let mut seen = BTreeSet::new();
    let mut docs = Vec::new();
    for path in files {
        let size = fs::metadata(&path).map_err(|e| CorpusError::io(&path, e))?.len();
        if size == 0 {
            continue;
        }
        let relative = path
            .strip_prefix(root)
            .unwrap_or(&path)
            .to_string_lossy()
            .replace('\\', "/");
        let id = sanitize_id(&relative);
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateSourceId(id));
        }
        docs.push(SourceDocument { id, path, size });
    }
    Ok(docs)
}
