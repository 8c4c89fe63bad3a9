use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;

use super::{CorpusError, DatasetManifest, Fragment, FRAGMENT_SIZE};
use crate::rng::Seed;

const MAGIC: &str = "fragsleuth-chunks";

/// Splits a compressed file into whole fragments; the trailing partial chunk
/// is dropped.
pub fn chunk_compressed(path: &Path, label: &str) -> Result<Vec<Fragment>, CorpusError> {
    let data = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    let origin = path.to_string_lossy().into_owned();
    Ok(data
        .chunks_exact(FRAGMENT_SIZE)
        .enumerate()
        .map(|(i, chunk)| {
            Fragment::new(chunk, label)
                .expect("chunks_exact yields full chunks")
                .with_origin(origin.clone(), i as u64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChunkRecord {
    pub compressed_path: String,
    pub chunk_ordinal: u64,
    pub byte_offset: u64,
    pub label: String,
}

impl ChunkRecord {
    pub fn new(compressed_path: impl Into<String>, chunk_ordinal: u64, label: impl Into<String>) -> Self {
        ChunkRecord {
            compressed_path: compressed_path.into(),
            chunk_ordinal,
            byte_offset: chunk_ordinal * FRAGMENT_SIZE as u64,
            label: label.into(),
        }
    }

    /// `path#ordinal`, used as the chunk identifier in reports.
    pub fn id(&self) -> String {
        format!("{}#{}", self.compressed_path, self.chunk_ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkIndex {
    pub seed: Seed,
    pub records: Vec<ChunkRecord>,
}

impl ChunkIndex {
    pub fn new(seed: Seed, records: Vec<ChunkRecord>) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for r in &records {
            if r.byte_offset != r.chunk_ordinal * FRAGMENT_SIZE as u64 {
                return Err(CorpusError::Parse(format!(
                    "chunk {} has offset {} (expected {})",
                    r.id(),
                    r.byte_offset,
                    r.chunk_ordinal * FRAGMENT_SIZE as u64
                )));
            }
            if !seen.insert((&r.compressed_path, r.chunk_ordinal)) {
                return Err(CorpusError::Parse(format!("duplicate chunk {}", r.id())));
            }
        }
        Ok(ChunkIndex { seed, records })
    }

    /// One record per whole chunk of every manifest entry; `skip_first`
    /// leaves out chunk 0 (the one carrying container headers).
    pub fn from_manifest(manifest: &DatasetManifest, skip_first: bool) -> Self {
        let start = u64::from(skip_first);
        let records = manifest
            .entries
            .iter()
            .flat_map(|e| {
                (start..e.chunk_count.max(start))
                    .map(move |i| ChunkRecord::new(e.compressed_path.clone(), i, e.tool_id.as_str()))
            })
            .collect();
        ChunkIndex {
            seed: manifest.seed.clone(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records grouped by label, each group in index order.
    pub fn by_label(&self) -> BTreeMap<&str, Vec<&ChunkRecord>> {
        let mut groups: BTreeMap<&str, Vec<&ChunkRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry(r.label.as_str()).or_default().push(r);
        }
        groups
    }

    pub fn labels(&self) -> Vec<String> {
        self.by_label().keys().map(|s| s.to_string()).collect()
    }

    /// Keeps only records whose label is in `labels`.
    pub fn retain_labels(&mut self, labels: &[String]) {
        self.records.retain(|r| labels.contains(&r.label));
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} v1 seed={}\n", self.seed);
        for r in &self.records {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                r.compressed_path, r.chunk_ordinal, r.byte_offset, r.label
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let seed = header
            .strip_prefix(MAGIC)
            .and_then(|r| r.strip_prefix(" v1 seed="))
            .and_then(Seed::new)
            .ok_or_else(|| CorpusError::Parse(format!("bad chunk index header {header:?}")))?;
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || CorpusError::Parse(format!("chunk index line {}: {line:?}", i + 2));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(bad());
            }
            records.push(ChunkRecord {
                compressed_path: fields[0].to_string(),
                chunk_ordinal: fields[1].parse().map_err(|_| bad())?,
                byte_offset: fields[2].parse().map_err(|_| bad())?,
                label: fields[3].to_string(),
            });
        }
        ChunkIndex::new(seed, records)
    }

    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_text()).map_err(|e| CorpusError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
        Self::parse(&text)
    }
}

/// Reads the fragment a record points at; paths resolve against `base`.
pub fn read_fragment(base: &Path, record: &ChunkRecord) -> Result<Fragment, CorpusError> {
    let path = base.join(&record.compressed_path);
    let mut file = File::open(&path).map_err(|e| CorpusError::io(&path, e))?;
    file.seek(SeekFrom::Start(record.byte_offset))
        .map_err(|e| CorpusError::io(&path, e))?;
    let mut buf = vec![0u8; FRAGMENT_SIZE];
    file.read_exact(&mut buf).map_err(|e| CorpusError::io(&path, e))?;
    Ok(Fragment::new(&buf, record.label.clone())
        .expect("buffer has fragment size")
        .with_origin(record.compressed_path.clone(), record.chunk_ordinal))
}
