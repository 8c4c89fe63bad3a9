use super::{ChunkIndex, ChunkRecord, CorpusError};
use crate::rng::Seed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: Seed,
    pub per_class_count: usize,
}

impl SamplerConfig {
    pub fn new(seed: Seed, per_class_count: usize) -> Result<Self, CorpusError> {
        if per_class_count == 0 {
            return Err(CorpusError::InvalidConfig("per_class_count must be at least 1".into()));
        }
        Ok(SamplerConfig {
            seed,
            per_class_count,
        })
    }
}

/// Picks `per_class_count` chunks from every class without replacement.
///
/// One generator seeded from the run seed is shared across classes, which
/// are visited in label order. Each class's records (in index order) are
/// Fisher-Yates shuffled and the first `per_class_count` kept, so the output
/// is grouped by label.
pub fn sample_chunks(index: &ChunkIndex, cfg: &SamplerConfig) -> Result<Vec<ChunkRecord>, CorpusError> {
    if cfg.per_class_count == 0 {
        return Err(CorpusError::InvalidConfig("per_class_count must be at least 1".into()));
    }
    let groups = index.by_label();
    if let Some((class, records)) = groups.iter().find(|(_, r)| r.len() < cfg.per_class_count) {
        return Err(CorpusError::InsufficientSamples {
            class: class.to_string(),
            available: records.len(),
            requested: cfg.per_class_count,
        });
    }
    let mut out = Vec::with_capacity(groups.len() * cfg.per_class_count);
    for (label, mut records) in groups {
        // One stream per class: adding or resizing a class leaves the others' picks alone.
        cfg.seed.derive(&format!("sample:{label}")).shuffle(&mut records);
        out.extend(records.into_iter().take(cfg.per_class_count).cloned());
    }
    Ok(out)
}
