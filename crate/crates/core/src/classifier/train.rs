use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::Path;

use super::{batch_tensor, Architecture, Checkpoint, ClassifierError, Network, TrainingMeta};
use crate::corpus::{read_fragment, ChunkIndex, ChunkRecord, Fragment};
use crate::randtest::report::provenance_line;
use crate::rng::Seed;
use crate::tensor::AdamConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Share of each class used for training; the rest validates.
    pub train_fraction: f64,
    pub seed: Seed,
    /// Stop once validation accuracy has sat within 0.5 points of the
    /// random baseline for this many consecutive epochs.
    pub early_stop_patience: Option<usize>,
    /// Keep all chunks of a compressed file on the same side of the split.
    pub split_by_file: bool,
    pub architecture: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            train_fraction: 0.9,
            seed: Seed::default(),
            early_stop_patience: Some(30),
            split_by_file: false,
            architecture: Architecture::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad("train fraction must lie strictly between 0 and 1");
        }
        if self.early_stop_patience == Some(0) {
            return bad("early-stop patience must be at least 1");
        }
        Ok(())
    }

    pub fn provenance(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("split", format!("{}/{}", self.train_fraction, round6(1.0 - self.train_fraction))),
            ("split_by", if self.split_by_file { "file" } else { "chunk" }.into()),
            (
                "patience",
                self.early_stop_patience.map_or("off".into(), |p| p.to_string()),
            ),
            ("arch", self.architecture.to_string()),
        ]
    }
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_acc: f64,
    pub val_acc: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochLog {
    pub rows: Vec<EpochRecord>,
}

impl EpochLog {
    pub fn best(&self) -> Option<&EpochRecord> {
        // First epoch reaching the maximum, matching checkpoint selection.
        self.rows.iter().fold(None, |best: Option<&EpochRecord>, r| match best {
            Some(b) if b.val_acc >= r.val_acc => Some(b),
            _ => Some(r),
        })
    }

    pub fn to_csv(&self, provenance: &[(&str, String)]) -> String {
        let mut out = provenance_line(provenance);
        out.push_str("epoch,train_acc,val_acc,train_loss,val_loss\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                r.epoch, r.train_acc, r.val_acc, r.train_loss, r.val_loss
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation accuracy.
    pub best: Checkpoint,
    pub log: EpochLog,
    pub train_records: Vec<ChunkRecord>,
    pub val_records: Vec<ChunkRecord>,
    pub stopped_early: bool,
    pub warnings: Vec<String>,
}

fn val_count(n: usize, train_fraction: f64) -> usize {
    let raw = (n as f64 * (1.0 - train_fraction)).round() as usize;
    if n >= 2 {
        raw.clamp(1, n - 1)
    } else {
        0
    }
}

/// Stratified, seeded train/validation split.
///
/// Classes are visited in label order with one shared generator. Per chunk,
/// each class is shuffled and its first `round(n * (1 - train_fraction))`
/// records validate. Per file, whole files are shuffled and moved to
/// validation until the class's validation quota is reached.
pub fn split_records(
    records: &[ChunkRecord],
    cfg: &TrainConfig,
) -> Result<(Vec<ChunkRecord>, Vec<ChunkRecord>), ClassifierError> {
    cfg.validate()?;
    let mut by_label: BTreeMap<&str, Vec<&ChunkRecord>> = BTreeMap::new();
    for r in records {
        by_label.entry(&r.label).or_default().push(r);
    }
    let mut rng = cfg.seed.derive("split");
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut group) in by_label {
        let quota = val_count(group.len(), cfg.train_fraction);
        if cfg.split_by_file {
            let mut files: BTreeMap<&str, Vec<&ChunkRecord>> = BTreeMap::new();
            for r in group {
                files.entry(&r.compressed_path).or_default().push(r);
            }
            let mut files: Vec<Vec<&ChunkRecord>> = files.into_values().collect();
            rng.shuffle(&mut files);
            let total_files = files.len();
            let mut taken = 0;
            for (i, file) in files.into_iter().enumerate() {
                let keep_one_for_train = total_files >= 2 && i + 1 == total_files;
                if taken < quota && !keep_one_for_train {
                    taken += file.len();
                    val.extend(file.into_iter().cloned());
                } else {
                    train.extend(file.into_iter().cloned());
                }
            }
        } else {
            rng.shuffle(&mut group);
            val.extend(group[..quota].iter().map(|r| (*r).clone()));
            train.extend(group[quota..].iter().map(|r| (*r).clone()));
        }
    }
    Ok((train, val))
}

/// Splits the index, loads every chunk from `base` and trains.
pub fn train(
    index: &ChunkIndex,
    base: &Path,
    cfg: &TrainConfig,
    adam: &AdamConfig,
) -> Result<TrainOutcome, ClassifierError> {
    cfg.validate()?;
    for (class, recs) in index.by_label() {
        if recs.len() < cfg.batch_size {
            return Err(ClassifierError::InsufficientData {
                class: class.to_string(),
                available: recs.len(),
                required: cfg.batch_size,
            });
        }
    }
    let classes = index.labels();
    if classes.is_empty() {
        return Err(ClassifierError::InsufficientData {
            class: "(none)".into(),
            available: 0,
            required: cfg.batch_size,
        });
    }
    let (train_recs, val_recs) = split_records(&index.records, cfg)?;
    let load = |recs: &[ChunkRecord]| -> Result<Vec<Fragment>, ClassifierError> {
        recs.iter().map(|r| read_fragment(base, r).map_err(Into::into)).collect()
    };
    let train_frags = load(&train_recs)?;
    let val_frags = load(&val_recs)?;
    let mut outcome = fit(&train_frags, &val_frags, classes, cfg, adam, |_, _| ControlFlow::Continue(()))?;
    outcome.train_records = train_recs;
    outcome.val_records = val_recs;
    Ok(outcome)
}

fn labels_of(frags: &[Fragment], classes: &[String]) -> Result<Vec<usize>, ClassifierError> {
    frags
        .iter()
        .map(|f| {
            classes
                .iter()
                .position(|c| *c == f.label)
                .ok_or_else(|| ClassifierError::UnknownLabel(f.label.clone()))
        })
        .collect()
}

/// Trains a fresh network on in-memory fragments.
///
/// After every epoch `on_epoch` receives the log row and the predicted class
/// of each validation fragment; returning `Break` ends training there.
pub fn fit(
    train: &[Fragment],
    val: &[Fragment],
    classes: Vec<String>,
    cfg: &TrainConfig,
    adam: &AdamConfig,
    mut on_epoch: impl FnMut(&EpochRecord, &[usize]) -> ControlFlow<()>,
) -> Result<TrainOutcome, ClassifierError> {
    cfg.validate()?;
    adam.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(ClassifierError::InvalidConfig(format!(
            "need training and validation chunks, got {} and {}",
            train.len(),
            val.len()
        )));
    }
    let mut warnings = Vec::new();
    if classes.len() == 1 {
        let msg = format!("only one class ({}); accuracy is trivially 100%", classes[0]);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let train_labels = labels_of(train, &classes)?;
    let val_labels = labels_of(val, &classes)?;
    let k = classes.len();
    let mut net = Network::new(cfg.architecture.clone(), classes, &cfg.seed)?;
    let provenance = provenance_line(&cfg.provenance()).trim_start_matches("# ").trim_end().to_string();

    let mut log = EpochLog::default();
    let mut best: Option<(Network, EpochRecord)> = None;
    let mut near_baseline = 0;
    let mut stopped_early = false;
    let baseline = 1.0 / k as f64;
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        cfg.seed.rng_offset(epoch as u64).shuffle(&mut order);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let images = batch_tensor(batch.iter().map(|&i| train[i].data()));
            let labels: Vec<usize> = batch.iter().map(|&i| train_labels[i]).collect();
            let (loss, c) = net.train_step(&images, &labels, adam)?;
            loss_sum += loss * batch.len() as f64;
            correct += c;
        }
        let mut val_loss = 0.0;
        let mut val_pred = Vec::with_capacity(val.len());
        for (frags, labels) in val.chunks(cfg.batch_size).zip(val_labels.chunks(cfg.batch_size)) {
            let (loss, pred) = net.loss(&batch_tensor(frags.iter().map(|f| f.data())), labels)?;
            val_loss += loss * frags.len() as f64;
            val_pred.extend(pred);
        }
        let val_correct = val_pred.iter().zip(&val_labels).filter(|(p, l)| p == l).count();
        let rec = EpochRecord {
            epoch,
            train_acc: correct as f64 / train.len() as f64,
            val_acc: val_correct as f64 / val.len() as f64,
            train_loss: loss_sum / train.len() as f64,
            val_loss: val_loss / val.len() as f64,
        };
        log::info!(
            "epoch {epoch}: train_acc {:.4} val_acc {:.4} train_loss {:.4} val_loss {:.4}",
            rec.train_acc,
            rec.val_acc,
            rec.train_loss,
            rec.val_loss
        );
        log.rows.push(rec);
        if best.as_ref().is_none_or(|(_, b)| rec.val_acc > b.val_acc) {
            best = Some((net.snapshot(), rec));
        }
        if on_epoch(&rec, &val_pred).is_break() {
            break;
        }
        if (rec.val_acc - baseline).abs() <= 0.005 {
            near_baseline += 1;
        } else {
            near_baseline = 0;
        }
        if cfg.early_stop_patience.is_some_and(|p| near_baseline >= p) && epoch < cfg.epochs {
            let msg = format!("stopped after epoch {epoch}: validation accuracy stuck at the random baseline");
            log::warn!("{msg}");
            warnings.push(msg);
            stopped_early = true;
            break;
        }
    }
    let (network, rec) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        best: Checkpoint {
            network,
            meta: TrainingMeta {
                epoch: rec.epoch as u32,
                val_accuracy: rec.val_acc,
                seed: cfg.seed.to_string(),
                provenance,
            },
        },
        log,
        train_records: Vec::new(),
        val_records: Vec::new(),
        stopped_early,
        warnings,
    })
}
