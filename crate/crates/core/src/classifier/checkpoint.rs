//! Binary model checkpoints.
//!
//! Layout, all integers little-endian, strings as `u32 length + UTF-8`:
//!
//! ```text
//! "FSLC" | u16 version | str architecture | u32 K | K x str class
//! | u32 epoch | f64 val_acc | str seed | str provenance
//! | u32 P | P x (str name | u32 rank | rank x u32 dim | f32 values)
//! ```

use std::path::Path;

use super::{Architecture, ClassifierError, Network};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FSLC";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Training state recorded alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub epoch: u32,
    pub val_accuracy: f64,
    pub seed: String,
    /// Free-form `key=value` run configuration.
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub network: Network,
    pub meta: TrainingMeta,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend((s.len() as u32).to_le_bytes());
    out.extend(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ClassifierError> {
        let end = self.pos.checked_add(n).ok_or(ClassifierError::TruncatedFile)?;
        let s = self.buf.get(self.pos..end).ok_or(ClassifierError::TruncatedFile)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, ClassifierError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ClassifierError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ClassifierError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, ClassifierError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| ClassifierError::Corrupt("non-UTF-8 string".into()))
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let net = &self.network;
        let mut out = Vec::with_capacity(net.params().num_values() * 4 + 1024);
        out.extend(CHECKPOINT_MAGIC);
        out.extend(CHECKPOINT_VERSION.to_le_bytes());
        put_str(&mut out, &net.architecture().to_string());
        out.extend((net.num_classes() as u32).to_le_bytes());
        for c in net.classes() {
            put_str(&mut out, c);
        }
        out.extend(self.meta.epoch.to_le_bytes());
        out.extend(self.meta.val_accuracy.to_le_bytes());
        put_str(&mut out, &self.meta.seed);
        put_str(&mut out, &self.meta.provenance);
        out.extend((net.params().len() as u32).to_le_bytes());
        for p in &net.params().params {
            put_str(&mut out, &p.name);
            out.extend((p.value.shape().len() as u32).to_le_bytes());
            for &d in p.value.shape() {
                out.extend((d as u32).to_le_bytes());
            }
            for v in p.value.data() {
                out.extend(v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, ClassifierError> {
        let mut r = Reader { buf, pos: 0 };
        if buf.len() < 4 {
            return Err(if CHECKPOINT_MAGIC.starts_with(buf) {
                ClassifierError::TruncatedFile
            } else {
                ClassifierError::BadMagic
            });
        }
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(ClassifierError::BadMagic);
        }
        let version = r.u16()?;
        if version != CHECKPOINT_VERSION {
            return Err(ClassifierError::VersionMismatch {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let arch: Architecture = r.str()?.parse()?;
        let k = r.u32()? as usize;
        let classes = (0..k).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        let meta = TrainingMeta {
            epoch: r.u32()?,
            val_accuracy: r.f64()?,
            seed: r.str()?,
            provenance: r.str()?,
        };
        let count = r.u32()? as usize;
        let mut values = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name = r.str()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let n: usize = shape.iter().product();
            let raw = r.take(n.checked_mul(4).ok_or(ClassifierError::TruncatedFile)?)?;
            let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
            values.push((name, Tensor::new(shape, data)?));
        }
        if r.pos != buf.len() {
            return Err(ClassifierError::Corrupt(format!("{} trailing bytes", buf.len() - r.pos)));
        }
        Ok(Checkpoint {
            network: Network::from_parts(arch, classes, values)?,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| ClassifierError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let buf = std::fs::read(path).map_err(|source| ClassifierError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&buf)
    }
}
