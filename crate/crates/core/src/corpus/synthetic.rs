//! Seeded generator for a desk-scale document corpus.
//!
//! Produces a mix resembling a government web crawl: prose, HTML pages,
//! CSV tables, binary record files, raster images and documents carrying
//! already-compressed payloads (as PDFs and JPEGs do).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::CorpusError;
use crate::rng::{Seed, SplitMix64};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub seed: Seed,
    pub documents: usize,
    pub min_size: usize,
    pub max_size: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: Seed::default(),
            documents: 100,
            min_size: 16 * 1024,
            max_size: 512 * 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Prose,
    Html,
    Table,
    Records,
    Raster,
    Packed,
    Photo,
}

impl Kind {
    fn extension(self) -> &'static str {
        match self {
            Kind::Prose => "txt",
            Kind::Html => "html",
            Kind::Table => "csv",
            Kind::Records => "bin",
            Kind::Raster => "pgm",
            Kind::Packed => "pdf",
            Kind::Photo => "jpg",
        }
    }

    fn pick(rng: &mut SplitMix64) -> Kind {
        // Weights roughly follow the file-type mix of a public .gov crawl.
        match rng.below(100) {
            0..=17 => Kind::Prose,
            18..=37 => Kind::Html,
            38..=49 => Kind::Table,
            50..=59 => Kind::Records,
            60..=69 => Kind::Raster,
            70..=89 => Kind::Packed,
            _ => Kind::Photo,
        }
    }
}

struct Vocabulary {
    words: Vec<String>,
    cumulative: Vec<f64>,
}

impl Vocabulary {
    fn new(rng: &mut SplitMix64, size: usize) -> Self {
        const ONSETS: [&str; 20] = [
            "b", "c", "d", "f", "g", "h", "l", "m", "n", "p", "r", "s", "t", "v", "w", "st", "tr", "pl",
            "gr", "ch",
        ];
        const VOWELS: [&str; 8] = ["a", "e", "i", "o", "u", "ea", "io", "ou"];
        const CODAS: [&str; 10] = ["", "", "n", "r", "s", "t", "l", "nd", "ng", "ct"];
        let words = (0..size)
            .map(|_| {
                let syllables = 1 + rng.below(3) as usize;
                let mut w = String::new();
                for _ in 0..syllables {
                    w.push_str(ONSETS[rng.below(ONSETS.len() as u64) as usize]);
                    w.push_str(VOWELS[rng.below(VOWELS.len() as u64) as usize]);
                    w.push_str(CODAS[rng.below(CODAS.len() as u64) as usize]);
                }
                w
            })
            .collect();
        let mut total = 0.0;
        let cumulative = (1..=size)
            .map(|rank| {
                total += 1.0 / (rank as f64).powf(1.07);
                total
            })
            .collect();
        Vocabulary { words, cumulative }
    }

    fn word(&self, rng: &mut SplitMix64) -> &str {
        let target = rng.next_f64() * self.cumulative[self.cumulative.len() - 1];
        let i = self.cumulative.partition_point(|&c| c < target);
        &self.words[i.min(self.words.len() - 1)]
    }

    fn sentence(&self, rng: &mut SplitMix64, out: &mut String) {
        let len = 6 + rng.below(18);
        for i in 0..len {
            let w = self.word(rng);
            if i == 0 {
                let mut chars = w.chars();
                if let Some(c) = chars.next() {
                    out.extend(c.to_uppercase());
                    out.push_str(chars.as_str());
                }
            } else {
                out.push(' ');
                if rng.below(40) == 0 {
                    write!(out, "{}", rng.below(10_000)).unwrap();
                } else {
                    out.push_str(w);
                }
            }
            if i + 1 < len && rng.below(12) == 0 {
                out.push(',');
            }
        }
        out.push_str(if rng.below(10) == 0 { "?" } else { "." });
    }
}

fn prose(rng: &mut SplitMix64, vocab: &Vocabulary, size: usize) -> Vec<u8> {
    let mut out = String::with_capacity(size + 256);
    while out.len() < size {
        for _ in 0..2 + rng.below(6) {
            vocab.sentence(rng, &mut out);
            out.push(' ');
        }
        out.push_str("\n\n");
    }
    out.truncate(size);
    out.into_bytes()
}

fn html(rng: &mut SplitMix64, vocab: &Vocabulary, size: usize) -> Vec<u8> {
    let mut out = String::from("<!DOCTYPE html>\n<html>\n<head><title>");
    vocab.sentence(rng, &mut out);
    out.push_str("</title></head>\n<body>\n");
    while out.len() < size {
        match rng.below(4) {
            0 => {
                out.push_str("<h2>");
                out.push_str(vocab.word(rng));
                out.push_str("</h2>\n");
            }
            1 => {
                out.push_str("<ul>\n");
                for _ in 0..1 + rng.below(5) {
                    write!(out, "  <li><a href=\"/{}/{}.html\">", vocab.word(rng), rng.below(900)).unwrap();
                    out.push_str(vocab.word(rng));
                    out.push_str("</a></li>\n");
                }
                out.push_str("</ul>\n");
            }
            _ => {
                out.push_str("<p class=\"body\">");
                for _ in 0..1 + rng.below(4) {
                    vocab.sentence(rng, &mut out);
                    out.push(' ');
                }
                out.push_str("</p>\n");
            }
        }
    }
    out.truncate(size);
    out.into_bytes()
}

fn table(rng: &mut SplitMix64, vocab: &Vocabulary, size: usize) -> Vec<u8> {
    let cols = 3 + rng.below(8) as usize;
    let mut out = String::new();
    let header: Vec<&str> = (0..cols).map(|_| vocab.word(rng)).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let mut row = 0u64;
    while out.len() < size {
        row += 1;
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            match (c + row as usize) % 4 {
                0 => write!(out, "{row}").unwrap(),
                1 => write!(out, "{:.2}", rng.next_f64() * 10_000.0).unwrap(),
                2 => write!(out, "20{:02}-{:02}-{:02}", rng.below(25), 1 + rng.below(12), 1 + rng.below(28)).unwrap(),
                _ => out.push_str(vocab.word(rng)),
            }
        }
        out.push('\n');
    }
    out.truncate(size);
    out.into_bytes()
}

fn records(rng: &mut SplitMix64, vocab: &Vocabulary, size: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(size + 128);
    out.extend_from_slice(b"\xd0\xcf\x11\xe0\xa1\xb1\x1a\xe1");
    out.resize(512, 0);
    let mut id = rng.below(1000) as u32;
    while out.len() < size {
        id += 1 + rng.below(3) as u32;
        out.extend_from_slice(&id.to_le_bytes());
        out.extend_from_slice(&(rng.below(64) as u16).to_le_bytes());
        out.extend_from_slice(&((rng.next_f64() * 1000.0) as f32).to_le_bytes());
        out.extend_from_slice(&[0u8; 6]);
        let name = vocab.word(rng);
        let mut field = [b' '; 16];
        let n = name.len().min(16);
        field[..n].copy_from_slice(&name.as_bytes()[..n]);
        out.extend_from_slice(&field);
        if rng.below(8) == 0 {
            out.extend_from_slice(&[0xffu8; 4]);
        }
    }
    out.truncate(size);
    out
}

fn raster(rng: &mut SplitMix64, size: usize) -> Vec<u8> {
    let width = 256 + 64 * rng.below(8) as usize;
    let height = size / width + 1;
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    let fx = 0.5 + rng.next_f64() * 4.0;
    let fy = 0.5 + rng.next_f64() * 4.0;
    let noise = 1 + rng.below(24);
    for y in 0..height {
        for x in 0..width {
            let base = 128.0
                + 80.0 * ((x as f64 / width as f64) * fx * std::f64::consts::TAU).sin()
                + 40.0 * ((y as f64 / height as f64) * fy * std::f64::consts::TAU).cos();
            let v = base + rng.below(noise) as f64;
            out.push(v.clamp(0.0, 255.0) as u8);
        }
    }
    out.truncate(size);
    out
}

/// A text-framed document whose body streams are incompressible.
fn packed(rng: &mut SplitMix64, vocab: &Vocabulary, size: usize) -> Vec<u8> {
    let mut out = b"%PDF-1.4\n".to_vec();
    let mut obj = 1;
    while out.len() < size {
        let len = 2048 + rng.below(16_384) as usize;
        out.extend_from_slice(
            format!("{obj} 0 obj\n<< /Length {len} /Filter /FlateDecode >>\nstream\n").as_bytes(),
        );
        let start = out.len();
        out.resize(start + len, 0);
        rng.fill_bytes(&mut out[start..]);
        out.extend_from_slice(b"\nendstream\nendobj\n");
        let mut text = String::new();
        vocab.sentence(rng, &mut text);
        out.extend_from_slice(format!("% {text}\n").as_bytes());
        obj += 1;
    }
    out.truncate(size);
    out
}

/// JFIF framing around an entropy-coded scan: random bytes with 0xFF
/// stuffing and periodic restart markers.
fn photo(rng: &mut SplitMix64, size: usize) -> Vec<u8> {
    let mut out = b"\xff\xd8\xff\xe0\x00\x10JFIF\x00\x01\x01\x00\x00\x48\x00\x48\x00\x00".to_vec();
    for table in 0..2u8 {
        out.extend_from_slice(&[0xff, 0xdb, 0x00, 0x43, table]);
        let q = 2 + rng.below(12) as u8;
        out.extend((0..64u8).map(|i| q.saturating_add(i / 2)));
    }
    out.extend_from_slice(b"\xff\xc0\x00\x11\x08\x04\x00\x06\x00\x03\x01\x22\x00\x02\x11\x01\x03\x11\x01");
    out.extend_from_slice(b"\xff\xdd\x00\x04\x00\x40\xff\xda\x00\x0c\x03\x01\x00\x02\x11\x03\x11\x00\x3f\x00");
    let mut restart = 0u8;
    let mut since_marker = 0usize;
    let interval = 1500 + rng.below(3000) as usize;
    while out.len() + 2 < size {
        let b = (rng.next_u64() >> 56) as u8;
        out.push(b);
        if b == 0xff {
            out.push(0x00);
        }
        since_marker += 1;
        if since_marker >= interval {
            out.extend_from_slice(&[0xff, 0xd0 + restart]);
            restart = (restart + 1) % 8;
            since_marker = 0;
        }
    }
    out.truncate(size - 2);
    out.extend_from_slice(&[0xff, 0xd9]);
    out
}

/// Writes `cfg.documents` files into `out_dir` and returns their paths.
pub fn generate(out_dir: &Path, cfg: &SyntheticConfig) -> Result<Vec<PathBuf>, CorpusError> {
    if cfg.min_size == 0 || cfg.min_size > cfg.max_size {
        return Err(CorpusError::InvalidConfig(format!(
            "document size range {}..={} is empty",
            cfg.min_size, cfg.max_size
        )));
    }
    fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let mut rng = cfg.seed.derive("synthetic");
    let vocab = Vocabulary::new(&mut rng, 4000);
    let (lo, hi) = ((cfg.min_size as f64).ln(), (cfg.max_size as f64).ln());
    let mut paths = Vec::with_capacity(cfg.documents);
    for i in 0..cfg.documents {
        let kind = Kind::pick(&mut rng);
        let size = (lo + (hi - lo) * rng.next_f64()).exp().round() as usize;
        let size = size.clamp(cfg.min_size, cfg.max_size);
        let data = match kind {
            Kind::Prose => prose(&mut rng, &vocab, size),
            Kind::Html => html(&mut rng, &vocab, size),
            Kind::Table => table(&mut rng, &vocab, size),
            Kind::Records => records(&mut rng, &vocab, size),
            Kind::Raster => raster(&mut rng, size),
            Kind::Packed => packed(&mut rng, &vocab, size),
            Kind::Photo => photo(&mut rng, size),
        };
        let path = out_dir.join(format!("doc_{i:05}.{}", kind.extension()));
        fs::write(&path, &data).map_err(|e| CorpusError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
