//! Accuracy, confusion matrices and report files.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::{ClassifierError, EpochLog, Network};
use crate::corpus::Fragment;
use crate::randtest::report::{csv_field, provenance_line};

/// Number of samples listed in the prediction gallery.
pub const GALLERY_SIZE: usize = 25;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("evaluation set is empty")]
    EmptySet,
    #[error("label {0:?} is not in the model's class table")]
    UnknownLabel(String),
    #[error(transparent)]
    Model(#[from] ClassifierError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        ConfusionMatrix {
            classes,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.trace() as f64 / total as f64)
    }

    /// `None` when the class never occurs in the evaluation set.
    pub fn recall(&self, truth: usize) -> Option<f64> {
        let row = self.row_sum(truth);
        (row > 0).then(|| self.counts[truth][truth] as f64 / row as f64)
    }

    pub fn to_csv(&self, provenance: &[(&str, String)]) -> String {
        self.render(provenance, |_, c| c.to_string())
    }

    /// Row-normalized percentages with two decimals; empty rows stay empty.
    pub fn to_pct_csv(&self, provenance: &[(&str, String)]) -> String {
        self.render(provenance, |row, c| {
            let total = self.row_sum(row);
            if total == 0 {
                String::new()
            } else {
                format!("{:.2}", 100.0 * c as f64 / total as f64)
            }
        })
    }

    fn render(&self, provenance: &[(&str, String)], cell: impl Fn(usize, u64) -> String) -> String {
        let mut out = provenance_line(provenance);
        out.push_str("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for (i, c) in self.classes.iter().enumerate() {
            out.push_str(&csv_field(c));
            for &n in &self.counts[i] {
                out.push(',');
                out.push_str(&cell(i, n));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub index: usize,
    pub predicted: usize,
    pub confidence: f32,
    pub truth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub matrix: ConfusionMatrix,
    pub predictions: Vec<PredictionRow>,
}

impl Evaluation {
    /// Builds the matrix from `(truth, predicted, confidence)` triples.
    pub fn from_predictions(
        classes: Vec<String>,
        rows: impl IntoIterator<Item = (usize, usize, f32)>,
    ) -> Result<Self, EvalError> {
        let mut matrix = ConfusionMatrix::new(classes);
        let predictions: Vec<PredictionRow> = rows
            .into_iter()
            .enumerate()
            .map(|(index, (truth, predicted, confidence))| {
                matrix.add(truth, predicted);
                PredictionRow {
                    index,
                    predicted,
                    confidence,
                    truth,
                }
            })
            .collect();
        if predictions.is_empty() {
            return Err(EvalError::EmptySet);
        }
        Ok(Evaluation { matrix, predictions })
    }

    pub fn accuracy(&self) -> f64 {
        self.matrix.accuracy().expect("nonempty by construction")
    }

    pub fn recall(&self, class: &str) -> Option<f64> {
        let i = self.matrix.classes().iter().position(|c| c == class)?;
        self.matrix.recall(i)
    }
}

/// Predicts every fragment and tallies against its label.
pub fn evaluate(model: &Network, fragments: &[Fragment], batch_size: usize) -> Result<Evaluation, EvalError> {
    if fragments.is_empty() {
        return Err(EvalError::EmptySet);
    }
    let truths = fragments
        .iter()
        .map(|f| model.class_index(&f.label).ok_or_else(|| EvalError::UnknownLabel(f.label.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let preds = model.predict_fragments(fragments, batch_size)?;
    Evaluation::from_predictions(
        model.classes().to_vec(),
        truths.into_iter().zip(preds).map(|(t, p)| (t, p.label, p.confidence)),
    )
}

/// Paths of the files written by [`emit_reports`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub confusion: PathBuf,
    pub confusion_pct: PathBuf,
    pub per_class: PathBuf,
    pub gallery: PathBuf,
    pub images: Vec<PathBuf>,
}

fn write(path: PathBuf, text: &[u8]) -> Result<PathBuf, EvalError> {
    fs::write(&path, text).map_err(|source| EvalError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `confusion.csv`, `confusion_pct.csv`, `per_class.csv` and
/// `gallery.csv` into `dir`. With `fragments`, also renders
/// `confusion.pgm` and a 5x5 `gallery.pgm` mosaic of the first samples.
pub fn emit_reports(
    eval: &Evaluation,
    dir: &Path,
    provenance: &[(&str, String)],
    fragments: Option<&[Fragment]>,
) -> Result<ReportFiles, EvalError> {
    fs::create_dir_all(dir).map_err(|source| EvalError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let m = &eval.matrix;
    let confusion = write(dir.join("confusion.csv"), m.to_csv(provenance).as_bytes())?;
    let confusion_pct = write(dir.join("confusion_pct.csv"), m.to_pct_csv(provenance).as_bytes())?;

    let mut per_class = provenance_line(provenance);
    per_class.push_str("class,count,correct,recall\n");
    for (i, c) in m.classes().iter().enumerate() {
        let recall = m.recall(i).map_or(String::new(), |r| format!("{r:.6}"));
        per_class.push_str(&format!("{},{},{},{recall}\n", csv_field(c), m.row_sum(i), m.count(i, i)));
    }
    per_class.push_str(&format!("all,{},{},{:.6}\n", m.total(), m.trace(), eval.accuracy()));
    let per_class = write(dir.join("per_class.csv"), per_class.as_bytes())?;

    let mut gallery = provenance_line(provenance);
    gallery.push_str("index,predicted,confidence,true\n");
    for p in eval.predictions.iter().take(GALLERY_SIZE) {
        gallery.push_str(&format!(
            "{},{},{:.6},{}\n",
            p.index,
            csv_field(&m.classes()[p.predicted]),
            p.confidence,
            csv_field(&m.classes()[p.truth])
        ));
    }
    let gallery = write(dir.join("gallery.csv"), gallery.as_bytes())?;

    let mut images = Vec::new();
    if let Some(frags) = fragments {
        images.push(write(dir.join("confusion.pgm"), &confusion_image(m))?);
        images.push(write(dir.join("gallery.pgm"), &gallery_image(frags))?);
    }
    Ok(ReportFiles {
        confusion,
        confusion_pct,
        per_class,
        gallery,
        images,
    })
}

fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Heat map of row-normalized counts, 32 pixels per cell, dark = high.
fn confusion_image(m: &ConfusionMatrix) -> Vec<u8> {
    const CELL: usize = 32;
    let k = m.classes().len();
    let side = k * CELL;
    let mut px = vec![255u8; side * side];
    for r in 0..k {
        let total = m.row_sum(r);
        for c in 0..k {
            let share = if total == 0 { 0.0 } else { m.count(r, c) as f64 / total as f64 };
            let shade = (255.0 * (1.0 - share)).round() as u8;
            for y in r * CELL + 1..(r + 1) * CELL - 1 {
                px[y * side + c * CELL + 1..y * side + (c + 1) * CELL - 1].fill(shade);
            }
        }
    }
    pgm(side, side, &px)
}

/// Up to 25 fragments as 64x64 tiles on a 5x5 grid with 2-pixel gutters.
fn gallery_image(frags: &[Fragment]) -> Vec<u8> {
    const TILE: usize = 64;
    const GAP: usize = 2;
    let side = 5 * TILE + 6 * GAP;
    let mut px = vec![255u8; side * side];
    for (i, f) in frags.iter().take(GALLERY_SIZE).enumerate() {
        let (ty, tx) = (GAP + (i / 5) * (TILE + GAP), GAP + (i % 5) * (TILE + GAP));
        for row in 0..TILE {
            let dst = (ty + row) * side + tx;
            px[dst..dst + TILE].copy_from_slice(&f.data()[row * TILE..(row + 1) * TILE]);
        }
    }
    pgm(side, side, &px)
}

/// Line plot of train (gray) and validation (black) accuracy per epoch.
pub fn epoch_plot(log: &EpochLog) -> Vec<u8> {
    const W: usize = 320;
    const H: usize = 200;
    let mut px = vec![255u8; W * H];
    for x in 0..W {
        px[(H - 1) * W + x] = 160;
    }
    for y in 0..H {
        px[y * W] = 160;
    }
    let n = log.rows.len();
    let to_xy = |i: usize, acc: f64| {
        let x = if n <= 1 { W / 2 } else { 1 + i * (W - 2) / (n - 1) };
        let y = ((1.0 - acc.clamp(0.0, 1.0)) * (H - 2) as f64).round() as usize;
        (x, y)
    };
    let mut draw = |pts: Vec<(usize, usize)>, shade: u8| {
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let steps = x1.abs_diff(x0).max(y1.abs_diff(y0)).max(1);
            for s in 0..=steps {
                let x = x0 as f64 + (x1 as f64 - x0 as f64) * s as f64 / steps as f64;
                let y = y0 as f64 + (y1 as f64 - y0 as f64) * s as f64 / steps as f64;
                px[y.round() as usize * W + x.round() as usize] = shade;
            }
        }
        if let [(x, y)] = pts[..] {
            px[y * W + x] = shade;
        }
    };
    draw(log.rows.iter().enumerate().map(|(i, r)| to_xy(i, r.train_acc)).collect(), 128);
    draw(log.rows.iter().enumerate().map(|(i, r)| to_xy(i, r.val_acc)).collect(), 0);
    pgm(W, H, &px)
}
