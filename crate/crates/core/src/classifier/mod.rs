//! Fragment images, the convolutional classifier, training and checkpoints.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{CorpusError, Fragment, FRAGMENT_SIZE};
use crate::tensor::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, he_init, maxpool2_backward, maxpool2_forward,
    relu_backward, relu_forward, softmax, softmax_xent, AdamConfig, ParamSet, Tensor, TensorError,
};
use crate::rng::Seed;

mod checkpoint;
mod train;

pub use checkpoint::{Checkpoint, TrainingMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use train::{fit, split_records, train, EpochLog, EpochRecord, TrainConfig, TrainOutcome};

/// Side length of the square image a fragment is drawn as.
pub const IMAGE_SIDE: usize = 64;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("fragment must be {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("class {class} has {available} chunks, at least {required} needed")]
    InsufficientData {
        class: String,
        available: usize,
        required: usize,
    },
    #[error("invalid architecture {0:?}")]
    BadArchitecture(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found}, this build reads {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("checkpoint file is truncated")]
    TruncatedFile,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("class tables differ: model has [{}], data has [{}]", model.join(","), data.join(","))]
    ClassMismatch { model: Vec<String>, data: Vec<String> },
    #[error("label {0:?} is not in the model's class table")]
    UnknownLabel(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A fragment drawn as a 64x64 grayscale image, row-major, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentImage {
    pixels: Vec<f32>,
}

impl FragmentImage {
    pub fn pixel(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * IMAGE_SIDE + col]
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }
}

pub fn encode_bytes(bytes: &[u8]) -> Result<FragmentImage, ClassifierError> {
    if bytes.len() != FRAGMENT_SIZE {
        return Err(ClassifierError::BadLength {
            expected: FRAGMENT_SIZE,
            got: bytes.len(),
        });
    }
    Ok(FragmentImage {
        pixels: bytes.iter().map(|&b| f32::from(b) / 255.0).collect(),
    })
}

pub fn encode_fragment(fragment: &Fragment) -> FragmentImage {
    encode_bytes(fragment.data()).expect("fragments are always full size")
}

/// Stacks raw fragments into an `[N, 64, 64, 1]` batch.
pub fn batch_tensor<'a>(fragments: impl IntoIterator<Item = &'a [u8; FRAGMENT_SIZE]>) -> Tensor<f32> {
    let mut data = Vec::new();
    let mut n = 0;
    for f in fragments {
        data.extend(f.iter().map(|&b| f32::from(b) / 255.0));
        n += 1;
    }
    Tensor::new(vec![n, IMAGE_SIDE, IMAGE_SIDE, 1], data).expect("whole fragments")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// 3x3 same-padded convolution followed by ReLU.
    Conv(usize),
    /// 2x2 max pool.
    Pool,
    /// Fully connected layer followed by ReLU.
    Dense(usize),
}

/// Hidden layers of the network. The flatten step sits before the first
/// dense layer and a K-way dense + softmax output is always appended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    layers: Vec<LayerSpec>,
}

impl Default for Architecture {
    fn default() -> Self {
        "c32-c32-p-c64-c64-p-c128-c128-p-d2048-d2048".parse().expect("valid")
    }
}

impl Architecture {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self, ClassifierError> {
        let arch = Architecture { layers };
        arch.validate()?;
        Ok(arch)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |why: &str| Err(ClassifierError::BadArchitecture(format!("{self}: {why}")));
        let mut side = IMAGE_SIDE;
        let mut seen_dense = false;
        for l in &self.layers {
            match *l {
                LayerSpec::Conv(0) | LayerSpec::Dense(0) => return bad("zero width layer"),
                LayerSpec::Conv(_) | LayerSpec::Pool if seen_dense => {
                    return bad("convolution or pooling after a dense layer")
                }
                LayerSpec::Pool if !side.is_multiple_of(2) => return bad("pooling an odd-sized map"),
                LayerSpec::Pool => side /= 2,
                LayerSpec::Dense(_) => seen_dense = true,
                LayerSpec::Conv(_) => {}
            }
        }
        Ok(())
    }

    /// Width of the flattened feature map fed to the first dense layer.
    pub fn flatten_width(&self) -> usize {
        let mut side = IMAGE_SIDE;
        let mut channels = 1;
        for l in &self.layers {
            match *l {
                LayerSpec::Conv(f) => channels = f,
                LayerSpec::Pool => side /= 2,
                LayerSpec::Dense(_) => break,
            }
        }
        side * side * channels
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .layers
            .iter()
            .map(|l| match l {
                LayerSpec::Conv(n) => format!("c{n}"),
                LayerSpec::Pool => "p".into(),
                LayerSpec::Dense(n) => format!("d{n}"),
            })
            .collect();
        f.write_str(&parts.join("-"))
    }
}

impl FromStr for Architecture {
    type Err = ClassifierError;

    /// `c<filters>`, `p`, `d<units>` joined by `-`; empty means no hidden layers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClassifierError::BadArchitecture(s.to_string());
        let layers = s
            .split('-')
            .filter(|p| !p.is_empty())
            .map(|p| match p.split_at(1) {
                ("p", "") => Ok(LayerSpec::Pool),
                ("c", n) => n.parse().map(LayerSpec::Conv).map_err(|_| bad()),
                ("d", n) => n.parse().map(LayerSpec::Dense).map_err(|_| bad()),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Architecture::new(layers)
    }
}

#[derive(Debug, Clone, Copy)]
enum Stage {
    Conv { w: usize, b: usize },
    Pool,
    Flatten,
    Dense { w: usize, b: usize, relu: bool },
}

enum Cache {
    Conv { input: Tensor<f32>, out: Tensor<f32> },
    Pool { argmax: Vec<usize>, in_shape: Vec<usize> },
    Flatten { shape: Vec<usize> },
    Dense { input: Tensor<f32>, out: Option<Tensor<f32>> },
}

/// Per-sample prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f32>,
    pub label: usize,
    pub confidence: f32,
}

/// The classifier: architecture, class table and parameters.
#[derive(Debug, Clone)]
pub struct Network {
    arch: Architecture,
    classes: Vec<String>,
    params: ParamSet<f32>,
    stages: Vec<Stage>,
}

impl Network {
    /// He-initialized weights and zero biases, deterministic in `seed`.
    pub fn new(arch: Architecture, classes: Vec<String>, seed: &Seed) -> Result<Self, ClassifierError> {
        if classes.is_empty() {
            return Err(ClassifierError::InvalidConfig("no classes".into()));
        }
        let mut params = ParamSet::new();
        let (stages, shapes) = plan(&arch, classes.len());
        for (name, shape) in shapes {
            let value = if name.ends_with(".b") {
                Tensor::zeros(&shape)
            } else {
                he_init(&shape, seed.derive(&format!("init:{name}")).next_u64())
            };
            params.push(name, value);
        }
        Ok(Network {
            arch,
            classes,
            params,
            stages,
        })
    }

    /// Rebuilds a network around existing parameter values (checkpoint load).
    pub(crate) fn from_parts(
        arch: Architecture,
        classes: Vec<String>,
        values: Vec<(String, Tensor<f32>)>,
    ) -> Result<Self, ClassifierError> {
        let (stages, shapes) = plan(&arch, classes.len());
        if shapes.len() != values.len() {
            return Err(ClassifierError::Corrupt(format!(
                "{} parameters stored, architecture needs {}",
                values.len(),
                shapes.len()
            )));
        }
        let mut params = ParamSet::new();
        for ((name, shape), (got_name, value)) in shapes.into_iter().zip(values) {
            if name != got_name || shape != value.shape() {
                return Err(ClassifierError::Corrupt(format!(
                    "parameter {got_name} {:?} where {name} {shape:?} expected",
                    value.shape()
                )));
            }
            params.push(name, value);
        }
        Ok(Network {
            arch,
            classes,
            params,
            stages,
        })
    }

    /// Copy of the parameter values without optimizer state.
    pub fn snapshot(&self) -> Network {
        let values = self.params.params.iter().map(|p| (p.name.clone(), p.value.clone())).collect();
        Network::from_parts(self.arch.clone(), self.classes.clone(), values).expect("same layout")
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<f32> {
        &mut self.params
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Fails unless `data_classes` equals this model's class table.
    pub fn check_classes(&self, data_classes: &[String]) -> Result<(), ClassifierError> {
        if self.classes != data_classes {
            return Err(ClassifierError::ClassMismatch {
                model: self.classes.clone(),
                data: data_classes.to_vec(),
            });
        }
        Ok(())
    }

    fn forward(&self, x: &Tensor<f32>, keep: bool) -> Result<(Tensor<f32>, Vec<Cache>), ClassifierError> {
        if x.shape().len() != 4 || x.shape()[1..] != [IMAGE_SIDE, IMAGE_SIDE, 1] {
            return Err(TensorError::ShapeMismatch(format!("input batch {:?}, expected [N,64,64,1]", x.shape())).into());
        }
        let mut caches = Vec::new();
        let mut cur = x.clone();
        for stage in &self.stages {
            match *stage {
                Stage::Conv { w, b } => {
                    let out = relu_forward(&conv2d_forward(&cur, self.params.value(w), self.params.value(b))?);
                    let input = std::mem::replace(&mut cur, out);
                    if keep {
                        caches.push(Cache::Conv { input, out: cur.clone() });
                    }
                }
                Stage::Pool => {
                    let (out, argmax) = maxpool2_forward(&cur)?;
                    if keep {
                        caches.push(Cache::Pool {
                            argmax,
                            in_shape: cur.shape().to_vec(),
                        });
                    }
                    cur = out;
                }
                Stage::Flatten => {
                    let shape = cur.shape().to_vec();
                    let n = shape[0];
                    let width = shape[1..].iter().product();
                    cur = cur.reshape(vec![n, width])?;
                    if keep {
                        caches.push(Cache::Flatten { shape });
                    }
                }
                Stage::Dense { w, b, relu } => {
                    let mut out = dense_forward(&cur, self.params.value(w), self.params.value(b))?;
                    if relu {
                        out = relu_forward(&out);
                    }
                    let input = std::mem::replace(&mut cur, out);
                    if keep {
                        caches.push(Cache::Dense {
                            input,
                            out: relu.then(|| cur.clone()),
                        });
                    }
                }
            }
        }
        Ok((cur, caches))
    }

    fn backward(&mut self, caches: Vec<Cache>, grad_logits: Tensor<f32>) -> Result<(), ClassifierError> {
        let mut grad = grad_logits;
        let first_conv = self.stages.iter().position(|s| matches!(s, Stage::Conv { .. }));
        for (i, (stage, cache)) in self.stages.clone().iter().zip(caches).enumerate().rev() {
            match (*stage, cache) {
                (Stage::Conv { w, b }, Cache::Conv { input, out }) => {
                    let gz = relu_backward(&out, &grad)?;
                    let need_input = Some(i) != first_conv;
                    let g = conv2d_backward(&input, self.params.value(w), &gz, need_input)?;
                    self.params.set_grad(w, g.kernels)?;
                    self.params.set_grad(b, g.bias)?;
                    match g.input {
                        Some(gi) => grad = gi,
                        // Only parameter-free pools can precede the first convolution.
                        None => break,
                    }
                }
                (Stage::Pool, Cache::Pool { argmax, in_shape }) => {
                    grad = maxpool2_backward(&grad, &argmax, &in_shape)?;
                }
                (Stage::Flatten, Cache::Flatten { shape }) => {
                    grad = grad.reshape(shape)?;
                }
                (Stage::Dense { w, b, .. }, Cache::Dense { input, out }) => {
                    let gz = match out {
                        Some(out) => relu_backward(&out, &grad)?,
                        None => grad,
                    };
                    let g = dense_backward(&input, self.params.value(w), &gz)?;
                    self.params.set_grad(w, g.weights)?;
                    self.params.set_grad(b, g.bias)?;
                    grad = g.input;
                }
                _ => unreachable!("cache order follows stage order"),
            }
        }
        Ok(())
    }

    /// One optimizer step on a batch. Returns the mean loss and the number
    /// of correctly classified samples (before the update).
    pub fn train_step(
        &mut self,
        images: &Tensor<f32>,
        labels: &[usize],
        adam: &AdamConfig,
    ) -> Result<(f64, usize), ClassifierError> {
        let (logits, caches) = self.forward(images, true)?;
        let (loss, probs, grad) = softmax_xent(&logits, labels)?;
        let correct = count_correct(&probs, labels);
        self.backward(caches, grad)?;
        self.params.adam_step(adam)?;
        Ok((loss, correct))
    }

    /// Mean loss and predicted labels without updating anything.
    pub fn loss(&self, images: &Tensor<f32>, labels: &[usize]) -> Result<(f64, Vec<usize>), ClassifierError> {
        let (logits, _) = self.forward(images, false)?;
        let (loss, probs, _) = softmax_xent(&logits, labels)?;
        let k = probs.shape()[1];
        Ok((loss, probs.data().chunks_exact(k).map(argmax).collect()))
    }

    /// Class probabilities, `[N, K]`.
    pub fn probabilities(&self, images: &Tensor<f32>) -> Result<Tensor<f32>, ClassifierError> {
        let (logits, _) = self.forward(images, false)?;
        Ok(softmax(&logits)?)
    }

    pub fn predict(&self, images: &Tensor<f32>) -> Result<Vec<Prediction>, ClassifierError> {
        let probs = self.probabilities(images)?;
        let k = self.num_classes();
        Ok(probs
            .data()
            .chunks_exact(k)
            .map(|row| {
                let label = argmax(row);
                Prediction {
                    probabilities: row.to_vec(),
                    label,
                    confidence: row[label],
                }
            })
            .collect())
    }

    /// Predicts fragments in batches of `batch_size`.
    pub fn predict_fragments(&self, fragments: &[Fragment], batch_size: usize) -> Result<Vec<Prediction>, ClassifierError> {
        let mut out = Vec::with_capacity(fragments.len());
        for chunk in fragments.chunks(batch_size.max(1)) {
            out.extend(self.predict(&batch_tensor(chunk.iter().map(|f| f.data())))?);
        }
        Ok(out)
    }
}

/// Index of the largest value, first on ties.
pub(crate) fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn count_correct(probs: &Tensor<f32>, labels: &[usize]) -> usize {
    let k = probs.shape()[1];
    probs
        .data()
        .chunks_exact(k)
        .zip(labels)
        .filter(|(row, &l)| argmax(row) == l)
        .count()
}

type ParamShapes = Vec<(String, Vec<usize>)>;

fn plan(arch: &Architecture, k: usize) -> (Vec<Stage>, ParamShapes) {
    let mut stages = Vec::new();
    let mut shapes = Vec::new();
    let mut channels = 1;
    let mut width = 0;
    let mut flat = false;
    let mut add = |name: String, shape: Vec<usize>| {
        shapes.push((name, shape));
        shapes.len() - 1
    };
    for (i, l) in arch.layers.iter().enumerate() {
        match *l {
            LayerSpec::Conv(f) => {
                let w = add(format!("conv{i}.w"), vec![3, 3, channels, f]);
                let b = add(format!("conv{i}.b"), vec![f]);
                stages.push(Stage::Conv { w, b });
                channels = f;
            }
            LayerSpec::Pool => stages.push(Stage::Pool),
            LayerSpec::Dense(u) => {
                if !flat {
                    stages.push(Stage::Flatten);
                    width = arch.flatten_width();
                    flat = true;
                }
                let w = add(format!("dense{i}.w"), vec![width, u]);
                let b = add(format!("dense{i}.b"), vec![u]);
                stages.push(Stage::Dense { w, b, relu: true });
                width = u;
            }
        }
    }
    if !flat {
        stages.push(Stage::Flatten);
        width = arch.flatten_width();
    }
    let w = add("out.w".into(), vec![width, k]);
    let b = add("out.b".into(), vec![k]);
    stages.push(Stage::Dense { w, b, relu: false });
    (stages, shapes)
}
