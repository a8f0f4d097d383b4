use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise non-linearity applied after a dense sub-layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            // not f64::max, which would turn NaN into 0
            Activation::Relu => {
                if x < 0.0 {
                    0.0
                } else {
                    x
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation `x` (0 at the ReLU kink).
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer `y = x W + b`, with `W` stored as (in, out).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` init for weights and bias.
    fn init(input: usize, output: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut sample = || rng.random_range(-bound..bound);
        Self {
            weight: Array2::from_shape_simple_fn((input, output), &mut sample),
            bias: Array1::from_shape_simple_fn(output, &mut sample),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }
}

/// Two dense sub-layers, each followed by its own activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub first: Dense,
    pub second: Dense,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
}

/// Shape and activation choices of a [`GinModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GinArchitecture {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_classes: usize,
    /// Applied after both sub-layers of every GIN MLP.
    #[serde(default)]
    pub activation: Activation,
    /// Applied after the classifier's hidden sub-layer (the logits are linear).
    #[serde(default)]
    pub classifier_activation: Activation,
}

impl GinArchitecture {
    pub fn new(input_dim: usize, num_classes: usize) -> Self {
        Self {
            input_dim,
            hidden_dim: 64,
            num_layers: 3,
            num_classes,
            activation: Activation::Relu,
            classifier_activation: Activation::Relu,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.hidden_dim == 0
            || self.num_layers == 0
            || self.num_classes == 0
        {
            return Err(Error::Architecture(format!(
                "degenerate architecture {self:?}"
            )));
        }
        Ok(())
    }
}

/// GIN classifier: `num_layers` GIN layers with mean aggregation, a mean
/// readout and a 2-layer MLP head producing one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct GinModel {
    pub architecture: GinArchitecture,
    pub layers: Vec<Mlp>,
    pub classifier: Mlp,
}

impl GinModel {
    /// Randomly initialised model, deterministic in `seed`.
    pub fn init(architecture: GinArchitecture, seed: u64) -> Result<Self> {
        architecture.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::build(architecture, |i, o| {
            Dense::init(i, o, &mut rng)
        }))
    }

    /// All-zero parameters; used as a gradient accumulator.
    pub fn zeros(architecture: GinArchitecture) -> Self {
        Self::build(architecture, Dense::zeros)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.architecture)
    }

    fn build(a: GinArchitecture, mut dense: impl FnMut(usize, usize) -> Dense) -> Self {
        let h = a.hidden_dim;
        let layers = (0..a.num_layers)
            .map(|l| {
                let input = if l == 0 { a.input_dim } else { h };
                Mlp {
                    first: dense(input, h),
                    second: dense(h, h),
                    hidden_activation: a.activation,
                    output_activation: a.activation,
                }
            })
            .collect();
        let classifier = Mlp {
            first: dense(h, h),
            second: dense(h, a.num_classes),
            hidden_activation: a.classifier_activation,
            output_activation: Activation::Identity,
        };
        Self {
            architecture: a,
            layers,
            classifier,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Width of `H^(l)`, `l = 0..=L`.
    pub fn state_dim(&self, l: usize) -> usize {
        if l == 0 {
            self.architecture.input_dim
        } else {
            self.architecture.hidden_dim
        }
    }

    /// Dense sub-layers in a fixed order: GIN layers first, classifier last.
    pub fn dense_layers(&self) -> Vec<&Dense> {
        self.layers
            .iter()
            .chain(std::iter::once(&self.classifier))
            .flat_map(|m| [&m.first, &m.second])
            .collect()
    }

    pub fn dense_layers_mut(&mut self) -> Vec<&mut Dense> {
        self.layers
            .iter_mut()
            .chain(std::iter::once(&mut self.classifier))
            .flat_map(|m| [&mut m.first, &mut m.second])
            .collect()
    }

    /// Parameter tensors as flat slices (weight, bias, weight, bias, ...).
    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.dense_layers()
            .into_iter()
            .flat_map(|d| {
                [
                    d.weight.as_slice().expect("standard layout"),
                    d.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.dense_layers_mut()
            .into_iter()
            .flat_map(|d| {
                let Dense { weight, bias } = d;
                [
                    weight.as_slice_mut().expect("standard layout"),
                    bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        let mut push = |prefix: String| {
            for sub in ["first", "second"] {
                for t in ["weight", "bias"] {
                    names.push(format!("{prefix}.{sub}.{t}"));
                }
            }
        };
        for l in 0..self.layers.len() {
            push(format!("layers.{l}"));
        }
        push("classifier".into());
        names
    }

    pub fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Adds `scale * other` to every parameter.
    pub fn add_scaled(&mut self, other: &GinModel, scale: f64) {
        for (dst, src) in self
            .param_slices_mut()
            .into_iter()
            .zip(other.param_slices())
        {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let tensors = self
            .param_names()
            .into_iter()
            .zip(self.dense_layers().into_iter().flat_map(|d| {
                [
                    (
                        vec![d.weight.nrows(), d.weight.ncols()],
                        d.weight.iter().copied().collect(),
                    ),
                    (vec![d.bias.len()], d.bias.to_vec()),
                ]
            }))
            .map(|(name, (shape, data))| TensorRecord { name, shape, data })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            architecture: self.architecture,
            tensors,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Architecture(format!(
                "unknown checkpoint format `{}`",
                ckpt.format
            )));
        }
        ckpt.architecture.validate()?;
        let mut model = Self::zeros(ckpt.architecture);
        let names = model.param_names();
        if ckpt.tensors.len() != names.len() {
            return Err(Error::Architecture(format!(
                "checkpoint has {} tensors, architecture needs {}",
                ckpt.tensors.len(),
                names.len()
            )));
        }
        let shapes: Vec<Vec<usize>> = model
            .dense_layers()
            .into_iter()
            .flat_map(|d| [vec![d.weight.nrows(), d.weight.ncols()], vec![d.bias.len()]])
            .collect();
        for (((slot, record), name), shape) in model
            .param_slices_mut()
            .into_iter()
            .zip(&ckpt.tensors)
            .zip(&names)
            .zip(&shapes)
        {
            if &record.name != name || &record.shape != shape || record.data.len() != slot.len() {
                return Err(Error::Architecture(format!(
                    "tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                    record.name, record.shape
                )));
            }
            if record.data.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric(format!(
                    "tensor `{name}` has non-finite values"
                )));
            }
            slot.copy_from_slice(&record.data);
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        Self::from_checkpoint(&ckpt)
    }
}

const CHECKPOINT_FORMAT: &str = "graphxq-gin/1";

/// Self-describing JSON checkpoint: architecture plus row-major tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub architecture: GinArchitecture,
    pub tensors: Vec<TensorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}
