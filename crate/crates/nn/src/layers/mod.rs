//! Layer implementations. Each layer caches what its backward pass needs
//! during a training-mode forward; `infer` is pure.

mod activation;
mod batchnorm;
mod conv;
mod dense;
mod dropout;
mod lstm;
mod pool;

pub use activation::{Flatten, Relu, Softmax, Tanh};
pub(crate) use activation::softmax_rows as softmax_probs;
pub use batchnorm::BatchNorm1d;
pub use conv::Conv1d;
pub use dense::Dense;
pub use dropout::Dropout;
pub use lstm::Lstm;
pub use pool::MaxPool1d;

use rand::Rng as _;

use crate::error::Result;
use crate::spec::LayerSpec;
use crate::tensor::Tensor;
use crate::Rng;

pub(crate) trait Module {
    /// Eval-mode forward.
    fn infer(&self, x: &Tensor) -> Result<Tensor>;
    /// Train-mode forward; caches activations.
    fn forward(&mut self, x: &Tensor, rng: &mut Rng) -> Result<Tensor>;
    /// Accumulates parameter gradients and returns the input gradient.
    fn backward(&mut self, grad: &Tensor) -> Result<Tensor>;
    fn params(&self) -> Vec<&Tensor> {
        Vec::new()
    }
    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        Vec::new()
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv1d(Conv1d),
    MaxPool1d(MaxPool1d),
    BatchNorm1d(BatchNorm1d),
    Dense(Dense),
    Relu(Relu),
    Tanh(Tanh),
    Softmax(Softmax),
    Dropout(Dropout),
    Flatten(Flatten),
    Lstm(Lstm),
}

macro_rules! dispatch {
    ($self:expr, $l:ident => $e:expr) => {
        match $self {
            Layer::Conv1d($l) => $e,
            Layer::MaxPool1d($l) => $e,
            Layer::BatchNorm1d($l) => $e,
            Layer::Dense($l) => $e,
            Layer::Relu($l) => $e,
            Layer::Tanh($l) => $e,
            Layer::Softmax($l) => $e,
            Layer::Dropout($l) => $e,
            Layer::Flatten($l) => $e,
            Layer::Lstm($l) => $e,
        }
    };
}

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
pub(crate) fn xavier_fill(t: &mut Tensor, fan_in: usize, fan_out: usize, rng: &mut Rng) {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in &mut t.data {
        *v = rng.gen_range(-bound..bound);
    }
}

impl Layer {
    /// Create a layer for a per-sample input shape, Xavier-initialized.
    pub fn from_spec(spec: &LayerSpec, input: &[usize], rng: &mut Rng) -> Result<Self> {
        spec.output_shape(input).map_err(crate::error::NnError::Shape)?;
        Ok(match *spec {
            LayerSpec::Conv1d {
                out_channels,
                kernel,
                stride,
                pad,
            } => Self::Conv1d(Conv1d::new(input[0], out_channels, kernel, stride, pad, rng)),
            LayerSpec::MaxPool1d { size } => Self::MaxPool1d(MaxPool1d::new(size)),
            LayerSpec::BatchNorm1d { eps, momentum } => Self::BatchNorm1d(BatchNorm1d::new(input[0], eps, momentum)),
            LayerSpec::Dense { out } => Self::Dense(Dense::new(input[0], out, rng)),
            LayerSpec::Relu => Self::Relu(Relu::default()),
            LayerSpec::Tanh => Self::Tanh(Tanh::default()),
            LayerSpec::Softmax => Self::Softmax(Softmax::default()),
            LayerSpec::Dropout { p } => Self::Dropout(Dropout::new(p)),
            LayerSpec::Flatten => Self::Flatten(Flatten::default()),
            LayerSpec::Lstm { hidden } => Self::Lstm(Lstm::new(input[0], hidden, rng)),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "Conv1D",
            Layer::MaxPool1d(_) => "MaxPool1D",
            Layer::BatchNorm1d(_) => "BatchNorm1D",
            Layer::Dense(_) => "Dense",
            Layer::Relu(_) => "ReLU",
            Layer::Tanh(_) => "Tanh",
            Layer::Softmax(_) => "Softmax",
            Layer::Dropout(_) => "Dropout",
            Layer::Flatten(_) => "Flatten",
            Layer::Lstm(_) => "LSTM",
        }
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        dispatch!(self, l => l.infer(x))
    }

    pub fn forward(&mut self, x: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        dispatch!(self, l => l.forward(x, rng))
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        dispatch!(self, l => l.backward(grad))
    }

    pub fn params(&self) -> Vec<&Tensor> {
        dispatch!(self, l => l.params())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        dispatch!(self, l => l.params_mut())
    }

    /// Non-learned state that must survive a checkpoint.
    pub fn buffers(&self) -> Vec<&Vec<f64>> {
        match self {
            Layer::BatchNorm1d(bn) => vec![&bn.running_mean, &bn.running_var],
            _ => Vec::new(),
        }
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        match self {
            Layer::BatchNorm1d(bn) => vec![&mut bn.running_mean, &mut bn.running_var],
            _ => Vec::new(),
        }
    }
}

pub(crate) fn expect_rank(x: &Tensor, rank: usize, what: &str) -> Result<()> {
    if x.shape.len() != rank {
        return crate::error::shape_err(format!("{what} expects rank-{rank} input, got {:?}", x.shape));
    }
    Ok(())
}
