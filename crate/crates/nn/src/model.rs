use rand::SeedableRng;

use crate::error::{NnError, Result};
use crate::layers::Layer;
use crate::loss::{cross_entropy, softmax_cross_entropy_grad};
use crate::spec::ModelSpec;
use crate::tensor::Tensor;
use crate::Rng;

/// A layer stack with its parameters. Dropout masks draw from the model's
/// own RNG, so training is reproducible from the init seed.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    layers: Vec<Layer>,
    rng: Rng,
    last_output: Option<Tensor>,
}

/// Build a model with Xavier-uniform weights and zero biases.
pub fn xavier_init(spec: &ModelSpec, seed: u64) -> Result<Model> {
    let shapes = spec.shapes()?;
    let mut rng = Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(spec.layers.len());
    let mut input = spec.input.clone();
    for (ls, out) in spec.layers.iter().zip(shapes) {
        layers.push(Layer::from_spec(ls, &input, &mut rng)?);
        input = out;
    }
    Ok(Model {
        spec: spec.clone(),
        layers,
        rng,
        last_output: None,
    })
}

fn at_layer(index: usize, layer: &Layer) -> impl FnOnce(NnError) -> NnError + '_ {
    move |e| match e {
        NnError::Shape(message) => NnError::Layer {
            index,
            name: layer.name(),
            message,
        },
        other => other,
    }
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape.len() != self.spec.input.len() + 1 || x.shape[1..] != self.spec.input[..] {
            return Err(NnError::Layer {
                index: 0,
                name: self.layers[0].name(),
                message: format!("input shape {:?}, model expects (batch, {:?})", x.shape, self.spec.input),
            });
        }
        Ok(())
    }

    /// Eval-mode forward: no caching, no dropout, running batch-norm
    /// statistics. Safe to call concurrently on a shared model.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            cur = layer.infer(&cur).map_err(at_layer(i, layer))?;
        }
        Ok(cur)
    }

    pub fn forward(&mut self, x: &Tensor, train: bool) -> Result<Tensor> {
        if !train {
            return self.predict(x);
        }
        self.check_input(x)?;
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            cur = layer.forward(&cur, &mut self.rng).map_err(|e| match e {
                NnError::Shape(message) => NnError::Layer {
                    index: i,
                    name: layer.name(),
                    message,
                },
                other => other,
            })?;
        }
        self.last_output = Some(cur.clone());
        Ok(cur)
    }

    fn backward_from(&mut self, end: usize, grad: Tensor) -> Result<Tensor> {
        let mut cur = grad;
        for i in (0..end).rev() {
            let layer = &mut self.layers[i];
            cur = layer.backward(&cur).map_err(|e| match e {
                NnError::Shape(message) => NnError::Layer {
                    index: i,
                    name: layer.name(),
                    message,
                },
                other => other,
            })?;
        }
        Ok(cur)
    }

    /// Backpropagate a gradient w.r.t. the model output; returns the input
    /// gradient. Parameter gradients accumulate.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        if self.last_output.is_none() {
            return Err(NnError::NoForwardCache);
        }
        self.backward_from(self.layers.len(), grad_out.clone())
    }

    /// Cross-entropy of the last training forward against `labels`,
    /// backpropagated through the fused softmax (`p - onehot`). Requires a
    /// terminal Softmax.
    pub fn backward_cross_entropy(&mut self, labels: &[usize]) -> Result<f64> {
        let probs = self.last_output.as_ref().ok_or(NnError::NoForwardCache)?;
        if !matches!(self.layers.last(), Some(Layer::Softmax(_))) {
            return Err(NnError::InvalidSpec("cross-entropy backward needs a terminal Softmax".into()));
        }
        let loss = cross_entropy(probs, labels)?;
        let grad = softmax_cross_entropy_grad(probs, labels)?;
        let end = self.layers.len() - 1;
        self.backward_from(end, grad)?;
        Ok(loss)
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn buffers(&self) -> Vec<&Vec<f64>> {
        self.layers.iter().flat_map(|l| l.buffers()).collect()
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut Vec<f64>> {
        self.layers.iter_mut().flat_map(|l| l.buffers_mut()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.zero_grad());
    }

    /// Keep dropout masks fixed across forwards (gradient checking).
    pub fn freeze_dropout(&mut self, frozen: bool) {
        for l in &mut self.layers {
            if let Layer::Dropout(d) = l {
                d.freeze_mask(frozen);
            }
        }
    }
}
