use super::{expect_rank, Module};
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

fn check_grad(grad: &Tensor, shape: &[usize], what: &str) -> Result<()> {
    if grad.shape != shape {
        return shape_err(format!("{what} gradient shape {:?}, expected {shape:?}", grad.shape));
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct Relu {
    input: Option<Tensor>,
}

impl Module for Relu {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut y = x.clone();
        y.grad = None;
        y.data.iter_mut().for_each(|v| *v = v.max(0.0));
        Ok(y)
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        self.input = Some(x.clone());
        self.infer(x)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self.input.as_ref().ok_or(NnError::NoForwardCache)?;
        check_grad(grad, &x.shape, "ReLU")?;
        let data = grad.data.iter().zip(&x.data).map(|(g, v)| if *v > 0.0 { *g } else { 0.0 }).collect();
        Tensor::new(x.shape.clone(), data)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Tanh {
    output: Option<Tensor>,
}

impl Module for Tanh {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        Tensor::new(x.shape.clone(), x.data.iter().map(|v| v.tanh()).collect())
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.output = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let y = self.output.as_ref().ok_or(NnError::NoForwardCache)?;
        check_grad(grad, &y.shape, "Tanh")?;
        let data = grad.data.iter().zip(&y.data).map(|(g, t)| g * (1.0 - t * t)).collect();
        Tensor::new(y.shape.clone(), data)
    }
}

/// Row-wise softmax over `(batch, classes)` with max subtraction.
#[derive(Debug, Clone, Default)]
pub struct Softmax {
    output: Option<Tensor>,
}

pub(crate) fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    expect_rank(x, 2, "Softmax")?;
    let k = x.shape[1];
    let mut y = Tensor::zeros(&x.shape);
    for (src, dst) in x.data.chunks(k).zip(y.data.chunks_mut(k)) {
        let max = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (s - max).exp();
            sum += *d;
        }
        dst.iter_mut().for_each(|d| *d /= sum);
    }
    Ok(y)
}

impl Softmax {
    /// Output of the last training-mode forward.
    pub fn output(&self) -> Option<&Tensor> {
        self.output.as_ref()
    }
}

impl Module for Softmax {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        softmax_rows(x)
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        let y = softmax_rows(x)?;
        self.output = Some(y.clone());
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let y = self.output.as_ref().ok_or(NnError::NoForwardCache)?;
        check_grad(grad, &y.shape, "Softmax")?;
        let k = y.shape[1];
        let mut dx = Tensor::zeros(&y.shape);
        for ((p, g), d) in y.data.chunks(k).zip(grad.data.chunks(k)).zip(dx.data.chunks_mut(k)) {
            let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
            for i in 0..k {
                d[i] = p[i] * (g[i] - dot);
            }
        }
        Ok(dx)
    }
}

/// `(batch, ...)` to `(batch, prod(...))`.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    shape: Option<Vec<usize>>,
}

impl Module for Flatten {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let b = x.batch();
        let per = if b == 0 { 0 } else { x.len() / b };
        Tensor::new(vec![b, per], x.data.clone())
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        self.shape = Some(x.shape.clone());
        self.infer(x)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self.shape.as_ref().ok_or(NnError::NoForwardCache)?;
        Tensor::new(shape.clone(), grad.data.clone())
    }
}
