use super::{expect_rank, xavier_fill, Module};
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

/// `y = x W^T + b` with `W` of shape `(out, in)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(inputs: usize, outputs: usize, rng: &mut Rng) -> Self {
        let mut weight = Tensor::param(&[outputs, inputs]);
        xavier_fill(&mut weight, inputs, outputs, rng);
        Self {
            weight,
            bias: Tensor::param(&[outputs]),
            input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape[0]
    }
}

impl Module for Dense {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        expect_rank(x, 2, "Dense")?;
        let (n_in, n_out) = (self.inputs(), self.outputs());
        if x.shape[1] != n_in {
            return shape_err(format!("Dense expects {n_in} features, got {}", x.shape[1]));
        }
        let b = x.shape[0];
        let mut y = Tensor::zeros(&[b, n_out]);
        for n in 0..b {
            let xr = x.row(n);
            for o in 0..n_out {
                let w = &self.weight.data[o * n_in..(o + 1) * n_in];
                y.data[n * n_out + o] = self.bias.data[o] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(y)
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        let y = self.infer(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self.input.as_ref().ok_or(NnError::NoForwardCache)?;
        let (n_in, n_out) = (self.inputs(), self.outputs());
        let b = x.shape[0];
        if grad.shape != [b, n_out] {
            return shape_err(format!("Dense gradient shape {:?}", grad.shape));
        }
        let mut dx = Tensor::zeros(&x.shape);
        let dw = self.weight.grad.get_or_insert_with(|| vec![0.0; n_in * n_out]);
        for n in 0..b {
            let xr = &x.data[n * n_in..(n + 1) * n_in];
            let dxr = &mut dx.data[n * n_in..(n + 1) * n_in];
            for o in 0..n_out {
                let g = grad.data[n * n_out + o];
                if g == 0.0 {
                    continue;
                }
                let w = &self.weight.data[o * n_in..(o + 1) * n_in];
                let dwr = &mut dw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    dwr[i] += g * xr[i];
                    dxr[i] += g * w[i];
                }
            }
        }
        let db = self.bias.grad_mut();
        for n in 0..b {
            for o in 0..n_out {
                db[o] += grad.data[n * n_out + o];
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}
