use super::Module;
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

/// Per-channel batch normalization over `(batch, ch, len)` or
/// `(batch, ch)`. Training uses batch statistics (biased variance) and
/// updates running estimates with `momentum`; eval uses the running ones.
#[derive(Debug, Clone)]
pub struct BatchNorm1d {
    pub eps: f64,
    pub momentum: f64,
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    cache: Option<BnCache>,
}

#[derive(Debug, Clone)]
struct BnCache {
    shape: Vec<usize>,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

/// (batch, channels, length) view of a rank-2 or rank-3 tensor.
fn dims(x: &Tensor, channels: usize) -> Result<(usize, usize, usize)> {
    let (b, c, l) = match x.shape.as_slice() {
        [b, c] => (*b, *c, 1),
        [b, c, l] => (*b, *c, *l),
        s => return shape_err(format!("BatchNorm1D expects rank 2 or 3, got {s:?}")),
    };
    if c != channels {
        return shape_err(format!("BatchNorm1D expects {channels} channels, got {c}"));
    }
    Ok((b, c, l))
}

impl BatchNorm1d {
    pub fn new(channels: usize, eps: f64, momentum: f64) -> Self {
        let mut gamma = Tensor::param(&[channels]);
        gamma.data.fill(1.0);
        Self {
            eps,
            momentum,
            gamma,
            beta: Tensor::param(&[channels]),
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            cache: None,
        }
    }

    fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn normalize(&self, x: &Tensor, mean: &[f64], inv_std: &[f64]) -> Result<(Tensor, Vec<f64>)> {
        let (b, c, l) = dims(x, self.channels())?;
        let mut y = Tensor::zeros(&x.shape);
        let mut xhat = vec![0.0; x.len()];
        for n in 0..b {
            for ch in 0..c {
                let off = (n * c + ch) * l;
                for i in off..off + l {
                    let h = (x.data[i] - mean[ch]) * inv_std[ch];
                    xhat[i] = h;
                    y.data[i] = self.gamma.data[ch] * h + self.beta.data[ch];
                }
            }
        }
        Ok((y, xhat))
    }
}

impl Module for BatchNorm1d {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let inv_std: Vec<f64> = self.running_var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        Ok(self.normalize(x, &self.running_mean, &inv_std)?.0)
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        let (b, c, l) = dims(x, self.channels())?;
        let count = (b * l) as f64;
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for n in 0..b {
            for ch in 0..c {
                let off = (n * c + ch) * l;
                mean[ch] += x.data[off..off + l].iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        for n in 0..b {
            for ch in 0..c {
                let off = (n * c + ch) * l;
                var[ch] += x.data[off..off + l].iter().map(|v| (v - mean[ch]).powi(2)).sum::<f64>();
            }
        }
        var.iter_mut().for_each(|v| *v /= count);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + self.eps).sqrt()).collect();
        let (y, xhat) = self.normalize(x, &mean, &inv_std)?;

        let unbias = if count > 1.0 { count / (count - 1.0) } else { 1.0 };
        let m = self.momentum;
        for ch in 0..c {
            self.running_mean[ch] = (1.0 - m) * self.running_mean[ch] + m * mean[ch];
            self.running_var[ch] = (1.0 - m) * self.running_var[ch] + m * var[ch] * unbias;
        }
        self.cache = Some(BnCache {
            shape: x.shape.clone(),
            xhat,
            inv_std,
        });
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or(NnError::NoForwardCache)?;
        if grad.shape != cache.shape {
            return shape_err(format!("BatchNorm1D gradient shape {:?}", grad.shape));
        }
        let (b, c, l) = dims(grad, self.channels())?;
        let count = (b * l) as f64;
        let mut sum_dy = vec![0.0; c];
        let mut sum_dy_xhat = vec![0.0; c];
        for n in 0..b {
            for ch in 0..c {
                let off = (n * c + ch) * l;
                for i in off..off + l {
                    sum_dy[ch] += grad.data[i];
                    sum_dy_xhat[ch] += grad.data[i] * cache.xhat[i];
                }
            }
        }
        let mut dx = Tensor::zeros(&cache.shape);
        for n in 0..b {
            for ch in 0..c {
                let k = self.gamma.data[ch] * cache.inv_std[ch] / count;
                let off = (n * c + ch) * l;
                for i in off..off + l {
                    dx.data[i] = k * (count * grad.data[i] - sum_dy[ch] - cache.xhat[i] * sum_dy_xhat[ch]);
                }
            }
        }
        let dg = self.gamma.grad_mut();
        for ch in 0..c {
            dg[ch] += sum_dy_xhat[ch];
        }
        let db = self.beta.grad_mut();
        for ch in 0..c {
            db[ch] += sum_dy[ch];
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.gamma, &self.beta]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.gamma, &mut self.beta]
    }
}
