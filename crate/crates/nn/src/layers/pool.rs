use super::{expect_rank, Module};
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

/// Non-overlapping max pooling (stride = size); a trailing remainder is
/// dropped.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pub size: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool1d {
    pub fn new(size: usize) -> Self {
        Self { size, cache: None }
    }

    fn pool(&self, x: &Tensor) -> Result<(Tensor, Vec<usize>)> {
        expect_rank(x, 3, "MaxPool1D")?;
        let (b, c, l) = (x.shape[0], x.shape[1], x.shape[2]);
        let lo = l / self.size;
        if lo == 0 {
            return shape_err(format!("MaxPool1D of {} on length {l}", self.size));
        }
        let mut y = Tensor::zeros(&[b, c, lo]);
        let mut argmax = vec![0; b * c * lo];
        for row in 0..b * c {
            for t in 0..lo {
                let start = row * l + t * self.size;
                let mut best = start;
                for i in start + 1..start + self.size {
                    if x.data[i] > x.data[best] {
                        best = i;
                    }
                }
                y.data[row * lo + t] = x.data[best];
                argmax[row * lo + t] = best;
            }
        }
        Ok((y, argmax))
    }
}

impl Module for MaxPool1d {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.pool(x)?.0)
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        let (y, argmax) = self.pool(x)?;
        self.cache = Some((x.shape.clone(), argmax));
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (shape, argmax) = self.cache.as_ref().ok_or(NnError::NoForwardCache)?;
        if grad.len() != argmax.len() {
            return shape_err(format!("MaxPool1D gradient shape {:?}", grad.shape));
        }
        let mut dx = Tensor::zeros(shape);
        for (&i, &g) in argmax.iter().zip(&grad.data) {
            dx.data[i] += g;
        }
        Ok(dx)
    }
}
