use rand::Rng as _;

use super::Module;
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

/// Inverted dropout: kept units are scaled by `1/(1-p)` at train time so
/// eval is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    mask: Option<Vec<f64>>,
    frozen: bool,
}

impl Dropout {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            mask: None,
            frozen: false,
        }
    }

    /// Reuse the current mask for later forwards (for gradient checks).
    pub fn freeze_mask(&mut self, frozen: bool) {
        self.frozen = frozen;
    }
}

impl Module for Dropout {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        Ok(x.clone())
    }

    fn forward(&mut self, x: &Tensor, rng: &mut Rng) -> Result<Tensor> {
        let reuse = self.frozen && self.mask.as_ref().is_some_and(|m| m.len() == x.len());
        if !reuse {
            let scale = 1.0 / (1.0 - self.p);
            self.mask = Some((0..x.len()).map(|_| if rng.gen::<f64>() < self.p { 0.0 } else { scale }).collect());
        }
        let mask = self.mask.as_ref().unwrap();
        Tensor::new(x.shape.clone(), x.data.iter().zip(mask).map(|(v, m)| v * m).collect())
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mask = self.mask.as_ref().ok_or(NnError::NoForwardCache)?;
        if grad.len() != mask.len() {
            return shape_err(format!("Dropout gradient shape {:?}", grad.shape));
        }
        Tensor::new(grad.shape.clone(), grad.data.iter().zip(mask).map(|(g, m)| g * m).collect())
    }
}
