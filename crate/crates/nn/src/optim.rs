use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

/// Adam with bias correction. Moment buffers are created on the first step
/// in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Update every parameter from its gradient, then clear the gradients.
    pub fn step(&mut self, params: Vec<&mut Tensor>) {
        if self.m.len() != params.len() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for ((p, m), v) in params.into_iter().zip(&mut self.m).zip(&mut self.v) {
            let Some(grad) = p.grad.as_mut() else { continue };
            for i in 0..p.data.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p.data[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
                grad[i] = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Tensor::param(&[1]);
        p.data[0] = 0.5;
        p.grad = Some(vec![1.0]);
        let mut adam = Adam::new(1e-3);
        adam.step(vec![&mut p]);
        assert!((0.5 - p.data[0] - 1e-3).abs() < 1e-10);
        assert_eq!(p.grad.as_ref().unwrap()[0], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = Tensor::param(&[3]);
        p.data = vec![1.0, -2.0, 3.0];
        let mut adam = Adam::new(0.1);
        for _ in 0..5 {
            adam.step(vec![&mut p]);
        }
        assert_eq!(p.data, vec![1.0, -2.0, 3.0]);
    }
}
