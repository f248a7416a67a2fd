//! Central finite-difference gradient checks.

use rand::{Rng as _, SeedableRng};

use crate::error::Result;
use crate::layers::Layer;
use crate::loss::{cross_entropy, softmax_cross_entropy_grad};
use crate::tensor::Tensor;
use crate::Rng;

/// Finite-difference step.
pub const STEP: f64 = 1e-4;

/// Errors below this magnitude are treated as absolute rather than relative.
const FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub input_error: f64,
    pub param_error: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn max_error(&self) -> f64 {
        self.input_error.max(self.param_error)
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FLOOR)
}

fn projected(layer: &mut Layer, x: &Tensor, r: &[f64]) -> Result<f64> {
    let mut rng = Rng::seed_from_u64(0);
    let y = layer.forward(x, &mut rng)?;
    Ok(y.data.iter().zip(r).map(|(a, b)| a * b).sum())
}

/// Compare analytic and central-difference gradients of `sum(r * layer(x))`
/// for a random projection `r`, w.r.t. the input and every parameter.
/// Dropout masks are frozen after the first forward.
pub fn grad_check(layer: &mut Layer, input: &Tensor, seed: u64) -> Result<GradCheckReport> {
    if let Layer::Dropout(d) = layer {
        d.freeze_mask(true);
    }
    let mut rng = Rng::seed_from_u64(seed);
    let y = layer.forward(input, &mut rng)?;
    let r: Vec<f64> = (0..y.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for p in layer.params_mut() {
        p.zero_grad();
    }
    layer.forward(input, &mut rng)?;
    let dx = layer.backward(&Tensor::new(y.shape.clone(), r.clone())?)?;
    let analytic_params: Vec<Vec<f64>> = layer
        .params()
        .iter()
        .map(|p| p.grad.clone().unwrap_or_else(|| vec![0.0; p.len()]))
        .collect();

    let mut report = GradCheckReport {
        input_error: 0.0,
        param_error: 0.0,
        checked: 0,
    };
    let mut x = input.clone();
    for i in 0..x.len() {
        let orig = x.data[i];
        x.data[i] = orig + STEP;
        let plus = projected(layer, &x, &r)?;
        x.data[i] = orig - STEP;
        let minus = projected(layer, &x, &r)?;
        x.data[i] = orig;
        let numeric = (plus - minus) / (2.0 * STEP);
        report.input_error = report.input_error.max(relative_error(dx.data[i], numeric));
        report.checked += 1;
    }
    for (pi, analytic) in analytic_params.iter().enumerate() {
        for j in 0..analytic.len() {
            let orig = layer.params()[pi].data[j];
            layer.params_mut()[pi].data[j] = orig + STEP;
            let plus = projected(layer, input, &r)?;
            layer.params_mut()[pi].data[j] = orig - STEP;
            let minus = projected(layer, input, &r)?;
            layer.params_mut()[pi].data[j] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            report.param_error = report.param_error.max(relative_error(analytic[j], numeric));
            report.checked += 1;
        }
    }
    Ok(report)
}

fn softmax_ce(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let probs = crate::layers::softmax_probs(logits)?;
    cross_entropy(&probs, labels)
}

/// Check the fused softmax + cross-entropy gradient `(p - onehot)/batch`
/// against finite differences of the loss w.r.t. the logits.
pub fn grad_check_softmax_ce(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let probs = crate::layers::softmax_probs(logits)?;
    let analytic = softmax_cross_entropy_grad(&probs, labels)?;
    let mut x = logits.clone();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x.data[i];
        x.data[i] = orig + STEP;
        let plus = softmax_ce(&x, labels)?;
        x.data[i] = orig - STEP;
        let minus = softmax_ce(&x, labels)?;
        x.data[i] = orig;
        worst = worst.max(relative_error(analytic.data[i], (plus - minus) / (2.0 * STEP)));
    }
    Ok(worst)
}

/// Uniform random tensor in `[-1, 1)`.
pub fn random_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = Rng::seed_from_u64(seed);
    let mut t = Tensor::zeros(shape);
    t.data.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    t
}
