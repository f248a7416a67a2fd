use super::{expect_rank, xavier_fill, Module};
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

/// 1D convolution over `(batch, in_ch, len)` with zero padding.
/// Weight shape `(out_ch, in_ch, kernel)`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: Tensor,
    pub bias: Tensor,
    input: Option<Tensor>,
}

impl Conv1d {
    pub fn new(in_ch: usize, out_ch: usize, kernel: usize, stride: usize, pad: usize, rng: &mut Rng) -> Self {
        let mut weight = Tensor::param(&[out_ch, in_ch, kernel]);
        xavier_fill(&mut weight, in_ch * kernel, out_ch * kernel, rng);
        Self {
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
            weight,
            bias: Tensor::param(&[out_ch]),
            input: None,
        }
    }

    pub fn out_len(&self, len: usize) -> Option<usize> {
        (len + 2 * self.pad >= self.kernel).then(|| (len + 2 * self.pad - self.kernel) / self.stride + 1)
    }

    fn taps(&self, t: usize, len: usize) -> (usize, usize, isize) {
        taps(t, len, self.stride, self.pad, self.kernel)
    }

    fn check(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        expect_rank(x, 3, "Conv1D")?;
        let (b, c, l) = (x.shape[0], x.shape[1], x.shape[2]);
        if c != self.in_ch {
            return shape_err(format!("Conv1D expects {} channels, got {c}", self.in_ch));
        }
        let lo = self
            .out_len(l)
            .ok_or_else(|| NnError::Shape(format!("Conv1D input length {l} shorter than kernel")))?;
        Ok((b, l, lo))
    }
}

/// Kernel taps `[lo, hi)` that land inside the signal for output `t`, and
/// the (possibly negative) input index of tap 0.
fn taps(t: usize, len: usize, stride: usize, pad: usize, kernel: usize) -> (usize, usize, isize) {
    let start = (t * stride) as isize - pad as isize;
    let lo = (-start).max(0) as usize;
    let hi = ((len as isize - start).max(0) as usize).min(kernel);
    (lo, hi.max(lo), start)
}

impl Module for Conv1d {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let (b, l, lo) = self.check(x)?;
        let (ci, co, k) = (self.in_ch, self.out_ch, self.kernel);
        let mut y = Tensor::zeros(&[b, co, lo]);
        for n in 0..b {
            for o in 0..co {
                let yrow = &mut y.data[(n * co + o) * lo..(n * co + o + 1) * lo];
                yrow.fill(self.bias.data[o]);
                for c in 0..ci {
                    let xrow = &x.data[(n * ci + c) * l..(n * ci + c + 1) * l];
                    let w = &self.weight.data[(o * ci + c) * k..(o * ci + c + 1) * k];
                    for (t, yv) in yrow.iter_mut().enumerate() {
                        let (k0, k1, start) = self.taps(t, l);
                        if k1 == k0 {
                            continue;
                        }
                        let base = (start + k0 as isize) as usize;
                        let mut acc = 0.0;
                        for (wk, xv) in w[k0..k1].iter().zip(&xrow[base..base + (k1 - k0)]) {
                            acc += wk * xv;
                        }
                        *yv += acc;
                    }
                }
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
        let x = self.input.take().ok_or(NnError::NoForwardCache)?;
        let (b, l, lo) = self.check(&x)?;
        if grad.shape != [b, self.out_ch, lo] {
            return shape_err(format!("Conv1D gradient shape {:?}", grad.shape));
        }
        let (ci, co, k) = (self.in_ch, self.out_ch, self.kernel);
        let mut dx = Tensor::zeros(&x.shape);
        let (stride, pad) = (self.stride, self.pad);
        let dw = self.weight.grad.get_or_insert_with(|| vec![0.0; co * ci * k]);
        for n in 0..b {
            for o in 0..co {
                let g = &grad.data[(n * co + o) * lo..(n * co + o + 1) * lo];
                for c in 0..ci {
                    let xrow = &x.data[(n * ci + c) * l..(n * ci + c + 1) * l];
                    let dxrow = &mut dx.data[(n * ci + c) * l..(n * ci + c + 1) * l];
                    let widx = (o * ci + c) * k;
                    for (t, &gv) in g.iter().enumerate() {
                        if gv == 0.0 {
                            continue;
                        }
                        let (k0, k1, start) = taps(t, l, stride, pad, k);
                        if k1 == k0 {
                            continue;
                        }
                        let base = (start + k0 as isize) as usize;
                        for kk in k0..k1 {
                            let i = base + kk - k0;
                            dw[widx + kk] += gv * xrow[i];
                            dxrow[i] += gv * self.weight.data[widx + kk];
                        }
                    }
                }
            }
        }
        let db = self.bias.grad_mut();
        for n in 0..b {
            for o in 0..co {
                db[o] += grad.data[(n * co + o) * lo..(n * co + o + 1) * lo].iter().sum::<f64>();
            }
        }
        self.input = Some(x);
        Ok(dx)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}
