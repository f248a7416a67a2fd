use super::{expect_rank, xavier_fill, Module};
use crate::error::{shape_err, NnError, Result};
use crate::tensor::Tensor;
use crate::Rng;

/// Single-layer LSTM over `(batch, features, time)`; returns the last hidden
/// state `(batch, hidden)`. Gate order in the stacked weights is input,
/// forget, cell, output.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub features: usize,
    pub hidden: usize,
    /// `(4H, F)`
    pub w_x: Tensor,
    /// `(4H, H)`
    pub w_h: Tensor,
    /// `(4H)`
    pub bias: Tensor,
    cache: Option<Vec<SeqCache>>,
}

#[derive(Debug, Clone)]
struct SeqCache {
    /// `(T, F)` time-major copy of the input.
    xs: Vec<f64>,
    /// `(T, 4H)` activated gates.
    gates: Vec<f64>,
    /// `(T + 1, H)`, row 0 is the zero initial state.
    cs: Vec<f64>,
    hs: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Lstm {
    pub fn new(features: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut w_x = Tensor::param(&[4 * hidden, features]);
        let mut w_h = Tensor::param(&[4 * hidden, hidden]);
        xavier_fill(&mut w_x, features, 4 * hidden, rng);
        xavier_fill(&mut w_h, hidden, 4 * hidden, rng);
        Self {
            features,
            hidden,
            w_x,
            w_h,
            bias: Tensor::param(&[4 * hidden]),
            cache: None,
        }
    }

    fn dims(&self, x: &Tensor) -> Result<(usize, usize)> {
        expect_rank(x, 3, "LSTM")?;
        if x.shape[1] != self.features {
            return shape_err(format!("LSTM expects {} features, got {}", self.features, x.shape[1]));
        }
        if x.shape[2] == 0 {
            return shape_err("LSTM needs at least one time step");
        }
        Ok((x.shape[0], x.shape[2]))
    }

    fn run(&self, x: &Tensor, n: usize, steps: usize) -> SeqCache {
        let (f, h) = (self.features, self.hidden);
        let mut xs = vec![0.0; steps * f];
        for c in 0..f {
            let src = &x.data[(n * f + c) * steps..(n * f + c + 1) * steps];
            for (t, v) in src.iter().enumerate() {
                xs[t * f + c] = *v;
            }
        }
        let mut gates = vec![0.0; steps * 4 * h];
        let mut cs = vec![0.0; (steps + 1) * h];
        let mut hs = vec![0.0; (steps + 1) * h];
        for t in 0..steps {
            let xt = &xs[t * f..(t + 1) * f];
            let hprev = &hs[t * h..(t + 1) * h];
            let z = &mut gates[t * 4 * h..(t + 1) * 4 * h];
            for (r, zr) in z.iter_mut().enumerate() {
                let wx = &self.w_x.data[r * f..(r + 1) * f];
                let wh = &self.w_h.data[r * h..(r + 1) * h];
                *zr = self.bias.data[r]
                    + wx.iter().zip(xt).map(|(a, b)| a * b).sum::<f64>()
                    + wh.iter().zip(hprev).map(|(a, b)| a * b).sum::<f64>();
            }
            for j in 0..h {
                let i = sigmoid(z[j]);
                let fg = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                z[j] = i;
                z[h + j] = fg;
                z[2 * h + j] = g;
                z[3 * h + j] = o;
                let c = fg * cs[t * h + j] + i * g;
                cs[(t + 1) * h + j] = c;
                hs[(t + 1) * h + j] = o * c.tanh();
            }
        }
        SeqCache { xs, gates, cs, hs }
    }

    fn last_hidden(&self, seqs: &[SeqCache], steps: usize) -> Tensor {
        let h = self.hidden;
        let mut y = Tensor::zeros(&[seqs.len(), h]);
        for (n, s) in seqs.iter().enumerate() {
            y.data[n * h..(n + 1) * h].copy_from_slice(&s.hs[steps * h..(steps + 1) * h]);
        }
        y
    }
}

impl Module for Lstm {
    fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let (b, steps) = self.dims(x)?;
        let seqs: Vec<_> = (0..b).map(|n| self.run(x, n, steps)).collect();
        Ok(self.last_hidden(&seqs, steps))
    }

    fn forward(&mut self, x: &Tensor, _rng: &mut Rng) -> Result<Tensor> {
        let (b, steps) = self.dims(x)?;
        let seqs: Vec<_> = (0..b).map(|n| self.run(x, n, steps)).collect();
        let y = self.last_hidden(&seqs, steps);
        self.cache = Some(seqs);
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let seqs = self.cache.as_ref().ok_or(NnError::NoForwardCache)?;
        let (f, h) = (self.features, self.hidden);
        if grad.shape != [seqs.len(), h] {
            return shape_err(format!("LSTM gradient shape {:?}", grad.shape));
        }
        let steps = seqs[0].xs.len() / f;
        let mut dx = Tensor::zeros(&[seqs.len(), f, steps]);
        let dwx = self.w_x.grad.get_or_insert_with(|| vec![0.0; 4 * h * f]);
        let dwh = self.w_h.grad.get_or_insert_with(|| vec![0.0; 4 * h * h]);
        let db = self.bias.grad.get_or_insert_with(|| vec![0.0; 4 * h]);
        let mut dz = vec![0.0; 4 * h];
        for (n, s) in seqs.iter().enumerate() {
            let mut dh = grad.data[n * h..(n + 1) * h].to_vec();
            let mut dc = vec![0.0; h];
            for t in (0..steps).rev() {
                let gt = &s.gates[t * 4 * h..(t + 1) * 4 * h];
                for j in 0..h {
                    let (i, fg, g, o) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
                    let c = s.cs[(t + 1) * h + j];
                    let cprev = s.cs[t * h + j];
                    let tc = c.tanh();
                    dc[j] += dh[j] * o * (1.0 - tc * tc);
                    dz[j] = dc[j] * g * i * (1.0 - i);
                    dz[h + j] = dc[j] * cprev * fg * (1.0 - fg);
                    dz[2 * h + j] = dc[j] * i * (1.0 - g * g);
                    dz[3 * h + j] = dh[j] * tc * o * (1.0 - o);
                    dc[j] *= fg;
                }
                let xt = &s.xs[t * f..(t + 1) * f];
                let hprev = &s.hs[t * h..(t + 1) * h];
                dh.fill(0.0);
                for (r, &g) in dz.iter().enumerate() {
                    db[r] += g;
                    let wx = &self.w_x.data[r * f..(r + 1) * f];
                    let wh = &self.w_h.data[r * h..(r + 1) * h];
                    for k in 0..f {
                        dwx[r * f + k] += g * xt[k];
                        dx.data[(n * f + k) * steps + t] += g * wx[k];
                    }
                    for k in 0..h {
                        dwh[r * h + k] += g * hprev[k];
                        dh[k] += g * wh[k];
                    }
                }
            }
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Tensor> {
        vec![&self.w_x, &self.w_h, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.bias]
    }
}
