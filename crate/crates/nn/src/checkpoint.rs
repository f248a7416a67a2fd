//! Binary checkpoints: magic `PCGM`, u32 version, JSON model spec, parameter
//! and buffer blobs, and optional Adam state. All integers and floats are
//! little-endian.

use std::path::Path;

use crate::error::{NnError, Result};
use crate::model::{xavier_init, Model};
use crate::optim::Adam;
use crate::spec::ModelSpec;

const MAGIC: &[u8; 4] = b"PCGM";
const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_blob(out: &mut Vec<u8>, data: &[f64]) {
    put_u64(out, data.len() as u64);
    for &v in data {
        put_f64(out, v);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| NnError::Checkpoint("truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn blob(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| NnError::Checkpoint("blob too large".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn encode_checkpoint(model: &Model, optimizer: Option<&Adam>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    let spec = serde_json::to_vec(model.spec()).expect("spec serializes");
    put_u64(&mut out, spec.len() as u64);
    out.extend_from_slice(&spec);
    let params = model.params();
    let buffers = model.buffers();
    put_u32(&mut out, (params.len() + buffers.len()) as u32);
    for p in params {
        put_blob(&mut out, &p.data);
    }
    for b in buffers {
        put_blob(&mut out, b);
    }
    match optimizer {
        None => out.push(0),
        Some(adam) => {
            out.push(1);
            for v in [adam.lr, adam.beta1, adam.beta2, adam.eps] {
                put_f64(&mut out, v);
            }
            put_u64(&mut out, adam.step);
            put_u32(&mut out, adam.m.len() as u32);
            for (m, v) in adam.m.iter().zip(&adam.v) {
                put_blob(&mut out, m);
                put_blob(&mut out, v);
            }
        }
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(Model, Option<Adam>)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let spec_len = r.u64()? as usize;
    let spec: ModelSpec =
        serde_json::from_slice(r.take(spec_len)?).map_err(|e| NnError::Checkpoint(format!("spec: {e}")))?;
    let mut model = xavier_init(&spec, 0)?;
    let n = r.u32()? as usize;
    let n_params = model.params().len();
    if n != n_params + model.buffers().len() {
        return Err(NnError::Checkpoint(format!("{n} tensors do not match the spec")));
    }
    let mut blobs = Vec::with_capacity(n);
    for _ in 0..n {
        blobs.push(r.blob()?);
    }
    let (param_blobs, buffer_blobs) = blobs.split_at(n_params);
    for (p, blob) in model.params_mut().into_iter().zip(param_blobs) {
        if p.data.len() != blob.len() {
            return Err(NnError::Checkpoint("parameter size mismatch".into()));
        }
        p.data.copy_from_slice(blob);
    }
    for (b, blob) in model.buffers_mut().into_iter().zip(buffer_blobs) {
        if b.len() != blob.len() {
            return Err(NnError::Checkpoint("buffer size mismatch".into()));
        }
        b.copy_from_slice(blob);
    }
    let optimizer = match r.u8()? {
        0 => None,
        1 => {
            let mut adam = Adam::new(r.f64()?);
            adam.beta1 = r.f64()?;
            adam.beta2 = r.f64()?;
            adam.eps = r.f64()?;
            adam.step = r.u64()?;
            let k = r.u32()? as usize;
            for _ in 0..k {
                adam.m.push(r.blob()?);
                adam.v.push(r.blob()?);
            }
            Some(adam)
        }
        t => return Err(NnError::Checkpoint(format!("bad optimizer tag {t}"))),
    };
    if r.pos != bytes.len() {
        return Err(NnError::Checkpoint("trailing bytes".into()));
    }
    Ok((model, optimizer))
}

pub fn save_checkpoint(path: &Path, model: &Model, optimizer: Option<&Adam>) -> Result<()> {
    let io = |source| NnError::Io {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode_checkpoint(model, optimizer)).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, Option<Adam>)> {
    let bytes = std::fs::read(path).map_err(|source| NnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_checkpoint(&bytes)
}
