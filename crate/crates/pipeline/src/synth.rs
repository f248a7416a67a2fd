//! Deterministic synthetic 3-class dataset in the 2022 directory layout.
//!
//! * Absent: steady tones.
//! * Present: the same tones plus a 300-450 Hz component under a slow
//!   amplitude envelope.
//! * Unknown: white-noise bursts.
//!
//! Every recording carries light background noise.

use std::f64::consts::PI;
use std::path::Path;

use pcg_core::wav::write_wav_file;
use pcg_core::{ClassLabel, Location};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub patients: usize,
    pub locations: Vec<Location>,
    pub seconds: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
}

impl Default for ToyConfig {
    /// 100 patients with two 12 s recordings: 600 four-second segments.
    fn default() -> Self {
        Self {
            patients: 100,
            locations: vec![Location::AV, Location::MV],
            seconds: 12.0,
            sample_rate_hz: 4000,
            seed: 2022,
        }
    }
}

/// Class of the `i`-th synthetic patient.
pub fn toy_label(i: usize) -> ClassLabel {
    [ClassLabel::Absent, ClassLabel::Present, ClassLabel::Unknown][i % 3]
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// One recording of `label`.
pub fn toy_signal(label: ClassLabel, n: usize, fs: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n).map(|_| 0.03 * gaussian(rng)).collect();
    match label {
        ClassLabel::Absent | ClassLabel::Present => {
            let f = rng.gen_range(60.0..250.0);
            let phase = rng.gen_range(0.0..2.0 * PI);
            let fh = rng.gen_range(300.0..450.0);
            let fm = rng.gen_range(1.5..3.0);
            let mphase = rng.gen_range(0.0..2.0 * PI);
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 / fs;
                *v += 0.5 * (2.0 * PI * f * t + phase).sin();
                if label == ClassLabel::Present {
                    let env = 0.5 - 0.5 * (2.0 * PI * fm * t + mphase).cos();
                    *v += 0.3 * env * (2.0 * PI * fh * t).sin();
                }
            }
        }
        ClassLabel::Unknown => {
            let mut i = 0;
            while i < n {
                let gap = (rng.gen_range(0.05..0.3) * fs) as usize;
                let burst = (rng.gen_range(0.05..0.2) * fs) as usize;
                i += gap;
                for v in x.iter_mut().skip(i).take(burst) {
                    *v += 0.3 * gaussian(rng);
                }
                i += burst;
            }
        }
        other => unreachable!("toy data has no {other} class"),
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.99 {
        x.iter_mut().for_each(|v| *v *= 0.99 / peak);
    }
    x
}

/// Write the dataset under `root/training_data` and return the number of
/// recordings.
pub fn generate_toy_dataset(root: &Path, cfg: &ToyConfig) -> Result<usize> {
    let dir = root.join("training_data");
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let n = (cfg.seconds * cfg.sample_rate_hz as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut written = 0;
    for p in 0..cfg.patients {
        let pid = format!("{}", 10000 + p);
        let label = toy_label(p);
        let mut text = format!("{pid} {} {}\n", cfg.locations.len(), cfg.sample_rate_hz);
        for loc in &cfg.locations {
            let stem = format!("{pid}_{}", loc.as_str());
            text.push_str(&format!("{} {stem}.hea {stem}.wav {stem}.tsv\n", loc.as_str()));
            let x = toy_signal(label, n, cfg.sample_rate_hz as f64, &mut rng);
            write_wav_file(&dir.join(format!("{stem}.wav")), &x, cfg.sample_rate_hz)?;
            written += 1;
        }
        let murmur_locations = match label {
            ClassLabel::Present => cfg.locations.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("+"),
            _ => "nan".to_string(),
        };
        text.push_str(&format!("#Age: Child\n#Murmur: {label}\n#Murmur locations: {murmur_locations}\n"));
        let path = dir.join(format!("{pid}.txt"));
        std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    }
    Ok(written)
}
