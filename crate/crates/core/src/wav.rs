//! PCM WAV reading and writing.

use std::io::{Cursor, Read};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{CoreError, Result};

/// Decoded mono audio: samples scaled to `[-1, 1]` and the header sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedWav {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

pub fn read_wav_file(path: &Path) -> Result<DecodedWav> {
    let file = std::fs::File::open(path).map_err(|e| CoreError::io(path, e))?;
    decode(std::io::BufReader::new(file), path)
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<DecodedWav> {
    decode(Cursor::new(bytes), Path::new("<memory>"))
}

fn decode<R: Read>(reader: R, path: &Path) -> Result<DecodedWav> {
    let wav_err = |e: hound::Error| CoreError::Wav {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut reader = WavReader::new(reader).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;

    // Multi-channel files keep only the first channel.
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (format, bits) => {
            return Err(CoreError::Wav {
                path: path.to_path_buf(),
                reason: format!("unsupported sample format {format:?} with {bits} bits"),
            })
        }
    };
    Ok(DecodedWav {
        samples,
        sample_rate_hz: spec.sample_rate,
    })
}

/// Encode samples as mono 16-bit PCM, mapping `peak` to full scale.
///
/// `peak` should be at least the largest absolute sample; values are clamped
/// to the 16-bit range otherwise.
pub fn encode_pcm16(samples: &[f64], sample_rate_hz: u32, peak: f64) -> Vec<u8> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let scale = if peak > 0.0 { i16::MAX as f64 / peak } else { 0.0 };
    let mut cursor = Cursor::new(Vec::with_capacity(44 + samples.len() * 2));
    {
        let mut writer = WavWriter::new(&mut cursor, spec).expect("in-memory wav writer");
        for &s in samples {
            let v = (s * scale).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
            writer.write_sample(v).expect("in-memory write");
        }
        writer.finalize().expect("in-memory finalize");
    }
    cursor.into_inner()
}

/// Write samples in `[-1, 1]` as a 16-bit PCM file.
pub fn write_wav_file(path: &Path, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
    let bytes = encode_pcm16(samples, sample_rate_hz, 1.0);
    std::fs::write(path, bytes).map_err(|e| CoreError::io(path, e))
}

/// Write 32-bit float PCM, used by tests and the synthetic corpus generator.
pub fn write_wav_f32(path: &Path, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let to_err = |e: hound::Error| CoreError::Wav {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = WavWriter::create(path, spec).map_err(to_err)?;
    for &s in samples {
        writer.write_sample(s as f32).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}
