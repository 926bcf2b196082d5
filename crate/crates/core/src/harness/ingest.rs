//! Reading payload samples from WAV or raw float files.

use std::path::Path;
use std::str::FromStr;

use crate::config::{PayloadSource, SessionConfig};
use crate::error::{PhyError, Result};
use crate::link::synthetic_audio;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadFormat {
    Wav,
    RawF32,
}

impl FromStr for PayloadFormat {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wav" => Ok(PayloadFormat::Wav),
            "raw-f32" | "f32" => Ok(PayloadFormat::RawF32),
            other => Err(PhyError::Parse(format!("unknown payload format {other:?}"))),
        }
    }
}

pub fn ingest_payload(path: impl AsRef<Path>, format: PayloadFormat) -> Result<Vec<f32>> {
    match format {
        PayloadFormat::Wav => read_wav(path),
        PayloadFormat::RawF32 => read_raw_f32(path),
    }
}

/// PCM-16 mono only; samples are scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Vec<f32>> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(PhyError::UnsupportedWav(format!("{} channels, need mono", spec.channels)));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(PhyError::UnsupportedWav(format!(
            "{:?} at {} bits, need 16-bit PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    reader
        .into_samples::<i16>()
        .map(|s| Ok(s? as f32 / 32768.0))
        .collect()
}

pub fn write_wav(path: impl AsRef<Path>, samples: &[i16], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec)?;
    for &s in samples {
        w.write_sample(s)?;
    }
    w.finalize()?;
    Ok(())
}

/// Little-endian 32-bit floats, no header.
pub fn read_raw_f32(path: impl AsRef<Path>) -> Result<Vec<f32>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(PhyError::Invalid(format!("raw f32 file of {} bytes", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_raw_f32(path: impl AsRef<Path>, samples: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Payload samples named by the session's payload source.
pub fn load_payload(cfg: &SessionConfig) -> Result<Vec<f32>> {
    let samples = match &cfg.payload {
        PayloadSource::Synthetic { samples } => synthetic_audio(*samples, cfg.seed),
        PayloadSource::Wav { path } => read_wav(path)?,
        PayloadSource::RawF32 { path } => read_raw_f32(path)?,
    };
    if samples.is_empty() {
        return Err(PhyError::Invalid("empty payload".into()));
    }
    Ok(samples)
}

/// Side-stream bytes, empty unless the session names a file.
pub fn load_aux(cfg: &SessionConfig) -> Result<Vec<u8>> {
    match &cfg.aux_path {
        Some(p) => Ok(std::fs::read(p)?),
        None => Ok(Vec::new()),
    }
}
