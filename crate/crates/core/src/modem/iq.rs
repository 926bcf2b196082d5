//! Complex baseband sample buffers and their on-disk form: interleaved
//! little-endian `f32` pairs (I then Q), no header.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{PhyError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IqSamples {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
}

impl IqSamples {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        IqSamples {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            out.extend_from_slice(&(s.re as f32).to_le_bytes());
            out.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], sample_rate: f64) -> Result<Self> {
        if !bytes.len().is_multiple_of(8) {
            return Err(PhyError::Parse(format!(
                "IQ capture length {} is not a multiple of 8 bytes",
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Ok(IqSamples::new(samples, sample_rate))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>, sample_rate: f64) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?, sample_rate)
    }
}
