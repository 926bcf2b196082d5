//! OFDM symbol modulation with the frame's per-symbol cyclic prefix.
//!
//! Both transforms are scaled by `1/√N`, so modulate followed by demodulate
//! is the identity and energy is preserved.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{expect_len, PhyError, Result};
use crate::numerology::{symbol_cp_length, BandwidthProfile, SYMBOLS_PER_FRAME};
use crate::par::Execution;

/// FFT plans and subcarrier map for one bandwidth profile.
#[derive(Clone)]
pub struct OfdmModem {
    profile: BandwidthProfile,
    bins: Vec<usize>,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for OfdmModem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmModem").field("profile", &self.profile).finish()
    }
}

impl OfdmModem {
    pub fn new(profile: BandwidthProfile) -> Self {
        let mut planner = FftPlanner::new();
        OfdmModem {
            profile,
            bins: profile.data_bins(),
            inverse: planner.plan_fft_inverse(profile.fft_size),
            forward: planner.plan_fft_forward(profile.fft_size),
            scale: 1.0 / (profile.fft_size as f64).sqrt(),
        }
    }

    pub fn profile(&self) -> &BandwidthProfile {
        &self.profile
    }

    /// Time-domain symbol (CP then body) for one grid column.
    pub fn modulate(&self, column: &[Complex64], cp: usize) -> Result<Vec<Complex64>> {
        expect_len("ofdm column", self.profile.n_data_subcarriers, column.len())?;
        let n = self.profile.fft_size;
        let mut body = vec![Complex64::new(0.0, 0.0); n];
        for (&bin, &v) in self.bins.iter().zip(column) {
            body[bin] = v;
        }
        self.inverse.process(&mut body);
        let mut out = Vec::with_capacity(cp + n);
        out.extend(body[n - cp..].iter().map(|x| x * self.scale));
        out.extend(body.iter().map(|x| x * self.scale));
        Ok(out)
    }

    /// Strips the CP and returns the data subcarriers.
    pub fn demodulate(&self, samples: &[Complex64], cp: usize) -> Result<Vec<Complex64>> {
        let n = self.profile.fft_size;
        expect_len("ofdm symbol samples", cp + n, samples.len())?;
        let mut body = samples[cp..].to_vec();
        self.forward.process(&mut body);
        Ok(self.bins.iter().map(|&b| body[b] * self.scale).collect())
    }

    /// Modulates all 140 columns of a frame back to back.
    pub fn modulate_frame(&self, columns: &[Vec<Complex64>], exec: Execution) -> Result<Vec<Complex64>> {
        expect_len("frame columns", SYMBOLS_PER_FRAME, columns.len())?;
        let symbols = exec.map_range(0..SYMBOLS_PER_FRAME, |s| {
            self.modulate(&columns[s], self.profile.cp_of(s))
        });
        let mut out = Vec::with_capacity(self.profile.frame_sample_count());
        for s in symbols {
            out.extend(s?);
        }
        Ok(out)
    }

    /// Demodulates a frame-aligned block of samples into 140 columns.
    pub fn demodulate_frame(&self, samples: &[Complex64], exec: Execution) -> Result<Vec<Vec<Complex64>>> {
        expect_len("frame samples", self.profile.frame_sample_count(), samples.len())?;
        exec.map_range(0..SYMBOLS_PER_FRAME, |s| {
            let start = self.profile.symbol_offset(s);
            self.demodulate(&samples[start..start + self.profile.symbol_len(s)], self.profile.cp_of(s))
        })
        .into_iter()
        .collect()
    }
}

pub fn ofdm_modulate(
    column: &[Complex64],
    profile: &BandwidthProfile,
    symbol_in_subframe: usize,
) -> Result<Vec<Complex64>> {
    let cp = symbol_cp_length(profile, symbol_in_subframe)?;
    OfdmModem::new(*profile).modulate(column, cp)
}

pub fn ofdm_demodulate(
    samples: &[Complex64],
    profile: &BandwidthProfile,
    symbol_in_subframe: usize,
) -> Result<Vec<Complex64>> {
    let cp = symbol_cp_length(profile, symbol_in_subframe)?;
    if samples.len() != cp + profile.fft_size {
        return Err(PhyError::length("ofdm symbol samples", cp + profile.fft_size, samples.len()));
    }
    OfdmModem::new(*profile).demodulate(samples, cp)
}
