//! Channel impairments: static multipath, integer timing offset, carrier
//! frequency offset and complex AWGN.
//!
//! Noise power is set against the post-multipath signal power, so a given
//! SNR means the same thing whatever the taps are.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PhyError, Result};
use crate::modem::IqSamples;
use crate::numerology::{Bandwidth, BandwidthProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    /// Delay in samples.
    pub delay: usize,
    /// Complex gain, serialized as `[re, im]`.
    pub gain: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Per-sample SNR in dB; `None` disables noise.
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub cfo_hz: f64,
    /// Zero samples inserted ahead of the signal.
    #[serde(default)]
    pub timing_offset: usize,
    #[serde(default = "identity_taps")]
    pub taps: Vec<Tap>,
    #[serde(default)]
    pub seed: u64,
}

fn identity_taps() -> Vec<Tap> {
    vec![Tap {
        delay: 0,
        gain: Complex64::new(1.0, 0.0),
    }]
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self::identity()
    }
}

impl ChannelConfig {
    pub fn identity() -> Self {
        ChannelConfig {
            snr_db: None,
            cfo_hz: 0.0,
            timing_offset: 0,
            taps: identity_taps(),
            seed: 0,
        }
    }

    pub fn awgn(snr_db: f64, seed: u64) -> Self {
        ChannelConfig {
            snr_db: Some(snr_db),
            seed,
            ..Self::identity()
        }
    }

    fn is_identity(&self) -> bool {
        self.snr_db.is_none()
            && self.cfo_hz == 0.0
            && self.timing_offset == 0
            && self.taps == identity_taps()
    }

    /// Checks the tap list against the profile's short cyclic prefix.
    pub fn validate(&self, profile: &BandwidthProfile) -> Result<()> {
        if self.taps.is_empty() {
            return Err(PhyError::Invalid("channel needs at least one tap".into()));
        }
        let mut delays: Vec<usize> = self.taps.iter().map(|t| t.delay).collect();
        delays.sort_unstable();
        if delays.windows(2).any(|w| w[0] == w[1]) {
            return Err(PhyError::Invalid("tap delays must be unique".into()));
        }
        if let Some(&max) = delays.last() {
            if max >= profile.cp_short {
                return Err(PhyError::OutOfRange {
                    what: "tap delay",
                    value: max as i64,
                    range: "0..cp_short",
                });
            }
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(PhyError::Invalid("snr_db is NaN".into()));
            }
        }
        if !self.cfo_hz.is_finite() {
            return Err(PhyError::Invalid("cfo_hz must be finite".into()));
        }
        Ok(())
    }
}

/// Two independent standard normal draws (Box-Muller).
pub fn gaussian_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    // 1 - u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Circularly-symmetric complex Gaussian with `E|n|² = variance`.
pub fn complex_noise<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let (a, b) = gaussian_pair(rng);
    Complex64::new(a, b) * (variance / 2.0).sqrt()
}

fn profile_for_rate(sample_rate: f64) -> Result<BandwidthProfile> {
    [Bandwidth::Bw1p4, Bandwidth::Bw3]
        .into_iter()
        .map(Bandwidth::profile)
        .find(|p| p.sampling_rate as f64 == sample_rate)
        .ok_or_else(|| PhyError::Invalid(format!("no bandwidth profile runs at {sample_rate} Hz")))
}

/// Multiplies sample `n` by `exp(j2π·cfo·n/fs)`.
pub fn rotate(samples: &mut [Complex64], cfo_hz: f64, sample_rate: f64) {
    if cfo_hz == 0.0 {
        return;
    }
    let w = 2.0 * PI * cfo_hz / sample_rate;
    for (n, s) in samples.iter_mut().enumerate() {
        *s *= Complex64::from_polar(1.0, w * n as f64);
    }
}

/// Output is `timing_offset` zeros followed by the full convolution with the
/// taps (so `max_delay` samples longer than the input), frequency shifted and
/// with noise added to every sample.
pub fn apply_channel(tx: &IqSamples, cfg: &ChannelConfig) -> Result<IqSamples> {
    let profile = profile_for_rate(tx.sample_rate)?;
    cfg.validate(&profile)?;
    if cfg.is_identity() {
        return Ok(tx.clone());
    }
    let max_delay = cfg.taps.iter().map(|t| t.delay).max().unwrap_or(0);
    let body_len = tx.len() + max_delay;
    let mut out = vec![Complex64::new(0.0, 0.0); cfg.timing_offset + body_len];
    {
        let body = &mut out[cfg.timing_offset..];
        for tap in &cfg.taps {
            for (i, &x) in tx.samples.iter().enumerate() {
                body[i + tap.delay] += tap.gain * x;
            }
        }
    }
    rotate(&mut out, cfg.cfo_hz, tx.sample_rate);
    if let Some(snr_db) = cfg.snr_db {
        let body = &out[cfg.timing_offset..];
        let power = if body.is_empty() {
            0.0
        } else {
            body.iter().map(|x| x.norm_sqr()).sum::<f64>() / body.len() as f64
        };
        let variance = power / 10f64.powf(snr_db / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for s in out.iter_mut() {
            *s += complex_noise(&mut rng, variance);
        }
    }
    Ok(IqSamples::new(out, tx.sample_rate))
}
