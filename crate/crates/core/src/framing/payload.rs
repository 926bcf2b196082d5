//! Payload conversion between 32-bit float samples and bits, and the
//! keystream cipher applied to the whole payload before transmission.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PhyError, Result};

/// IEEE-754 single-precision bit patterns, MSB first, concatenated.
pub fn re2bin(samples: &[f32]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(samples.len() * 32);
    for s in samples {
        let w = s.to_bits();
        bits.extend((0..32).rev().map(|i| ((w >> i) & 1) as u8));
    }
    bits
}

pub fn bin2re(bits: &[u8]) -> Result<Vec<f32>> {
    if !bits.len().is_multiple_of(32) {
        return Err(PhyError::Invalid(format!(
            "bit count {} is not a multiple of 32",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(32)
        .map(|c| f32::from_bits(c.iter().fold(0u32, |acc, &b| (acc << 1) | (b & 1) as u32)))
        .collect())
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect()
}

pub fn bits_to_bytes(bits: &[u8]) -> Result<Vec<u8>> {
    if !bits.len().is_multiple_of(8) {
        return Err(PhyError::Invalid(format!("bit count {} is not a multiple of 8", bits.len())));
    }
    Ok(bits
        .chunks_exact(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | (b & 1)))
        .collect())
}

/// 128-bit cipher key; written as 32 hex digits in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CipherKey(pub u128);

impl Serialize for CipherKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:032x}", self.0))
    }
}

impl<'de> Deserialize<'de> for CipherKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u128::from_str_radix(s.trim_start_matches("0x"), 16)
            .map(CipherKey)
            .map_err(serde::de::Error::custom)
    }
}

impl CipherKey {
    fn rng(self) -> ChaCha20Rng {
        let mut seed = [0u8; 32];
        seed[..16].copy_from_slice(&self.0.to_be_bytes());
        ChaCha20Rng::from_seed(seed)
    }

    /// First `n_bytes` keystream bytes.
    pub fn keystream(self, n_bytes: usize) -> Vec<u8> {
        let mut out = vec![0u8; n_bytes];
        self.rng().fill_bytes(&mut out);
        out
    }
}

/// XORs a bit stream with the key's keystream (MSB-first within each byte).
/// Applying it twice with the same key restores the input.
pub fn cipher_apply(key: CipherKey, stream: &[u8]) -> Vec<u8> {
    let ks = key.keystream(stream.len().div_ceil(8));
    stream
        .iter()
        .enumerate()
        .map(|(i, &b)| (b & 1) ^ ((ks[i / 8] >> (7 - i % 8)) & 1))
        .collect()
}

/// Same transform as `cipher_apply` on `re2bin(samples)`, done word-wise.
pub fn cipher_samples(key: CipherKey, samples: &[f32]) -> Vec<f32> {
    let ks = key.keystream(samples.len() * 4);
    samples
        .iter()
        .zip(ks.chunks_exact(4))
        .map(|(s, k)| f32::from_bits(s.to_bits() ^ u32::from_be_bytes([k[0], k[1], k[2], k[3]])))
        .collect()
}
