//! Gray-mapped QPSK and 16-QAM with unit average energy, and max-log soft
//! demapping.
//!
//! QPSK maps `(b0, b1)` to `((1 − 2b0) + j(1 − 2b1)) / √2`. 16-QAM uses the
//! LTE labeling: `b0`/`b1` pick the sign of I/Q and `b2`/`b3` pick the inner
//! (±1) or outer (±3) level, all scaled by `1/√10`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PhyError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModScheme {
    #[serde(rename = "qpsk")]
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

impl ModScheme {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModScheme::Qpsk => 2,
            ModScheme::Qam16 => 4,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            ModScheme::Qpsk => 0,
            ModScheme::Qam16 => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            ModScheme::Qpsk
        } else {
            ModScheme::Qam16
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModScheme::Qpsk => "qpsk",
            ModScheme::Qam16 => "16qam",
        }
    }

    /// Every constellation point, indexed by its label read MSB first.
    pub fn points(self) -> Vec<Complex64> {
        let m = self.bits_per_symbol();
        (0..1usize << m)
            .map(|v| {
                let bits: Vec<u8> = (0..m).map(|i| ((v >> (m - 1 - i)) & 1) as u8).collect();
                map_one(self, &bits)
            })
            .collect()
    }
}

impl std::str::FromStr for ModScheme {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qpsk" => Ok(ModScheme::Qpsk),
            "16qam" | "qam16" | "16-qam" => Ok(ModScheme::Qam16),
            other => Err(PhyError::Parse(format!("unknown modulation {other:?}"))),
        }
    }
}

const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn qam16_scale() -> f64 {
    1.0 / 10f64.sqrt()
}

#[inline]
fn map_one(scheme: ModScheme, bits: &[u8]) -> Complex64 {
    let sign = |b: u8| 1.0 - 2.0 * (b & 1) as f64;
    match scheme {
        ModScheme::Qpsk => Complex64::new(sign(bits[0]), sign(bits[1])) * QPSK_AMP,
        ModScheme::Qam16 => {
            let level = |b: u8| 1.0 + 2.0 * (b & 1) as f64;
            Complex64::new(sign(bits[0]) * level(bits[2]), sign(bits[1]) * level(bits[3]))
                * qam16_scale()
        }
    }
}

pub fn map_symbols(bits: &[u8], scheme: ModScheme) -> Result<Vec<Complex64>> {
    let m = scheme.bits_per_symbol();
    if !bits.len().is_multiple_of(m) {
        return Err(PhyError::Invalid(format!(
            "{} bits is not a multiple of {m} bits per {} symbol",
            bits.len(),
            scheme.label()
        )));
    }
    Ok(bits.chunks_exact(m).map(|c| map_one(scheme, c)).collect())
}

/// Max-log LLRs of one PAM dimension with two bits: the sign bit and the
/// inner/outer level bit. Levels are ±a and ±3a.
#[inline]
fn pam4_llrs(y: f64, a: f64, inv_nv: f64) -> (f64, f64) {
    let d = |x: f64| (y - x) * (y - x);
    let (p1, p3, m1, m3) = (d(a), d(3.0 * a), d(-a), d(-3.0 * a));
    let sign_llr = (m1.min(m3) - p1.min(p3)) * inv_nv;
    let level_llr = (p3.min(m3) - p1.min(m1)) * inv_nv;
    (sign_llr, level_llr)
}

/// Appends the LLRs of one received symbol, given the complex noise variance.
#[inline]
pub fn demap_symbol_into(y: Complex64, scheme: ModScheme, noise_var: f64, out: &mut Vec<f64>) {
    let inv = 1.0 / noise_var;
    match scheme {
        ModScheme::Qpsk => {
            let k = 4.0 * QPSK_AMP * inv;
            out.push(k * y.re);
            out.push(k * y.im);
        }
        ModScheme::Qam16 => {
            let a = qam16_scale();
            let (si, li) = pam4_llrs(y.re, a, inv);
            let (sq, lq) = pam4_llrs(y.im, a, inv);
            out.extend_from_slice(&[si, sq, li, lq]);
        }
    }
}

/// Max-log LLRs (positive favours bit 0) for a symbol sequence.
pub fn demap_llrs(symbols: &[Complex64], scheme: ModScheme, noise_var: f64) -> Result<Vec<f64>> {
    if !(noise_var > 0.0) || !noise_var.is_finite() {
        return Err(PhyError::Invalid(format!("noise variance must be positive, got {noise_var}")));
    }
    let mut out = Vec::with_capacity(symbols.len() * scheme.bits_per_symbol());
    for &y in symbols {
        demap_symbol_into(y, scheme, noise_var, &mut out);
    }
    Ok(out)
}

/// Hard decisions from LLR signs.
pub fn hard_bits(llrs: &[f64]) -> Vec<u8> {
    llrs.iter().map(|&l| (l < 0.0) as u8).collect()
}
