//! CRC-8 with generator g(D) = D^8 + D^7 + D^4 + D^3 + D + 1.
//!
//! Register starts at zero, bits are processed MSB first, no reflection and
//! no final XOR. The parity of a message m is the remainder of m(D)·D^8
//! modulo g(D).

use crate::error::{expect_len, Result};

/// g(D) without the leading D^8 term.
pub const CRC8_POLY: u8 = 0x9B;
pub const CRC_BITS: usize = 8;
pub const CONTROL_INFO_BITS: usize = 25;
pub const CONTROL_CRC_BITS: usize = CONTROL_INFO_BITS + CRC_BITS;

const TABLE: [u8; 256] = build_table();

const fn build_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u8;
        let mut b = 0;
        while b < 8 {
            crc = if crc & 0x80 != 0 {
                (crc << 1) ^ CRC8_POLY
            } else {
                crc << 1
            };
            b += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// CRC-8 remainder of an arbitrary-length bit string (one bit per byte).
///
/// Leading zeros do not change the remainder when the register starts at
/// zero, so the input is left-padded to a byte boundary and run through the
/// byte table.
pub fn crc8(bits: &[u8]) -> u8 {
    let pad = (8 - bits.len() % 8) % 8;
    let mut crc = 0u8;
    let mut byte = 0u8;
    let mut filled = pad;
    for &b in bits {
        byte = (byte << 1) | (b & 1);
        filled += 1;
        if filled == 8 {
            crc = TABLE[(crc ^ byte) as usize];
            byte = 0;
            filled = 0;
        }
    }
    crc
}

fn parity_bits(crc: u8) -> impl Iterator<Item = u8> {
    (0..CRC_BITS).rev().map(move |i| (crc >> i) & 1)
}

/// Appends the 8 parity bits to a 25-bit control record.
pub fn crc8_append(msg: &[u8]) -> Result<Vec<u8>> {
    expect_len("crc8_append input", CONTROL_INFO_BITS, msg.len())?;
    let mut out = Vec::with_capacity(CONTROL_CRC_BITS);
    out.extend_from_slice(msg);
    out.extend(parity_bits(crc8(msg)));
    Ok(out)
}

/// True when a 33-bit codeword has zero remainder.
pub fn crc8_check(codeword: &[u8]) -> Result<bool> {
    expect_len("crc8_check input", CONTROL_CRC_BITS, codeword.len())?;
    Ok(crc8(codeword) == 0)
}
