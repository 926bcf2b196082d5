//! 25-bit control records (DCI downlink, UCI uplink) and the control-channel
//! chain: CRC-8, 15 tail zeros, rate-1/2 convolutional code, QPSK.
//!
//! Fields are packed in table order, each MSB first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coding::conv::{decode_bits, encode_bits, CONV_INPUT_BITS, TAIL_BITS};
use crate::coding::crc::{crc8_append, crc8_check, CONTROL_CRC_BITS, CONTROL_INFO_BITS};
use crate::coding::CodeRate;
use crate::error::{expect_len, PhyError, Result};
use crate::modem::{map_symbols, ModScheme};
use crate::numerology::{Bandwidth, Direction};
use crate::signals::{UssId, CONTROL_DATA_LEN};

pub const MAX_FRAME_NUMBER: u16 = 1023;
pub const MAX_FRAMES_IN_TB: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dci {
    pub frame_number: u16,
    pub code_rate: CodeRate,
    pub modulation: ModScheme,
    /// Frames in the transport block minus one.
    pub frames_in_tb: u8,
    pub end_of_payload: bool,
    #[serde(with = "uss_serde")]
    pub uplink_ss_id: UssId,
    pub reserved: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uci {
    pub bandwidth: Bandwidth,
    pub frame_number: u16,
    pub code_rate: CodeRate,
    pub modulation: ModScheme,
    /// Frames in the transport block minus one.
    pub frames_in_tb: u8,
    pub end_of_payload: bool,
    pub reserved: u8,
}

mod uss_serde {
    use super::UssId;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(id: &UssId, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(id.value())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<UssId, D::Error> {
        UssId::new(u8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

struct BitWriter(Vec<u8>);

impl BitWriter {
    fn put(&mut self, value: u32, width: usize) {
        for i in (0..width).rev() {
            self.0.push(((value >> i) & 1) as u8);
        }
    }
}

struct BitReader<'a>(&'a [u8]);

impl BitReader<'_> {
    fn take(&mut self, width: usize) -> u32 {
        let (head, rest) = self.0.split_at(width);
        self.0 = rest;
        head.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as u32)
    }
}

fn check_field(what: &'static str, value: u32, max: u32, range: &'static str) -> Result<()> {
    if value > max {
        return Err(PhyError::OutOfRange {
            what,
            value: value as i64,
            range,
        });
    }
    Ok(())
}

pub fn pack_dci(d: &Dci) -> Result<Vec<u8>> {
    check_field("frame number", d.frame_number as u32, 1023, "0..1024")?;
    check_field("frames in transport block", d.frames_in_tb as u32, 15, "0..16")?;
    check_field("dci reserved", d.reserved as u32, 31, "0..32")?;
    let mut w = BitWriter(Vec::with_capacity(CONTROL_INFO_BITS));
    w.put(d.frame_number as u32, 10);
    w.put(d.code_rate.bit() as u32, 1);
    w.put(d.modulation.bit() as u32, 1);
    w.put(d.frames_in_tb as u32, 4);
    w.put(d.end_of_payload as u32, 1);
    w.put(d.uplink_ss_id.value() as u32, 3);
    w.put(d.reserved as u32, 5);
    Ok(w.0)
}

pub fn unpack_dci(bits: &[u8]) -> Result<Dci> {
    expect_len("dci bits", CONTROL_INFO_BITS, bits.len())?;
    let mut r = BitReader(bits);
    Ok(Dci {
        frame_number: r.take(10) as u16,
        code_rate: CodeRate::from_bit(r.take(1) as u8),
        modulation: ModScheme::from_bit(r.take(1) as u8),
        frames_in_tb: r.take(4) as u8,
        end_of_payload: r.take(1) == 1,
        uplink_ss_id: UssId::new(r.take(3) as u8)?,
        reserved: r.take(5) as u8,
    })
}

pub fn pack_uci(u: &Uci) -> Result<Vec<u8>> {
    check_field("frame number", u.frame_number as u32, 1023, "0..1024")?;
    check_field("frames in transport block", u.frames_in_tb as u32, 15, "0..16")?;
    check_field("uci reserved", u.reserved as u32, 127, "0..128")?;
    let mut w = BitWriter(Vec::with_capacity(CONTROL_INFO_BITS));
    w.put(u.bandwidth.bit() as u32, 1);
    w.put(u.frame_number as u32, 10);
    w.put(u.code_rate.bit() as u32, 1);
    w.put(u.modulation.bit() as u32, 1);
    w.put(u.frames_in_tb as u32, 4);
    w.put(u.end_of_payload as u32, 1);
    w.put(u.reserved as u32, 7);
    Ok(w.0)
}

pub fn unpack_uci(bits: &[u8]) -> Result<Uci> {
    expect_len("uci bits", CONTROL_INFO_BITS, bits.len())?;
    let mut r = BitReader(bits);
    Ok(Uci {
        bandwidth: Bandwidth::from_bit(r.take(1) as u8),
        frame_number: r.take(10) as u16,
        code_rate: CodeRate::from_bit(r.take(1) as u8),
        modulation: ModScheme::from_bit(r.take(1) as u8),
        frames_in_tb: r.take(4) as u8,
        end_of_payload: r.take(1) == 1,
        reserved: r.take(7) as u8,
    })
}

/// Either control record, tagged by direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ControlInfo {
    Dci(Dci),
    Uci(Uci),
}

impl ControlInfo {
    pub fn direction(&self) -> Direction {
        match self {
            ControlInfo::Dci(_) => Direction::Downlink,
            ControlInfo::Uci(_) => Direction::Uplink,
        }
    }

    pub fn pack(&self) -> Result<Vec<u8>> {
        match self {
            ControlInfo::Dci(d) => pack_dci(d),
            ControlInfo::Uci(u) => pack_uci(u),
        }
    }

    pub fn unpack(direction: Direction, bits: &[u8]) -> Result<Self> {
        match direction {
            Direction::Downlink => unpack_dci(bits).map(ControlInfo::Dci),
            Direction::Uplink => unpack_uci(bits).map(ControlInfo::Uci),
        }
    }

    pub fn modulation(&self) -> ModScheme {
        match self {
            ControlInfo::Dci(d) => d.modulation,
            ControlInfo::Uci(u) => u.modulation,
        }
    }

    pub fn code_rate(&self) -> CodeRate {
        match self {
            ControlInfo::Dci(d) => d.code_rate,
            ControlInfo::Uci(u) => u.code_rate,
        }
    }

    pub fn frame_number(&self) -> u16 {
        match self {
            ControlInfo::Dci(d) => d.frame_number,
            ControlInfo::Uci(u) => u.frame_number,
        }
    }

    pub fn frames_in_tb(&self) -> u8 {
        match self {
            ControlInfo::Dci(d) => d.frames_in_tb,
            ControlInfo::Uci(u) => u.frames_in_tb,
        }
    }

    pub fn end_of_payload(&self) -> bool {
        match self {
            ControlInfo::Dci(d) => d.end_of_payload,
            ControlInfo::Uci(u) => u.end_of_payload,
        }
    }
}

/// Intermediate blocks of the control chain, kept for fixtures and checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlChain {
    pub info: Vec<u8>,
    pub with_crc: Vec<u8>,
    pub with_tail: Vec<u8>,
    pub coded: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

pub fn control_chain(info25: &[u8]) -> Result<ControlChain> {
    let with_crc = crc8_append(info25)?;
    let mut with_tail = with_crc.clone();
    with_tail.resize(CONTROL_CRC_BITS + TAIL_BITS, 0);
    debug_assert_eq!(with_tail.len(), CONV_INPUT_BITS);
    let coded = encode_bits(&with_tail);
    let symbols = map_symbols(&coded, ModScheme::Qpsk)?;
    Ok(ControlChain {
        info: info25.to_vec(),
        with_crc,
        with_tail,
        coded,
        symbols,
    })
}

pub fn build_control_symbols(info25: &[u8]) -> Result<Vec<Complex64>> {
    Ok(control_chain(info25)?.symbols)
}

/// Viterbi-decodes 96 control LLRs; returns the 25 info bits and the CRC flag.
/// A nonzero tail also counts as a failure.
pub fn decode_control_llrs(llrs: &[f64]) -> Result<(Vec<u8>, bool)> {
    expect_len("control llrs", 2 * CONTROL_DATA_LEN, llrs.len())?;
    let (bits, _) = decode_bits(llrs);
    let ok = crc8_check(&bits[..CONTROL_CRC_BITS])?
        && bits[CONTROL_CRC_BITS..].iter().all(|&b| b == 0);
    Ok((bits[..CONTROL_INFO_BITS].to_vec(), ok))
}
