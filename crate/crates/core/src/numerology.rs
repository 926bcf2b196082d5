//! Frame geometry for the two supported channel bandwidths.
//!
//! A frame lasts 10 ms and holds 10 subframes of two 7-symbol slots each, so
//! 140 OFDM symbols in total. Subcarrier spacing is 15 kHz for every profile.
//! Symbols 0 and 7 of each subframe carry the long cyclic prefix.

use serde::{Deserialize, Serialize};

use crate::error::{PhyError, Result};

pub const SUBFRAMES_PER_FRAME: usize = 10;
pub const SLOTS_PER_SUBFRAME: usize = 2;
pub const SYMBOLS_PER_SLOT: usize = 7;
pub const SYMBOLS_PER_SUBFRAME: usize = SLOTS_PER_SUBFRAME * SYMBOLS_PER_SLOT;
pub const SYMBOLS_PER_FRAME: usize = SUBFRAMES_PER_FRAME * SYMBOLS_PER_SUBFRAME;
pub const SUBCARRIER_SPACING_HZ: f64 = 15_000.0;

/// Channel bandwidth option. The downlink always runs at 1.4 MHz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bandwidth {
    #[serde(rename = "1.4")]
    Bw1p4,
    #[serde(rename = "3")]
    Bw3,
}

impl Bandwidth {
    pub fn profile(self) -> BandwidthProfile {
        profile_for(self)
    }

    /// Control-field encoding: 0 for 1.4 MHz, 1 for 3 MHz.
    pub fn bit(self) -> u8 {
        match self {
            Bandwidth::Bw1p4 => 0,
            Bandwidth::Bw3 => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Bandwidth::Bw1p4
        } else {
            Bandwidth::Bw3
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Bandwidth::Bw1p4 => "1.4",
            Bandwidth::Bw3 => "3",
        }
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1.4" | "1.4MHz" | "1p4" => Ok(Bandwidth::Bw1p4),
            "3" | "3MHz" | "3.0" => Ok(Bandwidth::Bw3),
            other => Err(PhyError::Parse(format!("unknown bandwidth {other:?}"))),
        }
    }
}

/// Link direction: cloud to hearing aid (downlink) or back (uplink).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "dl")]
    Downlink,
    #[serde(rename = "ul")]
    Uplink,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Downlink => "dl",
            Direction::Uplink => "ul",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dl" | "downlink" => Ok(Direction::Downlink),
            "ul" | "uplink" => Ok(Direction::Uplink),
            other => Err(PhyError::Parse(format!("unknown direction {other:?}"))),
        }
    }
}

/// Numerology constants for one bandwidth option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BandwidthProfile {
    pub bandwidth: Bandwidth,
    /// Samples per second.
    pub sampling_rate: u32,
    pub fft_size: usize,
    pub n_data_subcarriers: usize,
    pub n_null_subcarriers: usize,
    /// Cyclic prefix of symbols 0 and 7 of each subframe, in samples.
    pub cp_long: usize,
    /// Cyclic prefix of every other symbol, in samples.
    pub cp_short: usize,
}

pub fn profile_for(bw: Bandwidth) -> BandwidthProfile {
    match bw {
        Bandwidth::Bw1p4 => BandwidthProfile {
            bandwidth: bw,
            sampling_rate: 1_920_000,
            fft_size: 128,
            n_data_subcarriers: 72,
            n_null_subcarriers: 56,
            cp_long: 10,
            cp_short: 9,
        },
        Bandwidth::Bw3 => BandwidthProfile {
            bandwidth: bw,
            sampling_rate: 3_840_000,
            fft_size: 256,
            n_data_subcarriers: 180,
            n_null_subcarriers: 76,
            cp_long: 20,
            cp_short: 18,
        },
    }
}

/// Cyclic prefix length of symbol `symbol_in_subframe` (0..14).
pub fn symbol_cp_length(profile: &BandwidthProfile, symbol_in_subframe: usize) -> Result<usize> {
    match symbol_in_subframe {
        0 | 7 => Ok(profile.cp_long),
        1..=6 | 8..=13 => Ok(profile.cp_short),
        other => Err(PhyError::OutOfRange {
            what: "symbol_in_subframe",
            value: other as i64,
            range: "0..14",
        }),
    }
}

impl BandwidthProfile {
    /// CP length for an absolute symbol index within the frame.
    pub fn cp_of(&self, abs_symbol: usize) -> usize {
        match abs_symbol % SYMBOLS_PER_SUBFRAME {
            0 | 7 => self.cp_long,
            _ => self.cp_short,
        }
    }

    /// CP plus body length of an absolute symbol.
    pub fn symbol_len(&self, abs_symbol: usize) -> usize {
        self.cp_of(abs_symbol) + self.fft_size
    }

    pub fn subframe_sample_count(&self) -> usize {
        SYMBOLS_PER_SUBFRAME * self.fft_size + 2 * self.cp_long + 12 * self.cp_short
    }

    pub fn frame_sample_count(&self) -> usize {
        frame_sample_count(self)
    }

    /// Sample offset of the start (CP included) of `abs_symbol` within a frame.
    pub fn symbol_offset(&self, abs_symbol: usize) -> usize {
        let subframe = abs_symbol / SYMBOLS_PER_SUBFRAME;
        let within = abs_symbol % SYMBOLS_PER_SUBFRAME;
        let mut offset = subframe * self.subframe_sample_count();
        for s in 0..within {
            offset += self.symbol_len(s);
        }
        offset
    }

    /// Bin index for every data subcarrier, in subcarrier order.
    pub fn data_bins(&self) -> Vec<usize> {
        (0..self.n_data_subcarriers)
            .map(|k| centered_bin(self, k))
            .collect()
    }

    /// Signed frequency index (in subcarrier spacings) of data subcarrier `k`.
    pub fn signed_bin(&self, k: usize) -> i64 {
        let bin = centered_bin(self, k) as i64;
        if bin > (self.fft_size / 2) as i64 {
            bin - self.fft_size as i64
        } else {
            bin
        }
    }

    /// First subcarrier of the centered `width`-subcarrier band.
    pub fn centered_band_start(&self, width: usize) -> usize {
        (self.n_data_subcarriers - width) / 2
    }
}

/// Total samples in one 140-symbol frame.
pub fn frame_sample_count(profile: &BandwidthProfile) -> usize {
    (0..SYMBOLS_PER_FRAME)
        .map(|s| profile.fft_size + profile.cp_of(s))
        .sum()
}

fn centered_bin(profile: &BandwidthProfile, k: usize) -> usize {
    let half = profile.n_data_subcarriers / 2;
    if k < half {
        profile.fft_size - half + k
    } else {
        k - half + 1
    }
}

/// FFT bin carrying data subcarrier `k`.
///
/// Data subcarriers sit contiguously around DC with the DC bin itself left
/// empty: the lower half maps onto the top of the FFT (negative frequencies),
/// the upper half onto bins 1, 2, ...
pub fn subcarrier_to_fft_bin(profile: &BandwidthProfile, k: usize) -> Result<usize> {
    if k >= profile.n_data_subcarriers {
        return Err(PhyError::OutOfRange {
            what: "data subcarrier",
            value: k as i64,
            range: "0..n_data_subcarriers",
        });
    }
    Ok(centered_bin(profile, k))
}

/// A resource element address within a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPosition {
    pub subframe: usize,
    pub slot: usize,
    pub symbol: usize,
    pub subcarrier: usize,
}

impl GridPosition {
    pub fn new(subframe: usize, slot: usize, symbol: usize, subcarrier: usize) -> Result<Self> {
        if subframe >= SUBFRAMES_PER_FRAME {
            return Err(PhyError::OutOfRange {
                what: "subframe",
                value: subframe as i64,
                range: "0..10",
            });
        }
        if slot >= SLOTS_PER_SUBFRAME {
            return Err(PhyError::OutOfRange {
                what: "slot",
                value: slot as i64,
                range: "0..2",
            });
        }
        if symbol >= SYMBOLS_PER_SLOT {
            return Err(PhyError::OutOfRange {
                what: "symbol",
                value: symbol as i64,
                range: "0..7",
            });
        }
        Ok(GridPosition {
            subframe,
            slot,
            symbol,
            subcarrier,
        })
    }

    pub fn from_absolute(abs_symbol: usize, subcarrier: usize) -> Result<Self> {
        if abs_symbol >= SYMBOLS_PER_FRAME {
            return Err(PhyError::OutOfRange {
                what: "absolute symbol",
                value: abs_symbol as i64,
                range: "0..140",
            });
        }
        let subframe = abs_symbol / SYMBOLS_PER_SUBFRAME;
        let rem = abs_symbol % SYMBOLS_PER_SUBFRAME;
        Ok(GridPosition {
            subframe,
            slot: rem / SYMBOLS_PER_SLOT,
            symbol: rem % SYMBOLS_PER_SLOT,
            subcarrier,
        })
    }

    pub fn absolute_symbol(&self) -> usize {
        SYMBOLS_PER_SUBFRAME * self.subframe + SYMBOLS_PER_SLOT * self.slot + self.symbol
    }
}
