//! Channel coding: the control-channel CRC and convolutional code, and the
//! shared-channel LDPC code with its segmentation and rate matching.

pub mod conv;
pub mod crc;
pub mod ldpc;
pub mod shared;

use serde::{Deserialize, Serialize};

pub use conv::{conv_encode, viterbi_decode};
pub use crc::{crc8_append, crc8_check};
pub use ldpc::{ldpc_build, ldpc_decode, ldpc_encode, LdpcCode, LdpcDecoded};
pub use shared::{SegmentReport, SharedCodec};

/// Shared-channel code rate, as advertised in the control records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    #[serde(rename = "1/3")]
    R1_3,
    #[serde(rename = "1/2")]
    R1_2,
}

impl CodeRate {
    pub fn bit(self) -> u8 {
        match self {
            CodeRate::R1_3 => 0,
            CodeRate::R1_2 => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            CodeRate::R1_3
        } else {
            CodeRate::R1_2
        }
    }

    /// Coded bits per information bit.
    pub fn expansion(self) -> usize {
        match self {
            CodeRate::R1_3 => 3,
            CodeRate::R1_2 => 2,
        }
    }

    pub fn value(self) -> f64 {
        1.0 / self.expansion() as f64
    }

    pub fn label(self) -> &'static str {
        match self {
            CodeRate::R1_3 => "1/3",
            CodeRate::R1_2 => "1/2",
        }
    }
}

impl std::str::FromStr for CodeRate {
    type Err = crate::PhyError;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim() {
            "1/3" => Ok(CodeRate::R1_3),
            "1/2" => Ok(CodeRate::R1_2),
            other => Err(crate::PhyError::Parse(format!("unknown code rate {other:?}"))),
        }
    }
}
