//! Session configuration: identities, frame format, cipher key, payload
//! source and channel, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel_sim::ChannelConfig;
use crate::coding::ldpc::DEFAULT_MAX_ITERS;
use crate::coding::CodeRate;
use crate::error::{PhyError, Result};
use crate::framing::{CipherKey, FrameIds};
use crate::modem::ModScheme;
use crate::numerology::{Bandwidth, Direction};
use crate::signals::{AccessPointId, UssId};

/// Samples in the reference audio payload.
pub const DEFAULT_PAYLOAD_SAMPLES: usize = 46_440;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PayloadSource {
    /// Deterministic synthetic audio of `samples` floats.
    Synthetic { samples: usize },
    Wav { path: PathBuf },
    RawF32 { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub direction: Direction,
    pub bandwidth: Bandwidth,
    pub modulation: ModScheme,
    pub code_rate: CodeRate,
    pub ap_id: u16,
    pub uss_id: u8,
    pub key: CipherKey,
    pub payload: PayloadSource,
    /// Opaque side stream (visual features) appended after the audio bits on
    /// the 3 MHz uplink.
    pub aux_path: Option<PathBuf>,
    pub channel: ChannelConfig,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            direction: Direction::Downlink,
            bandwidth: Bandwidth::Bw1p4,
            modulation: ModScheme::Qpsk,
            code_rate: CodeRate::R1_3,
            ap_id: 0,
            uss_id: 0,
            key: CipherKey(0x000102030405060708090a0b0c0d0e0f),
            payload: PayloadSource::Synthetic {
                samples: DEFAULT_PAYLOAD_SAMPLES,
            },
            aux_path: None,
            channel: ChannelConfig::identity(),
            seed: 1,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl SessionConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SessionConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn ids(&self) -> Result<FrameIds> {
        Ok(FrameIds {
            ap_id: AccessPointId::new(self.ap_id)?,
            uss_id: UssId::new(self.uss_id)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.ids()?;
        if self.direction == Direction::Downlink && self.bandwidth != Bandwidth::Bw1p4 {
            return Err(PhyError::Invalid("downlink supports 1.4 MHz only".into()));
        }
        if self.aux_path.is_some() && !(self.direction == Direction::Uplink && self.bandwidth == Bandwidth::Bw3) {
            return Err(PhyError::Invalid("a side stream needs the 3 MHz uplink".into()));
        }
        if self.max_iters == 0 {
            return Err(PhyError::Invalid("max_iters must be at least 1".into()));
        }
        if let PayloadSource::Synthetic { samples: 0 } = self.payload {
            return Err(PhyError::Invalid("empty payload".into()));
        }
        self.channel.validate(&self.bandwidth.profile())
    }
}
