//! End-to-end wiring of one session: payload → cipher → bits → frames → IQ,
//! and IQ → detection → per-frame receive → bits → payload.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coding::ldpc::ldpc_build;
use crate::coding::{LdpcCode, SharedCodec};
use crate::config::SessionConfig;
use crate::error::{PhyError, Result};
use crate::framing::control::{Dci, Uci};
use crate::framing::payload::{bits_to_bytes, bytes_to_bits, cipher_samples};
use crate::framing::{
    bin2re, build_grid, re2bin, reassemble, segment_transport_block, ControlInfo, FrameIds, FrameSegment,
    GridLayout, ResourceGrid,
};
use crate::modem::{IqSamples, OfdmModem};
use crate::numerology::{BandwidthProfile, Direction};
use crate::par::Execution;
use crate::receiver::{
    detect_frame, downlink_candidates, uplink_candidates, CodecSet, DetectionResult, FrameReport,
    Receiver,
};

/// LDPC information block length; frames are split into segments of at most
/// this many bits.
pub const SEGMENT_INFO_BITS: usize = 432;

/// Deterministic stand-in for captured audio: a few tones plus a little
/// noise, peak below 0.9.
pub fn synthetic_audio(samples: usize, seed: u64) -> Vec<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tones: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.random_range(100.0..4000.0), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    (0..samples)
        .map(|n| {
            let t = n as f64 / 16_000.0;
            let s: f64 = tones
                .iter()
                .map(|(f, ph)| (std::f64::consts::TAU * f * t + ph).sin())
                .sum::<f64>()
                * 0.2;
            (s + rng.random_range(-0.05..0.05)) as f32
        })
        .collect()
}

/// Speech enhancement stub: returns the payload unchanged.
pub fn enhance(samples: &[f32]) -> Vec<f32> {
    samples.to_vec()
}

#[derive(Debug, Clone)]
pub struct Transmission {
    pub iq: IqSamples,
    pub n_frames: usize,
    pub payload_bits: usize,
}

#[derive(Debug, Clone)]
pub struct Reception {
    pub detection: DetectionResult,
    pub frames: Vec<FrameReport>,
}

impl Reception {
    pub fn all_ok(&self) -> bool {
        !self.frames.is_empty() && self.frames.iter().all(FrameReport::converged)
    }

    pub fn info_bits(&self) -> Vec<u8> {
        self.frames.iter().flat_map(|f| f.info.iter().copied()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    config: SessionConfig,
    ids: FrameIds,
    layout: Arc<GridLayout>,
    code: Arc<LdpcCode>,
    codecs: CodecSet,
    modem: OfdmModem,
}

impl Link {
    pub fn new(config: SessionConfig) -> Result<Self> {
        Self::with_code(config, Arc::new(ldpc_build(SEGMENT_INFO_BITS)?))
    }

    /// Reuses an already built LDPC code (it is the same for every session).
    pub fn with_code(config: SessionConfig, code: Arc<LdpcCode>) -> Result<Self> {
        config.validate()?;
        let ids = config.ids()?;
        let profile = config.bandwidth.profile();
        let layout = Arc::new(GridLayout::new(config.direction, profile, ids)?);
        Ok(Link {
            codecs: CodecSet::new(&layout, code.clone())?,
            modem: OfdmModem::new(profile),
            config,
            ids,
            layout,
            code,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn profile(&self) -> BandwidthProfile {
        self.layout.profile
    }

    pub fn layout(&self) -> &Arc<GridLayout> {
        &self.layout
    }

    pub fn code(&self) -> &Arc<LdpcCode> {
        &self.code
    }

    pub fn modem(&self) -> &OfdmModem {
        &self.modem
    }

    pub fn codec(&self) -> &SharedCodec {
        self.codecs.get(self.config.modulation, self.config.code_rate)
    }

    pub fn info_capacity(&self) -> usize {
        self.codec().info_capacity()
    }

    /// Encrypts the samples and appends the optional side stream.
    pub fn payload_bits(&self, samples: &[f32], aux: &[u8]) -> Vec<u8> {
        let mut bits = re2bin(&cipher_samples(self.config.key, samples));
        bits.extend(bytes_to_bits(aux));
        bits
    }

    /// Inverse of [`Link::payload_bits`] given the out-of-band lengths.
    pub fn recover_payload(&self, bits: &[u8], n_samples: usize, aux_len: usize) -> Result<(Vec<f32>, Vec<u8>)> {
        let needed = n_samples * 32 + aux_len * 8;
        if bits.len() < needed {
            return Err(PhyError::length("received payload bits", needed, bits.len()));
        }
        let samples = cipher_samples(self.config.key, &bin2re(&bits[..n_samples * 32])?);
        let aux = bits_to_bytes(&bits[n_samples * 32..needed])?;
        Ok((samples, aux))
    }

    /// Reassembles the received frames and undoes re2bin and the cipher.
    pub fn decode_reception(&self, rx: &Reception, n_samples: usize, aux_len: usize) -> Result<(Vec<f32>, Vec<u8>)> {
        let frames: Vec<Vec<u8>> = rx.frames.iter().map(|f| f.info.clone()).collect();
        let bits = reassemble(&frames, n_samples * 32 + aux_len * 8)?;
        self.recover_payload(&bits, n_samples, aux_len)
    }

    pub fn control_record(&self, frame_index: usize, seg: &FrameSegment) -> ControlInfo {
        let frame_number = (frame_index % 1024) as u16;
        match self.config.direction {
            Direction::Downlink => ControlInfo::Dci(Dci {
                frame_number,
                code_rate: self.config.code_rate,
                modulation: self.config.modulation,
                frames_in_tb: seg.frames_in_tb,
                end_of_payload: seg.end_of_payload,
                uplink_ss_id: self.ids.uss_id,
                reserved: 0,
            }),
            Direction::Uplink => ControlInfo::Uci(Uci {
                bandwidth: self.config.bandwidth,
                frame_number,
                code_rate: self.config.code_rate,
                modulation: self.config.modulation,
                frames_in_tb: seg.frames_in_tb,
                end_of_payload: seg.end_of_payload,
                reserved: 0,
            }),
        }
    }

    /// LDPC-encodes one frame's info bits and fills its grid.
    pub fn frame_grid(&self, frame_index: usize, seg: &FrameSegment, exec: Execution) -> Result<ResourceGrid> {
        let coded = self.codec().encode(&seg.bits, exec)?;
        build_grid(self.layout.clone(), &self.control_record(frame_index, seg), &coded)
    }

    pub fn transmit_bits(&self, bits: &[u8], exec: Execution) -> Result<Transmission> {
        let segments = segment_transport_block(bits, self.info_capacity())?;
        let frames = exec.map_range(0..segments.len(), |i| -> Result<Vec<_>> {
            let grid = self.frame_grid(i, &segments[i], Execution::Sequential)?;
            self.modem.modulate_frame(&grid.columns(), Execution::Sequential)
        });
        let mut samples = Vec::with_capacity(segments.len() * self.profile().frame_sample_count());
        for f in frames {
            samples.extend(f?);
        }
        Ok(Transmission {
            iq: IqSamples::new(samples, self.profile().sampling_rate as f64),
            n_frames: segments.len(),
            payload_bits: bits.len(),
        })
    }

    pub fn transmit(&self, samples: &[f32], aux: &[u8], exec: Execution) -> Result<Transmission> {
        self.transmit_bits(&self.payload_bits(samples, aux), exec)
    }

    /// Identities the receiver searches: every access point on the downlink,
    /// the eight sync ids of the known access point on the uplink.
    pub fn search_set(&self) -> Vec<FrameIds> {
        match self.config.direction {
            Direction::Downlink => downlink_candidates(self.ids.uss_id),
            Direction::Uplink => uplink_candidates(self.ids.ap_id),
        }
    }

    pub fn receiver_for(&self, ids: FrameIds) -> Result<Receiver> {
        let layout = if ids == self.ids {
            self.layout.clone()
        } else {
            Arc::new(GridLayout::new(self.config.direction, self.profile(), ids)?)
        };
        Receiver::new(layout, self.code.clone(), self.config.max_iters)
    }

    /// Detects the first frame, then decodes consecutive frames up to the
    /// one flagged end-of-payload (or the end of the capture).
    pub fn receive(&self, rx: &IqSamples, exec: Execution) -> Result<Reception> {
        let profile = self.profile();
        let detection = detect_frame(rx, self.config.direction, &profile, &self.search_set(), exec)?;
        let receiver = self.receiver_for(detection.ids)?;
        let frame_len = profile.frame_sample_count();
        let available = (rx.len() - detection.frame_start) / frame_len;
        if available == 0 {
            return Err(PhyError::length(
                "samples after detected frame start",
                frame_len,
                rx.len() - detection.frame_start,
            ));
        }
        let reports = exec.map_range(0..available, |i| {
            let start = detection.frame_start + i * frame_len;
            receiver
                .receive_frame(&rx.samples[start..start + frame_len], Execution::Sequential)
                .map(|mut r| {
                    r.llrs = Vec::new();
                    r
                })
        });
        let mut frames = Vec::with_capacity(available);
        for r in reports {
            let r = r?;
            let last = r.control.is_some_and(|c| c.end_of_payload());
            frames.push(r);
            if last {
                break;
            }
        }
        Ok(Reception { detection, frames })
    }
}
