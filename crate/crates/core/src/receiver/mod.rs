//! Receive pipeline: detection and identity search, CFO estimation and
//! correction, channel estimation, control and shared channel decoding.

pub mod cfo;
pub mod decode;
pub mod detect;
pub mod estimate;

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

pub use cfo::{correct_cfo, estimate_cfo, residual_cfo};
pub use decode::{decode_control, decode_shared, soft_demap, ControlDecode, SharedDecode};
pub use detect::{detect_frame, downlink_candidates, uplink_candidates, DetectionResult, DETECTION_THRESHOLD};
pub use estimate::{equalize, estimate_channel, ChannelEstimate};

use crate::coding::{CodeRate, LdpcCode, SegmentReport, SharedCodec};
use crate::error::{expect_len, Result};
use crate::framing::{demap_grid, ControlInfo, GridLayout, ResourceGrid};
use crate::modem::{ModScheme, OfdmModem};
use crate::par::Execution;

/// Codecs for every (modulation, rate) a control record can announce.
#[derive(Debug, Clone)]
pub struct CodecSet {
    codecs: Vec<((ModScheme, CodeRate), SharedCodec)>,
}

impl CodecSet {
    pub fn new(layout: &GridLayout, code: Arc<LdpcCode>) -> Result<Self> {
        let mut codecs = Vec::with_capacity(4);
        for scheme in [ModScheme::Qpsk, ModScheme::Qam16] {
            for rate in [CodeRate::R1_3, CodeRate::R1_2] {
                let capacity = layout.shared_capacity_cells() * scheme.bits_per_symbol();
                codecs.push(((scheme, rate), SharedCodec::new(code.clone(), capacity, rate)?));
            }
        }
        Ok(CodecSet { codecs })
    }

    pub fn get(&self, scheme: ModScheme, rate: CodeRate) -> &SharedCodec {
        &self
            .codecs
            .iter()
            .find(|(key, _)| *key == (scheme, rate))
            .expect("all combinations are built")
            .1
    }
}

/// Per-frame receive outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub cfo_hz: f64,
    /// CRC outcome of the two control copies (symbols 6 and 76).
    pub control_crc: [bool; 2],
    pub control: Option<ControlInfo>,
    pub noise_var: f64,
    pub segments: Vec<SegmentReport>,
    /// Decoded info bits; empty when no control copy passed its CRC.
    #[serde(skip)]
    pub info: Vec<u8>,
    /// Channel LLRs of the shared cells.
    #[serde(skip)]
    pub llrs: Vec<f64>,
}

impl FrameReport {
    pub fn control_ok(&self) -> bool {
        self.control_crc.iter().any(|&c| c)
    }

    pub fn converged(&self) -> bool {
        self.control_ok() && self.segments.iter().all(|s| s.converged)
    }
}

/// Frame-level receiver for one layout (direction, profile, identities).
#[derive(Debug, Clone)]
pub struct Receiver {
    layout: Arc<GridLayout>,
    modem: OfdmModem,
    codecs: CodecSet,
    max_iters: usize,
}

impl Receiver {
    pub fn new(layout: Arc<GridLayout>, code: Arc<LdpcCode>, max_iters: usize) -> Result<Self> {
        Ok(Receiver {
            modem: OfdmModem::new(layout.profile),
            codecs: CodecSet::new(&layout, code)?,
            layout,
            max_iters,
        })
    }

    pub fn layout(&self) -> &Arc<GridLayout> {
        &self.layout
    }

    pub fn codecs(&self) -> &CodecSet {
        &self.codecs
    }

    /// Estimates and removes the frame's CFO: CP correlation first, then the
    /// residual from the repeated sync and control RS symbols. Returns the
    /// total estimate and the corrected, demodulated grid.
    pub fn cfo_stage(&self, frame: &[Complex64], exec: Execution) -> Result<(f64, ResourceGrid)> {
        let fs = self.layout.profile.sampling_rate as f64;
        let coarse = estimate_cfo(frame, &self.layout.profile)?;
        let grid = self.demodulate(&correct_cfo(frame, coarse, fs), exec)?;
        let cfo = coarse + residual_cfo(&grid);
        Ok((cfo, self.demodulate(&correct_cfo(frame, cfo, fs), exec)?))
    }

    pub fn demodulate(&self, frame: &[Complex64], exec: Execution) -> Result<ResourceGrid> {
        let columns = self.modem.demodulate_frame(frame, exec)?;
        ResourceGrid::from_columns(self.layout.clone(), &columns)
    }

    /// Decodes both control copies and returns their CRC flags with the
    /// record from the first copy that passed.
    pub fn control_stage(&self, grid: &ResourceGrid) -> Result<([bool; 2], Option<ControlInfo>)> {
        let content = demap_grid(grid)?;
        let expected = self.layout.control_rs_values();
        let mut crc = [false; 2];
        let mut accepted = None;
        for copy in 0..2 {
            let d = decode_control(
                self.layout.direction,
                &self.layout.profile,
                &content.control[copy],
                &content.control_rs[copy],
                expected,
            )?;
            crc[copy] = d.crc_ok;
            if d.crc_ok && accepted.is_none() {
                accepted = d.info;
            }
        }
        Ok((crc, accepted))
    }

    pub fn estimate_stage(&self, grid: &ResourceGrid) -> Result<ChannelEstimate> {
        estimate_channel(grid, self.layout.rs_plan())
    }

    pub fn shared_stage(
        &self,
        grid: &ResourceGrid,
        estimate: &ChannelEstimate,
        control: &ControlInfo,
        exec: Execution,
    ) -> Result<SharedDecode> {
        let codec = self.codecs.get(control.modulation(), control.code_rate());
        decode_shared(grid, estimate, control, codec, self.max_iters, exec)
    }

    /// Runs the whole chain on one frame-aligned block of samples.
    pub fn receive_frame(&self, frame: &[Complex64], exec: Execution) -> Result<FrameReport> {
        expect_len("frame samples", self.layout.profile.frame_sample_count(), frame.len())?;
        let (cfo_hz, grid) = self.cfo_stage(frame, exec)?;
        let (control_crc, control) = self.control_stage(&grid)?;
        let mut report = FrameReport {
            cfo_hz,
            control_crc,
            control,
            noise_var: f64::NAN,
            segments: Vec::new(),
            info: Vec::new(),
            llrs: Vec::new(),
        };
        let Some(control) = control else {
            return Ok(report);
        };
        let estimate = self.estimate_stage(&grid)?;
        let shared = self.shared_stage(&grid, &estimate, &control, exec)?;
        report.noise_var = estimate.noise_var;
        report.segments = shared.segments;
        report.info = shared.info;
        report.llrs = shared.llrs;
        Ok(report)
    }
}
