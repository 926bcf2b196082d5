//! Splitting a payload bit stream into per-frame info blocks grouped into
//! transport blocks of up to 16 frames.

use crate::error::{PhyError, Result};

pub const MAX_FRAMES_PER_TB: usize = 16;

/// Info bits for one frame plus its control-record flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSegment {
    /// Exactly one frame's info capacity; the last frame is zero-padded.
    pub bits: Vec<u8>,
    /// Frames in this frame's transport block, minus one.
    pub frames_in_tb: u8,
    pub end_of_payload: bool,
    /// Payload bits in `bits` (the rest is padding).
    pub payload_bits: usize,
}

/// `(frames_in_tb, end_of_payload)` for frame `index` of `n_frames`.
pub fn frame_flags(index: usize, n_frames: usize) -> (u8, bool) {
    let tb_start = index / MAX_FRAMES_PER_TB * MAX_FRAMES_PER_TB;
    let tb_len = (n_frames - tb_start).min(MAX_FRAMES_PER_TB);
    ((tb_len - 1) as u8, index + 1 == n_frames)
}

pub fn segment_transport_block(payload_bits: &[u8], per_frame_capacity: usize) -> Result<Vec<FrameSegment>> {
    if payload_bits.is_empty() {
        return Err(PhyError::Invalid("empty payload".into()));
    }
    if per_frame_capacity == 0 {
        return Err(PhyError::Invalid("zero per-frame capacity".into()));
    }
    let n_frames = payload_bits.len().div_ceil(per_frame_capacity);
    let segments = payload_bits
        .chunks(per_frame_capacity)
        .enumerate()
        .map(|(i, chunk)| {
            let (frames_in_tb, end_of_payload) = frame_flags(i, n_frames);
            let mut bits = chunk.to_vec();
            bits.resize(per_frame_capacity, 0);
            FrameSegment {
                bits,
                frames_in_tb,
                end_of_payload,
                payload_bits: chunk.len(),
            }
        })
        .collect();
    Ok(segments)
}

/// Concatenates per-frame info blocks and truncates to the out-of-band length.
pub fn reassemble(frames: &[Vec<u8>], payload_len: usize) -> Result<Vec<u8>> {
    let mut out: Vec<u8> = frames.concat();
    if out.len() < payload_len {
        return Err(PhyError::length("reassembled payload", payload_len, out.len()));
    }
    out.truncate(payload_len);
    Ok(out)
}
