//! Shared-channel codec: splits a frame's information bits into LDPC
//! segments and rate-matches them onto the frame's coded-bit capacity.
//!
//! Each segment carries `a ≤ k` information bits. The `k − a` unused
//! information positions are shortened (known zeros, never transmitted) and
//! exactly `a·(1/R − 1)` parity bits are sent, picked uniformly across the
//! `2k` mother-code parity bits. At rate 1/3 this punctures `2(k − a)` parity
//! bits, at rate 1/2 it punctures `2k − a`. Segment sizes differ by at most
//! one bit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ldpc::{ldpc_decode, ldpc_encode, LdpcCode, LIFT_SIZE};
use super::CodeRate;
use crate::error::{expect_len, PhyError, Result};
use crate::par::Execution;

/// LLR given to shortened positions.
const SHORTENED_LLR: f64 = 1.0e6;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Segment {
    info_len: usize,
    /// Indices into the parity part (0..n−k) that are transmitted.
    kept_parity: Vec<usize>,
}

impl Segment {
    fn coded_len(&self) -> usize {
        self.info_len + self.kept_parity.len()
    }
}

/// Per-segment decoder outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct SharedCodec {
    code: Arc<LdpcCode>,
    rate: CodeRate,
    coded_capacity: usize,
    info_capacity: usize,
    segments: Vec<Segment>,
}

/// Parity positions in the order they are given up. Odd staircase blocks go
/// first so each punctured bit keeps a transmitted neighbour in its chain, then
/// even blocks working in from both ends; the weight-3 block 0 goes last.
fn puncture_order(parity_len: usize) -> Vec<usize> {
    let z = LIFT_SIZE;
    if !parity_len.is_multiple_of(z) {
        return (0..parity_len).rev().collect();
    }
    let mb = parity_len / z;
    let mut blocks: Vec<usize> = (1..mb).step_by(2).collect();
    let mut evens: std::collections::VecDeque<usize> = (2..mb).step_by(2).collect();
    while let Some(front) = evens.pop_front() {
        blocks.push(front);
        if let Some(back) = evens.pop_back() {
            blocks.push(back);
        }
    }
    blocks.push(0);
    blocks
        .into_iter()
        .flat_map(|b| b * z..(b + 1) * z)
        .collect()
}

fn kept_positions(parity_len: usize, keep: usize) -> Vec<usize> {
    let mut dropped = vec![false; parity_len];
    for p in puncture_order(parity_len).into_iter().take(parity_len - keep) {
        dropped[p] = true;
    }
    (0..parity_len).filter(|&p| !dropped[p]).collect()
}

impl SharedCodec {
    /// Plans segmentation for a frame that carries `coded_capacity` coded bits.
    pub fn new(code: Arc<LdpcCode>, coded_capacity: usize, rate: CodeRate) -> Result<Self> {
        let info_capacity = coded_capacity / rate.expansion();
        if info_capacity == 0 {
            return Err(PhyError::Invalid(format!(
                "coded capacity {coded_capacity} too small for rate {}",
                rate.label()
            )));
        }
        let k = code.k();
        let parity_len = code.n() - k;
        let n_seg = info_capacity.div_ceil(k);
        let base = info_capacity / n_seg;
        let extra = info_capacity % n_seg;
        let segments = (0..n_seg)
            .map(|i| {
                let info_len = base + usize::from(i < extra);
                let keep = info_len * (rate.expansion() - 1);
                Segment {
                    info_len,
                    kept_parity: kept_positions(parity_len, keep),
                }
            })
            .collect();
        Ok(SharedCodec {
            code,
            rate,
            coded_capacity,
            info_capacity,
            segments,
        })
    }

    pub fn rate(&self) -> CodeRate {
        self.rate
    }

    pub fn info_capacity(&self) -> usize {
        self.info_capacity
    }

    pub fn coded_capacity(&self) -> usize {
        self.coded_capacity
    }

    pub fn n_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn code(&self) -> &LdpcCode {
        &self.code
    }

    /// Encodes exactly `info_capacity` bits into `coded_capacity` bits.
    pub fn encode(&self, info: &[u8], exec: Execution) -> Result<Vec<u8>> {
        expect_len("shared channel info", self.info_capacity, info.len())?;
        let k = self.code.k();
        let mut jobs = Vec::with_capacity(self.segments.len());
        let mut offset = 0;
        for seg in &self.segments {
            jobs.push((seg, &info[offset..offset + seg.info_len]));
            offset += seg.info_len;
        }
        let parts = exec.map(jobs, |(seg, bits)| -> Result<Vec<u8>> {
            let mut padded = bits.to_vec();
            padded.resize(k, 0);
            let cw = ldpc_encode(&self.code, &padded)?;
            let mut out = Vec::with_capacity(seg.coded_len());
            out.extend_from_slice(bits);
            out.extend(seg.kept_parity.iter().map(|&p| cw[k + p]));
            Ok(out)
        });
        let mut coded = Vec::with_capacity(self.coded_capacity);
        for part in parts {
            coded.extend(part?);
        }
        coded.resize(self.coded_capacity, 0);
        Ok(coded)
    }

    /// Decodes `coded_capacity` LLRs back into the frame's information bits.
    pub fn decode(
        &self,
        llrs: &[f64],
        max_iters: usize,
        exec: Execution,
    ) -> Result<(Vec<u8>, Vec<SegmentReport>)> {
        expect_len("shared channel llrs", self.coded_capacity, llrs.len())?;
        let k = self.code.k();
        let n = self.code.n();
        let mut jobs = Vec::with_capacity(self.segments.len());
        let mut offset = 0;
        for seg in &self.segments {
            jobs.push((seg, &llrs[offset..offset + seg.coded_len()]));
            offset += seg.coded_len();
        }
        let parts = exec.map(jobs, |(seg, rx)| {
            let mut full = vec![0.0; n];
            full[..seg.info_len].copy_from_slice(&rx[..seg.info_len]);
            for v in &mut full[seg.info_len..k] {
                *v = SHORTENED_LLR;
            }
            for (&p, &l) in seg.kept_parity.iter().zip(&rx[seg.info_len..]) {
                full[k + p] = l;
            }
            ldpc_decode(&self.code, &full, max_iters).map(|d| {
                let report = SegmentReport {
                    converged: d.converged,
                    iterations: d.iterations,
                };
                (d.info[..seg.info_len].to_vec(), report)
            })
        });
        let mut info = Vec::with_capacity(self.info_capacity);
        let mut reports = Vec::with_capacity(self.segments.len());
        for part in parts {
            let (bits, report) = part?;
            info.extend(bits);
            reports.push(report);
        }
        Ok((info, reports))
    }
}
