//! Full transmit → channel → receive run with a bit-exactness verdict.

use serde::Serialize;

use super::ingest::{load_aux, load_payload};
use crate::channel_sim::apply_channel;
use crate::config::SessionConfig;
use crate::error::{PhyError, Result};
use crate::link::{enhance, Link};
use crate::par::Execution;
use crate::receiver::{DetectionResult, FrameReport};

pub const BIT_EXACT: &str = "payload bit-exact";

#[derive(Debug, Clone, Serialize)]
pub struct LoopbackReport {
    pub direction: &'static str,
    pub bandwidth: &'static str,
    pub modulation: &'static str,
    pub code_rate: &'static str,
    pub payload_samples: usize,
    pub aux_bytes: usize,
    pub payload_bits: usize,
    pub frames_sent: usize,
    pub detection: Option<DetectionResult>,
    /// Receive failure that stopped processing, if any.
    pub error: Option<String>,
    pub frames: Vec<FrameReport>,
    pub control_failures: usize,
    pub unconverged_segments: usize,
    /// Differences between sent and recovered payload bits; bits never
    /// recovered count as errors.
    pub bit_errors: usize,
    pub bit_exact: bool,
    pub status: String,
}

impl LoopbackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn count_errors(sent: &[u8], got: &[u8]) -> usize {
    let common = sent.len().min(got.len());
    sent[..common].iter().zip(&got[..common]).filter(|(a, b)| a != b).count() + (sent.len() - common)
}

/// Runs the session's payload through its channel and receiver. Receive-side
/// failures are reported rather than returned, so the report always exists.
pub fn run_loopback(cfg: &SessionConfig, exec: Execution) -> Result<LoopbackReport> {
    let link = Link::new(cfg.clone())?;
    let samples = load_payload(cfg)?;
    let aux = load_aux(cfg)?;
    let sent = link.payload_bits(&samples, &aux);
    let tx = link.transmit_bits(&sent, exec)?;
    let rx = apply_channel(&tx.iq, &cfg.channel)?;

    let mut report = LoopbackReport {
        direction: cfg.direction.label(),
        bandwidth: cfg.bandwidth.label(),
        modulation: cfg.modulation.label(),
        code_rate: cfg.code_rate.label(),
        payload_samples: samples.len(),
        aux_bytes: aux.len(),
        payload_bits: sent.len(),
        frames_sent: tx.n_frames,
        detection: None,
        error: None,
        frames: Vec::new(),
        control_failures: 0,
        unconverged_segments: 0,
        bit_errors: sent.len(),
        bit_exact: false,
        status: String::new(),
    };

    match link.receive(&rx, exec) {
        Ok(reception) => {
            let got = reception.info_bits();
            report.bit_errors = count_errors(&sent, &got);
            report.bit_exact = report.bit_errors == 0 && reception.frames.len() == tx.n_frames;
            if report.bit_exact {
                let (back, aux_back) = link.decode_reception(&reception, samples.len(), aux.len())?;
                let back = enhance(&back);
                let same = back.iter().zip(&samples).all(|(a, b)| a.to_bits() == b.to_bits());
                report.bit_exact = same && aux_back == aux;
            }
            report.detection = Some(reception.detection);
            report.control_failures = reception.frames.iter().filter(|f| !f.control_ok()).count();
            report.unconverged_segments = reception
                .frames
                .iter()
                .flat_map(|f| &f.segments)
                .filter(|s| !s.converged)
                .count();
            report.frames = reception.frames;
        }
        Err(e @ PhyError::NoDetection { .. }) => report.error = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    report.status = if report.bit_exact {
        BIT_EXACT.to_string()
    } else {
        format!(
            "payload mismatch: {} of {} bits wrong, {} control failures, {} unconverged segments",
            report.bit_errors, report.payload_bits, report.control_failures, report.unconverged_segments
        )
    };
    Ok(report)
}
