//! Frame detection and identity search by correlating against the
//! time-domain sync symbols.
//!
//! The metric for a candidate start `d` combines both sync copies:
//!
//! ```text
//! (|c5(d)| + |c75(d)|) / (√(E5(d)·Et) + √(E75(d)·Et))
//! ```
//!
//! where `c` is the correlation with the candidate's sync symbol, `E` the
//! received energy under the template and `Et` the template energy. It is 1
//! for a clean match and does not depend on payload, since sync symbols carry
//! nothing else. Starts are searched over less than half a frame so the two
//! sync copies cannot be confused with each other.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Serialize, Serializer};

use crate::error::{PhyError, Result};
use crate::framing::FrameIds;
use crate::modem::{IqSamples, OfdmModem};
use crate::numerology::{BandwidthProfile, Direction};
use crate::par::Execution;
use crate::signals::{sync_sequence, sync_subcarriers, AccessPointId, UssId, SYNC_SYMBOLS};

pub const DETECTION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionResult {
    /// Sample index of the first sample (CP included) of symbol 0.
    pub frame_start: usize,
    #[serde(serialize_with = "ser_ids")]
    pub ids: FrameIds,
    pub peak_metric: f64,
}

fn ser_ids<S: Serializer>(ids: &FrameIds, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("ids", 2)?;
    st.serialize_field("ap_id", &ids.ap_id.value())?;
    st.serialize_field("uss_id", &ids.uss_id.value())?;
    st.end()
}

/// Every access point id, for blind downlink search. The uss id is not part
/// of the downlink sync, so `uss_id` is carried through unchanged.
pub fn downlink_candidates(uss_id: UssId) -> Vec<FrameIds> {
    AccessPointId::all().map(|ap_id| FrameIds { ap_id, uss_id }).collect()
}

/// The eight uplink sync ids under a known access point.
pub fn uplink_candidates(ap_id: AccessPointId) -> Vec<FrameIds> {
    UssId::all().map(|uss_id| FrameIds { ap_id, uss_id }).collect()
}

/// Time-domain sync symbol (CP + body) for one identity.
pub fn sync_template(direction: Direction, profile: &BandwidthProfile, ids: FrameIds) -> Vec<Complex64> {
    let mut column = vec![Complex64::new(0.0, 0.0); profile.n_data_subcarriers];
    for (k, v) in sync_subcarriers(direction, profile).zip(sync_sequence(direction, ids.ap_id, ids.uss_id)) {
        column[k] = v;
    }
    OfdmModem::new(*profile)
        .modulate(&column, profile.cp_of(SYNC_SYMBOLS[0]))
        .expect("column has the profile width")
}

fn prefix_energy(x: &[Complex64]) -> Vec<f64> {
    let mut acc = Vec::with_capacity(x.len() + 1);
    acc.push(0.0);
    let mut s = 0.0;
    for v in x {
        s += v.norm_sqr();
        acc.push(s);
    }
    acc
}

pub fn detect_frame(
    rx: &IqSamples,
    direction: Direction,
    profile: &BandwidthProfile,
    candidates: &[FrameIds],
    exec: Execution,
) -> Result<DetectionResult> {
    if candidates.is_empty() {
        return Err(PhyError::Invalid("empty identity search set".into()));
    }
    let p5 = profile.symbol_offset(SYNC_SYMBOLS[0]);
    let p75 = profile.symbol_offset(SYNC_SYMBOLS[1]);
    let len = profile.symbol_len(SYNC_SYMBOLS[0]);
    let half = profile.frame_sample_count() / 2;
    let needed = p75 + len;
    if rx.len() < needed {
        return Err(PhyError::length("detection input (at least both sync symbols)", needed, rx.len()));
    }
    let window = (rx.len() - needed + 1).min(half);
    let seg_len = window + len - 1;
    let fft_len = seg_len.next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(fft_len);
    let inv = planner.plan_fft_inverse(fft_len);
    let spectrum = |x: &[Complex64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
        buf[..x.len()].copy_from_slice(x);
        fwd.process(&mut buf);
        buf
    };
    let seg5 = &rx.samples[p5..p5 + seg_len];
    let seg75 = &rx.samples[p75..p75 + seg_len];
    let r5 = Arc::new(spectrum(seg5));
    let r75 = Arc::new(spectrum(seg75));
    let e5 = prefix_energy(seg5);
    let e75 = prefix_energy(seg75);

    let results = exec.map(candidates.to_vec(), |ids| {
        let t = sync_template(direction, profile, ids);
        let et: f64 = t.iter().map(|x| x.norm_sqr()).sum();
        let tf = spectrum(&t);
        let correlate = |r: &[Complex64]| {
            let mut buf: Vec<Complex64> = r.iter().zip(&tf).map(|(a, b)| a * b.conj()).collect();
            inv.process(&mut buf);
            buf
        };
        let c5 = correlate(&r5);
        let c75 = correlate(&r75);
        let mut best = (0usize, f64::NEG_INFINITY);
        for d in 0..window {
            let w5 = e5[d + len] - e5[d];
            let w75 = e75[d + len] - e75[d];
            let denom = (w5 * et).sqrt() + (w75 * et).sqrt();
            if denom <= 0.0 {
                continue;
            }
            // inverse FFT is unnormalized
            let m = (c5[d].norm() + c75[d].norm()) / fft_len as f64 / denom;
            if m > best.1 {
                best = (d, m);
            }
        }
        (ids, best)
    });

    let mut winner: Option<DetectionResult> = None;
    for (ids, (d, m)) in results {
        if winner.is_none_or(|w| m > w.peak_metric) {
            winner = Some(DetectionResult {
                frame_start: d,
                ids,
                peak_metric: m,
            });
        }
    }
    let winner = winner.expect("candidates is non-empty");
    if !(winner.peak_metric >= DETECTION_THRESHOLD) {
        return Err(PhyError::NoDetection {
            peak: winner.peak_metric.max(0.0),
            threshold: DETECTION_THRESHOLD,
        });
    }
    Ok(winner)
}
