//! Per-block wall-time profile of the transmit and receive chains, broken
//! down into once-per-session blocks and per-frame blocks, each timed in
//! isolation on a single thread.

use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ingest::load_payload;
use crate::channel_sim::apply_channel;
use crate::config::SessionConfig;
use crate::error::{PhyError, Result};
use crate::framing::payload::cipher_samples;
use crate::framing::transport::frame_flags;
use crate::framing::{bin2re, build_control_symbols, build_grid, re2bin, CellTag, FrameSegment, GridLayout};
use crate::link::{enhance, Link};
use crate::numerology::Direction;
use crate::par::Execution;
use crate::receiver::{detect_frame, soft_demap};
use crate::signals::{control_data_offsets, gen_control_rs, gen_dss, gen_uss, rs_plan};

pub const MIN_REPETITIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Occurrence {
    Once,
    PerFrame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileMode {
    #[serde(rename = "dl-tx")]
    DownlinkTx,
    #[serde(rename = "dl-rx")]
    DownlinkRx,
    #[serde(rename = "ul-tx")]
    UplinkTx,
    #[serde(rename = "ul-rx")]
    UplinkRx,
}

use Occurrence::{Once, PerFrame};

const DL_TX: [(&str, Occurrence); 12] = [
    ("DSS", Once),
    ("DRS Symbol and Index", Once),
    ("PDCCH Index", Once),
    ("Mapping", Once),
    ("PDSCH Index", Once),
    ("Encryption", Once),
    ("RE2BIN", PerFrame),
    ("LDPC Encoder", PerFrame),
    ("Transport Block", PerFrame),
    ("PDCCH Symbol", PerFrame),
    ("OFDM Modulation", PerFrame),
    ("Payload Generation", PerFrame),
];

const DL_RX: [(&str, Occurrence); 8] = [
    ("DSS Det", Once),
    ("CFO Estimation & Correction", PerFrame),
    ("PDCCH Decoder", PerFrame),
    ("Channel Estimation & Correction", PerFrame),
    ("LDPC Decoder", PerFrame),
    ("BIN2RE", PerFrame),
    ("PDSCH Symbol Detection", PerFrame),
    ("Decryption", Once),
];

const UL_TX: [(&str, Occurrence); 8] = [
    ("USS", Once),
    ("URS Symbol & Index", Once),
    ("PUCCH Index", Once),
    ("Mapping", Once),
    ("PUSCH Index", Once),
    ("Encryption", Once),
    ("PUCCH Symbol", PerFrame),
    ("PUSCH Symbol Generation", PerFrame),
];

const UL_RX: [(&str, Occurrence); 6] = [
    ("USS Det", Once),
    ("PUCCH Decoder", PerFrame),
    ("Channel Estimation & Correction", PerFrame),
    ("PUSCH Symbol Detection", PerFrame),
    ("Decryption", Once),
    ("Data Enhancement", Once),
];

impl ProfileMode {
    pub const ALL: [ProfileMode; 4] = [
        ProfileMode::DownlinkTx,
        ProfileMode::DownlinkRx,
        ProfileMode::UplinkTx,
        ProfileMode::UplinkRx,
    ];

    pub fn new(direction: Direction, transmit: bool) -> Self {
        match (direction, transmit) {
            (Direction::Downlink, true) => ProfileMode::DownlinkTx,
            (Direction::Downlink, false) => ProfileMode::DownlinkRx,
            (Direction::Uplink, true) => ProfileMode::UplinkTx,
            (Direction::Uplink, false) => ProfileMode::UplinkRx,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            ProfileMode::DownlinkTx | ProfileMode::DownlinkRx => Direction::Downlink,
            ProfileMode::UplinkTx | ProfileMode::UplinkRx => Direction::Uplink,
        }
    }

    pub fn is_transmit(self) -> bool {
        matches!(self, ProfileMode::DownlinkTx | ProfileMode::UplinkTx)
    }

    pub fn label(self) -> &'static str {
        match self {
            ProfileMode::DownlinkTx => "dl-tx",
            ProfileMode::DownlinkRx => "dl-rx",
            ProfileMode::UplinkTx => "ul-tx",
            ProfileMode::UplinkRx => "ul-rx",
        }
    }

    /// Row names and occurrence, in report order.
    pub fn blocks(self) -> &'static [(&'static str, Occurrence)] {
        match self {
            ProfileMode::DownlinkTx => &DL_TX,
            ProfileMode::DownlinkRx => &DL_RX,
            ProfileMode::UplinkTx => &UL_TX,
            ProfileMode::UplinkRx => &UL_RX,
        }
    }
}

impl FromStr for ProfileMode {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self> {
        ProfileMode::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| PhyError::Parse(format!("unknown profile mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockTiming {
    pub block: String,
    pub occurrence: Occurrence,
    /// Calls per repetition: 1 for once blocks, the frame count otherwise.
    pub invocations: u64,
    /// Median over repetitions of the mean time per call.
    pub elapsed_ns: u64,
    /// Median over repetitions of the time for all calls.
    pub total_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub mode: ProfileMode,
    pub direction: Direction,
    pub bandwidth: String,
    pub modulation: String,
    pub code_rate: String,
    pub payload_samples: usize,
    pub frames: usize,
    pub repetitions: usize,
    pub host: String,
    pub blocks: Vec<BlockTiming>,
}

impl LatencyReport {
    pub fn block_names(&self) -> Vec<&str> {
        self.blocks.iter().map(|b| b.block.as_str()).collect()
    }

    pub fn block(&self, name: &str) -> Option<&BlockTiming> {
        self.blocks.iter().find(|b| b.block == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{}: {} MHz, {}, rate {}, {} samples, {} frames, {} repetitions",
            self.mode.label(),
            self.bandwidth,
            self.modulation,
            self.code_rate,
            self.payload_samples,
            self.frames,
            self.repetitions
        );
        let _ = writeln!(out, "host: {}", self.host);
        let _ = writeln!(out, "{:<34} {:>14} {:>14}  {:<9} {:>6}", "block", "per call", "total", "occurs", "calls");
        for b in &self.blocks {
            let occ = match b.occurrence {
                Once => "once",
                PerFrame => "per-frame",
            };
            let _ = writeln!(
                out,
                "{:<34} {:>14} {:>14}  {:<9} {:>6}",
                b.block,
                format_ns(b.elapsed_ns),
                format_ns(b.total_ns),
                occ,
                b.invocations
            );
        }
        out
    }
}

fn format_ns(ns: u64) -> String {
    match ns {
        0..1_000 => format!("{ns} ns"),
        1_000..1_000_000 => format!("{:.1} µs", ns as f64 / 1e3),
        _ => format!("{:.2} ms", ns as f64 / 1e6),
    }
}

pub fn host_description() -> String {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!("{}-{}, {} hardware threads", std::env::consts::OS, std::env::consts::ARCH, threads)
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

struct Profiler {
    repetitions: usize,
    timings: Vec<BlockTiming>,
}

impl Profiler {
    fn record(&mut self, block: &str, occurrence: Occurrence, invocations: usize, totals: Vec<u64>) {
        let total_ns = median(totals);
        self.timings.push(BlockTiming {
            block: block.to_string(),
            occurrence,
            invocations: invocations as u64,
            elapsed_ns: total_ns / invocations.max(1) as u64,
            total_ns,
        });
    }

    fn once<T>(&mut self, block: &str, mut f: impl FnMut() -> Result<T>) -> Result<T> {
        let mut totals = Vec::with_capacity(self.repetitions);
        let mut out = None;
        for _ in 0..self.repetitions {
            let t = Instant::now();
            let v = std::hint::black_box(f()?);
            totals.push(t.elapsed().as_nanos() as u64);
            out = Some(v);
        }
        self.record(block, Once, 1, totals);
        Ok(out.expect("at least one repetition"))
    }

    fn per_frame<T>(&mut self, block: &str, n_frames: usize, mut f: impl FnMut(usize) -> Result<T>) -> Result<Vec<T>> {
        let mut totals = Vec::with_capacity(self.repetitions);
        let mut out = Vec::new();
        for _ in 0..self.repetitions {
            out.clear();
            let t = Instant::now();
            for i in 0..n_frames {
                out.push(std::hint::black_box(f(i)?));
            }
            totals.push(t.elapsed().as_nanos() as u64);
        }
        self.record(block, PerFrame, n_frames, totals);
        Ok(out)
    }

    /// Reorders the recorded blocks into report order.
    fn finish(mut self, mode: ProfileMode) -> Vec<BlockTiming> {
        let order = mode.blocks();
        self.timings
            .sort_by_key(|b| order.iter().position(|(n, _)| *n == b.block).unwrap_or(usize::MAX));
        self.timings
    }
}

/// Sample range holding info bits `[start, end)` of the encrypted stream.
fn sample_range(start_bit: usize, end_bit: usize, n_samples: usize) -> std::ops::Range<usize> {
    (start_bit / 32).min(n_samples)..end_bit.div_ceil(32).min(n_samples)
}

pub fn latency_profile(cfg: &SessionConfig, mode: ProfileMode, repetitions: usize) -> Result<LatencyReport> {
    if repetitions < MIN_REPETITIONS {
        return Err(PhyError::OutOfRange {
            what: "repetitions",
            value: repetitions as i64,
            range: "≥ 10",
        });
    }
    if mode.direction() != cfg.direction {
        return Err(PhyError::Invalid(format!(
            "profile mode {} does not match the session direction",
            mode.label()
        )));
    }
    let link = Link::new(cfg.clone())?;
    let samples = load_payload(cfg)?;
    let mut prof = Profiler {
        repetitions,
        timings: Vec::new(),
    };
    let frames = if mode.is_transmit() {
        profile_transmit(&link, &samples, &mut prof)?
    } else {
        profile_receive(&link, &samples, &mut prof)?
    };
    Ok(LatencyReport {
        mode,
        direction: cfg.direction,
        bandwidth: cfg.bandwidth.label().to_string(),
        modulation: cfg.modulation.label().to_string(),
        code_rate: cfg.code_rate.label().to_string(),
        payload_samples: samples.len(),
        frames,
        repetitions,
        host: host_description(),
        blocks: prof.finish(mode),
    })
}

fn profile_transmit(link: &Link, samples: &[f32], prof: &mut Profiler) -> Result<usize> {
    let cfg = link.config();
    let ids = cfg.ids()?;
    let profile = link.profile();
    let dl = cfg.direction == Direction::Downlink;
    let seq = Execution::Sequential;

    if dl {
        prof.once("DSS", || Ok(gen_dss(ids.ap_id)))?;
        prof.once("DRS Symbol and Index", || Ok(rs_plan(cfg.direction, ids.ap_id, ids.uss_id, &profile)))?;
    } else {
        prof.once("USS", || Ok(gen_uss(ids.uss_id, ids.ap_id)))?;
        prof.once("URS Symbol & Index", || Ok(rs_plan(cfg.direction, ids.ap_id, ids.uss_id, &profile)))?;
    }
    let control_index = if dl { "PDCCH Index" } else { "PUCCH Index" };
    prof.once(control_index, || {
        Ok((control_data_offsets(), gen_control_rs(ids.control_material(cfg.direction))))
    })?;
    let layout = prof.once("Mapping", || GridLayout::new(cfg.direction, profile, ids))?;
    let shared_index = if dl { "PDSCH Index" } else { "PUSCH Index" };
    prof.once(shared_index, || {
        Ok(layout
            .tags()
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == CellTag::Shared)
            .map(|(i, _)| i)
            .collect::<Vec<_>>())
    })?;
    let encrypted = prof.once("Encryption", || Ok(cipher_samples(cfg.key, samples)))?;

    let cap = link.info_capacity();
    let total_bits = encrypted.len() * 32;
    let n_frames = total_bits.div_ceil(cap);
    let layout = link.layout().clone();

    // Info bits of frame i, cut out of the samples it overlaps.
    let frame_bits = |i: usize| -> Vec<u8> {
        let (start, end) = (i * cap, ((i + 1) * cap).min(total_bits));
        let r = sample_range(start, end, encrypted.len());
        let first = r.start * 32;
        let words = re2bin(&encrypted[r]);
        let mut bits = words[start - first..end - first].to_vec();
        bits.resize(cap, 0);
        bits
    };
    let segment = |i: usize, bits: Vec<u8>| -> FrameSegment {
        let (frames_in_tb, end_of_payload) = frame_flags(i, n_frames);
        let payload_bits = cap.min(total_bits - i * cap);
        FrameSegment {
            bits,
            frames_in_tb,
            end_of_payload,
            payload_bits,
        }
    };
    let whole_frame = |i: usize| -> Result<Vec<_>> {
        let seg = segment(i, frame_bits(i));
        let grid = link.frame_grid(i, &seg, seq)?;
        link.modem().modulate_frame(&grid.columns(), seq)
    };

    if dl {
        let bits = prof.per_frame("RE2BIN", n_frames, |i| Ok(frame_bits(i)))?;
        let segments: Vec<FrameSegment> = bits.into_iter().enumerate().map(|(i, b)| segment(i, b)).collect();
        let coded = prof.per_frame("LDPC Encoder", n_frames, |i| link.codec().encode(&segments[i].bits, seq))?;
        let grids = prof.per_frame("Transport Block", n_frames, |i| {
            build_grid(layout.clone(), &link.control_record(i, &segments[i]), &coded[i])
        })?;
        prof.per_frame("PDCCH Symbol", n_frames, |i| {
            build_control_symbols(&link.control_record(i, &segments[i]).pack()?)
        })?;
        prof.per_frame("OFDM Modulation", n_frames, |i| link.modem().modulate_frame(&grids[i].columns(), seq))?;
        prof.per_frame("Payload Generation", n_frames, whole_frame)?;
    } else {
        prof.per_frame("PUCCH Symbol", n_frames, |i| {
            let (frames_in_tb, end_of_payload) = frame_flags(i, n_frames);
            let seg = FrameSegment {
                bits: Vec::new(),
                frames_in_tb,
                end_of_payload,
                payload_bits: 0,
            };
            build_control_symbols(&link.control_record(i, &seg).pack()?)
        })?;
        prof.per_frame("PUSCH Symbol Generation", n_frames, whole_frame)?;
    }
    Ok(n_frames)
}

fn profile_receive(link: &Link, samples: &[f32], prof: &mut Profiler) -> Result<usize> {
    let cfg = link.config();
    let dl = cfg.direction == Direction::Downlink;
    let seq = Execution::Sequential;
    let profile = link.profile();

    let tx = link.transmit(samples, &[], seq)?;
    let rx = apply_channel(&tx.iq, &cfg.channel)?;
    let candidates = link.search_set();

    let det_name = if dl { "DSS Det" } else { "USS Det" };
    let det = prof.once(det_name, || detect_frame(&rx, cfg.direction, &profile, &candidates, seq))?;
    let receiver = link.receiver_for(det.ids)?;
    let frame_len = profile.frame_sample_count();
    let n_frames = tx.n_frames.min((rx.len() - det.frame_start) / frame_len);
    let frame = |i: usize| &rx.samples[det.frame_start + i * frame_len..det.frame_start + (i + 1) * frame_len];

    let grids = if dl {
        prof.per_frame("CFO Estimation & Correction", n_frames, |i| receiver.cfo_stage(frame(i), seq))?
    } else {
        (0..n_frames).map(|i| receiver.cfo_stage(frame(i), seq)).collect::<Result<Vec<_>>>()?
    };
    let grids: Vec<_> = grids.into_iter().map(|(_, g)| g).collect();

    let control_name = if dl { "PDCCH Decoder" } else { "PUCCH Decoder" };
    let controls = prof.per_frame(control_name, n_frames, |i| receiver.control_stage(&grids[i]))?;
    let controls = controls
        .into_iter()
        .map(|(_, c)| c.ok_or_else(|| PhyError::Invalid("control record failed its CRC".into())))
        .collect::<Result<Vec<_>>>()?;

    let shared = link.layout().shared_cells();
    let llrs = prof.per_frame("Channel Estimation & Correction", n_frames, |i| {
        let est = receiver.estimate_stage(&grids[i])?;
        let y: Vec<_> = shared.iter().map(|&c| grids[i].cells[c]).collect();
        let h: Vec<_> = shared.iter().map(|&c| est.gains[c]).collect();
        soft_demap(&y, &h, est.noise_var, controls[i].modulation())
    })?;

    let detect_name = if dl { "PDSCH Symbol Detection" } else { "PUSCH Symbol Detection" };
    let detections = prof.per_frame(detect_name, n_frames, |i| {
        let est = receiver.estimate_stage(&grids[i])?;
        receiver.shared_stage(&grids[i], &est, &controls[i], seq)
    })?;
    let info: Vec<Vec<u8>> = detections.into_iter().map(|d| d.info).collect();

    let n_samples = samples.len();
    let total_bits = n_samples * 32;
    let cap = link.info_capacity();
    let encrypted: Vec<f32> = if dl {
        let codec = link.codec();
        prof.per_frame("LDPC Decoder", n_frames, |i| codec.decode(&llrs[i], cfg.max_iters, seq))?;
        // Frame i converts the words whose last bit it carries.
        let words = prof.per_frame("BIN2RE", n_frames, |i| {
            let (start, end) = (i * cap, ((i + 1) * cap).min(total_bits));
            let (w0, w1) = (start / 32, end / 32);
            let bits: Vec<u8> = (w0 * 32..(w1 * 32).max(w0 * 32))
                .map(|b| info[b / cap][b % cap])
                .collect();
            bin2re(&bits)
        })?;
        words.concat()
    } else {
        let bits: Vec<u8> = info.concat();
        bin2re(&bits[..total_bits])?
    };
    let recovered = prof.once("Decryption", || Ok(cipher_samples(cfg.key, &encrypted)))?;
    if !dl {
        prof.once("Data Enhancement", || Ok(enhance(&recovered)))?;
    }
    Ok(n_frames)
}
