//! Monte Carlo bit error rate sweeps over AWGN.
//!
//! SNR points are Eb/N0 in dB per information bit on the Shared cells (pilot
//! and control overhead excluded). Each trial is one frame with its own
//! ChaCha stream, so results do not depend on scheduling.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel_sim::{apply_channel, ChannelConfig};
use crate::config::SessionConfig;
use crate::error::{PhyError, Result};
use crate::framing::{build_grid, FrameSegment, ResourceGrid};
use crate::link::Link;
use crate::modem::constellation::{demap_llrs, hard_bits};
use crate::modem::IqSamples;
use crate::par::Execution;

pub const MIN_BER_BITS: u64 = 100_000;
pub const CSV_HEADER: &str = "snr_db,bits,errors,ber,fer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BerMode {
    /// Hard decisions on the Shared cells with perfect CSI.
    Uncoded,
    /// Full receiver: CFO, channel estimation, control and LDPC decoding.
    Coded,
}

impl FromStr for BerMode {
    type Err = PhyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncoded" => Ok(BerMode::Uncoded),
            "coded" => Ok(BerMode::Coded),
            other => Err(PhyError::Parse(format!("unknown BER mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub bits_tested: u64,
    pub bit_errors: u64,
    pub frames_tested: u64,
    pub frame_errors: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bits_tested as f64
    }

    pub fn fer(&self) -> f64 {
        self.frame_errors as f64 / self.frames_tested as f64
    }

    pub fn row(&self) -> BerRow {
        BerRow {
            snr_db: self.snr_db,
            bits: self.bits_tested,
            errors: self.bit_errors,
            ber: self.ber(),
            fer: self.fer(),
        }
    }
}

/// One CSV line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerRow {
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub fer: f64,
}

pub fn to_csv(points: &[BerPoint]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for p in points {
        let r = p.row();
        let _ = writeln!(out, "{},{},{},{},{}", r.snr_db, r.bits, r.errors, r.ber, r.fer);
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<BerRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(PhyError::Parse(format!("bad BER CSV header {other:?}"))),
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || PhyError::Parse(format!("bad BER CSV row {line:?}"));
            if f.len() != 5 {
                return Err(bad());
            }
            Ok(BerRow {
                snr_db: f[0].parse().map_err(|_| bad())?,
                bits: f[1].parse().map_err(|_| bad())?,
                errors: f[2].parse().map_err(|_| bad())?,
                ber: f[3].parse().map_err(|_| bad())?,
                fer: f[4].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

fn mean_power(iq: &IqSamples) -> f64 {
    iq.samples.iter().map(|x| x.norm_sqr()).sum::<f64>() / iq.len() as f64
}

/// Sample-domain SNR giving `ebn0_db` per info bit on unit-energy cells
/// (the OFDM transforms are unitary, so cell noise equals sample noise).
fn sample_snr_db(tx_power: f64, ebn0_db: f64, info_bits_per_cell: f64) -> f64 {
    10.0 * (tx_power * info_bits_per_cell).log10() + ebn0_db
}

struct Trial {
    bits: u64,
    errors: u64,
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn uncoded_trial(link: &Link, ebn0_db: f64, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let layout = link.layout();
    let scheme = link.config().modulation;
    let bps = scheme.bits_per_symbol();
    let bits = random_bits(rng, layout.shared_capacity_cells() * bps);
    let seg = FrameSegment {
        bits: Vec::new(),
        frames_in_tb: 0,
        end_of_payload: true,
        payload_bits: 0,
    };
    let grid = build_grid(layout.clone(), &link.control_record(0, &seg), &bits)?;
    let tx = modulate(link, &grid)?;
    let snr = sample_snr_db(mean_power(&tx), ebn0_db, bps as f64);
    let rx = apply_channel(&tx, &ChannelConfig::awgn(snr, rng.random()))?;
    let columns = link.modem().demodulate_frame(&rx.samples, Execution::Sequential)?;
    let obs = ResourceGrid::from_columns(layout.clone(), &columns)?;
    let y: Vec<_> = layout.shared_cells().iter().map(|&c| obs.cells[c]).collect();
    let got = hard_bits(&demap_llrs(&y, scheme, 1.0)?);
    Ok(Trial {
        bits: bits.len() as u64,
        errors: bits.iter().zip(&got).filter(|(a, b)| a != b).count() as u64,
    })
}

fn modulate(link: &Link, grid: &ResourceGrid) -> Result<IqSamples> {
    let samples = link.modem().modulate_frame(&grid.columns(), Execution::Sequential)?;
    Ok(IqSamples::new(samples, link.profile().sampling_rate as f64))
}

fn coded_trial(link: &Link, ebn0_db: f64, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let k = link.info_capacity();
    let info = random_bits(rng, k);
    let seg = FrameSegment {
        bits: info.clone(),
        frames_in_tb: 0,
        end_of_payload: true,
        payload_bits: k,
    };
    let tx = modulate(link, &link.frame_grid(0, &seg, Execution::Sequential)?)?;
    let per_cell = link.config().modulation.bits_per_symbol() as f64 * link.config().code_rate.value();
    let snr = sample_snr_db(mean_power(&tx), ebn0_db, per_cell);
    let rx = apply_channel(&tx, &ChannelConfig::awgn(snr, rng.random()))?;
    let receiver = link.receiver_for(link.config().ids()?)?;
    let report = receiver.receive_frame(&rx.samples, Execution::Sequential)?;
    let errors = if report.info.len() == k {
        info.iter().zip(&report.info).filter(|(a, b)| a != b).count()
    } else {
        k
    };
    Ok(Trial {
        bits: k as u64,
        errors: errors as u64,
    })
}

/// Bits per trial for the session in the given mode.
pub fn bits_per_trial(link: &Link, mode: BerMode) -> usize {
    match mode {
        BerMode::Uncoded => link.layout().shared_capacity_cells() * link.config().modulation.bits_per_symbol(),
        BerMode::Coded => link.info_capacity(),
    }
}

/// One point per SNR, each with at least `min_bits` tested bits. The
/// session's channel settings are ignored (AWGN only); its seed selects the
/// random streams.
pub fn ber_sweep(
    cfg: &SessionConfig,
    snrs_db: &[f64],
    mode: BerMode,
    min_bits: u64,
    exec: Execution,
) -> Result<Vec<BerPoint>> {
    if min_bits < MIN_BER_BITS {
        return Err(PhyError::OutOfRange {
            what: "min_bits",
            value: min_bits as i64,
            range: "≥ 100000",
        });
    }
    let link = Link::new(cfg.clone())?;
    let per_trial = bits_per_trial(&link, mode) as u64;
    let trials = min_bits.div_ceil(per_trial) as usize;
    let jobs: Vec<(usize, usize)> = (0..snrs_db.len())
        .flat_map(|p| (0..trials).map(move |t| (p, t)))
        .collect();
    let results = exec.map(jobs, |(p, t)| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(((p as u64) << 32) | t as u64);
        match mode {
            BerMode::Uncoded => uncoded_trial(&link, snrs_db[p], &mut rng),
            BerMode::Coded => coded_trial(&link, snrs_db[p], &mut rng),
        }
    });
    let mut points: Vec<BerPoint> = snrs_db
        .iter()
        .map(|&snr_db| BerPoint {
            snr_db,
            bits_tested: 0,
            bit_errors: 0,
            frames_tested: 0,
            frame_errors: 0,
        })
        .collect();
    for (i, r) in results.into_iter().enumerate() {
        let trial = r?;
        let p = &mut points[i / trials];
        p.bits_tested += trial.bits;
        p.bit_errors += trial.errors;
        p.frames_tested += 1;
        p.frame_errors += u64::from(trial.errors > 0);
    }
    Ok(points)
}
