//! Control and shared channel decoding on equalized grid cells.

use num_complex::Complex64;
use serde::Serialize;

use super::estimate::{equalize, fit_response, ChannelEstimate};
use crate::coding::{SegmentReport, SharedCodec};
use crate::error::{expect_len, PhyError, Result};
use crate::framing::control::decode_control_llrs;
use crate::framing::{ControlInfo, ResourceGrid};
use crate::modem::constellation::demap_symbol_into;
use crate::modem::ModScheme;
use crate::numerology::{BandwidthProfile, Direction};
use crate::par::Execution;
use crate::signals::{control_data_offsets, control_rs_offsets, CONTROL_DATA_LEN, CONTROL_RS_LEN, CORE_BAND};

const MIN_NOISE_VAR: f64 = 1e-12;

/// MMSE-equalizes each cell, removes the MMSE bias and demaps with the
/// post-equalizer noise `noise_var/|h|²`. Cells with no usable gain give
/// zero LLRs.
pub fn soft_demap(
    symbols: &[Complex64],
    gains: &[Complex64],
    noise_var: f64,
    scheme: ModScheme,
) -> Result<Vec<f64>> {
    let nv = noise_var.max(MIN_NOISE_VAR);
    let eq = equalize(symbols, gains, nv)?;
    let mut out = Vec::with_capacity(symbols.len() * scheme.bits_per_symbol());
    for (&z, &h) in eq.iter().zip(gains) {
        let g = h.norm_sqr();
        if g <= MIN_NOISE_VAR {
            out.extend(std::iter::repeat_n(0.0, scheme.bits_per_symbol()));
            continue;
        }
        let bias = g / (g + nv);
        demap_symbol_into(z / bias, scheme, nv / g, &mut out);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlDecode {
    /// Unpacked record; present whenever the bits parse, even if the CRC fails.
    pub info: Option<ControlInfo>,
    pub crc_ok: bool,
}

/// Decodes one control symbol: LS estimates on the 24 RS are fitted with the
/// delay-domain model of [`estimate_channel`](super::estimate_channel) (no
/// time terms) and the fit is evaluated at the 48 data positions; then MMSE,
/// Viterbi, CRC.
pub fn decode_control(
    direction: Direction,
    profile: &BandwidthProfile,
    symbols: &[Complex64],
    rs_obs: &[Complex64],
    expected_rs: &[Complex64],
) -> Result<ControlDecode> {
    expect_len("control symbols", CONTROL_DATA_LEN, symbols.len())?;
    expect_len("control rs observations", CONTROL_RS_LEN, rs_obs.len())?;
    expect_len("control rs values", CONTROL_RS_LEN, expected_rs.len())?;
    let ls: Vec<Complex64> = rs_obs.iter().zip(expected_rs).map(|(y, p)| y / p).collect();
    let start = profile.centered_band_start(CORE_BAND);
    let bin = |k: usize| profile.signed_bin(start + k);
    let points: Vec<(i64, f64)> = control_rs_offsets().into_iter().map(|k| (bin(k), 0.0)).collect();
    let model = fit_response(profile, &points, &ls, false)?;
    let gains: Vec<Complex64> = control_data_offsets()
        .into_iter()
        .map(|k| model.eval(bin(k), 0.0))
        .collect();
    let noise_var = model.noise_var;
    let llrs = soft_demap(symbols, &gains, noise_var, ModScheme::Qpsk)?;
    let (bits, crc_ok) = decode_control_llrs(&llrs)?;
    // An erased copy decodes to all zeros, which carry a valid zero CRC.
    let crc_ok = crc_ok && llrs.iter().any(|&l| l != 0.0);
    Ok(ControlDecode {
        info: ControlInfo::unpack(direction, &bits).ok(),
        crc_ok,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedDecode {
    pub info: Vec<u8>,
    pub segments: Vec<SegmentReport>,
    /// Channel LLRs before decoding (their signs are the uncoded decisions).
    pub llrs: Vec<f64>,
}

impl SharedDecode {
    pub fn all_converged(&self) -> bool {
        self.segments.iter().all(|s| s.converged)
    }
}

/// Equalizes and demaps the Shared cells, then LDPC-decodes them with the
/// codec matching the control record's modulation and rate.
pub fn decode_shared(
    grid_obs: &ResourceGrid,
    estimate: &ChannelEstimate,
    control: &ControlInfo,
    codec: &SharedCodec,
    max_iters: usize,
    exec: Execution,
) -> Result<SharedDecode> {
    if codec.rate() != control.code_rate() {
        return Err(PhyError::Invalid("codec rate does not match the control record".into()));
    }
    let layout = &grid_obs.layout;
    let cells = layout.shared_cells();
    let symbols: Vec<Complex64> = cells.iter().map(|&c| grid_obs.cells[c]).collect();
    let gains: Vec<Complex64> = cells.iter().map(|&c| estimate.gains[c]).collect();
    let llrs = soft_demap(&symbols, &gains, estimate.noise_var, control.modulation())?;
    let (info, segments) = codec.decode(&llrs, max_iters, exec)?;
    Ok(SharedDecode { info, segments, llrs })
}
