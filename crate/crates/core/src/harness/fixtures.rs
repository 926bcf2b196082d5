//! Conformance fixtures: sequences, grids, control-chain vectors, the LDPC
//! parity-check matrix and one frame of IQ, all deterministic for a given
//! session.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::ingest::{load_aux, load_payload};
use crate::config::SessionConfig;
use crate::error::Result;
use crate::framing::control::control_chain;
use crate::framing::grid::grid_to_text;
use crate::framing::segment_transport_block;
use crate::link::Link;
use crate::modem::IqSamples;
use crate::par::Execution;
use crate::signals::{gen_control_rs, gen_dss, gen_uss, rs_plan, sequence_to_text};

pub const DSS_FILE: &str = "dss.txt";
pub const USS_FILE: &str = "uss.txt";
pub const RS_FILE: &str = "rs.txt";
pub const CONTROL_RS_FILE: &str = "control_rs.txt";
pub const CONTROL_CHAIN_FILE: &str = "control_chain.txt";
pub const GRID_FILE: &str = "grid_frame0.txt";
pub const LDPC_FILE: &str = "ldpc_h.txt";
pub const IQ_FILE: &str = "frame0.iq";
pub const CONFIG_FILE: &str = "config.json";

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
}

/// Writes every fixture into `out_dir` (created if missing) and returns the
/// paths in write order.
pub fn emit_fixtures(cfg: &SessionConfig, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let link = Link::new(cfg.clone())?;
    let ids = cfg.ids()?;
    let profile = link.profile();
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        written.push(path);
        Ok(())
    };

    let dss: String = gen_dss(ids.ap_id).iter().map(|v| format!("{v}\n")).collect();
    put(DSS_FILE, dss.as_bytes())?;
    put(USS_FILE, sequence_to_text(&gen_uss(ids.uss_id, ids.ap_id)).as_bytes())?;

    let mut rs = String::new();
    for p in rs_plan(cfg.direction, ids.ap_id, ids.uss_id, &profile).pilots {
        let _ = writeln!(rs, "{} {} {} {}", p.symbol, p.subcarrier, p.value.re, p.value.im);
    }
    put(RS_FILE, rs.as_bytes())?;
    let crs = gen_control_rs(ids.control_material(cfg.direction));
    let mut crs_text = String::new();
    for (k, v) in crs.subcarriers.iter().zip(&crs.values) {
        let _ = writeln!(crs_text, "{k} {} {}", v.re, v.im);
    }
    put(CONTROL_RS_FILE, crs_text.as_bytes())?;

    let samples = load_payload(cfg)?;
    let aux = load_aux(cfg)?;
    let bits = link.payload_bits(&samples, &aux);
    let segments = segment_transport_block(&bits, link.info_capacity())?;
    let control = link.control_record(0, &segments[0]);
    let chain = control_chain(&control.pack()?)?;
    let mut cc = String::new();
    let _ = writeln!(cc, "info {}", bit_string(&chain.info));
    let _ = writeln!(cc, "crc {}", bit_string(&chain.with_crc));
    let _ = writeln!(cc, "tail {}", bit_string(&chain.with_tail));
    let _ = writeln!(cc, "coded {}", bit_string(&chain.coded));
    for s in &chain.symbols {
        let _ = writeln!(cc, "symbol {} {}", s.re, s.im);
    }
    put(CONTROL_CHAIN_FILE, cc.as_bytes())?;

    let grid = link.frame_grid(0, &segments[0], Execution::Sequential)?;
    put(GRID_FILE, grid_to_text(&grid).as_bytes())?;
    put(LDPC_FILE, link.code().to_text().as_bytes())?;
    let frame = link.modem().modulate_frame(&grid.columns(), Execution::Sequential)?;
    put(IQ_FILE, &IqSamples::new(frame, profile.sampling_rate as f64).to_bytes())?;
    put(CONFIG_FILE, cfg.to_json().as_bytes())?;
    Ok(written)
}
