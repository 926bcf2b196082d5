//! Resource grid layout, assembly and extraction.
//!
//! Cells are stored symbol-major: cell `(s, k)` lives at `s·n + k` where `n` is
//! the profile's data-subcarrier count. Shared-channel symbols fill the Shared
//! cells in that same order.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use super::control::{build_control_symbols, ControlInfo};
use crate::error::{expect_len, PhyError, Result};
use crate::modem::map_symbols;
use crate::numerology::{Bandwidth, BandwidthProfile, Direction, SYMBOLS_PER_FRAME};
use crate::signals::{
    control_data_offsets, control_rs_offsets, gen_control_rs, rs_plan, sync_sequence,
    sync_subcarriers, AccessPointId, IdMaterial, RsPlan, UssId, CONTROL_SYMBOLS, CORE_BAND,
    SYNC_SYMBOLS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellTag {
    Sync,
    ControlRs,
    Control,
    Rs,
    Shared,
    Null,
}

impl CellTag {
    pub const ALL: [CellTag; 6] = [
        CellTag::Sync,
        CellTag::ControlRs,
        CellTag::Control,
        CellTag::Rs,
        CellTag::Shared,
        CellTag::Null,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CellTag::Sync => "sync",
            CellTag::ControlRs => "control_rs",
            CellTag::Control => "control",
            CellTag::Rs => "rs",
            CellTag::Shared => "shared",
            CellTag::Null => "null",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        CellTag::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| PhyError::Parse(format!("unknown cell tag {s:?}")))
    }
}

/// Identities a frame is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameIds {
    pub ap_id: AccessPointId,
    pub uss_id: UssId,
}

impl FrameIds {
    pub fn control_material(&self, direction: Direction) -> IdMaterial {
        match direction {
            Direction::Downlink => IdMaterial::Ap(self.ap_id),
            Direction::Uplink => IdMaterial::Uss(self.uss_id),
        }
    }
}

/// Cell occupancy and index lists for one (direction, profile, ids) triple.
/// Independent of modulation and payload, so it is built once per session.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub direction: Direction,
    pub profile: BandwidthProfile,
    pub ids: FrameIds,
    tags: Vec<CellTag>,
    /// Cell indices of each sync copy, subcarrier order.
    sync_cells: [Vec<usize>; 2],
    control_cells: [Vec<usize>; 2],
    control_rs_cells: [Vec<usize>; 2],
    shared_cells: Vec<usize>,
    rs: RsPlan,
    sync_values: Vec<Complex64>,
    control_rs_values: Vec<Complex64>,
}

impl GridLayout {
    pub fn new(direction: Direction, profile: BandwidthProfile, ids: FrameIds) -> Result<Self> {
        if direction == Direction::Downlink && profile.bandwidth != Bandwidth::Bw1p4 {
            return Err(PhyError::Invalid("downlink runs at 1.4 MHz only".into()));
        }
        let n = profile.n_data_subcarriers;
        let mut tags = vec![CellTag::Shared; SYMBOLS_PER_FRAME * n];
        let core = profile.centered_band_start(CORE_BAND);
        let sync_band = sync_subcarriers(direction, &profile);

        let sync_cells = SYNC_SYMBOLS.map(|s| {
            for k in 0..n {
                tags[s * n + k] = if sync_band.contains(&k) { CellTag::Sync } else { CellTag::Null };
            }
            sync_band.clone().map(|k| s * n + k).collect::<Vec<_>>()
        });
        let control_cells = CONTROL_SYMBOLS.map(|s| {
            let cells: Vec<usize> = control_data_offsets().into_iter().map(|o| s * n + core + o).collect();
            for &c in &cells {
                tags[c] = CellTag::Control;
            }
            cells
        });
        let control_rs_cells = CONTROL_SYMBOLS.map(|s| {
            let cells: Vec<usize> = control_rs_offsets().into_iter().map(|o| s * n + core + o).collect();
            for &c in &cells {
                tags[c] = CellTag::ControlRs;
            }
            cells
        });
        let rs = rs_plan(direction, ids.ap_id, ids.uss_id, &profile);
        for p in &rs.pilots {
            let c = p.symbol * n + p.subcarrier;
            if tags[c] != CellTag::Shared {
                return Err(PhyError::MalformedGrid(format!(
                    "RS pilot at ({}, {}) overlaps {}",
                    p.symbol,
                    p.subcarrier,
                    tags[c].label()
                )));
            }
            tags[c] = CellTag::Rs;
        }
        let shared_cells = (0..tags.len()).filter(|&c| tags[c] == CellTag::Shared).collect();
        Ok(GridLayout {
            direction,
            profile,
            ids,
            tags,
            sync_cells,
            control_cells,
            control_rs_cells,
            shared_cells,
            rs,
            sync_values: sync_sequence(direction, ids.ap_id, ids.uss_id),
            control_rs_values: gen_control_rs(ids.control_material(direction)).values,
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.profile.n_data_subcarriers
    }

    pub fn n_cells(&self) -> usize {
        self.tags.len()
    }

    pub fn tag(&self, symbol: usize, subcarrier: usize) -> CellTag {
        self.tags[symbol * self.n_subcarriers() + subcarrier]
    }

    pub fn tags(&self) -> &[CellTag] {
        &self.tags
    }

    pub fn count(&self, tag: CellTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    pub fn shared_cells(&self) -> &[usize] {
        &self.shared_cells
    }

    pub fn shared_capacity_cells(&self) -> usize {
        self.shared_cells.len()
    }

    pub fn sync_cells(&self) -> &[Vec<usize>; 2] {
        &self.sync_cells
    }

    pub fn control_cells(&self) -> &[Vec<usize>; 2] {
        &self.control_cells
    }

    pub fn control_rs_cells(&self) -> &[Vec<usize>; 2] {
        &self.control_rs_cells
    }

    pub fn rs_plan(&self) -> &RsPlan {
        &self.rs
    }

    pub fn sync_values(&self) -> &[Complex64] {
        &self.sync_values
    }

    pub fn control_rs_values(&self) -> &[Complex64] {
        &self.control_rs_values
    }
}

/// One frame's cells plus the layout they follow.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    pub layout: Arc<GridLayout>,
    pub cells: Vec<Complex64>,
}

impl ResourceGrid {
    /// Wraps received cells (e.g. demodulated columns) in a layout.
    pub fn from_cells(layout: Arc<GridLayout>, cells: Vec<Complex64>) -> Result<Self> {
        expect_len("grid cells", layout.n_cells(), cells.len())?;
        Ok(ResourceGrid { layout, cells })
    }

    pub fn from_columns(layout: Arc<GridLayout>, columns: &[Vec<Complex64>]) -> Result<Self> {
        expect_len("grid columns", SYMBOLS_PER_FRAME, columns.len())?;
        let cells = columns.concat();
        Self::from_cells(layout, cells)
    }

    pub fn direction(&self) -> Direction {
        self.layout.direction
    }

    pub fn profile(&self) -> &BandwidthProfile {
        &self.layout.profile
    }

    pub fn column(&self, symbol: usize) -> &[Complex64] {
        let n = self.layout.n_subcarriers();
        &self.cells[symbol * n..(symbol + 1) * n]
    }

    pub fn columns(&self) -> Vec<Vec<Complex64>> {
        self.cells
            .chunks_exact(self.layout.n_subcarriers())
            .map(<[Complex64]>::to_vec)
            .collect()
    }

    pub fn get(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.cells[symbol * self.layout.n_subcarriers() + subcarrier]
    }
}

/// Fills every cell of a frame: sync, control chain, pilots and the
/// modulated shared-channel bits.
pub fn build_grid(layout: Arc<GridLayout>, control: &ControlInfo, shared_bits: &[u8]) -> Result<ResourceGrid> {
    if control.direction() != layout.direction {
        return Err(PhyError::Invalid(format!(
            "control record is for {} but the layout is {}",
            control.direction().label(),
            layout.direction.label()
        )));
    }
    let scheme = control.modulation();
    expect_len(
        "shared channel bits",
        layout.shared_capacity_cells() * scheme.bits_per_symbol(),
        shared_bits.len(),
    )?;
    let mut cells = vec![Complex64::new(0.0, 0.0); layout.n_cells()];
    let control_symbols = build_control_symbols(&control.pack()?)?;
    for copy in 0..2 {
        for (&c, &v) in layout.sync_cells[copy].iter().zip(&layout.sync_values) {
            cells[c] = v;
        }
        for (&c, &v) in layout.control_cells[copy].iter().zip(&control_symbols) {
            cells[c] = v;
        }
        for (&c, &v) in layout.control_rs_cells[copy].iter().zip(&layout.control_rs_values) {
            cells[c] = v;
        }
    }
    let n = layout.n_subcarriers();
    for p in &layout.rs.pilots {
        cells[p.symbol * n + p.subcarrier] = p.value;
    }
    let shared = map_symbols(shared_bits, scheme)?;
    for (&c, v) in layout.shared_cells.iter().zip(shared) {
        cells[c] = v;
    }
    Ok(ResourceGrid { layout, cells })
}

/// Everything a grid carries, pulled back out by tag.
#[derive(Debug, Clone, PartialEq)]
pub struct GridContent {
    pub sync: [Vec<Complex64>; 2],
    pub control: [Vec<Complex64>; 2],
    pub control_rs: [Vec<Complex64>; 2],
    /// RS observations in plan order.
    pub rs: Vec<Complex64>,
    /// Shared symbols, symbol-major then subcarrier.
    pub shared: Vec<Complex64>,
}

pub fn demap_grid(grid: &ResourceGrid) -> Result<GridContent> {
    let layout = &grid.layout;
    if grid.cells.len() != layout.n_cells() {
        return Err(PhyError::MalformedGrid(format!(
            "{} cells for a layout of {}",
            grid.cells.len(),
            layout.n_cells()
        )));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&c| grid.cells[c]).collect::<Vec<_>>();
    let n = layout.n_subcarriers();
    Ok(GridContent {
        sync: [pick(&layout.sync_cells[0]), pick(&layout.sync_cells[1])],
        control: [pick(&layout.control_cells[0]), pick(&layout.control_cells[1])],
        control_rs: [pick(&layout.control_rs_cells[0]), pick(&layout.control_rs_cells[1])],
        rs: layout.rs.pilots.iter().map(|p| grid.cells[p.symbol * n + p.subcarrier]).collect(),
        shared: pick(&layout.shared_cells),
    })
}

/// Conformance dump: `#` header lines, then `sym subcarrier tag re im`.
pub fn grid_to_text(grid: &ResourceGrid) -> String {
    let l = &grid.layout;
    let mut out = String::new();
    let _ = writeln!(out, "# direction {}", l.direction.label());
    let _ = writeln!(out, "# bandwidth {}", l.profile.bandwidth.label());
    let _ = writeln!(out, "# ap_id {}", l.ids.ap_id.value());
    let _ = writeln!(out, "# uss_id {}", l.ids.uss_id.value());
    let n = l.n_subcarriers();
    for (c, v) in grid.cells.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {} {}", c / n, c % n, l.tags[c].label(), v.re, v.im);
    }
    out
}

pub fn grid_from_text(text: &str) -> Result<ResourceGrid> {
    let mut header = std::collections::HashMap::new();
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Some(h) = line.strip_prefix('#') {
            let mut it = h.split_whitespace();
            if let (Some(k), Some(v)) = (it.next(), it.next()) {
                header.insert(k.to_string(), v.to_string());
            }
        } else {
            rows.push(line);
        }
    }
    let field = |k: &str| {
        header
            .get(k)
            .cloned()
            .ok_or_else(|| PhyError::Parse(format!("grid dump missing {k}")))
    };
    let parse_num = |s: &str| s.parse::<u16>().map_err(|e| PhyError::Parse(format!("{s:?}: {e}")));
    let direction: Direction = field("direction")?.parse()?;
    let bandwidth: Bandwidth = field("bandwidth")?.parse()?;
    let ids = FrameIds {
        ap_id: AccessPointId::new(parse_num(&field("ap_id")?)?)?,
        uss_id: UssId::new(parse_num(&field("uss_id")?)? as u8)?,
    };
    let layout = Arc::new(GridLayout::new(direction, bandwidth.profile(), ids)?);
    let n = layout.n_subcarriers();
    expect_len("grid dump rows", layout.n_cells(), rows.len())?;
    let mut cells = vec![Complex64::new(0.0, 0.0); layout.n_cells()];
    for row in rows {
        let parts: Vec<&str> = row.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(PhyError::Parse(format!("bad grid row {row:?}")));
        }
        let bad = |e: &dyn std::fmt::Display| PhyError::Parse(format!("bad grid row {row:?}: {e}"));
        let s: usize = parts[0].parse().map_err(|e| bad(&e))?;
        let k: usize = parts[1].parse().map_err(|e| bad(&e))?;
        if s >= SYMBOLS_PER_FRAME || k >= n {
            return Err(PhyError::MalformedGrid(format!("cell ({s}, {k}) outside the grid")));
        }
        if CellTag::from_label(parts[2])? != layout.tag(s, k) {
            return Err(PhyError::MalformedGrid(format!("tag mismatch at ({s}, {k})")));
        }
        let re: f64 = parts[3].parse().map_err(|e| bad(&e))?;
        let im: f64 = parts[4].parse().map_err(|e| bad(&e))?;
        cells[s * n + k] = Complex64::new(re, im);
    }
    ResourceGrid::from_cells(layout, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::CodeRate;
    use crate::framing::control::{Dci, Uci};
    use crate::modem::ModScheme;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ids(ap: u16, uss: u8) -> FrameIds {
        FrameIds {
            ap_id: AccessPointId::new(ap).unwrap(),
            uss_id: UssId::new(uss).unwrap(),
        }
    }

    fn layout(direction: Direction, bw: Bandwidth) -> Arc<GridLayout> {
        Arc::new(GridLayout::new(direction, bw.profile(), ids(11, 5)).unwrap())
    }

    fn control_for(direction: Direction, bw: Bandwidth, scheme: ModScheme) -> ControlInfo {
        match direction {
            Direction::Downlink => ControlInfo::Dci(Dci {
                frame_number: 7,
                code_rate: CodeRate::R1_3,
                modulation: scheme,
                frames_in_tb: 3,
                end_of_payload: false,
                uplink_ss_id: UssId::new(5).unwrap(),
                reserved: 0,
            }),
            Direction::Uplink => ControlInfo::Uci(Uci {
                bandwidth: bw,
                frame_number: 7,
                code_rate: CodeRate::R1_2,
                modulation: scheme,
                frames_in_tb: 0,
                end_of_payload: true,
                reserved: 0,
            }),
        }
    }

    /// Tag counts computed straight from the placement rules.
    fn accounting_oracle(n: usize, rs_per_symbol: usize) -> (usize, usize) {
        let total = 140 * n;
        let sync_symbols = 2 * n;
        let control_core = 2 * 72;
        let rs = 40 * rs_per_symbol;
        let shared = total - sync_symbols - control_core - rs;
        (total, shared)
    }

    #[test]
    fn downlink_accounting() {
        let l = layout(Direction::Downlink, Bandwidth::Bw1p4);
        let (total, shared) = accounting_oracle(72, 12);
        assert_eq!(shared, 9312);
        assert_eq!(l.count(CellTag::Shared), shared);
        assert_eq!(CellTag::ALL.iter().map(|&t| l.count(t)).sum::<usize>(), total);
        assert_eq!(l.count(CellTag::Sync), 124);
        assert_eq!(l.count(CellTag::Null), 20);
        assert_eq!(l.count(CellTag::Control), 96);
        assert_eq!(l.count(CellTag::ControlRs), 48);
        assert_eq!(l.count(CellTag::Rs), 480);
        for s in [6, 76] {
            let row: Vec<CellTag> = (0..72).map(|k| l.tag(s, k)).collect();
            assert_eq!(row.iter().filter(|&&t| t == CellTag::Control).count(), 48);
            assert_eq!(row.iter().filter(|&&t| t == CellTag::ControlRs).count(), 24);
        }
        for s in [5, 75] {
            assert!((5..67).all(|k| l.tag(s, k) == CellTag::Sync));
            assert!((0..5).chain(67..72).all(|k| l.tag(s, k) == CellTag::Null));
        }
        assert_eq!(l.shared_capacity_cells() * 2, 18_624);
    }

    #[test]
    fn uplink_accounting() {
        let l = layout(Direction::Uplink, Bandwidth::Bw1p4);
        assert_eq!(l.count(CellTag::Shared), 9312);
        assert_eq!(l.count(CellTag::Sync), 144);
        assert_eq!(l.count(CellTag::Null), 0);

        let l = layout(Direction::Uplink, Bandwidth::Bw3);
        let (total, shared) = accounting_oracle(180, 30);
        assert_eq!(CellTag::ALL.iter().map(|&t| l.count(t)).sum::<usize>(), total);
        // the 108 cells of each control symbol outside the core band carry data
        assert_eq!(l.count(CellTag::Shared), shared);
        assert_eq!(shared, 23_496);
        for s in [5, 6, 75, 76] {
            for k in 0..180 {
                let t = l.tag(s, k);
                if (54..126).contains(&k) {
                    assert!(matches!(t, CellTag::Sync | CellTag::Control | CellTag::ControlRs));
                } else {
                    assert!(matches!(t, CellTag::Null | CellTag::Shared));
                }
            }
        }
    }

    #[test]
    fn downlink_needs_narrow_band() {
        assert!(GridLayout::new(Direction::Downlink, Bandwidth::Bw3.profile(), ids(0, 0)).is_err());
    }

    #[test]
    fn build_demap_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (direction, bw) in [
            (Direction::Downlink, Bandwidth::Bw1p4),
            (Direction::Uplink, Bandwidth::Bw1p4),
            (Direction::Uplink, Bandwidth::Bw3),
        ] {
            for scheme in [ModScheme::Qpsk, ModScheme::Qam16] {
                let l = layout(direction, bw);
                let control = control_for(direction, bw, scheme);
                let bits: Vec<u8> = (0..l.shared_capacity_cells() * scheme.bits_per_symbol())
                    .map(|_| rng.random_range(0..2))
                    .collect();
                let grid = build_grid(l.clone(), &control, &bits).unwrap();
                let content = demap_grid(&grid).unwrap();
                assert_eq!(content.shared, map_symbols(&bits, scheme).unwrap());
                let cs = build_control_symbols(&control.pack().unwrap()).unwrap();
                assert_eq!(content.control, [cs.clone(), cs]);
                assert_eq!(content.sync[0], l.sync_values());
                assert_eq!(content.control_rs[1], l.control_rs_values());
                assert_eq!(
                    content.rs,
                    l.rs_plan().pilots.iter().map(|p| p.value).collect::<Vec<_>>()
                );
                for (c, v) in grid.cells.iter().enumerate() {
                    assert_eq!(l.tags()[c] == CellTag::Null, v.norm() == 0.0);
                }
                assert!(build_grid(l.clone(), &control, &bits[1..]).is_err());
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let l = layout(Direction::Uplink, Bandwidth::Bw3);
        let control = control_for(Direction::Uplink, Bandwidth::Bw3, ModScheme::Qam16);
        let bits = vec![1u8; l.shared_capacity_cells() * 4];
        let grid = build_grid(l, &control, &bits).unwrap();
        let text = grid_to_text(&grid);
        assert!(text.starts_with("# direction ul\n# bandwidth 3\n# ap_id 11\n# uss_id 5\n"));
        assert_eq!(text.lines().count(), 4 + 25_200);
        assert_eq!(grid_from_text(&text).unwrap(), grid);
        let broken = text.replacen(" sync ", " shared ", 1);
        assert!(grid_from_text(&broken).is_err());
    }
}
