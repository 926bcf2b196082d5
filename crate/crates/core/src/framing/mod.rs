//! Control records, resource grid assembly, transport segmentation and
//! payload conversion.

pub mod control;
pub mod grid;
pub mod payload;
pub mod transport;

pub use control::{
    build_control_symbols, pack_dci, pack_uci, unpack_dci, unpack_uci, ControlInfo, Dci, Uci,
};
pub use grid::{build_grid, demap_grid, CellTag, FrameIds, GridContent, GridLayout, ResourceGrid};
pub use payload::{bin2re, cipher_apply, re2bin, CipherKey};
pub use transport::{reassemble, segment_transport_block, FrameSegment};
