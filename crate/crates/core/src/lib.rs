//! Baseband PHY simulator for the uplink and downlink frame structures of a
//! cloud-connected hearing-aid link.
//!
//! The crate covers the whole physical layer: frame numerology, channel
//! coding, OFDM modulation, reference and synchronization sequences, resource
//! grid assembly, a channel impairment model and the matching receiver. The
//! [`harness`] module wires these into the loopback, BER sweep, latency
//! profiling and fixture commands exposed by the `hearlink` binary.

pub mod channel_sim;
pub mod coding;
pub mod config;
pub mod error;
pub mod framing;
pub mod harness;
pub mod link;
pub mod modem;
pub mod numerology;
pub mod par;
pub mod receiver;
pub mod signals;

pub use error::{PhyError, Result};
pub use num_complex::Complex64;
