//! Session-level drivers: loopback, BER sweeps, latency profiling, fixture
//! emission and payload ingest.

pub mod ber;
pub mod fixtures;
pub mod ingest;
pub mod latency;
pub mod loopback;

pub use ber::{ber_sweep, from_csv, to_csv, BerMode, BerPoint, BerRow};
pub use fixtures::emit_fixtures;
pub use ingest::{ingest_payload, load_aux, load_payload, PayloadFormat};
pub use latency::{latency_profile, BlockTiming, LatencyReport, Occurrence, ProfileMode};
pub use loopback::{run_loopback, LoopbackReport, BIT_EXACT};
