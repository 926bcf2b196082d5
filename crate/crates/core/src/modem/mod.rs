//! Constellation mapping, OFDM modulation and the IQ capture format.

pub mod constellation;
pub mod iq;
pub mod ofdm;

pub use constellation::{demap_llrs, map_symbols, ModScheme};
pub use iq::IqSamples;
pub use ofdm::{ofdm_demodulate, ofdm_modulate, OfdmModem};
