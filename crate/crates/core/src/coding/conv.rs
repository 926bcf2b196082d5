//! Rate-1/2, constraint-length-3 convolutional code with generators (7, 5)
//! octal, and its soft-decision Viterbi decoder.
//!
//! Output bits are interleaved `c0[0] c1[0] c0[1] c1[1] ...`. The encoder
//! starts in the all-zero state; callers terminate it by appending zeros.

use crate::error::{expect_len, Result};

pub const CONV_INPUT_BITS: usize = 48;
pub const CONV_OUTPUT_BITS: usize = 2 * CONV_INPUT_BITS;
/// Zero bits appended after the CRC so the trellis ends in state 0.
pub const TAIL_BITS: usize = 15;

const G0: u8 = 0b111;
const G1: u8 = 0b101;
const N_STATES: usize = 4;

/// Output pair for input `bit` from `state` (= u[t-1]·2 + u[t-2]).
#[inline]
fn branch(state: usize, bit: u8) -> (u8, u8, usize) {
    let reg = ((bit as usize) << 2) | state;
    let c0 = (reg as u8 & G0).count_ones() as u8 & 1;
    let c1 = (reg as u8 & G1).count_ones() as u8 & 1;
    (c0, c1, reg >> 1)
}

/// Encodes any number of bits from the zero state.
pub fn encode_bits(input: &[u8]) -> Vec<u8> {
    let mut state = 0usize;
    let mut out = Vec::with_capacity(2 * input.len());
    for &b in input {
        let (c0, c1, next) = branch(state, b & 1);
        out.push(c0);
        out.push(c1);
        state = next;
    }
    out
}

pub fn conv_encode(input: &[u8]) -> Result<Vec<u8>> {
    expect_len("conv_encode input", CONV_INPUT_BITS, input.len())?;
    Ok(encode_bits(input))
}

/// Maximum-likelihood decode over the 4-state trellis, forced to end in
/// state 0. LLRs are positive when bit 0 is more likely.
///
/// Returns the decoded bits and the surviving path metric (correlation of
/// the path's code bits, mapped 0→+1 and 1→−1, with the LLRs).
pub fn decode_bits(llrs: &[f64]) -> (Vec<u8>, f64) {
    trellis_decode(llrs, true)
}

/// Like [`decode_bits`] but traces back from the best final state, for
/// streams that were not terminated.
pub fn decode_bits_unterminated(llrs: &[f64]) -> (Vec<u8>, f64) {
    trellis_decode(llrs, false)
}

fn trellis_decode(llrs: &[f64], terminated: bool) -> (Vec<u8>, f64) {
    let steps = llrs.len() / 2;
    let mut metric = [f64::NEG_INFINITY; N_STATES];
    metric[0] = 0.0;
    // survivors[t][state] = (previous state, input bit)
    let mut survivors = vec![[(0u8, 0u8); N_STATES]; steps];

    for t in 0..steps {
        let l0 = llrs[2 * t];
        let l1 = llrs[2 * t + 1];
        let mut next = [f64::NEG_INFINITY; N_STATES];
        for state in 0..N_STATES {
            if metric[state] == f64::NEG_INFINITY {
                continue;
            }
            for bit in 0..2u8 {
                let (c0, c1, ns) = branch(state, bit);
                let bm = if c0 == 0 { l0 } else { -l0 } + if c1 == 0 { l1 } else { -l1 };
                let m = metric[state] + bm;
                // strict comparison keeps the lowest-numbered predecessor on ties
                if m > next[ns] {
                    next[ns] = m;
                    survivors[t][ns] = (state as u8, bit);
                }
            }
        }
        metric = next;
    }

    let mut state = if terminated {
        0
    } else {
        (0..N_STATES)
            .max_by(|&a, &b| metric[a].total_cmp(&metric[b]).then(b.cmp(&a)))
            .expect("four states")
    };
    let end_metric = metric[state];
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        let (prev, bit) = survivors[t][state];
        bits[t] = bit;
        state = prev as usize;
    }
    (bits, end_metric)
}

pub fn viterbi_decode(llrs: &[f64]) -> Result<(Vec<u8>, f64)> {
    expect_len("viterbi_decode input", CONV_OUTPUT_BITS, llrs.len())?;
    Ok(decode_bits(llrs))
}
