//! Fractional carrier frequency offset from cyclic-prefix correlation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel_sim::rotate;
use crate::error::{expect_len, Result};
use crate::framing::ResourceGrid;
use crate::numerology::{BandwidthProfile, SYMBOLS_PER_FRAME, SYMBOLS_PER_SLOT};
use crate::signals::SYNC_SYMBOLS;

/// Sums `conj(cp[n])·r[n + N]` over every CP sample of the frame; the angle of
/// the sum is `2π·f·N/fs`. Unambiguous for |f| below half a subcarrier.
pub fn estimate_cfo(rx_frame: &[Complex64], profile: &BandwidthProfile) -> Result<f64> {
    expect_len("cfo input frame", profile.frame_sample_count(), rx_frame.len())?;
    let n = profile.fft_size;
    let mut acc = Complex64::new(0.0, 0.0);
    for s in 0..SYMBOLS_PER_FRAME {
        let start = profile.symbol_offset(s);
        for i in start..start + profile.cp_of(s) {
            acc += rx_frame[i].conj() * rx_frame[i + n];
        }
    }
    Ok(acc.arg() * profile.sampling_rate as f64 / (2.0 * PI * n as f64))
}

fn wrap_phase(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Residual CFO left after a coarse correction, refined in two steps on the
/// demodulated grid.
///
/// First, RS pilots one slot (0.5 ms) apart on the same subcarrier give an
/// estimate unambiguous to ±1 kHz. Then the two sync symbols and the two
/// control RS copies, which repeat identical values 70 symbols (5 ms) apart,
/// sharpen it; their ±100 Hz ambiguity is resolved by the first step. Both
/// steps compare pilots on the same subcarrier, so delay spread within the CP
/// does not bias them.
pub fn residual_cfo(grid: &ResourceGrid) -> f64 {
    let layout = &grid.layout;
    let p = &layout.profile;
    let fs = p.sampling_rate as f64;
    let n = layout.n_subcarriers();

    let mut ls = vec![None; grid.cells.len()];
    for q in &layout.rs_plan().pilots {
        ls[q.symbol * n + q.subcarrier] = Some(grid.get(q.symbol, q.subcarrier) / q.value);
    }
    let mut slot_acc = Complex64::new(0.0, 0.0);
    for (i, a) in ls.iter().enumerate() {
        if let (Some(a), Some(Some(b))) = (a, ls.get(i + SYMBOLS_PER_SLOT * n)) {
            slot_acc += a.conj() * b;
        }
    }
    let slot_dt = (p.symbol_offset(SYMBOLS_PER_SLOT) - p.symbol_offset(0)) as f64 / fs;
    let coarse = slot_acc.arg() / (2.0 * PI * slot_dt);

    let mut acc = Complex64::new(0.0, 0.0);
    for pair in [layout.sync_cells(), layout.control_rs_cells()] {
        for (&a, &b) in pair[0].iter().zip(&pair[1]) {
            acc += grid.cells[a].conj() * grid.cells[b];
        }
    }
    let [s0, s1] = SYNC_SYMBOLS;
    let dt = (p.symbol_offset(s1) - p.symbol_offset(s0)) as f64 / fs;
    let delta = wrap_phase(acc.arg() - 2.0 * PI * coarse * dt);
    coarse + delta / (2.0 * PI * dt)
}

/// Multiplies sample `n` by `exp(−j2π·cfo·n/fs)`.
pub fn correct_cfo(samples: &[Complex64], cfo_hz: f64, sample_rate: f64) -> Vec<Complex64> {
    let mut out = samples.to_vec();
    rotate(&mut out, -cfo_hz, sample_rate);
    out
}
