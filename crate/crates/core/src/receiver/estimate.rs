//! Channel estimation from the DRS/URS lattice, and MMSE equalization.
//!
//! Pilot LS estimates `y/p` are fitted jointly, over the whole frame, to a
//! short impulse response whose taps may drift linearly in time:
//!
//! ```text
//! H(s, k) = Σ_d (a_d + b_d·t_s)·exp(−j2π·bin(k)·d/N)
//! ```
//!
//! Delays run from −2 (a timing lock slightly past the first path) to one
//! below the short CP. Neighbouring delays are nearly collinear over the
//! occupied band, so the model is grown greedily: columns are added in order
//! of correlation with the residual while the newest coefficient stays
//! significant (|x|² > 16·σ²·[(AᴴA)⁻¹]_ii, σ² from the full fit). Smooth
//! channels end up with a handful of terms instead of the full per-pilot
//! noise.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{expect_len, PhyError, Result};
use crate::framing::ResourceGrid;
use crate::numerology::{BandwidthProfile, SYMBOLS_PER_FRAME};
use crate::signals::RsPlan;

const MIN_DELAY: i64 = -2;
const SIGNIFICANCE: f64 = 16.0;
const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    /// Symbol-major gains, one per grid cell.
    pub gains: Vec<Complex64>,
    pub noise_var: f64,
    pub n_subcarriers: usize,
}

impl ChannelEstimate {
    pub fn get(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.gains[symbol * self.n_subcarriers + subcarrier]
    }
}

fn time_coord(symbol: usize) -> f64 {
    let mid = (SYMBOLS_PER_FRAME - 1) as f64 / 2.0;
    (symbol as f64 - mid) / mid
}

struct Basis {
    delays: Vec<i64>,
    fft_size: f64,
    time_terms: bool,
}

impl Basis {
    fn new(profile: &BandwidthProfile, time_terms: bool) -> Self {
        Basis {
            delays: (MIN_DELAY..profile.cp_short as i64).collect(),
            fft_size: profile.fft_size as f64,
            time_terms,
        }
    }

    fn order(&self) -> usize {
        if self.time_terms {
            2
        } else {
            1
        }
    }

    fn n_columns(&self) -> usize {
        self.order() * self.delays.len()
    }

    /// Column `j`: delay `j / order`, time power `j % order`.
    fn value(&self, j: usize, bin: i64, t: f64) -> Complex64 {
        let d = self.delays[j / self.order()];
        let phase = Complex64::from_polar(1.0, -2.0 * PI * (bin * d) as f64 / self.fft_size);
        if j.is_multiple_of(self.order()) {
            phase
        } else {
            phase * t
        }
    }
}

struct Fit {
    columns: Vec<usize>,
    coefs: DVector<Complex64>,
    inv_diag: Vec<f64>,
    rss: f64,
}

fn least_squares(design: &DMatrix<Complex64>, obs: &DVector<Complex64>, columns: &[usize]) -> Result<Fit> {
    let a = design.select_columns(columns);
    let gram = a.adjoint() * &a;
    let chol = gram
        .cholesky()
        .ok_or_else(|| PhyError::Invalid("pilot layout cannot resolve the channel model".into()))?;
    let coefs = chol.solve(&(a.adjoint() * obs));
    let inverse = chol.inverse();
    let residual = obs - &a * &coefs;
    Ok(Fit {
        columns: columns.to_vec(),
        inv_diag: (0..columns.len()).map(|i| inverse[(i, i)].re).collect(),
        coefs,
        rss: residual.norm_squared(),
    })
}

fn noise_of(fit: &Fit, n_obs: usize) -> f64 {
    let dof = n_obs.saturating_sub(fit.columns.len()).max(1);
    (fit.rss / dof as f64).max(NOISE_FLOOR)
}

/// Greedy forward selection: repeatedly add the column best aligned with the
/// current residual, refit, and stop once the newest coefficient is no longer
/// significant against `sigma2`.
fn forward_select(design: &DMatrix<Complex64>, obs: &DVector<Complex64>, sigma2: f64) -> Result<Fit> {
    let m = design.ncols();
    let norms: Vec<f64> = (0..m).map(|j| design.column(j).norm_squared()).collect();
    let mut kept: Vec<usize> = Vec::new();
    let mut fit: Option<Fit> = None;
    let mut residual = obs.clone();
    while kept.len() < m {
        let next = (0..m)
            .filter(|j| !kept.contains(j))
            .map(|j| (j, design.column(j).dotc(&residual).norm_sqr() / norms[j]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j)
            .expect("a column remains");
        let mut trial_cols = kept.clone();
        trial_cols.push(next);
        let trial = match least_squares(design, obs, &trial_cols) {
            Ok(t) => t,
            Err(_) if fit.is_some() => break,
            Err(e) => return Err(e),
        };
        let last = trial_cols.len() - 1;
        let z = trial.coefs[last].norm_sqr() / (sigma2 * trial.inv_diag[last]);
        if fit.is_some() && z <= SIGNIFICANCE {
            break;
        }
        residual = obs - design.select_columns(&trial_cols) * &trial.coefs;
        kept = trial_cols;
        fit = Some(trial);
    }
    Ok(fit.expect("at least one column is fitted"))
}

/// Fitted frequency response: evaluate at any (signed bin, time coordinate).
pub(crate) struct ResponseModel {
    basis: Basis,
    fit: Fit,
    pub noise_var: f64,
}

impl ResponseModel {
    pub fn eval(&self, bin: i64, t: f64) -> Complex64 {
        self.fit
            .columns
            .iter()
            .zip(self.fit.coefs.iter())
            .map(|(&j, &c)| c * self.basis.value(j, bin, t))
            .sum()
    }
}

/// Fits pilot LS values `ls[i]` seen at `(bin, t) = points[i]`. Without time
/// terms the response is constant over time. Needs more pilots than model
/// columns.
pub(crate) fn fit_response(
    profile: &BandwidthProfile,
    points: &[(i64, f64)],
    ls: &[Complex64],
    time_terms: bool,
) -> Result<ResponseModel> {
    let basis = Basis::new(profile, time_terms);
    let m = basis.n_columns();
    let p = points.len();
    if p <= m {
        return Err(PhyError::Invalid(format!("{p} pilots cannot fit a {m}-term channel model")));
    }
    let design = DMatrix::from_fn(p, m, |i, j| basis.value(j, points[i].0, points[i].1));
    let obs = DVector::from_column_slice(ls);
    let all: Vec<usize> = (0..m).collect();
    let sigma2 = noise_of(&least_squares(&design, &obs, &all)?, p);
    let fit = forward_select(&design, &obs, sigma2)?;
    let noise_var = noise_of(&fit, p);
    Ok(ResponseModel { basis, fit, noise_var })
}

pub fn estimate_channel(grid_obs: &ResourceGrid, plan: &RsPlan) -> Result<ChannelEstimate> {
    if plan.is_empty() {
        return Err(PhyError::Invalid("no pilots to estimate the channel from".into()));
    }
    let profile = *grid_obs.profile();
    let n_sub = profile.n_data_subcarriers;
    let bins: Vec<i64> = (0..n_sub).map(|k| profile.signed_bin(k)).collect();
    let points: Vec<(i64, f64)> = plan
        .pilots
        .iter()
        .map(|q| (bins[q.subcarrier], time_coord(q.symbol)))
        .collect();
    let ls: Vec<Complex64> = plan
        .pilots
        .iter()
        .map(|q| grid_obs.get(q.symbol, q.subcarrier) / q.value)
        .collect();
    let model = fit_response(&profile, &points, &ls, true)?;

    let mut gains = Vec::with_capacity(SYMBOLS_PER_FRAME * n_sub);
    for s in 0..SYMBOLS_PER_FRAME {
        let t = time_coord(s);
        gains.extend(bins.iter().map(|&bin| model.eval(bin, t)));
    }
    Ok(ChannelEstimate {
        gains,
        noise_var: model.noise_var,
        n_subcarriers: n_sub,
    })
}

/// Per-cell MMSE scaling `conj(h)·y / (|h|² + noise_var)`.
pub fn equalize(symbols: &[Complex64], gains: &[Complex64], noise_var: f64) -> Result<Vec<Complex64>> {
    expect_len("equalizer gains", symbols.len(), gains.len())?;
    Ok(symbols
        .iter()
        .zip(gains)
        .map(|(&y, &h)| {
            let d = h.norm_sqr() + noise_var;
            if d > 0.0 {
                h.conj() * y / d
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect())
}
