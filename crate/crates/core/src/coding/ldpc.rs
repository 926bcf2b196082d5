//! Rate-1/3 quasi-cyclic LDPC codes.
//!
//! Every code is described by a base matrix of `2·kb` rows and `3·kb`
//! columns, lifted by circulant permutations of size [`LIFT_SIZE`]. The first
//! `kb` base columns carry information bits. The parity part has the
//! dual-diagonal layout used by many QC codes: the first parity column has
//! weight 3 with shifts (1, 0, 1) on the first, middle and last rows, and the
//! remaining parity columns form a staircase of identity blocks. This keeps
//! the parity-check matrix in approximate lower-triangular form with a gap of
//! one block row, so systematic encoding is a single accumulation pass.
//!
//! Information columns are placed by progressive edge growth on the base
//! graph and their shifts are drawn from a ChaCha stream seeded with
//! [`CONSTRUCTION_SEED`], rejecting shifts that close a 4-cycle in the lifted
//! graph. The same target size always produces the same matrix.
//!
//! Decoding is normalized min-sum with a flooding schedule.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{expect_len, PhyError, Result};

pub const LIFT_SIZE: usize = 27;
pub const CONSTRUCTION_SEED: u64 = 0x5EED;
pub const MIN_SUM_SCALE: f64 = 0.75;
pub const DEFAULT_MAX_ITERS: usize = 25;
/// Base columns above this are rejected as infeasible.
pub const MAX_INFO_BLOCKS: usize = 512;

const INFO_COLUMN_DEGREE: usize = 3;
const SHIFT_ATTEMPTS: usize = 256;

/// One nonzero circulant of the base matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaseEntry {
    pub row: usize,
    pub col: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Encoder {
    /// Accumulator encoder for codes built by [`ldpc_build`].
    Structured { base: Vec<BaseEntry> },
    /// Dense parity generator: row `r` holds the info bits feeding parity `r`.
    Dense { rows: Vec<Vec<u64>> },
}

/// An (n, k) binary LDPC code with a systematic encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    k: usize,
    /// Column indices of each parity check.
    checks: Vec<Vec<u32>>,
    encoder: Encoder,
}

/// Result of [`ldpc_decode`].
#[derive(Debug, Clone, PartialEq)]
pub struct LdpcDecoded {
    pub info: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

fn lift(base: &[BaseEntry], mb: usize, z: usize) -> Vec<Vec<u32>> {
    let mut checks = vec![Vec::new(); mb * z];
    for e in base {
        for r in 0..z {
            checks[e.row * z + r].push((e.col * z + (r + e.shift) % z) as u32);
        }
    }
    for row in &mut checks {
        row.sort_unstable();
    }
    checks
}

/// Parity part of the base matrix, which depends only on its size.
fn parity_entries(kb: usize, mb: usize) -> Vec<BaseEntry> {
    let mid = mb / 2;
    let mut entries = vec![
        BaseEntry { row: 0, col: kb, shift: 1 },
        BaseEntry { row: mid, col: kb, shift: 0 },
        BaseEntry { row: mb - 1, col: kb, shift: 1 },
    ];
    for j in 1..mb {
        entries.push(BaseEntry { row: j - 1, col: kb + j, shift: 0 });
        entries.push(BaseEntry { row: j, col: kb + j, shift: 0 });
    }
    entries
}

/// Progressive edge growth for the information columns of the base graph.
fn peg_info_columns(kb: usize, mb: usize, parity: &[BaseEntry], rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let nb = kb + mb;
    let mut col_checks: Vec<Vec<usize>> = vec![Vec::new(); nb];
    let mut check_cols: Vec<Vec<usize>> = vec![Vec::new(); mb];
    for e in parity {
        col_checks[e.col].push(e.row);
        check_cols[e.row].push(e.col);
    }
    let degree = INFO_COLUMN_DEGREE.min(mb);
    let mut edges = Vec::with_capacity(kb * degree);

    for col in 0..kb {
        for _ in 0..degree {
            // BFS depth of every check from this column; None = unreachable.
            let mut depth: Vec<Option<usize>> = vec![None; mb];
            let mut seen_col = vec![false; nb];
            let mut queue = VecDeque::new();
            seen_col[col] = true;
            for &c in &col_checks[col] {
                depth[c] = Some(0);
                queue.push_back(c);
            }
            while let Some(c) = queue.pop_front() {
                let d = depth[c].unwrap();
                for &v in &check_cols[c] {
                    if seen_col[v] {
                        continue;
                    }
                    seen_col[v] = true;
                    for &c2 in &col_checks[v] {
                        if depth[c2].is_none() {
                            depth[c2] = Some(d + 1);
                            queue.push_back(c2);
                        }
                    }
                }
            }
            let unreached: Vec<usize> = (0..mb).filter(|&c| depth[c].is_none()).collect();
            let candidates = if !unreached.is_empty() {
                unreached
            } else {
                let far = depth.iter().flatten().copied().max().unwrap_or(0);
                (0..mb)
                    .filter(|&c| depth[c] == Some(far) && !col_checks[col].contains(&c))
                    .collect()
            };
            let candidates = if candidates.is_empty() {
                (0..mb).filter(|c| !col_checks[col].contains(c)).collect()
            } else {
                candidates
            };
            let min_deg = candidates.iter().map(|&c| check_cols[c].len()).min().unwrap();
            let lightest: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| check_cols[c].len() == min_deg)
                .collect();
            let chosen = lightest[rng.random_range(0..lightest.len())];
            col_checks[col].push(chosen);
            check_cols[chosen].push(col);
            edges.push((chosen, col));
        }
    }
    edges
}

/// True when placing `cand` would close a length-4 cycle in the lifted graph.
fn closes_four_cycle(cand: &BaseEntry, placed: &[BaseEntry], z: usize) -> bool {
    let at = |row: usize, col: usize| placed.iter().find(|e| e.row == row && e.col == col);
    for a in placed.iter().filter(|e| e.row == cand.row && e.col != cand.col) {
        for b in placed.iter().filter(|e| e.col == cand.col && e.row != cand.row) {
            if let Some(c) = at(b.row, a.col) {
                let sum = cand.shift as i64 - a.shift as i64 + c.shift as i64 - b.shift as i64;
                if sum.rem_euclid(z as i64) == 0 {
                    return true;
                }
            }
        }
    }
    false
}

/// Builds the rate-1/3 code whose information length is the smallest
/// multiple of the lift size that holds `target_info_bits`.
pub fn ldpc_build(target_info_bits: usize) -> Result<LdpcCode> {
    if target_info_bits == 0 {
        return Err(PhyError::Invalid("LDPC target size must be positive".into()));
    }
    let z = LIFT_SIZE;
    // Two info blocks minimum so the weight-3 parity column has a distinct middle row.
    let kb = target_info_bits.div_ceil(z).max(2);
    if kb > MAX_INFO_BLOCKS {
        return Err(PhyError::Invalid(format!(
            "LDPC size infeasible: {target_info_bits} info bits exceeds {}",
            MAX_INFO_BLOCKS * z
        )));
    }
    let mb = 2 * kb;
    let mut rng = ChaCha8Rng::seed_from_u64(CONSTRUCTION_SEED);

    let mut base = parity_entries(kb, mb);
    let info_edges = peg_info_columns(kb, mb, &base, &mut rng);
    for (row, col) in info_edges {
        let mut entry = BaseEntry { row, col, shift: 0 };
        for _ in 0..SHIFT_ATTEMPTS {
            entry.shift = rng.random_range(0..z);
            if !closes_four_cycle(&entry, &base, z) {
                break;
            }
        }
        base.push(entry);
    }
    base.sort_by_key(|e| (e.row, e.col));

    Ok(LdpcCode {
        n: 3 * kb * z,
        k: kb * z,
        checks: lift(&base, mb, z),
        encoder: Encoder::Structured { base },
    })
}

impl LdpcCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_checks(&self) -> usize {
        self.checks.len()
    }

    /// Column indices of each parity-check row.
    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    pub fn column_weights(&self) -> Vec<usize> {
        let mut w = vec![0; self.n];
        for row in &self.checks {
            for &c in row {
                w[c as usize] += 1;
            }
        }
        w
    }

    /// True when every parity check is satisfied.
    pub fn is_codeword(&self, bits: &[u8]) -> bool {
        bits.len() == self.n
            && self
                .checks
                .iter()
                .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ bits[c as usize]) == 0)
    }

    /// Sparse text form: one line per check, `"index: col col ..."`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# ldpc n={} k={}", self.n, self.k);
        for (i, row) in self.checks.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for c in row {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`LdpcCode::to_text`] output (or any parity-check matrix in the
    /// same format whose last `rows` columns form an invertible square). The
    /// first `n - rows` columns become the systematic part, encoded with a
    /// dense generator obtained by Gaussian elimination.
    pub fn from_text(text: &str) -> Result<LdpcCode> {
        let mut n: Option<usize> = None;
        let mut rows: Vec<(usize, Vec<u32>)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for tok in header.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("n=") {
                        n = Some(v.parse().map_err(|_| PhyError::Parse(format!("bad n in {line:?}")))?);
                    }
                }
                continue;
            }
            let (idx, cols) = line
                .split_once(':')
                .ok_or_else(|| PhyError::Parse(format!("missing ':' in {line:?}")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| PhyError::Parse(format!("bad check index in {line:?}")))?;
            let mut cols: Vec<u32> = cols
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|_| PhyError::Parse(format!("bad column {t:?}"))))
                .collect::<Result<_>>()?;
            cols.sort_unstable();
            cols.dedup();
            rows.push((idx, cols));
        }
        rows.sort_by_key(|(i, _)| *i);
        for (pos, (i, _)) in rows.iter().enumerate() {
            if *i != pos {
                return Err(PhyError::Parse(format!("check indices not contiguous at {i}")));
            }
        }
        let checks: Vec<Vec<u32>> = rows.into_iter().map(|(_, c)| c).collect();
        let max_col = checks.iter().flatten().map(|&c| c as usize + 1).max().unwrap_or(0);
        let n = n.unwrap_or(max_col);
        if max_col > n || checks.is_empty() || checks.len() >= n {
            return Err(PhyError::Parse("inconsistent matrix dimensions".into()));
        }
        let k = n - checks.len();
        let rows = dense_generator(&checks, n, k)?;
        Ok(LdpcCode {
            n,
            k,
            checks,
            encoder: Encoder::Dense { rows },
        })
    }
}

/// Solves H = [H0 | H1] for the parity generator H1^{-1}·H0 over GF(2).
fn dense_generator(checks: &[Vec<u32>], n: usize, k: usize) -> Result<Vec<Vec<u64>>> {
    let m = checks.len();
    let words = n.div_ceil(64);
    // Column order inside the working matrix: parity columns first, then info.
    let remap = |c: usize| if c >= k { c - k } else { c + m };
    let mut a: Vec<Vec<u64>> = checks
        .iter()
        .map(|row| {
            let mut bits = vec![0u64; words];
            for &c in row {
                let t = remap(c as usize);
                bits[t / 64] ^= 1 << (t % 64);
            }
            bits
        })
        .collect();
    for col in 0..m {
        let pivot = (col..m)
            .find(|&r| a[r][col / 64] >> (col % 64) & 1 == 1)
            .ok_or_else(|| PhyError::Invalid("parity part of H is not invertible".into()))?;
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && row[col / 64] >> (col % 64) & 1 == 1 {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x ^= y;
                }
            }
        }
    }
    // Row r now reads p_r + Σ G[r][i] u_i = 0; keep the info part packed.
    let info_words = k.div_ceil(64);
    Ok(a.into_iter()
        .map(|row| {
            let mut g = vec![0u64; info_words];
            for i in 0..k {
                let t = i + m;
                if row[t / 64] >> (t % 64) & 1 == 1 {
                    g[i / 64] |= 1 << (i % 64);
                }
            }
            g
        })
        .collect())
}

/// Systematic encoding: the codeword starts with `info` verbatim.
pub fn ldpc_encode(code: &LdpcCode, info: &[u8]) -> Result<Vec<u8>> {
    expect_len("ldpc_encode info", code.k, info.len())?;
    let parity = match &code.encoder {
        Encoder::Structured { base } => structured_parity(base, code.k, info),
        Encoder::Dense { rows } => {
            let mut packed = vec![0u64; code.k.div_ceil(64)];
            for (i, &b) in info.iter().enumerate() {
                if b & 1 == 1 {
                    packed[i / 64] |= 1 << (i % 64);
                }
            }
            rows.iter()
                .map(|g| {
                    let ones: u32 = g.iter().zip(&packed).map(|(a, b)| (a & b).count_ones()).sum();
                    (ones & 1) as u8
                })
                .collect()
        }
    };
    let mut cw = Vec::with_capacity(code.n);
    cw.extend(info.iter().map(|b| b & 1));
    cw.extend(parity);
    Ok(cw)
}

fn structured_parity(base: &[BaseEntry], k: usize, info: &[u8]) -> Vec<u8> {
    let z = LIFT_SIZE;
    let kb = k / z;
    let mb = 2 * kb;
    // (P^s x)[r] = x[(r + s) mod z]
    let rotate_into = |dst: &mut [u8], src: &[u8], shift: usize| {
        for r in 0..z {
            dst[r] ^= src[(r + shift) % z];
        }
    };
    let mut lambda = vec![vec![0u8; z]; mb];
    for e in base.iter().filter(|e| e.col < kb) {
        rotate_into(&mut lambda[e.row], &info[e.col * z..(e.col + 1) * z], e.shift);
    }
    let mut p = vec![vec![0u8; z]; mb];
    for l in &lambda {
        for r in 0..z {
            p[0][r] ^= l[r];
        }
    }
    let mid = mb / 2;
    let p0 = p[0].clone();
    let mut p1 = lambda[0].clone();
    rotate_into(&mut p1, &p0, 1);
    p[1] = p1;
    for i in 1..mb - 1 {
        let mut next = lambda[i].clone();
        for r in 0..z {
            next[r] ^= p[i][r];
            if i == mid {
                next[r] ^= p0[r];
            }
        }
        p[i + 1] = next;
    }
    p.concat()
}

/// Normalized min-sum decoding. Returns the systematic part of the best
/// hard decision; `converged` is set only when every check is satisfied and
/// no systematic posterior is exactly zero. Parity posteriors may still be
/// zero (punctured bits), since a zero syndrome pins them to the encoding of
/// the systematic part anyway.
pub fn ldpc_decode(code: &LdpcCode, llrs: &[f64], max_iters: usize) -> Result<LdpcDecoded> {
    expect_len("ldpc_decode llrs", code.n, llrs.len())?;
    let n = code.n;
    let checks = &code.checks;
    let n_edges: usize = checks.iter().map(Vec::len).sum();
    let mut c2v = vec![0.0f64; n_edges];
    let mut posterior = llrs.to_vec();
    let mut hard = vec![0u8; n];

    let satisfied = |post: &[f64], hard: &mut [u8]| -> bool {
        let mut resolved = true;
        for (i, (h, &l)) in hard.iter_mut().zip(post).enumerate() {
            *h = (l < 0.0) as u8;
            resolved &= i >= code.k || l != 0.0;
        }
        resolved
            && checks
                .iter()
                .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ hard[c as usize]) == 0)
    };

    let mut converged = satisfied(&posterior, &mut hard);
    let mut iterations = 0;
    let mut v2c = Vec::new();
    while !converged && iterations < max_iters {
        iterations += 1;
        let mut edge = 0;
        for row in checks {
            v2c.clear();
            v2c.extend(
                row.iter()
                    .enumerate()
                    .map(|(i, &c)| posterior[c as usize] - c2v[edge + i]),
            );
            let mut sign = 1.0f64;
            let (mut min1, mut min2, mut argmin) = (f64::INFINITY, f64::INFINITY, 0);
            for (i, &m) in v2c.iter().enumerate() {
                if m < 0.0 {
                    sign = -sign;
                }
                let a = m.abs();
                if a < min1 {
                    min2 = min1;
                    min1 = a;
                    argmin = i;
                } else if a < min2 {
                    min2 = a;
                }
            }
            for (i, &m) in v2c.iter().enumerate() {
                let mag = if i == argmin { min2 } else { min1 };
                let s = if m < 0.0 { -sign } else { sign };
                c2v[edge + i] = MIN_SUM_SCALE * s * mag;
            }
            edge += row.len();
        }
        posterior.copy_from_slice(llrs);
        let mut edge = 0;
        for row in checks {
            for &c in row {
                posterior[c as usize] += c2v[edge];
                edge += 1;
            }
        }
        converged = satisfied(&posterior, &mut hard);
    }
    if !converged {
        for (h, &l) in hard.iter_mut().zip(&posterior) {
            *h = (l < 0.0) as u8;
        }
    }
    hard.truncate(code.k);
    Ok(LdpcDecoded {
        info: hard,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr_free::gaussian;

    /// Box-Muller normal source for test noise.
    mod rand_distr_free {
        use rand::Rng;
        pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }

    fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
        (0..len).map(|_| rng.random_range(0..2)).collect()
    }

    /// Dense GF(2) rank by straightforward elimination, independent of the
    /// bit-packed generator code.
    fn rank_oracle(code: &LdpcCode) -> usize {
        let mut rows: Vec<Vec<u8>> = code
            .checks()
            .iter()
            .map(|r| {
                let mut v = vec![0u8; code.n()];
                for &c in r {
                    v[c as usize] = 1;
                }
                v
            })
            .collect();
        let mut rank = 0;
        for col in 0..code.n() {
            if let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] == 1) {
                rows.swap(rank, p);
                let pivot = rows[rank].clone();
                for (r, row) in rows.iter_mut().enumerate() {
                    if r != rank && row[col] == 1 {
                        for (x, y) in row.iter_mut().zip(&pivot) {
                            *x ^= y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn dimensions_rank_and_weights() {
        let code = ldpc_build(432).unwrap();
        assert_eq!((code.k(), code.n(), code.n_checks()), (432, 1296, 864));
        assert_eq!(rank_oracle(&code), 864);
        assert!(code.column_weights().iter().all(|&w| w >= 2));
        assert_eq!(ldpc_build(400).unwrap().k(), 405);
    }

    #[test]
    fn deterministic_construction() {
        assert_eq!(ldpc_build(432).unwrap(), ldpc_build(432).unwrap());
        assert_eq!(ldpc_build(432).unwrap().to_text(), ldpc_build(432).unwrap().to_text());
    }

    #[test]
    fn infeasible_sizes() {
        assert!(ldpc_build(0).is_err());
        assert!(ldpc_build(MAX_INFO_BLOCKS * LIFT_SIZE + 1).is_err());
        let small = ldpc_build(1).unwrap();
        assert_eq!((small.k(), small.n()), (54, 162));
        assert_eq!(rank_oracle(&small), 108);
    }

    #[test]
    fn encode_linear_and_valid() {
        let code = ldpc_build(432).unwrap();
        let zero = ldpc_encode(&code, &vec![0; 432]).unwrap();
        assert!(zero.iter().all(|&b| b == 0));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_bits(&mut rng, 432);
            let b = random_bits(&mut rng, 432);
            let ca = ldpc_encode(&code, &a).unwrap();
            let cb = ldpc_encode(&code, &b).unwrap();
            assert_eq!(&ca[..432], a.as_slice());
            assert!(code.is_codeword(&ca));
            let sum: Vec<u8> = ca.iter().zip(&cb).map(|(x, y)| x ^ y).collect();
            assert!(code.is_codeword(&sum));
        }
        assert!(ldpc_encode(&code, &[0; 431]).is_err());
    }

    #[test]
    fn text_round_trip_and_dense_encoder_agree() {
        let code = ldpc_build(432).unwrap();
        let parsed = LdpcCode::from_text(&code.to_text()).unwrap();
        assert_eq!(parsed.checks(), code.checks());
        assert_eq!((parsed.n(), parsed.k()), (1296, 432));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let info = random_bits(&mut rng, 432);
            assert_eq!(ldpc_encode(&parsed, &info).unwrap(), ldpc_encode(&code, &info).unwrap());
        }
        assert!(LdpcCode::from_text("0: 1 2\nx").is_err());
    }

    #[test]
    fn noiseless_decode() {
        let code = ldpc_build(432).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let info = random_bits(&mut rng, 432);
        let cw = ldpc_encode(&code, &info).unwrap();
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
        let out = ldpc_decode(&code, &llr, DEFAULT_MAX_ITERS).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 1);
        assert_eq!(out.info, info);
    }

    #[test]
    fn zero_llrs_never_converge() {
        let code = ldpc_build(432).unwrap();
        let out = ldpc_decode(&code, &vec![0.0; 1296], DEFAULT_MAX_ITERS).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, DEFAULT_MAX_ITERS);
        assert!(ldpc_decode(&code, &[0.0; 10], 5).is_err());
    }

    #[test]
    fn awgn_at_six_db() {
        // BPSK per coded bit at Es/N0 = 6 dB: sigma^2 = 1 / (2 Es/N0).
        let code = ldpc_build(432).unwrap();
        let es_n0 = 10f64.powf(0.6);
        let sigma2 = 1.0 / (2.0 * es_n0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut failures = 0;
        for _ in 0..1000 {
            let info = random_bits(&mut rng, 432);
            let cw = ldpc_encode(&code, &info).unwrap();
            let llr: Vec<f64> = cw
                .iter()
                .map(|&b| {
                    let y = (1.0 - 2.0 * b as f64) + sigma2.sqrt() * gaussian(&mut rng);
                    2.0 * y / sigma2
                })
                .collect();
            let out = ldpc_decode(&code, &llr, DEFAULT_MAX_ITERS).unwrap();
            if out.info != info {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }
}
