//! The ten acceptance criteria, each checked against an oracle computed here
//! and each reporting one PASS/FAIL line.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use hearlink_phy::channel_sim::{apply_channel, complex_noise, ChannelConfig, Tap};
use hearlink_phy::coding::conv::{decode_bits_unterminated, encode_bits};
use hearlink_phy::coding::crc::crc8;
use hearlink_phy::coding::{crc8_append, crc8_check, ldpc_build, ldpc_decode, ldpc_encode, CodeRate};
use hearlink_phy::config::{PayloadSource, SessionConfig};
use hearlink_phy::framing::control::control_chain;
use hearlink_phy::framing::{CellTag, FrameIds, FrameSegment, GridLayout, ResourceGrid};
use hearlink_phy::harness::{ber_sweep, latency_profile, run_loopback, BerMode, Occurrence, ProfileMode};
use hearlink_phy::link::Link;
use hearlink_phy::modem::{IqSamples, ModScheme};
use hearlink_phy::numerology::{Bandwidth, Direction, SYMBOLS_PER_FRAME};
use hearlink_phy::par::Execution;
use hearlink_phy::receiver::{detect_frame, estimate_channel};
use hearlink_phy::signals::{AccessPointId, UssId};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PAR: Execution = Execution::Parallel;
const SEQ: Execution = Execution::Sequential;

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn session(direction: Direction, bandwidth: Bandwidth, ap_id: u16) -> SessionConfig {
    SessionConfig {
        direction,
        bandwidth,
        ap_id,
        ..SessionConfig::default()
    }
}

/// One frame of random payload for the session.
fn frame_iq(link: &Link, seed: u64) -> (ResourceGrid, IqSamples) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = link.info_capacity();
    let seg = FrameSegment {
        bits: random_bits(&mut rng, k),
        frames_in_tb: 0,
        end_of_payload: true,
        payload_bits: k,
    };
    let grid = link.frame_grid(0, &seg, SEQ).unwrap();
    let samples = link.modem().modulate_frame(&grid.columns(), SEQ).unwrap();
    (grid, IqSamples::new(samples, link.profile().sampling_rate as f64))
}

/// Q(x) = ½·erfc(x/√2).
fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

// 1. Numerology exactness.
fn numerology() -> String {
    // (rate Hz, FFT, data, null, long CP, short CP) at 15 kHz spacing
    let table = [
        (Bandwidth::Bw1p4, 1_920_000u32, 128usize, 72usize, 56usize, 10usize, 9usize, 19_200usize),
        (Bandwidth::Bw3, 3_840_000, 256, 180, 76, 20, 18, 38_400),
    ];
    for (bw, fs, n, data, null, cp_long, cp_short, frame) in table {
        let p = bw.profile();
        assert_eq!(p.sampling_rate, fs);
        assert_eq!(p.fft_size, n);
        assert_eq!((p.n_data_subcarriers, p.n_null_subcarriers), (data, null));
        assert_eq!(data + null, n);
        assert_eq!(fs as usize, n * 15_000);
        let mut offset = 0;
        let mut subframe = 0;
        for s in 0..SYMBOLS_PER_FRAME {
            let cp = if s % 7 == 0 { cp_long } else { cp_short };
            assert_eq!(p.cp_of(s), cp, "symbol {s}");
            assert_eq!(p.symbol_offset(s), offset);
            offset += n + cp;
            if s < 14 {
                subframe += n + cp;
            }
        }
        assert_eq!(offset, frame);
        assert_eq!(p.frame_sample_count(), frame);
        assert_eq!(subframe, fs as usize / 1000);
        assert_eq!(p.subframe_sample_count(), subframe);
    }
    "19200 / 38400 samples per frame, 1 ms subframes".into()
}

// 2. Bit-exact loopback over every direction/bandwidth × modulation × rate.
fn loopback() -> String {
    let dl = Link::new(SessionConfig::default()).unwrap();
    let shared = 10_080 - 2 * 72 - 2 * 72 - 40 * 12;
    assert_eq!(dl.info_capacity(), shared * 2 / 3);
    assert_eq!(dl.info_capacity(), 6208);
    let mut runs = 0;
    for (d, b) in [
        (Direction::Downlink, Bandwidth::Bw1p4),
        (Direction::Uplink, Bandwidth::Bw1p4),
        (Direction::Uplink, Bandwidth::Bw3),
    ] {
        for m in [ModScheme::Qpsk, ModScheme::Qam16] {
            for r in [CodeRate::R1_3, CodeRate::R1_2] {
                let cfg = SessionConfig {
                    modulation: m,
                    code_rate: r,
                    payload: PayloadSource::Synthetic { samples: 46_440 },
                    ..session(d, b, 17)
                };
                let report = run_loopback(&cfg, PAR).unwrap();
                assert!(report.bit_exact, "{d:?} {b:?} {m:?} {r:?}: {}", report.status);
                assert_eq!(report.control_failures, 0);
                assert!(report.frames.iter().all(|f| f.control_crc == [true, true]));
                let cap = Link::new(cfg).unwrap().info_capacity();
                assert_eq!(report.frames_sent, (46_440 * 32usize).div_ceil(cap));
                if (d, m, r) == (Direction::Downlink, ModScheme::Qpsk, CodeRate::R1_3) {
                    assert_eq!(report.frames_sent, 240);
                }
                runs += 1;
            }
        }
    }
    format!("{runs} combinations, 46440 samples each, DL-QPSK-1/3 in 240 frames")
}

// 3. Control chain arithmetic.
fn control_arithmetic() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let info = random_bits(&mut rng, 25);
    let c = control_chain(&info).unwrap();
    assert_eq!(c.info.len(), 25);
    assert_eq!(c.with_crc.len(), 33);
    assert_eq!(c.with_tail.len(), 48);
    assert!(c.with_tail[33..].iter().all(|&b| b == 0));
    assert_eq!(c.coded.len(), 96);
    assert_eq!(c.symbols.len(), 48);
    "25 → 33 → 48 → 96 → 48".into()
}

// 4. Grid accounting.
fn grid_accounting() -> String {
    let ap = 37u16;
    let ids = FrameIds {
        ap_id: AccessPointId::new(ap).unwrap(),
        uss_id: UssId::new(0).unwrap(),
    };
    let layout = GridLayout::new(Direction::Downlink, Bandwidth::Bw1p4.profile(), ids).unwrap();
    let n = 72;
    let mut shared = 0;
    for s in 0..SYMBOLS_PER_FRAME {
        for k in 0..n {
            let tag = layout.tag(s, k);
            let l = s % 7;
            let expected = if s == 5 || s == 75 {
                if (5..67).contains(&k) { CellTag::Sync } else { CellTag::Null }
            } else if s == 6 || s == 76 {
                if k % 3 == 2 { CellTag::ControlRs } else { CellTag::Control }
            } else if (l == 0 && k % 6 == ap as usize % 6) || (l == 4 && k % 6 == (ap as usize + 3) % 6) {
                CellTag::Rs
            } else {
                CellTag::Shared
            };
            assert_eq!(tag, expected, "cell ({s}, {k})");
            shared += usize::from(expected == CellTag::Shared);
        }
    }
    assert_eq!(shared, 9312);
    assert_eq!(layout.count(CellTag::Shared), 9312);
    let total: usize = CellTag::ALL.iter().map(|&t| layout.count(t)).sum();
    assert_eq!(total, SYMBOLS_PER_FRAME * n);
    for s in [6, 76] {
        let c = (0..n).filter(|&k| layout.tag(s, k) == CellTag::Control).count();
        let r = (0..n).filter(|&k| layout.tag(s, k) == CellTag::ControlRs).count();
        assert_eq!((c, r), (48, 24));
    }
    for s in 0..SYMBOLS_PER_FRAME {
        let has_sync = (0..n).any(|k| layout.tag(s, k) == CellTag::Sync);
        assert_eq!(has_sync, s == 5 || s == 75);
    }
    "9312 Shared cells; control 48+24 at 6/76; sync at 5/75".into()
}

/// Bitwise long division of m(D)·D^8 by D^8 + D^7 + D^4 + D^3 + D + 1.
fn crc_long_division(bits: &[u8]) -> u8 {
    let g = [1u8, 1, 0, 0, 1, 1, 0, 1, 1];
    let mut work: Vec<u8> = bits.to_vec();
    work.extend([0; 8]);
    for i in 0..bits.len() {
        if work[i] == 1 {
            for (j, &gj) in g.iter().enumerate() {
                work[i + j] ^= gj;
            }
        }
    }
    work[bits.len()..].iter().fold(0u8, |acc, &b| (acc << 1) | b)
}

/// Shift-register (7, 5) encoder written out tap by tap.
fn conv_oracle(input: &[u8]) -> Vec<u8> {
    let (mut d1, mut d2) = (0u8, 0u8);
    let mut out = Vec::with_capacity(2 * input.len());
    for &u in input {
        out.push(u ^ d1 ^ d2);
        out.push(u ^ d2);
        d2 = d1;
        d1 = u;
    }
    out
}

// 5. Coding oracles.
fn coding() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let len = rng.random_range(1..=64);
        let m = random_bits(&mut rng, len);
        assert_eq!(crc8(&m), crc_long_division(&m));
    }
    for _ in 0..100 {
        let cw = crc8_append(&random_bits(&mut rng, 25)).unwrap();
        assert!(crc8_check(&cw).unwrap());
        for i in 0..33 {
            let mut bad = cw.clone();
            bad[i] ^= 1;
            assert!(!crc8_check(&bad).unwrap(), "flip {i} undetected");
        }
    }
    for _ in 0..10_000 {
        let m = random_bits(&mut rng, 48);
        let coded = encode_bits(&m);
        assert_eq!(coded, conv_oracle(&m));
        let llr: Vec<f64> = coded.iter().map(|&b| 1.0 - 2.0 * b as f64).collect();
        assert_eq!(decode_bits_unterminated(&llr).0, m);
    }
    let code = ldpc_build(432).unwrap();
    for _ in 0..500 {
        let info = random_bits(&mut rng, code.k());
        let cw = ldpc_encode(&code, &info).unwrap();
        assert_eq!(&cw[..code.k()], &info[..]);
        // syndrome from the raw check lists
        for check in code.checks() {
            assert_eq!(check.iter().map(|&c| cw[c as usize]).fold(0, |a, b| a ^ b), 0);
        }
        let llr: Vec<f64> = cw.iter().map(|&b| 4.0 * (1.0 - 2.0 * b as f64)).collect();
        let dec = ldpc_decode(&code, &llr, 25).unwrap();
        assert!(dec.converged);
        assert_eq!(dec.info, info);
    }
    "CRC ≡ long division (1e4), 33/33 flips caught ×100, Viterbi 1e4, LDPC 500".into()
}

// 6. Uncoded QPSK over AWGN against Q(√(2·Eb/N0)).
fn modem_theory() -> String {
    let snrs: Vec<f64> = (0..9).map(|i| 6.0 + 0.2 * i as f64).collect();
    let points = ber_sweep(&SessionConfig::default(), &snrs, BerMode::Uncoded, 1_000_000, PAR).unwrap();
    assert!(points.iter().all(|p| p.bits_tested >= 1_000_000));
    // Eb/N0 where measured and theoretical BER cross 1e-3 (log-linear interpolation)
    let crossing = |pts: &[(f64, f64)]| -> f64 {
        let w = pts.windows(2).find(|w| w[0].1 >= 1e-3 && w[1].1 < 1e-3).expect("BER crosses 1e-3");
        let (a, b) = ((w[0].1).log10() + 3.0, (w[1].1).log10() + 3.0);
        w[0].0 + (w[1].0 - w[0].0) * a / (a - b)
    };
    let measured: Vec<(f64, f64)> = points.iter().map(|p| (p.snr_db, p.ber())).collect();
    let theory: Vec<(f64, f64)> = (0..=300)
        .map(|i| {
            let db = 5.0 + 0.01 * i as f64;
            (db, q((2.0 * 10f64.powf(db / 10.0)).sqrt()))
        })
        .collect();
    let (m, t) = (crossing(&measured), crossing(&theory));
    assert!((m - t).abs() <= 0.5, "measured {m:.3} dB vs theory {t:.3} dB");
    format!("BER 1e-3 at {m:.2} dB, theory {t:.2} dB")
}

// 7. Frame detection with random timing and identity at 10 dB.
fn synchronization() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut hits = 0;
    for trial in 0..100 {
        let ap = rng.random_range(0..168u16);
        let offset = rng.random_range(0..=5000usize);
        let link = Link::new(session(Direction::Downlink, Bandwidth::Bw1p4, ap)).unwrap();
        let (_, iq) = frame_iq(&link, trial);
        let cfg = ChannelConfig {
            timing_offset: offset,
            ..ChannelConfig::awgn(10.0, 1000 + trial)
        };
        let rx = apply_channel(&iq, &cfg).unwrap();
        if let Ok(d) = detect_frame(&rx, Direction::Downlink, &link.profile(), &link.search_set(), PAR) {
            hits += usize::from(d.frame_start == offset && d.ids.ap_id.value() == ap);
        }
    }
    assert!(hits >= 99, "{hits}/100");
    let link = Link::new(SessionConfig::default()).unwrap();
    for seed in 0..5 {
        let mut nrng = ChaCha8Rng::seed_from_u64(70 + seed);
        let noise = IqSamples::new((0..30_000).map(|_| complex_noise(&mut nrng, 1.0)).collect(), 1.92e6);
        assert!(detect_frame(&noise, Direction::Downlink, &link.profile(), &link.search_set(), PAR).is_err());
    }
    format!("{hits}/100 exact, noise rejected")
}

// 8. CFO estimation.
fn cfo() -> String {
    let link = Link::new(session(Direction::Downlink, Bandwidth::Bw1p4, 23)).unwrap();
    let receiver = link.receiver_for(link.config().ids().unwrap()).unwrap();
    let errors: Vec<f64> = Execution::Parallel.map_range(0..100, |i| {
        let (_, iq) = frame_iq(&link, 500 + i as u64);
        let cfg = ChannelConfig {
            cfo_hz: 750.0,
            ..ChannelConfig::awgn(20.0, 9000 + i as u64)
        };
        let rx = apply_channel(&iq, &cfg).unwrap();
        (receiver.cfo_stage(&rx.samples, SEQ).unwrap().0 - 750.0).abs()
    });
    let mae = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!(mae <= 30.0, "MAE {mae}");
    let (_, iq) = frame_iq(&link, 1);
    let mut worst: f64 = 0.0;
    for i in -14..=14 {
        let f = 500.0 * i as f64 + 17.0 * (i % 3) as f64;
        let rx = apply_channel(&iq, &ChannelConfig { cfo_hz: f, ..ChannelConfig::identity() }).unwrap();
        worst = worst.max((receiver.cfo_stage(&rx.samples, SEQ).unwrap().0 - f).abs());
    }
    assert!(worst < 1.0, "clean error {worst}");
    format!("MAE {mae:.2} Hz at 20 dB; clean worst {worst:.2e} Hz")
}

// 9. Channel estimation.
fn channel_estimation() -> String {
    let link = Link::new(session(Direction::Downlink, Bandwidth::Bw1p4, 41)).unwrap();
    let p = link.profile();
    let estimate = |cfg: &ChannelConfig, seed: u64| {
        let (_, iq) = frame_iq(&link, seed);
        let rx = apply_channel(&iq, cfg).unwrap();
        let cols = link.modem().demodulate_frame(&rx.samples[..iq.len()], SEQ).unwrap();
        let obs = ResourceGrid::from_columns(link.layout().clone(), &cols).unwrap();
        estimate_channel(&obs, link.layout().rs_plan()).unwrap()
    };

    let h = Complex64::from_polar(0.8, PI / 4.0);
    let flat = ChannelConfig {
        taps: vec![Tap { delay: 0, gain: h }],
        ..ChannelConfig::awgn(30.0, 99)
    };
    let est = estimate(&flat, 2);
    let worst_flat = est.gains.iter().map(|g| (g - h).norm() / h.norm()).fold(0.0, f64::max);
    assert!(worst_flat < 1e-2, "flat {worst_flat}");

    let taps = vec![
        Tap { delay: 0, gain: Complex64::new(0.7, -0.2) },
        Tap { delay: 5, gain: Complex64::new(-0.25, 0.35) },
    ];
    let est = estimate(&ChannelConfig { taps: taps.clone(), ..ChannelConfig::identity() }, 3);
    let mut worst_two: f64 = 0.0;
    for s in 0..SYMBOLS_PER_FRAME {
        for k in 0..p.n_data_subcarriers {
            // bin index as a signed frequency: k below the DC gap maps to negative bins
            let half = p.n_data_subcarriers as i64 / 2;
            let bin = if (k as i64) < half { k as i64 - half } else { k as i64 - half + 1 };
            let closed: Complex64 = taps
                .iter()
                .map(|t| t.gain * Complex64::from_polar(1.0, -2.0 * PI * (bin * t.delay as i64) as f64 / p.fft_size as f64))
                .sum();
            worst_two = worst_two.max((est.get(s, k) - closed).norm());
        }
    }
    assert!(worst_two < 1e-6, "two-tap {worst_two}");
    format!("flat worst {worst_flat:.1e} rel, two-tap worst {worst_two:.1e}")
}

// 10. Latency report structure.
fn latency_structure() -> String {
    let o = Occurrence::Once;
    let f = Occurrence::PerFrame;
    let tables: [(ProfileMode, Vec<(&str, Occurrence)>); 4] = [
        (
            ProfileMode::DownlinkTx,
            vec![
                ("DSS", o),
                ("DRS Symbol and Index", o),
                ("PDCCH Index", o),
                ("Mapping", o),
                ("PDSCH Index", o),
                ("Encryption", o),
                ("RE2BIN", f),
                ("LDPC Encoder", f),
                ("Transport Block", f),
                ("PDCCH Symbol", f),
                ("OFDM Modulation", f),
                ("Payload Generation", f),
            ],
        ),
        (
            ProfileMode::DownlinkRx,
            vec![
                ("DSS Det", o),
                ("CFO Estimation & Correction", f),
                ("PDCCH Decoder", f),
                ("Channel Estimation & Correction", f),
                ("LDPC Decoder", f),
                ("BIN2RE", f),
                ("PDSCH Symbol Detection", f),
                ("Decryption", o),
            ],
        ),
        (
            ProfileMode::UplinkTx,
            vec![
                ("USS", o),
                ("URS Symbol & Index", o),
                ("PUCCH Index", o),
                ("Mapping", o),
                ("PUSCH Index", o),
                ("Encryption", o),
                ("PUCCH Symbol", f),
                ("PUSCH Symbol Generation", f),
            ],
        ),
        (
            ProfileMode::UplinkRx,
            vec![
                ("USS Det", o),
                ("PUCCH Decoder", f),
                ("Channel Estimation & Correction", f),
                ("PUSCH Symbol Detection", f),
                ("Decryption", o),
                ("Data Enhancement", o),
            ],
        ),
    ];
    let mut sizes = Vec::new();
    for (mode, rows) in tables {
        let cfg = SessionConfig {
            direction: mode.direction(),
            payload: PayloadSource::Synthetic { samples: 800 },
            ..SessionConfig::default()
        };
        let report = latency_profile(&cfg, mode, 10).unwrap();
        let got: BTreeSet<String> = report.blocks.iter().map(|b| b.block.trim().to_string()).collect();
        let want: BTreeSet<String> = rows.iter().map(|(n, _)| n.trim().to_string()).collect();
        assert_eq!(got, want, "{mode:?}");
        for (name, occ) in &rows {
            let b = report.block(name).unwrap();
            assert_eq!(b.occurrence, *occ, "{name}");
            let calls = if *occ == Occurrence::PerFrame { report.frames as u64 } else { 1 };
            assert_eq!(b.invocations, calls, "{name}");
        }
        sizes.push(rows.len().to_string());
    }
    format!("dl-tx/dl-rx/ul-tx/ul-rx: {} rows", sizes.join("/"))
}

#[test]
fn acceptance() {
    type Check = fn() -> String;
    let criteria: [(u32, &str, Check, Duration); 10] = [
        (1, "numerology exactness", numerology, Duration::from_secs(1)),
        (2, "bit-exact loopback", loopback, Duration::from_secs(120)),
        (3, "control-chain arithmetic", control_arithmetic, Duration::from_secs(1)),
        (4, "grid accounting", grid_accounting, Duration::from_secs(1)),
        (5, "coding oracles", coding, Duration::from_secs(60)),
        (6, "modem vs theory", modem_theory, Duration::from_secs(120)),
        (7, "synchronization", synchronization, Duration::from_secs(60)),
        (8, "CFO estimation", cfo, Duration::from_secs(60)),
        (9, "channel estimation", channel_estimation, Duration::from_secs(60)),
        (10, "latency report structure", latency_structure, Duration::from_secs(5)),
    ];
    let mut failed = Vec::new();
    println!();
    for (id, name, check, budget) in criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = t.elapsed();
        let (ok, detail) = match outcome {
            Ok(detail) if elapsed <= budget => (true, detail),
            Ok(detail) => (false, format!("{detail}; over the {budget:?} budget")),
            Err(e) => (
                false,
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()),
            ),
        };
        println!(
            "{} {:>2} {:<26} {:>8.2} s  {}",
            if ok { "PASS" } else { "FAIL" },
            id,
            name,
            elapsed.as_secs_f64(),
            detail
        );
        if !ok {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
