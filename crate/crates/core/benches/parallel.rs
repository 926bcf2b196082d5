//! Sequential vs parallel execution of the batch loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hearlink_phy::channel_sim::{apply_channel, ChannelConfig};
use hearlink_phy::config::SessionConfig;
use hearlink_phy::harness::{ber_sweep, BerMode};
use hearlink_phy::link::{synthetic_audio, Link};
use hearlink_phy::modem::ModScheme;
use hearlink_phy::numerology::{Bandwidth, Direction};
use hearlink_phy::par::Execution;
use hearlink_phy::receiver::detect_frame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn wide_uplink() -> SessionConfig {
    SessionConfig {
        direction: Direction::Uplink,
        bandwidth: Bandwidth::Bw3,
        modulation: ModScheme::Qam16,
        ..SessionConfig::default()
    }
}

fn id_search(c: &mut Criterion) {
    let link = Link::new(SessionConfig::default()).unwrap();
    let tx = link.transmit(&synthetic_audio(800, 1), &[], Execution::Parallel).unwrap();
    let channel = ChannelConfig {
        snr_db: Some(5.0),
        timing_offset: 4321,
        ..ChannelConfig::identity()
    };
    let rx = apply_channel(&tx.iq, &channel).unwrap();
    let candidates = link.search_set();
    let profile = link.profile();
    let mut g = c.benchmark_group("id_search_168");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| detect_frame(black_box(&rx), Direction::Downlink, &profile, &candidates, exec).unwrap())
        });
    }
    g.finish();
}

fn ldpc_segments(c: &mut Criterion) {
    let link = Link::new(wide_uplink()).unwrap();
    let codec = link.codec();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let info: Vec<u8> = (0..codec.info_capacity()).map(|_| rng.random_range(0..2)).collect();
    let coded = codec.encode(&info, Execution::Sequential).unwrap();
    let llrs: Vec<f64> = coded
        .iter()
        .map(|&b| if b == 0 { 1.5 } else { -1.5 } + rng.random_range(-2.0..2.0))
        .collect();
    let mut g = c.benchmark_group("ldpc_frame_decode");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| codec.decode(black_box(&llrs), 50, exec).unwrap())
        });
    }
    g.finish();
}

fn ofdm_frame(c: &mut Criterion) {
    let link = Link::new(wide_uplink()).unwrap();
    let bits = link.payload_bits(&synthetic_audio(100, 3), &[]);
    let seg = &hearlink_phy::framing::segment_transport_block(&bits, link.info_capacity()).unwrap()[0];
    let columns = link.frame_grid(0, seg, Execution::Sequential).unwrap().columns();
    let mut g = c.benchmark_group("ofdm_frame_modulate");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| link.modem().modulate_frame(black_box(&columns), exec).unwrap())
        });
    }
    g.finish();
}

fn transmit(c: &mut Criterion) {
    let link = Link::new(SessionConfig::default()).unwrap();
    let audio = synthetic_audio(4000, 4);
    let mut g = c.benchmark_group("transmit_payload");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| link.transmit(black_box(&audio), &[], exec).unwrap())
        });
    }
    g.finish();
}

fn ber_trials(c: &mut Criterion) {
    let cfg = SessionConfig::default();
    let mut g = c.benchmark_group("ber_uncoded_100k_bits");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ber_sweep(&cfg, &[4.0], BerMode::Uncoded, 100_000, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, id_search, ldpc_segments, ofdm_frame, transmit, ber_trials);
criterion_main!(benches);
