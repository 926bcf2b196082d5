use std::process::{Command, Output};

fn hearlink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hearlink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn loopback_clean_exits_zero_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = hearlink(&["loopback", "--samples", "4000", "--out", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("\"bit_exact\": true"));
    assert!(out.contains("\"status\": \"payload bit-exact\""));
    assert_eq!(std::fs::read_to_string(report).unwrap().trim(), out.trim());
}

#[test]
fn loopback_mismatch_exits_one() {
    let o = hearlink(&["loopback", "--samples", "4000", "--snr", "-10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("\"bit_exact\": false"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("payload mismatch"));
}

#[test]
fn loopback_reads_raw_payload_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let payload = dir.path().join("audio.f32");
    let samples: Vec<u8> = (0..3000)
        .flat_map(|i| (0.3 * (i as f32 * 0.05).sin()).to_le_bytes())
        .collect();
    std::fs::write(&payload, samples).unwrap();
    let cfg = dir.path().join("session.json");
    std::fs::write(&cfg, r#"{"direction": "ul", "bandwidth": "3", "modulation": "16qam", "code_rate": "1/2"}"#).unwrap();
    let o = hearlink(&[
        "loopback",
        "--config",
        cfg.to_str().unwrap(),
        "--payload",
        payload.to_str().unwrap(),
        "--cfo",
        "300",
        "--offset",
        "77",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("\"direction\": \"ul\""));
    assert!(out.contains("\"bandwidth\": \"3\""));
    assert!(out.contains("\"payload_samples\": 3000"));
}

#[test]
fn invalid_combination_exits_two() {
    let o = hearlink(&["loopback", "--direction", "dl", "--bandwidth", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.4 MHz"));
    assert_ne!(hearlink(&["loopback", "--mod", "64qam"]).status.code(), Some(0));
}

#[test]
fn ber_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ber.csv");
    let o = hearlink(&["ber-sweep", "--snr", "-2,6", "--out", csv.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,bits,errors,ber,fer");
    assert_eq!(lines.len(), 3);
    let ber = |l: &str| l.split(',').nth(3).unwrap().parse::<f64>().unwrap();
    assert!(ber(lines[1]) > ber(lines[2]));

    let again = hearlink(&["ber-sweep", "--snr", "-2,6", "--seed", "9"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn ber_sweep_rejects_small_budgets() {
    let o = hearlink(&["ber-sweep", "--snr", "3", "--min-bits", "1000"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn latency_profile_json() {
    let o = hearlink(&[
        "latency-profile",
        "--side",
        "tx",
        "--format",
        "json",
        "--sequential",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.trim_start().starts_with('['));
    assert!(out.contains("\"dl-tx\""));
    assert!(out.contains("Transport Block"));
    assert_eq!(hearlink(&["latency-profile", "--repetitions", "3"]).status.code(), Some(2));
}

#[test]
fn emit_fixtures_lists_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = hearlink(&["emit-fixtures", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let listed: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(listed.len() >= 8);
    for p in &listed {
        assert!(std::path::Path::new(p).is_file(), "{p}");
    }
    let iq = dir.path().join("frame0.iq");
    assert_eq!(std::fs::metadata(iq).unwrap().len(), 153_600);
}
