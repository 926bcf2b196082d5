use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hearlink_phy::coding::CodeRate;
use hearlink_phy::config::{PayloadSource, SessionConfig};
use hearlink_phy::harness::{
    ber_sweep, emit_fixtures, latency_profile, run_loopback, to_csv, BerMode, PayloadFormat, ProfileMode,
};
use hearlink_phy::modem::ModScheme;
use hearlink_phy::numerology::{Bandwidth, Direction};
use hearlink_phy::par::Execution;

#[derive(Parser)]
#[command(name = "hearlink", version, about = "Baseband PHY simulator for a cloud hearing-aid link")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit the payload through the channel, receive it and check the bits.
    /// Exits 1 when the recovered payload differs from what was sent.
    Loopback(LoopbackArgs),
    /// BER/FER against Eb/N0 over AWGN, written as CSV.
    BerSweep(BerArgs),
    /// Per-block processing times of the transmit and receive chains.
    LatencyProfile(LatencyArgs),
    /// Write reference sequences, a frame grid, the LDPC matrix and one frame of IQ.
    EmitFixtures(FixtureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DirArg {
    Dl,
    Ul,
}

#[derive(Clone, Copy, ValueEnum)]
enum BwArg {
    #[value(name = "1.4")]
    Bw1p4,
    #[value(name = "3")]
    Bw3,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModArg {
    Qpsk,
    #[value(name = "16qam")]
    Qam16,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateArg {
    #[value(name = "1/3")]
    Third,
    #[value(name = "1/2")]
    Half,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Tx,
    Rx,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

/// Session settings shared by every subcommand. Flags override the config file.
#[derive(Args)]
struct Session {
    /// JSON session config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    direction: Option<DirArg>,
    /// Bandwidth in MHz.
    #[arg(long, value_enum)]
    bandwidth: Option<BwArg>,
    #[arg(long = "mod", value_enum)]
    modulation: Option<ModArg>,
    #[arg(long, value_enum)]
    rate: Option<RateArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

impl Session {
    fn resolve(&self) -> Result<SessionConfig> {
        let mut cfg = match &self.config {
            Some(p) => SessionConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => SessionConfig::default(),
        };
        if let Some(d) = self.direction {
            cfg.direction = match d {
                DirArg::Dl => Direction::Downlink,
                DirArg::Ul => Direction::Uplink,
            };
        }
        if let Some(b) = self.bandwidth {
            cfg.bandwidth = match b {
                BwArg::Bw1p4 => Bandwidth::Bw1p4,
                BwArg::Bw3 => Bandwidth::Bw3,
            };
        }
        if let Some(m) = self.modulation {
            cfg.modulation = match m {
                ModArg::Qpsk => ModScheme::Qpsk,
                ModArg::Qam16 => ModScheme::Qam16,
            };
        }
        if let Some(r) = self.rate {
            cfg.code_rate = match r {
                RateArg::Third => CodeRate::R1_3,
                RateArg::Half => CodeRate::R1_2,
            };
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Args)]
struct LoopbackArgs {
    #[command(flatten)]
    session: Session,
    /// Per-sample channel SNR in dB (no noise when omitted).
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    /// Carrier frequency offset in Hz.
    #[arg(long, allow_hyphen_values = true)]
    cfo: Option<f64>,
    /// Zero samples inserted before the signal.
    #[arg(long)]
    offset: Option<usize>,
    /// Audio payload file; format from --payload-format or the extension.
    #[arg(long, value_name = "PATH")]
    payload: Option<PathBuf>,
    /// wav or raw-f32.
    #[arg(long, value_name = "FORMAT")]
    payload_format: Option<String>,
    /// Length of the synthetic payload, in samples.
    #[arg(long, conflicts_with = "payload")]
    samples: Option<usize>,
    /// Side-stream file (3 MHz uplink only).
    #[arg(long, value_name = "PATH")]
    aux: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BerArgs {
    #[command(flatten)]
    session: Session,
    /// Comma-separated Eb/N0 values in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    snr: Vec<f64>,
    /// uncoded or coded.
    #[arg(long, default_value = "uncoded")]
    mode: String,
    /// Minimum tested bits per point.
    #[arg(long, default_value_t = 100_000)]
    min_bits: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LatencyArgs {
    #[command(flatten)]
    session: Session,
    #[arg(long, value_enum, default_value = "both")]
    side: SideArg,
    #[arg(long, default_value_t = 10)]
    repetitions: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write the JSON reports here as well.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    #[command(flatten)]
    session: Session,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

fn payload_format(path: &Path, explicit: Option<&str>) -> Result<PayloadFormat> {
    if let Some(f) = explicit {
        return Ok(f.parse()?);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("wav") => Ok(PayloadFormat::Wav),
        _ => Ok(PayloadFormat::RawF32),
    }
}

fn loopback(args: LoopbackArgs) -> Result<ExitCode> {
    let mut cfg = args.session.resolve()?;
    if let Some(snr) = args.snr {
        cfg.channel.snr_db = Some(snr);
    }
    if let Some(cfo) = args.cfo {
        cfg.channel.cfo_hz = cfo;
    }
    if let Some(offset) = args.offset {
        cfg.channel.timing_offset = offset;
    }
    if let Some(path) = args.payload {
        cfg.payload = match payload_format(&path, args.payload_format.as_deref())? {
            PayloadFormat::Wav => PayloadSource::Wav { path },
            PayloadFormat::RawF32 => PayloadSource::RawF32 { path },
        };
    } else if args.payload_format.is_some() {
        bail!("--payload-format needs --payload");
    }
    if let Some(samples) = args.samples {
        cfg.payload = PayloadSource::Synthetic { samples };
    }
    if args.aux.is_some() {
        cfg.aux_path = args.aux;
    }
    cfg.validate()?;

    let report = run_loopback(&cfg, args.session.execution())?;
    let json = report.to_json();
    if let Some(out) = &args.out {
        std::fs::write(out, &json).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{json}");
    eprintln!("{}", report.status);
    Ok(if report.bit_exact {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn ber(args: BerArgs) -> Result<ExitCode> {
    let cfg = args.session.resolve()?;
    cfg.validate()?;
    let mode: BerMode = args.mode.parse()?;
    let points = ber_sweep(&cfg, &args.snr, mode, args.min_bits, args.session.execution())?;
    let csv = to_csv(&points);
    match &args.out {
        Some(out) => std::fs::write(out, &csv).with_context(|| format!("writing {}", out.display()))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn latency(args: LatencyArgs) -> Result<ExitCode> {
    let cfg = args.session.resolve()?;
    cfg.validate()?;
    let sides: &[bool] = match args.side {
        SideArg::Tx => &[true],
        SideArg::Rx => &[false],
        SideArg::Both => &[true, false],
    };
    let mut reports = Vec::new();
    for &transmit in sides {
        let mode = ProfileMode::new(cfg.direction, transmit);
        reports.push(latency_profile(&cfg, mode, args.repetitions)?);
    }
    let json = format!(
        "[{}]",
        reports.iter().map(|r| r.to_json()).collect::<Vec<_>>().join(",\n")
    );
    if let Some(out) = &args.out {
        std::fs::write(out, &json).with_context(|| format!("writing {}", out.display()))?;
    }
    match args.format {
        FormatArg::Text => {
            for r in &reports {
                println!("{}", r.to_text());
            }
        }
        FormatArg::Json => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn fixtures(args: FixtureArgs) -> Result<ExitCode> {
    let cfg = args.session.resolve()?;
    cfg.validate()?;
    for path in emit_fixtures(&cfg, &args.out)? {
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Loopback(a) => loopback(a),
        Command::BerSweep(a) => ber(a),
        Command::LatencyProfile(a) => latency(a),
        Command::EmitFixtures(a) => fixtures(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
