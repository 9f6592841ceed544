//! `pcrng` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 malformed or
//! insufficient input data, 3 when `test` finds a failing applicable test.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::extract::{self, BitStream, ExtractorConfig};
use crate::io::{self, BitFormat, EventFormat, RunManifest};
use crate::models::{self, PhotonStatistics, SourceModel};
use crate::qkd::{self, ProtocolParams};
use crate::sim::{self, ClockConfig, IntraGateProfile};
use crate::suite::{self, BatteryConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TEST_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pcrng", version, about = "Random bits from photon detection times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a detection-event stream
    Simulate(SimulateArgs),
    /// Turn detection events into bits
    Extract(ExtractArgs),
    /// Analytic (and optionally simulated) parity bias
    Bias(BiasArgs),
    /// Run the 13-test randomness battery on a bit file
    Test(TestArgs),
    /// Simulate a QKD run with timing-derived basis choices
    Protocol(ProtocolArgs),
    /// Eavesdropper advantage from gate-only timing information
    Eve(EveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    FreeRunning,
    Gated,
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// Photon-number statistics
    #[arg(long, default_value = "poisson")]
    dist: PhotonStatistics,
    /// Mean photon number per slot (free-running) or per gate (gated)
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Detection efficiency
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

#[derive(Debug, Args)]
struct ClockArgs {
    #[arg(long, value_enum, default_value = "free-running")]
    mode: Mode,
    /// Clock slots per gate (gated mode)
    #[arg(long, default_value_t = 1)]
    slots_per_gate: u32,
    /// Dark-count probability per slot or gate
    #[arg(long, default_value_t = 0.0)]
    dark_prob: f64,
    /// Slots the detector stays blind after a click
    #[arg(long, default_value_t = 0)]
    dead_slots: u64,
    /// Intra-gate click profile: uniform, fixed:<i> or weighted:<w0,w1,...>
    #[arg(long, default_value = "uniform")]
    profile: IntraGateProfile,
}

impl ClockArgs {
    fn clock(&self) -> Result<ClockConfig> {
        match self.mode {
            Mode::FreeRunning => ClockConfig::free_running(self.dark_prob, self.dead_slots),
            Mode::Gated => ClockConfig::gated(self.slots_per_gate, self.dark_prob, self.dead_slots),
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    clock: ClockArgs,
    /// Number of detections to generate
    #[arg(long)]
    events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ascii")]
    format: EventFormat,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "ascii")]
    input_format: EventFormat,
    /// 2 for one basis bit per detection, 4 for (basis, key) pairs
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=4))]
    modulus: u8,
    /// Drop the interval from the protocol start to the first detection
    #[arg(long)]
    skip_first: bool,
    /// XOR each bit with its index parity
    #[arg(long)]
    debias: bool,
    /// Dead time of the detector that produced the file
    #[arg(long, default_value_t = 0)]
    dead_slots: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ascii01")]
    bits_format: BitFormat,
}

#[derive(Debug, Args)]
struct BiasArgs {
    /// Photon-number statistics
    #[arg(long, default_value = "poisson")]
    dist: PhotonStatistics,
    /// One or more values of the mean detected photon number
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    mu_eta: Vec<f64>,
    /// Also simulate this many free-running detections per value
    #[arg(long, default_value_t = 0)]
    events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "ascii01")]
    bits_format: BitFormat,
    #[arg(long, default_value_t = suite::DEFAULT_ALPHA)]
    alpha: f64,
    /// Bits per run; the input is split into disjoint runs of this length
    #[arg(long, default_value_t = suite::DEFAULT_RUN_LEN)]
    run_len: usize,
    /// CSV report path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable the data-parallel battery
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolKind {
    Bbm92,
    Bb84,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[arg(long, value_enum, default_value = "bbm92")]
    protocol: ProtocolKind,
    /// BB84: Alice derives basis and key from her own herald detector (mod 4)
    #[arg(long)]
    heralded: bool,
    #[arg(long, default_value = "poisson")]
    dist: PhotonStatistics,
    /// Mean pair number per gate
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    t_alice: f64,
    #[arg(long, default_value_t = 1.0)]
    t_bob: f64,
    #[arg(long, default_value_t = 2)]
    r_alice: u32,
    #[arg(long, default_value_t = 2)]
    r_bob: u32,
    #[arg(long, default_value_t = 0.0)]
    dark_prob: f64,
    #[arg(long, default_value_t = 0)]
    dead_slots: u64,
    #[arg(long, default_value = "uniform")]
    profile: IntraGateProfile,
    /// Intrinsic bit-flip probability of the channel
    #[arg(long, default_value_t = 0.0)]
    error: f64,
    #[arg(long, default_value_t = 100_000)]
    gates: u64,
    /// Bootstrap basis symbols per party
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the result as JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EveArgs {
    /// Slots per gate to sweep
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "1,2,3,4,8")]
    r: Vec<u32>,
    /// Intra-gate profile (applied to every R)
    #[arg(long, default_value = "uniform")]
    profile: IntraGateProfile,
    #[arg(long, default_value = "poisson")]
    dist: PhotonStatistics,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 0.0)]
    dark_prob: f64,
    #[arg(long, default_value_t = 100_000)]
    events: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output (r,advantage)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code. Output goes to stdout, diagnostics to stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let argv = args.get(1..).unwrap_or_default().to_vec();
    match dispatch(cli.command, &argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn dispatch(cmd: Command, argv: &[String]) -> Result<i32> {
    match cmd {
        Command::Simulate(a) => simulate(a, argv),
        Command::Extract(a) => extract_cmd(a, argv),
        Command::Bias(a) => bias(a),
        Command::Test(a) => test(a, argv),
        Command::Protocol(a) => protocol(a, argv),
        Command::Eve(a) => eve(a, argv),
    }
}

fn manifest(sub: &str, argv: &[String], seed: Option<u64>, params: serde_json::Value, out: &Path) -> Result<()> {
    RunManifest::new(sub, argv, seed, params).write_beside(out)?;
    Ok(())
}

fn simulate(a: SimulateArgs, argv: &[String]) -> Result<i32> {
    let source = SourceModel::new(a.source.dist, a.source.mu, a.source.eta)?;
    let clock = a.clock.clock()?;
    let stream = match a.clock.mode {
        Mode::FreeRunning => sim::generate_free_running(&source, &clock, a.events, a.seed)?,
        Mode::Gated => sim::generate_gated(&source, &clock, &a.clock.profile, a.events, a.seed)?,
    };
    io::write_events(&stream, &a.out, a.format)?;
    manifest(
        "simulate",
        argv,
        Some(a.seed),
        json!({ "source": source, "clock": clock, "profile": a.clock.profile, "events": a.events }),
        &a.out,
    )?;
    println!("wrote {} events to {}", stream.len(), a.out.display());
    Ok(EXIT_OK)
}

fn extract_cmd(a: ExtractArgs, argv: &[String]) -> Result<i32> {
    let clock = ClockConfig {
        dead_slots: a.dead_slots,
        ..ClockConfig::default()
    };
    if a.modulus == 3 {
        return Err(Error::Config("modulus must be 2 or 4".into()));
    }
    let stream = io::read_events(&a.input, a.input_format, clock)?;
    let mut bits = if a.modulus == 4 {
        let cfg = ExtractorConfig::mod4().include_first(!a.skip_first);
        extract::extract_mod4(&stream, &cfg)?
            .into_iter()
            .flat_map(|s| [s.basis_bit, s.key_bit])
            .collect::<BitStream>()
    } else {
        let cfg = ExtractorConfig::mod2().include_first(!a.skip_first);
        extract::extract_mod2(&stream, &cfg)?
    };
    let raw = extract::balance(&bits);
    if a.debias {
        bits = extract::flip_debias(&bits);
    }
    io::write_bits(&bits, &a.out, a.bits_format)?;
    manifest(
        "extract",
        argv,
        None,
        json!({ "modulus": a.modulus, "include_first": !a.skip_first, "debias": a.debias, "input": a.input }),
        &a.out,
    )?;
    let out = extract::balance(&bits);
    println!("bits={} zeros={} ones={}", bits.len(), out.zeros, out.ones);
    println!("raw_balance={:.6}", raw.ratio);
    if a.debias {
        println!("debiased_balance={:.6}", out.ratio);
    }
    if out.degenerate {
        eprintln!("warning: output contains a single bit value");
    }
    Ok(EXIT_OK)
}

fn bias(a: BiasArgs) -> Result<i32> {
    println!("dist,mu_eta,P_EVEN,P_ODD,bias{}", if a.events > 0 { ",mc_P_ODD,mc_sigma" } else { "" });
    for (i, &mu_eta) in a.mu_eta.iter().enumerate() {
        let source = SourceModel::with_effective_mean(a.dist, mu_eta)?;
        let b = models::parity_probabilities(&source)?;
        let mut line = format!(
            "{},{},{},{},{}",
            a.dist, mu_eta, b.p_even, b.p_odd, b.bias()
        );
        if a.events > 0 {
            let clock = ClockConfig::default();
            let stream = sim::generate_free_running(&source, &clock, a.events, a.seed.wrapping_add(i as u64))?;
            let (_, odd) = sim::empirical_parity(&stream)?;
            let n = stream.len() as f64;
            let f = odd as f64 / n;
            line.push_str(&format!(",{f},{}", (b.p_odd * b.p_even / n).sqrt()));
        }
        println!("{line}");
    }
    Ok(EXIT_OK)
}

fn test(a: TestArgs, argv: &[String]) -> Result<i32> {
    let bits = io::read_bits(&a.input, a.bits_format)?;
    let cfg = BatteryConfig {
        alpha: a.alpha,
        run_len: a.run_len,
        execution: if a.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        ..BatteryConfig::default()
    };
    let report = suite::run_battery_with(&bits, &cfg)?;
    match &a.out {
        Some(out) => {
            io::write_report(&report, out)?;
            manifest("test", argv, None, json!({ "battery": cfg, "input": a.input }), out)?;
        }
        None => print!("{}", io::report_csv(&report)),
    }
    let applicable = report.entries.iter().filter(|e| e.applicable).count();
    let failed = report.failures().count();
    eprintln!(
        "{} runs, {} applicable tests, {} failed at alpha={}",
        report.runs(),
        applicable,
        failed,
        a.alpha
    );
    Ok(if failed > 0 { EXIT_TEST_FAILED } else { EXIT_OK })
}

fn protocol(a: ProtocolArgs, argv: &[String]) -> Result<i32> {
    let params = ProtocolParams {
        pair_source: SourceModel::new(a.dist, a.mu, a.eta)?,
        channel_transmittance_alice: a.t_alice,
        channel_transmittance_bob: a.t_bob,
        clock_alice: ClockConfig::gated(a.r_alice, a.dark_prob, a.dead_slots)?,
        clock_bob: ClockConfig::gated(a.r_bob, a.dark_prob, a.dead_slots)?,
        profile: a.profile.clone(),
        intrinsic_error: a.error,
        n_gates: a.gates,
        k_bootstrap: a.k,
        seed: a.seed,
    };
    let result = match a.protocol {
        ProtocolKind::Bbm92 => {
            if a.heralded {
                return Err(Error::Config("--heralded applies to bb84 only".into()));
            }
            qkd::run_bbm92(&params)?
        }
        ProtocolKind::Bb84 => qkd::run_bb84(&params, a.heralded)?,
    };
    let value = serde_json::to_value(&result).expect("result serializes");
    for (k, v) in value.as_object().expect("struct serializes to an object") {
        println!("{k}={v}");
    }
    if let Some(out) = &a.out {
        let text = serde_json::to_string_pretty(&json!({ "params": params, "result": result }))
            .expect("result serializes");
        std::fs::write(out, text).map_err(|e| Error::io(out, e))?;
        manifest("protocol", argv, Some(a.seed), json!({ "params": params, "convention": qkd::BASIS_CONVENTION }), out)?;
    }
    Ok(EXIT_OK)
}

fn eve(a: EveArgs, argv: &[String]) -> Result<i32> {
    let source = SourceModel::new(a.dist, a.mu, a.eta)?;
    let base = ProtocolParams {
        pair_source: source,
        profile: a.profile.clone(),
        seed: a.seed,
        ..ProtocolParams::default()
    };
    let jobs: Vec<Result<ProtocolParams>> = a
        .r
        .iter()
        .map(|&r| {
            let clock = ClockConfig::gated(r, a.dark_prob, 0)?;
            Ok(ProtocolParams {
                clock_alice: clock,
                clock_bob: clock,
                ..base.clone()
            })
        })
        .collect::<Vec<_>>();
    let jobs: Vec<ProtocolParams> = jobs.into_iter().collect::<Result<_>>()?;
    let results = Execution::default().map(jobs, |p| qkd::eve_qnd_advantage(&p, a.events));
    let mut csv = String::from("r,advantage\n");
    for (&r, adv) in a.r.iter().zip(results) {
        csv.push_str(&format!("{r},{}\n", adv?));
    }
    print!("{csv}");
    if let Some(out) = &a.out {
        std::fs::write(out, &csv).map_err(|e| Error::io(out, e))?;
        manifest("eve", argv, Some(a.seed), json!({ "base": base, "r": a.r, "events": a.events }), out)?;
    }
    Ok(EXIT_OK)
}
