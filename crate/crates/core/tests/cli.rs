use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use photon_clock_rng::io::{self, BitFormat, RunManifest};

fn pcrng(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcrng"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bias_at_zero_is_fair() {
    let o = pcrng(&["bias", "--dist", "poisson", "--mu-eta", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert_eq!(row, "poisson,0,0.5,0.5,0");
}

#[test]
fn bias_with_monte_carlo_column() {
    let o = pcrng(&["bias", "--dist", "thermal", "--mu-eta", "0.5,1", "--events", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("dist,mu_eta,P_EVEN,P_ODD,bias,mc_P_ODD,mc_sigma"));
    assert!(out.lines().nth(1).unwrap().starts_with("thermal,0.5,0.4,0.6"));
    assert_eq!(out.lines().count(), 3);
}

#[test]
fn extract_counts_from_protocol_start() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.txt");
    let bits = dir.path().join("bits.txt");
    fs::write(&ev, "3\n5\n10\n").unwrap();
    let o = pcrng(&["extract", "--input", path(&ev), "--out", path(&bits)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&bits).unwrap(), "101\n");
    assert!(RunManifest::path_for(&bits).exists());

    let o = pcrng(&["extract", "--input", path(&ev), "--out", path(&bits), "--skip-first"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&bits).unwrap(), "01\n");

    let o = pcrng(&["extract", "--input", path(&ev), "--out", path(&bits), "--modulus", "4"]);
    assert_eq!(o.status.code(), Some(0));
    // 3 -> (1,1), 2 -> (1,0), 5 -> (0,1)
    assert_eq!(fs::read_to_string(&bits).unwrap(), "111001\n");
}

#[test]
fn malformed_events_are_data_errors_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.txt");
    let out = dir.path().join("bits.txt");
    fs::write(&ev, "5\n3\n").unwrap();
    let o = pcrng(&["extract", "--input", path(&ev), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ev.txt:2:"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn usage_errors() {
    let o = pcrng(&["simulate", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(pcrng(&[]).status.code(), Some(1));
    assert_eq!(pcrng(&["bias", "--mu-eta", "0.1", "--dist", "laser"]).status.code(), Some(1));
    let o = pcrng(&["protocol", "--error", "0.7", "--gates", "10"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn all_zero_input_fails_the_battery() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("zeros.bin");
    let report = dir.path().join("report.csv");
    io::write_bits(&vec![false; 1_000_000].into(), &bits, BitFormat::Packed).unwrap();
    let o = pcrng(&[
        "test",
        "--input",
        path(&bits),
        "--bits-format",
        "packed",
        "--out",
        path(&report),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("Frequency,1,0,") && l.ends_with(",0")));
    assert!(csv.lines().any(|l| l.starts_with("Runs,5,0,") && l.ends_with(",na")));
    assert!(RunManifest::path_for(&report).exists());
}

#[test]
fn short_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bits = dir.path().join("short.txt");
    fs::write(&bits, "0101\n").unwrap();
    let o = pcrng(&["test", "--input", path(&bits)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_replay_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.bin");
    let o = pcrng(&[
        "simulate", "--dist", "thermal", "--mu", "0.4", "--eta", "0.5", "--mode", "gated",
        "--slots-per-gate", "4", "--profile", "weighted:0.1,0.2,0.3,0.4", "--dark-prob", "0.01",
        "--dead-slots", "3", "--events", "20000", "--seed", "77", "--format", "binary", "--out",
        path(&first),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let manifest = RunManifest::read(RunManifest::path_for(&first)).unwrap();
    assert_eq!(manifest.subcommand, "simulate");
    assert_eq!(manifest.seed, Some(77));
    let second = dir.path().join("b.bin");
    let mut argv = manifest.argv.clone();
    let out = argv.iter().position(|a| a == "--out").unwrap();
    argv[out + 1] = path(&second).to_string();
    let args: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert_eq!(pcrng(&args).status.code(), Some(0));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn simulate_extract_test_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.txt");
    let bits = dir.path().join("bits.bin");
    let report = dir.path().join("report.csv");
    let run = |args: &[&str]| {
        let o = pcrng(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
        o
    };
    run(&[
        "simulate", "--mode", "gated", "--slots-per-gate", "2", "--mu", "0.1", "--events",
        "1000000", "--seed", "3", "--out", path(&ev),
    ]);
    let o = run(&[
        "extract", "--input", path(&ev), "--debias", "--bits-format", "packed", "--out",
        path(&bits),
    ]);
    assert!(stdout(&o).contains("debiased_balance="));
    let o = pcrng(&[
        "test", "--input", path(&bits), "--bits-format", "packed", "--out", path(&report),
        "--sequential",
    ]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)));
    let csv = fs::read_to_string(&report).unwrap();
    assert_eq!(csv.lines().next(), Some(io::REPORT_HEADER));
    assert_eq!(csv.lines().count(), 14);
}

#[test]
fn protocol_and_eve_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let o = pcrng(&["protocol", "--gates", "20000", "--error", "0.05", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("qber=") && out.contains("sift_fraction="));

    let json = dir.path().join("bb84.json");
    let o = pcrng(&["protocol", "--protocol", "bb84", "--heralded", "--r-alice", "4", "--gates", "20000", "--out", path(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert!(v["result"]["sifted_length"].as_u64().unwrap() > 0);

    let o = pcrng(&["protocol", "--heralded", "--gates", "100"]);
    assert_eq!(o.status.code(), Some(1));

    let csv = dir.path().join("eve.csv");
    let o = pcrng(&["eve", "--r", "1,2", "--profile", "fixed:1", "--events", "5000", "--out", path(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&csv).unwrap(), "r,advantage\n1,0.5\n2,0.5\n");
}
