//! File formats: detection events, bit sequences, test reports and run manifests.
//!
//! Events are one decimal slot index per line (`ascii`) or consecutive
//! little-endian `u64` values (`binary`). Bits are `'0'`/`'1'` characters with
//! whitespace ignored (`ascii01`) or MSB-first packed bytes behind an 8-byte
//! little-endian bit count (`packed`).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::BitStream;
use crate::sim::{ClockConfig, EventStream};
use crate::suite::TestReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    Ascii,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BitFormat {
    Ascii01,
    Packed,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, data: &[u8]) -> Result<()> {
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads detection slots, rejecting zero, duplicate and decreasing values.
/// `clock` is attached to the stream and its dead time is enforced.
pub fn read_events(path: impl AsRef<Path>, format: EventFormat, clock: ClockConfig) -> Result<EventStream> {
    let path = path.as_ref();
    let data = read_file(path)?;
    // (location, slot) where location is a line number or a record number
    let mut slots: Vec<(usize, u64)> = Vec::new();
    match format {
        EventFormat::Ascii => {
            let text = std::str::from_utf8(&data)
                .map_err(|e| parse_error(path, 0, format!("not UTF-8: {e}")))?;
            for (i, line) in text.lines().enumerate() {
                let line_no = i + 1;
                let field = line.trim();
                if field.is_empty() {
                    continue;
                }
                let slot = field.parse::<u64>().map_err(|e| {
                    let reason = match e.kind() {
                        std::num::IntErrorKind::PosOverflow => {
                            format!("slot `{field}` overflows 64 bits")
                        }
                        _ => format!("`{field}` is not a slot index"),
                    };
                    parse_error(path, line_no, reason)
                })?;
                slots.push((line_no, slot));
            }
        }
        EventFormat::Binary => {
            if data.len() % 8 != 0 {
                return Err(parse_error(
                    path,
                    data.len() / 8 + 1,
                    format!("truncated record: {} trailing bytes", data.len() % 8),
                ));
            }
            for (i, rec) in data.chunks_exact(8).enumerate() {
                let slot = u64::from_le_bytes(rec.try_into().expect("8-byte chunk"));
                slots.push((i + 1, slot));
            }
        }
    }

    let mut prev: Option<u64> = None;
    for &(loc, slot) in &slots {
        if slot == 0 {
            return Err(parse_error(path, loc, "slot 0 is the protocol start, not a detection"));
        }
        if let Some(p) = prev {
            if slot == p {
                return Err(parse_error(path, loc, format!("duplicate timestamp {slot}")));
            }
            if slot < p {
                return Err(parse_error(path, loc, format!("timestamp {slot} precedes {p}")));
            }
            if slot - p <= clock.dead_slots {
                return Err(parse_error(
                    path,
                    loc,
                    format!("gap {} within dead time {}", slot - p, clock.dead_slots),
                ));
            }
        }
        prev = Some(slot);
    }
    EventStream::new(slots.into_iter().map(|(_, s)| s).collect(), clock)
}

pub fn write_events(stream: &EventStream, path: impl AsRef<Path>, format: EventFormat) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        EventFormat::Ascii => stream.slots().iter().try_for_each(|s| writeln!(w, "{s}")),
        EventFormat::Binary => stream
            .slots()
            .iter()
            .try_for_each(|s| w.write_all(&s.to_le_bytes())),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn encode_bits(bits: &BitStream, format: BitFormat) -> Vec<u8> {
    match format {
        BitFormat::Ascii01 => {
            let mut out: Vec<u8> = bits.iter().map(|b| if b { b'1' } else { b'0' }).collect();
            out.push(b'\n');
            out
        }
        BitFormat::Packed => {
            let mut out = Vec::with_capacity(8 + bits.len().div_ceil(8));
            out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
            out.extend(bits.as_slice().chunks(8).map(|byte| {
                byte.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b as u8) << (7 - i))
            }));
            out
        }
    }
}

pub fn decode_bits(data: &[u8], format: BitFormat, path: &Path) -> Result<BitStream> {
    match format {
        BitFormat::Ascii01 => {
            let mut bits = Vec::with_capacity(data.len());
            let mut line = 1;
            for &c in data {
                match c {
                    b'0' => bits.push(false),
                    b'1' => bits.push(true),
                    b'\n' => line += 1,
                    c if c.is_ascii_whitespace() => {}
                    c => {
                        return Err(parse_error(
                            path,
                            line,
                            format!("unexpected character {:?}", c as char),
                        ))
                    }
                }
            }
            Ok(bits.into())
        }
        BitFormat::Packed => {
            let header: [u8; 8] = data
                .get(..8)
                .and_then(|h| h.try_into().ok())
                .ok_or_else(|| parse_error(path, 0, "truncated 8-byte length header"))?;
            let len = u64::from_le_bytes(header);
            let payload = &data[8..];
            let needed = len.div_ceil(8);
            if payload.len() as u64 != needed {
                return Err(parse_error(
                    path,
                    0,
                    format!(
                        "header declares {len} bits ({needed} bytes) but payload has {} bytes",
                        payload.len()
                    ),
                ));
            }
            Ok((0..len as usize)
                .map(|i| payload[i / 8] >> (7 - i % 8) & 1 == 1)
                .collect())
        }
    }
}

pub fn read_bits(path: impl AsRef<Path>, format: BitFormat) -> Result<BitStream> {
    let path = path.as_ref();
    decode_bits(&read_file(path)?, format, path)
}

pub fn write_bits(bits: &BitStream, path: impl AsRef<Path>, format: BitFormat) -> Result<()> {
    write_file(path.as_ref(), &encode_bits(bits, format))
}

pub const REPORT_HEADER: &str = "test_id,test_index,run_index,p_value,pass";

/// CSV rows sorted by (test index, run index). The pass column is `1`, `0`,
/// or `na` for tests that were not applicable.
pub fn report_csv(report: &TestReport) -> String {
    let mut entries = report.entries.clone();
    entries.sort_by_key(|e| (e.test.index(), e.run_index));
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for e in entries {
        let pass = match (e.applicable, e.pass) {
            (false, _) => "na",
            (true, true) => "1",
            (true, false) => "0",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.test.name(),
            e.test.index(),
            e.run_index,
            e.p_value,
            pass
        ));
    }
    out
}

pub fn write_report(report: &TestReport, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), report_csv(report).as_bytes())
}

/// Everything needed to regenerate an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Command-line arguments after the program name.
    pub argv: Vec<String>,
    pub generator: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: &[String], seed: Option<u64>, parameters: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            argv: argv.to_vec(),
            generator: crate::sim::GENERATOR.to_string(),
            seed,
            parameters,
        }
    }

    /// Sidecar path: `<output>.manifest.json`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn write_beside(&self, output: &Path) -> Result<PathBuf> {
        let path = Self::path_for(output);
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&path, json.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        serde_json::from_slice(&read_file(path)?)
            .map_err(|e| parse_error(path, e.line(), e.to_string()))
    }
}
