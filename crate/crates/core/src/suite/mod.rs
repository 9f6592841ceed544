//! Randomness test battery: thirteen procedures from the NIST SP 800-22
//! statistical test suite, each producing a p-value, and a runner that
//! partitions a long sequence into disjoint runs and tests every run.
//!
//! Parameters default to the suite's recommendations for 10^6-bit runs.

mod cusum;
mod dft;
mod entropy;
mod frequency;
mod linear_complexity;
mod longest_run;
mod rank;
mod runs;
mod universal;

use serde::{Deserialize, Serialize};
use statrs::function::erf;
use statrs::function::gamma;

use crate::error::{Error, Result};
use crate::exec::Execution;

pub use cusum::{cumulative_sums_test, Direction};
pub use dft::dft_test;
pub use entropy::{approximate_entropy_test, serial_test};
pub use frequency::{block_frequency_test, frequency_test};
pub use linear_complexity::{linear_complexity, linear_complexity_test};
pub use longest_run::longest_run_test;
pub use rank::{binary_rank, rank_test};
pub use runs::{runs_prerequisite, runs_test};
pub use universal::{universal_statistic, universal_test, UniversalParams};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_RUN_LEN: usize = 1_000_000;

/// The thirteen reported procedures, in plotting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TestId {
    Frequency,
    BlockFrequency,
    CusumForward,
    CusumReverse,
    Runs,
    LongestRuns,
    Rank,
    DFFT,
    Universal,
    ApproximateEntropy,
    Serial1,
    Serial2,
    LinearComplexity,
}

impl TestId {
    pub const ALL: [TestId; 13] = [
        TestId::Frequency,
        TestId::BlockFrequency,
        TestId::CusumForward,
        TestId::CusumReverse,
        TestId::Runs,
        TestId::LongestRuns,
        TestId::Rank,
        TestId::DFFT,
        TestId::Universal,
        TestId::ApproximateEntropy,
        TestId::Serial1,
        TestId::Serial2,
        TestId::LinearComplexity,
    ];

    /// 1-based position on the x axis of a p-value scatter plot.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            TestId::Frequency => "Frequency",
            TestId::BlockFrequency => "BlockFrequency",
            TestId::CusumForward => "CusumForward",
            TestId::CusumReverse => "CusumReverse",
            TestId::Runs => "Runs",
            TestId::LongestRuns => "LongestRuns",
            TestId::Rank => "Rank",
            TestId::DFFT => "DFFT",
            TestId::Universal => "Universal",
            TestId::ApproximateEntropy => "ApproximateEntropy",
            TestId::Serial1 => "Serial1",
            TestId::Serial2 => "Serial2",
            TestId::LinearComplexity => "LinearComplexity",
        }
    }
}

impl std::fmt::Display for TestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunable parameters of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub block_frequency_len: usize,
    pub approximate_entropy_m: u32,
    pub serial_m: u32,
    pub linear_complexity_len: usize,
    /// `None` picks L and Q from the run length.
    pub universal: Option<UniversalParams>,
}

impl Default for BatteryParams {
    fn default() -> Self {
        BatteryParams {
            block_frequency_len: 128,
            approximate_entropy_m: 10,
            serial_m: 16,
            linear_complexity_len: 500,
            universal: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryConfig {
    pub alpha: f64,
    pub run_len: usize,
    pub params: BatteryParams,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            alpha: DEFAULT_ALPHA,
            run_len: DEFAULT_RUN_LEN,
            params: BatteryParams::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub test: TestId,
    pub run_index: usize,
    /// 0 when the test was not applicable.
    pub p_value: f64,
    pub pass: bool,
    /// False when the run was too short or a prerequisite failed.
    pub applicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub alpha: f64,
    pub run_len: usize,
    pub params: BatteryParams,
    pub entries: Vec<TestEntry>,
}

impl TestReport {
    pub fn empty(alpha: f64) -> Self {
        TestReport {
            alpha,
            run_len: DEFAULT_RUN_LEN,
            params: BatteryParams::default(),
            entries: Vec::new(),
        }
    }

    pub fn runs(&self) -> usize {
        self.entries.iter().map(|e| e.run_index + 1).max().unwrap_or(0)
    }

    /// Applicable entries with `p < alpha`.
    pub fn failures(&self) -> impl Iterator<Item = &TestEntry> {
        self.entries.iter().filter(|e| e.applicable && !e.pass)
    }

    pub fn entry(&self, test: TestId, run_index: usize) -> Option<&TestEntry> {
        self.entries
            .iter()
            .find(|e| e.test == test && e.run_index == run_index)
    }

    pub fn sort(&mut self) {
        self.entries.sort_by_key(|e| (e.test, e.run_index));
    }
}

/// Upper regularized incomplete gamma function `Q(a, x)`.
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma::gamma_ur(a, x).clamp(0.0, 1.0)
    }
}

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// Standard normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub(crate) fn check_len(test: &'static str, bits: &[bool], needed: usize) -> Result<()> {
    if bits.len() < needed {
        Err(Error::InsufficientData {
            test,
            needed,
            got: bits.len(),
        })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Procedure {
    Frequency,
    BlockFrequency,
    Cusum(Direction),
    Runs,
    LongestRuns,
    Rank,
    Dft,
    Universal,
    ApproximateEntropy,
    Serial,
    LinearComplexity,
}

const PROCEDURES: [Procedure; 12] = [
    Procedure::Frequency,
    Procedure::BlockFrequency,
    Procedure::Cusum(Direction::Forward),
    Procedure::Cusum(Direction::Reverse),
    Procedure::Runs,
    Procedure::LongestRuns,
    Procedure::Rank,
    Procedure::Dft,
    Procedure::Universal,
    Procedure::ApproximateEntropy,
    Procedure::Serial,
    Procedure::LinearComplexity,
];

/// `Ok(None)` marks a test that is not applicable to this run.
fn run_procedure(
    proc: Procedure,
    bits: &[bool],
    params: &BatteryParams,
) -> Vec<(TestId, Option<f64>)> {
    let opt = |r: Result<f64>| r.ok();
    match proc {
        Procedure::Frequency => vec![(TestId::Frequency, opt(frequency_test(bits)))],
        Procedure::BlockFrequency => vec![(
            TestId::BlockFrequency,
            opt(block_frequency_test(bits, params.block_frequency_len)),
        )],
        Procedure::Cusum(dir) => {
            let id = match dir {
                Direction::Forward => TestId::CusumForward,
                Direction::Reverse => TestId::CusumReverse,
            };
            vec![(id, opt(cumulative_sums_test(bits, dir)))]
        }
        Procedure::Runs => {
            let p = if runs_prerequisite(bits) {
                opt(runs_test(bits))
            } else {
                None
            };
            vec![(TestId::Runs, p)]
        }
        Procedure::LongestRuns => vec![(TestId::LongestRuns, opt(longest_run_test(bits)))],
        Procedure::Rank => vec![(TestId::Rank, opt(rank_test(bits)))],
        Procedure::Dft => vec![(TestId::DFFT, opt(dft_test(bits)))],
        Procedure::Universal => {
            let p = match params.universal {
                Some(u) => universal_test(bits, Some(u)),
                None => universal_test(bits, None),
            };
            vec![(TestId::Universal, opt(p))]
        }
        Procedure::ApproximateEntropy => vec![(
            TestId::ApproximateEntropy,
            opt(approximate_entropy_test(bits, params.approximate_entropy_m)),
        )],
        Procedure::Serial => match serial_test(bits, params.serial_m) {
            Ok((p1, p2)) => vec![(TestId::Serial1, Some(p1)), (TestId::Serial2, Some(p2))],
            Err(_) => vec![(TestId::Serial1, None), (TestId::Serial2, None)],
        },
        Procedure::LinearComplexity => vec![(
            TestId::LinearComplexity,
            opt(linear_complexity_test(bits, params.linear_complexity_len)),
        )],
    }
}

/// Split `bits` into `floor(len / run_len)` disjoint runs and apply all
/// thirteen tests to each run.
pub fn run_battery(bits: &[bool], alpha: f64, run_len: usize) -> Result<TestReport> {
    run_battery_with(
        bits,
        &BatteryConfig {
            alpha,
            run_len,
            ..BatteryConfig::default()
        },
    )
}

pub fn run_battery_with(bits: &[bool], cfg: &BatteryConfig) -> Result<TestReport> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {} not in (0,1)", cfg.alpha)));
    }
    if cfg.run_len == 0 {
        return Err(Error::domain("run length must be positive"));
    }
    check_len("battery", bits, cfg.run_len)?;

    let runs = bits.len() / cfg.run_len;
    let jobs: Vec<(usize, Procedure)> = (0..runs)
        .flat_map(|r| PROCEDURES.iter().map(move |&p| (r, p)))
        .collect();
    let params = cfg.params;
    let run_len = cfg.run_len;
    let results = cfg.execution.map(jobs, |(run, proc)| {
        let chunk = &bits[run * run_len..(run + 1) * run_len];
        (run, run_procedure(proc, chunk, &params))
    });

    let mut entries = Vec::with_capacity(runs * TestId::ALL.len());
    for (run_index, outcomes) in results {
        for (test, p) in outcomes {
            entries.push(match p {
                Some(p_value) => TestEntry {
                    test,
                    run_index,
                    p_value,
                    pass: p_value >= cfg.alpha,
                    applicable: true,
                },
                None => TestEntry {
                    test,
                    run_index,
                    p_value: 0.0,
                    pass: false,
                    applicable: false,
                },
            });
        }
    }
    let mut report = TestReport {
        alpha: cfg.alpha,
        run_len: cfg.run_len,
        params,
        entries,
    };
    report.sort();
    Ok(report)
}
