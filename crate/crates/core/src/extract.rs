//! Random bits from clock counts between consecutive detections.
//!
//! The count `N` of clock slots between two clicks is reduced mod 2 for a
//! basis bit, or mod 4 for a (basis, key) pair. A dark-count bootstrap fills
//! the basis buffer before the detector inputs are opened, and alternating
//! flips cancel the constant parity bias left at finite clock resolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SourceModel;
use crate::sim::{self, ClockConfig, ClockMode, IntraGateProfile};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitStream {
    bits: Vec<bool>,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn zeros(&self) -> usize {
        self.len() - self.ones()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    /// Consecutive, non-overlapping chunks of `len` bits; a short tail is dropped.
    pub fn chunks(&self, len: usize) -> impl Iterator<Item = &[bool]> {
        self.bits.chunks_exact(len)
    }

    pub fn complement(&self) -> BitStream {
        self.iter().map(|b| !b).collect()
    }

    pub fn into_vec(self) -> Vec<bool> {
        self.bits
    }
}

impl From<Vec<bool>> for BitStream {
    fn from(bits: Vec<bool>) -> Self {
        BitStream { bits }
    }
}

impl FromIterator<bool> for BitStream {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        BitStream {
            bits: iter.into_iter().collect(),
        }
    }
}

impl std::ops::Deref for BitStream {
    type Target = [bool];

    fn deref(&self) -> &[bool] {
        &self.bits
    }
}

/// Parse `'0'`/`'1'` characters; anything else is rejected. Handy in tests.
impl std::str::FromStr for BitStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(i, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Config(format!("character {other:?} at {i} is not a bit"))),
            })
            .collect()
    }
}

impl std::fmt::Display for BitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Basis and key bit taken from one mod-4 clock count. The basis is the high bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolPair {
    pub basis_bit: bool,
    pub key_bit: bool,
}

impl SymbolPair {
    pub fn from_count(n: u64) -> Self {
        let v = n % 4;
        SymbolPair {
            basis_bit: v >> 1 == 1,
            key_bit: v & 1 == 1,
        }
    }

    pub fn value(&self) -> u8 {
        (self.basis_bit as u8) << 1 | self.key_bit as u8
    }
}

/// Bit-order convention of mod-4 symbols, recorded in run metadata.
pub const MOD4_BIT_ORDER: &str = "basis = (N mod 4) div 2, key = (N mod 4) mod 2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulus {
    Mod2,
    Mod4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorConfig {
    /// Difference the first detection against tick 0.
    pub include_first: bool,
    pub modulus: Modulus,
    pub k_bootstrap: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            include_first: true,
            modulus: Modulus::Mod2,
            k_bootstrap: 0,
        }
    }
}

impl ExtractorConfig {
    pub fn mod2() -> Self {
        Self::default()
    }

    pub fn mod4() -> Self {
        ExtractorConfig {
            modulus: Modulus::Mod4,
            ..Self::default()
        }
    }

    pub fn include_first(self, include_first: bool) -> Self {
        ExtractorConfig {
            include_first,
            ..self
        }
    }
}

/// Clock counts between consecutive detections.
pub fn intervals(slots: impl AsRef<[u64]>, include_first: bool) -> Result<Vec<u64>> {
    let slots = slots.as_ref();
    let mut out = Vec::with_capacity(slots.len());
    let mut counter = IntervalCounter::new(include_first);
    for (i, &s) in slots.iter().enumerate() {
        if let Some(n) = counter.push(s).map_err(|reason| Error::MalformedStream { index: i, reason })? {
            out.push(n);
        }
    }
    Ok(out)
}

/// Incremental interval counter; feeding a stream in pieces gives the same
/// counts as feeding it whole.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntervalCounter {
    last: Option<u64>,
}

impl IntervalCounter {
    pub fn new(include_first: bool) -> Self {
        IntervalCounter {
            last: include_first.then_some(0),
        }
    }

    /// Resume after a detection at `slot` that was already consumed.
    pub fn after(slot: u64) -> Self {
        IntervalCounter { last: Some(slot) }
    }

    pub fn push(&mut self, slot: u64) -> std::result::Result<Option<u64>, String> {
        let n = match self.last {
            Some(prev) if slot <= prev => {
                return Err(format!("slot {slot} does not follow {prev}"));
            }
            Some(prev) => Some(slot - prev),
            None => None,
        };
        self.last = Some(slot);
        Ok(n)
    }
}

fn require(cfg: &ExtractorConfig, modulus: Modulus) -> Result<()> {
    if cfg.modulus == modulus {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "extractor configured for {:?}, called as {modulus:?}",
            cfg.modulus
        )))
    }
}

pub fn extract_mod2(slots: impl AsRef<[u64]>, cfg: &ExtractorConfig) -> Result<BitStream> {
    require(cfg, Modulus::Mod2)?;
    Ok(intervals(slots, cfg.include_first)?
        .into_iter()
        .map(|n| n & 1 == 1)
        .collect())
}

pub fn extract_mod4(slots: impl AsRef<[u64]>, cfg: &ExtractorConfig) -> Result<Vec<SymbolPair>> {
    require(cfg, Modulus::Mod4)?;
    Ok(intervals(slots, cfg.include_first)?
        .into_iter()
        .map(SymbolPair::from_count)
        .collect())
}

/// Flip every other bit, starting with no flip at position 0. Its own inverse.
pub fn flip_debias(raw: &BitStream) -> BitStream {
    raw.iter()
        .enumerate()
        .map(|(t, b)| b ^ (t & 1 == 1))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    /// `min(#0, #1) / max(#0, #1)`.
    pub ratio: f64,
    pub zeros: usize,
    pub ones: usize,
    /// All bits equal (or no bits at all); `ratio` is 0.
    pub degenerate: bool,
}

pub fn balance(bits: &BitStream) -> Balance {
    let ones = bits.ones();
    let zeros = bits.len() - ones;
    let (lo, hi) = (ones.min(zeros), ones.max(zeros));
    Balance {
        ratio: if lo == 0 { 0.0 } else { lo as f64 / hi as f64 },
        zeros,
        ones,
        degenerate: lo == 0,
    }
}

/// Bits from the blocked-input phase: `k` dark counts, each differenced
/// against the previous one (the first against tick 0).
pub fn bootstrap_buffer(clock: &ClockConfig, k: usize, seed: u64) -> Result<BitStream> {
    if k == 0 {
        return Ok(BitStream::new());
    }
    if clock.dark_prob <= 0.0 {
        return Err(Error::NonTermination { budget: 0 });
    }
    let dark_only = SourceModel::poisson(0.0, 1.0)?;
    let events = match clock.mode {
        ClockMode::FreeRunning => sim::generate_free_running(&dark_only, clock, k, seed)?,
        ClockMode::Gated => {
            sim::generate_gated(&dark_only, clock, &IntraGateProfile::Uniform, k, seed)?
        }
    };
    extract_mod2(&events, &ExtractorConfig::mod2())
}
