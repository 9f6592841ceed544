//! Protocol harness: BBM92 and BB84 runs whose basis choices come from each
//! party's own detection times, plus a timing-only eavesdropper.
//!
//! Entanglement is modelled at the correlation level. When both arms register
//! a photon from the same gate and the bases agree, Bob's bit equals Alice's
//! up to the intrinsic error rate; every other coincidence yields independent
//! fair bits.
//!
//! Every registered detection advances its party's basis chooser. The chooser
//! is a FIFO of `k_bootstrap` dark-count bits: each detection pushes the bit
//! of the interval that ended at it and uses the bit at the front. With
//! `k_bootstrap = 0` detection `T` uses the interval `(T-1, T]`.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{self, BitStream, ExtractorConfig, SymbolPair};
use crate::models::{click_probability, photon_pmf, SourceModel};
use crate::sim::{
    self, component_rng, photon_number_inverse_cdf, sample_geometric, ClockConfig, ClockMode,
    IntraGateProfile, SlotSampler,
};

/// Basis-timing convention, recorded with protocol results.
pub const BASIS_CONVENTION: &str =
    "basis for detection T = bit of interval (T-1-k, T-k], first k from dark-count bootstrap";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Pair emission statistics per gate; `eta` is the detector efficiency.
    pub pair_source: SourceModel,
    pub channel_transmittance_alice: f64,
    pub channel_transmittance_bob: f64,
    pub clock_alice: ClockConfig,
    pub clock_bob: ClockConfig,
    pub profile: IntraGateProfile,
    pub intrinsic_error: f64,
    pub n_gates: u64,
    pub k_bootstrap: usize,
    pub seed: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        let gated = ClockConfig {
            mode: ClockMode::Gated,
            slots_per_gate: 2,
            dark_prob: 0.0,
            dead_slots: 0,
        };
        ProtocolParams {
            pair_source: SourceModel {
                distribution: crate::models::PhotonStatistics::Poisson,
                mu: 0.1,
                eta: 1.0,
            },
            channel_transmittance_alice: 1.0,
            channel_transmittance_bob: 1.0,
            clock_alice: gated,
            clock_bob: gated,
            profile: IntraGateProfile::Uniform,
            intrinsic_error: 0.0,
            n_gates: 100_000,
            k_bootstrap: 0,
            seed: 0,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        self.pair_source.validate()?;
        for (name, t) in [
            ("alice", self.channel_transmittance_alice),
            ("bob", self.channel_transmittance_bob),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::domain(format!("{name} transmittance {t} not in [0,1]")));
            }
        }
        self.clock_alice.validate()?;
        self.clock_bob.validate()?;
        self.profile.validate(self.clock_alice.slots_per_gate)?;
        self.profile.validate(self.clock_bob.slots_per_gate)?;
        if !(0.0..=0.5).contains(&self.intrinsic_error) {
            return Err(Error::domain(format!(
                "intrinsic error {} not in [0,0.5]",
                self.intrinsic_error
            )));
        }
        if self.n_gates == 0 {
            return Err(Error::domain("at least one gate is required"));
        }
        Ok(())
    }

    fn arm_efficiency(&self, party: Party) -> f64 {
        self.pair_source.eta
            * match party {
                Party::Alice => self.channel_transmittance_alice,
                Party::Bob => self.channel_transmittance_bob,
            }
    }

    fn clock(&self, party: Party) -> &ClockConfig {
        match party {
            Party::Alice => &self.clock_alice,
            Party::Bob => &self.clock_bob,
        }
    }

    /// Per-gate click probability of one arm, photons and dark counts merged.
    pub fn arm_click_probability(&self, party: Party) -> Result<f64> {
        let photon = click_probability(&self.pair_source.attenuated(match party {
            Party::Alice => self.channel_transmittance_alice,
            Party::Bob => self.channel_transmittance_bob,
        })?)?;
        Ok(self.clock(party).merged_click_probability(photon))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub coincidences: u64,
    pub sifted_length: u64,
    pub errors: u64,
    pub qber: f64,
    pub basis_balance_alice: f64,
    pub basis_balance_bob: f64,
    pub sift_fraction: f64,
    pub alice_detections: u64,
    pub bob_detections: u64,
    /// Gates where both arms detected a photon of the pair, before dead time.
    pub photon_coincidences: u64,
    /// Pearson correlation of the two parties' basis bits over coincidences.
    pub basis_correlation: f64,
}

/// How Alice picks her basis and key bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AliceMode {
    /// Basis from her detection times (mod 2); key bit is the measurement outcome.
    EntangledMod2,
    /// Basis and key from her heralding detector (mod 4).
    HeraldedMod4,
    /// Basis and key from an ideal out-of-band generator.
    Ideal,
}

/// Basis (or symbol) chooser fed by one detector.
struct Chooser {
    counter: extract::IntervalCounter,
    buffer: VecDeque<SymbolPair>,
    last_slot: Option<u64>,
    dead_slots: u64,
    slots_per_gate: u64,
    sampler: SlotSampler,
}

impl Chooser {
    fn new(clock: &ClockConfig, profile: &IntraGateProfile, bootstrap: Vec<SymbolPair>) -> Result<Self> {
        Ok(Chooser {
            counter: extract::IntervalCounter::new(true),
            buffer: bootstrap.into(),
            last_slot: None,
            dead_slots: clock.dead_slots,
            slots_per_gate: clock.slots_per_gate as u64,
            sampler: profile.sampler(clock.slots_per_gate)?,
        })
    }

    /// Registers a click in `gate` unless it falls in the dead time; returns
    /// the symbol used for this detection.
    fn click(&mut self, gate: u64, rng: &mut ChaCha20Rng) -> Option<SymbolPair> {
        let slot = (gate - 1) * self.slots_per_gate + self.sampler.sample(rng);
        if let Some(prev) = self.last_slot {
            if slot - prev <= self.dead_slots {
                return None;
            }
        }
        self.last_slot = Some(slot);
        let n = self
            .counter
            .push(slot)
            .expect("gates are visited in increasing order")
            .expect("counter starts at tick 0");
        self.buffer.push_back(SymbolPair::from_count(n));
        Some(self.buffer.pop_front().expect("just pushed"))
    }
}

#[derive(Default)]
struct BasisCount {
    detections: u64,
    ones: u64,
}

impl BasisCount {
    fn record(&mut self, basis: bool) -> bool {
        self.detections += 1;
        self.ones += basis as u64;
        basis
    }

    fn balance(&self) -> f64 {
        let zeros = self.detections - self.ones;
        let (lo, hi) = (zeros.min(self.ones), zeros.max(self.ones));
        if lo == 0 {
            0.0
        } else {
            lo as f64 / hi as f64
        }
    }
}

/// SplitMix64 finaliser, for deriving independent sub-seeds.
pub(crate) fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_GATES: u64 = 1;
const STREAM_ALICE: u64 = 2;
const STREAM_BOB: u64 = 3;
const STREAM_BITS: u64 = 4;
const STREAM_IDEAL: u64 = 5;

fn bootstrap_symbols(clock: &ClockConfig, k: usize, seed: u64) -> Result<Vec<SymbolPair>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if clock.dark_prob <= 0.0 {
        return Err(Error::NonTermination { budget: 0 });
    }
    let dark = SourceModel::poisson(0.0, 1.0)?;
    let events = match clock.mode {
        ClockMode::FreeRunning => sim::generate_free_running(&dark, clock, k, seed)?,
        ClockMode::Gated => sim::generate_gated(&dark, clock, &IntraGateProfile::Uniform, k, seed)?,
    };
    extract::extract_mod4(&events, &ExtractorConfig::mod4())
}

/// What happened at one gate where at least something occurred.
struct GateEvent {
    photon_a: bool,
    photon_b: bool,
    dark_a: bool,
    dark_b: bool,
}

struct GateSampler {
    source: SourceModel,
    p_zero: f64,
    eta_a: f64,
    eta_b: f64,
    dark_a: f64,
    dark_b: f64,
    p_event: f64,
}

impl GateSampler {
    fn new(params: &ProtocolParams) -> Result<Self> {
        let p_zero = photon_pmf(&params.pair_source, 0)?;
        let (dark_a, dark_b) = (params.clock_alice.dark_prob, params.clock_bob.dark_prob);
        Ok(GateSampler {
            source: params.pair_source,
            p_zero,
            eta_a: params.arm_efficiency(Party::Alice),
            eta_b: params.arm_efficiency(Party::Bob),
            dark_a,
            dark_b,
            p_event: 1.0 - p_zero * (1.0 - dark_a) * (1.0 - dark_b),
        })
    }

    /// Samples a gate conditioned on a pair emission or a dark count.
    fn sample(&self, rng: &mut ChaCha20Rng) -> GateEvent {
        let p_pair = 1.0 - self.p_zero;
        if rng.random::<f64>() * self.p_event < p_pair {
            // photon number conditioned on n >= 1
            let u = self.p_zero + rng.random::<f64>() * p_pair;
            let n = photon_number_inverse_cdf(&self.source, u).max(1) as i32;
            GateEvent {
                photon_a: rng.random::<f64>() < 1.0 - (1.0 - self.eta_a).powi(n),
                photon_b: rng.random::<f64>() < 1.0 - (1.0 - self.eta_b).powi(n),
                dark_a: rng.random::<f64>() < self.dark_a,
                dark_b: rng.random::<f64>() < self.dark_b,
            }
        } else {
            // no pair: at least one dark count
            let either = 1.0 - (1.0 - self.dark_a) * (1.0 - self.dark_b);
            let dark_a = rng.random::<f64>() * either < self.dark_a;
            let dark_b = if dark_a {
                rng.random::<f64>() < self.dark_b
            } else {
                true
            };
            GateEvent {
                photon_a: false,
                photon_b: false,
                dark_a,
                dark_b,
            }
        }
    }
}

fn run_protocol(params: &ProtocolParams, alice_mode: AliceMode) -> Result<ProtocolResult> {
    params.validate()?;
    for party in [Party::Alice, Party::Bob] {
        if params.arm_click_probability(party)? <= 0.0 {
            return Err(Error::NonTermination { budget: params.n_gates });
        }
    }
    let seed = params.seed;
    let boot_a = match alice_mode {
        AliceMode::Ideal => Vec::new(),
        _ => bootstrap_symbols(&params.clock_alice, params.k_bootstrap, derive_seed(seed, 10))?,
    };
    let boot_b = bootstrap_symbols(&params.clock_bob, params.k_bootstrap, derive_seed(seed, 11))?;
    let mut alice = Chooser::new(&params.clock_alice, &params.profile, boot_a)?;
    let mut bob = Chooser::new(&params.clock_bob, &params.profile, boot_b)?;

    let mut rng_gates = component_rng(seed, STREAM_GATES);
    let mut rng_a = component_rng(seed, STREAM_ALICE);
    let mut rng_b = component_rng(seed, STREAM_BOB);
    let mut rng_bits = component_rng(seed, STREAM_BITS);
    let mut rng_ideal = component_rng(seed, STREAM_IDEAL);

    let gates = GateSampler::new(params)?;
    let mut tally = Tally::default();
    let (mut count_a, mut count_b) = (BasisCount::default(), BasisCount::default());
    let mut gate = 0u64;
    loop {
        gate = gate.saturating_add(sample_geometric(&mut rng_gates, gates.p_event));
        if gate > params.n_gates {
            break;
        }
        let ev = gates.sample(&mut rng_gates);
        if ev.photon_a && ev.photon_b {
            tally.photon_coincidences += 1;
        }
        // (basis, key) per registered detection; the entangled key bit is
        // only drawn at coincidences
        let a = if ev.photon_a || ev.dark_a {
            alice.click(gate, &mut rng_a).map(|s| match alice_mode {
                AliceMode::EntangledMod2 => (count_a.record(s.key_bit), None),
                AliceMode::HeraldedMod4 => (count_a.record(s.basis_bit), Some(s.key_bit)),
                AliceMode::Ideal => (
                    count_a.record(rng_ideal.random()),
                    Some(rng_ideal.random::<bool>()),
                ),
            })
        } else {
            None
        };
        let b = if ev.photon_b || ev.dark_b {
            bob.click(gate, &mut rng_b).map(|s| count_b.record(s.key_bit))
        } else {
            None
        };
        let (Some((alice_basis, alice_key)), Some(bob_basis)) = (a, b) else {
            continue;
        };
        let alice_key = alice_key.unwrap_or_else(|| rng_bits.random());
        tally.coincidence(alice_basis, bob_basis);
        if alice_basis != bob_basis {
            continue;
        }
        let correlated = ev.photon_a && ev.photon_b;
        let bob_key = if correlated {
            alice_key ^ rng_bits.random_bool(params.intrinsic_error)
        } else {
            rng_bits.random::<bool>()
        };
        tally.sifted += 1;
        tally.errors += (bob_key != alice_key) as u64;
    }

    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(ProtocolResult {
        coincidences: tally.coincidences,
        sifted_length: tally.sifted,
        errors: tally.errors,
        qber: ratio(tally.errors, tally.sifted),
        basis_balance_alice: count_a.balance(),
        basis_balance_bob: count_b.balance(),
        sift_fraction: ratio(tally.sifted, tally.coincidences),
        alice_detections: count_a.detections,
        bob_detections: count_b.detections,
        photon_coincidences: tally.photon_coincidences,
        basis_correlation: tally.correlation(),
    })
}

#[derive(Default)]
struct Tally {
    coincidences: u64,
    sifted: u64,
    errors: u64,
    photon_coincidences: u64,
    sum_a: i64,
    sum_b: i64,
    sum_ab: i64,
}

impl Tally {
    fn coincidence(&mut self, a: bool, b: bool) {
        let (x, y) = (if a { 1 } else { -1 }, if b { 1 } else { -1 });
        self.coincidences += 1;
        self.sum_a += x;
        self.sum_b += y;
        self.sum_ab += x * y;
    }

    fn correlation(&self) -> f64 {
        let n = self.coincidences as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (ma, mb) = (self.sum_a as f64 / n, self.sum_b as f64 / n);
        let cov = self.sum_ab as f64 / n - ma * mb;
        let denom = ((1.0 - ma * ma) * (1.0 - mb * mb)).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            cov / denom
        }
    }
}

/// Entanglement-based run: both parties choose bases from `N mod 2` of their
/// own detection times.
pub fn run_bbm92(params: &ProtocolParams) -> Result<ProtocolResult> {
    run_protocol(params, AliceMode::EntangledMod2)
}

/// Prepare-and-measure run. Arm A is Alice's heralding detector; with
/// `heralded_alice` her (basis, key) pair is `N mod 4` of her herald times,
/// otherwise it comes from an ideal generator. Bob always uses `N mod 2`.
pub fn run_bb84(params: &ProtocolParams, heralded_alice: bool) -> Result<ProtocolResult> {
    let mode = if heralded_alice {
        AliceMode::HeraldedMod4
    } else {
        AliceMode::Ideal
    };
    run_protocol(params, mode)
}

/// Probability that `N` is odd given what a timing-only observer knows.
struct ParityModel {
    /// `P(intra slot is odd)`
    slot_odd: f64,
    /// `P(i_t - i_{t-1} is odd)` for independent intra slots
    diff_odd: f64,
    slots_per_gate: u64,
}

impl ParityModel {
    fn new(weights: &[f64]) -> Self {
        let slot_odd: f64 = weights.iter().step_by(2).sum();
        ParityModel {
            slot_odd,
            diff_odd: 2.0 * slot_odd * (1.0 - slot_odd),
            slots_per_gate: weights.len() as u64,
        }
    }

    /// `P(N odd)` for the first detection in gate `gate`.
    fn first(&self, gate: u64) -> f64 {
        if ((gate - 1) * self.slots_per_gate).is_multiple_of(2) {
            self.slot_odd
        } else {
            1.0 - self.slot_odd
        }
    }

    /// `P(N odd)` for a detection `gate_delta` gates after the previous one.
    fn next(&self, gate_delta: u64) -> f64 {
        if (gate_delta * self.slots_per_gate).is_multiple_of(2) {
            self.diff_odd
        } else {
            1.0 - self.diff_odd
        }
    }
}

/// Maximum-likelihood guess; ties go to even.
fn guess_odd(p_odd: f64) -> bool {
    p_odd > 0.5
}

/// Success rate above 1/2 of an eavesdropper who sees only the gate of each of
/// Bob's detections and guesses his basis bit by maximum likelihood from the
/// public intra-gate profile.
pub fn eve_qnd_advantage(params: &ProtocolParams, n_events: usize) -> Result<f64> {
    params.validate()?;
    let clock = &params.clock_bob;
    if clock.mode != ClockMode::Gated {
        return Err(Error::Config("timing attack needs a gated clock".into()));
    }
    if n_events == 0 {
        return Err(Error::EmptyInput("eavesdropper needs at least one detection"));
    }
    let source = params.pair_source.attenuated(params.channel_transmittance_bob)?;
    let stream = sim::generate_gated(
        &source,
        clock,
        &params.profile,
        n_events,
        derive_seed(params.seed, 20),
    )?;
    let bits: BitStream = extract::extract_mod2(&stream, &ExtractorConfig::mod2())?;
    let model = ParityModel::new(&params.profile.slot_weights(clock.slots_per_gate));

    let mut correct = 0u64;
    let mut prev_gate = None;
    for (gate, bit) in stream.gates().zip(bits.iter()) {
        let p_odd = match prev_gate {
            None => model.first(gate),
            Some(prev) => model.next(gate - prev),
        };
        correct += (guess_odd(p_odd) == bit) as u64;
        prev_gate = Some(gate);
    }
    Ok(correct as f64 / n_events as f64 - 0.5)
}
