//! Monte Carlo generation of detection events in clock-slot units.
//!
//! Time is discretised into clock slots; slot `s >= 1` is the `s`-th tick after
//! protocol start. Photon clicks and dark counts are merged per slot (or per
//! gate in gated mode) since the extractor cannot tell them apart. Waiting
//! times are drawn by inverse-CDF geometric sampling, which is exact for
//! independent per-slot Bernoulli clicks.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{click_probability, PhotonStatistics, SourceModel};

/// Name of the pseudo-random generator behind every simulation. Part of the
/// reproducibility contract: recorded in run manifests next to the seed.
pub const GENERATOR: &str = "ChaCha20Rng (rand_chacha 0.9, seed_from_u64, stream = component id)";

/// Default number of slots a generator may advance before giving up.
pub const DEFAULT_SLOT_BUDGET: u64 = 1 << 60;

/// Seeded generator for one independent component of a run. Distinct `stream`
/// values give non-overlapping ChaCha streams for the same seed.
pub fn component_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockMode {
    FreeRunning,
    Gated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockConfig {
    pub mode: ClockMode,
    /// Clock slots per gate window (`R`); 1 in free-running mode.
    pub slots_per_gate: u32,
    /// Per-slot (per-gate when gated) dark-count probability.
    pub dark_prob: f64,
    /// Blind slots after each registered click.
    pub dead_slots: u64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            mode: ClockMode::FreeRunning,
            slots_per_gate: 1,
            dark_prob: 0.0,
            dead_slots: 0,
        }
    }
}

impl ClockConfig {
    pub fn free_running(dark_prob: f64, dead_slots: u64) -> Result<Self> {
        let clock = ClockConfig {
            mode: ClockMode::FreeRunning,
            slots_per_gate: 1,
            dark_prob,
            dead_slots,
        };
        clock.validate()?;
        Ok(clock)
    }

    pub fn gated(slots_per_gate: u32, dark_prob: f64, dead_slots: u64) -> Result<Self> {
        let clock = ClockConfig {
            mode: ClockMode::Gated,
            slots_per_gate,
            dark_prob,
            dead_slots,
        };
        clock.validate()?;
        Ok(clock)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots_per_gate == 0 {
            return Err(Error::domain("slots per gate must be >= 1"));
        }
        if self.mode == ClockMode::FreeRunning && self.slots_per_gate != 1 {
            return Err(Error::domain("free-running clock must have 1 slot per gate"));
        }
        if !(0.0..1.0).contains(&self.dark_prob) {
            return Err(Error::domain(format!(
                "dark count probability {} not in [0,1)",
                self.dark_prob
            )));
        }
        Ok(())
    }

    /// Combined click probability of a slot (or gate) given the photon click probability.
    pub fn merged_click_probability(&self, photon_click: f64) -> f64 {
        1.0 - (1.0 - photon_click) * (1.0 - self.dark_prob)
    }
}

/// Where inside a gate a click lands, in clock slots `1..=R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntraGateProfile {
    Uniform,
    /// Always the given 1-based slot (a short-coherence photon pinned in the gate).
    FixedSlot(u32),
    Weighted(Vec<f64>),
}

impl IntraGateProfile {
    pub fn validate(&self, slots_per_gate: u32) -> Result<()> {
        match self {
            IntraGateProfile::Uniform => Ok(()),
            IntraGateProfile::FixedSlot(i) if (1..=slots_per_gate).contains(i) => Ok(()),
            IntraGateProfile::FixedSlot(i) => Err(Error::domain(format!(
                "fixed slot {i} outside 1..={slots_per_gate}"
            ))),
            IntraGateProfile::Weighted(w) => {
                if w.len() != slots_per_gate as usize {
                    return Err(Error::domain(format!(
                        "{} weights given for {slots_per_gate} slots",
                        w.len()
                    )));
                }
                if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(Error::domain("weights must be finite and non-negative"));
                }
                let sum: f64 = w.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(format!("weights sum to {sum}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// Probability of landing in each slot `1..=R`.
    pub fn slot_weights(&self, slots_per_gate: u32) -> Vec<f64> {
        let r = slots_per_gate as usize;
        match self {
            IntraGateProfile::Uniform => vec![1.0 / r as f64; r],
            IntraGateProfile::FixedSlot(i) => {
                let mut w = vec![0.0; r];
                w[*i as usize - 1] = 1.0;
                w
            }
            IntraGateProfile::Weighted(w) => w.clone(),
        }
    }

    pub(crate) fn sampler(&self, slots_per_gate: u32) -> Result<SlotSampler> {
        self.validate(slots_per_gate)?;
        Ok(match self {
            _ if slots_per_gate == 1 => SlotSampler::Fixed(1),
            IntraGateProfile::Uniform => SlotSampler::Uniform(slots_per_gate),
            IntraGateProfile::FixedSlot(i) => SlotSampler::Fixed(*i),
            IntraGateProfile::Weighted(w) => SlotSampler::Weighted(
                WeightedIndex::new(w).map_err(|e| Error::domain(e.to_string()))?,
            ),
        })
    }
}

impl std::str::FromStr for IntraGateProfile {
    type Err = Error;

    /// `uniform`, `fixed:<slot>` or `weighted:<w1>,<w2>,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse intra-gate profile `{s}`"));
        match s.split_once(':') {
            None if s == "uniform" => Ok(IntraGateProfile::Uniform),
            Some(("fixed", i)) => Ok(IntraGateProfile::FixedSlot(i.parse().map_err(|_| bad())?)),
            Some(("weighted", ws)) => ws
                .split(',')
                .map(|w| w.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(IntraGateProfile::Weighted),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum SlotSampler {
    Uniform(u32),
    Fixed(u32),
    Weighted(WeightedIndex<f64>),
}

impl SlotSampler {
    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            SlotSampler::Uniform(r) => rng.random_range(1..=*r as u64),
            SlotSampler::Fixed(i) => *i as u64,
            SlotSampler::Weighted(w) => w.sample(rng) as u64 + 1,
        }
    }
}

/// Detection times of one detector, as absolute clock-slot indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    slots: Vec<u64>,
    clock: ClockConfig,
}

impl EventStream {
    /// Checks the slots are strictly increasing, start at 1 or later and
    /// respect the clock's dead time.
    pub fn new(slots: Vec<u64>, clock: ClockConfig) -> Result<Self> {
        clock.validate()?;
        if let Some(&first) = slots.first() {
            if first == 0 {
                return Err(Error::MalformedStream {
                    index: 0,
                    reason: "slot 0 is the protocol start; detections begin at 1".into(),
                });
            }
        }
        for (i, w) in slots.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::MalformedStream {
                    index: i + 1,
                    reason: format!("slot {} does not follow {}", w[1], w[0]),
                });
            }
            if w[1] - w[0] <= clock.dead_slots {
                return Err(Error::MalformedStream {
                    index: i + 1,
                    reason: format!(
                        "gap {} within dead time of {} slots",
                        w[1] - w[0],
                        clock.dead_slots
                    ),
                });
            }
        }
        Ok(EventStream { slots, clock })
    }

    pub fn slots(&self) -> &[u64] {
        &self.slots
    }

    pub fn clock(&self) -> &ClockConfig {
        &self.clock
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn into_slots(self) -> Vec<u64> {
        self.slots
    }

    /// Gate index (1-based) of every detection.
    pub fn gates(&self) -> impl Iterator<Item = u64> + '_ {
        let r = self.clock.slots_per_gate as u64;
        self.slots.iter().map(move |s| (s - 1) / r + 1)
    }
}

impl AsRef<[u64]> for EventStream {
    fn as_ref(&self) -> &[u64] {
        &self.slots
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub slot_budget: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            slot_budget: DEFAULT_SLOT_BUDGET,
        }
    }
}

/// Number of trials up to and including the first success, for success
/// probability `p` in (0, 1].
pub fn sample_geometric<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    // u in (0, 1] so ln(u) is finite
    let u = 1.0 - rng.random::<f64>();
    let k = (u.ln() / (-p).ln_1p()).floor();
    if k >= u64::MAX as f64 {
        u64::MAX
    } else {
        1 + k as u64
    }
}

/// Photon number whose cumulative probability first reaches `u`.
pub fn photon_number_inverse_cdf(source: &SourceModel, u: f64) -> u64 {
    let mu = source.mu;
    let ratio = |n: u64| match source.distribution {
        PhotonStatistics::Poisson => mu / (n + 1) as f64,
        PhotonStatistics::Thermal => mu / (mu + 1.0),
    };
    let mut term = match source.distribution {
        PhotonStatistics::Poisson => (-mu).exp(),
        PhotonStatistics::Thermal => 1.0 / (mu + 1.0),
    };
    let mut cdf = term;
    let mut n = 0u64;
    while cdf < u {
        term *= ratio(n);
        n += 1;
        let next = cdf + term;
        // stuck in the far tail where terms no longer move the sum
        if next == cdf && (n as f64) > mu {
            break;
        }
        cdf = next;
    }
    n
}

pub fn sample_photon_number<R: Rng + ?Sized>(rng: &mut R, source: &SourceModel) -> u64 {
    photon_number_inverse_cdf(source, rng.random::<f64>())
}

fn per_slot_probability(source: &SourceModel, clock: &ClockConfig, n_events: usize) -> Result<f64> {
    source.validate()?;
    clock.validate()?;
    let p = clock.merged_click_probability(click_probability(source)?);
    if p <= 0.0 && n_events > 0 {
        return Err(Error::NonTermination { budget: 0 });
    }
    Ok(p)
}

fn advance(current: u64, by: u64, budget: u64) -> Result<u64> {
    match current.checked_add(by) {
        Some(next) if next <= budget => Ok(next),
        _ => Err(Error::NonTermination { budget }),
    }
}

/// Free-running detector: every slot clicks independently, then stays blind
/// for `dead_slots` slots.
pub fn generate_free_running(
    source: &SourceModel,
    clock: &ClockConfig,
    n_events: usize,
    seed: u64,
) -> Result<EventStream> {
    generate_free_running_with(source, clock, n_events, seed, SimOptions::default())
}

pub fn generate_free_running_with(
    source: &SourceModel,
    clock: &ClockConfig,
    n_events: usize,
    seed: u64,
    opts: SimOptions,
) -> Result<EventStream> {
    if clock.mode != ClockMode::FreeRunning {
        return Err(Error::Config("free-running generator needs a free-running clock".into()));
    }
    let p = per_slot_probability(source, clock, n_events)?;
    let mut rng = component_rng(seed, 0);
    let mut slots = Vec::with_capacity(n_events);
    let mut last = 0u64;
    for i in 0..n_events {
        let dead = if i == 0 { 0 } else { clock.dead_slots };
        let gap = sample_geometric(&mut rng, p);
        last = advance(last, dead.saturating_add(gap), opts.slot_budget)?;
        slots.push(last);
    }
    Ok(EventStream {
        slots,
        clock: *clock,
    })
}

/// Gated detector: each gate clicks with the merged probability and the click
/// lands on a slot inside the gate drawn from `profile`. Clicks that fall in
/// the dead time of the previous detection are lost.
pub fn generate_gated(
    source: &SourceModel,
    clock: &ClockConfig,
    profile: &IntraGateProfile,
    n_events: usize,
    seed: u64,
) -> Result<EventStream> {
    generate_gated_with(source, clock, profile, n_events, seed, SimOptions::default())
}

pub fn generate_gated_with(
    source: &SourceModel,
    clock: &ClockConfig,
    profile: &IntraGateProfile,
    n_events: usize,
    seed: u64,
    opts: SimOptions,
) -> Result<EventStream> {
    if clock.mode != ClockMode::Gated {
        return Err(Error::Config("gated generator needs a gated clock".into()));
    }
    let p = per_slot_probability(source, clock, n_events)?;
    let sampler = profile.sampler(clock.slots_per_gate)?;
    let r = clock.slots_per_gate as u64;
    let gate_budget = opts.slot_budget / r;
    let mut rng = component_rng(seed, 0);
    let mut slots: Vec<u64> = Vec::with_capacity(n_events);
    let mut gate = 0u64;
    while slots.len() < n_events {
        gate = advance(gate, sample_geometric(&mut rng, p), gate_budget)?;
        let slot = (gate - 1) * r + sampler.sample(&mut rng);
        match slots.last() {
            Some(&prev) if slot - prev <= clock.dead_slots => continue,
            _ => slots.push(slot),
        }
    }
    Ok(EventStream {
        slots,
        clock: *clock,
    })
}

/// Counts of even and odd inter-detection gaps, the first detection being
/// differenced against tick 0.
pub fn empirical_parity(stream: &EventStream) -> Result<(u64, u64)> {
    if stream.is_empty() {
        return Err(Error::EmptyInput("event stream"));
    }
    let mut odd = 0u64;
    let mut prev = 0u64;
    for &s in stream.slots() {
        odd += (s - prev) & 1;
        prev = s;
    }
    Ok((stream.len() as u64 - odd, odd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::parity_probabilities;

    fn fr(dark: f64, dead: u64) -> ClockConfig {
        ClockConfig::free_running(dark, dead).unwrap()
    }

    fn gaps(stream: &EventStream) -> Vec<u64> {
        let mut prev = 0;
        stream
            .slots()
            .iter()
            .map(|&s| {
                let g = s - prev;
                prev = s;
                g
            })
            .collect()
    }

    #[test]
    fn certain_click_fills_every_slot() {
        let src = SourceModel::poisson(1e6, 1.0).unwrap();
        let s = generate_free_running(&src, &fr(0.0, 0), 3, 7).unwrap();
        assert_eq!(s.slots(), &[1, 2, 3]);
    }

    #[test]
    fn mean_gap_matches_geometric() {
        let src = SourceModel::poisson_with_click_probability(0.0075).unwrap();
        let s = generate_free_running(&src, &fr(0.0, 0), 1_000_000, 11).unwrap();
        let mean = *s.slots().last().unwrap() as f64 / s.len() as f64;
        let expected = 1.0 / 0.0075;
        assert!((mean / expected - 1.0).abs() < 0.005, "mean gap {mean}");
    }

    #[test]
    fn dead_time_floor() {
        let src = SourceModel::poisson_with_click_probability(0.5).unwrap();
        let s = generate_free_running(&src, &fr(0.0, 3), 100_000, 3).unwrap();
        let g = gaps(&s);
        assert_eq!(g[1..].iter().min(), Some(&4));
    }

    #[test]
    fn deterministic_given_seed() {
        let src = SourceModel::thermal(0.4, 0.7).unwrap();
        let clock = ClockConfig::gated(4, 0.01, 2).unwrap();
        let a = generate_gated(&src, &clock, &IntraGateProfile::Uniform, 5000, 99).unwrap();
        let b = generate_gated(&src, &clock, &IntraGateProfile::Uniform, 5000, 99).unwrap();
        let c = generate_gated(&src, &clock, &IntraGateProfile::Uniform, 5000, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_probability_guard() {
        let src = SourceModel::poisson(0.0, 1.0).unwrap();
        assert!(matches!(
            generate_free_running(&src, &fr(0.0, 0), 1, 0),
            Err(Error::NonTermination { .. })
        ));
        assert!(generate_free_running(&src, &fr(0.0, 0), 0, 0).unwrap().is_empty());
        let opts = SimOptions { slot_budget: 1000 };
        let faint = SourceModel::poisson_with_click_probability(1e-9).unwrap();
        assert!(matches!(
            generate_free_running_with(&faint, &fr(0.0, 0), 10, 0, opts),
            Err(Error::NonTermination { budget: 1000 })
        ));
    }

    #[test]
    fn mode_mismatch_rejected() {
        let src = SourceModel::poisson(0.1, 1.0).unwrap();
        let gated = ClockConfig::gated(2, 0.0, 0).unwrap();
        assert!(generate_free_running(&src, &gated, 1, 0).is_err());
        assert!(generate_gated(&src, &fr(0.0, 0), &IntraGateProfile::Uniform, 1, 0).is_err());
    }

    #[test]
    fn clock_and_profile_validation() {
        assert!(ClockConfig::gated(0, 0.0, 0).is_err());
        assert!(ClockConfig::free_running(1.0, 0).is_err());
        let bad = ClockConfig {
            mode: ClockMode::FreeRunning,
            slots_per_gate: 2,
            ..ClockConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(IntraGateProfile::FixedSlot(3).validate(2).is_err());
        assert!(IntraGateProfile::FixedSlot(0).validate(2).is_err());
        assert!(IntraGateProfile::Weighted(vec![0.5, 0.4]).validate(2).is_err());
        assert!(IntraGateProfile::Weighted(vec![0.5, 0.5]).validate(3).is_err());
        assert!(IntraGateProfile::Weighted(vec![0.25; 4]).validate(4).is_ok());
    }

    #[test]
    fn profile_parsing() {
        assert_eq!("uniform".parse::<IntraGateProfile>().unwrap(), IntraGateProfile::Uniform);
        assert_eq!(
            "fixed:2".parse::<IntraGateProfile>().unwrap(),
            IntraGateProfile::FixedSlot(2)
        );
        assert_eq!(
            "weighted:0.25,0.75".parse::<IntraGateProfile>().unwrap(),
            IntraGateProfile::Weighted(vec![0.25, 0.75])
        );
        assert!("fixed:x".parse::<IntraGateProfile>().is_err());
    }

    #[test]
    fn fixed_slot_makes_all_gaps_even() {
        let src = SourceModel::poisson_with_click_probability(0.3).unwrap();
        let clock = ClockConfig::gated(2, 0.0, 0).unwrap();
        let s = generate_gated(&src, &clock, &IntraGateProfile::FixedSlot(1), 10_000, 5).unwrap();
        // first gap is (gate-1)*2 + 1 against tick 0; the rest are even
        assert!(gaps(&s)[1..].iter().all(|g| g % 2 == 0));
    }

    #[test]
    fn gated_slots_stay_inside_their_gate() {
        let src = SourceModel::poisson(0.8, 1.0).unwrap();
        let clock = ClockConfig::gated(3, 0.0, 0).unwrap();
        let w = IntraGateProfile::Weighted(vec![0.0, 0.0, 1.0]);
        let s = generate_gated(&src, &clock, &w, 1000, 1).unwrap();
        assert!(s.slots().iter().all(|x| x % 3 == 0));
    }

    #[test]
    fn stream_validation() {
        let c = fr(0.0, 2);
        assert!(EventStream::new(vec![1, 4, 7], c).is_ok());
        assert!(EventStream::new(vec![0, 4], c).is_err());
        assert!(EventStream::new(vec![4, 4], fr(0.0, 0)).is_err());
        assert!(EventStream::new(vec![5, 3], fr(0.0, 0)).is_err());
        assert!(matches!(
            EventStream::new(vec![1, 3], c),
            Err(Error::MalformedStream { index: 1, .. })
        ));
    }

    #[test]
    fn empirical_parity_examples() {
        let s = EventStream::new(vec![2, 4, 6], fr(0.0, 0)).unwrap();
        assert_eq!(empirical_parity(&s).unwrap(), (3, 0));
        let s = EventStream::new(vec![1, 2, 4, 7], fr(0.0, 0)).unwrap();
        assert_eq!(empirical_parity(&s).unwrap(), (1, 3));
        let empty = EventStream::new(vec![], fr(0.0, 0)).unwrap();
        assert!(matches!(empirical_parity(&empty), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn odd_fraction_matches_prediction() {
        let src = SourceModel::poisson(0.5, 1.0).unwrap();
        let n = 1_000_000;
        let s = generate_free_running(&src, &fr(0.0, 0), n, 2024).unwrap();
        let (_, odd) = empirical_parity(&s).unwrap();
        let p = parity_probabilities(&src).unwrap().p_odd;
        assert!((p - 0.62246).abs() < 1e-5);
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((odd as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn photon_number_sampler_mean() {
        let mut rng = component_rng(1, 0);
        for src in [
            SourceModel::poisson(0.7, 1.0).unwrap(),
            SourceModel::thermal(0.7, 1.0).unwrap(),
        ] {
            let n = 200_000;
            let total: u64 = (0..n).map(|_| sample_photon_number(&mut rng, &src)).sum();
            let mean = total as f64 / n as f64;
            // thermal variance mu(mu+1) is the larger of the two
            let sigma = (0.7f64 * 1.7 / n as f64).sqrt();
            assert!((mean - 0.7).abs() < 4.0 * sigma, "{src:?}: {mean}");
        }
    }

    #[test]
    fn geometric_edge_cases() {
        let mut rng = component_rng(0, 0);
        assert!((0..100).all(|_| sample_geometric(&mut rng, 1.0) == 1));
        assert!((0..100).all(|_| sample_geometric(&mut rng, 1e-300) >= 1));
    }
}
