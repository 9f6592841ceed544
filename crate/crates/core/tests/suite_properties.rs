use photon_clock_rng::extract::{self, BitStream, ExtractorConfig};
use photon_clock_rng::models::SourceModel;
use photon_clock_rng::sim::{self, ClockConfig, IntraGateProfile};
use photon_clock_rng::suite::{self, BatteryConfig, Direction, TestId, UniversalParams};
use photon_clock_rng::Execution;
use proptest::prelude::*;

fn simulated_bits(n: usize, seed: u64) -> BitStream {
    let source = SourceModel::poisson(0.2, 1.0).unwrap();
    let clock = ClockConfig::gated(2, 0.0, 0).unwrap();
    let stream = sim::generate_gated(&source, &clock, &IntraGateProfile::Uniform, n, seed).unwrap();
    extract::extract_mod2(&stream, &ExtractorConfig::mod2()).unwrap()
}

fn unit(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn p_values_lie_in_unit_interval(
        bits in proptest::collection::vec(any::<bool>(), 1000..4000),
        bias in 0u8..4,
    ) {
        // skew some inputs so extreme statistics are exercised too
        let bits: Vec<bool> = bits.iter().enumerate().map(|(i, &b)| b || (bias > 0 && i % (bias as usize + 1) == 0)).collect();
        prop_assert!(unit(suite::frequency_test(&bits).unwrap()));
        prop_assert!(unit(suite::block_frequency_test(&bits, 128).unwrap()));
        prop_assert!(unit(suite::runs_test(&bits).unwrap()));
        prop_assert!(unit(suite::cumulative_sums_test(&bits, Direction::Forward).unwrap()));
        prop_assert!(unit(suite::cumulative_sums_test(&bits, Direction::Reverse).unwrap()));
        prop_assert!(unit(suite::longest_run_test(&bits).unwrap()));
        prop_assert!(unit(suite::dft_test(&bits).unwrap()));
        let (p1, p2) = suite::serial_test(&bits, 4).unwrap();
        prop_assert!(unit(p1) && unit(p2));
        prop_assert!(unit(suite::approximate_entropy_test(&bits, 3).unwrap()));
        prop_assert!(unit(suite::linear_complexity_test(&bits, 5).unwrap()));
        let params = UniversalParams { block_len: 2, init_blocks: 40 };
        prop_assert!(unit(suite::universal_test(&bits, Some(params)).unwrap()));
    }
}

#[test]
fn symmetric_tests_ignore_complement() {
    let bits = simulated_bits(200_000, 11);
    let comp = bits.complement();
    let same = |f: &dyn Fn(&[bool]) -> f64, name: &str| {
        assert_eq!(f(&bits).to_bits(), f(&comp).to_bits(), "{name}");
    };
    same(&|b| suite::frequency_test(b).unwrap(), "frequency");
    same(&|b| suite::block_frequency_test(b, 128).unwrap(), "block frequency");
    same(&|b| suite::runs_test(b).unwrap(), "runs");
    same(&|b| suite::cumulative_sums_test(b, Direction::Forward).unwrap(), "cusum forward");
    same(&|b| suite::cumulative_sums_test(b, Direction::Reverse).unwrap(), "cusum reverse");
    same(&|b| suite::dft_test(b).unwrap(), "dft");
    same(&|b| suite::serial_test(b, 8).unwrap().0, "serial 1");
    same(&|b| suite::serial_test(b, 8).unwrap().1, "serial 2");
    same(&|b| suite::approximate_entropy_test(b, 6).unwrap(), "approximate entropy");
}

#[test]
fn complement_moves_linear_complexity_by_at_most_one() {
    let bits = simulated_bits(100_000, 12);
    let comp = bits.complement();
    let mut changed = 0;
    for (a, b) in bits.chunks(500).zip(comp.chunks(500)) {
        let (la, lb) = (suite::linear_complexity(a), suite::linear_complexity(b));
        assert!(la.abs_diff(lb) <= 1);
        changed += (la != lb) as usize;
    }
    // the complement is not a symmetry of this test
    assert!(changed > 0);
}

#[test]
fn battery_is_deterministic_and_strategy_independent() {
    let bits = simulated_bits(2_000_000, 13);
    let seq = BatteryConfig {
        execution: Execution::Sequential,
        ..BatteryConfig::default()
    };
    let par = BatteryConfig {
        execution: Execution::Parallel,
        ..BatteryConfig::default()
    };
    let a = suite::run_battery_with(&bits, &seq).unwrap();
    let b = suite::run_battery_with(&bits, &par).unwrap();
    let c = suite::run_battery_with(&bits, &par).unwrap();
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert_eq!(a.entries.len(), 26);
    let ids: Vec<TestId> = a.entries.iter().filter(|e| e.run_index == 0).map(|e| e.test).collect();
    assert_eq!(ids, TestId::ALL);
}

#[test]
fn battery_runs_are_disjoint_slices() {
    let bits = simulated_bits(2_500_000, 14);
    let report = suite::run_battery(&bits, 0.01, 1_000_000).unwrap();
    assert_eq!(report.runs(), 2);
    let second = suite::frequency_test(&bits[1_000_000..2_000_000]).unwrap();
    assert_eq!(report.entry(TestId::Frequency, 1).unwrap().p_value, second);
}
