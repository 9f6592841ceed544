use serde::{Deserialize, Serialize};

use super::{check_len, erfc};
use crate::error::{Error, Result};

/// Block length `L` and initialisation segment size `Q` (in blocks).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalParams {
    pub block_len: u32,
    pub init_blocks: usize,
}

impl UniversalParams {
    /// Reference choice of `L` for a sequence of `n` bits, with `Q = 10 * 2^L`.
    pub fn for_length(n: usize) -> Option<Self> {
        const THRESHOLDS: [(usize, u32); 11] = [
            (1_059_061_760, 16),
            (496_435_200, 15),
            (231_669_760, 14),
            (107_560_960, 13),
            (49_643_520, 12),
            (22_753_280, 11),
            (10_342_400, 10),
            (4_654_080, 9),
            (2_068_480, 8),
            (904_960, 7),
            (387_840, 6),
        ];
        THRESHOLDS
            .iter()
            .find(|(min, _)| n >= *min)
            .map(|&(_, l)| UniversalParams {
                block_len: l,
                init_blocks: 10 << l,
            })
    }
}

const EXPECTED: [f64; 17] = [
    0.0, 0.7326495, 1.5374383, 2.4016068, 3.3112247, 4.2534266, 5.2177052, 6.1962507,
    7.1836656, 8.1764248, 9.1723243, 10.170032, 11.168765, 12.168070, 13.167693,
    14.167488, 15.167379,
];

const VARIANCE: [f64; 17] = [
    0.0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384,
    3.401, 3.410, 3.416, 3.419, 3.421,
];

/// Maurer's universal statistic `f_n` (mean log2 distance between repeated
/// L-bit blocks) and the number of test blocks `K`.
pub fn universal_statistic(bits: &[bool], params: UniversalParams) -> Result<(f64, usize)> {
    let l = params.block_len as usize;
    if !(1..=16).contains(&l) {
        return Err(Error::domain(format!("universal block length {l} not in 1..=16")));
    }
    let total = bits.len() / l;
    if total <= params.init_blocks {
        return Err(Error::InsufficientData {
            test: "universal",
            needed: (params.init_blocks + 1) * l,
            got: bits.len(),
        });
    }
    let k = total - params.init_blocks;
    let block = |i: usize| {
        bits[i * l..(i + 1) * l]
            .iter()
            .fold(0usize, |acc, &b| acc << 1 | b as usize)
    };
    // last 1-based position of each pattern
    let mut last = vec![0usize; 1 << l];
    for i in 0..params.init_blocks {
        last[block(i)] = i + 1;
    }
    let mut sum = 0.0;
    for i in params.init_blocks..total {
        let v = block(i);
        sum += ((i + 1 - last[v]) as f64).log2();
        last[v] = i + 1;
    }
    Ok((sum / k as f64, k))
}

/// `params = None` selects `L` and `Q` from the input length; at least
/// 387,840 bits are then required.
pub fn universal_test(bits: &[bool], params: Option<UniversalParams>) -> Result<f64> {
    let params = match params {
        Some(p) => p,
        None => {
            check_len("universal", bits, 387_840)?;
            UniversalParams::for_length(bits.len()).expect("length checked")
        }
    };
    let (fn_stat, k) = universal_statistic(bits, params)?;
    let l = params.block_len as f64;
    let kf = k as f64;
    let c = 0.7 - 0.8 / l + (4.0 + 32.0 / l) * kf.powf(-3.0 / l) / 15.0;
    let sigma = c * (VARIANCE[params.block_len as usize] / kf).sqrt();
    let expected = EXPECTED[params.block_len as usize];
    Ok(erfc((fn_stat - expected).abs() / (std::f64::consts::SQRT_2 * sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::BitStream;

    #[test]
    fn published_statistic() {
        let bits = "01011010011101010111".parse::<BitStream>().unwrap();
        let (f, k) = universal_statistic(
            &bits,
            UniversalParams {
                block_len: 2,
                init_blocks: 4,
            },
        )
        .unwrap();
        assert_eq!(k, 6);
        assert!((f - 1.1949875).abs() < 1e-7);
    }

    #[test]
    fn parameter_table() {
        let p = UniversalParams::for_length(1_000_000).unwrap();
        assert_eq!((p.block_len, p.init_blocks), (7, 1280));
        assert!(UniversalParams::for_length(100_000).is_none());
        assert_eq!(UniversalParams::for_length(20_000_000).unwrap().block_len, 10);
    }

    #[test]
    fn constant_input_fails() {
        assert!(universal_test(&vec![false; 1_000_000], None).unwrap() < 1e-20);
        assert!(universal_test(&vec![false; 1000], None).is_err());
    }
}
