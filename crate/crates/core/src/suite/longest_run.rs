use super::{check_len, igamc};
use crate::error::Result;

struct Layout {
    block_len: usize,
    /// Run lengths at or below `classes[0]` fall in the first class, at or
    /// above the last in the final class.
    classes: &'static [usize],
    probabilities: &'static [f64],
}

const SHORT: Layout = Layout {
    block_len: 8,
    classes: &[1, 2, 3, 4],
    probabilities: &[0.2148, 0.3672, 0.2305, 0.1875],
};

const MEDIUM: Layout = Layout {
    block_len: 128,
    classes: &[4, 5, 6, 7, 8, 9],
    probabilities: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
};

const LONG: Layout = Layout {
    block_len: 10_000,
    classes: &[10, 11, 12, 13, 14, 15, 16],
    probabilities: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
};

/// Longest run of ones within blocks, binned against its reference distribution.
/// Block length is 8, 128 or 10^4 depending on the input length.
pub fn longest_run_test(bits: &[bool]) -> Result<f64> {
    check_len("longest run of ones", bits, 128)?;
    let layout = match bits.len() {
        n if n < 6272 => &SHORT,
        n if n < 750_000 => &MEDIUM,
        _ => &LONG,
    };
    Ok(longest_run_p(bits, layout))
}

fn longest_run_p(bits: &[bool], layout: &Layout) -> f64 {
    let k = layout.classes.len();
    let mut counts = vec![0u64; k];
    for block in bits.chunks_exact(layout.block_len) {
        let (mut run, mut longest) = (0usize, 0usize);
        for &b in block {
            run = if b { run + 1 } else { 0 };
            longest = longest.max(run);
        }
        let class = layout
            .classes
            .iter()
            .position(|&c| longest <= c)
            .unwrap_or(k - 1);
        counts[class] += 1;
    }
    let blocks = (bits.len() / layout.block_len) as f64;
    let chi2: f64 = counts
        .iter()
        .zip(layout.probabilities)
        .map(|(&v, &p)| (v as f64 - blocks * p).powi(2) / (blocks * p))
        .sum();
    igamc((k - 1) as f64 / 2.0, chi2 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::BitStream;

    #[test]
    fn published_example() {
        let bits = "11001100000101010110110001001100111000000000001001001101010100010001001111010110100000001101011111001100111001101101100010110010"
            .parse::<BitStream>()
            .unwrap();
        // the published value carries rounded class probabilities
        assert!((longest_run_test(&bits).unwrap() - 0.180609).abs() < 2e-4);
    }

    #[test]
    fn constant_input_fails() {
        assert!(longest_run_test(&vec![true; 1_000_000]).unwrap() < 1e-20);
        assert!(longest_run_test(&vec![false; 1_000_000]).unwrap() < 1e-20);
    }
}
