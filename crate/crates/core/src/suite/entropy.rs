use super::{check_len, igamc};
use crate::error::{Error, Result};

/// Occurrence counts of every overlapping `m`-bit pattern, the sequence
/// wrapped around so that there are exactly `n` windows.
fn pattern_counts(bits: &[bool], m: u32) -> Vec<u64> {
    let mut counts = vec![0u64; 1usize << m];
    if m == 0 {
        counts[0] = bits.len() as u64;
        return counts;
    }
    let mask = (1usize << m) - 1;
    let n = bits.len();
    let mut v = 0usize;
    for &b in &bits[..m as usize - 1] {
        v = v << 1 | b as usize;
    }
    for i in 0..n {
        v = (v << 1 | bits[(i + m as usize - 1) % n] as usize) & mask;
        counts[v] += 1;
    }
    counts
}

fn psi_squared(bits: &[bool], m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum_sq: u128 = pattern_counts(bits, m).iter().map(|&c| (c as u128) * (c as u128)).sum();
    (2f64.powi(m as i32) / n) * sum_sq as f64 - n
}

fn check_m(test: &'static str, bits: &[bool], m: u32, min_m: u32) -> Result<()> {
    check_len(test, bits, 100)?;
    if m < min_m || m > 24 || (m as usize) >= bits.len() {
        return Err(Error::domain(format!("{test}: block length {m} out of range")));
    }
    Ok(())
}

/// Serial test; returns the p-values of the first and second differences
/// of the `psi^2` statistics.
pub fn serial_test(bits: &[bool], m: u32) -> Result<(f64, f64)> {
    check_m("serial", bits, m, 2)?;
    Ok(serial_p(bits, m))
}

pub(super) fn serial_p(bits: &[bool], m: u32) -> (f64, f64) {
    let psi_m = psi_squared(bits, m);
    let psi_m1 = psi_squared(bits, m - 1);
    let psi_m2 = psi_squared(bits, m - 2);
    let del1 = psi_m - psi_m1;
    let del2 = psi_m - 2.0 * psi_m1 + psi_m2;
    (
        igamc(2f64.powi(m as i32 - 2), del1 / 2.0),
        igamc(2f64.powi(m as i32 - 3), del2 / 2.0),
    )
}

/// `sum pi ln pi` over pattern frequencies; counts are sorted first so the
/// result does not depend on which pattern is which.
fn phi(bits: &[bool], m: u32) -> f64 {
    let n = bits.len() as f64;
    let mut counts = pattern_counts(bits, m);
    counts.sort_unstable();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

/// Approximate entropy test with overlapping blocks of `m` and `m + 1` bits.
pub fn approximate_entropy_test(bits: &[bool], m: u32) -> Result<f64> {
    check_m("approximate entropy", bits, m, 1)?;
    Ok(approximate_entropy_p(bits, m))
}

pub(super) fn approximate_entropy_p(bits: &[bool], m: u32) -> f64 {
    let n = bits.len() as f64;
    let ap_en = phi(bits, m) - phi(bits, m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - ap_en);
    igamc(2f64.powi(m as i32 - 1), chi2 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::BitStream;

    fn bits(s: &str) -> Vec<bool> {
        s.parse::<BitStream>().unwrap().into_vec()
    }

    #[test]
    fn wrapped_pattern_counts() {
        // 0011011101 with m = 3 (wrapping): 000:0 001:1 010:1 011:2 100:1 101:2 110:2 111:1
        assert_eq!(pattern_counts(&bits("0011011101"), 3), vec![0, 1, 1, 2, 1, 2, 2, 1]);
    }

    #[test]
    fn published_serial_example() {
        let b = bits("0011011101");
        assert!((psi_squared(&b, 3) - 2.8).abs() < 1e-12);
        assert!((psi_squared(&b, 2) - 1.2).abs() < 1e-12);
        assert!((psi_squared(&b, 1) - 0.4).abs() < 1e-12);
        let (p1, p2) = serial_p(&b, 3);
        assert!((p1 - 0.808792).abs() < 1e-6);
        assert!((p2 - 0.670320).abs() < 1e-6);
    }

    #[test]
    fn published_entropy_examples() {
        assert!((approximate_entropy_p(&bits("0100110101"), 3) - 0.261961).abs() < 1e-6);
        let e100 = bits("1100100100001111110110101010001000100001011010001100001000110100110001001100011001100010100010111000");
        assert!((approximate_entropy_test(&e100, 2).unwrap() - 0.235301).abs() < 1e-6);
    }

    #[test]
    fn constant_input_fails() {
        let zeros = vec![false; 1_000_000];
        assert!(approximate_entropy_test(&zeros, 10).unwrap() < 1e-20);
        let (p1, p2) = serial_test(&zeros, 16).unwrap();
        assert!(p1 < 1e-20 && p2 < 1e-20);
    }

    #[test]
    fn guards() {
        assert!(serial_test(&[true; 200], 1).is_err());
        assert!(approximate_entropy_test(&[true; 200], 0).is_err());
        assert!(serial_test(&[true; 50], 3).is_err());
    }
}
