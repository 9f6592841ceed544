use super::{check_len, erfc, igamc};
use crate::error::{Error, Result};

/// Monobit test: is the proportion of ones close to 1/2?
pub fn frequency_test(bits: &[bool]) -> Result<f64> {
    check_len("frequency", bits, 100)?;
    Ok(frequency_p(bits))
}

pub(super) fn frequency_p(bits: &[bool]) -> f64 {
    let ones = bits.iter().filter(|&&b| b).count() as i64;
    let s = 2 * ones - bits.len() as i64;
    erfc(s.unsigned_abs() as f64 / (2.0 * bits.len() as f64).sqrt())
}

/// Proportion of ones within non-overlapping blocks of `block_len` bits.
pub fn block_frequency_test(bits: &[bool], block_len: usize) -> Result<f64> {
    check_len("block frequency", bits, 100)?;
    if block_len == 0 || block_len > bits.len() {
        return Err(Error::domain(format!(
            "block length {block_len} invalid for {} bits",
            bits.len()
        )));
    }
    Ok(block_frequency_p(bits, block_len))
}

pub(super) fn block_frequency_p(bits: &[bool], block_len: usize) -> f64 {
    let blocks = bits.len() / block_len;
    // 4M * sum (pi - 1/2)^2 == sum (2 ones - M)^2 / M, kept in integers
    let sum_sq: u64 = bits
        .chunks_exact(block_len)
        .map(|c| {
            let ones = c.iter().filter(|&&b| b).count() as i64;
            (2 * ones - block_len as i64).pow(2) as u64
        })
        .sum();
    let chi2 = sum_sq as f64 / block_len as f64;
    igamc(blocks as f64 / 2.0, chi2 / 2.0)
}
