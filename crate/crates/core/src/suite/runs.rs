use super::{check_len, erfc};
use crate::error::Result;

/// Whether the proportion of ones is close enough to 1/2 for the runs test
/// to be meaningful: `|pi - 1/2| < 2 / sqrt(n)`.
pub fn runs_prerequisite(bits: &[bool]) -> bool {
    let n = bits.len() as f64;
    if bits.is_empty() {
        return false;
    }
    let ones = bits.iter().filter(|&&b| b).count() as f64;
    (ones / n - 0.5).abs() < 2.0 / n.sqrt()
}

/// Total number of runs against the count expected for the observed ones
/// proportion. Returns 0 when the prerequisite fails.
pub fn runs_test(bits: &[bool]) -> Result<f64> {
    check_len("runs", bits, 100)?;
    Ok(runs_p(bits))
}

pub(super) fn runs_p(bits: &[bool]) -> f64 {
    if !runs_prerequisite(bits) {
        return 0.0;
    }
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b).count() as f64;
    // pi (1 - pi), symmetric under complement
    let spread = ones * (n - ones) / (n * n);
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    erfc((v as f64 - 2.0 * n * spread).abs() / (2.0 * (2.0 * n).sqrt() * spread))
}
