use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{check_len, erfc};
use crate::error::Result;

/// Spectral test: fraction of DFT peak heights below the 95% threshold
/// `sqrt(ln(1/0.05) n)` against the expected 0.95.
pub fn dft_test(bits: &[bool]) -> Result<f64> {
    check_len("discrete Fourier transform", bits, 1000)?;
    Ok(dft_p(bits))
}

pub(super) fn dft_p(bits: &[bool]) -> f64 {
    let n = bits.len();
    let mut x: Vec<Complex<f64>> = bits
        .iter()
        .map(|&b| Complex::new(if b { 1.0 } else { -1.0 }, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut x);

    let nf = n as f64;
    let threshold = ((1.0f64 / 0.05).ln() * nf).sqrt();
    let expected = 0.95 * nf / 2.0;
    let below = x[..n / 2].iter().filter(|c| c.norm() < threshold).count() as f64;
    let d = (below - expected) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    erfc(d.abs() / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::BitStream;

    #[test]
    fn ten_bit_example() {
        // |X_k| for k < 5 are 0, 2, 4.47, 2, 4.47, all under T = 5.473, so
        // N1 = 5, d = 0.25 / sqrt(10 * 0.95 * 0.05 / 4)
        let bits = "1001010011".parse::<BitStream>().unwrap();
        assert!((dft_p(&bits) - 0.468_159_909_854_428).abs() < 1e-9);
    }

    #[test]
    fn matches_direct_transform() {
        let bits: Vec<bool> = (0..1000u64).map(|i| (i * i + 3 * i) % 7 < 3).collect();
        let n = bits.len() as f64;
        let t = (20f64.ln() * n).sqrt();
        let below = (0..bits.len() / 2)
            .filter(|&k| {
                let (re, im) = bits.iter().enumerate().fold((0.0, 0.0), |(re, im), (j, &b)| {
                    let x = if b { 1.0 } else { -1.0 };
                    let a = -2.0 * std::f64::consts::PI * (k * j) as f64 / n;
                    (re + x * a.cos(), im + x * a.sin())
                });
                (re * re + im * im).sqrt() < t
            })
            .count() as f64;
        let d = (below - 0.95 * n / 2.0) / (n * 0.95 * 0.05 / 4.0).sqrt();
        let p = erfc(d.abs() / std::f64::consts::SQRT_2);
        assert!((dft_p(&bits) - p).abs() < 1e-12);
    }

    #[test]
    fn periodic_input_fails() {
        let alt: Vec<bool> = (0..10_000).map(|i| i % 2 == 1).collect();
        assert!(dft_test(&alt).unwrap() < 1e-6);
        assert!(dft_test(&vec![true; 10_000]).unwrap() < 1e-6);
    }

    #[test]
    fn guard() {
        assert!(dft_test(&[true; 999]).is_err());
    }
}
