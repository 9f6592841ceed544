use serde::{Deserialize, Serialize};

use super::{check_len, normal_cdf};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Maximal excursion of the +/-1 random walk, from the start (`Forward`) or
/// the end (`Reverse`) of the sequence.
pub fn cumulative_sums_test(bits: &[bool], direction: Direction) -> Result<f64> {
    check_len("cumulative sums", bits, 100)?;
    Ok(cusum_p(bits, direction))
}

pub(super) fn cusum_p(bits: &[bool], direction: Direction) -> f64 {
    let step = |b: &bool| if *b { 1i64 } else { -1 };
    let max_excursion = |it: &mut dyn Iterator<Item = &bool>| {
        it.scan(0i64, |s, b| {
            *s += step(b);
            Some(s.abs())
        })
        .max()
        .unwrap_or(0)
    };
    let z = match direction {
        Direction::Forward => max_excursion(&mut bits.iter()),
        Direction::Reverse => max_excursion(&mut bits.iter().rev()),
    };
    let n = bits.len() as i64;
    if z == 0 {
        return 1.0;
    }
    let sqrt_n = (n as f64).sqrt();
    let zf = z as f64;
    let phi = |k: i64, c: i64| normal_cdf((4 * k + c) as f64 * zf / sqrt_n);

    // integer division truncates toward zero, as in the reference code
    let mut sum1 = 0.0;
    for k in (-n / z + 1) / 4..=(n / z - 1) / 4 {
        sum1 += phi(k, 1) - phi(k, -1);
    }
    let mut sum2 = 0.0;
    for k in (-n / z - 3) / 4..=(n / z - 1) / 4 {
        sum2 += phi(k, 3) - phi(k, 1);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}
