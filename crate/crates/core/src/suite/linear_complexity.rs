use super::{check_len, igamc};
use crate::error::{Error, Result};

/// Fixed-width GF(2) polynomial, bit `i` is the coefficient of `x^i`.
#[derive(Clone)]
struct Poly(Vec<u64>);

impl Poly {
    fn one(words: usize) -> Self {
        let mut w = vec![0u64; words];
        w[0] = 1;
        Poly(w)
    }

    /// `self ^= other * x^shift`, truncated to the fixed width.
    fn xor_shifted(&mut self, other: &Poly, shift: usize) {
        let (ws, bs) = (shift / 64, shift % 64);
        let n = self.0.len();
        for i in (ws..n).rev() {
            let src = i - ws;
            let mut v = other.0[src] << bs;
            if bs > 0 && src > 0 {
                v |= other.0[src - 1] >> (64 - bs);
            }
            self.0[i] ^= v;
        }
    }

    /// Shift left by one and set bit 0.
    fn push_front(&mut self, bit: bool) {
        let mut carry = bit as u64;
        for w in self.0.iter_mut() {
            let next = *w >> 63;
            *w = *w << 1 | carry;
            carry = next;
        }
    }

    fn dot_parity(&self, other: &Poly) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
            & 1
            == 1
    }
}

/// Length of the shortest LFSR generating `bits` (Berlekamp-Massey over GF(2)).
pub fn linear_complexity(bits: &[bool]) -> usize {
    let words = bits.len() / 64 + 2;
    let mut c = Poly::one(words);
    let mut b = Poly::one(words);
    // bit i of history is s[n - i]
    let mut history = Poly(vec![0u64; words]);
    let mut l = 0usize;
    let mut m: isize = -1;
    for (n, &s) in bits.iter().enumerate() {
        history.push_front(s);
        if c.dot_parity(&history) {
            let t = c.clone();
            c.xor_shifted(&b, (n as isize - m) as usize);
            if 2 * l <= n {
                l = n + 1 - l;
                m = n as isize;
                b = t;
            }
        }
    }
    l
}

const PROBABILITIES: [f64; 7] = [0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833];

/// Linear complexity of disjoint `block_len`-bit blocks, binned by deviation
/// from its mean. Needs at least 200 blocks.
pub fn linear_complexity_test(bits: &[bool], block_len: usize) -> Result<f64> {
    if block_len < 2 {
        return Err(Error::domain("linear complexity block length must be >= 2"));
    }
    check_len("linear complexity", bits, 200 * block_len)?;
    let m = block_len as f64;
    let sign = if block_len.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mean = m / 2.0 + (9.0 - sign) / 36.0 - (m / 3.0 + 2.0 / 9.0) / 2f64.powf(m);
    let mut counts = [0u64; 7];
    for block in bits.chunks_exact(block_len) {
        let l = linear_complexity(block) as f64;
        let t = sign * (l - mean) + 2.0 / 9.0;
        let class = match t {
            t if t <= -2.5 => 0,
            t if t <= -1.5 => 1,
            t if t <= -0.5 => 2,
            t if t <= 0.5 => 3,
            t if t <= 1.5 => 4,
            t if t <= 2.5 => 5,
            _ => 6,
        };
        counts[class] += 1;
    }
    let blocks = (bits.len() / block_len) as f64;
    let chi2: f64 = counts
        .iter()
        .zip(PROBABILITIES)
        .map(|(&v, p)| (v as f64 - blocks * p).powi(2) / (blocks * p))
        .sum();
    Ok(igamc(3.0, chi2 / 2.0))
}
