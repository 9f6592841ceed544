use super::check_len;
use crate::error::Result;

const SIZE: usize = 32;
const MIN_MATRICES: usize = 38;

/// Rank of a square GF(2) matrix given as row bitmasks.
pub fn binary_rank(rows: &[u32]) -> usize {
    let mut rows = rows.to_vec();
    let mut rank = 0;
    for bit in (0..32).rev() {
        let mask = 1u32 << bit;
        let Some(pivot) = (rank..rows.len()).find(|&i| rows[i] & mask != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank];
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && *row & mask != 0 {
                *row ^= pivot_row;
            }
        }
        rank += 1;
    }
    rank
}

/// Probability that a random `SIZE x SIZE` GF(2) matrix has rank `r`.
fn rank_probability(r: usize) -> f64 {
    let m = SIZE as i32;
    let r = r as i32;
    let mut product = 1.0;
    for i in 0..r {
        let a = 1.0 - 2f64.powi(i - m);
        product *= a * a / (1.0 - 2f64.powi(i - r));
    }
    2f64.powi(r * (2 * m - r) - m * m) * product
}

/// Ranks of disjoint 32x32 matrices: full rank, rank 31, and below.
pub fn rank_test(bits: &[bool]) -> Result<f64> {
    check_len("binary matrix rank", bits, MIN_MATRICES * SIZE * SIZE)?;
    let matrices = bits.len() / (SIZE * SIZE);
    let mut counts = [0u64; 3];
    for chunk in bits.chunks_exact(SIZE * SIZE) {
        let rows: Vec<u32> = chunk
            .chunks_exact(SIZE)
            .map(|row| row.iter().fold(0u32, |acc, &b| acc << 1 | b as u32))
            .collect();
        match binary_rank(&rows) {
            SIZE => counts[0] += 1,
            r if r == SIZE - 1 => counts[1] += 1,
            _ => counts[2] += 1,
        }
    }
    let p_full = rank_probability(SIZE);
    let p_minus1 = rank_probability(SIZE - 1);
    let probabilities = [p_full, p_minus1, 1.0 - p_full - p_minus1];
    let n = matrices as f64;
    let chi2: f64 = counts
        .iter()
        .zip(probabilities)
        .map(|(&f, p)| (f as f64 - n * p).powi(2) / (n * p))
        .sum();
    Ok((-chi2 / 2.0).exp())
}
