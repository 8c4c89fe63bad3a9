use super::{BitSequence, Computed, StsError};

pub const MATRIX_DIM: usize = 32;

/// Rank over GF(2) of a square matrix whose rows are bit masks.
pub fn gf2_rank(rows: &mut [u64], cols: usize) -> usize {
    let mut rank = 0;
    for col in (0..cols).rev() {
        let bit = 1u64 << col;
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let p = rows[rank];
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && *row & bit != 0 {
                *row ^= p;
            }
        }
        rank += 1;
    }
    rank
}

/// Probability that a random `m x q` binary matrix has rank `r`.
pub fn rank_probability(r: usize, m: usize, q: usize) -> f64 {
    let exponent = (r * (q + m - r)) as f64 - (m * q) as f64;
    let mut prod = 1.0;
    for i in 0..r {
        let i = i as f64;
        prod *= (1.0 - 2f64.powf(i - q as f64)) * (1.0 - 2f64.powf(i - m as f64))
            / (1.0 - 2f64.powf(i - r as f64));
    }
    2f64.powf(exponent) * prod
}

/// Binary matrix rank test on 32x32 matrices.
/// Statistics: `[chi2, full, full-1, rest]`.
pub fn rank(seq: &BitSequence) -> Result<Computed, StsError> {
    let (m, q) = (MATRIX_DIM, MATRIX_DIM);
    let count = seq.len() / (m * q);
    if count == 0 {
        return Err(StsError::SequenceTooShort {
            test: "rank".into(),
            n: seq.len(),
            required: m * q,
        });
    }
    let mut tally = [0.0f64; 3];
    for block in seq.bits().chunks_exact(m * q) {
        let mut rows: Vec<u64> = block
            .chunks_exact(q)
            .map(|row| row.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
            .collect();
        let r = gf2_rank(&mut rows, q);
        let slot = if r == m { 0 } else if r == m - 1 { 1 } else { 2 };
        tally[slot] += 1.0;
    }
    let p_full = rank_probability(m, m, q);
    let p_minus = rank_probability(m - 1, m, q);
    let probs = [p_full, p_minus, 1.0 - p_full - p_minus];
    let n = count as f64;
    let chi2: f64 = tally
        .iter()
        .zip(probs)
        .map(|(&obs, p)| (obs - n * p).powi(2) / (n * p))
        .sum();
    let p = (-chi2 / 2.0).exp();
    Ok(Computed::new(vec![p], vec![chi2, tally[0], tally[1], tally[2]]))
}
