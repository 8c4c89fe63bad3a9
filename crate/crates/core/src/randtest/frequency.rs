use super::special::{erfc, igamc};
use super::{BitSequence, Computed, StsError};

/// Monobit test. Statistics: `[S_n, s_obs]`.
pub fn monobit(seq: &BitSequence) -> Computed {
    let n = seq.len() as f64;
    let s = 2.0 * seq.ones() as f64 - n;
    let s_obs = s.abs() / n.sqrt();
    Computed::new(vec![erfc(s_obs / std::f64::consts::SQRT_2)], vec![s, s_obs])
}

/// Frequency within blocks of `m` bits. Statistics: `[chi2, N]`.
pub fn block_frequency(seq: &BitSequence, m: usize) -> Result<Computed, StsError> {
    let blocks = seq.len() / m.max(1);
    if m == 0 || blocks == 0 {
        return Err(StsError::InvalidConfig(format!(
            "block size {m} does not fit {} bits",
            seq.len()
        )));
    }
    let chi2: f64 = seq
        .bits()
        .chunks_exact(m)
        .map(|block| {
            let pi = block.iter().map(|&b| f64::from(b)).sum::<f64>() / m as f64;
            (pi - 0.5) * (pi - 0.5)
        })
        .sum::<f64>()
        * 4.0
        * m as f64;
    let p = igamc(blocks as f64 / 2.0, chi2 / 2.0)?;
    Ok(Computed::new(vec![p], vec![chi2, blocks as f64]))
}
