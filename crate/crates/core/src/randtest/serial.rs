use super::special::igamc;
use super::{BitSequence, Computed, StsError};

/// Counts of every overlapping `m`-bit pattern, wrapping around the end.
fn pattern_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; 1 << m];
    if m == 0 {
        counts[0] = bits.len() as u64;
        return counts;
    }
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut w = 0usize;
    for i in 0..m - 1 {
        w = (w << 1) | usize::from(bits[i % n]);
    }
    for i in 0..n {
        w = ((w << 1) | usize::from(bits[(i + m - 1) % n])) & mask;
        counts[w] += 1;
    }
    counts
}

fn psi_sq(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = pattern_counts(bits, m).iter().map(|&c| (c as f64) * (c as f64)).sum();
    2f64.powi(m as i32) / n * sum - n
}

/// Serial test. Statistics: `[psi2_m, del1, del2]`.
pub fn serial(seq: &BitSequence, m: usize) -> Result<Computed, StsError> {
    if m < 2 || m >= seq.len() || m > 24 {
        return Err(StsError::InvalidConfig(format!(
            "serial m={m} unsupported for n={}",
            seq.len()
        )));
    }
    let bits = seq.bits();
    let (p0, p1, p2) = (psi_sq(bits, m), psi_sq(bits, m - 1), psi_sq(bits, m - 2));
    let del1 = p0 - p1;
    let del2 = p0 - 2.0 * p1 + p2;
    let a1 = 2f64.powi(m as i32 - 2);
    let a2 = 2f64.powi(m as i32 - 3);
    let pv1 = igamc(a1, del1.max(0.0) / 2.0)?;
    let pv2 = igamc(a2, del2.max(0.0) / 2.0)?;
    Ok(Computed::new(vec![pv1, pv2], vec![p0, del1, del2]))
}

fn phi(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    pattern_counts(bits, m)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

/// Approximate entropy test. Statistics: `[ApEn, chi2]`.
pub fn approximate_entropy(seq: &BitSequence, m: usize) -> Result<Computed, StsError> {
    if m == 0 || m + 1 >= seq.len() || m > 24 {
        return Err(StsError::InvalidConfig(format!(
            "approximate entropy m={m} unsupported for n={}",
            seq.len()
        )));
    }
    let bits = seq.bits();
    let n = bits.len() as f64;
    let apen = phi(bits, m) - phi(bits, m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - apen);
    let p = igamc(2f64.powi(m as i32 - 1), chi2.max(0.0) / 2.0)?;
    Ok(Computed::new(vec![p], vec![apen, chi2]))
}
