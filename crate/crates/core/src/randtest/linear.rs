use super::special::igamc;
use super::{chi_square, BitSequence, Computed, StsError};

const PROBS: [f64; 7] = [1.0 / 96.0, 1.0 / 32.0, 1.0 / 8.0, 1.0 / 2.0, 1.0 / 4.0, 1.0 / 16.0, 1.0 / 48.0];

/// Linear complexity of a bit block (Berlekamp-Massey over GF(2)).
pub fn berlekamp_massey(s: &[u8]) -> usize {
    let n = s.len();
    let mut c = vec![0u8; n + 1];
    let mut b = vec![0u8; n + 1];
    c[0] = 1;
    b[0] = 1;
    let (mut l, mut m) = (0usize, -1isize);
    for i in 0..n {
        let mut d = s[i];
        for j in 1..=l {
            d ^= c[j] & s[i - j];
        }
        if d == 1 {
            let t = c.clone();
            let shift = (i as isize - m) as usize;
            for j in 0..=n - shift {
                c[j + shift] ^= b[j];
            }
            if 2 * l <= i {
                l = i + 1 - l;
                m = i as isize;
                b = t;
            }
        }
    }
    l
}

/// Linear complexity test over blocks of `m` bits.
/// Statistics: `[chi2, class counts...]`.
pub fn linear_complexity(seq: &BitSequence, m: usize) -> Result<Computed, StsError> {
    if m == 0 {
        return Err(StsError::InvalidConfig("linear complexity block size is 0".into()));
    }
    let blocks = seq.len() / m;
    if blocks == 0 {
        return Err(StsError::SequenceTooShort {
            test: "linear_complexity".into(),
            n: seq.len(),
            required: m,
        });
    }
    let mf = m as f64;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mu = mf / 2.0 + (9.0 - sign) / 36.0 - (mf / 3.0 + 2.0 / 9.0) / 2f64.powf(mf);
    let mut counts = [0.0f64; 7];
    for block in seq.bits().chunks_exact(m) {
        let t = sign * (berlekamp_massey(block) as f64 - mu) + 2.0 / 9.0;
        let class = if t <= -2.5 {
            0
        } else if t <= -1.5 {
            1
        } else if t <= -0.5 {
            2
        } else if t <= 0.5 {
            3
        } else if t <= 1.5 {
            4
        } else if t <= 2.5 {
            5
        } else {
            6
        };
        counts[class] += 1.0;
    }
    let chi2 = chi_square(&counts, &PROBS, blocks as f64);
    let p = igamc(3.0, chi2 / 2.0)?;
    let mut stats = vec![chi2];
    stats.extend(counts);
    Ok(Computed::new(vec![p], stats))
}
