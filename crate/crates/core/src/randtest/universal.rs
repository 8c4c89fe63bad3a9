use super::special::erfc;
use super::{BitSequence, Computed, StsError};

/// Expected value and variance of log2 of the gap between repeats of an
/// L-bit block, for L = 1..=16 (index 0 unused).
const EXPECTED: [f64; 17] = [
    0.0, 0.7326495, 1.5374383, 2.4016068, 3.3112247, 4.2534266, 5.2177052, 6.1962507, 7.1836656,
    8.1764248, 9.1723243, 10.170032, 11.168765, 12.168070, 13.167693, 14.167488, 15.167379,
];
const VARIANCE: [f64; 17] = [
    0.0, 0.690, 1.338, 1.901, 2.358, 2.705, 2.954, 3.125, 3.238, 3.311, 3.356, 3.384, 3.401, 3.410,
    3.416, 3.419, 3.421,
];

/// Maurer's universal test with block length `l` and `q` initialization
/// blocks. Statistics: `[f_n, expected, sigma, K]`.
pub fn universal(seq: &BitSequence, l: usize, q: usize) -> Result<Computed, StsError> {
    if !(1..=16).contains(&l) || q == 0 {
        return Err(StsError::InvalidConfig(format!("universal L={l} Q={q} unsupported")));
    }
    let total = seq.len() / l;
    if total <= q {
        return Err(StsError::SequenceTooShort {
            test: "universal".into(),
            n: seq.len(),
            required: (q + 1) * l,
        });
    }
    let k = total - q;
    let mut last = vec![0usize; 1 << l];
    let mut sum = 0.0;
    for (i, block) in seq.bits().chunks_exact(l).take(total).enumerate() {
        let v = block.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b));
        let idx = i + 1;
        if idx > q {
            sum += ((idx - last[v]) as f64).log2();
        }
        last[v] = idx;
    }
    let fn_ = sum / k as f64;
    let lf = l as f64;
    let kf = k as f64;
    let c = 0.7 - 0.8 / lf + (4.0 + 32.0 / lf) * kf.powf(-3.0 / lf) / 15.0;
    let sigma = c * (VARIANCE[l] / kf).sqrt();
    let p = erfc((fn_ - EXPECTED[l]).abs() / (std::f64::consts::SQRT_2 * sigma));
    Ok(Computed::new(vec![p], vec![fn_, EXPECTED[l], sigma, kf]))
}
