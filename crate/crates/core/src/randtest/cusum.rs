use super::special::normal_cdf;
use super::{BitSequence, Computed};

/// p-value for maximal partial-sum excursion `z` of an `n`-step walk.
pub fn cusum_p(n: usize, z: usize) -> f64 {
    let nf = n as f64;
    let zf = z as f64;
    let sq = nf.sqrt();
    let mut sum1 = 0.0;
    let start = ((-nf / zf + 1.0) / 4.0).ceil() as i64;
    let finish = ((nf / zf - 1.0) / 4.0).floor() as i64;
    for k in start..=finish {
        let k = k as f64;
        sum1 += normal_cdf((4.0 * k + 1.0) * zf / sq) - normal_cdf((4.0 * k - 1.0) * zf / sq);
    }
    let mut sum2 = 0.0;
    let start = ((-nf / zf - 3.0) / 4.0).ceil() as i64;
    for k in start..=finish {
        let k = k as f64;
        sum2 += normal_cdf((4.0 * k + 3.0) * zf / sq) - normal_cdf((4.0 * k + 1.0) * zf / sq);
    }
    (1.0 - sum1 + sum2).clamp(0.0, 1.0)
}

fn max_excursion<'a>(bits: impl Iterator<Item = &'a u8>) -> usize {
    let mut s = 0i64;
    let mut z = 0i64;
    for &b in bits {
        s += 2 * i64::from(b) - 1;
        z = z.max(s.abs());
    }
    z as usize
}

/// Cumulative sums test; p-values are `[forward, backward]`.
/// Statistics: `[z_forward, z_backward]`.
pub fn cumulative_sums(seq: &BitSequence) -> Computed {
    let n = seq.len();
    let zf = max_excursion(seq.bits().iter());
    let zb = max_excursion(seq.bits().iter().rev());
    Computed::new(vec![cusum_p(n, zf), cusum_p(n, zb)], vec![zf as f64, zb as f64])
}
