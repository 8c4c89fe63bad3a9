use super::special::{erfc, igamc};
use super::{chi_square, BitSequence, Computed, StsError};

/// Runs test. A sequence failing the frequency prerequisite gets p = 0.
/// Statistics: `[V_obs, pi]`.
pub fn runs(seq: &BitSequence) -> Computed {
    let bits = seq.bits();
    let n = bits.len() as f64;
    let pi = seq.ones() as f64 / n;
    let v_obs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let v = v_obs as f64;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Computed::new(vec![0.0], vec![v, pi]);
    }
    let spread = 2.0 * n * pi * (1.0 - pi);
    let p = erfc((v - spread).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi)));
    Computed::new(vec![p], vec![v, pi])
}

struct LongestRunTable {
    /// Upper edge of the first class and lower edge of the last.
    low: usize,
    high: usize,
    probs: &'static [f64],
}

fn longest_run_table(m: usize) -> Option<LongestRunTable> {
    match m {
        8 => Some(LongestRunTable {
            low: 1,
            high: 4,
            probs: &[0.2148, 0.3672, 0.2305, 0.1875],
        }),
        128 => Some(LongestRunTable {
            low: 4,
            high: 9,
            probs: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
        }),
        10_000 => Some(LongestRunTable {
            low: 10,
            high: 16,
            probs: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        }),
        _ => None,
    }
}

/// Longest run of ones in blocks of `m` bits (m ∈ {8, 128, 10000}).
/// Statistics: `[chi2, class counts...]`.
pub fn longest_run(seq: &BitSequence, m: usize) -> Result<Computed, StsError> {
    let table = longest_run_table(m).ok_or_else(|| {
        StsError::InvalidConfig(format!("longest-run block size must be 8, 128 or 10000, got {m}"))
    })?;
    let blocks = seq.len() / m;
    if blocks == 0 {
        return Err(StsError::SequenceTooShort {
            test: "longest_run".into(),
            n: seq.len(),
            required: m,
        });
    }
    let mut counts = vec![0.0f64; table.probs.len()];
    for block in seq.bits().chunks_exact(m) {
        let (mut run, mut best) = (0usize, 0usize);
        for &b in block {
            run = if b == 1 { run + 1 } else { 0 };
            best = best.max(run);
        }
        let class = best.clamp(table.low, table.high) - table.low;
        counts[class] += 1.0;
    }
    let chi2 = chi_square(&counts, table.probs, blocks as f64);
    let k = (table.probs.len() - 1) as f64;
    let p = igamc(k / 2.0, chi2 / 2.0)?;
    let mut stats = vec![chi2];
    stats.extend(&counts);
    Ok(Computed::new(vec![p], stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randtest::tests_support::{LONGEST_RUN_128, PI100};

    fn bits(s: &str) -> BitSequence {
        BitSequence::from_str01(s).unwrap()
    }

    #[test]
    fn runs_reference() {
        assert!((runs(&bits("1001101011")).p_values[0] - 0.147232255364).abs() < 1e-10);
        assert!((runs(&bits(PI100)).p_values[0] - 0.500797917887).abs() < 1e-10);
    }

    #[test]
    fn runs_extremes() {
        assert_eq!(runs(&BitSequence::from_bits(vec![0; 32768])).p_values[0], 0.0);
        let alt = BitSequence::from_bits((0..32768).map(|i| (i % 2) as u8).collect());
        assert!(runs(&alt).p_values[0] < 1e-100);
    }

    #[test]
    fn longest_run_reference() {
        let c = longest_run(&bits(LONGEST_RUN_128), 8).unwrap();
        assert!((c.p_values[0] - 0.180597976786).abs() < 1e-10);
        assert_eq!(&c.statistic[1..], &[4.0, 9.0, 3.0, 0.0]);
    }

    #[test]
    fn longest_run_rejects_unsupported_block() {
        assert!(longest_run(&bits(PI100), 16).is_err());
        assert!(longest_run(&bits(PI100), 128).is_err());
    }
}
