use super::special::igamc;
use super::{chi_square, BitSequence, Computed, StsError};

/// The 148 aperiodic 9-bit templates, ascending, written MSB-first.
pub const APERIODIC_9: [u16; 148] = [
    0x001, 0x003, 0x005, 0x007, 0x009, 0x00b, 0x00d, 0x00f, 0x011, 0x013, 0x015, 0x017, 0x019, 0x01b,
    0x01d, 0x01f, 0x023, 0x025, 0x027, 0x029, 0x02b, 0x02d, 0x02f, 0x033, 0x035, 0x037, 0x039, 0x03b,
    0x03d, 0x03f, 0x043, 0x045, 0x047, 0x04b, 0x04d, 0x04f, 0x053, 0x055, 0x057, 0x05b, 0x05d, 0x05f,
    0x065, 0x067, 0x06b, 0x06d, 0x06f, 0x075, 0x077, 0x07b, 0x07d, 0x07f, 0x083, 0x087, 0x08b, 0x08f,
    0x093, 0x097, 0x09b, 0x09f, 0x0a3, 0x0a7, 0x0ab, 0x0af, 0x0b3, 0x0b7, 0x0bb, 0x0bf, 0x0c7, 0x0cf,
    0x0d7, 0x0df, 0x0ef, 0x0ff, 0x100, 0x110, 0x120, 0x128, 0x130, 0x138, 0x140, 0x144, 0x148, 0x14c,
    0x150, 0x154, 0x158, 0x15c, 0x160, 0x164, 0x168, 0x16c, 0x170, 0x174, 0x178, 0x17c, 0x180, 0x182,
    0x184, 0x188, 0x18a, 0x190, 0x192, 0x194, 0x198, 0x19a, 0x1a0, 0x1a2, 0x1a4, 0x1a8, 0x1aa, 0x1ac,
    0x1b0, 0x1b2, 0x1b4, 0x1b8, 0x1ba, 0x1bc, 0x1c0, 0x1c2, 0x1c4, 0x1c6, 0x1c8, 0x1ca, 0x1cc, 0x1d0,
    0x1d2, 0x1d4, 0x1d6, 0x1d8, 0x1da, 0x1dc, 0x1e0, 0x1e2, 0x1e4, 0x1e6, 0x1e8, 0x1ea, 0x1ec, 0x1ee,
    0x1f0, 0x1f2, 0x1f4, 0x1f6, 0x1f8, 0x1fa, 0x1fc, 0x1fe,
];

/// True when no proper prefix of the `m`-bit word equals its suffix.
fn is_aperiodic(word: u32, m: usize) -> bool {
    (1..m).all(|k| {
        let prefix = word >> (m - k);
        let suffix = word & ((1 << k) - 1);
        prefix != suffix
    })
}

/// Aperiodic templates of length `m`, ascending.
pub fn aperiodic_templates(m: usize) -> Vec<u32> {
    if m == 9 {
        return APERIODIC_9.iter().map(|&t| u32::from(t)).collect();
    }
    (0..1u32 << m).filter(|&w| is_aperiodic(w, m)).collect()
}

/// Non-overlapping template matching with `blocks` blocks, one p-value per
/// template. Statistics: `[chi2 per template...]`.
pub fn non_overlapping(seq: &BitSequence, m: usize, blocks: usize) -> Result<Computed, StsError> {
    if !(2..=16).contains(&m) || blocks == 0 {
        return Err(StsError::InvalidConfig(format!(
            "template length {m} / block count {blocks} unsupported"
        )));
    }
    let block_len = seq.len() / blocks;
    if block_len < m {
        return Err(StsError::SequenceTooShort {
            test: "non_overlapping_template".into(),
            n: seq.len(),
            required: m * blocks,
        });
    }
    let templates = aperiodic_templates(m);
    non_overlapping_with(seq, &templates, m, blocks)
}

/// Same as [`non_overlapping`] with an explicit template list.
pub fn non_overlapping_with(
    seq: &BitSequence,
    templates: &[u32],
    m: usize,
    blocks: usize,
) -> Result<Computed, StsError> {
    let block_len = seq.len() / blocks;
    let bm = block_len as f64;
    let two_m = 2f64.powi(m as i32);
    let mu = (bm - m as f64 + 1.0) / two_m;
    let var = bm * (1.0 / two_m - (2.0 * m as f64 - 1.0) / (two_m * two_m));
    let bits = seq.bits();
    let mask = (1u32 << m) - 1;

    // Rolling m-bit window value at every start position of each block.
    let windows: Vec<Vec<u32>> = bits
        .chunks_exact(block_len)
        .take(blocks)
        .map(|block| {
            let mut w = 0u32;
            let mut out = Vec::with_capacity(block_len + 1 - m);
            for (i, &b) in block.iter().enumerate() {
                w = ((w << 1) | u32::from(b)) & mask;
                if i + 1 >= m {
                    out.push(w);
                }
            }
            out
        })
        .collect();

    let mut p_values = Vec::with_capacity(templates.len());
    let mut stats = Vec::with_capacity(templates.len());
    for &t in templates {
        let mut chi2 = 0.0;
        for win in &windows {
            let mut count = 0usize;
            let mut j = 0;
            while j < win.len() {
                if win[j] == t {
                    count += 1;
                    j += m;
                } else {
                    j += 1;
                }
            }
            chi2 += (count as f64 - mu).powi(2) / var;
        }
        p_values.push(igamc(blocks as f64 / 2.0, chi2 / 2.0)?);
        stats.push(chi2);
    }
    Ok(Computed::new(p_values, stats))
}

/// Exact probabilities that an all-ones template of length `m` occurs
/// 0, 1, .., `classes - 2`, or at least `classes - 1` times (overlapping) in
/// `block_len` fair bits.
pub fn overlapping_probabilities(m: usize, block_len: usize, classes: usize) -> Vec<f64> {
    // state[run][count]: run = trailing ones capped at m - 1.
    let top = classes - 1;
    let mut state = vec![vec![0.0f64; classes]; m];
    state[0][0] = 1.0;
    for _ in 0..block_len {
        let mut next = vec![vec![0.0f64; classes]; m];
        for (run, row) in state.iter().enumerate() {
            for (count, &p) in row.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let half = p * 0.5;
                next[0][count] += half;
                if run + 1 >= m {
                    next[m - 1][(count + 1).min(top)] += half;
                } else {
                    next[run + 1][count] += half;
                }
            }
        }
        state = next;
    }
    (0..classes).map(|c| state.iter().map(|row| row[c]).sum()).collect()
}

/// Overlapping template matching with the all-ones template.
/// Statistics: `[chi2, class counts...]`.
pub fn overlapping(seq: &BitSequence, m: usize, block_len: usize) -> Result<Computed, StsError> {
    const CLASSES: usize = 6;
    if m == 0 || block_len < m {
        return Err(StsError::InvalidConfig(format!(
            "template length {m} does not fit block {block_len}"
        )));
    }
    let blocks = seq.len() / block_len;
    if blocks == 0 {
        return Err(StsError::SequenceTooShort {
            test: "overlapping_template".into(),
            n: seq.len(),
            required: block_len,
        });
    }
    let mut counts = [0.0f64; CLASSES];
    for block in seq.bits().chunks_exact(block_len) {
        let mut run = 0usize;
        let mut hits = 0usize;
        for &b in block {
            run = if b == 1 { run + 1 } else { 0 };
            if run >= m {
                hits += 1;
            }
        }
        counts[hits.min(CLASSES - 1)] += 1.0;
    }
    let probs = overlapping_probabilities(m, block_len, CLASSES);
    let chi2 = chi_square(&counts, &probs, blocks as f64);
    let p = igamc((CLASSES - 1) as f64 / 2.0, chi2 / 2.0)?;
    let mut stats = vec![chi2];
    stats.extend(counts);
    Ok(Computed::new(vec![p], stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn static_table_matches_enumeration() {
        let brute: Vec<u32> = (0..1u32 << 9).filter(|&w| is_aperiodic(w, 9)).collect();
        let table: Vec<u32> = APERIODIC_9.iter().map(|&t| u32::from(t)).collect();
        assert_eq!(table, brute);
    }

    #[test]
    fn aperiodic_counts() {
        let counts: Vec<usize> = (2..=10).map(|m| aperiodic_templates(m).len()).collect();
        assert_eq!(counts, vec![2, 4, 6, 12, 20, 40, 74, 148, 284]);
    }

    #[test]
    fn non_overlapping_reference() {
        let seq = BitSequence::from_str01("10100100101110010110").unwrap();
        let c = non_overlapping_with(&seq, &[0b001], 3, 2).unwrap();
        assert!((c.p_values[0] - 0.344153786865).abs() < 1e-10);
    }

    #[test]
    fn non_overlapping_one_p_per_template() {
        let mut rng = SplitMix64::new(1);
        let mut bytes = vec![0u8; 4096];
        rng.fill_bytes(&mut bytes);
        let c = non_overlapping(&BitSequence::from_bytes(&bytes), 9, 8).unwrap();
        assert_eq!(c.p_values.len(), 148);
    }

    #[test]
    fn overlapping_probabilities_match_corrected_constants() {
        let want = [0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865];
        let got = overlapping_probabilities(9, 1032, 6);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 2e-6, "{got:?}");
        }
        assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_probabilities_match_enumeration() {
        // All 2^12 strings, template 111, classes 0..=2+.
        let (m, len) = (3usize, 12usize);
        let mut counts = [0.0f64; 3];
        for w in 0u32..1 << len {
            let hits = (0..=len - m).filter(|&i| (w >> i) & 0b111 == 0b111).count();
            counts[hits.min(2)] += 1.0;
        }
        let got = overlapping_probabilities(m, len, 3);
        for (g, c) in got.iter().zip(counts) {
            assert!((g - c / 4096.0).abs() < 1e-12);
        }
    }

    #[test]
    fn overlapping_all_ones_fails() {
        let seq = BitSequence::from_bits(vec![1; 32768]);
        let c = overlapping(&seq, 9, 1032).unwrap();
        assert!(c.p_values[0] < 1e-6);
    }
}
